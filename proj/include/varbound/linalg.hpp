#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

namespace varbound {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using Observation = Eigen::VectorXd;

inline Vector to_vector(const std::vector<double>& v) {
  return Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
}

inline std::vector<double> to_std(const Vector& v) { return {v.data(), v.data() + v.size()}; }

inline Vector scalar_vector(double x) { return Vector::Constant(1, x); }

}  // namespace varbound
