#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <numeric>
#include <string>
#include <vector>

#include "varbound/error.hpp"

namespace varbound {

// Multi-index p in Z_+^N. Entries are nonnegative; order() is their sum.
class MultiIndex {
 public:
  MultiIndex() = default;
  MultiIndex(std::initializer_list<int> entries) : entries_(entries) { validate(); }
  explicit MultiIndex(std::vector<int> entries) : entries_(std::move(entries)) { validate(); }

  static MultiIndex zero(std::size_t dim) { return MultiIndex(std::vector<int>(dim, 0)); }
  static MultiIndex unit(std::size_t dim, std::size_t axis) {
    std::vector<int> e(dim, 0);
    e.at(axis) = 1;
    return MultiIndex(std::move(e));
  }

  std::size_t size() const noexcept { return entries_.size(); }
  int operator[](std::size_t k) const { return entries_[k]; }
  const std::vector<int>& entries() const noexcept { return entries_; }

  int order() const noexcept { return std::accumulate(entries_.begin(), entries_.end(), 0); }
  bool is_zero() const noexcept { return order() == 0; }

  // Componentwise q <= p.
  bool leq(const MultiIndex& other) const {
    require_same_dim(other);
    for (std::size_t k = 0; k < size(); ++k)
      if (entries_[k] > other.entries_[k]) return false;
    return true;
  }

  friend MultiIndex operator+(const MultiIndex& a, const MultiIndex& b) {
    a.require_same_dim(b);
    std::vector<int> e(a.size());
    for (std::size_t k = 0; k < a.size(); ++k) e[k] = a.entries_[k] + b.entries_[k];
    return MultiIndex(std::move(e));
  }

  // Requires b <= a componentwise.
  friend MultiIndex operator-(const MultiIndex& a, const MultiIndex& b) {
    if (!b.leq(a)) throw DomainError("multi-index difference would be negative");
    std::vector<int> e(a.size());
    for (std::size_t k = 0; k < a.size(); ++k) e[k] = a.entries_[k] - b.entries_[k];
    return MultiIndex(std::move(e));
  }

  friend bool operator==(const MultiIndex&, const MultiIndex&) = default;
  // Lexicographic, first component most significant.
  friend auto operator<=>(const MultiIndex& a, const MultiIndex& b) { return a.entries_ <=> b.entries_; }

  std::string to_string() const {
    std::string s = "(";
    for (std::size_t k = 0; k < size(); ++k) {
      if (k) s += ',';
      s += std::to_string(entries_[k]);
    }
    return s + ")";
  }

 private:
  void validate() const {
    for (int e : entries_)
      if (e < 0) throw DomainError("multi-index entries must be nonnegative");
  }
  void require_same_dim(const MultiIndex& other) const {
    if (other.size() != size()) throw ConfigError("multi-index dimension mismatch");
  }

  std::vector<int> entries_;
};

// All q with q_k <= p_k for every k, in lexicographic order.
inline std::vector<MultiIndex> multi_indices_leq(const MultiIndex& p) {
  const std::size_t n = p.size();
  std::size_t count = 1;
  for (std::size_t k = 0; k < n; ++k) count *= static_cast<std::size_t>(p[k] + 1);

  std::vector<MultiIndex> out;
  out.reserve(count);
  std::vector<int> q(n, 0);
  for (std::size_t i = 0; i < count; ++i) {
    out.emplace_back(q);
    // odometer, last component fastest
    for (std::size_t k = n; k-- > 0;) {
      if (q[k] < p[k]) {
        ++q[k];
        break;
      }
      q[k] = 0;
    }
  }
  return out;
}

inline std::uint64_t binomial(int n, int k) {
  if (k < 0 || k > n) return 0;
  k = std::min(k, n - k);
  std::uint64_t r = 1;
  for (int i = 1; i <= k; ++i) r = r * static_cast<std::uint64_t>(n - k + i) / static_cast<std::uint64_t>(i);
  return r;
}

// prod_k C(p_k, q_k); q must be <= p.
inline std::uint64_t multi_binomial(const MultiIndex& p, const MultiIndex& q) {
  if (!q.leq(p)) throw DomainError("multi_binomial requires q <= p componentwise, got p = " +
                                   p.to_string() + ", q = " + q.to_string());
  std::uint64_t r = 1;
  for (std::size_t k = 0; k < p.size(); ++k) r *= binomial(p[k], q[k]);
  return r;
}

}  // namespace varbound
