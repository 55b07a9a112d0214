#pragma once

#include "varbound/barankin.hpp"
#include "varbound/bound_request.hpp"
#include "varbound/bounds.hpp"
#include "varbound/csv.hpp"
#include "varbound/error.hpp"
#include "varbound/extended_real.hpp"
#include "varbound/families.hpp"
#include "varbound/finite_difference.hpp"
#include "varbound/gram.hpp"
#include "varbound/harness.hpp"
#include "varbound/kernel.hpp"
#include "varbound/linalg.hpp"
#include "varbound/mean_function.hpp"
#include "varbound/model.hpp"
#include "varbound/moments.hpp"
#include "varbound/multi_index.hpp"
