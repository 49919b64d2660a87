#pragma once

#include "mdforms/mesh.hpp"

namespace mdforms {

/// Exact rank of an integer sparse matrix over the rationals, computed by
/// fraction-free elimination in arbitrary-precision arithmetic. Intended for
/// incidence-type matrices at fixture scale.
int integer_rank(const SpMatI& m);

}  // namespace mdforms
