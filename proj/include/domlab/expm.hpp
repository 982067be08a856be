#pragma once

#include "domlab/types.hpp"

namespace domlab {

/// Dense matrix exponential by Pade scaling and squaring (degree chosen from
/// the 1-norm, up to [13/13]).
DenseMatrix expm(const DenseMatrix& a);

}  // namespace domlab
