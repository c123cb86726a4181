#pragma once

#include "permcca/linalg.hpp"

namespace permcca {

// Scores of the leading `components` principal components of an already
// centred or residualised matrix, ordered by decreasing variance. No further
// centring is applied. Throws TooManyComponents.
Mat apply_pca(const Mat& m, Index components);

} // namespace permcca
