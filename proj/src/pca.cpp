#include "permcca/pca.hpp"

#include "permcca/error.hpp"

#include <algorithm>
#include <string>

namespace permcca {

Mat apply_pca(const Mat& m, Index components)
{
  if (components < 0 || components > std::min(m.rows(), m.cols()))
    throw Error(ErrorCode::TooManyComponents, "cannot keep " + std::to_string(components) +
                                                  " principal components of a " + std::to_string(m.rows()) +
                                                  "x" + std::to_string(m.cols()) + " matrix");
  const SvdResult f = svd(m);
  return f.left.leftCols(components) * f.d.head(components).asDiagonal();
}

} // namespace permcca
