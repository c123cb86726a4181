#pragma once

#include "permcca/linalg.hpp"

#include <random>

namespace testing_support {

using permcca::Index;
using permcca::Mat;
using permcca::Vec;

inline Mat random_matrix(Index rows, Index cols, std::mt19937_64& rng)
{
  std::normal_distribution<double> normal(0.0, 1.0);
  Mat m(rows, cols);
  for (Index j = 0; j < cols; ++j)
    for (Index i = 0; i < rows; ++i)
      m(i, j) = normal(rng);
  return m;
}

inline Mat ones_column(Index n)
{
  return Mat::Ones(n, 1);
}

// Pearson correlation written out from sums, independent of the library.
inline double pearson(const Vec& a, const Vec& b)
{
  const double n = static_cast<double>(a.size());
  double sa = 0, sb = 0;
  for (Index i = 0; i < a.size(); ++i) {
    sa += a(i);
    sb += b(i);
  }
  const double ma = sa / n, mb = sb / n;
  double sab = 0, saa = 0, sbb = 0;
  for (Index i = 0; i < a.size(); ++i) {
    sab += (a(i) - ma) * (b(i) - mb);
    saa += (a(i) - ma) * (a(i) - ma);
    sbb += (b(i) - mb) * (b(i) - mb);
  }
  return sab / std::sqrt(saa * sbb);
}

inline double rel_frobenius(const Mat& a, const Mat& b)
{
  const double scale = std::max(b.norm(), 1e-300);
  return (a - b).norm() / scale;
}

} // namespace testing_support
