#pragma once

#include "kramers/types.hpp"

namespace kramers {

/// Matrix exponential by scaling-and-squaring with a degree-13 Pade
/// approximant; squaring kicks in above the classic ||A||_1 <= 5.4 threshold.
inline Mat expm(const Mat& A) {
  const int n = static_cast<int>(A.rows());
  const double theta13 = 5.371920351148152;  // ~5.4
  double norm1 = A.cwiseAbs().colwise().sum().maxCoeff();

  int squarings = 0;
  Mat As = A;
  if (norm1 > theta13) {
    squarings = std::max(0, static_cast<int>(
                                std::ceil(std::log2(norm1 / theta13))));
    As = A / std::pow(2.0, squarings);
  }

  static const double b[] = {64764752532480000.0, 32382376266240000.0,
                             7771770303897600.0,  1187353796428800.0,
                             129060195264000.0,   10559470521600.0,
                             670442572800.0,      33522128640.0,
                             1323241920.0,        40840800.0,
                             960960.0,            16380.0,
                             182.0,               1.0};

  const Mat I = Mat::Identity(n, n);
  const Mat A2 = As * As;
  const Mat A4 = A2 * A2;
  const Mat A6 = A2 * A4;
  Mat U = As * (A6 * (b[13] * A6 + b[11] * A4 + b[9] * A2) + b[7] * A6 +
                b[5] * A4 + b[3] * A2 + b[1] * I);
  Mat V = A6 * (b[12] * A6 + b[10] * A4 + b[8] * A2) + b[6] * A6 + b[4] * A4 +
          b[2] * A2 + b[0] * I;
  Mat F = (V - U).partialPivLu().solve(V + U);
  for (int s = 0; s < squarings; ++s) F = F * F;
  return F;
}

}  // namespace kramers
