#pragma once

// Matrix exponential by scaling and squaring with diagonal Pade approximants
// of degree 3, 5, 7, 9 or 13 (Higham 2005 selection thresholds).

#include <Eigen/Dense>
#include <array>
#include <cmath>

namespace hcmu {

namespace detail {

template <class M>
void pade_low(const M& A, const double* b, int m, M& U, M& V) {
  const M I = M::Identity(A.rows(), A.cols());
  const M A2 = A * A;
  M power = I;  // A^(2j)
  M u = b[1] * I;
  M v = b[0] * I;
  for (int k = 2; k <= m; k += 2) {
    power = power * A2;
    v += b[k] * power;
    if (k + 1 <= m) u += b[k + 1] * power;
  }
  U = A * u;
  V = v;
}

template <class M>
void pade13(const M& A, M& U, M& V) {
  static constexpr std::array<double, 14> b{
      64764752532480000.0, 32382376266240000.0, 7771770303897600.0, 1187353796428800.0,
      129060195264000.0,   10559470521600.0,    670442572800.0,     33522128640.0,
      1323241920.0,        40840800.0,          960960.0,           16380.0,
      182.0,               1.0};
  const M I = M::Identity(A.rows(), A.cols());
  const M A2 = A * A;
  const M A4 = A2 * A2;
  const M A6 = A4 * A2;
  U = A * (A6 * (b[13] * A6 + b[11] * A4 + b[9] * A2) + b[7] * A6 + b[5] * A4 +
           b[3] * A2 + b[1] * I);
  V = A6 * (b[12] * A6 + b[10] * A4 + b[8] * A2) + b[6] * A6 + b[4] * A4 + b[2] * A2 +
      b[0] * I;
}

}  // namespace detail

template <class Derived>
typename Derived::PlainObject expm(const Eigen::MatrixBase<Derived>& A_in) {
  using M = typename Derived::PlainObject;
  static constexpr double b3[] = {120.0, 60.0, 12.0, 1.0};
  static constexpr double b5[] = {30240.0, 15120.0, 3360.0, 420.0, 30.0, 1.0};
  static constexpr double b7[] = {17297280.0, 8648640.0, 1995840.0, 277200.0,
                                  25200.0,    1512.0,    56.0,      1.0};
  static constexpr double b9[] = {17643225600.0, 8821612800.0, 2075673600.0, 302702400.0,
                                  30270240.0,    2162160.0,    110880.0,     3960.0,
                                  90.0,          1.0};
  static constexpr double theta3 = 1.495585217958292e-2;
  static constexpr double theta5 = 2.539398330063230e-1;
  static constexpr double theta7 = 9.504178996162932e-1;
  static constexpr double theta9 = 2.097847961257068e0;
  static constexpr double theta13 = 5.371920351148152e0;

  M A = A_in;
  // Induced 1-norm: maximum absolute column sum.
  const double norm = A.cwiseAbs().colwise().sum().maxCoeff();
  M U, V;
  int squarings = 0;
  if (norm <= theta3) {
    detail::pade_low(A, b3, 3, U, V);
  } else if (norm <= theta5) {
    detail::pade_low(A, b5, 5, U, V);
  } else if (norm <= theta7) {
    detail::pade_low(A, b7, 7, U, V);
  } else if (norm <= theta9) {
    detail::pade_low(A, b9, 9, U, V);
  } else {
    squarings = std::max(0, static_cast<int>(std::ceil(std::log2(norm / theta13))));
    A /= std::ldexp(1.0, squarings);
    detail::pade13(A, U, V);
  }
  M R = (V - U).partialPivLu().solve(V + U);
  for (int i = 0; i < squarings; ++i) R = R * R;
  return R;
}

}  // namespace hcmu
