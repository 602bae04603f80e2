#pragma once

#include <variant>

namespace hcmu {

enum class SingularityKind { Conical, Cusp };

/// Curvature extrema (K1, K2) of an HCMU football metric. Only constructible
/// through `validate_params`, so the singularity kind always agrees with the
/// stored extrema.
class FootballParams {
 public:
  double k1() const noexcept { return k1_; }
  double k2() const noexcept { return k2_; }
  SingularityKind kind() const noexcept { return kind_; }

  /// The third root -(K1+K2) of the curvature cubic.
  double k3() const noexcept { return -(k1_ + k2_); }

  friend FootballParams validate_params(double k1, double k2);

 private:
  FootballParams(double k1, double k2, SingularityKind kind)
      : k1_(k1), k2_(k2), kind_(kind) {}

  double k1_;
  double k2_;
  SingularityKind kind_;
};

/// Absolute tolerance within which K2 = -K1/2 is classified as a cusp.
inline constexpr double kCuspTolerance = 1e-12;

/// Checks K1 > 0 and either K1 > K2 > -(K1+K2) (conical) or K2 = -K1/2
/// (cusp, snapped exactly). Throws RejectedParams otherwise.
FootballParams validate_params(double k1, double k2);

/// p(K) = -(1/3)(K-K1)(K-K2)(K+K1+K2). Defined for every finite K.
double p_of_K(const FootballParams& params, double K);
double dp_dK(const FootballParams& params, double K);
double d2p_dK2(const FootballParams& params, double K);

/// e^u = 4 p(K); throws DegenerateMetric unless K2 < K < K1.
double conformal_factor(const FootballParams& params, double K);

/// Closed sub-interval of (K2, K1) the numerics are allowed to visit.
struct CurvatureWindow {
  double k_lo;
  double k_hi;
  double margin;

  static constexpr double kDefaultMargin = 1e-3;

  /// k_lo = K2 + margin (K1-K2), k_hi = K1 - margin (K1-K2).
  static CurvatureWindow from_margin(const FootballParams& params,
                                     double margin = kDefaultMargin);

  bool contains(double K) const noexcept { return K >= k_lo && K <= k_hi; }
  double width() const noexcept { return k_hi - k_lo; }
};

struct ConicalExponents {
  double sigma;
  double beta;
  double gamma;
};

/// Exponents of the logarithmic antiderivative of 1/p. Throws DomainError
/// for cusp parameters, where 2K2 + K1 = 0.
ConicalExponents conical_exponents(const FootballParams& params);

/// Integration-constant convention for x(K).
struct KAtZero {
  double K;
};
struct RawC1 {
  double c1;
};
using Normalization = std::variant<KAtZero, RawC1>;

struct KSolve {
  double K;
  /// True when x lay outside x(window) and K was clamped to a window edge.
  bool near_extremum;
  int iterations;
};

/// The bijection between the conformal coordinate x and the curvature K,
/// dK/dx = 2p(K).
class XOfKMap {
 public:
  static constexpr int kMaxIterations = 200;

  explicit XOfKMap(const FootballParams& params);
  XOfKMap(const FootballParams& params, const CurvatureWindow& window,
          Normalization normalization);

  const FootballParams& params() const noexcept { return params_; }
  const CurvatureWindow& window() const noexcept { return window_; }
  double c1() const noexcept { return c1_; }

  /// Throws DegenerateMetric outside (K2, K1).
  double x_of_K(double K) const;

  /// Inverse of x_of_K restricted to the window. Throws ConvergenceFailure
  /// if the safeguarded Newton iteration does not settle.
  KSolve solve_K(double x) const;
  double K_of_x(double x) const { return solve_K(x).K; }

  /// Antiderivative of 1/(2p) without the integration constant.
  double antiderivative(double K) const;

 private:
  FootballParams params_;
  CurvatureWindow window_;
  double c1_ = 0.0;
  double x_lo_ = 0.0;
  double x_hi_ = 0.0;
};

}  // namespace hcmu
