#include "hcmu/hcmu_core.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "hcmu/errors.hpp"

namespace hcmu {

namespace {

std::string describe(double k1, double k2) {
  std::ostringstream os;
  os.precision(17);
  os << "(k1=" << k1 << ", k2=" << k2 << ")";
  return os.str();
}

}  // namespace

FootballParams validate_params(double k1, double k2) {
  if (!std::isfinite(k1) || !std::isfinite(k2)) {
    throw Error(ErrorKind::RejectedParams, "non-finite extrema " + describe(k1, k2));
  }
  if (k1 <= 0.0) {
    throw Error(ErrorKind::RejectedParams, "k1 must be positive " + describe(k1, k2));
  }
  if (k2 >= k1) {
    throw Error(ErrorKind::RejectedParams, "k2 must be below k1 " + describe(k1, k2));
  }
  if (std::abs(k2 + 0.5 * k1) <= kCuspTolerance) {
    return FootballParams(k1, -0.5 * k1, SingularityKind::Cusp);
  }
  if (k2 <= -(k1 + k2)) {
    throw Error(ErrorKind::RejectedParams,
                "conical extrema need k2 > -(k1+k2) " + describe(k1, k2));
  }
  return FootballParams(k1, k2, SingularityKind::Conical);
}

double p_of_K(const FootballParams& params, double K) {
  return -(K - params.k1()) * (K - params.k2()) * (K - params.k3()) / 3.0;
}

double dp_dK(const FootballParams& params, double K) {
  const double a = K - params.k1();
  const double b = K - params.k2();
  const double c = K - params.k3();
  return -(b * c + a * c + a * b) / 3.0;
}

double d2p_dK2(const FootballParams& params, double K) {
  // The roots sum to zero, so p = -(K^3 + q K + r)/3 and p'' = -2K.
  (void)params;
  return -2.0 * K;
}

double conformal_factor(const FootballParams& params, double K) {
  if (!(K > params.k2() && K < params.k1())) {
    std::ostringstream os;
    os.precision(17);
    os << "K=" << K << " outside the open interval (" << params.k2() << ", "
       << params.k1() << ")";
    throw Error(ErrorKind::DegenerateMetric, os.str());
  }
  return 4.0 * p_of_K(params, K);
}

CurvatureWindow CurvatureWindow::from_margin(const FootballParams& params,
                                             double margin) {
  if (!(margin > 0.0 && margin < 0.5)) {
    throw Error(ErrorKind::ConfigError, "window margin must lie in (0, 0.5)");
  }
  const double span = params.k1() - params.k2();
  return {params.k2() + margin * span, params.k1() - margin * span, margin};
}

ConicalExponents conical_exponents(const FootballParams& params) {
  if (params.kind() != SingularityKind::Conical) {
    throw Error(ErrorKind::DomainError, "exponents are undefined for cusp parameters");
  }
  const double k1 = params.k1();
  const double k2 = params.k2();
  return {-3.0 / ((k1 - k2) * (k2 + 2.0 * k1)),
          -3.0 / ((k2 - k1) * (2.0 * k2 + k1)),
          -3.0 / ((k2 + 2.0 * k1) * (2.0 * k2 + k1))};
}

XOfKMap::XOfKMap(const FootballParams& params)
    : XOfKMap(params, CurvatureWindow::from_margin(params),
              KAtZero{0.5 * (params.k1() + params.k2())}) {}

XOfKMap::XOfKMap(const FootballParams& params, const CurvatureWindow& window,
                 Normalization normalization)
    : params_(params), window_(window) {
  if (!(window.k_lo > params.k2() && window.k_lo < window.k_hi &&
        window.k_hi < params.k1())) {
    throw Error(ErrorKind::ConfigError, "curvature window must satisfy k2 < k_lo < k_hi < k1");
  }
  if (const auto* at = std::get_if<KAtZero>(&normalization)) {
    c1_ = -antiderivative(at->K);
  } else {
    c1_ = std::get<RawC1>(normalization).c1;
  }
  x_lo_ = x_of_K(window_.k_lo);
  x_hi_ = x_of_K(window_.k_hi);
}

double XOfKMap::antiderivative(double K) const {
  const double k1 = params_.k1();
  const double k2 = params_.k2();
  if (!(K > k2 && K < k1)) {
    std::ostringstream os;
    os.precision(17);
    os << "x(K) undefined at K=" << K;
    throw Error(ErrorKind::DegenerateMetric, os.str());
  }
  if (params_.kind() == SingularityKind::Conical) {
    const auto e = conical_exponents(params_);
    return 0.5 * (e.sigma * std::log(k1 - K) + e.beta * std::log(K - k2) +
                  e.gamma * std::log(K + k1 + k2));
  }
  // Cusp: 1/(2p) = (3/2) / ((k1-K)(K-k2)^2); partial fractions in t = K-k2.
  const double d = k1 - k2;
  const double t = K - k2;
  return 1.5 * ((std::log(t) - std::log(k1 - K)) / (d * d) - 1.0 / (d * t));
}

double XOfKMap::x_of_K(double K) const { return antiderivative(K) + c1_; }

KSolve XOfKMap::solve_K(double x) const {
  if (!std::isfinite(x)) {
    throw Error(ErrorKind::DomainError, "x must be finite");
  }
  if (x >= x_hi_) return {window_.k_hi, x > x_hi_, 0};
  if (x <= x_lo_) return {window_.k_lo, x < x_lo_, 0};

  constexpr double eps = std::numeric_limits<double>::epsilon();
  double a = window_.k_lo;
  double b = window_.k_hi;
  // Linear guess in x between the window ends.
  double K = a + (b - a) * (x - x_lo_) / (x_hi_ - x_lo_);
  for (int it = 1; it <= kMaxIterations; ++it) {
    const double f = x_of_K(K) - x;
    if (f == 0.0) return {K, false, it};
    if (f < 0.0) {
      a = K;
    } else {
      b = K;
    }
    double next = K - f * 2.0 * p_of_K(params_, K);
    if (!(next > a && next < b)) next = 0.5 * (a + b);
    if (std::abs(next - K) <= 2.0 * eps * std::abs(K) || b - a <= 2.0 * eps * std::abs(K)) {
      return {next, false, it};
    }
    K = next;
  }
  std::ostringstream os;
  os.precision(17);
  os << "K_of_x did not converge for x=" << x;
  throw Error(ErrorKind::ConvergenceFailure, os.str());
}

}  // namespace hcmu
