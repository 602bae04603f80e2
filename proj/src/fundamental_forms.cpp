#include "hcmu/fundamental_forms.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "hcmu/errors.hpp"

namespace hcmu {

const char* to_string(ThetaPairing pairing) {
  return pairing == ThetaPairing::PlusNegativeCos ? "plus-negative-cos" : "plus-positive-cos";
}

ThetaState theta_of_state(const FootballParams& params, double c, WeingartenConstant A,
                          double K, double H, Branch branch, ThetaPairing pairing) {
  const double w = H * H - K + c;
  if (!(w > 0.0)) {
    std::ostringstream os;
    os.precision(17);
    os << "H^2-K+c <= 0 at K=" << K << ", H=" << H;
    throw Error(ErrorKind::UmbilicReached, os.str());
  }
  const double p = p_of_K(params, K);
  const double g = p * p * w - A.a * A.a;
  if (g < 0.0) {
    std::ostringstream os;
    os.precision(17);
    os << "|A| > p sqrt(H^2-K+c) at K=" << K << ", H=" << H;
    throw Error(ErrorKind::ThetaSaturation, os.str());
  }
  double sign = branch == Branch::Plus ? -1.0 : 1.0;
  if (pairing == ThetaPairing::PlusPositiveCos) sign = -sign;

  ThetaState t{};
  if (A.a == 0.0) {
    t.sin_theta = 0.0;
    t.cos_theta = sign;
    t.theta = sign > 0.0 ? 0.0 : std::numbers::pi;
    return t;
  }
  const double scale = p * std::sqrt(w);
  t.sin_theta = A.a / scale;
  t.cos_theta = sign * std::sqrt(g) / scale;
  t.theta = std::atan2(t.sin_theta, t.cos_theta);
  return t;
}

SecondForm second_form_from_hopf(double e_u, double H, double K, double c, double sin_theta,
                                 double cos_theta) {
  const double root = std::sqrt(H * H - K + c);
  return {e_u * H + e_u * root * cos_theta, -e_u * root * sin_theta,
          e_u * H - e_u * root * cos_theta};
}

FormsEvaluator::FormsEvaluator(const HSolution& sol, const XOfKMap& map, ThetaPairing pairing,
                               std::function<double(double)> H_scale)
    : sol_(&sol), map_(&map), pairing_(pairing), H_scale_(std::move(H_scale)) {}

FormsSample FormsEvaluator::at(double x) const {
  const auto& params = sol_->params();
  const double c = this->c();
  const WeingartenConstant A = sol_->config().A;
  try {
    const KSolve ks = map_->solve_K(x);
    if (ks.near_extremum) {
      throw Error(ErrorKind::DomainError, "x maps outside the curvature window");
    }
    FormsSample s{};
    s.x = x;
    s.K = ks.K;
    s.H = sol_->H_at(s.K);
    if (H_scale_) s.H *= H_scale_(x);
    const ThetaState th = theta_of_state(params, c, A, s.K, s.H, sol_->branch_at(s.K), pairing_);
    s.theta = th.theta;
    s.sin_theta = th.sin_theta;
    s.cos_theta = th.cos_theta;
    s.e_u = 4.0 * p_of_K(params, s.K);
    s.u_x = 2.0 * dp_dK(params, s.K);
    const SecondForm II = second_form_from_hopf(s.e_u, s.H, s.K, c, s.sin_theta, s.cos_theta);
    s.h11 = II.h11;
    s.h12 = II.h12;
    s.h22 = II.h22;
    const double root = std::sqrt(s.H * s.H - s.K + c);
    s.kp1 = s.H + root;
    s.kp2 = s.H - root;
    s.Q = 0.25 * std::complex<double>(s.h11 - s.h22, -2.0 * s.h12);
    return s;
  } catch (const Error& e) {
    std::ostringstream os;
    os.precision(17);
    os << "at x=" << x << ": " << e.what();
    throw Error(e.kind(), os.str());
  }
}

FormsGrid build_forms(const FormsEvaluator& eval, std::span<const double> x_grid) {
  FormsGrid grid;
  grid.c = eval.c();
  grid.A = eval.solution().config().A.a;
  grid.pairing = eval.pairing();
  grid.samples.reserve(x_grid.size());
  for (double x : x_grid) grid.samples.push_back(eval.at(x));
  return grid;
}

FormsGrid build_forms(const HSolution& sol, const XOfKMap& map, std::span<const double> x_grid,
                      ThetaPairing pairing) {
  return build_forms(FormsEvaluator(sol, map, pairing), x_grid);
}

double GaussResidual::max_abs() const {
  double m = 0.0;
  for (double v : hopf) m = std::max(m, std::abs(v));
  for (double v : determinant) m = std::max(m, std::abs(v));
  return m;
}

GaussResidual gauss_residual(const FormsGrid& grid, double c) {
  GaussResidual r;
  r.hopf.reserve(grid.samples.size());
  r.determinant.reserve(grid.samples.size());
  for (const auto& s : grid.samples) {
    const double e2u = s.e_u * s.e_u;
    r.hopf.push_back(4.0 * std::norm(s.Q) - e2u * (s.H * s.H - s.K + c));
    r.determinant.push_back(s.h11 * s.h22 - s.h12 * s.h12 - e2u * (s.K - c));
  }
  return r;
}

double CodazziResidual::max_abs() const {
  double m = 0.0;
  for (double v : r1) m = std::max(m, std::abs(v));
  for (double v : r2) m = std::max(m, std::abs(v));
  return m;
}

namespace {

// Second-order derivative estimate on a uniform grid.
std::vector<double> differentiate(const std::vector<double>& f, double h) {
  const std::size_t n = f.size();
  std::vector<double> d(n);
  d[0] = (-3.0 * f[0] + 4.0 * f[1] - f[2]) / (2.0 * h);
  d[n - 1] = (3.0 * f[n - 1] - 4.0 * f[n - 2] + f[n - 3]) / (2.0 * h);
  for (std::size_t i = 1; i + 1 < n; ++i) d[i] = (f[i + 1] - f[i - 1]) / (2.0 * h);
  return d;
}

}  // namespace

CodazziResidual codazzi_residual(const FormsGrid& grid) {
  const auto& s = grid.samples;
  const std::size_t n = s.size();
  if (n < 3) {
    throw Error(ErrorKind::StencilOutOfRange, "Codazzi residual needs at least three samples");
  }
  const double h = (s.back().x - s.front().x) / static_cast<double>(n - 1);
  for (std::size_t i = 1; i < n; ++i) {
    if (std::abs((s[i].x - s[i - 1].x) - h) > 1e-9 * std::abs(h)) {
      throw Error(ErrorKind::DomainError, "Codazzi residual requires a uniform x grid");
    }
  }
  std::vector<double> H(n), theta(n), log_g(n), root(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double w = s[i].H * s[i].H - s[i].K + grid.c;
    root[i] = std::sqrt(w);
    H[i] = s[i].H;
    log_g[i] = std::log(s[i].e_u * root[i]);
    theta[i] = s[i].theta;
    if (i > 0) {
      // Unwrap so differences never jump by 2 pi.
      while (theta[i] - theta[i - 1] > std::numbers::pi) theta[i] -= 2.0 * std::numbers::pi;
      while (theta[i] - theta[i - 1] < -std::numbers::pi) theta[i] += 2.0 * std::numbers::pi;
    }
  }
  const auto H_x = differentiate(H, h);
  const auto theta_x = differentiate(theta, h);
  const auto log_g_x = differentiate(log_g, h);

  CodazziResidual r;
  r.r1.resize(n);
  r.r2.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    r.r1[i] = H_x[i] * s[i].sin_theta + root[i] * theta_x[i];
    r.r2[i] = H_x[i] * s[i].cos_theta - log_g_x[i] * root[i];
  }
  return r;
}

ThetaPairing select_theta_pairing(const HSolution& sol, const XOfKMap& map,
                                  std::span<const double> probe_x) {
  auto score = [&](ThetaPairing pairing) {
    return codazzi_residual(build_forms(sol, map, probe_x, pairing)).max_abs();
  };
  return score(ThetaPairing::PlusNegativeCos) <= score(ThetaPairing::PlusPositiveCos)
             ? ThetaPairing::PlusNegativeCos
             : ThetaPairing::PlusPositiveCos;
}

void FormDataGrid::resize(std::size_t nx, std::size_t ny) {
  x.resize(nx);
  y.resize(ny);
  for (auto* v : {&K, &e_u, &h11, &h12, &h22}) v->assign(nx * ny, 0.0);
}

FormDataGrid extrude(const FormsGrid& grid, std::span<const double> y) {
  FormDataGrid out;
  out.c = grid.c;
  out.resize(grid.samples.size(), y.size());
  std::copy(y.begin(), y.end(), out.y.begin());
  for (std::size_t i = 0; i < grid.samples.size(); ++i) {
    const auto& s = grid.samples[i];
    out.x[i] = s.x;
    for (std::size_t j = 0; j < y.size(); ++j) {
      const std::size_t k = out.index(i, j);
      out.K[k] = s.K;
      out.e_u[k] = s.e_u;
      out.h11[k] = s.h11;
      out.h12[k] = s.h12;
      out.h22[k] = s.h22;
    }
  }
  return out;
}

namespace {

// Largest spread along y over all x rows.
template <class F>
double max_row_spread(const FormDataGrid& g, F&& value) {
  double worst = 0.0;
  for (std::size_t i = 0; i < g.nx(); ++i) {
    double lo = value(g.index(i, 0));
    double hi = lo;
    for (std::size_t j = 1; j < g.ny(); ++j) {
      const double v = value(g.index(i, j));
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    worst = std::max(worst, hi - lo);
  }
  return worst;
}

}  // namespace

ClassifyResult classify_weingarten(const FormDataGrid& g, const ClassifierTolerances& tol) {
  const std::size_t n = g.nx() * g.ny();
  if (n == 0) throw Error(ErrorKind::EmptyInput, "classifier received an empty grid");
  for (const auto* v : {&g.K, &g.e_u, &g.h11, &g.h12, &g.h22}) {
    if (v->size() != n) throw Error(ErrorKind::FormatError, "form data arrays do not match the grid");
  }

  double e_u_scale = 0.0;
  for (double e : g.e_u) e_u_scale = std::max(e_u_scale, std::abs(e));
  const double e_u_spread = max_row_spread(g, [&](std::size_t k) { return g.e_u[k]; });
  if (e_u_spread > tol.abs + tol.rel * e_u_scale) {
    std::ostringstream os;
    os.precision(6);
    os << "conformal factor varies along y by " << e_u_spread;
    throw Error(ErrorKind::MetricShapeMismatch, os.str());
  }

  ClassifyResult r;
  const auto [lo, hi] = std::minmax_element(g.h12.begin(), g.h12.end());
  r.h12_spread = *hi - *lo;
  std::vector<double> mags(g.h12.size());
  std::transform(g.h12.begin(), g.h12.end(), mags.begin(), [](double v) { return std::abs(v); });
  std::nth_element(mags.begin(), mags.begin() + mags.size() / 2, mags.end());
  const double median = mags[mags.size() / 2];
  r.is_weingarten = r.h12_spread < tol.abs + tol.rel * median;

  auto mean_curvature = [&](std::size_t k) { return (g.h11[k] + g.h22[k]) / (2.0 * g.e_u[k]); };
  double H_scale = 0.0;
  for (std::size_t k = 0; k < n; ++k) H_scale = std::max(H_scale, std::abs(mean_curvature(k)));
  r.H_y_spread = max_row_spread(g, mean_curvature);
  r.H_depends_only_on_x = r.H_y_spread <= tol.abs + tol.rel * H_scale;
  r.h11_y_spread = max_row_spread(g, [&](std::size_t k) { return g.h11[k]; });

  if (r.is_weingarten) {
    bool nonzero = std::all_of(g.h11.begin(), g.h11.end(), [](double v) { return v != 0.0; });
    if (nonzero) {
      auto rebuilt = [&](std::size_t k) {
        const double h22 =
            (g.e_u[k] * g.e_u[k] * (g.K[k] - g.c) + g.h12[k] * g.h12[k]) / g.h11[k];
        return (g.h11[k] + h22) / (2.0 * g.e_u[k]);
      };
      r.reconstruction_y_spread = max_row_spread(g, rebuilt);
      r.reconstruction_certified = r.reconstruction_y_spread <= tol.reconstruction;
    } else {
      r.reconstruction_y_spread = std::numeric_limits<double>::infinity();
    }
  } else {
    r.reconstruction_y_spread = std::numeric_limits<double>::infinity();
  }
  return r;
}

}  // namespace hcmu
