#include "hcmu/curvature_ode.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "hcmu/errors.hpp"
#include "hcmu/rk.hpp"

namespace hcmu {

const char* to_string(Branch b) { return b == Branch::Plus ? "plus" : "minus"; }

const char* to_string(EventKind kind) {
  switch (kind) {
    case EventKind::UmbilicReached: return "UmbilicReached";
    case EventKind::ThetaSaturation: return "ThetaSaturation";
    case EventKind::DenominatorSingular: return "DenominatorSingular";
    case EventKind::BranchSwitch: return "BranchSwitch";
  }
  return "Unknown";
}

namespace {

std::string at_state(double K, double H) {
  std::ostringstream os;
  os.precision(17);
  os << "at K=" << K << ", H=" << H;
  return os.str();
}

}  // namespace

SolverConfig SolverConfig::make(const FootballParams& params, double K0, double H0,
                                double c, WeingartenConstant A, Branch branch) {
  SolverConfig cfg;
  cfg.K0 = K0;
  cfg.H0 = H0;
  cfg.space_form_c = c;
  cfg.A = A;
  cfg.branch = branch;
  cfg.window = CurvatureWindow::from_margin(params);
  cfg.max_step = cfg.window.width() / 100.0;
  return cfg;
}

double rhs_thm1(const FootballParams& params, double c, WeingartenConstant A,
                Branch branch, double K, double H) {
  const double w = H * H - K + c;
  if (!(w > 0.0)) {
    throw Error(ErrorKind::UmbilicReached, "H^2-K+c <= 0 " + at_state(K, H));
  }
  const double p = p_of_K(params, K);
  const double g = p * p * w - A.a * A.a;
  if (g < 0.0) {
    throw Error(ErrorKind::ThetaSaturation, "p^2(H^2-K+c) < A^2 " + at_state(K, H));
  }
  const double den = 2.0 * (p * H + branch_sign(branch) * std::sqrt(g));
  const double value = (p - 2.0 * dp_dK(params, K) * w) / den;
  if (den == 0.0 || !std::isfinite(value)) {
    throw Error(ErrorKind::DenominatorSingular, "vanishing denominator " + at_state(K, H));
  }
  return value;
}

void validate_solver_config(const SolverConfig& cfg, const FootballParams& params) {
  if (!(cfg.rel_tol > 0.0 && cfg.abs_tol > 0.0 && cfg.max_step >= 0.0)) {
    throw Error(ErrorKind::ConfigError, "solver tolerances must be positive");
  }
  const auto& win = cfg.window;
  if (!(win.k_lo > params.k2() && win.k_lo < win.k_hi && win.k_hi < params.k1())) {
    throw Error(ErrorKind::ConfigError, "curvature window must satisfy k2 < k_lo < k_hi < k1");
  }
  if (!win.contains(cfg.K0)) {
    throw Error(ErrorKind::ConfigError, "K0 outside the curvature window");
  }
  if (!std::isfinite(cfg.H0) || !std::isfinite(cfg.A.a) || !std::isfinite(cfg.space_form_c)) {
    throw Error(ErrorKind::ConfigError, "H0, A and c must be finite");
  }
  const auto report =
      admissibility_report(params, cfg.space_form_c, cfg.A, cfg.K0, cfg.H0);
  // Starts within rounding of the umbilic locus count as umbilic.
  const double umbilic_scale = cfg.H0 * cfg.H0 + std::abs(cfg.K0) + std::abs(cfg.space_form_c);
  if (!report.umbilic_free || report.umbilic_margin <= 1e-12 * umbilic_scale) {
    throw Error(ErrorKind::UmbilicReached, "umbilic initial state " + at_state(cfg.K0, cfg.H0));
  }
  if (!report.theta_defined) {
    throw Error(ErrorKind::ThetaSaturation,
                "p^2(H^2-K+c) < A^2 at the initial state " + at_state(cfg.K0, cfg.H0));
  }
  const double p = p_of_K(params, cfg.K0);
  const double den = p * cfg.H0 + branch_sign(cfg.branch) * std::sqrt(report.theta_margin);
  if (den == 0.0) {
    throw Error(ErrorKind::DenominatorSingular,
                "vanishing denominator at the initial state " + at_state(cfg.K0, cfg.H0));
  }
}

HSolution::HSolution(const FootballParams& params, const SolverConfig& config,
                     std::vector<HSample> samples, std::vector<SolveEvent> events)
    : params_(params),
      config_(config),
      samples_(std::move(samples)),
      events_(std::move(events)) {
  if (samples_.size() < 2) {
    throw Error(ErrorKind::EmptyInput, "an H solution needs at least two samples");
  }
  for (std::size_t i = 1; i < samples_.size(); ++i) {
    if (!(samples_[i].K > samples_[i - 1].K)) {
      throw Error(ErrorKind::DomainError, "H samples must be strictly increasing in K");
    }
  }
}

std::size_t HSolution::interval(double K) const {
  if (!covers(K)) {
    std::ostringstream os;
    os.precision(17);
    os << "K=" << K << " outside the solved range [" << K_min() << ", " << K_max() << "]";
    throw Error(ErrorKind::DomainError, os.str());
  }
  auto it = std::upper_bound(samples_.begin(), samples_.end(), K,
                             [](double k, const HSample& s) { return k < s.K; });
  std::size_t i = static_cast<std::size_t>(it - samples_.begin());
  i = std::clamp<std::size_t>(i, 1, samples_.size() - 1);
  return i - 1;
}

double HSolution::H_at(double K) const {
  const std::size_t i = interval(K);
  const HSample& a = samples_[i];
  const HSample& b = samples_[i + 1];
  const double d = b.K - a.K;
  const double t = (K - a.K) / d;
  const double t2 = t * t;
  const double t3 = t2 * t;
  if (std::isfinite(a.d2H_dK2) && std::isfinite(b.d2H_dK2)) {
    const double t4 = t3 * t;
    const double t5 = t4 * t;
    return (1 - 10 * t3 + 15 * t4 - 6 * t5) * a.H + (t - 6 * t3 + 8 * t4 - 3 * t5) * d * a.dH_dK +
           0.5 * (t2 - 3 * t3 + 3 * t4 - t5) * d * d * a.d2H_dK2 +
           (10 * t3 - 15 * t4 + 6 * t5) * b.H + (-4 * t3 + 7 * t4 - 3 * t5) * d * b.dH_dK +
           0.5 * (t3 - 2 * t4 + t5) * d * d * b.d2H_dK2;
  }
  return (2 * t3 - 3 * t2 + 1) * a.H + (t3 - 2 * t2 + t) * d * a.dH_dK +
         (-2 * t3 + 3 * t2) * b.H + (t3 - t2) * d * b.dH_dK;
}

Branch HSolution::branch_at(double K) const { return samples_[interval(K)].branch; }

double HSolution::dH_at(double K) const {
  const std::size_t i = interval(K);
  const double H = H_at(K);
  try {
    return rhs_thm1(params_, config_.space_form_c, config_.A, samples_[i].branch, K, H);
  } catch (const Error&) {
    // Right at a branch switch the radicand can round below zero.
  }
  const HSample& a = samples_[i];
  const HSample& b = samples_[i + 1];
  const double d = b.K - a.K;
  const double t = (K - a.K) / d;
  const double t2 = t * t;
  return ((6 * t2 - 6 * t) * a.H + (-6 * t2 + 6 * t) * b.H) / d +
         (3 * t2 - 4 * t + 1) * a.dH_dK + (3 * t2 - 2 * t) * b.dH_dK;
}

std::vector<HSample> HSolution::sample(std::span<const double> K_grid) const {
  std::vector<HSample> out;
  out.reserve(K_grid.size());
  for (double K : K_grid) {
    out.push_back({K, H_at(K), dH_at(K), branch_at(K)});
  }
  return out;
}

namespace {

using State = Eigen::Vector2d;  // (H, phi); phi is only evolved when A != 0

constexpr double kLocalization = 1e-10;
constexpr long kMaxAttempts = 2'000'000;

// Sign convention of the internal angle: the Plus branch has cos(phi) < 0.
Branch branch_of_angle(double phi) { return std::cos(phi) < 0.0 ? Branch::Plus : Branch::Minus; }

struct Integrand {
  const FootballParams& params;
  double c;
  WeingartenConstant A;
  Branch branch;
  bool angle_form;

  State operator()(double K, const State& y) const {
    const double H = y[0];
    if (!angle_form) return State(rhs_thm1(params, c, A, branch, K, H), 0.0);
    const double w = H * H - K + c;
    if (!(w > 0.0)) {
      throw Error(ErrorKind::UmbilicReached, "H^2-K+c <= 0 " + at_state(K, H));
    }
    const double p = p_of_K(params, K);
    const double root = std::sqrt(w);
    const double den = 2.0 * p * (H - root * std::cos(y[1]));
    const double dH = (p - 2.0 * dp_dK(params, K) * w) / den;
    if (den == 0.0 || !std::isfinite(dH)) {
      throw Error(ErrorKind::DenominatorSingular, "vanishing denominator " + at_state(K, H));
    }
    return State(dH, -dH * std::sin(y[1]) / root);
  }

  // Monitored for sign changes between accepted states.
  double event_value(double K, const State& y) const {
    if (angle_form) return std::cos(y[1]);
    const double H = y[0];
    const double p = p_of_K(params, K);
    const double g = p * p * (H * H - K + c) - A.a * A.a;
    return p * H + branch_sign(branch) * std::sqrt(std::max(g, 0.0));
  }

  EventKind crossing_kind() const {
    return angle_form ? EventKind::ThetaSaturation : EventKind::DenominatorSingular;
  }

  Branch branch_at(const State& y) const { return angle_form ? branch_of_angle(y[1]) : branch; }
};

// d/dK of dH/dK along the solution by a central difference along the
// tangent; the O(delta^2) offsets from the true solution cancel.
double second_derivative(const Integrand& f, double K, const State& y, const State& dy,
                         double delta) {
  try {
    const State a = f(K + delta, y + delta * dy);
    const State b = f(K - delta, y - delta * dy);
    const double v = (a[0] - b[0]) / (2.0 * delta);
    if (std::isfinite(v)) return v;
  } catch (const Error&) {
  }
  return std::numeric_limits<double>::quiet_NaN();
}

bool is_event_error(ErrorKind kind) {
  return kind == ErrorKind::UmbilicReached || kind == ErrorKind::ThetaSaturation ||
         kind == ErrorKind::DenominatorSingular;
}

EventKind event_from_error(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::UmbilicReached: return EventKind::UmbilicReached;
    case ErrorKind::ThetaSaturation: return EventKind::ThetaSaturation;
    default: return EventKind::DenominatorSingular;
  }
}

struct Sweep {
  std::vector<HSample> samples;  // in integration order, starting at K0
  std::vector<SolveEvent> events;
};

Sweep integrate_towards(const Integrand& f, const SolverConfig& cfg, const State& y0,
                        double K_end) {
  const rk::Tolerances tol{cfg.rel_tol, cfg.abs_tol};
  const double dir = K_end >= cfg.K0 ? 1.0 : -1.0;
  const double max_step = cfg.max_step > 0.0 ? cfg.max_step : cfg.window.width() / 100.0;

  const double delta = 1e-5 * cfg.window.width();
  Sweep out;
  auto record = [&](double K, const State& y, const State& dy) {
    out.samples.push_back({K, y[0], dy[0], f.branch_at(y), second_derivative(f, K, y, dy, delta)});
  };
  double K = cfg.K0;
  State y = y0;
  State dydt = f(K, y);
  record(K, y, dydt);
  double event_sign = f.event_value(K, y) < 0.0 ? -1.0 : 1.0;
  double h = dir * 0.1 * max_step;

  for (long attempt = 0; dir * (K_end - K) > 0.0; ++attempt) {
    if (attempt > kMaxAttempts) {
      throw Error(ErrorKind::ConvergenceFailure, "H integration exceeded its step budget");
    }
    bool last = false;
    if (dir * (h - (K_end - K)) >= 0.0) {
      h = K_end - K;
      last = true;
    }

    rk::Trial<State> trial;
    bool failed = false;
    bool crossed = false;
    EventKind kind = EventKind::DenominatorSingular;
    try {
      trial = rk::dopri5_attempt(f, K, y, dydt, h, tol);
      if (!std::isfinite(trial.error_norm)) failed = true;
    } catch (const Error& e) {
      if (!is_event_error(e.kind())) throw;
      failed = true;
      kind = event_from_error(e.kind());
    }
    if (!failed) {
      const double K_new = last ? K_end : K + h;
      const double s = f.event_value(K_new, trial.y) < 0.0 ? -1.0 : 1.0;
      if (s != event_sign) {
        crossed = true;
        kind = f.crossing_kind();
      }
    }

    if (!failed && !crossed) {
      if (trial.error_norm <= 1.0) {
        K = last ? K_end : K + h;
        y = trial.y;
        dydt = trial.dydt;
        record(K, y, dydt);
      } else if (std::abs(h) <= kLocalization) {
        // Error control cannot make progress: the slope is blowing up.
        out.events.push_back({K, EventKind::DenominatorSingular});
        return out;
      }
      h = dir * std::min(std::abs(rk::next_step(h, trial.error_norm)), max_step);
      continue;
    }

    if (std::abs(h) > kLocalization) {
      h *= 0.5;
      continue;
    }

    // The boundary is bracketed to within the localization width.
    if (crossed && kind == EventKind::ThetaSaturation && cfg.on_event == OnEvent::SwitchBranch) {
      out.events.push_back({K + 0.5 * h, EventKind::BranchSwitch});
      K = last ? K_end : K + h;
      y = trial.y;
      dydt = trial.dydt;
      record(K, y, dydt);
      event_sign = -event_sign;
      h = dir * 0.01 * max_step;
      continue;
    }
    out.events.push_back({K, kind});
    return out;
  }
  return out;
}

}  // namespace

HSolution solve_H(const SolverConfig& cfg_in, const FootballParams& params) {
  SolverConfig cfg = cfg_in;
  if (cfg.max_step == 0.0) cfg.max_step = cfg.window.width() / 100.0;
  validate_solver_config(cfg, params);

  const double c = cfg.space_form_c;
  const bool angle_form = cfg.A.a != 0.0;
  Integrand f{params, c, cfg.A, cfg.branch, angle_form};

  State y0(cfg.H0, 0.0);
  if (angle_form) {
    const double p = p_of_K(params, cfg.K0);
    const double w = cfg.H0 * cfg.H0 - cfg.K0 + c;
    const double sin0 = cfg.A.a / (p * std::sqrt(w));
    const double cos0 = -branch_sign(cfg.branch) * std::sqrt(std::max(0.0, 1.0 - sin0 * sin0));
    y0[1] = std::atan2(sin0, cos0);
  }

  Sweep up = integrate_towards(f, cfg, y0, cfg.window.k_hi);
  Sweep down = integrate_towards(f, cfg, y0, cfg.window.k_lo);

  std::vector<HSample> samples;
  samples.reserve(up.samples.size() + down.samples.size());
  for (auto it = down.samples.rbegin(); it != down.samples.rend(); ++it) samples.push_back(*it);
  samples.insert(samples.end(), up.samples.begin() + 1, up.samples.end());

  std::vector<SolveEvent> events = down.events;
  events.insert(events.end(), up.events.begin(), up.events.end());
  std::sort(events.begin(), events.end(),
            [](const SolveEvent& a, const SolveEvent& b) { return a.K < b.K; });

  if (samples.size() < 2) {
    throw Error(ErrorKind::DenominatorSingular,
                "integration stopped at the initial state " + at_state(cfg.K0, cfg.H0));
  }
  // H is never constant along a solution.
  if (samples.back().K - samples.front().K >= 0.01) {
    auto [lo, hi] = std::minmax_element(samples.begin(), samples.end(),
                                        [](const HSample& a, const HSample& b) { return a.H < b.H; });
    if (!(hi->H - lo->H > 1e-12)) {
      throw Error(ErrorKind::DomainError, "solution has constant mean curvature");
    }
  }
  return HSolution(params, cfg, std::move(samples), std::move(events));
}

double closed_form_delta(const FootballParams& params) {
  const double k1 = params.k1();
  const double k2 = params.k2();
  return (k1 * k1 + k1 * k2 + k2 * k2) / 6.0;
}

double closed_form_poly(double c, const ClosedFormParams& cf, double K) {
  const double K2 = K * K;
  return -0.25 * K2 * K2 + c * K2 * K / 3.0 + cf.delta * K2 - 2.0 * c * cf.delta * K + cf.s;
}

ClosedFormParams make_closed_form(const FootballParams& params, double c, double s,
                                  ClosedFormSign sign, const CurvatureWindow& window) {
  ClosedFormParams cf{s, closed_form_delta(params), sign};
  constexpr int n = 4000;
  for (int i = 0; i <= n; ++i) {
    const double K = window.k_lo + window.width() * i / n;
    if (!(closed_form_poly(c, cf, K) > 0.0)) {
      std::ostringstream os;
      os.precision(17);
      os << "closed-form quartic is not positive at K=" << K << " (s=" << s << ", c=" << c << ")";
      throw Error(ErrorKind::DomainError, os.str());
    }
  }
  return cf;
}

double closed_form_H_A0(const FootballParams& params, double c, const ClosedFormParams& cf,
                        double K) {
  const double p = p_of_K(params, K);
  if (!(p > 0.0)) {
    throw Error(ErrorKind::DomainError, "p(K) must be positive for the closed form");
  }
  const double poly = closed_form_poly(c, cf, K);
  if (!(poly > 0.0)) {
    std::ostringstream os;
    os.precision(17);
    os << "closed-form quartic vanishes or is negative at K=" << K;
    throw Error(ErrorKind::DomainError, os.str());
  }
  const double root = std::sqrt(poly);
  const double bracket = (c - K) * p / root - root;
  const double sign = cf.sign == ClosedFormSign::Upper ? -1.0 : 1.0;
  return sign * bracket / (2.0 * std::sqrt(p));
}

Branch pair_closed_form_branch(const FootballParams& params, double c,
                               const ClosedFormParams& cf, double K) {
  const double h = 1e-5 * (params.k1() - params.k2());
  const double fd =
      (closed_form_H_A0(params, c, cf, K + h) - closed_form_H_A0(params, c, cf, K - h)) / (2 * h);
  const double H = closed_form_H_A0(params, c, cf, K);
  auto residual = [&](Branch b) {
    try {
      return std::abs(rhs_thm1(params, c, WeingartenConstant{0.0}, b, K, H) - fd);
    } catch (const Error&) {
      return std::numeric_limits<double>::infinity();
    }
  };
  return residual(Branch::Plus) <= residual(Branch::Minus) ? Branch::Plus : Branch::Minus;
}

double et_rhs(const FootballParams& params, double eps, ETForm which, double K, double H) {
  if (!(eps >= 0.0)) {
    throw Error(ErrorKind::DomainError, "epsilon must be non-negative");
  }
  const double p = p_of_K(params, K);
  const double w = H * H - K;
  const double radicand = 4.0 * p * p * w - eps;
  if (!(radicand > 0.0)) {
    throw Error(ErrorKind::DomainError, "4p^2(H^2-K) - epsilon <= 0 " + at_state(K, H));
  }
  const double num = 2.0 * dp_dK(params, K) * w - p;
  const double root = std::sqrt(radicand);
  if (which == ETForm::ET1) return num / (root - 2.0 * p * H);
  return -num / (root + 2.0 * p * H);
}

AdmissibilityReport admissibility_report(const FootballParams& params, double c,
                                         WeingartenConstant A, double K, double H) {
  AdmissibilityReport r{};
  const double p = p_of_K(params, K);
  r.umbilic_margin = H * H - K + c;
  r.umbilic_free = r.umbilic_margin > 0.0;
  r.theta_margin = p * p * r.umbilic_margin - A.a * A.a;
  r.theta_defined = r.umbilic_free && r.theta_margin >= 0.0;
  if (r.theta_defined) {
    const double root = std::sqrt(r.theta_margin);
    r.denominator_margin =
        std::min(std::abs(2.0 * (p * H + root)), std::abs(2.0 * (p * H - root)));
    r.denominator_ok = r.denominator_margin > 0.0;
  } else {
    r.denominator_margin = 0.0;
    r.denominator_ok = false;
  }
  return r;
}

}  // namespace hcmu
