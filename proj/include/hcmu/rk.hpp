#pragma once

// Dormand-Prince 5(4) embedded Runge-Kutta pair with FSAL, generic over any
// Eigen column-vector state.

#include <algorithm>
#include <cmath>
#include <limits>

#include "hcmu/errors.hpp"

namespace hcmu::rk {

struct Tolerances {
  double rel = 1e-10;
  double abs = 1e-12;
};

template <class State>
struct Trial {
  State y;     // 5th-order solution at t + h
  State dydt;  // f(t + h, y), reused as the first stage of the next step
  double error_norm = 0.0;  // <= 1 means accepted
};

/// One Dormand-Prince step from (t, y) with slope k1 = f(t, y).
/// Exceptions thrown by f propagate to the caller.
template <class State, class F>
Trial<State> dopri5_attempt(F&& f, double t, const State& y, const State& k1,
                            double h, const Tolerances& tol) {
  constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
  constexpr double a21 = 1.0 / 5;
  constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
  constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
  constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187,
                   a53 = 64448.0 / 6561, a54 = -212.0 / 729;
  constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                   a64 = 49.0 / 176, a65 = -5103.0 / 18656;
  constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192,
                   b5 = -2187.0 / 6784, b6 = 11.0 / 84;
  // b - b_hat
  constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                   e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;

  const State k2 = f(t + c2 * h, State(y + h * (a21 * k1)));
  const State k3 = f(t + c3 * h, State(y + h * (a31 * k1 + a32 * k2)));
  const State k4 = f(t + c4 * h, State(y + h * (a41 * k1 + a42 * k2 + a43 * k3)));
  const State k5 =
      f(t + c5 * h, State(y + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4)));
  const State k6 = f(t + h, State(y + h * (a61 * k1 + a62 * k2 + a63 * k3 +
                                           a64 * k4 + a65 * k5)));
  Trial<State> out;
  out.y = y + h * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
  out.dydt = f(t + h, out.y);
  const State err =
      h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * out.dydt);

  double norm = 0.0;
  for (int i = 0; i < y.size(); ++i) {
    const double scale =
        tol.abs + tol.rel * std::max(std::abs(y[i]), std::abs(out.y[i]));
    norm = std::max(norm, std::abs(err[i]) / scale);
  }
  out.error_norm = std::isfinite(norm) ? norm : std::numeric_limits<double>::infinity();
  if (!out.y.allFinite()) out.error_norm = std::numeric_limits<double>::infinity();
  return out;
}

/// Standard step-size update for an order-5 pair.
inline double next_step(double h, double error_norm) {
  if (error_norm == 0.0) return 5.0 * h;
  const double factor = 0.9 * std::pow(error_norm, -0.2);
  return h * std::clamp(factor, 0.2, 5.0);
}

/// Integrate dy/dt = f(t, y) from t to t_end (either direction), overwriting
/// y and returning the step size to use next. `h` is the suggested first
/// step; `max_step` bounds |h|. Throws ConvergenceFailure on step underflow.
template <class State, class F>
double advance(F&& f, double& t, State& y, double t_end, double h,
               double max_step, const Tolerances& tol) {
  const double dir = t_end >= t ? 1.0 : -1.0;
  h = dir * std::min(std::abs(h), max_step);
  State dydt = f(t, y);
  while (dir * (t_end - t) > 0.0) {
    const double remaining = t_end - t;
    bool last = false;
    // Absorb a remainder within rounding of the step instead of leaving a sliver.
    if (dir * (h - remaining) >= -1e-8 * std::abs(h)) {
      h = remaining;
      last = true;
    }
    if (std::abs(h) < 1e-14 * std::max(1.0, std::abs(t))) {
      throw Error(ErrorKind::ConvergenceFailure, "step size underflow in Runge-Kutta advance");
    }
    auto trial = dopri5_attempt(f, t, y, dydt, h, tol);
    if (trial.error_norm <= 1.0) {
      t = last ? t_end : t + h;
      y = trial.y;
      dydt = trial.dydt;
    }
    const double proposed = next_step(h, trial.error_norm);
    h = dir * std::min(std::abs(proposed), max_step);
  }
  return h;
}

}  // namespace hcmu::rk
