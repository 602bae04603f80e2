#pragma once

#include <limits>
#include <span>
#include <vector>

#include "hcmu/hcmu_core.hpp"

namespace hcmu {

/// The constant A of the mean-curvature ODE, i.e. sin(theta) = A / (p sqrt(H^2-K+c)).
struct WeingartenConstant {
  double a = 0.0;
};

/// The sign in front of the square root in the ODE denominator.
enum class Branch { Plus, Minus };

inline double branch_sign(Branch b) { return b == Branch::Plus ? 1.0 : -1.0; }
inline Branch flipped(Branch b) { return b == Branch::Plus ? Branch::Minus : Branch::Plus; }
const char* to_string(Branch b);

enum class EventKind { UmbilicReached, ThetaSaturation, DenominatorSingular, BranchSwitch };
const char* to_string(EventKind kind);

enum class OnEvent { Stop, SwitchBranch };

struct SolverConfig {
  double K0 = 0.0;
  double H0 = 0.0;
  double space_form_c = 0.0;
  WeingartenConstant A;
  Branch branch = Branch::Plus;
  CurvatureWindow window{};
  double rel_tol = 1e-10;
  double abs_tol = 1e-12;
  double max_step = 0.0;  // 0 selects window width / 100
  OnEvent on_event = OnEvent::Stop;

  /// Default tolerances and the default curvature window for `params`.
  static SolverConfig make(const FootballParams& params, double K0, double H0,
                           double c, WeingartenConstant A, Branch branch);
};

/// Throws UmbilicReached, ThetaSaturation or DenominatorSingular if the
/// starting state is inadmissible, ConfigError for bad tolerances or a K0
/// outside the window.
void validate_solver_config(const SolverConfig& cfg, const FootballParams& params);

/// dH/dK = (p - 2p'(H^2-K+c)) / (2 [p H +- sqrt(p^2 (H^2-K+c) - A^2)]).
double rhs_thm1(const FootballParams& params, double c, WeingartenConstant A,
                Branch branch, double K, double H);

struct HSample {
  double K;
  double H;
  double dH_dK;
  Branch branch;
  /// Differentiated along the solution; NaN where that was not possible.
  double d2H_dK2 = std::numeric_limits<double>::quiet_NaN();
};

struct SolveEvent {
  double K;
  EventKind kind;
};

/// A sampled solution K -> H(K), ascending in K, with quintic Hermite dense
/// output between integrator steps (cubic where a second derivative is
/// missing).
class HSolution {
 public:
  HSolution(const FootballParams& params, const SolverConfig& config,
            std::vector<HSample> samples, std::vector<SolveEvent> events);

  const FootballParams& params() const noexcept { return params_; }
  const SolverConfig& config() const noexcept { return config_; }
  const std::vector<HSample>& samples() const noexcept { return samples_; }
  const std::vector<SolveEvent>& events() const noexcept { return events_; }

  double K_min() const noexcept { return samples_.front().K; }
  double K_max() const noexcept { return samples_.back().K; }
  bool covers(double K) const noexcept { return K >= K_min() && K <= K_max(); }

  /// Throws DomainError outside [K_min, K_max].
  double H_at(double K) const;
  double dH_at(double K) const;
  Branch branch_at(double K) const;

  std::vector<HSample> sample(std::span<const double> K_grid) const;

 private:
  std::size_t interval(double K) const;

  FootballParams params_;
  SolverConfig config_;
  std::vector<HSample> samples_;
  std::vector<SolveEvent> events_;
};

/// Adaptive Dormand-Prince integration of the mean-curvature ODE from K0
/// towards both window edges. For A != 0 the integration carries the Hopf
/// angle as a second unknown so that sign changes of cos(theta) are located
/// as ordinary events.
HSolution solve_H(const SolverConfig& cfg, const FootballParams& params);

// Closed-form solution for A = 0.

enum class ClosedFormSign { Upper, Lower };

struct ClosedFormParams {
  double s;
  double delta;
  ClosedFormSign sign;
};

/// delta = (K1^2 + K1 K2 + K2^2) / 6.
double closed_form_delta(const FootballParams& params);

/// Builds the closed-form parameters, checking the quartic stays positive on
/// the window. Throws DomainError otherwise.
ClosedFormParams make_closed_form(const FootballParams& params, double c, double s,
                                  ClosedFormSign sign, const CurvatureWindow& window);

/// -K^4/4 + c K^3/3 + delta K^2 - 2 c delta K + s.
double closed_form_poly(double c, const ClosedFormParams& cf, double K);

double closed_form_H_A0(const FootballParams& params, double c,
                        const ClosedFormParams& cf, double K);

/// Which ODE branch the closed form satisfies near K, decided by comparing a
/// central difference of the closed form against both right-hand sides.
Branch pair_closed_form_branch(const FootballParams& params, double c,
                               const ClosedFormParams& cf, double K);

// The Euclidean epsilon-parametrised form of the same ODE.

enum class ETForm { ET1, ET2 };

double et_rhs(const FootballParams& params, double eps, ETForm which, double K, double H);

struct AdmissibilityReport {
  bool umbilic_free;
  bool theta_defined;
  bool denominator_ok;
  double umbilic_margin;      // H^2 - K + c
  double theta_margin;        // p^2 (H^2-K+c) - A^2
  double denominator_margin;  // min over branches of |2 (p H +- sqrt(theta_margin))|
};

AdmissibilityReport admissibility_report(const FootballParams& params, double c,
                                         WeingartenConstant A, double K, double H);

}  // namespace hcmu
