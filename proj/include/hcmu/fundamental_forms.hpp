#pragma once

#include <complex>
#include <functional>
#include <span>
#include <vector>

#include "hcmu/curvature_ode.hpp"
#include "hcmu/hcmu_core.hpp"

namespace hcmu {

/// How the ODE branch maps to the sign of cos(theta) of the Hopf angle.
/// PlusNegativeCos: Plus <-> cos(theta) < 0, Minus <-> cos(theta) > 0.
enum class ThetaPairing { PlusNegativeCos, PlusPositiveCos };
const char* to_string(ThetaPairing pairing);

struct ThetaState {
  double sin_theta;
  double cos_theta;
  double theta;
};

/// sin(theta) = A / (p sqrt(H^2-K+c)), |cos(theta)| from the same radicand,
/// sign fixed by branch and pairing. A = 0 gives theta in {0, pi} exactly.
ThetaState theta_of_state(const FootballParams& params, double c, WeingartenConstant A,
                          double K, double H, Branch branch,
                          ThetaPairing pairing = ThetaPairing::PlusNegativeCos);

/// All per-x quantities of the realised surface.
struct FormsSample {
  double x;
  double K;
  double e_u;
  double u_x;  // d(ln e^u)/dx = 2 p'(K)
  double H;
  double theta;
  double sin_theta;
  double cos_theta;
  double h11;
  double h12;
  double h22;
  double kp1;  // H + sqrt(H^2-K+c)
  double kp2;  // H - sqrt(H^2-K+c)
  std::complex<double> Q;  // (h11 - h22 - 2i h12) / 4
};

/// Second fundamental form coefficients from (e^u, H, K, theta).
struct SecondForm {
  double h11;
  double h12;
  double h22;
};
SecondForm second_form_from_hopf(double e_u, double H, double K, double c, double sin_theta,
                                 double cos_theta);

/// Evaluates forms at arbitrary x from an H solution and the x <-> K map.
/// An optional multiplicative factor on H (a function of x) produces
/// deliberately inconsistent data for negative controls.
class FormsEvaluator {
 public:
  FormsEvaluator(const HSolution& sol, const XOfKMap& map,
                 ThetaPairing pairing = ThetaPairing::PlusNegativeCos,
                 std::function<double(double)> H_scale = {});

  /// Throws DomainError (naming x) if K(x) is outside the solved range.
  FormsSample at(double x) const;

  const HSolution& solution() const noexcept { return *sol_; }
  const XOfKMap& map() const noexcept { return *map_; }
  ThetaPairing pairing() const noexcept { return pairing_; }
  double c() const noexcept { return sol_->config().space_form_c; }

 private:
  const HSolution* sol_;
  const XOfKMap* map_;
  ThetaPairing pairing_;
  std::function<double(double)> H_scale_;
};

struct FormsGrid {
  double c = 0.0;
  double A = 0.0;
  ThetaPairing pairing = ThetaPairing::PlusNegativeCos;
  std::vector<FormsSample> samples;
};

FormsGrid build_forms(const HSolution& sol, const XOfKMap& map, std::span<const double> x_grid,
                      ThetaPairing pairing = ThetaPairing::PlusNegativeCos);
FormsGrid build_forms(const FormsEvaluator& eval, std::span<const double> x_grid);

struct GaussResidual {
  std::vector<double> hopf;         // 4|Q|^2 - e^{2u}(H^2-K+c)
  std::vector<double> determinant;  // h11 h22 - h12^2 - e^{2u}(K-c)
  double max_abs() const;
};

GaussResidual gauss_residual(const FormsGrid& grid, double c);

struct CodazziResidual {
  std::vector<double> r1;  // H_x sin(theta) + sqrt(w) theta_x
  std::vector<double> r2;  // H_x cos(theta) - (ln e^u sqrt(w))_x sqrt(w)
  double max_abs() const;
};

/// Second-order finite differences in x (central inside, one-sided at the
/// ends). Requires a uniform grid with at least three samples.
CodazziResidual codazzi_residual(const FormsGrid& grid);

/// Builds the forms under both pairings on `probe_x` and keeps the one whose
/// Codazzi residual is smaller.
ThetaPairing select_theta_pairing(const HSolution& sol, const XOfKMap& map,
                                  std::span<const double> probe_x);

/// Form data sampled on an (x, y) grid, row-major with index ix * ny + iy.
struct FormDataGrid {
  std::vector<double> x;
  std::vector<double> y;
  double c = 0.0;
  std::vector<double> K;
  std::vector<double> e_u;
  std::vector<double> h11;
  std::vector<double> h12;
  std::vector<double> h22;

  std::size_t nx() const noexcept { return x.size(); }
  std::size_t ny() const noexcept { return y.size(); }
  std::size_t index(std::size_t ix, std::size_t iy) const noexcept { return ix * y.size() + iy; }
  void resize(std::size_t nx, std::size_t ny);
};

/// Replicates a per-x grid across the given y values.
FormDataGrid extrude(const FormsGrid& grid, std::span<const double> y);

struct ClassifierTolerances {
  double abs = 1e-9;
  double rel = 1e-6;
  double reconstruction = 1e-6;
};

struct ClassifyResult {
  bool is_weingarten = false;
  double h12_spread = 0.0;
  bool H_depends_only_on_x = false;
  double H_y_spread = 0.0;
  double h11_y_spread = 0.0;
  /// Set when h12 is constant: H rebuilt from h11 and the Gauss equation
  /// has no y-dependence.
  bool reconstruction_certified = false;
  double reconstruction_y_spread = 0.0;
};

/// Weingarten test for surfaces carrying the HCMU conformal metric: the
/// surface is Weingarten iff h12 is constant. Throws MetricShapeMismatch if
/// e^u varies along y, EmptyInput for an empty grid.
ClassifyResult classify_weingarten(const FormDataGrid& grid, const ClassifierTolerances& tol = {});

}  // namespace hcmu
