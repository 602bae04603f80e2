#pragma once

#include <Eigen/Dense>
#include <optional>
#include <span>
#include <vector>

#include "hcmu/fundamental_forms.hpp"
#include "hcmu/rk.hpp"

namespace hcmu {

using Vec4 = Eigen::Vector4d;
using Mat4 = Eigen::Matrix4d;

enum class AmbientKind { Flat3, Sphere4, Hyperboloid4 };
const char* to_string(AmbientKind kind);

/// Extrinsic model of the space form of curvature c:
///   c = 0  Euclidean 3-space (fourth coordinate unused),
///   c > 0  sphere <r,r> = 1/c in Euclidean 4-space,
///   c < 0  upper sheet of <r,r> = 1/c in signature (+,+,+,-).
class AmbientModel {
 public:
  explicit AmbientModel(double c);

  double c() const noexcept { return c_; }
  AmbientKind kind() const noexcept { return kind_; }
  int dimension() const noexcept { return kind_ == AmbientKind::Flat3 ? 3 : 4; }

  double inner(const Vec4& a, const Vec4& b) const noexcept {
    return a[0] * b[0] + a[1] * b[1] + a[2] * b[2] + last_sign_ * a[3] * b[3];
  }
  /// Diagonal of the ambient metric.
  Vec4 metric_diagonal() const noexcept { return Vec4(1.0, 1.0, 1.0, last_sign_); }

 private:
  double c_;
  AmbientKind kind_;
  double last_sign_;
};

/// Rows hold r, r_x, r_y, n.
struct FrameState {
  Mat4 rows = Mat4::Zero();

  Vec4 r() const { return rows.row(0).transpose(); }
  Vec4 r_x() const { return rows.row(1).transpose(); }
  Vec4 r_y() const { return rows.row(2).transpose(); }
  Vec4 n() const { return rows.row(3).transpose(); }
};

/// Coefficients of the structure equations at one x (all y-independent).
struct FrameCoefficients {
  double e_u;
  double u_x;
  double h11;
  double h12;
  double h22;

  static FrameCoefficients from(const FormsSample& s) { return {s.e_u, s.u_x, s.h11, s.h12, s.h22}; }
};

/// dS/dx = M S for the stacked frame S (rows r, r_x, r_y, n):
///   r_xx = (u_x/2) r_x + h11 n - c e^u r,  r_xy = (u_x/2) r_y + h12 n,
///   n_x  = -(h11 r_x + h12 r_y) / e^u.
/// Throws DegenerateMetric if e^u <= 0.
Mat4 x_system(const FrameCoefficients& k, double c);

/// dS/dy = V S with
///   r_yy = -(u_x/2) r_x + h22 n - c e^u r,  n_y = -(h12 r_x + h22 r_y) / e^u.
/// V does not depend on y, so S(x, y) = exp(y V(x)) S(x, 0).
Mat4 y_generator(const FrameCoefficients& k, double c);

/// Axis-aligned frame at the model's base point (origin, or (0,0,0,1/sqrt|c|)).
FrameState canonical_frame(const AmbientModel& model, double e_u);

/// Largest violation among the frame constraints, scaled to be relative.
double constraint_drift(const FrameState& f, const AmbientModel& model, double e_u);

/// Gram-Schmidt against the ambient inner product, restoring every constraint.
void repair_frame(FrameState& f, const AmbientModel& model, double e_u);

struct ProfileConfig {
  rk::Tolerances tol{1e-12, 1e-14};
  double max_step = 0.01;
  double repair_threshold = 1e-10;
  double blowup_threshold = 1e-6;
  /// Frame at the base row; defaults to canonical_frame.
  std::optional<FrameState> initial;
};

/// The y = 0 curve with its frames. The base row is the middle grid point.
struct Profile {
  AmbientModel model{0.0};
  std::vector<double> x;
  std::vector<FrameState> frames;
  std::vector<FormsSample> forms;
  std::vector<double> drift;  // before any repair
  std::size_t base_index = 0;
  int repairs = 0;
};

/// Integrates the x structure equations along x_grid. Throws ConstraintBlowup
/// if the frame drifts more than blowup_threshold between grid points.
Profile integrate_profile(const FormsEvaluator& eval, const AmbientModel& model,
                          std::span<const double> x_grid, const ProfileConfig& cfg = {});

struct SurfacePatch {
  AmbientModel model{0.0};
  std::vector<double> x;
  std::vector<double> y;
  std::vector<FrameState> frames;  // row-major, index ix * ny + iy
  std::vector<FrameCoefficients> coefficients;  // per x
  std::vector<double> row_drift;  // max constraint drift over each x row
  double max_drift = 0.0;

  std::size_t nx() const noexcept { return x.size(); }
  std::size_t ny() const noexcept { return y.size(); }
  std::size_t index(std::size_t ix, std::size_t iy) const noexcept { return ix * y.size() + iy; }
  Vec4 position(std::size_t ix, std::size_t iy) const { return frames[index(ix, iy)].r(); }
  Vec4 normal(std::size_t ix, std::size_t iy) const { return frames[index(ix, iy)].n(); }
};

SurfacePatch sweep_surface(const Profile& profile, std::span<const double> y_grid);

/// The ambient isometry carrying row `ix` at y = 0 to row `ix` at y_grid[iy],
/// as an affine map p -> L p + t on 4-vectors (t = 0 unless c = 0).
struct AmbientMotion {
  Mat4 linear;
  Vec4 translation;
  Vec4 apply(const Vec4& p) const { return linear * p + translation; }
  Vec4 apply_vector(const Vec4& v) const { return linear * v; }
};
AmbientMotion motion_from_row(const SurfacePatch& patch, std::size_t ix, std::size_t iy);

/// Largest position error when every row is re-swept with the motion taken
/// from row `ix`.
double resweep_error(const SurfacePatch& patch, std::size_t ix);

}  // namespace hcmu
