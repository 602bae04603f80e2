#include "hcmu/immersion.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "hcmu/errors.hpp"
#include "hcmu/expm.hpp"

namespace hcmu {

const char* to_string(AmbientKind kind) {
  switch (kind) {
    case AmbientKind::Flat3: return "flat3";
    case AmbientKind::Sphere4: return "sphere4";
    case AmbientKind::Hyperboloid4: return "hyperboloid4";
  }
  return "unknown";
}

AmbientModel::AmbientModel(double c) : c_(c) {
  if (!std::isfinite(c)) throw Error(ErrorKind::ConfigError, "space form curvature must be finite");
  if (c == 0.0) {
    kind_ = AmbientKind::Flat3;
    last_sign_ = 0.0;
  } else if (c > 0.0) {
    kind_ = AmbientKind::Sphere4;
    last_sign_ = 1.0;
  } else {
    kind_ = AmbientKind::Hyperboloid4;
    last_sign_ = -1.0;
  }
}

namespace {

void require_metric(const FrameCoefficients& k) {
  if (!(k.e_u > 0.0)) {
    throw Error(ErrorKind::DegenerateMetric, "conformal factor must be positive");
  }
}

}  // namespace

Mat4 x_system(const FrameCoefficients& k, double c) {
  require_metric(k);
  Mat4 M;
  // clang-format off
  M <<  0.0,          1.0,              0.0,              0.0,
       -c * k.e_u,    0.5 * k.u_x,      0.0,              k.h11,
        0.0,          0.0,              0.5 * k.u_x,      k.h12,
        0.0,         -k.h11 / k.e_u,   -k.h12 / k.e_u,    0.0;
  // clang-format on
  return M;
}

Mat4 y_generator(const FrameCoefficients& k, double c) {
  require_metric(k);
  Mat4 V;
  // clang-format off
  V <<  0.0,          0.0,              1.0,              0.0,
        0.0,          0.0,              0.5 * k.u_x,      k.h12,
       -c * k.e_u,   -0.5 * k.u_x,      0.0,              k.h22,
        0.0,         -k.h12 / k.e_u,   -k.h22 / k.e_u,    0.0;
  // clang-format on
  return V;
}

FrameState canonical_frame(const AmbientModel& model, double e_u) {
  if (!(e_u > 0.0)) throw Error(ErrorKind::DegenerateMetric, "conformal factor must be positive");
  FrameState f;
  const double s = std::sqrt(e_u);
  if (model.kind() != AmbientKind::Flat3) {
    f.rows(0, 3) = 1.0 / std::sqrt(std::abs(model.c()));
  }
  f.rows(1, 0) = s;
  f.rows(2, 1) = s;
  f.rows(3, 2) = 1.0;
  return f;
}

double constraint_drift(const FrameState& f, const AmbientModel& model, double e_u) {
  const Vec4 r = f.r(), rx = f.r_x(), ry = f.r_y(), n = f.n();
  const double s = std::sqrt(e_u);
  double d = 0.0;
  auto track = [&d](double v) { d = std::max(d, std::abs(v)); };
  track(model.inner(rx, rx) / e_u - 1.0);
  track(model.inner(ry, ry) / e_u - 1.0);
  track(model.inner(rx, ry) / e_u);
  track(model.inner(n, n) - 1.0);
  track(model.inner(n, rx) / s);
  track(model.inner(n, ry) / s);
  if (model.kind() != AmbientKind::Flat3) {
    const double k = std::sqrt(std::abs(model.c()));
    track(model.c() * model.inner(r, r) - 1.0);
    track(model.inner(r, rx) * k / s);
    track(model.inner(r, ry) * k / s);
    track(model.inner(r, n) * k);
  }
  return d;
}

void repair_frame(FrameState& f, const AmbientModel& model, double e_u) {
  Vec4 r = f.r(), rx = f.r_x(), ry = f.r_y(), n = f.n();
  const bool curved = model.kind() != AmbientKind::Flat3;
  auto remove = [&](Vec4& v, const Vec4& u) { v -= (model.inner(v, u) / model.inner(u, u)) * u; };
  if (curved) {
    r /= std::sqrt(model.c() * model.inner(r, r));
    remove(rx, r);
    remove(ry, r);
    remove(n, r);
  }
  rx *= std::sqrt(e_u / model.inner(rx, rx));
  remove(ry, rx);
  ry *= std::sqrt(e_u / model.inner(ry, ry));
  remove(n, rx);
  remove(n, ry);
  n /= std::sqrt(model.inner(n, n));
  f.rows.row(0) = r.transpose();
  f.rows.row(1) = rx.transpose();
  f.rows.row(2) = ry.transpose();
  f.rows.row(3) = n.transpose();
}

namespace {

using Flat16 = Eigen::Matrix<double, 16, 1>;

Flat16 flatten(const Mat4& m) { return Eigen::Map<const Flat16>(m.data()); }
Mat4 unflatten(const Flat16& v) { return Eigen::Map<const Mat4>(v.data()); }

}  // namespace

Profile integrate_profile(const FormsEvaluator& eval, const AmbientModel& model,
                          std::span<const double> x_grid, const ProfileConfig& cfg) {
  const std::size_t n = x_grid.size();
  if (n == 0) throw Error(ErrorKind::EmptyInput, "profile needs at least one x sample");
  for (std::size_t i = 1; i < n; ++i) {
    if (!(x_grid[i] > x_grid[i - 1])) {
      throw Error(ErrorKind::ConfigError, "x grid must be strictly increasing");
    }
  }
  if (std::abs(eval.c() - model.c()) > 0.0) {
    throw Error(ErrorKind::ConfigError, "ambient model and H solution disagree on c");
  }

  Profile prof;
  prof.model = model;
  prof.x.assign(x_grid.begin(), x_grid.end());
  prof.frames.resize(n);
  prof.forms.resize(n);
  prof.drift.assign(n, 0.0);
  prof.base_index = n / 2;

  const double c = model.c();
  auto rhs = [&](double x, const Flat16& y) -> Flat16 {
    const Mat4 M = x_system(FrameCoefficients::from(eval.at(x)), c);
    return flatten(M * unflatten(y));
  };

  const std::size_t b = prof.base_index;
  prof.forms[b] = eval.at(x_grid[b]);
  prof.frames[b] = cfg.initial.value_or(canonical_frame(model, prof.forms[b].e_u));
  prof.drift[b] = constraint_drift(prof.frames[b], model, prof.forms[b].e_u);
  if (prof.drift[b] > 1e-8) {
    throw Error(ErrorKind::ConfigError, "initial frame violates the frame constraints");
  }

  auto march = [&](std::size_t from, std::size_t to) {
    double x = x_grid[from];
    Flat16 y = flatten(prof.frames[from].rows);
    double h = cfg.max_step;
    h = rk::advance(rhs, x, y, x_grid[to], h, cfg.max_step, cfg.tol);
    FrameState f;
    f.rows = unflatten(y);
    prof.forms[to] = eval.at(x_grid[to]);
    const double e_u = prof.forms[to].e_u;
    const double drift = constraint_drift(f, model, e_u);
    prof.drift[to] = drift;
    if (drift > cfg.blowup_threshold) {
      std::ostringstream os;
      os << "frame drift " << drift << " at x=" << x_grid[to];
      throw Error(ErrorKind::ConstraintBlowup, os.str());
    }
    if (drift > cfg.repair_threshold) {
      repair_frame(f, model, e_u);
      ++prof.repairs;
    }
    prof.frames[to] = f;
  };
  for (std::size_t i = b + 1; i < n; ++i) march(i - 1, i);
  for (std::size_t i = b; i-- > 0;) march(i + 1, i);
  return prof;
}

SurfacePatch sweep_surface(const Profile& profile, std::span<const double> y_grid) {
  if (profile.x.empty() || y_grid.empty()) {
    throw Error(ErrorKind::EmptyInput, "surface sweep needs non-empty x and y grids");
  }
  SurfacePatch patch;
  patch.model = profile.model;
  patch.x = profile.x;
  patch.y.assign(y_grid.begin(), y_grid.end());
  patch.frames.resize(patch.nx() * patch.ny());
  patch.coefficients.reserve(patch.nx());
  patch.row_drift.assign(patch.nx(), 0.0);
  const double c = profile.model.c();
  for (std::size_t i = 0; i < patch.nx(); ++i) {
    const auto coeffs = FrameCoefficients::from(profile.forms[i]);
    patch.coefficients.push_back(coeffs);
    const Mat4 V = y_generator(coeffs, c);
    for (std::size_t j = 0; j < patch.ny(); ++j) {
      FrameState& f = patch.frames[patch.index(i, j)];
      f.rows = expm(Mat4(patch.y[j] * V)) * profile.frames[i].rows;
      patch.row_drift[i] =
          std::max(patch.row_drift[i], constraint_drift(f, profile.model, coeffs.e_u));
    }
    patch.max_drift = std::max(patch.max_drift, patch.row_drift[i]);
  }
  return patch;
}

namespace {

// y = 0 column index, falling back to the first column.
std::size_t zero_column(const SurfacePatch& patch) {
  for (std::size_t j = 0; j < patch.ny(); ++j) {
    if (patch.y[j] == 0.0) return j;
  }
  return 0;
}

}  // namespace

AmbientMotion motion_from_row(const SurfacePatch& patch, std::size_t ix, std::size_t iy) {
  const std::size_t j0 = zero_column(patch);
  const FrameState& a = patch.frames[patch.index(ix, j0)];
  const FrameState& b = patch.frames[patch.index(ix, iy)];
  AmbientMotion m{Mat4::Identity(), Vec4::Zero()};
  if (patch.model.kind() != AmbientKind::Flat3) {
    m.linear = b.rows.transpose() * a.rows.transpose().inverse();
    return m;
  }
  Eigen::Matrix3d A, B;
  A << a.r_x().head<3>(), a.r_y().head<3>(), a.n().head<3>();
  B << b.r_x().head<3>(), b.r_y().head<3>(), b.n().head<3>();
  m.linear.topLeftCorner<3, 3>() = B * A.inverse();
  m.translation = b.r() - m.linear * a.r();
  m.translation[3] = 0.0;
  return m;
}

double resweep_error(const SurfacePatch& patch, std::size_t ix) {
  const std::size_t j0 = zero_column(patch);
  double err = 0.0;
  for (std::size_t j = 0; j < patch.ny(); ++j) {
    const AmbientMotion m = motion_from_row(patch, ix, j);
    for (std::size_t i = 0; i < patch.nx(); ++i) {
      const Vec4 moved = m.apply(patch.position(i, j0));
      err = std::max(err, (moved - patch.position(i, j)).cwiseAbs().maxCoeff());
    }
  }
  return err;
}

}  // namespace hcmu
