#include "hcmu/verify.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <random>
#include <sstream>

#include "hcmu/errors.hpp"
#include "hcmu/hash.hpp"

namespace hcmu {

namespace {

double spacing(const std::vector<double>& g, std::size_t i, const char* axis) {
  if (i == 0 || i + 1 >= g.size()) {
    std::ostringstream os;
    os << "index " << i << " along " << axis << " has no full stencil (n=" << g.size() << ")";
    throw Error(ErrorKind::StencilOutOfRange, os.str());
  }
  const double hm = g[i] - g[i - 1];
  const double hp = g[i + 1] - g[i];
  if (!(hm > 0.0) || std::abs(hp - hm) > 1e-6 * (hp + hm)) {
    std::ostringstream os;
    os << "non-uniform stencil along " << axis << " at index " << i;
    throw Error(ErrorKind::StencilOutOfRange, os.str());
  }
  return 0.5 * (hp + hm);
}

double det_rows(const Vec4& a, const Vec4& b, const Vec4& c, const Vec4& d) {
  Mat4 m;
  m.row(0) = a.transpose();
  m.row(1) = b.transpose();
  m.row(2) = c.transpose();
  m.row(3) = d.transpose();
  return m.determinant();
}

double max_abs(const Mat2& m) { return m.cwiseAbs().maxCoeff(); }

}  // namespace

std::pair<Vec4, Vec4> fd_tangents(const SurfacePatch& patch, std::size_t ix, std::size_t iy) {
  const double hx = spacing(patch.x, ix, "x");
  const double hy = spacing(patch.y, iy, "y");
  const Vec4 tx = (patch.position(ix + 1, iy) - patch.position(ix - 1, iy)) / (2.0 * hx);
  const Vec4 ty = (patch.position(ix, iy + 1) - patch.position(ix, iy - 1)) / (2.0 * hy);
  return {tx, ty};
}

Vec4 fd_normal(const SurfacePatch& patch, std::size_t ix, std::size_t iy) {
  const auto [tx, ty] = fd_tangents(patch, ix, iy);
  const AmbientModel& model = patch.model;
  Vec4 n = Vec4::Zero();
  if (model.kind() == AmbientKind::Flat3) {
    n.head<3>() = tx.head<3>().cross(ty.head<3>());
  } else {
    // Generalised cross product: m_i = det[tx, ty, r, e_i] is orthogonal to
    // tx, ty, r in the Euclidean pairing; raising the index with the ambient
    // metric makes it orthogonal in the model inner product.
    const Vec4 r = patch.position(ix, iy);
    const Vec4 eta = model.metric_diagonal();
    for (int i = 0; i < 4; ++i) {
      n[i] = det_rows(tx, ty, r, Vec4::Unit(i)) / eta[i];
    }
    if (det_rows(tx, ty, n, r) < 0.0) n = -n;
  }
  const double nn = model.inner(n, n);
  if (!(nn > 0.0)) {
    throw Error(ErrorKind::DegenerateMetric, "finite-difference tangents are degenerate");
  }
  return n / std::sqrt(nn);
}

Mat2 fd_first_form(const SurfacePatch& patch, std::size_t ix, std::size_t iy) {
  const auto [tx, ty] = fd_tangents(patch, ix, iy);
  const AmbientModel& m = patch.model;
  Mat2 g;
  g(0, 0) = m.inner(tx, tx);
  g(0, 1) = g(1, 0) = m.inner(tx, ty);
  g(1, 1) = m.inner(ty, ty);
  return g;
}

Mat2 fd_second_form(const SurfacePatch& patch, std::size_t ix, std::size_t iy) {
  const double hx = spacing(patch.x, ix, "x");
  const double hy = spacing(patch.y, iy, "y");
  const Mat2 g = fd_first_form(patch, ix, iy);
  const Vec4 n = fd_normal(patch, ix, iy);
  const Vec4 r = patch.position(ix, iy);
  auto P = [&](std::size_t i, std::size_t j) { return patch.position(i, j); };
  const Vec4 rxx = (P(ix + 1, iy) - 2.0 * r + P(ix - 1, iy)) / (hx * hx);
  const Vec4 ryy = (P(ix, iy + 1) - 2.0 * r + P(ix, iy - 1)) / (hy * hy);
  const Vec4 rxy = (P(ix + 1, iy + 1) - P(ix + 1, iy - 1) - P(ix - 1, iy + 1) +
                    P(ix - 1, iy - 1)) /
                   (4.0 * hx * hy);
  const double c = patch.model.c();
  const AmbientModel& m = patch.model;
  Mat2 b;
  b(0, 0) = m.inner(rxx + c * g(0, 0) * r, n);
  b(0, 1) = b(1, 0) = m.inner(rxy + c * g(0, 1) * r, n);
  b(1, 1) = m.inner(ryy + c * g(1, 1) * r, n);
  return b;
}

DiscreteCurvatures discrete_curvatures(const SurfacePatch& patch, std::size_t ix, std::size_t iy) {
  const Mat2 g = fd_first_form(patch, ix, iy);
  const Mat2 b = fd_second_form(patch, ix, iy);
  const double dg = g.determinant();
  if (!(dg > 0.0)) throw Error(ErrorKind::DegenerateMetric, "finite-difference metric is degenerate");
  const Mat2 shape = g.inverse() * b;
  return {b.determinant() / dg + patch.model.c(), 0.5 * shape.trace()};
}

double mixed_partial_residual(const SurfacePatch& patch, std::size_t ix, std::size_t iy) {
  const auto [tx, ty] = fd_tangents(patch, ix, iy);
  const FrameState& f = patch.frames[patch.index(ix, iy)];
  const double scale = std::sqrt(patch.coefficients[ix].e_u);
  const double ex = (tx - f.r_x()).cwiseAbs().maxCoeff();
  const double ey = (ty - f.r_y()).cwiseAbs().maxCoeff();
  return std::max(ex, ey) / scale;
}

std::string patch_hash(const SurfacePatch& patch) {
  std::uint64_t h = fnv1a(patch.x.data(), patch.x.size() * sizeof(double));
  h = fnv1a(patch.y.data(), patch.y.size() * sizeof(double), h);
  const double c = patch.model.c();
  h = fnv1a(&c, sizeof c, h);
  for (const FrameState& f : patch.frames) {
    const Vec4 r = f.r();
    h = fnv1a(r.data(), 4 * sizeof(double), h);
  }
  return hex64(h);
}

namespace {

struct Expected {
  double e_u, h11, h12, h22, K, H;
};

struct Sweep {
  std::vector<PointResidual> points;
  double metric = 0.0, second = 0.0, K = 0.0, H = 0.0, mixed = 0.0;
  FormDataGrid reconstructed;
};

PointResidual point_residual(const SurfacePatch& patch, std::size_t i, std::size_t j,
                             const Expected& e, Mat2* g_out, Mat2* b_out, double* K_out) {
  const Mat2 g = fd_first_form(patch, i, j);
  const Mat2 b = fd_second_form(patch, i, j);
  const DiscreteCurvatures dc = discrete_curvatures(patch, i, j);
  Mat2 g_exp = Mat2::Identity() * e.e_u;
  Mat2 b_exp;
  b_exp << e.h11, e.h12, e.h12, e.h22;
  PointResidual r{};
  r.ix = i;
  r.iy = j;
  r.metric_rel_err = max_abs(g - g_exp) / e.e_u;
  r.second_form_rel_err = max_abs(b - b_exp) / std::max(max_abs(b_exp), 1e-300);
  r.K_abs_err = std::abs(dc.K - e.K);
  r.H_abs_err = std::abs(dc.H - e.H);
  r.mixed_partial = mixed_partial_residual(patch, i, j);
  if (g_out) *g_out = g;
  if (b_out) *b_out = b;
  if (K_out) *K_out = dc.K;
  return r;
}

Sweep sweep_oracles(const SurfacePatch& patch, const FormsEvaluator& analytic) {
  Sweep s;
  const std::size_t nx = patch.nx(), ny = patch.ny();
  FormDataGrid& rg = s.reconstructed;
  rg.c = patch.model.c();
  rg.x.assign(patch.x.begin() + 1, patch.x.end() - 1);
  rg.y.assign(patch.y.begin() + 1, patch.y.end() - 1);
  rg.resize(nx - 2, ny - 2);
  for (std::size_t i = 1; i + 1 < nx; ++i) {
    const FormsSample a = analytic.at(patch.x[i]);
    const Expected e{a.e_u, a.h11, a.h12, a.h22, a.K, a.H};
    for (std::size_t j = 1; j + 1 < ny; ++j) {
      Mat2 g, b;
      double K = 0.0;
      const PointResidual r = point_residual(patch, i, j, e, &g, &b, &K);
      s.points.push_back(r);
      s.metric = std::max(s.metric, r.metric_rel_err);
      s.second = std::max(s.second, r.second_form_rel_err);
      s.K = std::max(s.K, r.K_abs_err);
      s.H = std::max(s.H, r.H_abs_err);
      s.mixed = std::max(s.mixed, r.mixed_partial);
      const std::size_t k = rg.index(i - 1, j - 1);
      rg.K[k] = K;
      rg.e_u[k] = 0.5 * (g(0, 0) + g(1, 1));
      rg.h11[k] = b(0, 0);
      rg.h12[k] = b(0, 1);
      rg.h22[k] = b(1, 1);
    }
  }
  return s;
}

double codazzi_probe(const FormsEvaluator& analytic, double x_lo, double x_hi, double step) {
  const auto n = static_cast<std::size_t>(std::max(3.0, std::round((x_hi - x_lo) / step) + 1.0));
  std::vector<double> xs(n);
  for (std::size_t i = 0; i < n; ++i) {
    xs[i] = x_lo + (x_hi - x_lo) * static_cast<double>(i) / static_cast<double>(n - 1);
  }
  return codazzi_residual(build_forms(analytic, xs)).max_abs();
}

void evaluate(VerificationReport& rep, const SurfacePatch& patch, const FormsEvaluator& analytic) {
  const VerifyTolerances& tol = rep.tol;
  rep.patch_hash = patch_hash(patch);
  Sweep s = sweep_oracles(patch, analytic);
  rep.points = std::move(s.points);
  rep.max_metric_rel = s.metric;
  rep.max_second_form_rel = s.second;
  rep.max_K_abs = s.K;
  rep.max_H_abs = s.H;
  rep.max_mixed_partial = s.mixed;
  rep.max_drift = patch.max_drift;
  rep.codazzi_max = codazzi_probe(analytic, patch.x.front(), patch.x.back(), tol.codazzi_step);
  rep.expected_h12 = -4.0 * analytic.solution().config().A.a + 0.0;  // no -0
  rep.h12_max_dev = 0.0;
  for (double v : s.reconstructed.h12) {
    rep.h12_max_dev = std::max(rep.h12_max_dev, std::abs(v - rep.expected_h12));
  }
  // Finite-difference data carry O(h^2) noise, so the classifier runs at the
  // oracle tolerances rather than its exact-data defaults.
  const ClassifierTolerances ctol{tol.h12_abs, tol.metric_rel, tol.curvature_abs};
  try {
    rep.reconstructed = classify_weingarten(s.reconstructed, ctol);
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::MetricShapeMismatch) throw;
    rep.reconstructed = ClassifyResult{};
  }
  rep.pass = rep.max_metric_rel <= tol.metric_rel && rep.max_second_form_rel <= tol.second_form_rel &&
             rep.max_K_abs <= tol.curvature_abs && rep.max_H_abs <= tol.curvature_abs &&
             rep.max_mixed_partial <= tol.mixed_partial_rel && rep.codazzi_max <= tol.codazzi_abs &&
             rep.max_drift <= tol.drift && rep.reconstructed.is_weingarten &&
             rep.h12_max_dev <= tol.h12_abs;
}

}  // namespace

VerificationReport run_report(const SurfacePatch& patch, const FormsEvaluator& analytic,
                              const VerifyTolerances& tol, bool with_negative_controls,
                              const ProfileConfig& profile_cfg) {
  if (patch.nx() < 3 || patch.ny() < 3 || patch.frames.size() != patch.nx() * patch.ny()) {
    throw Error(ErrorKind::EmptyInput, "patch has no interior points (need at least 3x3)");
  }
  VerificationReport rep;
  rep.tol = tol;
  evaluate(rep, patch, analytic);

  if (with_negative_controls) {
    NegativeControl& nc = rep.negative;
    nc.ran = true;
    nc.H_perturbation = 0.01;
    const FormsEvaluator perturbed(analytic.solution(), analytic.map(), analytic.pairing(),
                                   [](double x) { return 1.0 + 0.01 * std::sin(5.0 * x); });
    try {
      const Profile prof = integrate_profile(perturbed, patch.model, patch.x, profile_cfg);
      const SurfacePatch bad = sweep_surface(prof, patch.y);
      VerificationReport r2;
      r2.tol = tol;
      evaluate(r2, bad, perturbed);
      nc.codazzi_max = r2.codazzi_max;
      nc.mixed_partial_max = r2.max_mixed_partial;
      nc.report_failed = !r2.pass;
    } catch (const Error&) {
      // Perturbed data leaving the admissible set is itself a detection.
      nc.report_failed = true;
      nc.codazzi_max = std::numeric_limits<double>::infinity();
    }
    nc.detected = nc.report_failed && std::max(nc.codazzi_max, nc.mixed_partial_max) > 1e-2;
  }
  return rep;
}

RefinementLadder refinement_ladder(const FormsEvaluator& analytic, double x0, double y0, double h,
                                   int levels, const ProfileConfig& profile_cfg) {
  if (levels < 2 || !(h > 0.0)) {
    throw Error(ErrorKind::ConfigError, "refinement ladder needs h > 0 and at least two levels");
  }
  RefinementLadder L;
  const AmbientModel model(analytic.c());
  const FormsSample a = analytic.at(x0);
  const Expected e{a.e_u, a.h11, a.h12, a.h22, a.K, a.H};
  ProfileConfig cfg = profile_cfg;
  for (int k = 0; k < levels; ++k) {
    const double hk = h / std::ldexp(1.0, k);
    cfg.max_step = std::min(profile_cfg.max_step, hk);
    const std::vector<double> xs{x0 - hk, x0, x0 + hk};
    const std::vector<double> ys{y0 - hk, y0, y0 + hk};
    const SurfacePatch patch = sweep_surface(integrate_profile(analytic, model, xs, cfg), ys);
    const PointResidual r = point_residual(patch, 1, 1, e, nullptr, nullptr, nullptr);
    L.levels.push_back({hk, r.metric_rel_err, r.second_form_rel_err, r.K_abs_err, r.H_abs_err,
                        r.mixed_partial});
  }
  for (std::size_t k = 1; k < L.levels.size(); ++k) {
    const LadderLevel& p = L.levels[k - 1];
    const LadderLevel& q = L.levels[k];
    L.metric_orders.push_back(std::log2(p.metric_rel_err / q.metric_rel_err));
    L.second_form_orders.push_back(std::log2(p.second_form_rel_err / q.second_form_rel_err));
    L.curvature_orders.push_back(std::log2(p.K_abs_err / q.K_abs_err));
  }
  return L;
}

IdentityCheck randomized_identity_checks(const FootballParams& params, double c,
                                         std::uint64_t seed, std::size_t n) {
  std::mt19937_64 rng(seed);
  const CurvatureWindow win = CurvatureWindow::from_margin(params);
  std::uniform_real_distribution<double> dK(win.k_lo, win.k_hi);
  std::uniform_real_distribution<double> dH(-3.0, 3.0);
  std::uniform_real_distribution<double> dA(-0.1, 0.1);
  std::uniform_int_distribution<int> dB(0, 1);

  IdentityCheck out;
  std::size_t attempts = 0;
  while (out.samples < n) {
    if (++attempts > 1000 * n + 1000) {
      throw Error(ErrorKind::ConvergenceFailure, "could not draw enough admissible states");
    }
    const double K = dK(rng), H = dH(rng), A = dA(rng);
    const Branch branch = dB(rng) ? Branch::Plus : Branch::Minus;
    const auto adm0 = admissibility_report(params, 0.0, WeingartenConstant{A}, K, H);
    const auto adm = admissibility_report(params, c, WeingartenConstant{A}, K, H);
    if (!(adm0.theta_margin > 1e-10 && adm0.denominator_margin > 1e-6)) continue;
    if (!(adm.theta_margin > 1e-10)) continue;
    ++out.samples;

    const double eps = 4.0 * A * A;
    const WeingartenConstant wa{A};
    const double minus = rhs_thm1(params, 0.0, wa, Branch::Minus, K, H);
    const double plus = rhs_thm1(params, 0.0, wa, Branch::Plus, K, H);
    const double e1 = et_rhs(params, eps, ETForm::ET1, K, H);
    const double e2 = et_rhs(params, eps, ETForm::ET2, K, H);
    out.epsilon_equivalence_max =
        std::max({out.epsilon_equivalence_max, std::abs(e1 - minus) / std::max(1.0, std::abs(minus)),
                  std::abs(e2 - plus) / std::max(1.0, std::abs(plus))});

    const ThetaState th = theta_of_state(params, c, wa, K, H, branch);
    out.theta_unit_max = std::max(
        out.theta_unit_max,
        std::abs(th.sin_theta * th.sin_theta + th.cos_theta * th.cos_theta - 1.0));
    const double e_u = 4.0 * p_of_K(params, K);
    const SecondForm II = second_form_from_hopf(e_u, H, K, c, th.sin_theta, th.cos_theta);
    const double w = H * H - K + c;
    const std::complex<double> Q = 0.25 * std::complex<double>(II.h11 - II.h22, -2.0 * II.h12);
    const double scale = std::max(1.0, e_u * e_u * (std::abs(w) + std::abs(K - c)));
    out.hopf_max = std::max(out.hopf_max, std::abs(4.0 * std::norm(Q) - e_u * e_u * w) / scale);
    out.gauss_det_max = std::max(
        out.gauss_det_max,
        std::abs(II.h11 * II.h22 - II.h12 * II.h12 - e_u * e_u * (K - c)) / scale);
    out.h12_max = std::max(out.h12_max, std::abs(II.h12 + 4.0 * A));
  }
  return out;
}

}  // namespace hcmu
