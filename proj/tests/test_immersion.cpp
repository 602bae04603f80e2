#include <doctest.h>

#include <unsupported/Eigen/MatrixFunctions>

#include <cmath>
#include <memory>
#include <random>

#include "hcmu/errors.hpp"
#include "hcmu/expm.hpp"
#include "hcmu/immersion.hpp"
#include "hcmu/pipeline.hpp"
#include "oracles.hpp"

using namespace hcmu;

namespace {

ErrorKind kind_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("expected an hcmu::Error");
  return ErrorKind::IoError;
}

std::unique_ptr<Pipeline> solved(double A, double c = 0.0, double s = 0.25) {
  RunConfig cfg;
  cfg.A = A;
  cfg.c = c;
  cfg.s = s;
  cfg.x_grid = {-0.1, 0.1, 101};
  cfg.y_grid = {-0.05, 0.05, 51};
  auto p = std::make_unique<Pipeline>(cfg);
  p->solve();
  return p;
}

// Target Gram matrix of the rows (r, r_x, r_y, n) under the ambient metric.
Mat4 target_gram(double c, double e_u) {
  Mat4 G = Mat4::Zero();
  G(0, 0) = c == 0.0 ? 0.0 : 1.0 / c;
  G(1, 1) = e_u;
  G(2, 2) = e_u;
  G(3, 3) = 1.0;
  return G;
}

double max_diff(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  return (a - b).cwiseAbs().maxCoeff();
}

}  // namespace

TEST_CASE("expm agrees with Taylor and Eigen's reference") {
  std::mt19937_64 rng(7);
  std::normal_distribution<double> N(0.0, 1.0);
  for (double scale : {1e-3, 0.1, 1.0, 4.0, 30.0}) {
    for (int trial = 0; trial < 5; ++trial) {
      Mat4 M;
      for (int i = 0; i < 16; ++i) M.data()[i] = scale * N(rng) / 2.0;
      const Mat4 E = expm(M);
      const Eigen::MatrixXd T = oracle::taylor_expm(M);
      const Mat4 R = M.exp();
      const double norm = R.cwiseAbs().maxCoeff();
      CHECK(max_diff(E, T) <= 1e-12 * std::max(1.0, norm));
      CHECK(max_diff(E, R) <= 1e-12 * std::max(1.0, norm));
    }
  }
  CHECK(max_diff(expm(Mat4::Zero()), Mat4::Identity()) == 0.0);
}

TEST_CASE("y-flow obeys the group law") {
  auto p = solved(0.05);
  const FrameCoefficients k = FrameCoefficients::from(p->evaluator().at(0.03));
  const Mat4 V = y_generator(k, 0.0);
  for (auto [a, b] : {std::pair{0.1, 0.2}, std::pair{-0.3, 0.05}, std::pair{1.0, 1.5}}) {
    CHECK(max_diff(expm(((a + b) * V).eval()), expm((a * V).eval()) * expm((b * V).eval())) <
          1e-10);
  }
}

TEST_CASE("ambient models") {
  CHECK(AmbientModel(0.0).kind() == AmbientKind::Flat3);
  CHECK(AmbientModel(1.0).kind() == AmbientKind::Sphere4);
  CHECK(AmbientModel(-1.0).kind() == AmbientKind::Hyperboloid4);
  CHECK(AmbientModel(-1.0).metric_diagonal()[3] == -1.0);
  CHECK(AmbientModel(0.0).dimension() == 3);
  const Vec4 a(1, 2, 3, 4);
  CHECK(AmbientModel(-1.0).inner(a, a) == 14.0 - 16.0);
  CHECK(kind_of([] { AmbientModel m(NAN); }) == ErrorKind::ConfigError);
}

TEST_CASE("x system reduces to r_xx = h11 n for flat coefficients") {
  const FrameCoefficients k{0.5, 0.0, 0.3, 0.0, 0.7};
  const Mat4 M = x_system(k, 0.0);
  CHECK(M(0, 1) == 1.0);
  CHECK(M(1, 0) == 0.0);
  CHECK(M(1, 1) == 0.0);
  CHECK(M(1, 2) == 0.0);
  CHECK(M(1, 3) == 0.3);
  CHECK(kind_of([] { x_system({0.0, 0.0, 0.3, 0.0, 0.7}, 0.0); }) == ErrorKind::DegenerateMetric);
  CHECK(kind_of([] { y_generator({-1.0, 0.0, 0.3, 0.0, 0.7}, 0.0); }) ==
        ErrorKind::DegenerateMetric);
}

TEST_CASE("structure equations preserve the frame constraints") {
  // With Gram matrix G = S eta S^T, dG/dx = M G + G M^T must equal the
  // derivative of the target constraints, and dG/dy must vanish.
  for (double c : {-1.0, 0.0, 1.0}) {
    const FrameCoefficients k{0.37, 0.21, 0.15, -0.04, 0.66};
    const Mat4 G = target_gram(c, k.e_u);
    Mat4 dG = Mat4::Zero();
    dG(1, 1) = k.u_x * k.e_u;
    dG(2, 2) = k.u_x * k.e_u;
    const Mat4 M = x_system(k, c);
    const Mat4 V = y_generator(k, c);
    const Mat4 gx = M * G + G * M.transpose();
    const Mat4 gy = V * G + G * V.transpose();
    if (c == 0.0) {
      // Only the r_x, r_y, n block is constrained in flat space.
      CHECK(max_diff(gx.bottomRightCorner<3, 3>(), dG.bottomRightCorner<3, 3>()) < 1e-15);
      CHECK(gy.bottomRightCorner<3, 3>().cwiseAbs().maxCoeff() < 1e-15);
    } else {
      CHECK(max_diff(gx, dG) < 1e-15);
      CHECK(gy.cwiseAbs().maxCoeff() < 1e-15);
    }
  }
}

TEST_CASE("canonical frames satisfy the constraints") {
  const FrameState f0 = canonical_frame(AmbientModel(0.0), 0.25);
  CHECK(f0.r() == Vec4::Zero());
  CHECK(f0.r_x() == Vec4(0.5, 0, 0, 0));
  CHECK(f0.r_y() == Vec4(0, 0.5, 0, 0));
  CHECK(f0.n() == Vec4(0, 0, 1, 0));
  CHECK(constraint_drift(f0, AmbientModel(0.0), 0.25) == 0.0);
  const FrameState f1 = canonical_frame(AmbientModel(4.0), 0.25);
  CHECK(f1.r() == Vec4(0, 0, 0, 0.5));
  CHECK(constraint_drift(f1, AmbientModel(4.0), 0.25) < 1e-16);
  CHECK(constraint_drift(canonical_frame(AmbientModel(-1.0), 0.5), AmbientModel(-1.0), 0.5) <
        1e-15);
}

TEST_CASE("repair restores a perturbed frame") {
  for (double c : {-1.0, 0.0, 1.0}) {
    const AmbientModel m(c);
    FrameState f = canonical_frame(m, 0.3);
    f.rows(1, 2) += 1e-4;
    f.rows(3, 0) -= 2e-4;
    f.rows(0, 1) += 1e-4;
    CHECK(constraint_drift(f, m, 0.3) > 1e-5);
    repair_frame(f, m, 0.3);
    CHECK(constraint_drift(f, m, 0.3) < 1e-14);
  }
}

TEST_CASE("profile integration keeps drift below 1e-8") {
  for (auto [A, c, s] : {std::tuple{0.0, 0.0, 0.25}, std::tuple{0.05, 0.0, 0.25},
                         std::tuple{0.0, 1.0, 1.0}, std::tuple{0.02, -1.0, 2.0}}) {
    auto p = solved(A, c, s);
    const std::vector<double> xs = GridSpec{-0.1, 0.1, 101}.values();
    const AmbientModel m(c);
    const Profile prof = integrate_profile(p->evaluator(), m, xs);
    CHECK(prof.base_index == 50);
    for (std::size_t i = 0; i < xs.size(); ++i) {
      CHECK(constraint_drift(prof.frames[i], m, prof.forms[i].e_u) < 1e-8);
      if (c != 0.0) CHECK(std::abs(m.inner(prof.frames[i].r(), prof.frames[i].r()) - 1.0 / c) < 1e-8);
    }
  }
}

TEST_CASE("profile tangent matches finite differences of positions") {
  auto p = solved(0.05);
  const std::vector<double> xs = GridSpec{-0.1, 0.1, 2001}.values();
  const Profile prof = integrate_profile(p->evaluator(), AmbientModel(0.0), xs);
  for (std::size_t i = 100; i < 2000; i += 300) {
    const Vec4 d = (prof.frames[i + 1].r() - prof.frames[i - 1].r()) / (xs[i + 1] - xs[i - 1]);
    CHECK((d - prof.frames[i].r_x()).norm() < 1e-6);
  }
}

TEST_CASE("constraint blow-up and repair policy") {
  auto p = solved(0.05);
  const std::vector<double> xs = GridSpec{-0.1, 0.1, 11}.values();
  ProfileConfig tight;
  tight.blowup_threshold = 1e-30;
  tight.repair_threshold = 1e-31;
  CHECK(kind_of([&] { integrate_profile(p->evaluator(), AmbientModel(0.0), xs, tight); }) ==
        ErrorKind::ConstraintBlowup);
  ProfileConfig eager;
  eager.repair_threshold = 0.0;
  const Profile prof = integrate_profile(p->evaluator(), AmbientModel(0.0), xs, eager);
  CHECK(prof.repairs > 0);
  ProfileConfig bad;
  bad.initial = canonical_frame(AmbientModel(0.0), 1.0);
  CHECK(kind_of([&] { integrate_profile(p->evaluator(), AmbientModel(0.0), xs, bad); }) ==
        ErrorKind::ConfigError);
}

TEST_CASE("sweep with y = 0 reproduces the profile") {
  auto p = solved(0.05);
  const std::vector<double> xs = GridSpec{-0.1, 0.1, 21}.values();
  const Profile prof = integrate_profile(p->evaluator(), AmbientModel(0.0), xs);
  const std::vector<double> y0{0.0};
  const SurfacePatch patch = sweep_surface(prof, y0);
  for (std::size_t i = 0; i < xs.size(); ++i) {
    CHECK(patch.position(i, 0) == prof.frames[i].r());
  }
}

TEST_CASE("flat y-flow is a rigid motion") {
  auto p = solved(0.05);
  const SurfacePatch patch = p->surface();
  double worst = 0.0;
  for (std::size_t a = 0; a + 7 < patch.nx(); a += 13) {
    const std::size_t b = a + 7;
    const double d0 = (patch.position(a, 0) - patch.position(b, 0)).norm();
    for (std::size_t j = 0; j < patch.ny(); ++j) {
      worst = std::max(worst, std::abs((patch.position(a, j) - patch.position(b, j)).norm() - d0));
    }
  }
  CHECK(worst < 1e-8);
  CHECK(resweep_error(patch, 0) < 1e-8);
  CHECK(resweep_error(patch, patch.nx() - 1) < 1e-8);
  CHECK(patch.max_drift < 1e-8);
}

TEST_CASE("curved patches stay on the space form") {
  for (auto [c, s] : {std::pair{1.0, 1.0}, std::pair{-1.0, 2.0}}) {
    auto p = solved(0.0, c, s);
    const SurfacePatch patch = p->surface();
    const AmbientModel& m = patch.model;
    double worst = 0.0;
    for (std::size_t i = 0; i < patch.nx(); ++i) {
      for (std::size_t j = 0; j < patch.ny(); ++j) {
        const Vec4 r = patch.position(i, j);
        worst = std::max(worst, std::abs(m.inner(r, r) - 1.0 / c));
      }
    }
    CHECK(worst < 1e-8);
    CHECK(resweep_error(patch, 5) < 1e-8);
    CHECK(patch.max_drift < 1e-8);
    const AmbientMotion mo = motion_from_row(patch, 10, 40);
    CHECK((mo.apply(patch.position(10, 25)) - patch.position(10, 40)).norm() < 1e-12);
  }
}

TEST_CASE("rigid placement moves the whole patch") {
  auto p = solved(0.05);
  const std::vector<double> xs = GridSpec{-0.1, 0.1, 21}.values();
  const std::vector<double> ys = GridSpec{-0.05, 0.05, 11}.values();
  const AmbientModel m(0.0);
  const Profile base = integrate_profile(p->evaluator(), m, xs);
  const SurfacePatch a = sweep_surface(base, ys);

  Eigen::Matrix3d R = Eigen::AngleAxisd(0.7, Eigen::Vector3d(1, 2, 3).normalized()).toRotationMatrix();
  Mat4 L = Mat4::Identity();
  L.topLeftCorner<3, 3>() = R;
  const Vec4 t(0.3, -1.0, 2.0, 0.0);
  ProfileConfig cfg;
  FrameState f = base.frames[base.base_index];
  f.rows = (f.rows * L.transpose()).eval();
  f.rows.row(0) += t.transpose();
  cfg.initial = f;
  const SurfacePatch b = sweep_surface(integrate_profile(p->evaluator(), m, xs, cfg), ys);
  double worst = 0.0;
  for (std::size_t i = 0; i < a.nx(); ++i) {
    for (std::size_t j = 0; j < a.ny(); ++j) {
      worst = std::max(worst, (L * a.position(i, j) + t - b.position(i, j)).norm());
    }
  }
  CHECK(worst < 1e-10);
}
