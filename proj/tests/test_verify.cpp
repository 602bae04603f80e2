#include <doctest.h>

#include <cmath>
#include <functional>
#include <memory>

#include "hcmu/errors.hpp"
#include "hcmu/pipeline.hpp"
#include "hcmu/verify.hpp"

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

// Patch holding positions only, sampled from a parametrisation.
SurfacePatch fixture(const std::function<Vec4(double, double)>& r, double x0, double y0,
                     double h, std::size_t n, double c = 0.0) {
  SurfacePatch p;
  p.model = AmbientModel(c);
  for (std::size_t i = 0; i < n; ++i) p.x.push_back(x0 + h * (static_cast<double>(i) - (n - 1) / 2.0));
  for (std::size_t j = 0; j < n; ++j) p.y.push_back(y0 + h * (static_cast<double>(j) - (n - 1) / 2.0));
  p.frames.resize(n * n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) p.frames[p.index(i, j)].rows.row(0) = r(p.x[i], p.y[j]).transpose();
  }
  return p;
}

Vec4 sphere(double R, double u, double v) {
  return Vec4(R * std::cos(u) * std::cos(v), R * std::cos(u) * std::sin(v), R * std::sin(u), 0.0);
}

std::unique_ptr<Pipeline> solved(double A, double c = 0.0, double s = 0.25) {
  RunConfig cfg;
  cfg.A = A;
  cfg.c = c;
  cfg.s = s;
  auto p = std::make_unique<Pipeline>(cfg);
  p->solve();
  return p;
}

}  // namespace

TEST_CASE("plane fixture has identity first form and zero second form") {
  const SurfacePatch p = fixture([](double x, double y) { return Vec4(x, y, 0.0, 0.0); }, 0.3,
                                 -0.2, 1e-2, 5);
  const Mat2 I = fd_first_form(p, 2, 2);
  CHECK((I - Mat2::Identity()).cwiseAbs().maxCoeff() < 1e-12);
  CHECK(fd_second_form(p, 2, 2).cwiseAbs().maxCoeff() < 1e-12);
  CHECK(fd_normal(p, 2, 2).isApprox(Vec4(0, 0, 1, 0)));
  CHECK(kind_of([&] { fd_first_form(p, 0, 2); }) == ErrorKind::StencilOutOfRange);
  CHECK(kind_of([&] { fd_second_form(p, 2, 4); }) == ErrorKind::StencilOutOfRange);
}

TEST_CASE("round sphere fixture is umbilic") {
  const double R = 2.0;
  const SurfacePatch p =
      fixture([&](double u, double v) { return sphere(R, u, v); }, 0.2, 0.1, 5e-4, 5);
  const Mat2 I = fd_first_form(p, 2, 2);
  const Mat2 II = fd_second_form(p, 2, 2);
  // Normal r_u x r_v points inwards for this parametrisation.
  CHECK((II - I / R).cwiseAbs().maxCoeff() < 1e-6);
  const DiscreteCurvatures k = discrete_curvatures(p, 2, 2);
  CHECK(k.K == doctest::Approx(1.0 / (R * R)).epsilon(1e-6));
  CHECK(std::abs(k.H) == doctest::Approx(1.0 / R).epsilon(1e-6));
  const SurfacePatch unit =
      fixture([&](double u, double v) { return sphere(1.0, u, v); }, 0.2, 0.1, 5e-4, 5);
  CHECK(std::abs(discrete_curvatures(unit, 2, 2).K - 1.0) < 1e-6);
}

TEST_CASE("mirroring flips the normal and negates the second form") {
  auto r = [](double u, double v) {
    return Vec4(u, v, 0.3 * u * u - 0.2 * u * v + 0.5 * v * v * v, 0.0);
  };
  const SurfacePatch a = fixture(r, 0.1, 0.2, 1e-3, 3);
  const SurfacePatch b =
      fixture([&](double u, double v) { Vec4 q = r(u, v); q[2] = -q[2]; return q; }, 0.1, 0.2,
              1e-3, 3);
  CHECK((fd_first_form(a, 1, 1) - fd_first_form(b, 1, 1)).cwiseAbs().maxCoeff() < 1e-14);
  CHECK((fd_second_form(a, 1, 1) + fd_second_form(b, 1, 1)).cwiseAbs().maxCoeff() < 1e-12);
  CHECK(discrete_curvatures(a, 1, 1).H == doctest::Approx(-discrete_curvatures(b, 1, 1).H));
}

TEST_CASE("non-uniform spacing is rejected") {
  SurfacePatch p = fixture([](double x, double y) { return Vec4(x, y, 0.0, 0.0); }, 0, 0, 1e-2, 5);
  p.x[3] += 1e-3;
  CHECK(kind_of([&] { fd_first_form(p, 2, 2); }) == ErrorKind::StencilOutOfRange);
}

TEST_CASE("generated patch at the K = 0.5 row") {
  auto pl = solved(0.0);
  const SurfacePatch patch = pl->surface();
  const std::size_t ix = patch.nx() / 2, iy = patch.ny() / 2;
  REQUIRE(patch.x[ix] == doctest::Approx(0.0));
  const FormsSample f = pl->evaluator().at(patch.x[ix]);
  CHECK(f.K == doctest::Approx(0.5).epsilon(1e-12));
  const Mat2 I = fd_first_form(patch, ix, iy);
  CHECK(std::abs(I(0, 1)) < 1e-6 * f.e_u);
  CHECK(std::abs(I(0, 0) / f.e_u - 1.0) < 1e-5);
  CHECK(std::abs(I(1, 1) / f.e_u - 1.0) < 1e-5);
  const Mat2 II = fd_second_form(patch, ix, iy);
  CHECK(II(0, 0) == doctest::Approx(0.168234).epsilon(1e-4));
  CHECK(std::abs(II(0, 1)) < 1e-4 * f.e_u);
  CHECK(II(1, 1) == doctest::Approx(0.743015).epsilon(1e-4));
  const DiscreteCurvatures k = discrete_curvatures(patch, ix, iy);
  CHECK(std::abs(k.K - 0.5) < 1e-4);
  CHECK(std::abs(k.H - 0.911248) < 1e-4);
  CHECK(mixed_partial_residual(patch, ix, iy) < 1e-5);
}

TEST_CASE("curved patches include the +c shift") {
  for (auto [c, s] : {std::pair{1.0, 1.0}, std::pair{-1.0, 2.0}}) {
    auto pl = solved(0.02, c, s);
    const SurfacePatch patch = pl->surface();
    for (std::size_t ix = 10; ix < patch.nx() - 1; ix += 45) {
      const DiscreteCurvatures k = discrete_curvatures(patch, ix, 7);
      const FormsSample f = pl->evaluator().at(patch.x[ix]);
      CHECK(std::abs(k.K - f.K) < 1e-4);
      CHECK(std::abs(k.H - f.H) < 1e-4);
    }
  }
}

TEST_CASE("refinement ladder is second order") {
  auto pl = solved(0.05);
  const RefinementLadder lad = refinement_ladder(pl->evaluator(), 0.01, 0.0, 2e-2, 3);
  REQUIRE(lad.levels.size() == 3);
  CHECK(lad.levels[1].h == doctest::Approx(1e-2));
  for (const auto* orders : {&lad.metric_orders, &lad.second_form_orders, &lad.curvature_orders}) {
    REQUIRE(orders->size() == 2);
    for (double o : *orders) CHECK(o == doctest::Approx(2.0).epsilon(0.1));
  }
}

TEST_CASE("run_report passes nominal data and fails perturbed data") {
  for (auto [A, c, s] : {std::tuple{0.0, 0.0, 0.25}, std::tuple{0.05, 0.0, 0.25},
                         std::tuple{0.02, 1.0, 1.0}}) {
    auto pl = solved(A, c, s);
    const VerificationReport rep = run_report(pl->surface(), pl->evaluator(), {}, true);
    CHECK(rep.pass);
    CHECK(rep.max_metric_rel < 1e-5);
    CHECK(rep.max_second_form_rel < 1e-4);
    CHECK(rep.max_K_abs < 1e-4);
    CHECK(rep.max_H_abs < 1e-4);
    CHECK(rep.codazzi_max < 1e-6);
    CHECK(rep.max_drift < 1e-8);
    CHECK(rep.expected_h12 == -4.0 * A + 0.0);
    CHECK(rep.h12_max_dev < 1e-4);
    CHECK(rep.reconstructed.is_weingarten);
    CHECK(rep.negative.ran);
    CHECK(rep.negative.report_failed);
    CHECK(rep.negative.detected);
    CHECK(std::max(rep.negative.codazzi_max, rep.negative.mixed_partial_max) > 1e-2);
  }
}

TEST_CASE("run_report rejects an empty patch") {
  auto pl = solved(0.0);
  CHECK(kind_of([&] { run_report(SurfacePatch{}, pl->evaluator()); }) == ErrorKind::EmptyInput);
}

TEST_CASE("patch hash identifies positions") {
  auto pl = solved(0.05);
  SurfacePatch a = pl->surface();
  const SurfacePatch b = pl->surface();
  CHECK(patch_hash(a) == patch_hash(b));
  CHECK(patch_hash(a).size() == 16);
  a.frames[7].rows(0, 0) += 1e-15;
  CHECK(patch_hash(a) != patch_hash(b));
}

TEST_CASE("randomized identity checks") {
  const FootballParams P = validate_params(1.0, 0.0);
  const IdentityCheck a = randomized_identity_checks(P, 0.0, 42, 2000);
  const IdentityCheck b = randomized_identity_checks(P, 0.0, 42, 2000);
  CHECK(a.samples == 2000);
  CHECK(a.epsilon_equivalence_max < 1e-12);
  CHECK(a.theta_unit_max < 1e-12);
  CHECK(a.hopf_max < 1e-12);
  CHECK(a.gauss_det_max < 1e-12);
  CHECK(a.h12_max < 1e-12);
  CHECK(a.hopf_max == b.hopf_max);
  const IdentityCheck s = randomized_identity_checks(validate_params(2.0, -0.5), 1.0, 7, 2000);
  CHECK(s.gauss_det_max < 1e-12);
}
