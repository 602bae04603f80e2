#include <doctest.h>

#include <cmath>
#include <memory>
#include <numbers>

#include "hcmu/errors.hpp"
#include "hcmu/fundamental_forms.hpp"
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

const FootballParams P10 = validate_params(1.0, 0.0);

double H_mid() {
  const double poly = 53.0 / 192.0;
  return (0.5 * 0.125 / std::sqrt(poly) + std::sqrt(poly)) / (2.0 * std::sqrt(0.125));
}

std::unique_ptr<Pipeline> solved(double A, double c = 0.0, double s = 0.25,
                                 GridSpec x = {-0.1, 0.1, 201}) {
  RunConfig cfg;
  cfg.A = A;
  cfg.c = c;
  cfg.s = s;
  cfg.x_grid = x;
  auto p = std::make_unique<Pipeline>(cfg);
  p->solve();
  return p;
}

double max_abs(const std::vector<double>& v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

}  // namespace

TEST_CASE("theta for A = 0 is exactly 0 or pi") {
  const ThetaState plus = theta_of_state(P10, 0.0, {0.0}, 0.5, H_mid(), Branch::Plus);
  CHECK(plus.sin_theta == 0.0);
  CHECK(plus.cos_theta == -1.0);
  CHECK(plus.theta == std::numbers::pi);
  const ThetaState minus = theta_of_state(P10, 0.0, {0.0}, 0.5, H_mid(), Branch::Minus);
  CHECK(minus.cos_theta == 1.0);
  CHECK(minus.theta == 0.0);
  const ThetaState flipped = theta_of_state(P10, 0.0, {0.0}, 0.5, H_mid(), Branch::Plus,
                                            ThetaPairing::PlusPositiveCos);
  CHECK(flipped.theta == 0.0);
}

TEST_CASE("theta for A != 0") {
  const double H = H_mid();
  const double w = H * H - 0.5;
  const ThetaState t = theta_of_state(P10, 0.0, {0.05}, 0.5, H, Branch::Plus);
  CHECK(t.sin_theta == doctest::Approx(0.05 / (0.125 * std::sqrt(w))).epsilon(1e-14));
  CHECK(t.sin_theta == doctest::Approx(0.695918).epsilon(1e-4));
  CHECK(t.cos_theta < 0.0);
  CHECK(std::abs(t.sin_theta * t.sin_theta + t.cos_theta * t.cos_theta - 1.0) < 1e-12);
  CHECK(t.theta == doctest::Approx(std::atan2(t.sin_theta, t.cos_theta)));
  CHECK(kind_of([&] { theta_of_state(P10, 0.0, {0.2}, 0.5, H, Branch::Plus); }) ==
        ErrorKind::ThetaSaturation);
  CHECK(kind_of([&] { theta_of_state(P10, 0.0, {0.0}, 0.5, 0.5, Branch::Plus); }) ==
        ErrorKind::UmbilicReached);
}

TEST_CASE("second form at the reference state") {
  const double H = H_mid();
  const SecondForm f = second_form_from_hopf(0.5, H, 0.5, 0.0, 0.0, -1.0);
  CHECK(f.h11 == doctest::Approx(0.168234).epsilon(1e-5));
  CHECK(f.h22 == doctest::Approx(0.743015).epsilon(1e-5));
  CHECK(f.h12 == 0.0);
  CHECK(f.h11 * f.h22 - f.h12 * f.h12 == doctest::Approx(0.125).epsilon(1e-12));
}

TEST_CASE("h12 equals -4A since e^u = 4p") {
  const double H = H_mid();
  for (double A : {0.01, 0.05, -0.03}) {
    const ThetaState t = theta_of_state(P10, 0.0, {A}, 0.5, H, Branch::Plus);
    const SecondForm f = second_form_from_hopf(0.5, H, 0.5, 0.0, t.sin_theta, t.cos_theta);
    CHECK(f.h12 == doctest::Approx(-4.0 * A).epsilon(1e-13));
  }
}

TEST_CASE("algebraic identities on generated grids") {
  for (auto [A, c, s] : {std::tuple{0.0, 0.0, 0.25}, std::tuple{0.05, 0.0, 0.25},
                         std::tuple{0.0, 1.0, 1.0}, std::tuple{0.02, -1.0, 2.0}}) {
    auto p = solved(A, c, s);
    const FormsGrid g = p->forms();
    const GaussResidual gr = gauss_residual(g, c);
    CHECK(gr.max_abs() < 1e-12);
    for (const FormsSample& f : g.samples) {
      CHECK(std::abs(f.h12 + 4.0 * A) < 1e-10);
      CHECK(std::abs((f.h11 + f.h22) / (2.0 * f.e_u) - f.H) < 1e-12);
      CHECK(std::abs(f.kp1 * f.kp2 - (f.K - c)) < 1e-9);
      CHECK(std::abs(4.0 * std::norm(f.Q) - f.e_u * f.e_u * (f.H * f.H - f.K + c)) < 1e-12);
    }
  }
}

TEST_CASE("gauss residual sees a perturbed h11") {
  auto p = solved(0.0);
  FormsGrid g = p->forms();
  const FormsSample ref = g.samples[50];
  g.samples[50].h11 += 1e-3;
  const GaussResidual gr = gauss_residual(g, 0.0);
  CHECK(gr.determinant[50] == doctest::Approx(ref.h22 * 1e-3).epsilon(1e-9));
  CHECK(std::abs(gr.determinant[49]) < 1e-12);
}

TEST_CASE("u_x matches a finite difference of ln e^u") {
  auto p = solved(0.0);
  const FormsEvaluator& ev = p->evaluator();
  for (double x = -0.08; x <= 0.08; x += 0.02) {
    const double d =
        oracle::central_diff([&](double s) { return std::log(ev.at(s).e_u); }, x, 1e-5);
    CHECK(std::abs(ev.at(x).u_x - d) < 1e-6);
  }
}

TEST_CASE("forms outside the solved range name x") {
  auto p = solved(0.05);
  try {
    p->evaluator().at(30.0);
    FAIL("expected DomainError");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::DomainError);
    CHECK(std::string(e.what()).find("x=") != std::string::npos);
  }
}

TEST_CASE("codazzi residual of solver output") {
  for (double A : {0.0, 0.05}) {
    auto p = solved(A);
    const CodazziResidual r = codazzi_residual(p->forms());
    CHECK(r.max_abs() < 1e-6);
    if (A == 0.0) CHECK(max_abs(r.r1) == 0.0);
  }
}

TEST_CASE("codazzi residual detects perturbed H") {
  auto p = solved(0.0);
  const FormsEvaluator bad(p->solution(), p->map(), p->pairing(),
                           [](double x) { return 1.0 + 0.01 * std::sin(5.0 * x); });
  const std::vector<double> xs = GridSpec{-0.1, 0.1, 201}.values();
  CHECK(codazzi_residual(build_forms(bad, xs)).max_abs() > 1e-2);
}

TEST_CASE("codazzi residual is second order in h") {
  auto p = solved(0.05, 0.0, 0.25, {-0.3, 0.3, 61});
  std::vector<double> res;
  for (double h : {1e-2, 5e-3, 2.5e-3}) {
    const std::size_t n = static_cast<std::size_t>(std::lround(0.6 / h)) + 1;
    res.push_back(codazzi_residual(build_forms(p->evaluator(), GridSpec{-0.3, 0.3, n}.values()))
                      .max_abs() / (h * h));
  }
  CHECK(res[1] == doctest::Approx(res[0]).epsilon(0.1));
  CHECK(res[2] == doctest::Approx(res[1]).epsilon(0.1));
}

TEST_CASE("codazzi residual requires a uniform grid") {
  auto p = solved(0.0);
  const std::vector<double> xs{-0.1, -0.05, 0.0, 0.1};
  CHECK_THROWS_AS(codazzi_residual(build_forms(p->evaluator(), xs)), Error);
}

TEST_CASE("pairing selection prefers the consistent sign") {
  auto p = solved(0.05);
  const std::vector<double> xs = GridSpec{-0.05, 0.05, 101}.values();
  CHECK(select_theta_pairing(p->solution(), p->map(), xs) == ThetaPairing::PlusNegativeCos);
  const FormsGrid wrong =
      build_forms(p->solution(), p->map(), xs, ThetaPairing::PlusPositiveCos);
  CHECK(codazzi_residual(wrong).max_abs() > 1e-3);
}

TEST_CASE("classifier on generated and synthetic grids") {
  const std::vector<double> y = GridSpec{-0.05, 0.05, 11}.values();
  for (double A : {0.0, 0.05}) {
    auto p = solved(A);
    const FormDataGrid g = extrude(p->forms(), y);
    const ClassifyResult r = classify_weingarten(g);
    CHECK(r.is_weingarten);
    CHECK(r.H_depends_only_on_x);
    CHECK(r.reconstruction_certified);
  }

  auto p = solved(0.05);
  FormDataGrid tilted = extrude(p->forms(), y);
  for (std::size_t i = 0; i < tilted.nx(); ++i) {
    for (std::size_t j = 0; j < tilted.ny(); ++j) tilted.h12[tilted.index(i, j)] += 0.01 * y[j];
  }
  CHECK_FALSE(classify_weingarten(tilted).is_weingarten);

  FormDataGrid warped = extrude(p->forms(), y);
  warped.e_u[warped.index(3, 4)] *= 1.01;
  CHECK(kind_of([&] { classify_weingarten(warped); }) == ErrorKind::MetricShapeMismatch);

  CHECK(kind_of([] { classify_weingarten(FormDataGrid{}); }) == ErrorKind::EmptyInput);
}

TEST_CASE("classifier certifies H from h11 = f(x) and constant h12") {
  // External data: HCMU metric, h12 = -0.2, h11 an arbitrary function of x,
  // h22 supplied with a y-dependent error that the reconstruction ignores.
  FormDataGrid g;
  g.resize(21, 9);
  for (std::size_t i = 0; i < g.nx(); ++i) g.x[i] = -0.1 + 0.01 * i;
  for (std::size_t j = 0; j < g.ny(); ++j) g.y[j] = -0.04 + 0.01 * j;
  const XOfKMap map(P10, CurvatureWindow::from_margin(P10), KAtZero{0.5});
  for (std::size_t i = 0; i < g.nx(); ++i) {
    const double K = map.K_of_x(g.x[i]);
    const double e_u = 4.0 * oracle::p_expanded(1.0, 0.0, K);
    const double h11 = 0.3 + 0.5 * g.x[i] * g.x[i];
    for (std::size_t j = 0; j < g.ny(); ++j) {
      const std::size_t k = g.index(i, j);
      g.K[k] = K;
      g.e_u[k] = e_u;
      g.h11[k] = h11;
      g.h12[k] = -0.2;
      g.h22[k] = (e_u * e_u * K + 0.04) / h11 + 1e-3 * g.y[j];
    }
  }
  const ClassifyResult r = classify_weingarten(g);
  CHECK(r.is_weingarten);
  CHECK(r.reconstruction_certified);
  CHECK(r.reconstruction_y_spread < 1e-6);
  CHECK_FALSE(r.H_depends_only_on_x);
}
