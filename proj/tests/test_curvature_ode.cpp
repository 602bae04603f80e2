#include <doctest.h>

#include <cmath>
#include <vector>

#include "hcmu/curvature_ode.hpp"
#include "hcmu/errors.hpp"
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

// Upper closed form at K = 0.5 for (1,0), c = 0, s = 0.25, by hand:
// poly = 53/192, p = 1/8, H = -((-K) p / sqrt(poly) - sqrt(poly)) / (2 sqrt(p)).
double H_mid() {
  const double poly = 53.0 / 192.0;
  return (0.5 * 0.125 / std::sqrt(poly) + std::sqrt(poly)) / (2.0 * std::sqrt(0.125));
}

// Textbook RK4 on dH/dK = f(K, H), fixed step.
double rk4(const std::function<double(double, double)>& f, double K0, double H0, double K1,
           int steps) {
  const double h = (K1 - K0) / steps;
  double K = K0, H = H0;
  for (int i = 0; i < steps; ++i) {
    const double a = f(K, H);
    const double b = f(K + 0.5 * h, H + 0.5 * h * a);
    const double c = f(K + 0.5 * h, H + 0.5 * h * b);
    const double d = f(K + h, H + h * c);
    H += h / 6.0 * (a + 2.0 * b + 2.0 * c + d);
    K += h;
  }
  return H;
}

}  // namespace

TEST_CASE("rhs_thm1 at the reference state") {
  const double H = H_mid();
  CHECK(H == doctest::Approx(0.911248).epsilon(1e-5));
  const double w = H * H - 0.5;
  const double num = 0.125 - 2.0 / 12.0 * w;
  const double plus = num / (2.0 * (0.125 * H + 0.125 * std::sqrt(w)));
  const double minus = num / (2.0 * (0.125 * H - 0.125 * std::sqrt(w)));
  const double rp = rhs_thm1(P10, 0.0, {0.0}, Branch::Plus, 0.5, H);
  const double rm = rhs_thm1(P10, 0.0, {0.0}, Branch::Minus, 0.5, H);
  CHECK(rp == doctest::Approx(plus).epsilon(1e-14));
  CHECK(rm == doctest::Approx(minus).epsilon(1e-14));
  CHECK(rp == doctest::Approx(0.188255).epsilon(1e-4));
  CHECK(rm == doctest::Approx(0.831432).epsilon(1e-4));
}

TEST_CASE("rhs_thm1 numerator zero and error states") {
  // H^2 - K = p / (2p') = 0.75 at K = 0.5.
  CHECK(std::abs(rhs_thm1(P10, 0.0, {0.0}, Branch::Plus, 0.5, std::sqrt(1.25))) < 1e-15);
  CHECK(kind_of([] { rhs_thm1(P10, 0.0, {0.0}, Branch::Plus, 0.5, std::sqrt(0.4)); }) ==
        ErrorKind::UmbilicReached);
  CHECK(kind_of([] { rhs_thm1(P10, 0.0, {0.2}, Branch::Plus, 0.5, H_mid()); }) ==
        ErrorKind::ThetaSaturation);
}

TEST_CASE("admissibility report") {
  const AdmissibilityReport r = admissibility_report(P10, 0.0, {0.0}, 0.5, 0.9112);
  CHECK(r.umbilic_free);
  CHECK(r.theta_defined);
  CHECK(r.denominator_ok);
  CHECK(r.umbilic_margin == doctest::Approx(0.3304).epsilon(1e-3));
  CHECK(r.theta_margin == doctest::Approx(0.00516).epsilon(1e-2));
  CHECK(r.denominator_margin == doctest::Approx(0.0841).epsilon(1e-2));
  CHECK_FALSE(admissibility_report(P10, 0.0, {0.0}, 0.5, std::sqrt(0.5) * 0.999).umbilic_free);
  // |A| = p sqrt(w) exactly: defined, zero margin.
  const double H = 0.75;
  const double A = 0.125 * std::sqrt(H * H - 0.5);  // 0.03125, exact
  const AdmissibilityReport edge = admissibility_report(P10, 0.0, {A}, 0.5, H);
  CHECK(edge.theta_defined);
  CHECK(edge.theta_margin == 0.0);
}

TEST_CASE("closed form values and sign") {
  const CurvatureWindow w = CurvatureWindow::from_margin(P10);
  CHECK(closed_form_delta(P10) == doctest::Approx(1.0 / 6.0));
  const ClosedFormParams up = make_closed_form(P10, 0.0, 0.25, ClosedFormSign::Upper, w);
  const ClosedFormParams lo = make_closed_form(P10, 0.0, 0.25, ClosedFormSign::Lower, w);
  CHECK(closed_form_poly(0.0, up, 0.5) == doctest::Approx(53.0 / 192.0).epsilon(1e-15));
  CHECK(closed_form_H_A0(P10, 0.0, up, 0.5) == doctest::Approx(H_mid()).epsilon(1e-15));
  CHECK(closed_form_H_A0(P10, 0.0, lo, 0.5) == -closed_form_H_A0(P10, 0.0, up, 0.5));
  CHECK(kind_of([&] { make_closed_form(P10, 0.0, -0.02, ClosedFormSign::Upper, w); }) ==
        ErrorKind::DomainError);
  const ClosedFormParams bad{-0.0260416666666667, 1.0 / 6.0, ClosedFormSign::Upper};
  CHECK(kind_of([&] { closed_form_H_A0(P10, 0.0, bad, 0.3); }) == ErrorKind::DomainError);
}

TEST_CASE("closed form satisfies the ODE on its paired branch") {
  struct Case {
    double k1, k2, c, s;
  };
  for (const Case cs : {Case{1, 0, 0, 0.25}, Case{1, 0, 1, 1}, Case{1, 0, -1, 2},
                        Case{2, -0.5, 0, 2}, Case{1, -0.5, 0, 0.5}}) {
    const FootballParams P = validate_params(cs.k1, cs.k2);
    const CurvatureWindow w = CurvatureWindow::from_margin(P, 0.02);
    for (ClosedFormSign sign : {ClosedFormSign::Upper, ClosedFormSign::Lower}) {
      const ClosedFormParams cf = make_closed_form(P, cs.c, cs.s, sign, w);
      auto H = [&](double K) { return closed_form_H_A0(P, cs.c, cf, K); };
      for (int i = 0; i <= 50; ++i) {
        const double K = w.k_lo + w.width() * i / 50.0;
        const Branch b = pair_closed_form_branch(P, cs.c, cf, K);
        const double d = oracle::richardson_diff(H, K, 1e-4 * (cs.k1 - cs.k2));
        const double r = rhs_thm1(P, cs.c, {0.0}, b, K, H(K));
        CHECK(std::abs(d - r) <= 1e-6 * std::max(1.0, std::abs(r)));
      }
    }
  }
}

TEST_CASE("epsilon forms") {
  const double H = H_mid();
  CHECK(et_rhs(P10, 0.0, ETForm::ET1, 0.5, H) ==
        doctest::Approx(rhs_thm1(P10, 0.0, {0.0}, Branch::Minus, 0.5, H)).epsilon(1e-12));
  CHECK(et_rhs(P10, 0.0, ETForm::ET2, 0.5, H) ==
        doctest::Approx(rhs_thm1(P10, 0.0, {0.0}, Branch::Plus, 0.5, H)).epsilon(1e-12));
  const double A = 0.03;
  CHECK(et_rhs(P10, 4 * A * A, ETForm::ET1, 0.5, H) ==
        doctest::Approx(rhs_thm1(P10, 0.0, {A}, Branch::Minus, 0.5, H)).epsilon(1e-12));
  CHECK(kind_of([&] { et_rhs(P10, -1e-3, ETForm::ET1, 0.5, H); }) == ErrorKind::DomainError);
  CHECK(kind_of([&] { et_rhs(P10, 1.0, ETForm::ET2, 0.5, H); }) == ErrorKind::DomainError);
}

TEST_CASE("solver configuration is validated") {
  SolverConfig cfg = SolverConfig::make(P10, 0.5, std::sqrt(0.5), 0.0, {0.0}, Branch::Plus);
  CHECK(kind_of([&] { validate_solver_config(cfg, P10); }) == ErrorKind::UmbilicReached);
  cfg = SolverConfig::make(P10, 0.5, H_mid(), 0.0, {0.2}, Branch::Plus);
  CHECK(kind_of([&] { validate_solver_config(cfg, P10); }) == ErrorKind::ThetaSaturation);
  cfg = SolverConfig::make(P10, 0.9999, H_mid(), 0.0, {0.0}, Branch::Plus);
  CHECK(kind_of([&] { validate_solver_config(cfg, P10); }) == ErrorKind::ConfigError);
  cfg = SolverConfig::make(P10, 0.5, H_mid(), 0.0, {0.0}, Branch::Plus);
  cfg.rel_tol = 0.0;
  CHECK(kind_of([&] { validate_solver_config(cfg, P10); }) == ErrorKind::ConfigError);
  cfg = SolverConfig::make(P10, 0.5, H_mid(), 0.0, {0.0}, Branch::Plus);
  CHECK_NOTHROW(validate_solver_config(cfg, P10));
}

TEST_CASE("solve_H reproduces the closed form") {
  const CurvatureWindow w = CurvatureWindow::from_margin(P10);
  const ClosedFormParams cf = make_closed_form(P10, 0.0, 0.25, ClosedFormSign::Upper, w);
  const Branch b = pair_closed_form_branch(P10, 0.0, cf, 0.5);
  const SolverConfig cfg = SolverConfig::make(P10, 0.5, H_mid(), 0.0, {0.0}, b);
  const HSolution sol = solve_H(cfg, P10);
  CHECK(sol.events().empty());
  CHECK(sol.K_min() == doctest::Approx(w.k_lo));
  CHECK(sol.K_max() == doctest::Approx(w.k_hi));
  double node = 0.0, dense = 0.0;
  for (const HSample& s : sol.samples()) {
    node = std::max(node, std::abs(s.H - closed_form_H_A0(P10, 0.0, cf, s.K)));
  }
  for (double K = 0.1; K <= 0.9; K += 1e-3) {
    dense = std::max(dense, std::abs(sol.H_at(K) - closed_form_H_A0(P10, 0.0, cf, K)));
  }
  CHECK(node < 1e-7);
  CHECK(dense < 1e-7);
  CHECK(sol.branch_at(0.3) == b);
  CHECK(kind_of([&] { sol.H_at(0.99995); }) == ErrorKind::DomainError);
  const std::vector<double> grid{0.2, 0.4, 0.6};
  const auto sampled = sol.sample(grid);
  REQUIRE(sampled.size() == 3);
  CHECK(sampled[1].H == doctest::Approx(sol.H_at(0.4)));
}

TEST_CASE("solve_H with A != 0 agrees with fixed-step RK4") {
  const double A = 0.01;
  const double H0 = H_mid();
  const SolverConfig cfg = SolverConfig::make(P10, 0.5, H0, 0.0, {A}, Branch::Plus);
  const HSolution sol = solve_H(cfg, P10);
  auto f = [&](double K, double H) { return rhs_thm1(P10, 0.0, {A}, Branch::Plus, K, H); };
  for (double K1 : {0.3, 0.7}) {
    CHECK(sol.H_at(K1) == doctest::Approx(rk4(f, 0.5, H0, K1, 4000)).epsilon(1e-9));
  }
}

TEST_CASE("theta saturation is located as an event") {
  const double A = 0.05;
  SolverConfig cfg = SolverConfig::make(P10, 0.5, H_mid(), 0.0, {A}, Branch::Plus);
  const HSolution stop = solve_H(cfg, P10);
  REQUIRE(stop.events().size() == 2);
  for (const SolveEvent& e : stop.events()) {
    CHECK(e.kind == EventKind::ThetaSaturation);
    const double H = stop.H_at(e.K);
    const double p = oracle::p_expanded(1.0, 0.0, e.K);
    CHECK(std::abs(p * p * (H * H - e.K) - A * A) < 1e-8);
  }
  CHECK(stop.events()[0].K == doctest::Approx(0.0710).epsilon(1e-2));
  CHECK(stop.events()[1].K == doctest::Approx(0.9369).epsilon(1e-2));

  cfg.on_event = OnEvent::SwitchBranch;
  const HSolution sw = solve_H(cfg, P10);
  int switches = 0;
  for (const SolveEvent& e : sw.events()) switches += e.kind == EventKind::BranchSwitch;
  CHECK(switches == 2);
  CHECK(sw.K_min() < stop.K_min());
  CHECK(sw.branch_at(sw.K_min()) == Branch::Minus);
  CHECK(sw.branch_at(0.5) == Branch::Plus);
}
