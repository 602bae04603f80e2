#include "hcmu/pipeline.hpp"

#include "hcmu/errors.hpp"

namespace hcmu {

namespace {

double start_K(const RunConfig& cfg) { return cfg.K0.value_or(0.5 * (cfg.k1 + cfg.k2)); }

}  // namespace

Pipeline::Pipeline(RunConfig cfg)
    : cfg_(std::move(cfg)),
      params_(validate_params(cfg_.k1, cfg_.k2)),
      window_(CurvatureWindow::from_margin(params_, cfg_.margin)),
      map_(params_, window_, KAtZero{start_K(cfg_)}) {
  check_config(cfg_);
  const double K0 = start_K(cfg_);
  if (!window_.contains(K0)) {
    throw Error(ErrorKind::ConfigError, "K0 lies outside the curvature window");
  }
  double H0 = 0.0;
  Branch branch = Branch::Plus;
  if (cfg_.H0) {
    H0 = *cfg_.H0;
    branch = cfg_.branch == "minus" ? Branch::Minus : Branch::Plus;
  } else {
    const ClosedFormSign sign =
        cfg_.closed_form_sign == "lower" ? ClosedFormSign::Lower : ClosedFormSign::Upper;
    closed_form_ = make_closed_form(params_, cfg_.c, *cfg_.s, sign, window_);
    H0 = closed_form_H_A0(params_, cfg_.c, *closed_form_, K0);
    if (cfg_.branch == "auto") {
      branch = pair_closed_form_branch(params_, cfg_.c, *closed_form_, K0);
    } else {
      branch = cfg_.branch == "minus" ? Branch::Minus : Branch::Plus;
    }
  }
  solver_ = SolverConfig::make(params_, K0, H0, cfg_.c, WeingartenConstant{cfg_.A}, branch);
  solver_.window = window_;
  solver_.rel_tol = cfg_.rel_tol;
  solver_.abs_tol = cfg_.abs_tol;
  solver_.max_step = cfg_.max_step;
  solver_.on_event = cfg_.on_event == "switch" ? OnEvent::SwitchBranch : OnEvent::Stop;
  validate_solver_config(solver_, params_);
  meta_.config_hash = config_hash(cfg_);
}

void Pipeline::solve() {
  sol_ = std::make_unique<HSolution>(solve_H(solver_, params_));
  if (cfg_.pairing == "auto") {
    const std::vector<double> xs = cfg_.x_grid.values();
    if (xs.size() < 3) throw Error(ErrorKind::ConfigError, "pairing auto needs at least 3 x samples");
    pairing_ = select_theta_pairing(*sol_, map_, xs);
  } else {
    pairing_ = cfg_.pairing == "plus_positive_cos" ? ThetaPairing::PlusPositiveCos
                                                   : ThetaPairing::PlusNegativeCos;
  }
  eval_ = std::make_unique<FormsEvaluator>(*sol_, map_, pairing_);
}

const HSolution& Pipeline::solution() const {
  if (!sol_) throw Error(ErrorKind::ConfigError, "pipeline has not been solved");
  return *sol_;
}

const FormsEvaluator& Pipeline::evaluator() const {
  if (!eval_) throw Error(ErrorKind::ConfigError, "pipeline has not been solved");
  return *eval_;
}

std::vector<double> Pipeline::K_samples() const {
  const HSolution& s = solution();
  GridSpec g{s.K_min(), s.K_max(), cfg_.k_samples};
  return g.values();
}

FormsGrid Pipeline::forms() const {
  const std::vector<double> xs = cfg_.x_grid.values();
  return build_forms(evaluator(), xs);
}

SurfacePatch Pipeline::surface(const ProfileConfig& pcfg) const {
  const std::vector<double> xs = cfg_.x_grid.values();
  const std::vector<double> ys = cfg_.y_grid.values();
  const Profile prof = integrate_profile(evaluator(), AmbientModel(cfg_.c), xs, pcfg);
  return sweep_surface(prof, ys);
}

}  // namespace hcmu
