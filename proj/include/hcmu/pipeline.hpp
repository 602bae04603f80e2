#pragma once

#include <memory>
#include <optional>

#include "hcmu/config.hpp"
#include "hcmu/curvature_ode.hpp"
#include "hcmu/fundamental_forms.hpp"
#include "hcmu/immersion.hpp"
#include "hcmu/io.hpp"

namespace hcmu {

/// One configured run: validated inputs, then the solved profile. Holds
/// references between its members, so it is neither copied nor moved.
class Pipeline {
 public:
  /// Validation only; every error here is a configuration error.
  explicit Pipeline(RunConfig cfg);
  Pipeline(const Pipeline&) = delete;
  Pipeline& operator=(const Pipeline&) = delete;

  /// Integrates H(K) and fixes the theta pairing. Errors are numerical.
  void solve();

  const RunConfig& config() const noexcept { return cfg_; }
  const FootballParams& params() const noexcept { return params_; }
  const XOfKMap& map() const noexcept { return map_; }
  const SolverConfig& solver_config() const noexcept { return solver_; }
  const std::optional<ClosedFormParams>& closed_form() const noexcept { return closed_form_; }
  const OutputMeta& meta() const noexcept { return meta_; }

  /// Require solve().
  const HSolution& solution() const;
  const FormsEvaluator& evaluator() const;
  ThetaPairing pairing() const noexcept { return pairing_; }

  std::vector<double> K_samples() const;
  FormsGrid forms() const;
  SurfacePatch surface(const ProfileConfig& pcfg = {}) const;

 private:
  RunConfig cfg_;
  FootballParams params_;
  CurvatureWindow window_;
  XOfKMap map_;
  std::optional<ClosedFormParams> closed_form_;
  SolverConfig solver_;
  OutputMeta meta_;
  std::unique_ptr<HSolution> sol_;
  std::unique_ptr<FormsEvaluator> eval_;
  ThetaPairing pairing_ = ThetaPairing::PlusNegativeCos;
};

}  // namespace hcmu
