#pragma once

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "gbd/linalg.hpp"
#include "gbd/model.hpp"
#include "gbd/strata.hpp"

namespace gbd {

// Singular information matrices rank below every finite criterion value.
inline constexpr double worst_log_criterion = -std::numeric_limits<double>::infinity();

// Column transform that makes each potential term range-one and approximately
// uncorrelated with all primary terms over the generating candidate set:
// Z = (X_pot - X_pri·alpha) / ranges, columnwise.
struct ScalingMap {
  Matrix alpha;                // p×q regression of potential on primary
  std::vector<double> ranges;  // max(W) - min(W) per potential column
  std::string candidate_summary;

  std::size_t p() const { return alpha.rows(); }
  std::size_t q() const { return ranges.size(); }
};

// Full factorial over the declared levels of every factor, mixed-radix order
// with the last factor fastest. Beyond 100,000 points a deterministic
// stratified subsample of 100,000 is taken (seeded stride jitter).
Design candidate_grid(const std::vector<Factor>& factors, std::string* summary = nullptr);

// Least-squares fit of alpha and ranges over the candidate set. Throws on a
// rank-deficient primary model and on zero-range potential columns (for
// example a square term over a two-level factor), naming the term.
ScalingMap fit_scaling(const Design& candidates, const ModelSpec& model,
                       const std::vector<Factor>& factors);

// X = [X_pri | Z] of width r. With q = 0 this is X_pri unchanged.
Matrix apply_scaling(const Design& d, const ModelSpec& model, const ScalingMap& map);

// Everything needed to evaluate designs: the model, structure, ratios, prior
// scale tau, the fitted scaling map, and cached factorizations. Immutable
// after construction and safely shared across search workers.
class CriterionConfig {
 public:
  // Fits the scaling over candidate_grid(factors) when q > 0.
  CriterionConfig(std::vector<Factor> factors, ModelSpec model, StratumStructure structure,
                  VarianceRatios eta, double tau);
  // Reuses a previously fitted map (the map depends only on model and
  // candidate set, not on structure, eta, or tau).
  CriterionConfig(std::vector<Factor> factors, ModelSpec model, StratumStructure structure,
                  VarianceRatios eta, double tau, ScalingMap scaling);

  const std::vector<Factor>& factors() const { return factors_; }
  const ModelSpec& model() const { return model_; }
  const StratumStructure& structure() const { return structure_; }
  const VarianceRatios& eta() const { return eta_; }
  double tau() const { return tau_; }
  const ScalingMap& scaling() const { return scaling_; }
  const SpdFactorization& sigma_factor() const { return sigma_factor_; }
  const Matrix& k_over_tau_sq() const { return k_over_tau_sq_; }

  std::size_t p() const { return model_.p(); }
  std::size_t q() const { return model_.q(); }
  std::size_t r() const { return model_.r(); }

 private:
  void finish();

  std::vector<Factor> factors_;
  ModelSpec model_;
  StratumStructure structure_;
  VarianceRatios eta_;
  double tau_;
  ScalingMap scaling_;
  SpdFactorization sigma_factor_;
  Matrix k_over_tau_sq_;
};

// (1/r)·log det(Xᵀ Σ⁻¹ X + K/τ²) with X = [X_pri | Z]; worst_log_criterion
// when the matrix is singular. Exponentiate only for reporting.
double gbd_value(const Design& d, const CriterionConfig& cfg);

// Primary-terms-only criterion (1/p)·log det(X_priᵀ Σ⁻¹ X_pri); ignores any
// potential terms in the config.
double d_value(const Design& d, const CriterionConfig& cfg);

struct PosteriorMoments {
  Matrix b;  // r×1 posterior mean
  Matrix s;  // r×r posterior covariance
};

// b = (XᵀΣ⁻¹X + K/τ²)⁻¹ XᵀΣ⁻¹ y and S = (XᵀΣ⁻¹X + K/τ²)⁻¹.
// Throws when the information matrix is singular.
PosteriorMoments posterior_moments(const Design& d, const CriterionConfig& cfg,
                                   const std::vector<double>& y);

// Response standard deviation sigma_y = sqrt(Σ_l η_l) with σ_g² = 1.
double response_sd(const VarianceRatios& eta);

// 3·sigma_y, the smallest prior scale that lets potential effects of
// plausible size register.
double recommend_tau(const VarianceRatios& eta);

}  // namespace gbd
