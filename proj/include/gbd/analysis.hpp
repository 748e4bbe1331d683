#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "gbd/criterion.hpp"

namespace gbd {

struct Scenario {
  std::string label;
  ModelSpec model;
};

struct LabeledDesign {
  std::string label;
  Design design;
};

// Efficiency of design a under scenario s is exp(logd_a - max_b logd_b), so
// every row has a 1 at its best design and all entries lie in (0, 1].
// Scenarios with no potential terms use the D criterion, the rest GBD.
struct EfficiencyTable {
  std::vector<std::string> scenario_labels;
  std::vector<std::string> design_labels;
  Matrix values;               // scenarios × designs
  Matrix log_d;                // raw log-criterion values
  std::vector<std::size_t> best;  // per-scenario index of the best design
};

EfficiencyTable efficiency_table(const std::vector<LabeledDesign>& designs,
                                 const std::vector<Scenario>& scenarios,
                                 const std::vector<Factor>& factors,
                                 const StratumStructure& structure, const VarianceRatios& eta,
                                 double tau);

// Ratio form shared with sensitivity sweeps; a common shift of all log values
// leaves the result unchanged.
std::vector<double> efficiencies_from_log(const std::vector<double>& log_d);

// GLS analysis of primary ∪ extra on the raw (unscaled) model matrix.
// Inestimability is an answer, not an error.
struct VarianceReport {
  std::vector<Term> submodel;
  bool estimable = false;
  std::vector<double> variances;  // diag((XᵀΣ⁻¹X)⁻¹), σ_g² = 1; same order as submodel
};

VarianceReport submodel_variances(const Design& d, const std::vector<Factor>& factors,
                                  const StratumStructure& structure, const VarianceRatios& eta,
                                  const std::vector<Term>& primary,
                                  const std::vector<Term>& extra_terms);

// Average-variance study over the model family "intercept + all main effects
// + k two-factor interactions". For each coefficient, its variance is
// averaged over the estimable submodels containing it; the averages are then
// summed over the primary terms and over the interaction terms separately.
struct VarianceCurvePoint {
  std::size_t k = 0;
  double primary_overall = 0.0;
  double potential_overall = 0.0;
  std::size_t estimable_models = 0;
  bool sampled = false;  // true when C(#interactions, k) exceeded the cap
};

struct CurveOptions {
  std::size_t k_min = 0;
  std::size_t k_max = 5;
  std::size_t exhaustive_cap = 200000;  // sample this many submodels beyond it
  std::uint64_t sample_seed = 0;
  std::size_t workers = 1;
};

std::vector<VarianceCurvePoint> overall_variance_curve(const Design& d,
                                                       const std::vector<Factor>& factors,
                                                       const StratumStructure& structure,
                                                       const VarianceRatios& eta,
                                                       const CurveOptions& opt);

// Per grid point of (η_1, ..., η_{g-1}) values: the efficiency table and
// per-scenario best design. tau is either fixed or a multiple of
// sigma_y(η) = sqrt(Σ η_l) recomputed at each point.
struct TauPolicy {
  enum class Kind { fixed, sigma_y_ratio } kind = Kind::fixed;
  double value = 1.0;

  static TauPolicy fixed(double tau) { return {Kind::fixed, tau}; }
  static TauPolicy ratio(double r) { return {Kind::sigma_y_ratio, r}; }
};

struct SensitivityPoint {
  std::vector<double> eta;  // full-length ratios, run stratum included
  double tau = 0.0;
  EfficiencyTable table;
};

std::vector<SensitivityPoint> sensitivity_sweep(const std::vector<LabeledDesign>& designs,
                                                const std::vector<Scenario>& scenarios,
                                                const std::vector<Factor>& factors,
                                                const StratumStructure& structure,
                                                const std::vector<std::vector<double>>& eta_grid,
                                                const TauPolicy& tau_policy);

// CSV emitters (12 significant digits).
std::string efficiency_csv(const EfficiencyTable& table);
std::string variance_csv(const std::vector<std::pair<std::string, VarianceReport>>& reports,
                         const std::vector<Factor>& factors);
std::string curve_csv(const std::vector<std::pair<std::string, std::vector<VarianceCurvePoint>>>&
                          curves_by_design);
std::string sensitivity_csv(const std::vector<SensitivityPoint>& points);

}  // namespace gbd
