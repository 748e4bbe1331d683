#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "gbd/linalg.hpp"
#include "gbd/model.hpp"

namespace gbd {

// Randomization structure with g strata. Stratum l (0-based here; 1-based in
// configuration files and diagnostics) partitions the n runs into b_l units;
// the last stratum is always the run stratum (one unit per run). Units of
// different strata may overlap arbitrarily — staggered-level units straddle
// class-I plot boundaries, so no nesting is assumed.
class StratumStructure {
 public:
  // maps[l][run] = 0-based unit of `run` in stratum l; maps.back() must be
  // the identity and every unit label 0..b_l-1 must occur.
  static StratumStructure from_unit_maps(std::vector<std::vector<std::size_t>> maps);

  std::size_t strata() const { return unit_of_run_.size(); }
  std::size_t runs() const { return unit_of_run_.empty() ? 0 : unit_of_run_[0].size(); }
  std::size_t units(std::size_t stratum) const { return runs_of_unit_[stratum].size(); }
  std::size_t unit_of(std::size_t stratum, std::size_t run) const {
    return unit_of_run_[stratum][run];
  }
  const std::vector<std::size_t>& runs_of(std::size_t stratum, std::size_t unit) const {
    return runs_of_unit_[stratum][unit];
  }
  const std::vector<std::size_t>& unit_map(std::size_t stratum) const {
    return unit_of_run_[stratum];
  }

 private:
  std::vector<std::vector<std::size_t>> unit_of_run_;                // [stratum][run]
  std::vector<std::vector<std::vector<std::size_t>>> runs_of_unit_;  // [stratum][unit]
};

// Variance ratios η_l = σ_l²/σ_g²; the run stratum is pinned at η_g = 1.
struct VarianceRatios {
  std::vector<double> eta;

  std::size_t strata() const { return eta.size(); }
};

void validate_ratios(const VarianceRatios& v, std::size_t strata);

// n×b_l 0/1 matrix with one 1 per row; the run stratum gives the identity.
Matrix indicator_matrix(const StratumStructure& s, std::size_t stratum);

// Σ = Σ_l η_l U_l U_lᵀ with σ_g² = 1 (the criterion is invariant to it).
Matrix build_sigma(const StratumStructure& s, const VarianceRatios& eta);

StratumStructure single_stratum(std::size_t runs);

// g=2: contiguous whole plots of equal size.
StratumStructure split_plot(std::size_t whole_plots, std::size_t runs_per_plot);

// g=3 row-column structure: one run per checked cell of the incidence matrix
// (entries 0/1), visited row-major. Stratum 0 groups runs by row, stratum 1 by
// column. Every row and column must contain at least one check.
StratumStructure strip_plot(const Matrix& incidence);

// g=3: class-I plots are contiguous blocks of plot_size runs; class-II units
// are shifted by half a plot, so the first and last have half size.
StratumStructure staggered_level(std::size_t class1_plots, std::size_t plot_size);

// All constraint violations of a design against its factors and structure:
// unknown levels, and stratum-l factors varying within a stratum-l unit.
// Empty means valid. Messages use 1-based run/unit/stratum labels.
std::vector<std::string> check_design(const Design& d, const std::vector<Factor>& factors,
                                      const StratumStructure& s);

}  // namespace gbd
