#include "gbd/strata.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace gbd {

StratumStructure StratumStructure::from_unit_maps(std::vector<std::vector<std::size_t>> maps) {
  if (maps.empty()) throw std::invalid_argument("structure needs at least one stratum");
  const std::size_t n = maps[0].size();
  if (n == 0) throw std::invalid_argument("structure needs at least one run");
  for (const auto& m : maps)
    if (m.size() != n) throw std::invalid_argument("stratum unit maps disagree on run count");
  for (std::size_t i = 0; i < n; ++i)
    if (maps.back()[i] != i)
      throw std::invalid_argument("last stratum must be the run stratum (identity unit map)");

  StratumStructure s;
  s.unit_of_run_ = std::move(maps);
  s.runs_of_unit_.resize(s.unit_of_run_.size());
  for (std::size_t l = 0; l < s.unit_of_run_.size(); ++l) {
    std::size_t b = 0;
    for (std::size_t u : s.unit_of_run_[l]) b = std::max(b, u + 1);
    s.runs_of_unit_[l].assign(b, {});
    for (std::size_t i = 0; i < n; ++i) s.runs_of_unit_[l][s.unit_of_run_[l][i]].push_back(i);
    for (std::size_t u = 0; u < b; ++u)
      if (s.runs_of_unit_[l][u].empty())
        throw std::invalid_argument("stratum " + std::to_string(l + 1) + " unit " +
                                    std::to_string(u + 1) + " has no runs");
  }
  return s;
}

void validate_ratios(const VarianceRatios& v, std::size_t strata) {
  if (v.eta.size() != strata)
    throw std::invalid_argument("eta must list one ratio per stratum");
  for (double e : v.eta)
    if (!(e > 0.0) || !std::isfinite(e))
      throw std::invalid_argument("variance ratios must be positive and finite");
  if (v.eta.back() != 1.0)
    throw std::invalid_argument("the run-stratum ratio eta_g must be exactly 1");
}

Matrix indicator_matrix(const StratumStructure& s, std::size_t stratum) {
  if (stratum >= s.strata()) throw std::invalid_argument("stratum index out of range");
  Matrix u(s.runs(), s.units(stratum));
  for (std::size_t i = 0; i < s.runs(); ++i) u(i, s.unit_of(stratum, i)) = 1.0;
  return u;
}

Matrix build_sigma(const StratumStructure& s, const VarianceRatios& eta) {
  validate_ratios(eta, s.strata());
  const std::size_t n = s.runs();
  Matrix sigma(n, n);
  for (std::size_t l = 0; l < s.strata(); ++l) {
    const double e = eta.eta[l];
    for (std::size_t u = 0; u < s.units(l); ++u) {
      const auto& runs = s.runs_of(l, u);
      for (std::size_t a : runs)
        for (std::size_t b : runs) sigma(a, b) += e;
    }
  }
  return sigma;
}

StratumStructure single_stratum(std::size_t runs) {
  std::vector<std::size_t> id(runs);
  for (std::size_t i = 0; i < runs; ++i) id[i] = i;
  return StratumStructure::from_unit_maps({id});
}

StratumStructure split_plot(std::size_t whole_plots, std::size_t runs_per_plot) {
  if (whole_plots < 1 || runs_per_plot < 1)
    throw std::invalid_argument("split_plot: whole_plots and runs_per_plot must be >= 1");
  const std::size_t n = whole_plots * runs_per_plot;
  std::vector<std::size_t> wp(n), id(n);
  for (std::size_t i = 0; i < n; ++i) {
    wp[i] = i / runs_per_plot;
    id[i] = i;
  }
  return StratumStructure::from_unit_maps({wp, id});
}

StratumStructure strip_plot(const Matrix& incidence) {
  const std::size_t rows = incidence.rows(), cols = incidence.cols();
  if (rows == 0 || cols == 0) throw std::invalid_argument("strip_plot: empty incidence");
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < cols; ++j)
      if (incidence(i, j) != 0.0 && incidence(i, j) != 1.0)
        throw std::invalid_argument("strip_plot: incidence entries must be 0 or 1");

  std::vector<std::size_t> row_map, col_map;
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < cols; ++j)
      if (incidence(i, j) == 1.0) {
        row_map.push_back(i);
        col_map.push_back(j);
      }
  std::vector<bool> row_seen(rows, false), col_seen(cols, false);
  for (std::size_t k = 0; k < row_map.size(); ++k) {
    row_seen[row_map[k]] = true;
    col_seen[col_map[k]] = true;
  }
  for (std::size_t i = 0; i < rows; ++i)
    if (!row_seen[i])
      throw std::invalid_argument("strip_plot: incidence row " + std::to_string(i + 1) +
                                  " has no checked cell");
  for (std::size_t j = 0; j < cols; ++j)
    if (!col_seen[j])
      throw std::invalid_argument("strip_plot: incidence column " + std::to_string(j + 1) +
                                  " has no checked cell");

  std::vector<std::size_t> id(row_map.size());
  for (std::size_t i = 0; i < id.size(); ++i) id[i] = i;
  return StratumStructure::from_unit_maps({row_map, col_map, id});
}

StratumStructure staggered_level(std::size_t class1_plots, std::size_t plot_size) {
  if (plot_size % 2 != 0)
    throw std::invalid_argument("staggered_level: plot_size must be even");
  if (class1_plots < 2)
    throw std::invalid_argument("staggered_level: need at least 2 class-I plots");
  const std::size_t n = class1_plots * plot_size;
  const std::size_t half = plot_size / 2;
  std::vector<std::size_t> c1(n), c2(n), id(n);
  for (std::size_t i = 0; i < n; ++i) {
    c1[i] = i / plot_size;
    // class-II units shifted by half a plot: sizes (half, plot_size, ..., half)
    c2[i] = i < half ? 0 : (i - half) / plot_size + 1;
    id[i] = i;
  }
  return StratumStructure::from_unit_maps({c1, c2, id});
}

std::vector<std::string> check_design(const Design& d, const std::vector<Factor>& factors,
                                      const StratumStructure& s) {
  std::vector<std::string> issues;
  if (d.runs() != s.runs()) {
    issues.push_back("design has " + std::to_string(d.runs()) + " runs but the structure has " +
                     std::to_string(s.runs()));
    return issues;
  }
  if (d.factors() != factors.size()) {
    issues.push_back("design has " + std::to_string(d.factors()) + " columns but " +
                     std::to_string(factors.size()) + " factors are declared");
    return issues;
  }
  for (std::size_t j = 0; j < factors.size(); ++j) {
    const Factor& f = factors[j];
    for (std::size_t i = 0; i < d.runs(); ++i) {
      const double v = d.settings(i, j);
      if (std::find(f.levels.begin(), f.levels.end(), v) == f.levels.end())
        issues.push_back("run " + std::to_string(i + 1) + ": value " + std::to_string(v) +
                         " is not a declared level of factor '" + f.name + "'");
    }
    const std::size_t l = static_cast<std::size_t>(f.stratum);
    if (l >= s.strata()) {
      issues.push_back("factor '" + f.name + "' is assigned to stratum " + std::to_string(l + 1) +
                       " but the structure has only " + std::to_string(s.strata()));
      continue;
    }
    for (std::size_t u = 0; u < s.units(l); ++u) {
      const auto& runs = s.runs_of(l, u);
      const double first = d.settings(runs[0], j);
      for (std::size_t r : runs)
        if (d.settings(r, j) != first) {
          issues.push_back("factor '" + f.name + "' varies within stratum-" +
                           std::to_string(l + 1) + " unit " + std::to_string(u + 1) + " (run " +
                           std::to_string(r + 1) + ")");
          break;
        }
    }
  }
  return issues;
}

}  // namespace gbd
