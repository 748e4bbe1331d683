#pragma once

#include <cstdint>
#include <functional>
#include <utility>
#include <vector>

#include "gbd/criterion.hpp"
#include "gbd/rng.hpp"

namespace gbd {

struct SearchConfig {
  std::size_t t_total = 100000;  // random restarts
  std::uint64_t seed = 0;
  std::size_t workers = 1;
  // Called with (restarts completed, best log_d so far); may lag behind.
  std::function<void(std::size_t, double)> progress;
};

struct SearchResult {
  Design design;
  double log_d = worst_log_criterion;
  std::size_t restarts_completed = 0;
  // histogram[k] = number of restarts that converged after k improving passes
  std::vector<std::size_t> improving_passes_histogram;
  std::uint64_t seed = 0;
};

// Uniform level per (stratum-l unit, stratum-l factor); within-unit
// constantness holds by construction.
Design random_start(const CriterionConfig& cfg, Rng& rng);

// One sweep over all coordinates: strata ascending, units ascending, factors
// ascending within their stratum, candidate levels in declared order. A level
// is applied to every run of the unit and kept iff it strictly improves the
// criterion (relative epsilon 1e-12 on log_d, so equal values are rejected
// and the sweep cannot cycle). Returns the design and whether anything moved.
std::pair<Design, bool> exchange_pass(const Design& d, const CriterionConfig& cfg);

// Multi-start coordinate exchange: t_total restarts, each swept to a fixed
// point; the best design wins by strict log_d comparison with ties broken by
// the lexicographically smaller flattened design. Restart i draws from
// Rng::stream(seed, i), so results are identical for any worker count.
SearchResult optimize(const CriterionConfig& cfg, const SearchConfig& scfg);

// Acceptance rule shared by the exchange and the cross-restart reduction.
bool improves(double candidate, double current);

}  // namespace gbd
