#include "gbd/search.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <mutex>
#include <stdexcept>
#include <thread>

#include "gbd/strata.hpp"

namespace gbd {

bool improves(double candidate, double current) {
  if (current == worst_log_criterion) return candidate > current;
  return candidate - current > 1e-12 * std::max(1.0, std::abs(current));
}

Design random_start(const CriterionConfig& cfg, Rng& rng) {
  const StratumStructure& s = cfg.structure();
  const auto& factors = cfg.factors();
  Design d{Matrix(s.runs(), factors.size())};
  for (std::size_t l = 0; l < s.strata(); ++l)
    for (std::size_t j = 0; j < factors.size(); ++j) {
      if (static_cast<std::size_t>(factors[j].stratum) != l) continue;
      for (std::size_t u = 0; u < s.units(l); ++u) {
        const double level = factors[j].levels[rng.below(factors[j].levels.size())];
        for (std::size_t run : s.runs_of(l, u)) d.settings(run, j) = level;
      }
    }
  return d;
}

namespace {

// In-place sweep; returns whether any exchange was accepted.
bool sweep(Design& d, double& log_d, const CriterionConfig& cfg) {
  const StratumStructure& s = cfg.structure();
  const auto& factors = cfg.factors();
  bool any = false;
  for (std::size_t l = 0; l < s.strata(); ++l)
    for (std::size_t u = 0; u < s.units(l); ++u)
      for (std::size_t j = 0; j < factors.size(); ++j) {
        if (static_cast<std::size_t>(factors[j].stratum) != l) continue;
        const auto& runs = s.runs_of(l, u);
        const double incumbent = d.settings(runs[0], j);
        for (const double level : factors[j].levels) {
          if (level == incumbent) continue;  // same design, same value
          const double saved = d.settings(runs[0], j);
          for (std::size_t run : runs) d.settings(run, j) = level;
          const double trial = gbd_value(d, cfg);
          if (improves(trial, log_d)) {
            log_d = trial;
            any = true;
          } else {
            for (std::size_t run : runs) d.settings(run, j) = saved;
          }
        }
        assert(check_design(d, factors, s).empty());
      }
  return any;
}

struct Best {
  Design design;
  double log_d = worst_log_criterion;
  bool valid = false;
};

// Strict log_d comparison; exact ties go to the lexicographically smaller
// flattened design so the reduction is a total order.
bool better(const Design& d, double log_d, const Best& incumbent) {
  if (!incumbent.valid) return true;
  if (log_d != incumbent.log_d) return log_d > incumbent.log_d;
  return std::lexicographical_compare(d.settings.values().begin(), d.settings.values().end(),
                                      incumbent.design.settings.values().begin(),
                                      incumbent.design.settings.values().end());
}

struct WorkerOut {
  Best best;
  std::vector<std::size_t> histogram;
};

void run_restarts(const CriterionConfig& cfg, const SearchConfig& scfg, std::size_t first,
                  std::size_t last, WorkerOut& out,
                  const std::function<void(double)>& tick) {
  for (std::size_t t = first; t < last; ++t) {
    Rng rng = Rng::stream(scfg.seed, t);
    Design d = random_start(cfg, rng);
    double log_d = gbd_value(d, cfg);
    std::size_t improving_passes = 0;
    while (sweep(d, log_d, cfg)) ++improving_passes;
    if (out.histogram.size() <= improving_passes) out.histogram.resize(improving_passes + 1, 0);
    ++out.histogram[improving_passes];
    if (log_d != worst_log_criterion && better(d, log_d, out.best))
      out.best = Best{d, log_d, true};
    if (tick) tick(log_d);
  }
}

}  // namespace

std::pair<Design, bool> exchange_pass(const Design& d, const CriterionConfig& cfg) {
  const auto issues = check_design(d, cfg.factors(), cfg.structure());
  if (!issues.empty()) throw std::invalid_argument("exchange_pass: " + issues.front());
  Design out = d;
  double log_d = gbd_value(out, cfg);
  const bool improved = sweep(out, log_d, cfg);
  return {std::move(out), improved};
}

SearchResult optimize(const CriterionConfig& cfg, const SearchConfig& scfg) {
  if (scfg.t_total < 1) throw std::invalid_argument("optimize: t_total must be >= 1");
  if (scfg.workers < 1) throw std::invalid_argument("optimize: workers must be >= 1");

  const std::size_t workers = std::min(scfg.workers, scfg.t_total);
  std::vector<WorkerOut> outs(workers);

  std::mutex progress_mutex;
  std::size_t completed = 0;
  double best_seen = worst_log_criterion;
  std::function<void(double)> tick_fn;
  if (scfg.progress)
    tick_fn = [&](double restart_log_d) {
      std::lock_guard<std::mutex> lock(progress_mutex);
      ++completed;
      best_seen = std::max(best_seen, restart_log_d);
      scfg.progress(completed, best_seen);
    };

  if (workers == 1) {
    run_restarts(cfg, scfg, 0, scfg.t_total, outs[0], tick_fn);
  } else {
    // contiguous blocks; restart RNG streams make the partition irrelevant
    std::vector<std::thread> pool;
    const std::size_t chunk = (scfg.t_total + workers - 1) / workers;
    for (std::size_t w = 0; w < workers; ++w) {
      const std::size_t first = w * chunk;
      const std::size_t last = std::min(scfg.t_total, first + chunk);
      pool.emplace_back(run_restarts, std::cref(cfg), std::cref(scfg), first, last,
                        std::ref(outs[w]), std::cref(tick_fn));
    }
    for (std::thread& th : pool) th.join();
  }

  SearchResult result;
  result.restarts_completed = scfg.t_total;
  result.seed = scfg.seed;
  Best global;
  for (const WorkerOut& o : outs) {
    if (o.best.valid && better(o.best.design, o.best.log_d, global)) global = o.best;
    if (result.improving_passes_histogram.size() < o.histogram.size())
      result.improving_passes_histogram.resize(o.histogram.size(), 0);
    for (std::size_t i = 0; i < o.histogram.size(); ++i)
      result.improving_passes_histogram[i] += o.histogram[i];
  }
  if (!global.valid) {
    // every restart stayed singular; hand back the last start for diagnosis
    Rng rng = Rng::stream(scfg.seed, scfg.t_total - 1);
    result.design = random_start(cfg, rng);
    result.log_d = worst_log_criterion;
    return result;
  }
  result.design = std::move(global.design);
  result.log_d = global.log_d;
  return result;
}

}  // namespace gbd
