#include "gbd/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>
#include <thread>

#include "gbd/rng.hpp"
#include "gbd/search.hpp"

namespace gbd {

namespace {

std::string fmt12(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

void require_valid(const Design& d, const std::vector<Factor>& factors,
                   const StratumStructure& s, const std::string& label) {
  const auto issues = check_design(d, factors, s);
  if (!issues.empty())
    throw std::invalid_argument("design '" + label + "': " + issues.front());
}

}  // namespace

std::vector<double> efficiencies_from_log(const std::vector<double>& log_d) {
  double best = worst_log_criterion;
  for (double v : log_d) best = std::max(best, v);
  std::vector<double> out(log_d.size(), 0.0);
  for (std::size_t i = 0; i < log_d.size(); ++i)
    out[i] = log_d[i] == worst_log_criterion ? 0.0 : std::exp(log_d[i] - best);
  return out;
}

EfficiencyTable efficiency_table(const std::vector<LabeledDesign>& designs,
                                 const std::vector<Scenario>& scenarios,
                                 const std::vector<Factor>& factors,
                                 const StratumStructure& structure, const VarianceRatios& eta,
                                 double tau) {
  if (designs.empty() || scenarios.empty())
    throw std::invalid_argument("efficiency_table: need at least one design and one scenario");
  for (const auto& [label, design] : designs) require_valid(design, factors, structure, label);

  EfficiencyTable t;
  t.values = Matrix(scenarios.size(), designs.size());
  t.log_d = Matrix(scenarios.size(), designs.size());
  for (const auto& s : scenarios) t.scenario_labels.push_back(s.label);
  for (const auto& d : designs) t.design_labels.push_back(d.label);

  for (std::size_t s = 0; s < scenarios.size(); ++s) {
    const CriterionConfig cfg(factors, scenarios[s].model, structure, eta, tau);
    std::vector<double> logs(designs.size());
    for (std::size_t a = 0; a < designs.size(); ++a)
      logs[a] = cfg.q() == 0 ? d_value(designs[a].design, cfg)
                             : gbd_value(designs[a].design, cfg);
    const std::vector<double> eff = efficiencies_from_log(logs);
    std::size_t best = 0;
    for (std::size_t a = 0; a < designs.size(); ++a) {
      t.values(s, a) = eff[a];
      t.log_d(s, a) = logs[a];
      if (logs[a] > logs[best]) best = a;
    }
    t.best.push_back(best);
  }
  return t;
}

VarianceReport submodel_variances(const Design& d, const std::vector<Factor>& factors,
                                  const StratumStructure& structure, const VarianceRatios& eta,
                                  const std::vector<Term>& primary,
                                  const std::vector<Term>& extra_terms) {
  require_valid(d, factors, structure, "submodel");
  VarianceReport report;
  report.submodel = primary;
  report.submodel.insert(report.submodel.end(), extra_terms.begin(), extra_terms.end());

  const SpdResult sigma = spd_factorize(build_sigma(structure, eta));
  const Matrix x = model_matrix(d, report.submodel);
  const Matrix info = gram(x, *spd_ok(sigma));
  const SpdResult res = spd_factorize(info);
  const SpdFactorization* f = spd_ok(res);
  if (!f) return report;  // estimable = false
  const Matrix inv = spd_inverse(*f);
  // reciprocal condition estimate in the 1-norm; treat ill-conditioned
  // information as inestimable so counts stay reproducible
  const double rcond = 1.0 / (norm1(info) * norm1(inv));
  if (!(rcond > 1e-8)) return report;
  report.estimable = true;
  report.variances.resize(report.submodel.size());
  for (std::size_t i = 0; i < report.variances.size(); ++i) report.variances[i] = inv(i, i);
  return report;
}

namespace {

// k-subset enumeration/sampling shared by the curve computation.
struct SubsetSource {
  std::size_t total_terms = 0;
  std::size_t k = 0;
  bool sampled = false;
  std::vector<std::vector<std::size_t>> subsets;
};

double binomial(std::size_t n, std::size_t k) {
  double v = 1.0;
  for (std::size_t i = 0; i < k; ++i) v = v * static_cast<double>(n - i) / static_cast<double>(i + 1);
  return v;
}

SubsetSource make_subsets(std::size_t total, std::size_t k, std::size_t cap,
                          std::uint64_t seed) {
  SubsetSource src;
  src.total_terms = total;
  src.k = k;
  if (binomial(total, k) <= static_cast<double>(cap)) {
    std::vector<std::size_t> sel(k);
    for (std::size_t i = 0; i < k; ++i) sel[i] = i;
    while (true) {
      src.subsets.push_back(sel);
      if (k == 0) break;
      // next combination in lexicographic order
      std::size_t i = k;
      while (i-- > 0) {
        if (sel[i] != i + total - k) {
          ++sel[i];
          for (std::size_t j = i + 1; j < k; ++j) sel[j] = sel[j - 1] + 1;
          break;
        }
        if (i == 0) return src;
      }
    }
    return src;
  }
  src.sampled = true;
  src.subsets.resize(cap);
  std::vector<std::size_t> pool(total);
  for (std::size_t i = 0; i < cap; ++i) {
    Rng rng = Rng::stream(seed, (static_cast<std::uint64_t>(k) << 32) | i);
    for (std::size_t j = 0; j < total; ++j) pool[j] = j;
    // partial Fisher-Yates; first k entries become the subset
    for (std::size_t j = 0; j < k; ++j) std::swap(pool[j], pool[j + rng.below(total - j)]);
    src.subsets[i].assign(pool.begin(), pool.begin() + k);
    std::sort(src.subsets[i].begin(), src.subsets[i].end());
  }
  return src;
}

struct CurveAccum {
  std::vector<double> primary_sum;
  std::vector<double> inter_sum;
  std::vector<std::size_t> inter_count;
  std::size_t estimable = 0;

  explicit CurveAccum(std::size_t p, std::size_t n_inter)
      : primary_sum(p, 0.0), inter_sum(n_inter, 0.0), inter_count(n_inter, 0) {}

  void merge(const CurveAccum& o) {
    for (std::size_t i = 0; i < primary_sum.size(); ++i) primary_sum[i] += o.primary_sum[i];
    for (std::size_t i = 0; i < inter_sum.size(); ++i) {
      inter_sum[i] += o.inter_sum[i];
      inter_count[i] += o.inter_count[i];
    }
    estimable += o.estimable;
  }
};

}  // namespace

std::vector<VarianceCurvePoint> overall_variance_curve(const Design& d,
                                                       const std::vector<Factor>& factors,
                                                       const StratumStructure& structure,
                                                       const VarianceRatios& eta,
                                                       const CurveOptions& opt) {
  require_valid(d, factors, structure, "curve");
  const std::size_t m = factors.size();
  const std::vector<Term> mains = second_order_terms(m, TermKind::main_effects);
  const std::vector<Term> inters = second_order_terms(m, TermKind::interactions);
  const std::size_t p = mains.size();
  if (opt.k_max > inters.size())
    throw std::invalid_argument("overall_variance_curve: k exceeds the interaction count " +
                                std::to_string(inters.size()));

  const SpdResult sigma = spd_factorize(build_sigma(structure, eta));
  const SpdFactorization& sf = *spd_ok(sigma);
  const Matrix x_main = model_matrix(d, mains);
  const Matrix x_inter = model_matrix(d, inters);
  const std::size_t n = d.runs();

  std::vector<VarianceCurvePoint> out;
  for (std::size_t k = opt.k_min; k <= opt.k_max; ++k) {
    const SubsetSource src = make_subsets(inters.size(), k, opt.exhaustive_cap, opt.sample_seed);

    auto process = [&](std::size_t first, std::size_t last, CurveAccum& acc) {
      Matrix x(n, p + k);
      for (std::size_t idx = first; idx < last; ++idx) {
        const auto& sel = src.subsets[idx];
        for (std::size_t i = 0; i < n; ++i) {
          for (std::size_t j = 0; j < p; ++j) x(i, j) = x_main(i, j);
          for (std::size_t j = 0; j < k; ++j) x(i, p + j) = x_inter(i, sel[j]);
        }
        const Matrix info = gram(x, sf);
        const SpdResult res = spd_factorize(info);
        const SpdFactorization* f = spd_ok(res);
        if (!f) continue;
        const Matrix inv = spd_inverse(*f);
        if (!(1.0 / (norm1(info) * norm1(inv)) > 1e-8)) continue;
        ++acc.estimable;
        for (std::size_t j = 0; j < p; ++j) acc.primary_sum[j] += inv(j, j);
        for (std::size_t j = 0; j < k; ++j) {
          acc.inter_sum[sel[j]] += inv(p + j, p + j);
          ++acc.inter_count[sel[j]];
        }
      }
    };

    // fixed chunking keeps the accumulation order independent of the worker
    // count, so parallel and serial runs agree exactly
    constexpr std::size_t chunk = 1024;
    const std::size_t n_chunks = (src.subsets.size() + chunk - 1) / chunk;
    std::vector<CurveAccum> partials(n_chunks, CurveAccum(p, inters.size()));
    const std::size_t workers = std::max<std::size_t>(1, std::min(opt.workers, n_chunks));
    if (workers == 1) {
      for (std::size_t c = 0; c < n_chunks; ++c)
        process(c * chunk, std::min(src.subsets.size(), (c + 1) * chunk), partials[c]);
    } else {
      std::vector<std::thread> pool;
      for (std::size_t w = 0; w < workers; ++w)
        pool.emplace_back([&, w] {
          for (std::size_t c = w; c < n_chunks; c += workers)
            process(c * chunk, std::min(src.subsets.size(), (c + 1) * chunk), partials[c]);
        });
      for (std::thread& th : pool) th.join();
    }
    CurveAccum acc(p, inters.size());
    for (const CurveAccum& part : partials) acc.merge(part);

    VarianceCurvePoint point;
    point.k = k;
    point.sampled = src.sampled;
    point.estimable_models = acc.estimable;
    if (acc.estimable > 0) {
      for (std::size_t j = 0; j < p; ++j)
        point.primary_overall += acc.primary_sum[j] / static_cast<double>(acc.estimable);
      for (std::size_t j = 0; j < inters.size(); ++j)
        if (acc.inter_count[j] > 0)
          point.potential_overall += acc.inter_sum[j] / static_cast<double>(acc.inter_count[j]);
    }
    out.push_back(point);
  }
  return out;
}

std::vector<SensitivityPoint> sensitivity_sweep(const std::vector<LabeledDesign>& designs,
                                                const std::vector<Scenario>& scenarios,
                                                const std::vector<Factor>& factors,
                                                const StratumStructure& structure,
                                                const std::vector<std::vector<double>>& eta_grid,
                                                const TauPolicy& tau_policy) {
  const std::size_t g = structure.strata();
  if (eta_grid.size() != g - 1)
    throw std::invalid_argument("sensitivity_sweep: grid must cover strata 1.." +
                                std::to_string(g - 1));
  for (const auto& axis : eta_grid)
    if (axis.empty()) throw std::invalid_argument("sensitivity_sweep: empty grid axis");

  std::vector<SensitivityPoint> out;
  std::vector<std::size_t> index(eta_grid.size(), 0);
  while (true) {
    VarianceRatios eta;
    for (std::size_t l = 0; l + 1 < g; ++l) eta.eta.push_back(eta_grid[l][index[l]]);
    eta.eta.push_back(1.0);
    const double tau = tau_policy.kind == TauPolicy::Kind::fixed
                           ? tau_policy.value
                           : tau_policy.value * response_sd(eta);
    SensitivityPoint point;
    point.eta = eta.eta;
    point.tau = tau;
    point.table = efficiency_table(designs, scenarios, factors, structure, eta, tau);
    out.push_back(std::move(point));

    std::size_t axis = eta_grid.size();
    while (axis-- > 0) {
      if (++index[axis] < eta_grid[axis].size()) break;
      index[axis] = 0;
      if (axis == 0) return out;
    }
    if (eta_grid.empty()) return out;
  }
}

std::string efficiency_csv(const EfficiencyTable& table) {
  std::string csv = "scenario";
  for (const auto& d : table.design_labels) csv += "," + d;
  csv += ",best\n";
  for (std::size_t s = 0; s < table.scenario_labels.size(); ++s) {
    csv += table.scenario_labels[s];
    for (std::size_t a = 0; a < table.design_labels.size(); ++a)
      csv += "," + fmt12(table.values(s, a));
    csv += "," + table.design_labels[table.best[s]] + "\n";
  }
  return csv;
}

std::string variance_csv(const std::vector<std::pair<std::string, VarianceReport>>& reports,
                         const std::vector<Factor>& factors) {
  std::string csv = "model,estimable,coefficient,variance\n";
  for (const auto& [label, report] : reports) {
    if (!report.estimable) {
      csv += label + ",no,,\n";
      continue;
    }
    for (std::size_t i = 0; i < report.submodel.size(); ++i)
      csv += label + ",yes," + term_name(report.submodel[i], factors) + "," +
             fmt12(report.variances[i]) + "\n";
  }
  return csv;
}

std::string curve_csv(
    const std::vector<std::pair<std::string, std::vector<VarianceCurvePoint>>>& curves_by_design) {
  std::string csv = "design,k,primary_overall,potential_overall,estimable_models,sampled\n";
  for (const auto& [label, points] : curves_by_design)
    for (const auto& pt : points)
      csv += label + "," + std::to_string(pt.k) + "," + fmt12(pt.primary_overall) + "," +
             fmt12(pt.potential_overall) + "," + std::to_string(pt.estimable_models) + "," +
             (pt.sampled ? "yes" : "no") + "\n";
  return csv;
}

std::string sensitivity_csv(const std::vector<SensitivityPoint>& points) {
  if (points.empty()) return "";
  std::string csv;
  for (std::size_t l = 0; l + 1 < points.front().eta.size(); ++l)
    csv += "eta" + std::to_string(l + 1) + ",";
  csv += "tau,scenario,design,efficiency,is_best\n";
  for (const auto& pt : points) {
    std::string prefix;
    for (std::size_t l = 0; l + 1 < pt.eta.size(); ++l) prefix += fmt12(pt.eta[l]) + ",";
    prefix += fmt12(pt.tau) + ",";
    const EfficiencyTable& t = pt.table;
    for (std::size_t s = 0; s < t.scenario_labels.size(); ++s)
      for (std::size_t a = 0; a < t.design_labels.size(); ++a)
        csv += prefix + t.scenario_labels[s] + "," + t.design_labels[a] + "," +
               fmt12(t.values(s, a)) + "," + (t.best[s] == a ? "yes" : "no") + "\n";
  }
  return csv;
}

}  // namespace gbd
