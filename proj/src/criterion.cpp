#include "gbd/criterion.hpp"

#include <cmath>
#include <stdexcept>

#include "gbd/rng.hpp"

namespace gbd {

namespace {

constexpr std::size_t max_candidate_points = 100000;

Design grid_from_indices(const std::vector<Factor>& factors,
                         const std::vector<std::size_t>& point_ids) {
  const std::size_t m = factors.size();
  Design d{Matrix(point_ids.size(), m)};
  for (std::size_t row = 0; row < point_ids.size(); ++row) {
    std::size_t idx = point_ids[row];
    for (std::size_t j = m; j-- > 0;) {
      const std::size_t nl = factors[j].levels.size();
      d.settings(row, j) = factors[j].levels[idx % nl];
      idx /= nl;
    }
  }
  return d;
}

}  // namespace

Design candidate_grid(const std::vector<Factor>& factors, std::string* summary) {
  if (factors.empty()) throw std::invalid_argument("candidate_grid: no factors");
  for (const Factor& f : factors) validate_factor(f);
  std::size_t total = 1;
  bool overflow = false;
  for (const Factor& f : factors) {
    if (total > max_candidate_points * 10) {
      overflow = true;
      break;
    }
    total *= f.levels.size();
  }
  if (!overflow && total <= max_candidate_points) {
    std::vector<std::size_t> ids(total);
    for (std::size_t i = 0; i < total; ++i) ids[i] = i;
    if (summary) *summary = "full_factorial_" + std::to_string(total);
    return grid_from_indices(factors, ids);
  }
  Rng rng(0x5EEDC0DEDULL);
  long double exact_total = 1.0L;
  for (const Factor& f : factors) exact_total *= static_cast<long double>(f.levels.size());
  if (exact_total < 9e18L) {
    // Stratified subsample: one seeded draw inside each of 100,000 equal
    // strata of the mixed-radix index space.
    std::vector<std::size_t> ids(max_candidate_points);
    const long double stride = exact_total / max_candidate_points;
    for (std::size_t i = 0; i < max_candidate_points; ++i) {
      long double pick = stride * i + static_cast<long double>(rng.uniform01()) * stride;
      if (pick >= exact_total) pick = exact_total - 1.0L;
      ids[i] = static_cast<std::size_t>(pick);
    }
    if (summary) *summary = "stratified_subsample_" + std::to_string(max_candidate_points);
    return grid_from_indices(factors, ids);
  }
  // index space beyond 64 bits: draw coordinates directly
  Design d{Matrix(max_candidate_points, factors.size())};
  for (std::size_t i = 0; i < max_candidate_points; ++i)
    for (std::size_t j = 0; j < factors.size(); ++j)
      d.settings(i, j) = factors[j].levels[rng.below(factors[j].levels.size())];
  if (summary) *summary = "uniform_subsample_" + std::to_string(max_candidate_points);
  return d;
}

ScalingMap fit_scaling(const Design& candidates, const ModelSpec& model,
                       const std::vector<Factor>& factors) {
  validate_model(model, candidates.factors());
  const Matrix x_pri = model_matrix(candidates, model.primary);
  const Matrix x_pot = model_matrix(candidates, model.potential);

  const SpdResult gram_pri = spd_factorize(matmul_at_b(x_pri, x_pri));
  const SpdFactorization* f = spd_ok(gram_pri);
  if (!f)
    throw std::invalid_argument(
        "fit_scaling: primary model is rank deficient over the candidate set");

  ScalingMap map;
  map.alpha = model.q() ? solve_spd(*f, matmul_at_b(x_pri, x_pot))
                        : Matrix(model.p(), 0);
  map.ranges.resize(model.q());
  if (model.q()) {
    const Matrix w = add(x_pot, scale(matmul(x_pri, map.alpha), -1.0));
    for (std::size_t j = 0; j < model.q(); ++j) {
      double lo = w(0, j), hi = w(0, j), mag = 0.0;
      for (std::size_t i = 0; i < w.rows(); ++i) {
        lo = std::min(lo, w(i, j));
        hi = std::max(hi, w(i, j));
        mag = std::max(mag, std::abs(x_pot(i, j)));
      }
      const double range = hi - lo;
      if (!(range > 1e-9 * std::max(1.0, mag)))
        throw std::invalid_argument(
            "fit_scaling: potential term '" + term_name(model.potential[j], factors) +
            "' has zero range over the candidate set (aliased with the primary terms)");
      map.ranges[j] = range;
    }
  }
  return map;
}

Matrix apply_scaling(const Design& d, const ModelSpec& model, const ScalingMap& map) {
  if (map.p() != model.p() || map.q() != model.q())
    throw std::invalid_argument("apply_scaling: scaling map was fitted for a different model");
  const std::size_t n = d.runs();
  Matrix x(n, model.r());
  const Matrix x_pri = model_matrix(d, model.primary);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < model.p(); ++j) x(i, j) = x_pri(i, j);
  if (model.q()) {
    const Matrix x_pot = model_matrix(d, model.potential);
    const Matrix fit = matmul(x_pri, map.alpha);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < model.q(); ++j)
        x(i, model.p() + j) = (x_pot(i, j) - fit(i, j)) / map.ranges[j];
  }
  return x;
}

CriterionConfig::CriterionConfig(std::vector<Factor> factors, ModelSpec model,
                                 StratumStructure structure, VarianceRatios eta, double tau)
    : factors_(std::move(factors)),
      model_(std::move(model)),
      structure_(std::move(structure)),
      eta_(std::move(eta)),
      tau_(tau) {
  if (model_.q() > 0) {
    std::string summary;
    const Design grid = candidate_grid(factors_, &summary);
    scaling_ = fit_scaling(grid, model_, factors_);
    scaling_.candidate_summary = summary;
  } else {
    scaling_.alpha = Matrix(model_.p(), 0);
  }
  finish();
}

CriterionConfig::CriterionConfig(std::vector<Factor> factors, ModelSpec model,
                                 StratumStructure structure, VarianceRatios eta, double tau,
                                 ScalingMap scaling)
    : factors_(std::move(factors)),
      model_(std::move(model)),
      structure_(std::move(structure)),
      eta_(std::move(eta)),
      tau_(tau),
      scaling_(std::move(scaling)) {
  if (scaling_.p() != model_.p() || scaling_.q() != model_.q())
    throw std::invalid_argument("CriterionConfig: scaling map does not match the model");
  finish();
}

void CriterionConfig::finish() {
  for (const Factor& f : factors_) {
    validate_factor(f);
    if (static_cast<std::size_t>(f.stratum) >= structure_.strata())
      throw std::invalid_argument("factor '" + f.name + "' is assigned to stratum " +
                                  std::to_string(f.stratum + 1) + " but the structure has only " +
                                  std::to_string(structure_.strata()));
  }
  validate_model(model_, factors_.size());
  validate_ratios(eta_, structure_.strata());
  if (model_.q() > 0 && !(tau_ > 0.0 && std::isfinite(tau_)))
    throw std::invalid_argument("tau must be positive when potential terms are present");

  const SpdResult sf = spd_factorize(build_sigma(structure_, eta_));
  const SpdFactorization* f = spd_ok(sf);
  if (!f) throw std::logic_error("covariance matrix failed to factorize");
  sigma_factor_ = *f;
  k_over_tau_sq_ = model_.q() > 0 ? scale(build_k(model_.p(), model_.q()), 1.0 / (tau_ * tau_))
                                  : build_k(model_.p(), 0);
}

namespace {

double log_criterion(const Matrix& info, std::size_t root) {
  const SpdResult res = spd_factorize(info);
  const SpdFactorization* f = spd_ok(res);
  if (!f) return worst_log_criterion;
  return f->log_det() / static_cast<double>(root);
}

}  // namespace

double gbd_value(const Design& d, const CriterionConfig& cfg) {
  const Matrix x = apply_scaling(d, cfg.model(), cfg.scaling());
  Matrix info = gram(x, cfg.sigma_factor());
  if (cfg.q() > 0) info = add(info, cfg.k_over_tau_sq());
  return log_criterion(info, cfg.r());
}

double d_value(const Design& d, const CriterionConfig& cfg) {
  const Matrix x_pri = model_matrix(d, cfg.model().primary);
  return log_criterion(gram(x_pri, cfg.sigma_factor()), cfg.p());
}

PosteriorMoments posterior_moments(const Design& d, const CriterionConfig& cfg,
                                   const std::vector<double>& y) {
  if (y.size() != d.runs())
    throw std::invalid_argument("posterior_moments: response length must equal run count");
  const Matrix x = apply_scaling(d, cfg.model(), cfg.scaling());
  Matrix info = gram(x, cfg.sigma_factor());
  if (cfg.q() > 0) info = add(info, cfg.k_over_tau_sq());
  const SpdResult res = spd_factorize(info);
  const SpdFactorization* f = spd_ok(res);
  if (!f) throw std::invalid_argument("posterior_moments: information matrix is singular");
  // XᵀΣ⁻¹y via the cached factor of Σ
  const Matrix sigma_inv_y = solve_spd(cfg.sigma_factor(), Matrix::column(y));
  PosteriorMoments pm;
  pm.b = solve_spd(*f, matmul_at_b(x, sigma_inv_y));
  pm.s = spd_inverse(*f);
  for (std::size_t i = 0; i < pm.s.rows(); ++i)
    for (std::size_t j = i + 1; j < pm.s.cols(); ++j) {
      const double v = 0.5 * (pm.s(i, j) + pm.s(j, i));
      pm.s(i, j) = v;
      pm.s(j, i) = v;
    }
  return pm;
}

double response_sd(const VarianceRatios& eta) {
  double s = 0.0;
  for (double e : eta.eta) s += e;
  return std::sqrt(s);
}

double recommend_tau(const VarianceRatios& eta) { return 3.0 * response_sd(eta); }

}  // namespace gbd
