#include "gbd/model.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>

namespace gbd {

void validate_factor(const Factor& f) {
  if (f.name.empty()) throw std::invalid_argument("factor with empty name");
  if (f.levels.size() < 2)
    throw std::invalid_argument("factor '" + f.name + "' needs at least 2 levels");
  for (std::size_t i = 0; i + 1 < f.levels.size(); ++i)
    if (!(f.levels[i] < f.levels[i + 1]))
      throw std::invalid_argument("factor '" + f.name + "' levels must be strictly increasing");
  for (double v : f.levels)
    if (!std::isfinite(v))
      throw std::invalid_argument("factor '" + f.name + "' has a non-finite level");
  if (f.levels.front() != -1.0 || f.levels.back() != 1.0)
    throw std::invalid_argument("factor '" + f.name +
                                "' must be coded with min level -1 and max level +1");
  if (f.stratum < 0) throw std::invalid_argument("factor '" + f.name + "' has negative stratum");
}

Term::Term(std::vector<std::pair<int, int>> powers) : powers_(std::move(powers)) {
  std::sort(powers_.begin(), powers_.end());
  for (std::size_t i = 0; i < powers_.size(); ++i) {
    const auto& [factor, exp] = powers_[i];
    if (factor < 0) throw std::invalid_argument("term references a negative factor index");
    if (exp < 1 || exp > 2)
      throw std::invalid_argument("term exponent must be 1 or 2 (second-order models only)");
    if (i > 0 && powers_[i - 1].first == factor)
      throw std::invalid_argument("term repeats a factor; fold powers into the exponent");
  }
}

Term Term::main_effect(int factor) { return Term({{factor, 1}}); }
Term Term::square(int factor) { return Term({{factor, 2}}); }
Term Term::interaction(int a, int b) { return Term({{a, 1}, {b, 1}}); }

int Term::max_factor() const {
  int m = -1;
  for (const auto& [factor, exp] : powers_) m = std::max(m, factor);
  return m;
}

std::string term_name(const Term& t, const std::vector<Factor>& factors) {
  if (t.is_intercept()) return "1";
  std::string s;
  for (const auto& [factor, exp] : t.powers()) {
    if (!s.empty()) s += "*";
    const std::string base = factor < static_cast<int>(factors.size())
                                 ? factors[factor].name
                                 : "x" + std::to_string(factor + 1);
    s += base;
    if (exp == 2) s += "^2";
  }
  return s;
}

void validate_model(const ModelSpec& m, std::size_t num_factors) {
  if (m.primary.empty()) throw std::invalid_argument("model has no primary terms");
  if (std::find(m.primary.begin(), m.primary.end(), Term::intercept()) == m.primary.end())
    throw std::invalid_argument("primary terms must include the intercept");
  std::set<Term> seen(m.primary.begin(), m.primary.end());
  if (seen.size() != m.primary.size())
    throw std::invalid_argument("duplicate primary term");
  for (const Term& t : m.potential) {
    if (!seen.insert(t).second)
      throw std::invalid_argument("potential terms must be disjoint from primary terms");
  }
  for (const Term& t : m.primary)
    if (t.max_factor() >= static_cast<int>(num_factors))
      throw std::invalid_argument("primary term references an unknown factor index");
  for (const Term& t : m.potential)
    if (t.max_factor() >= static_cast<int>(num_factors))
      throw std::invalid_argument("potential term references an unknown factor index");
}

Matrix model_matrix(const Design& d, const std::vector<Term>& terms) {
  const std::size_t n = d.runs();
  Matrix x(n, terms.size(), 1.0);
  for (std::size_t t = 0; t < terms.size(); ++t) {
    if (terms[t].max_factor() >= static_cast<int>(d.factors()))
      throw std::invalid_argument("model_matrix: term references an unknown factor index");
    for (const auto& [factor, exp] : terms[t].powers()) {
      for (std::size_t i = 0; i < n; ++i) {
        const double v = d.settings(i, factor);
        x(i, t) *= (exp == 2 ? v * v : v);
      }
    }
  }
  return x;
}

Matrix build_k(std::size_t p, std::size_t q) {
  if (p < 1) throw std::invalid_argument("build_k: p must be at least 1");
  Matrix k(p + q, p + q);
  for (std::size_t i = p; i < p + q; ++i) k(i, i) = 1.0;
  return k;
}

std::vector<Term> second_order_terms(std::size_t num_factors, TermKind kind) {
  const int m = static_cast<int>(num_factors);
  std::vector<Term> out;
  const bool mains = kind == TermKind::main_effects || kind == TermKind::full_second_order;
  const bool inters = kind == TermKind::interactions ||
                      kind == TermKind::squares_and_interactions ||
                      kind == TermKind::full_second_order;
  const bool squares = kind == TermKind::squares ||
                       kind == TermKind::squares_and_interactions ||
                       kind == TermKind::full_second_order;
  if (mains) {
    out.push_back(Term::intercept());
    for (int j = 0; j < m; ++j) out.push_back(Term::main_effect(j));
  }
  if (inters)
    for (int a = 0; a < m; ++a)
      for (int b = a + 1; b < m; ++b) out.push_back(Term::interaction(a, b));
  if (squares)
    for (int j = 0; j < m; ++j) out.push_back(Term::square(j));
  return out;
}

}  // namespace gbd
