#pragma once

#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "gbd/linalg.hpp"

namespace gbd {

// Experimental factor on the coded [-1, 1] scale. `stratum` is a 0-based
// stratum index (configuration files use 1-based labels); the run stratum is
// g-1. Levels must be strictly increasing with min -1 and max +1.
struct Factor {
  std::string name;
  int stratum = 0;
  std::vector<double> levels;
};

void validate_factor(const Factor& f);

// Product of factor powers; the empty product is the intercept. Exponents are
// capped at 2: the scaling procedure is tuned for second-order models and
// higher powers would silently misuse it.
class Term {
 public:
  Term() = default;
  explicit Term(std::vector<std::pair<int, int>> powers);

  static Term intercept() { return Term(); }
  static Term main_effect(int factor);
  static Term square(int factor);
  static Term interaction(int a, int b);

  const std::vector<std::pair<int, int>>& powers() const { return powers_; }
  bool is_intercept() const { return powers_.empty(); }
  int max_factor() const;

  bool operator==(const Term& other) const = default;
  bool operator<(const Term& other) const { return powers_ < other.powers_; }

 private:
  std::vector<std::pair<int, int>> powers_;  // sorted by factor index
};

std::string term_name(const Term& t, const std::vector<Factor>& factors);

// Primary terms are fitted precisely (diffuse prior); potential terms carry a
// finite-variance prior. The two lists must be disjoint and primary must
// contain the intercept.
struct ModelSpec {
  std::vector<Term> primary;
  std::vector<Term> potential;

  std::size_t p() const { return primary.size(); }
  std::size_t q() const { return potential.size(); }
  std::size_t r() const { return primary.size() + potential.size(); }
};

void validate_model(const ModelSpec& m, std::size_t num_factors);

// n×m factor settings, one run per row.
struct Design {
  Matrix settings;

  std::size_t runs() const { return settings.rows(); }
  std::size_t factors() const { return settings.cols(); }
};

// Column t, row i = product over (j, e) in term t of settings(i, j)^e.
Matrix model_matrix(const Design& d, const std::vector<Term>& terms);

// Block-diagonal (p+q)×(p+q): zero block of side p, identity of side q.
Matrix build_k(std::size_t p, std::size_t q);

enum class TermKind {
  main_effects,  // intercept first, then main effects by factor index
  squares,
  interactions,
  squares_and_interactions,  // interactions (lexicographic), then squares
  full_second_order,
};

// Canonical term lists: intercept, mains by factor index, interactions
// lexicographic, squares by factor index.
std::vector<Term> second_order_terms(std::size_t num_factors, TermKind kind);

}  // namespace gbd
