#include "gbd/problem_spec.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace gbd {

using nlohmann::json;

namespace {

std::string join_issues(const std::vector<std::string>& issues) {
  std::string s = "invalid problem specification:";
  for (const auto& i : issues) s += "\n  - " + i;
  return s;
}

struct Collector {
  std::vector<std::string> issues;

  void add(const std::string& path, const std::string& message) {
    issues.push_back(path + ": " + message);
  }
  void raise_if_any() {
    if (!issues.empty()) throw SpecError(std::move(issues));
  }
};

std::vector<std::string> to_string_list(const json& j) {
  std::vector<std::string> out;
  if (j.is_string()) {
    out.push_back(j.get<std::string>());
  } else if (j.is_array()) {
    for (const auto& item : j)
      out.push_back(item.is_string() ? item.get<std::string>() : item.dump());
  }
  return out;
}

int find_factor(const std::string& name, const std::vector<Factor>& factors) {
  for (std::size_t j = 0; j < factors.size(); ++j)
    if (factors[j].name == name) return static_cast<int>(j);
  return -1;
}

}  // namespace

SpecError::SpecError(std::vector<std::string> issues)
    : std::runtime_error(join_issues(issues)), issues_(std::move(issues)) {}

Term parse_term(const std::string& text, const std::vector<Factor>& factors) {
  if (text == "1") return Term::intercept();
  std::vector<std::pair<int, int>> powers;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t star = std::min(text.find('*', pos), text.size());
    std::string atom = text.substr(pos, star - pos);
    int exponent = 1;
    if (const std::size_t caret = atom.find('^'); caret != std::string::npos) {
      const std::string e = atom.substr(caret + 1);
      if (e != "1" && e != "2")
        throw std::invalid_argument("term '" + text + "': exponent must be 1 or 2");
      exponent = e == "2" ? 2 : 1;
      atom = atom.substr(0, caret);
    }
    const int factor = find_factor(atom, factors);
    if (factor < 0)
      throw std::invalid_argument("term '" + text + "': unknown factor '" + atom + "'");
    powers.emplace_back(factor, exponent);
    if (star == text.size()) break;
    pos = star + 1;
  }
  return Term(powers);  // validates distinctness and exponent range
}

namespace {

// Shorthand names accepted wherever a term list is expected.
bool expand_shorthand(const std::string& word, std::size_t m, std::vector<Term>& out) {
  const auto append = [&](TermKind kind) {
    const auto terms = second_order_terms(m, kind);
    out.insert(out.end(), terms.begin(), terms.end());
  };
  if (word == "none") return true;
  if (word == "first_order" || word == "main_effects") {
    append(TermKind::main_effects);
    return true;
  }
  if (word == "squares") {
    append(TermKind::squares);
    return true;
  }
  if (word == "interactions") {
    append(TermKind::interactions);
    return true;
  }
  if (word == "squares_and_interactions") {
    append(TermKind::squares_and_interactions);
    return true;
  }
  if (word == "full_second_order") {
    append(TermKind::full_second_order);
    return true;
  }
  return false;
}

std::vector<Term> parse_term_list(Collector& c, const json& j, const std::string& path,
                                  const std::vector<Factor>& factors) {
  std::vector<Term> out;
  if (!j.is_string() && !j.is_array()) {
    c.add(path, "expected a shorthand string or an array of term strings");
    return out;
  }
  for (const std::string& word : to_string_list(j)) {
    if (expand_shorthand(word, factors.size(), out)) continue;
    try {
      out.push_back(parse_term(word, factors));
    } catch (const std::exception& e) {
      c.add(path, e.what());
    }
  }
  return out;
}

std::vector<Factor> parse_factors(Collector& c, const json& j) {
  std::vector<Factor> factors;
  if (!j.is_array() || j.empty()) {
    c.add("factors", "expected a non-empty array");
    return factors;
  }
  for (std::size_t i = 0; i < j.size(); ++i) {
    const std::string path = "factors[" + std::to_string(i) + "]";
    const json& f = j[i];
    if (!f.is_object()) {
      c.add(path, "expected an object with name, stratum, levels");
      continue;
    }
    Factor factor;
    if (f.contains("name") && f["name"].is_string())
      factor.name = f["name"].get<std::string>();
    else
      c.add(path + ".name", "expected a string");
    if (f.contains("stratum") && f["stratum"].is_number_integer())
      factor.stratum = f["stratum"].get<int>() - 1;  // configs are 1-based
    else
      c.add(path + ".stratum", "expected an integer in 1..g");
    if (f.contains("levels") && f["levels"].is_array()) {
      for (const auto& v : f["levels"])
        if (v.is_number())
          factor.levels.push_back(v.get<double>());
        else
          c.add(path + ".levels", "expected numbers");
    } else {
      c.add(path + ".levels", "expected an array of at least 2 coded levels");
    }
    if (!factor.name.empty() && !factor.levels.empty()) {
      try {
        validate_factor(factor);
      } catch (const std::exception& e) {
        c.add(path, e.what());
      }
    }
    factors.push_back(std::move(factor));
  }
  std::vector<std::string> names;
  for (const auto& f : factors) names.push_back(f.name);
  std::sort(names.begin(), names.end());
  if (std::adjacent_find(names.begin(), names.end()) != names.end())
    c.add("factors", "duplicate factor name");
  return factors;
}

StratumStructure parse_structure(Collector& c, const json& j) {
  const auto fallback = [] { return single_stratum(1); };
  if (!j.is_object() || !j.contains("type") || !j["type"].is_string()) {
    c.add("structure", "expected an object with a 'type' field");
    return fallback();
  }
  const std::string type = j["type"].get<std::string>();
  try {
    if (type == "single_stratum") {
      if (!j.contains("runs") || !j["runs"].is_number_unsigned()) {
        c.add("structure.runs", "expected a positive run count");
        return fallback();
      }
      return single_stratum(j["runs"].get<std::size_t>());
    }
    if (type == "split_plot") {
      if (!j.contains("whole_plots") || !j.contains("runs_per_plot")) {
        c.add("structure", "split_plot needs whole_plots and runs_per_plot");
        return fallback();
      }
      return split_plot(j["whole_plots"].get<std::size_t>(),
                        j["runs_per_plot"].get<std::size_t>());
    }
    if (type == "strip_plot") {
      if (!j.contains("incidence") || !j["incidence"].is_array()) {
        c.add("structure.incidence", "expected a 0/1 matrix (array of arrays)");
        return fallback();
      }
      const auto& rows = j["incidence"];
      const std::size_t nc = rows.empty() ? 0 : rows[0].size();
      Matrix inc(rows.size(), nc);
      for (std::size_t a = 0; a < rows.size(); ++a) {
        if (!rows[a].is_array() || rows[a].size() != nc) {
          c.add("structure.incidence", "ragged incidence matrix");
          return fallback();
        }
        for (std::size_t b = 0; b < nc; ++b) inc(a, b) = rows[a][b].get<double>();
      }
      return strip_plot(inc);
    }
    if (type == "staggered_level") {
      if (!j.contains("class1_plots") || !j.contains("plot_size")) {
        c.add("structure", "staggered_level needs class1_plots and plot_size");
        return fallback();
      }
      return staggered_level(j["class1_plots"].get<std::size_t>(),
                             j["plot_size"].get<std::size_t>());
    }
    if (type == "explicit") {
      if (!j.contains("unit_of_run") || !j["unit_of_run"].is_array()) {
        c.add("structure.unit_of_run", "expected one unit array per stratum (1-based labels)");
        return fallback();
      }
      std::vector<std::vector<std::size_t>> maps;
      for (const auto& row : j["unit_of_run"]) {
        std::vector<std::size_t> m;
        for (const auto& v : row) {
          const long long label = v.get<long long>();
          if (label < 1) {
            c.add("structure.unit_of_run", "unit labels are 1-based positive integers");
            return fallback();
          }
          m.push_back(static_cast<std::size_t>(label - 1));
        }
        maps.push_back(std::move(m));
      }
      return StratumStructure::from_unit_maps(std::move(maps));
    }
    c.add("structure.type", "unknown type '" + type +
                                "' (single_stratum, split_plot, strip_plot, staggered_level, "
                                "explicit)");
  } catch (const SpecError&) {
    throw;
  } catch (const std::exception& e) {
    c.add("structure", e.what());
  }
  return fallback();
}

ModelSpec parse_model(Collector& c, const json& j, const std::string& path,
                      const std::vector<Factor>& factors, const ModelSpec* defaults) {
  ModelSpec model;
  if (!j.is_object()) {
    c.add(path, "expected an object with primary/potential term lists");
    return model;
  }
  if (j.contains("primary"))
    model.primary = parse_term_list(c, j["primary"], path + ".primary", factors);
  else if (defaults)
    model.primary = defaults->primary;
  else
    c.add(path + ".primary", "missing");
  if (j.contains("potential"))
    model.potential = parse_term_list(c, j["potential"], path + ".potential", factors);
  if (!model.primary.empty()) {
    try {
      validate_model(model, factors.size());
    } catch (const std::exception& e) {
      c.add(path, e.what());
    }
  }
  return model;
}

}  // namespace

ProblemSpec parse_problem_spec(const std::string& json_text, const std::string& origin) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    // byte offset -> line number for a pointable diagnostic
    std::size_t line = 1;
    for (std::size_t i = 0; i < e.byte && i < json_text.size(); ++i)
      if (json_text[i] == '\n') ++line;
    throw SpecError({origin + ":" + std::to_string(line) + ": " + e.what()});
  }

  Collector c;
  if (!j.is_object()) {
    c.add(origin, "top-level document must be an object");
    c.raise_if_any();
  }

  ProblemSpec spec;
  spec.factors = j.contains("factors") ? parse_factors(c, j["factors"])
                                       : (c.add("factors", "missing"), std::vector<Factor>{});
  spec.structure = j.contains("structure")
                       ? parse_structure(c, j["structure"])
                       : (c.add("structure", "missing"), single_stratum(1));

  const std::size_t g = spec.structure.strata();
  for (const Factor& f : spec.factors)
    if (f.stratum < 0 || static_cast<std::size_t>(f.stratum) >= g)
      c.add("factors", "factor '" + f.name + "' is assigned to stratum " +
                           std::to_string(f.stratum + 1) + " but the structure has only " +
                           std::to_string(g) + " strata");

  if (j.contains("model"))
    spec.model = parse_model(c, j["model"], "model", spec.factors, nullptr);
  else
    c.add("model", "missing");

  // eta: full length g (last entry 1) or length g-1 with the run stratum implied
  if (j.contains("eta") && j["eta"].is_array()) {
    for (const auto& v : j["eta"])
      if (v.is_number())
        spec.eta.eta.push_back(v.get<double>());
      else
        c.add("eta", "expected numbers");
    if (spec.eta.eta.size() + 1 == g) spec.eta.eta.push_back(1.0);
    try {
      validate_ratios(spec.eta, g);
    } catch (const std::exception& e) {
      c.add("eta", e.what());
    }
  } else if (g == 1) {
    spec.eta.eta = {1.0};
  } else {
    c.add("eta", "missing (one ratio per stratum, run stratum = 1)");
  }

  if (j.contains("tau")) {
    if (j["tau"].is_string() && j["tau"].get<std::string>() == "auto") {
      spec.tau_was_auto = true;
      if (spec.eta.eta.size() == g) spec.tau = recommend_tau(spec.eta);
    } else if (j["tau"].is_number() && j["tau"].get<double>() > 0.0) {
      spec.tau = j["tau"].get<double>();
    } else {
      c.add("tau", "expected a positive number or \"auto\"");
    }
  } else {
    spec.tau_was_auto = true;
    if (spec.eta.eta.size() == g) spec.tau = recommend_tau(spec.eta);
  }

  if (j.contains("search")) {
    const json& s = j["search"];
    if (!s.is_object()) {
      c.add("search", "expected an object");
    } else {
      if (s.contains("t_total")) {
        if (s["t_total"].is_number_unsigned() && s["t_total"].get<std::size_t>() >= 1)
          spec.search.t_total = s["t_total"].get<std::size_t>();
        else
          c.add("search.t_total", "expected a positive integer");
      }
      if (s.contains("seed")) {
        if (s["seed"].is_number_unsigned())
          spec.search.seed = s["seed"].get<std::uint64_t>();
        else
          c.add("search.seed", "expected a non-negative integer");
      }
      if (s.contains("workers")) {
        if (s["workers"].is_number_unsigned() && s["workers"].get<std::size_t>() >= 1)
          spec.search.workers = s["workers"].get<std::size_t>();
        else
          c.add("search.workers", "expected a positive integer");
      }
    }
  }

  if (j.contains("scenarios")) {
    if (!j["scenarios"].is_array() || j["scenarios"].empty()) {
      c.add("scenarios", "expected a non-empty array");
    } else {
      for (std::size_t i = 0; i < j["scenarios"].size(); ++i) {
        const std::string path = "scenarios[" + std::to_string(i) + "]";
        const json& sj = j["scenarios"][i];
        Scenario sc;
        sc.label = sj.is_object() && sj.contains("label") && sj["label"].is_string()
                       ? sj["label"].get<std::string>()
                       : "scenario_" + std::to_string(i + 1);
        sc.model = parse_model(c, sj, path, spec.factors, &spec.model);
        spec.scenarios.push_back(std::move(sc));
      }
    }
  }
  if (spec.scenarios.empty()) spec.scenarios.push_back({"model", spec.model});

  if (j.contains("submodels")) {
    const json& sj = j["submodels"];
    if (sj.is_string() && sj.get<std::string>() == "square_subsets") {
      // every non-empty subset of the square terms, binary-counter order
      const std::size_t m = spec.factors.size();
      if (m > 10) c.add("submodels", "square_subsets needs at most 10 factors");
      for (std::size_t mask = 1; m <= 10 && mask < (std::size_t{1} << m); ++mask) {
        std::vector<Term> extra;
        std::string label;
        for (std::size_t f = 0; f < m; ++f)
          if (mask & (1u << f)) {
            extra.push_back(Term::square(static_cast<int>(f)));
            label += (label.empty() ? "" : "+") + spec.factors[f].name + "^2";
          }
        spec.submodels.push_back(std::move(extra));
        spec.submodel_labels.push_back(label);
      }
    } else if (sj.is_array()) {
      for (std::size_t i = 0; i < sj.size(); ++i) {
        const std::string path = "submodels[" + std::to_string(i) + "]";
        auto extra = parse_term_list(c, sj[i], path, spec.factors);
        std::string label;
        for (const Term& t : extra)
          label += (label.empty() ? "" : "+") + term_name(t, spec.factors);
        spec.submodels.push_back(std::move(extra));
        spec.submodel_labels.push_back(label.empty() ? "model_" + std::to_string(i + 1) : label);
      }
    } else {
      c.add("submodels", "expected \"square_subsets\" or an array of term lists");
    }
  }

  if (j.contains("curve")) {
    const json& cj = j["curve"];
    if (cj.is_object()) {
      if (cj.contains("k_min")) spec.curve.k_min = cj["k_min"].get<std::size_t>();
      if (cj.contains("k_max")) spec.curve.k_max = cj["k_max"].get<std::size_t>();
      if (cj.contains("exhaustive_cap"))
        spec.curve.exhaustive_cap = cj["exhaustive_cap"].get<std::size_t>();
      if (cj.contains("seed")) spec.curve.sample_seed = cj["seed"].get<std::uint64_t>();
      if (spec.curve.k_min > spec.curve.k_max) c.add("curve", "k_min exceeds k_max");
    } else {
      c.add("curve", "expected an object");
    }
  }

  spec.sensitivity_tau = TauPolicy::fixed(spec.tau);
  if (j.contains("sensitivity")) {
    const json& sj = j["sensitivity"];
    if (sj.is_object() && sj.contains("eta_grid") && sj["eta_grid"].is_array()) {
      for (const auto& axis : sj["eta_grid"]) {
        std::vector<double> values;
        for (const auto& v : axis) values.push_back(v.get<double>());
        if (values.empty()) c.add("sensitivity.eta_grid", "empty axis");
        for (double v : values)
          if (!(v > 0.0)) c.add("sensitivity.eta_grid", "ratios must be positive");
        spec.eta_grid.push_back(std::move(values));
      }
      if (spec.eta_grid.size() != g - 1)
        c.add("sensitivity.eta_grid",
              "expected one axis per non-run stratum (" + std::to_string(g - 1) + ")");
    } else {
      c.add("sensitivity", "expected an object with eta_grid");
    }
    if (sj.is_object() && sj.contains("tau")) {
      const json& tj = sj["tau"];
      if (tj.is_number() && tj.get<double>() > 0.0)
        spec.sensitivity_tau = TauPolicy::fixed(tj.get<double>());
      else if (tj.is_object() && tj.contains("sigma_y_ratio") &&
               tj["sigma_y_ratio"].is_number())
        spec.sensitivity_tau = TauPolicy::ratio(tj["sigma_y_ratio"].get<double>());
      else
        c.add("sensitivity.tau", "expected a positive number or {\"sigma_y_ratio\": x}");
    }
  }

  c.raise_if_any();
  return spec;
}

ProblemSpec load_problem_spec(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw SpecError({path + ": cannot open file"});
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_problem_spec(buffer.str(), path);
}

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

Design read_design_csv(const std::string& path, const std::vector<Factor>& factors) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument(path + ": cannot open file");
  std::string line;
  if (!std::getline(in, line)) throw std::invalid_argument(path + ": empty file");
  if (!line.empty() && line.back() == '\r') line.pop_back();

  std::vector<std::string> header;
  std::stringstream hs(line);
  std::string cell;
  while (std::getline(hs, cell, ',')) header.push_back(cell);
  if (header.size() != factors.size())
    throw std::invalid_argument(path + ": header has " + std::to_string(header.size()) +
                                " columns but " + std::to_string(factors.size()) +
                                " factors are declared");
  for (std::size_t i = 0; i < header.size(); ++i)
    if (header[i] != factors[i].name)
      throw std::invalid_argument(path + ": header column " + std::to_string(i + 1) + " is '" +
                                  header[i] + "', expected '" + factors[i].name + "'");

  std::vector<std::vector<double>> rows;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<double> row;
    std::stringstream ls(line);
    while (std::getline(ls, cell, ',')) {
      std::size_t used = 0;
      double v = 0.0;
      try {
        v = std::stod(cell, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used != cell.size())
        throw std::invalid_argument(path + ":" + std::to_string(line_no) +
                                    ": cannot parse value '" + cell + "'");
      row.push_back(v);
    }
    if (row.size() != factors.size())
      throw std::invalid_argument(path + ":" + std::to_string(line_no) + ": expected " +
                                  std::to_string(factors.size()) + " values, got " +
                                  std::to_string(row.size()));
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw std::invalid_argument(path + ": no runs");

  Design d{Matrix(rows.size(), factors.size())};
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t jj = 0; jj < factors.size(); ++jj) d.settings(i, jj) = rows[i][jj];
  return d;
}

void write_design_csv(const std::string& path, const Design& d,
                      const std::vector<Factor>& factors) {
  std::ofstream out(path);
  if (!out) throw std::invalid_argument(path + ": cannot open for writing");
  for (std::size_t j = 0; j < factors.size(); ++j)
    out << (j ? "," : "") << factors[j].name;
  out << "\n";
  for (std::size_t i = 0; i < d.runs(); ++i) {
    for (std::size_t j = 0; j < d.factors(); ++j)
      out << (j ? "," : "") << format_double(d.settings(i, j));
    out << "\n";
  }
  if (!out) throw std::invalid_argument(path + ": write failed");
}

}  // namespace gbd
