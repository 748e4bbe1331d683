// Command-line front end: optimize | evaluate | compare | variances | curve |
// sensitivity over a declarative JSON problem specification.
//
// Exit codes: 0 success, 2 input/validation error, 3 computation failure
// (search found only singular designs).

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "gbd/analysis.hpp"
#include "gbd/problem_spec.hpp"
#include "gbd/search.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int exit_ok = 0;
constexpr int exit_invalid = 2;
constexpr int exit_failed = 3;

struct CommonArgs {
  std::string spec_path;
  std::vector<std::string> design_paths;
  std::string out_dir = ".";
  std::string format = "csv";
  bool verbose = false;
  // optional overrides
  std::int64_t seed = -1;
  int workers = 0;
  int k_max = -1;
};

std::string design_label(const std::string& path) {
  return fs::path(path).stem().string();
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error(path.string() + ": cannot open for writing");
  out << text;
  if (!out) throw std::runtime_error(path.string() + ": write failed");
}

// 12-significant-digit numbers in every JSON document we emit, except the
// log-criterion values, which carry full precision so that re-evaluating the
// design CSV reproduces the recorded value within 1e-12.
json num(double v) { return json::parse(gbd::format_double(v)); }

json eta_json(const gbd::VarianceRatios& eta) {
  json a = json::array();
  for (double e : eta.eta) a.push_back(num(e));
  return a;
}

gbd::ProblemSpec load_spec(const CommonArgs& args) {
  gbd::ProblemSpec spec = gbd::load_problem_spec(args.spec_path);
  if (args.seed >= 0) spec.search.seed = static_cast<std::uint64_t>(args.seed);
  if (args.workers > 0) {
    spec.search.workers = static_cast<std::size_t>(args.workers);
    spec.curve.workers = static_cast<std::size_t>(args.workers);
  }
  if (args.k_max >= 0) {
    spec.curve.k_max = static_cast<std::size_t>(args.k_max);
    if (spec.curve.k_min > spec.curve.k_max) spec.curve.k_min = 0;
  }
  return spec;
}

// Reads and validates every design against the spec; throws SpecError listing
// every constraint violation (run, factor, and stratum unit).
std::vector<gbd::LabeledDesign> load_designs(const gbd::ProblemSpec& spec,
                                             const std::vector<std::string>& paths) {
  std::vector<gbd::LabeledDesign> designs;
  std::vector<std::string> issues;
  for (const auto& path : paths) {
    try {
      gbd::Design d = gbd::read_design_csv(path, spec.factors);
      for (const std::string& issue : gbd::check_design(d, spec.factors, spec.structure))
        issues.push_back(path + ": " + issue);
      designs.push_back({design_label(path), std::move(d)});
    } catch (const std::exception& e) {
      issues.push_back(e.what());
    }
  }
  if (!issues.empty()) throw gbd::SpecError(std::move(issues));
  return designs;
}

void emit_table(const CommonArgs& args, const std::string& name, const std::string& csv) {
  if (args.format == "json") {
    // rows of column->value objects derived from the CSV
    json rows = json::array();
    std::stringstream ss(csv);
    std::string line;
    std::vector<std::string> header;
    while (std::getline(ss, line)) {
      std::vector<std::string> cells;
      std::stringstream ls(line);
      std::string cell;
      while (std::getline(ls, cell, ',')) cells.push_back(cell);
      if (header.empty()) {
        header = cells;
        continue;
      }
      json row;
      for (std::size_t i = 0; i < header.size() && i < cells.size(); ++i) row[header[i]] = cells[i];
      rows.push_back(row);
    }
    write_text(fs::path(args.out_dir) / (name + ".json"), rows.dump(2) + "\n");
    std::cout << rows.dump(2) << "\n";
  } else {
    write_text(fs::path(args.out_dir) / (name + ".csv"), csv);
    std::cout << csv;
  }
}

int cmd_optimize(const CommonArgs& args) {
  const gbd::ProblemSpec spec = load_spec(args);
  const gbd::CriterionConfig cfg(spec.factors, spec.model, spec.structure, spec.eta, spec.tau);

  gbd::SearchConfig scfg;
  scfg.t_total = spec.search.t_total;
  scfg.seed = spec.search.seed;
  scfg.workers = spec.search.workers;
  if (args.verbose) {
    const std::size_t step = std::max<std::size_t>(1, scfg.t_total / 20);
    scfg.progress = [step](std::size_t done, double best) {
      if (done % step == 0)
        std::fprintf(stderr, "restart %zu: best log_d = %.6f\n", done, best);
    };
  }

  const auto start = std::chrono::steady_clock::now();
  const gbd::SearchResult result = gbd::optimize(cfg, scfg);
  const double elapsed =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  if (result.log_d == gbd::worst_log_criterion) {
    std::cerr << "error: every restart produced a singular information matrix; "
                 "the model is too large for this structure\n";
    return exit_failed;
  }

  fs::create_directories(args.out_dir);
  const fs::path design_path = fs::path(args.out_dir) / "design.csv";
  gbd::write_design_csv(design_path.string(), result.design, spec.factors);

  json record;
  record["criterion"] = cfg.q() > 0 ? "GBD" : "D";
  record["log_d"] = result.log_d;
  record["d"] = std::exp(result.log_d);
  record["r"] = cfg.r();
  record["p"] = cfg.p();
  record["q"] = cfg.q();
  record["tau"] = num(spec.tau);
  record["tau_auto"] = spec.tau_was_auto;
  record["eta"] = eta_json(spec.eta);
  record["seed"] = result.seed;
  record["t_total"] = result.restarts_completed;
  record["workers"] = spec.search.workers;
  record["elapsed_seconds"] = num(elapsed);
  record["improving_passes_histogram"] = result.improving_passes_histogram;
  record["design_csv"] = design_path.string();
  if (cfg.q() > 0) record["candidate_set"] = cfg.scaling().candidate_summary;
  write_text(fs::path(args.out_dir) / "result.json", record.dump(2) + "\n");

  std::cout << "criterion " << (cfg.q() > 0 ? "GBD" : "D") << ", n=" << result.design.runs()
            << ", p=" << cfg.p() << ", q=" << cfg.q() << "\n"
            << "log_d = " << gbd::format_double(result.log_d)
            << ", d = " << gbd::format_double(std::exp(result.log_d)) << "\n"
            << "design written to " << design_path.string() << "\n";
  return exit_ok;
}

int cmd_evaluate(const CommonArgs& args) {
  const gbd::ProblemSpec spec = load_spec(args);
  const auto designs = load_designs(spec, args.design_paths);
  const gbd::CriterionConfig cfg(spec.factors, spec.model, spec.structure, spec.eta, spec.tau);

  json all = json::array();
  for (const auto& [label, design] : designs) {
    const double log_d = cfg.q() > 0 ? gbd::gbd_value(design, cfg) : gbd::d_value(design, cfg);
    json record;
    record["design"] = label;
    record["criterion"] = cfg.q() > 0 ? "GBD" : "D";
    record["valid"] = true;
    record["log_d"] = log_d;
    record["d"] = std::exp(log_d);
    record["singular"] = log_d == gbd::worst_log_criterion;
    all.push_back(record);
    std::cout << label << ": log_d = " << gbd::format_double(log_d)
              << ", d = " << gbd::format_double(std::exp(log_d)) << "\n";
  }
  fs::create_directories(args.out_dir);
  write_text(fs::path(args.out_dir) / "evaluate.json",
             (all.size() == 1 ? all[0] : all).dump(2) + "\n");
  return exit_ok;
}

int cmd_compare(const CommonArgs& args) {
  const gbd::ProblemSpec spec = load_spec(args);
  const auto designs = load_designs(spec, args.design_paths);
  const gbd::EfficiencyTable table = gbd::efficiency_table(
      designs, spec.scenarios, spec.factors, spec.structure, spec.eta, spec.tau);
  fs::create_directories(args.out_dir);
  emit_table(args, "efficiency", gbd::efficiency_csv(table));
  return exit_ok;
}

int cmd_variances(const CommonArgs& args) {
  const gbd::ProblemSpec spec = load_spec(args);
  if (spec.submodels.empty())
    throw gbd::SpecError({"variances: the spec has no 'submodels' block"});
  const auto designs = load_designs(spec, args.design_paths);

  std::vector<std::pair<std::string, gbd::VarianceReport>> reports;
  for (const auto& [label, design] : designs)
    for (std::size_t i = 0; i < spec.submodels.size(); ++i) {
      auto report = gbd::submodel_variances(design, spec.factors, spec.structure, spec.eta,
                                            spec.model.primary, spec.submodels[i]);
      reports.emplace_back(label + ":" + spec.submodel_labels[i], std::move(report));
    }
  fs::create_directories(args.out_dir);
  emit_table(args, "variances", gbd::variance_csv(reports, spec.factors));
  return exit_ok;
}

int cmd_curve(const CommonArgs& args) {
  const gbd::ProblemSpec spec = load_spec(args);
  const auto designs = load_designs(spec, args.design_paths);
  std::vector<std::pair<std::string, std::vector<gbd::VarianceCurvePoint>>> curves;
  bool any_sampled = false;
  for (const auto& [label, design] : designs) {
    curves.emplace_back(label, gbd::overall_variance_curve(design, spec.factors, spec.structure,
                                                           spec.eta, spec.curve));
    for (const auto& pt : curves.back().second) any_sampled |= pt.sampled;
  }
  fs::create_directories(args.out_dir);
  emit_table(args, "variance_curve", gbd::curve_csv(curves));
  if (any_sampled)
    std::cout << "submodel sampling active (cap " << spec.curve.exhaustive_cap << "), seed "
              << spec.curve.sample_seed << "\n";
  return exit_ok;
}

int cmd_sensitivity(const CommonArgs& args) {
  const gbd::ProblemSpec spec = load_spec(args);
  if (spec.eta_grid.empty())
    throw gbd::SpecError({"sensitivity: the spec has no 'sensitivity' block"});
  const auto designs = load_designs(spec, args.design_paths);
  const auto points = gbd::sensitivity_sweep(designs, spec.scenarios, spec.factors,
                                             spec.structure, spec.eta_grid, spec.sensitivity_tau);
  fs::create_directories(args.out_dir);
  emit_table(args, "sensitivity", gbd::sensitivity_csv(points));
  return exit_ok;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Generalized Bayesian D-optimal design construction and evaluation"};
  app.require_subcommand(1);

  CommonArgs args;
  const auto add_common = [&](CLI::App* cmd, bool needs_design, bool many_designs) {
    cmd->add_option("--spec", args.spec_path, "problem specification (JSON)")
        ->required()
        ->check(CLI::ExistingFile);
    if (needs_design) {
      auto* opt = cmd->add_option("--design", args.design_paths, "design CSV (repeatable)")
                      ->required()
                      ->check(CLI::ExistingFile);
      if (!many_designs) opt->expected(1);
    }
    cmd->add_option("--out", args.out_dir, "output directory (default .)");
    cmd->add_option("--seed", args.seed, "override the spec's search seed");
    cmd->add_option("--workers", args.workers, "override the spec's worker count");
    cmd->add_option("--format", args.format, "csv|json table output")
        ->check(CLI::IsMember({"csv", "json"}));
    cmd->add_flag("-v,--verbose", args.verbose, "progress on stderr");
  };

  auto* optimize = app.add_subcommand("optimize", "search for the optimal design");
  add_common(optimize, false, false);
  auto* evaluate = app.add_subcommand("evaluate", "criterion value of existing designs");
  add_common(evaluate, true, true);
  auto* compare = app.add_subcommand("compare", "efficiency table across scenarios");
  add_common(compare, true, true);
  auto* variances = app.add_subcommand("variances", "submodel coefficient variances");
  add_common(variances, true, true);
  auto* curve = app.add_subcommand("curve", "overall-variance curve over k interactions");
  add_common(curve, true, true);
  curve->add_option("--k-max", args.k_max, "largest interaction count");
  auto* sensitivity = app.add_subcommand("sensitivity", "efficiency over an eta grid");
  add_common(sensitivity, true, true);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? exit_ok : exit_invalid;
  }

  try {
    if (optimize->parsed()) return cmd_optimize(args);
    if (evaluate->parsed()) return cmd_evaluate(args);
    if (compare->parsed()) return cmd_compare(args);
    if (variances->parsed()) return cmd_variances(args);
    if (curve->parsed()) return cmd_curve(args);
    if (sensitivity->parsed()) return cmd_sensitivity(args);
  } catch (const gbd::SpecError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_invalid;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_invalid;
  }
  return exit_invalid;
}
