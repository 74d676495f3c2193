#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "seqheat/chain.hpp"
#include "seqheat/distribution_io.hpp"
#include "seqheat/enumeration.hpp"
#include "seqheat/fluctuation.hpp"
#include "seqheat/model_io.hpp"
#include "seqheat/sampler.hpp"

namespace seqheat::cli {

struct Options {
  std::string command;
  std::string modelPath;
  std::string out;
  std::string format = "csv";
  std::uint64_t shots = 100'000;
  std::optional<std::uint64_t> seed;
  std::size_t workers = 1;
  std::optional<double> tolerance;
  std::optional<std::uint64_t> cap;
  std::string dump;
  std::string forwardPath;
  std::string backwardPath;
};

namespace detail {

using nlohmann::json;

class Report {
 public:
  explicit Report(json header) : doc_(std::move(header)) { doc_["checks"] = json::array(); }

  void check(const std::string& name, bool passed, json details = json::object()) {
    details["name"] = name;
    details["passed"] = passed;
    doc_["checks"].push_back(std::move(details));
    allPassed_ = allPassed_ && passed;
  }

  json& doc() { return doc_; }
  bool passed() const { return allPassed_; }

  void write(std::ostream& out) {
    doc_["passed"] = allPassed_;
    out << doc_.dump(2) << '\n';
  }

 private:
  json doc_;
  bool allPassed_ = true;
};

inline json ft_json(const FTReport& r) {
  json mism = json::array();
  for (const auto& q : r.supportMismatches) mism.push_back(format_tuple(q));
  json j = {{"max_log_residual", r.maxLogResidual},
            {"checked_pairs", r.checkedPairs},
            {"support_mismatches", mism}};
  if (r.worstTuple) j["worst_tuple"] = format_tuple(*r.worstTuple);
  return j;
}

inline std::string sibling_path(const std::string& path, const std::string& tag) {
  const auto slash = path.find_last_of('/');
  const auto dot = path.find_last_of('.');
  if (dot == std::string::npos || (slash != std::string::npos && dot < slash)) return path + "." + tag;
  return path.substr(0, dot) + "." + tag + path.substr(dot);
}

inline void write_file(const std::string& path, const std::string& content) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw ConfigError("cannot write '" + path + "'");
  f << content;
}

inline JointHeatDistribution read_distribution(const std::string& path, Direction dir) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot open distribution '" + path + "'");
  if (path.size() >= 5 && path.substr(path.size() - 5) == ".json") {
    json j;
    try {
      j = json::parse(f);
    } catch (const json::parse_error& e) {
      throw ConfigError("distribution JSON '" + path + "': " + e.what());
    }
    return distribution_from_json(j.contains("entries") ? j : j.at(std::string(to_string(dir))));
  }
  auto d = read_csv(f, dir);
  d.direction = dir;
  return d;
}

inline bool mass_ok(const JointHeatDistribution& d) { return std::abs(d.total_mass() - 1.0) <= 1e-10; }

inline int run_validate(const ModelDocument& doc, const Options& opt, Report& rep) {
  const Chain chain = compile(doc.config);
  const double dbTol = opt.tolerance.value_or(doc.detailedBalanceTolerance);
  for (std::size_t i = 0; i < chain.size(); ++i) {
    const auto& col = chain.collisions[i];
    const std::string tag = "collision_" + std::to_string(i + 1);

    const auto u = validate_energy_preservation(col.unitary, 1e-10);
    rep.check(tag + ".unitarity", u.passed,
              {{"max_residual", u.maxResidual}, {"block_structure_ok", u.blockStructureOk}});

    double stoch = 0.0;
    for (std::size_t k = 0; k < col.transitions.probs.size(); ++k) {
      const auto& b = col.transitions.probs[k];
      stoch = std::max({stoch, (b.colwise().sum().array() - 1.0).abs().maxCoeff(),
                        (b.rowwise().sum().array() - 1.0).abs().maxCoeff()});
    }
    rep.check(tag + ".transition_stochasticity", stoch <= 1e-10, {{"max_residual", stoch}});

    const auto db = assert_detailed_balance(col.propagator, col.ancillaThermal.beta,
                                            chain.model.system, dbTol);
    rep.check(tag + ".detailed_balance", db.passed,
              {{"max_relative_residual", db.maxResidual},
               {"tolerance", dbTol},
               {"worst_pair", {db.worstFirst, db.worstSecond}}});
  }
  return 0;
}

inline int run_exact(const ModelDocument& doc, const Options& opt, Report& rep) {
  const Chain chain = compile(doc.config);
  EnumerationOptions eo;
  eo.cap = opt.cap.value_or(doc.enumerationCap);
  const auto fwd = exact_forward_joint(chain, eo);
  const auto bwd = exact_backward_joint(chain, eo);
  rep.check("forward_normalization", mass_ok(fwd),
            {{"total_mass", fwd.total_mass()}, {"pruned_mass", fwd.prunedMass}});
  rep.check("backward_normalization", mass_ok(bwd),
            {{"total_mass", bwd.total_mass()}, {"pruned_mass", bwd.prunedMass}});

  if (opt.out.empty()) {
    rep.doc()["forward"] = to_json(fwd);
    rep.doc()["backward"] = to_json(bwd);
  } else if (opt.format == "json") {
    write_file(opt.out, json{{"forward", to_json(fwd)}, {"backward", to_json(bwd)}}.dump(2) + "\n");
    rep.doc()["outputs"] = {opt.out};
  } else {
    std::ostringstream f, b;
    write_csv(f, fwd);
    write_csv(b, bwd);
    const auto bpath = sibling_path(opt.out, "backward");
    write_file(opt.out, f.str());
    write_file(bpath, b.str());
    rep.doc()["outputs"] = {opt.out, bpath};
  }
  return 0;
}

inline int run_verify(const ModelDocument& doc, const Options& opt, Report& rep) {
  const Chain chain = compile(doc.config);
  EnumerationOptions eo;
  eo.cap = opt.cap.value_or(doc.enumerationCap);
  const double tol = opt.tolerance.value_or(doc.tolerance);
  const auto betas = chain.model.ancilla_betas();

  const auto fwd = opt.forwardPath.empty() ? exact_forward_joint(chain, eo)
                                           : read_distribution(opt.forwardPath, Direction::forward);
  const auto bwd = opt.backwardPath.empty()
                       ? exact_backward_joint(chain, eo)
                       : read_distribution(opt.backwardPath, Direction::backward);
  rep.doc()["tolerance"] = tol;

  const auto ft = verify_joint_ft(fwd, bwd, betas, chain.model.systemBeta, tol);
  rep.check("joint_fluctuation_theorem", ft.passed, ft_json(ft));

  const auto singles = single_collision_distributions(chain, eo);
  const auto prod = verify_product_relation(fwd, bwd, singles, tol);
  rep.check("product_relation", prod.passed, ft_json(prod));

  if (chain.size() >= 2) {
    const auto part = verify_partial_decomposition(chain, tol, eo);
    rep.check("partial_decomposition", part.passed, ft_json(part));
    const auto prefixes = verify_prefix_closure(chain, tol, eo);
    for (std::size_t k = 0; k < prefixes.size(); ++k) {
      rep.check("prefix_marginal_ft.k" + std::to_string(k + 1), prefixes[k].passed,
                ft_json(prefixes[k]));
    }
  }

  const auto viaAncilla = exact_forward_joint_via_ancilla_paths(chain, eo);
  const double routeGap = max_entry_difference(fwd, viaAncilla);
  rep.check("route_equivalence", routeGap <= 1e-12, {{"max_entry_difference", routeGap}});

  const double ift = integral_ft_average(fwd, betas, chain.model.systemBeta);
  rep.check("integral_fluctuation_theorem", std::abs(ift - 1.0) <= tol,
            {{"average_exp_minus_sigma", ift}});
  return 0;
}

inline int run_sample(const ModelDocument& doc, const Options& opt, Report& rep, std::ostream& err) {
  const Chain chain = compile(doc.config);
  SamplerConfig sc;
  sc.shots = opt.shots;
  sc.masterSeed = opt.seed.value_or(doc.config.masterSeed);
  sc.workerCount = opt.workers;
  rep.doc()["sampler"] = {{"shots", sc.shots}, {"seed", sc.masterSeed}, {"workers", sc.workerCount}};

  std::ofstream dump;
  if (!opt.dump.empty()) {
    dump.open(opt.dump, std::ios::binary);
    if (!dump) throw ConfigError("cannot write '" + opt.dump + "'");
  }
  const auto summary = run_sampler(chain, sc, [&](std::uint64_t shot, const TrajectoryRecord& r) {
    if (dump.is_open()) dump << trajectory_line(shot, r) << '\n';
  });

  const double se = summary.stdErrExpNegSigma;
  const double dev = std::abs(summary.meanExpNegSigma - 1.0);
  rep.check("integral_fluctuation_theorem_sampled", se > 0.0 ? dev <= 5.0 * se : dev <= 1e-12,
            {{"mean_exp_minus_sigma", summary.meanExpNegSigma},
             {"standard_error", se},
             {"deviation_in_standard_errors", se > 0.0 ? dev / se : 0.0}});
  rep.doc()["mean_sigma"] = summary.meanSigma;

  EnumerationOptions eo;
  eo.cap = opt.cap.value_or(doc.enumerationCap);
  try {
    const auto exact = exact_forward_joint(chain, eo);
    rep.doc()["total_variation_to_exact"] = total_variation(summary.empirical.distribution, exact);
  } catch (const EnumerationCapError& e) {
    err << "note: exact comparison skipped: " << e.what() << '\n';
  }

  if (opt.out.empty()) {
    rep.doc()["empirical"] = to_json(summary.empirical.distribution);
  } else if (opt.format == "json") {
    auto j = to_json(summary.empirical.distribution);
    j["shots"] = summary.empirical.shots;
    write_file(opt.out, j.dump(2) + "\n");
  } else {
    std::ostringstream f;
    write_csv(f, summary.empirical.distribution, true, &summary.empirical.standardErrors);
    write_file(opt.out, f.str());
  }
  return 0;
}

inline int run_entropy(const ModelDocument& doc, const Options& opt, Report& rep) {
  const Chain chain = compile(doc.config);
  EnumerationOptions eo;
  eo.cap = opt.cap.value_or(doc.enumerationCap);
  const double tol = opt.tolerance.value_or(doc.tolerance);
  const auto e = average_entropy_production(chain, tol, eo);
  rep.check("entropy_production_consistency", e.passed,
            {{"from_heat", e.fromHeat},
             {"from_log_ratio", e.fromLogRatio},
             {"informational", e.informational},
             {"max_disagreement", e.maxDisagreement},
             {"tolerance", tol}});
  return 0;
}

}  // namespace detail

/// Runs one subcommand. Returns 0 when every requested check passes, 1 on a
/// failed check, 2 on usage or input errors. The report goes to `out`;
/// diagnostics and timing go to `err`.
inline int run(std::vector<std::string> args, std::ostream& out, std::ostream& err) {
  Options opt;
  CLI::App app{"Sequential collisional heat exchange: exact joint heat statistics, "
               "fluctuation-theorem checks and Monte Carlo sampling."};
  app.name("seqheat");
  app.require_subcommand(1);

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("model", opt.modelPath, "Model document (JSON)")->required();
    sub->add_option("--tolerance", opt.tolerance, "Check tolerance");
    sub->add_option("--cap", opt.cap, "Enumeration cap (number of paths)");
    sub->add_option("--seed", opt.seed,
                    "Model master seed override (sample: Monte Carlo stream seed)");
  };
  auto add_output = [&](CLI::App* sub) {
    sub->add_option("--out", opt.out, "Output file");
    sub->add_option("--format", opt.format, "Output format")->check(CLI::IsMember({"csv", "json"}));
  };

  auto* validate = app.add_subcommand("validate", "Unitarity, energy preservation, detailed balance");
  add_common(validate);
  auto* exact = app.add_subcommand("exact", "Exact forward and backward joint heat distributions");
  add_common(exact);
  add_output(exact);
  auto* verify = app.add_subcommand("verify", "Fluctuation-theorem and route-equivalence checks");
  add_common(verify);
  verify->add_option("--forward", opt.forwardPath, "Forward distribution to check (csv/json)");
  verify->add_option("--backward", opt.backwardPath, "Backward distribution to check (csv/json)");
  auto* sample = app.add_subcommand("sample", "Monte Carlo estimate of the joint heat distribution");
  add_common(sample);
  add_output(sample);
  sample->add_option("--shots", opt.shots, "Number of trajectories")->check(CLI::PositiveNumber);
  sample->add_option("--workers", opt.workers, "Worker threads")->check(CLI::PositiveNumber);
  sample->add_option("--dump", opt.dump, "Write one JSON line per trajectory");
  auto* entropy = app.add_subcommand("entropy", "Average entropy production by three routes");
  add_common(entropy);

  std::string echo = "seqheat";
  for (const auto& a : args) echo += " " + a;
  std::reverse(args.begin(), args.end());
  try {
    app.parse(args);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    err << e.what() << "\n\n" << app.help();
    return 2;
  }
  opt.command = app.get_subcommands().front()->get_name();

  const auto t0 = std::chrono::steady_clock::now();
  try {
    ModelDocument doc = load_model_file(opt.modelPath);
    if (opt.seed && opt.command != "sample") doc.config.masterSeed = *opt.seed;

    detail::Report rep({{"command", echo},
                        {"subcommand", opt.command},
                        {"model_master_seed", doc.config.masterSeed},
                        {"collisions", doc.config.collisions()}});
    if (opt.command == "validate") detail::run_validate(doc, opt, rep);
    else if (opt.command == "exact") detail::run_exact(doc, opt, rep);
    else if (opt.command == "verify") detail::run_verify(doc, opt, rep);
    else if (opt.command == "sample") detail::run_sample(doc, opt, rep, err);
    else detail::run_entropy(doc, opt, rep);
    rep.write(out);

    const auto ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0);
    err << "elapsed_ms: " << ms.count() << '\n';
    return rep.passed() ? 0 : 1;
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  } catch (const DimensionError& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  } catch (const EnumerationCapError& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    err << "check failed: " << e.what() << '\n';
    return 1;
  }
}

}  // namespace seqheat::cli
