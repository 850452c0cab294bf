// spikeforge command-line tool.

#include <cstdint>
#include <cstdlib>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "spikeforge.hpp"

namespace sf = spikeforge;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitVerification = 2;

/// A bad or missing flag. The message always starts with the flag name.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Flags {
  std::string network, data, calib, calib_data, model, report, out, schedule = "sformer", theorem = "all", t_list;
  double p = 1.0, lambda = 0.0, fraction = 0.02;
  int M = 8;
  std::size_t trials = 0, steps = 40, repeats = 3, t_max = 64;
  std::optional<std::uint64_t> seed;
  std::uint64_t case_id = 0;
  bool raw = false;
};

std::uint64_t resolve_seed(const Flags& f) {
  if (f.seed) return *f.seed;
  if (const char* env = std::getenv("SPIKEFORGE_SEED"); env && *env) {
    try {
      std::size_t pos = 0;
      const auto v = std::stoull(env, &pos);
      if (pos == std::string(env).size()) return v;
    } catch (const std::exception&) {
    }
    throw UsageError("SPIKEFORGE_SEED must be a non-negative integer, got '" + std::string(env) + "'");
  }
  return 0;
}

void need(const std::string& value, const char* flag, const char* command) {
  if (value.empty()) throw UsageError(std::string(flag) + " is required for " + command);
}

void check_p(double p) {
  if (!(p > 0.0 && p <= 50.0)) throw UsageError("--p must lie in (0, 50], got " + std::to_string(p));
}
void check_lambda(double l) {
  if (!(l > 0.0 && l <= 1.0)) throw UsageError("--lambda must lie in (0, 1], got " + std::to_string(l));
}
void check_M(int M) {
  if (M < 1 || M > 60) throw UsageError("--M must lie in [1, 60], got " + std::to_string(M));
}
void check_fraction(double f) {
  if (!(f > 0.0 && f <= 1.0)) throw UsageError("--fraction must lie in (0, 1], got " + std::to_string(f));
}

sf::LevelSchedule schedule_flag(const std::string& s) {
  try {
    return sf::parse_schedule(s);
  } catch (const sf::ParseError&) {
    throw UsageError("--schedule must be one of sformer, linear, exponential; got '" + s + "'");
  }
}

std::vector<std::size_t> parse_t_list(const std::string& s) {
  std::vector<std::size_t> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t pos = 0;
      const long long v = std::stoll(item, &pos);
      if (pos != item.size() || v < 1) throw std::invalid_argument(item);
      out.push_back(static_cast<std::size_t>(v));
    } catch (const std::exception&) {
      throw UsageError("--T entries must be positive integers, got '" + item + "'");
    }
  }
  if (out.empty()) throw UsageError("--T needs at least one value");
  return out;
}

/// Writes to `path` atomically, or to stdout when no path was given.
void emit(const std::string& path, const std::string& content) {
  if (path.empty())
    std::cout << content;
  else
    sf::write_file_atomic(path, content);
}

// ---------------------------------------------------------------------------

int cmd_verify(const Flags& f) {
  const std::size_t trials = f.trials ? f.trials : 10000;
  const std::uint64_t seed = resolve_seed(f);
  if (f.t_max < 1) throw UsageError("--T-max must be at least 1");
  if (f.theorem != "all" && f.theorem != "1" && f.theorem != "3" && f.theorem != "identity")
    throw UsageError("--theorem must be one of all, 1, 3, identity");
  sf::CaseOptions opt;
  opt.t_max = f.t_max;

  std::vector<sf::SweepSummary> sums;
  if (f.theorem == "all" || f.theorem == "1") sums.push_back(sf::sweep_theorem1(seed, trials, opt));
  if (f.theorem == "all" || f.theorem == "3") sums.push_back(sf::sweep_theorem3(seed, trials, opt));
  if (f.theorem == "all" || f.theorem == "identity") sums.push_back(sf::sweep_rate_gap_identity(seed, trials, opt));

  sf::json doc{{"seed", seed}, {"trials", trials}, {"t_max", f.t_max}, {"checks", sf::json::array()}};
  bool ok = true;
  for (const auto& s : sums) {
    doc["checks"].push_back(s.to_json());
    ok = ok && s.passed();
    std::cout << s.name << ": " << s.n_passed << "/" << s.n_cases << " passed, max discrepancy "
              << s.max_discrepancy << "\n";
    if (!s.passed()) {
      const std::string which = s.name == "theorem1" ? "1" : s.name == "theorem3" ? "3" : "identity";
      std::cout << "  worst case " << s.worst_case_id << " (case seed " << s.worst_case_seed
                << "); replay with: spikeforge replay --theorem " << which << " --seed " << seed << " --case "
                << s.worst_case_id << "\n";
    }
  }
  doc["passed"] = ok;
  if (!f.report.empty()) sf::write_file_atomic(f.report, sf::dump_json(doc));
  return ok ? kExitOk : kExitVerification;
}

int cmd_replay(const Flags& f) {
  const std::uint64_t seed = resolve_seed(f);
  const auto cs = sf::case_seed(seed, f.case_id);
  sf::CaseOptions opt;
  opt.t_max = f.t_max;
  if (f.theorem == "1") {
    std::cout << sf::trace_theorem1(sf::random_theorem1_case(cs, opt));
  } else if (f.theorem == "3") {
    std::cout << sf::trace_theorem3(sf::random_theorem3_case(cs, opt));
  } else {
    throw UsageError("--theorem must be 1 or 3 for replay");
  }
  return kExitOk;
}

int cmd_calibrate(const Flags& f) {
  need(f.network, "--network", "calibrate");
  need(f.data, "--data", "calibrate");
  check_p(f.p);
  check_fraction(f.fraction);
  const auto net = sf::load_network(f.network);
  const auto data = sf::load_dataset(f.data).sample_fraction(f.fraction, resolve_seed(f));
  sf::CalibrationOptions opt;
  opt.keep_raw = f.raw;
  const auto prof = sf::calibrate(net, data, f.p, opt);
  emit(f.out, sf::dump_json(sf::profile_to_json(prof)));
  std::cerr << "calibrated " << prof.slots.size() << " slot(s) on " << prof.n_samples << " sample(s)\n";
  return kExitOk;
}

int cmd_convert(const Flags& f) {
  need(f.network, "--network", "convert");
  need(f.calib, "--calib", "convert");
  if (f.lambda == 0.0) throw UsageError("--lambda is required for convert");
  check_lambda(f.lambda);
  check_M(f.M);
  const auto cn = sf::convert(sf::load_network(f.network), sf::load_profile(f.calib), f.lambda, f.M,
                              schedule_flag(f.schedule));
  emit(f.out, sf::dump_json(sf::converted_to_json(cn)));
  return kExitOk;
}

int cmd_tune(const Flags& f) {
  need(f.network, "--network", "tune-lambda");
  need(f.calib, "--calib", "tune-lambda");
  need(f.data, "--data", "tune-lambda");
  check_M(f.M);
  check_fraction(f.fraction);
  const std::size_t trials = f.trials ? f.trials : 50;
  if (trials < 2) throw UsageError("--trials must be at least 2 for tune-lambda");
  const std::uint64_t seed = resolve_seed(f);
  const auto net = sf::load_network(f.network);
  const auto prof = sf::load_profile(f.calib);
  const auto val = sf::load_dataset(f.data).sample_fraction(f.fraction, seed);
  if (!val.labeled()) throw UsageError("--data must carry a label column for tune-lambda");
  const auto sched = schedule_flag(f.schedule);
  const auto res = sf::tune_lambda(
      net, prof, val, [](const sf::ConvertedNetwork& c, const sf::Dataset& d) { return sf::snn_accuracy(c, d); },
      f.M, trials, seed, sched);

  sf::json doc{{"lambda_star", res.lambda_star}, {"best_score", res.best_score}, {"seed", res.seed},
               {"metric", "accuracy"}, {"n_val", val.size()}, {"trials", sf::json::array()}};
  for (const auto& t : res.trials) doc["trials"].push_back({{"lambda", t.x}, {"score", t.score}});
  emit(f.out, sf::dump_json(doc));
  if (!f.model.empty()) sf::save_converted(sf::convert(net, prof, res.lambda_star, f.M, sched), f.model);
  std::cerr << "lambda* = " << res.lambda_star << " (validation accuracy " << res.best_score << ")\n";
  return kExitOk;
}

int cmd_eval(const Flags& f) {
  need(f.model, "--model", "eval");
  need(f.data, "--data", "eval");
  const auto cn = sf::load_converted(f.model);
  const auto data = sf::load_dataset(f.data);
  if (!data.labeled()) throw UsageError("--data must carry a label column for eval");
  const sf::json doc{{"n", data.size()},
                     {"ann_accuracy", sf::ann_accuracy(cn.base, data)},
                     {"snn_accuracy", sf::snn_accuracy(cn, data)},
                     {"lambda", cn.lambda},
                     {"M", cn.M}};
  emit(f.report, sf::dump_json(doc));
  return kExitOk;
}

int cmd_energy(const Flags& f) {
  need(f.model, "--model", "energy");
  need(f.data, "--data", "energy");
  const auto rep = sf::energy_report(sf::load_converted(f.model), sf::load_dataset(f.data));
  emit(f.report, sf::dump_json(rep.to_json()));
  return kExitOk;
}

int cmd_sweep_T(const Flags& f) {
  need(f.network, "--network", "sweep-T");
  need(f.data, "--data", "sweep-T");
  check_p(f.p);
  check_fraction(f.fraction);
  if (f.repeats < 1) throw UsageError("--repeats must be at least 1");
  const auto Ts = parse_t_list(f.t_list.empty() ? "1,2,4,8,16,32" : f.t_list);
  const std::uint64_t seed = resolve_seed(f);
  const auto net = sf::load_network(f.network);
  const auto eval = sf::load_dataset(f.data);
  const auto pool = f.calib_data.empty() ? eval : sf::load_dataset(f.calib_data);
  std::vector<sf::SlotThresholds> sets;
  for (std::size_t r = 0; r < f.repeats; ++r)
    sets.push_back(sf::thresholds_from_profile(sf::calibrate(net, pool.sample_fraction(f.fraction, seed + r), f.p)));
  emit(f.out, sf::sweep_T_csv(sf::sweep_T(net, sets, eval, Ts)));
  return kExitOk;
}

int cmd_sweep_lambda(const Flags& f) {
  need(f.network, "--network", "sweep-lambda");
  need(f.calib, "--calib", "sweep-lambda");
  need(f.data, "--data", "sweep-lambda");
  check_M(f.M);
  if (f.steps < 1) throw UsageError("--steps must be at least 1");
  const auto rows = sf::sweep_lambda(sf::load_network(f.network), sf::load_profile(f.calib),
                                     sf::load_dataset(f.data), f.M, f.steps, schedule_flag(f.schedule));
  emit(f.out, sf::sweep_lambda_csv(rows));
  return kExitOk;
}

int cmd_dump(const Flags& f) {
  if (!f.calib.empty()) {
    emit(f.out, sf::distribution_csv(sf::load_profile(f.calib)));
    return kExitOk;
  }
  if (f.network.empty() || f.data.empty())
    throw UsageError("--calib is required for dump-distributions (or --network with --data for raw activations)");
  const auto net = sf::load_network(f.network);
  std::set<std::string> ids;
  for (const auto& s : net.slots()) ids.insert(s.id);
  emit(f.out, sf::activation_dump_csv(net, sf::load_dataset(f.data), ids));
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"spikeforge: single-timestep spiking conversion toolkit"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Show help for every subcommand");
  Flags f;

  auto seed_opt = [&](CLI::App* c) {
    c->add_option_function<std::uint64_t>("--seed", [&](const std::uint64_t& v) { f.seed = v; },
                                          "RNG seed (falls back to SPIKEFORGE_SEED, then 0)");
  };

  auto* verify = app.add_subcommand("verify-theorems", "Randomised checks of the IF/MTN equivalence results");
  verify->add_option("--trials", f.trials, "Cases per check (default 10000)");
  verify->add_option("--theorem", f.theorem, "all, 1, 3 or identity");
  verify->add_option("--T-max", f.t_max, "Largest horizon drawn (default 64)");
  verify->add_option("--report", f.report, "Write a JSON report here");
  seed_opt(verify);

  auto* replay = app.add_subcommand("replay", "Print the step-by-step trace of one verification case");
  replay->add_option("--theorem", f.theorem, "1 or 3")->required();
  replay->add_option("--case", f.case_id, "Case index from a failure report")->required();
  replay->add_option("--T-max", f.t_max, "Largest horizon used by the original run");
  seed_opt(replay);

  auto* calib = app.add_subcommand("calibrate", "Record slot activations and derive percentile thresholds");
  calib->add_option("--network", f.network, "Network JSON");
  calib->add_option("--data", f.data, "Dataset CSV");
  calib->add_option("--p", f.p, "Percentile parameter in percent (default 1)");
  calib->add_option("--fraction", f.fraction, "Fraction of --data used (default 0.02)");
  calib->add_flag("--raw", f.raw, "Retain every recorded activation in the profile");
  calib->add_option("--out", f.out, "Profile JSON output (stdout if omitted)");
  seed_opt(calib);

  auto* conv = app.add_subcommand("convert", "Bind scale-and-fire neurons to every slot");
  conv->add_option("--network", f.network, "Network JSON");
  conv->add_option("--calib", f.calib, "Calibration profile JSON");
  conv->add_option("--lambda", f.lambda, "Scaling factor in (0, 1]");
  conv->add_option("--M", f.M, "Level-schedule parameter (default 8)");
  conv->add_option("--schedule", f.schedule, "sformer, linear or exponential");
  conv->add_option("--out", f.out, "Converted model JSON (stdout if omitted)");

  auto* tune = app.add_subcommand("tune-lambda", "Bayesian search for the scaling factor");
  tune->add_option("--network", f.network, "Network JSON");
  tune->add_option("--calib", f.calib, "Calibration profile JSON");
  tune->add_option("--data", f.data, "Labelled dataset CSV; a seeded --fraction of it is the validation split");
  tune->add_option("--fraction", f.fraction, "Validation fraction (default 0.02)");
  tune->add_option("--M", f.M, "Level-schedule parameter (default 8)");
  tune->add_option("--schedule", f.schedule, "sformer, linear or exponential");
  tune->add_option("--trials", f.trials, "Objective evaluations (default 50)");
  tune->add_option("--out", f.out, "Trial log JSON (stdout if omitted)");
  tune->add_option("--model", f.model, "Also write the converted model at the best lambda");
  seed_opt(tune);

  auto* eval = app.add_subcommand("eval", "ANN and single-timestep SNN accuracy");
  eval->add_option("--model", f.model, "Converted model JSON");
  eval->add_option("--data", f.data, "Labelled dataset CSV");
  eval->add_option("--report", f.report, "JSON output (stdout if omitted)");

  auto* energy = app.add_subcommand("energy", "Operation counts and energy ratio");
  energy->add_option("--model", f.model, "Converted model JSON");
  energy->add_option("--data", f.data, "Dataset CSV");
  energy->add_option("--report", f.report, "JSON output (stdout if omitted)");

  auto* sweepT = app.add_subcommand("sweep-T", "Multi-step IF against single-step MTN over horizons");
  sweepT->add_option("--network", f.network, "Network JSON");
  sweepT->add_option("--data", f.data, "Labelled evaluation CSV");
  sweepT->add_option("--calib-data", f.calib_data, "CSV sampled for thresholds (defaults to --data)");
  sweepT->add_option("--fraction", f.fraction, "Calibration fraction (default 0.02)");
  sweepT->add_option("--p", f.p, "Percentile parameter in percent (default 1)");
  sweepT->add_option("--T", f.t_list, "Comma-separated horizons (default 1,2,4,8,16,32)");
  sweepT->add_option("--repeats", f.repeats, "Calibration seeds averaged (default 3)");
  sweepT->add_option("--out", f.out, "CSV output (stdout if omitted)");
  seed_opt(sweepT);

  auto* sweepL = app.add_subcommand("sweep-lambda", "Accuracy and energy ratio on a lambda grid");
  sweepL->add_option("--network", f.network, "Network JSON");
  sweepL->add_option("--calib", f.calib, "Calibration profile JSON");
  sweepL->add_option("--data", f.data, "Labelled dataset CSV");
  sweepL->add_option("--M", f.M, "Level-schedule parameter (default 8)");
  sweepL->add_option("--schedule", f.schedule, "sformer, linear or exponential");
  sweepL->add_option("--steps", f.steps, "Grid size; lambda_k = k/steps (default 40)");
  sweepL->add_option("--out", f.out, "CSV output (stdout if omitted)");

  auto* dump = app.add_subcommand("dump-distributions", "Histogram CSV of recorded slot activations");
  dump->add_option("--calib", f.calib, "Calibration profile JSON");
  dump->add_option("--network", f.network, "Network JSON (raw dump, with --data)");
  dump->add_option("--data", f.data, "Dataset CSV (raw dump, with --network)");
  dump->add_option("--out", f.out, "CSV output (stdout if omitted)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (verify->parsed()) return cmd_verify(f);
    if (replay->parsed()) return cmd_replay(f);
    if (calib->parsed()) return cmd_calibrate(f);
    if (conv->parsed()) return cmd_convert(f);
    if (tune->parsed()) return cmd_tune(f);
    if (eval->parsed()) return cmd_eval(f);
    if (energy->parsed()) return cmd_energy(f);
    if (sweepT->parsed()) return cmd_sweep_T(f);
    if (sweepL->parsed()) return cmd_sweep_lambda(f);
    if (dump->parsed()) return cmd_dump(f);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  return kExitUsage;
}
