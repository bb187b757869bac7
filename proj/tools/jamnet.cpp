// jamnet: run jamming/anti-jamming scenarios and write their traces.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "jamnet/config.hpp"
#include "jamnet/error.hpp"
#include "jamnet/experiment.hpp"
#include "jamnet/io.hpp"
#include "jamnet/random.hpp"
#include "jamnet/verify/checks.hpp"

namespace fs = std::filesystem;
using namespace jamnet;

namespace {

enum Exit { kOk = 0, kUsage = 1, kConfig = 2, kRuntime = 3 };

struct CommonOptions {
  std::string config_path;
  std::string preset = "full";
  std::vector<std::string> overrides;
  std::optional<std::uint64_t> seed;
  std::string out = "out";
  bool quiet = false;
};

struct RunOptions {
  std::string victim_path;
  std::string attacker;
};

struct AnalyzeOptions {
  std::string matrices;
  int ensemble_size = 8;
  int exclude_after = -1;
};

void add_common(CLI::App* cmd, CommonOptions& o) {
  cmd->add_option("-c,--config", o.config_path, "key = value config file");
  cmd->add_option("--preset", o.preset, "base values before the config file")
      ->check(CLI::IsMember({"full", "desk"}));
  cmd->add_option("-s,--set", o.overrides, "override one key, e.g. --set f_d=0");
  cmd->add_option("--seed", o.seed, "master random seed");
  cmd->add_option("-o,--out", o.out, "output directory");
  cmd->add_flag("-q,--quiet", o.quiet, "no progress lines");
}

ScenarioConfig resolve_config(const CommonOptions& o) {
  const ScenarioConfig base = o.preset == "desk" ? desk_preset() : ScenarioConfig{};
  auto overrides = o.overrides;
  if (o.seed) overrides.push_back("seed=" + std::to_string(*o.seed));
  if (o.config_path.empty()) return parse_config("", overrides, base);
  return load_config(o.config_path, overrides, base);
}

ProgressReporter progress_for(const CommonOptions& o) {
  ProgressReporter p;
  if (!o.quiet) {
    p.report = [](std::string_view phase, std::int64_t slot, std::int64_t total) {
      std::fprintf(stderr, "[%.*s] slot %lld / %lld\n", static_cast<int>(phase.size()),
                   phase.data(), static_cast<long long>(slot), static_cast<long long>(total));
    };
  }
  return p;
}

void note(const CommonOptions& o, const std::string& line) {
  if (!o.quiet) std::cerr << line << '\n';
}

void write_json(const fs::path& path, const nlohmann::json& j) {
  write_file_atomic(path, j.dump(2) + "\n");
}

void write_library(const fs::path& dir, const SnapshotLibrary& library) {
  std::vector<TransitionMatrix> matrices;
  for (const auto& s : library) {
    matrices.push_back(s.matrix);
    char name[32];
    std::snprintf(name, sizeof name, "interval_%03d.bin", s.interval);
    save_snapshot(dir / "snapshots" / name, s.params, s.interval, s.slot);
  }
  write_file_atomic(dir / "matrices.csv", render_matrices_csv(matrices));
  write_file_atomic(dir / "correlation.csv", render_correlation_csv(matrices));
}

nlohmann::json phases_json(const PhaseBoundaries& p) {
  return {{"attack_start", p.attack_start},   {"retrain_start", p.retrain_start},
          {"retrain_end", p.retrain_end},     {"ensemble_start", p.ensemble_start},
          {"collapse_slot", p.collapse_slot}, {"end", p.end}};
}

// Either the snapshot given with --victim or a freshly trained baseline.
QNetworkParams obtain_victim(const ScenarioConfig& config, const CommonOptions& common,
                             const RunOptions& run) {
  if (!run.victim_path.empty()) {
    auto file = load_snapshot(run.victim_path);
    if (!(file.params.shape() == NetShape{config.observation_width(), config.lstm_hidden,
                                          config.duel_hidden, config.victim_action_count(),
                                          config.history_len}))
      throw ConfigError("victim snapshot '" + run.victim_path +
                        "' does not match the configured network shape");
    return file.params;
  }
  note(common, "no --victim given; training a baseline victim first");
  auto baseline = scenario_baseline(config, progress_for(common));
  save_snapshot(fs::path(common.out) / "victim.bin", baseline.params, -1, baseline.train_end);
  return baseline.params;
}

int cmd_baseline(const CommonOptions& o) {
  const auto config = resolve_config(o);
  const fs::path out = o.out;
  const auto r = scenario_baseline(config, progress_for(o));
  PhaseBoundaries phases;
  phases.end = r.end;
  emit_trace(r.trace, static_cast<std::size_t>(config.ma_window), out / "trace.csv");
  emit_histogram(empirical_pdf_cdf(r.trace.sum_rates(), config.hist_bin_width,
                                   static_cast<std::size_t>(r.train_end)),
                 out / "histogram.csv");
  save_snapshot(out / "victim.bin", r.params, -1, r.train_end);
  write_file_atomic(out / "manifest.txt", render_manifest(config, "baseline", phases));
  write_json(out / "summary.json",
             {{"command", "baseline"},
              {"train_end", r.train_end},
              {"end", r.end},
              {"test_mean_sum_rate", r.trace.mean_sum_rate(r.train_end, r.end)}});
  return kOk;
}

int cmd_attack(const CommonOptions& o, const RunOptions& run) {
  auto config = resolve_config(o);
  if (!run.attacker.empty()) config.attacker = parse_attacker_type(run.attacker);
  const fs::path out = o.out;
  const auto victim = obtain_victim(config, o, run);
  const auto r = scenario_attack(config, victim, progress_for(o));
  const auto converged = config.attack_start + config.attacker_train_slots;
  emit_trace(r.trace, static_cast<std::size_t>(config.ma_window), out / "trace.csv");
  emit_histogram(empirical_pdf_cdf(r.trace.sum_rates(), config.hist_bin_width,
                                   static_cast<std::size_t>(std::min<std::int64_t>(converged, r.phases.end - 1))),
                 out / "histogram.csv");
  write_file_atomic(out / "manifest.txt", render_manifest(config, "attack", r.phases));
  write_json(out / "summary.json",
             {{"command", "attack"},
              {"attacker", std::string(to_string(config.attacker))},
              {"phases", phases_json(r.phases)},
              {"pre_attack_mean_sum_rate", r.trace.mean_sum_rate(0, config.attack_start)},
              {"post_convergence_mean_sum_rate", r.trace.mean_sum_rate(converged, r.phases.end)}});
  return kOk;
}

int cmd_retrain(const CommonOptions& o, const RunOptions& run) {
  auto config = resolve_config(o);
  if (!run.attacker.empty()) config.attacker = parse_attacker_type(run.attacker);
  const fs::path out = o.out;
  const auto victim = obtain_victim(config, o, run);
  const auto r = scenario_retrain_collapse(config, victim, progress_for(o));
  emit_trace(r.trace, static_cast<std::size_t>(config.ma_window), out / "trace.csv");
  write_library(out, r.library);
  write_file_atomic(out / "manifest.txt", render_manifest(config, "retrain", r.phases));
  nlohmann::json summary{{"command", "retrain"},
                         {"phases", phases_json(r.phases)},
                         {"snapshots", r.library.size()}};
  summary["collapse_interval"] =
      r.collapse_interval ? nlohmann::json(*r.collapse_interval) : nlohmann::json(nullptr);
  write_json(out / "summary.json", summary);
  return kOk;
}

int cmd_ensemble(const CommonOptions& o, const RunOptions& run) {
  auto config = resolve_config(o);
  if (!run.attacker.empty()) config.attacker = parse_attacker_type(run.attacker);
  const fs::path out = o.out;
  const auto victim = obtain_victim(config, o, run);
  const auto r = scenario_ensemble(config, victim, progress_for(o));
  emit_trace(r.trace, static_cast<std::size_t>(config.ma_window), out / "trace.csv");
  emit_histogram(empirical_pdf_cdf(r.trace.sum_rates(), config.hist_bin_width,
                                   static_cast<std::size_t>(r.phases.ensemble_start)),
                 out / "histogram.csv");
  write_library(out, r.library);
  write_file_atomic(out / "manifest.txt",
                    render_manifest(config, "ensemble", r.phases, r.selected_intervals));
  const auto second_period = r.phases.ensemble_start + config.reload_period;
  write_json(out / "summary.json",
             {{"command", "ensemble"},
              {"phases", phases_json(r.phases)},
              {"exclude_after", r.exclude_after},
              {"selected_intervals", r.selected_intervals},
              {"ensemble_mean_sum_rate", r.trace.mean_sum_rate(r.phases.ensemble_start, r.phases.end)},
              {"second_period_mean_sum_rate", r.trace.mean_sum_rate(second_period, r.phases.end)}});
  return kOk;
}

int cmd_analyze(const CommonOptions& o, const AnalyzeOptions& a) {
  const fs::path out = o.out;
  const auto matrices = parse_matrices_csv(read_file(a.matrices));
  std::vector<TransitionMatrix> candidates;
  for (const auto& m : matrices)
    if (a.exclude_after < 0 || m.interval() <= a.exclude_after) candidates.push_back(m);
  const auto picked = select_lowest_correlation(candidates, static_cast<std::size_t>(a.ensemble_size));
  const auto scores = correlation_scores(candidates);
  std::string csv = "interval,score,selected\n";
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    const bool chosen = std::find(picked.begin(), picked.end(), i) != picked.end();
    csv += std::to_string(candidates[i].interval()) + ',' + format_double(scores[i]) + ',' +
           (chosen ? "1" : "0") + '\n';
  }
  write_file_atomic(out / "selection.csv", csv);
  write_file_atomic(out / "correlation.csv", render_correlation_csv(candidates));
  std::string line = "selected intervals:";
  for (auto i : picked) line += ' ' + std::to_string(candidates[i].interval());
  note(o, line);
  return kOk;
}

int cmd_verify(std::uint64_t seed) {
  bool all = true;
  for (const auto& r : verify::run_invariant_suite(seed)) {
    std::cout << (r.passed ? "PASS " : "FAIL ") << r.name << "  " << r.detail << '\n';
    all = all && r.passed;
  }
  return all ? kOk : kRuntime;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Adversarial jamming and ensemble-defense simulator"};
  app.require_subcommand(1);

  CommonOptions common;
  RunOptions run;
  AnalyzeOptions analyze;
  std::uint64_t verify_seed = 1;

  auto* baseline = app.add_subcommand("baseline", "train victims without attack, then test");
  add_common(baseline, common);

  auto* attack = app.add_subcommand("attack", "attack a trained victim");
  auto* retrain = app.add_subcommand("retrain", "central retraining under attack");
  auto* ensemble = app.add_subcommand("ensemble", "retraining followed by the ensemble defense");
  for (auto* cmd : {attack, retrain, ensemble}) {
    add_common(cmd, common);
    cmd->add_option("--victim", run.victim_path, "victim snapshot (default: train a baseline)");
    cmd->add_option("--attacker", run.attacker, "none, random, ideal or dqn")
        ->check(CLI::IsMember({"none", "random", "ideal", "dqn"}));
  }

  auto* offline = app.add_subcommand("analyze-ensemble", "select an ensemble from saved matrices");
  offline->add_option("--matrices", analyze.matrices, "matrices.csv from a retrain run")->required();
  offline->add_option("--ensemble-size", analyze.ensemble_size, "models to select")
      ->check(CLI::PositiveNumber);
  offline->add_option("--exclude-after", analyze.exclude_after,
                      "last candidate interval (default: all)");
  offline->add_option("-o,--out", common.out, "output directory");
  offline->add_flag("-q,--quiet", common.quiet, "no progress lines");

  auto* verify_cmd = app.add_subcommand("verify", "run the invariant suite");
  verify_cmd->add_option("--seed", verify_seed, "seed for randomized checks");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return e.get_exit_code() == 0 ? kOk : kUsage;
  }

  try {
    if (*baseline) return cmd_baseline(common);
    if (*attack) return cmd_attack(common, run);
    if (*retrain) return cmd_retrain(common, run);
    if (*ensemble) return cmd_ensemble(common, run);
    if (*offline) return cmd_analyze(common, analyze);
    if (*verify_cmd) return cmd_verify(verify_seed);
  } catch (const ConfigError& e) {
    std::cerr << e.what() << '\n';
    return kConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kRuntime;
  }
  return kUsage;
}
