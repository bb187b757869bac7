// Acceptance suite: one PASS/FAIL line per criterion on stdout, progress on
// stderr. Exit status is non-zero when any selected criterion fails.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "jamnet/config.hpp"
#include "jamnet/ensemble_defense.hpp"
#include "jamnet/experiment.hpp"
#include "jamnet/io.hpp"
#include "jamnet/verify/checks.hpp"

using namespace jamnet;

namespace {

// Pinned tolerances.
constexpr double kDeskPlateau = 6.0;
constexpr int kDeskPlateauSeeds = 4;
constexpr double kFullPlateau = 7.5;
constexpr double kMinReduction = 0.70;
constexpr int kReductionSeeds = 4;
constexpr double kDeskAttackBand = 2.5;
constexpr double kFullAttackBand = 1.8;
constexpr int kOrderingSeeds = 4;
constexpr double kIdealShare = 0.80;
constexpr int kIdealShareSeeds = 3;
constexpr int kRecoverySeeds = 4;
constexpr double kDeskRecoveryBand = 4.0;
constexpr double kCollapseFraction = 0.5;
constexpr std::int64_t kCollapseWindow = 20000;
constexpr int kDynamicSeeds = 4;

struct Options {
  int seeds = 5;
  int full_seeds = 2;
  std::vector<int> only;
};

void progress(const std::string& what) {
  std::fprintf(stderr, "  .. %s\n", what.c_str());
  std::fflush(stderr);
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3f", v);
  return buf;
}

std::string list(const std::vector<double>& v) {
  std::string s = "[";
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? " " : "") + fmt(v[i]);
  return s + "]";
}

// Runs are produced on first use and reused by every criterion.
class Runs {
 public:
  explicit Runs(const Options& o) : opts_(o) {}

  ScenarioConfig desk(std::uint64_t seed) const {
    auto c = desk_preset();
    c.seed = seed;
    return c;
  }
  ScenarioConfig full(std::uint64_t seed) const {
    ScenarioConfig c;
    c.seed = seed;
    return c;
  }

  const BaselineResult& baseline(std::uint64_t seed, double doppler = 0.2, bool full_scale = false) {
    const auto key = std::make_tuple(seed, doppler, full_scale);
    auto it = baselines_.find(key);
    if (it != baselines_.end()) return it->second;
    auto c = full_scale ? full(seed) : desk(seed);
    c.doppler_hz = doppler;
    progress("baseline seed " + std::to_string(seed) + " f_d " + fmt(doppler) +
             (full_scale ? " full" : " desk"));
    return baselines_.emplace(key, scenario_baseline(c)).first->second;
  }

  double test_mean(std::uint64_t seed, double doppler = 0.2, bool full_scale = false) {
    const auto& b = baseline(seed, doppler, full_scale);
    return b.trace.mean_sum_rate(b.train_end, b.end);
  }

  const AttackResult& attack(std::uint64_t seed, AttackerType type, bool full_scale = false) {
    const auto key = std::make_tuple(seed, type, full_scale);
    auto it = attacks_.find(key);
    if (it != attacks_.end()) return it->second;
    auto c = full_scale ? full(seed) : desk(seed);
    c.attacker = type;
    const auto& victim = baseline(seed, 0.2, full_scale).params;
    progress("attack seed " + std::to_string(seed) + " " + std::string(to_string(type)) +
             (full_scale ? " full" : " desk"));
    return attacks_.emplace(key, scenario_attack(c, victim)).first->second;
  }

  // Mean over the post-convergence window of an attack run.
  double converged_mean(std::uint64_t seed, AttackerType type, bool full_scale = false) {
    const auto& r = attack(seed, type, full_scale);
    const auto c = full_scale ? full(seed) : desk(seed);
    return r.trace.mean_sum_rate(c.attack_start + c.attacker_train_slots, r.phases.end);
  }
  double pre_attack_mean(std::uint64_t seed, bool full_scale = false) {
    const auto& r = attack(seed, AttackerType::kDqn, full_scale);
    return r.trace.mean_sum_rate(0, r.phases.attack_start);
  }

  const EnsembleResult& ensemble(std::uint64_t seed) {
    auto it = ensembles_.find(seed);
    if (it != ensembles_.end()) return it->second;
    progress("ensemble seed " + std::to_string(seed));
    return ensembles_.emplace(seed, scenario_ensemble(desk(seed), baseline(seed).params))
        .first->second;
  }

  const RetrainResult& prolonged_retrain(std::uint64_t seed) {
    auto it = retrains_.find(seed);
    if (it != retrains_.end()) return it->second;
    auto c = desk(seed);
    c.collapse_detection = false;
    progress("prolonged retraining seed " + std::to_string(seed));
    return retrains_.emplace(seed, scenario_retrain_collapse(c, baseline(seed).params))
        .first->second;
  }

  int seeds() const { return opts_.seeds; }
  int full_seeds() const { return opts_.full_seeds; }

 private:
  Options opts_;
  std::map<std::tuple<std::uint64_t, double, bool>, BaselineResult> baselines_;
  std::map<std::tuple<std::uint64_t, AttackerType, bool>, AttackResult> attacks_;
  std::map<std::uint64_t, EnsembleResult> ensembles_;
  std::map<std::uint64_t, RetrainResult> retrains_;
};

struct Outcome {
  bool passed = false;
  std::string detail;
};

Outcome plateau(Runs& runs) {
  std::vector<double> desk, full;
  int desk_ok = 0;
  for (int s = 1; s <= runs.seeds(); ++s) {
    desk.push_back(runs.test_mean(s));
    desk_ok += desk.back() >= kDeskPlateau;
  }
  bool full_ok = false;
  for (int s = 1; s <= runs.full_seeds() && !full_ok; ++s) {
    full.push_back(runs.test_mean(s, 0.2, true));
    full_ok = full.back() >= kFullPlateau;
  }
  return {desk_ok >= kDeskPlateauSeeds && full_ok,
          "desk test means " + list(desk) + " (" + std::to_string(desk_ok) + " >= " +
              fmt(kDeskPlateau) + "), full-scale " + list(full) + " (need one >= " +
              fmt(kFullPlateau) + ")"};
}

Outcome dynamic_beats_static(Runs& runs) {
  std::vector<double> dynamic, fixed;
  int ok = 0;
  for (int s = 1; s <= runs.seeds(); ++s) {
    dynamic.push_back(runs.test_mean(s, 0.2));
    fixed.push_back(runs.test_mean(s, 0.0));
    ok += dynamic.back() >= fixed.back();
  }
  return {ok >= kDynamicSeeds, "f_d=0.2 " + list(dynamic) + " vs f_d=0 " + list(fixed) + " (" +
                                   std::to_string(ok) + " paired wins)"};
}

Outcome attack_effectiveness(Runs& runs) {
  std::vector<double> post, reduction;
  int ok = 0;
  double total = 0.0;
  for (int s = 1; s <= runs.seeds(); ++s) {
    const double pre = runs.pre_attack_mean(s);
    post.push_back(runs.converged_mean(s, AttackerType::kDqn));
    reduction.push_back(1.0 - post.back() / pre);
    ok += reduction.back() >= kMinReduction;
    total += post.back();
  }
  const double desk_mean = total / runs.seeds();
  std::vector<double> full_post;
  double full_total = 0.0;
  for (int s = 1; s <= runs.full_seeds(); ++s) {
    full_post.push_back(runs.converged_mean(s, AttackerType::kDqn, true));
    full_total += full_post.back();
  }
  const double full_mean = full_total / std::max(1, runs.full_seeds());
  return {ok >= kReductionSeeds && desk_mean <= kDeskAttackBand && full_mean <= kFullAttackBand,
          "desk post-convergence " + list(post) + " reductions " + list(reduction) + " (" +
              std::to_string(ok) + " >= " + fmt(kMinReduction) + "), desk mean " +
              fmt(desk_mean) + " (<= " + fmt(kDeskAttackBand) + "), full-scale " +
              list(full_post) + " mean " + fmt(full_mean) + " (<= " + fmt(kFullAttackBand) + ")"};
}

Outcome attacker_ordering(Runs& runs) {
  int ordered = 0, share_ok = 0;
  std::string detail;
  for (int s = 1; s <= runs.seeds(); ++s) {
    const double none = runs.converged_mean(s, AttackerType::kNone);
    const double random = runs.converged_mean(s, AttackerType::kRandom);
    const double ideal = runs.converged_mean(s, AttackerType::kIdeal);
    const double dqn = runs.converged_mean(s, AttackerType::kDqn);
    ordered += ideal <= dqn && dqn < random && random < none;
    share_ok += (none - dqn) >= kIdealShare * (none - ideal);
    detail += " seed" + std::to_string(s) + "{ideal " + fmt(ideal) + " dqn " + fmt(dqn) +
              " random " + fmt(random) + " none " + fmt(none) + "}";
  }
  return {ordered >= kOrderingSeeds && share_ok >= kIdealShareSeeds,
          std::to_string(ordered) + " seeds ordered, " + std::to_string(share_ok) +
              " seeds with dqn >= " + fmt(kIdealShare) + " of ideal reduction;" + detail};
}

Outcome ensemble_recovery(Runs& runs) {
  std::vector<double> ens, random;
  int ok = 0;
  double total = 0.0;
  for (int s = 1; s <= runs.seeds(); ++s) {
    const auto& r = runs.ensemble(s);
    const auto c = runs.desk(s);
    ens.push_back(r.trace.mean_sum_rate(r.phases.ensemble_start + c.reload_period, r.phases.end));
    random.push_back(runs.converged_mean(s, AttackerType::kRandom));
    ok += ens.back() > random.back();
    total += ens.back();
  }
  const double mean = total / runs.seeds();
  return {ok >= kRecoverySeeds && mean >= kDeskRecoveryBand,
          "ensemble (second period on) " + list(ens) + " vs random attack " + list(random) +
              " (" + std::to_string(ok) + " seeds above), mean " + fmt(mean) + " (>= " +
              fmt(kDeskRecoveryBand) + ")"};
}

Outcome retraining_collapse(Runs& runs) {
  std::string detail;
  bool any = false;
  for (int s = 1; s <= runs.seeds(); ++s) {
    const auto& r = runs.prolonged_retrain(s);
    const auto& t = r.trace;
    const int K = t.num_victims();
    const int silent = t.codec().no_transmission();
    CollapseMonitor monitor({kCollapseFraction, -1.0, kCollapseWindow}, silent);
    double worst = 0.0;
    std::int64_t found = -1;
    for (std::size_t i = 0; i < t.size(); ++i) {
      if (t.slot(i) < r.phases.retrain_start) continue;
      std::vector<int> slot_actions(static_cast<std::size_t>(K));
      for (int k = 0; k < K; ++k) slot_actions[static_cast<std::size_t>(k)] = t.victim_action(i, k);
      monitor.record(slot_actions, t.sum_rates()[i]);
      if (monitor.slots() < static_cast<std::size_t>(kCollapseWindow)) continue;
      worst = std::max(worst, monitor.no_transmission_fraction());
      if (found < 0 && monitor.no_transmission_fraction() > kCollapseFraction) {
        const auto end = i + 1;
        const auto begin = end - static_cast<std::size_t>(kCollapseWindow);
        const auto actions = t.victim_actions().subspan(begin * K, kCollapseWindow * K);
        const auto rates = t.sum_rates().subspan(begin, kCollapseWindow);
        const auto config = runs.desk(s);
        const CollapseThresholds th{config.collapse_fraction, config.collapse_rate_floor,
                                    config.collapse_window};
        if (detect_collapse(actions, rates, K, silent, th)) found = t.slot(i);
      }
    }
    any = any || found >= 0;
    detail += " seed" + std::to_string(s) + " max silent fraction " + fmt(worst) +
              (found >= 0 ? " collapse at slot " + std::to_string(found) : "");
  }
  return {any, "prolonged retraining without detection:" + detail};
}

Outcome from_check(const verify::CheckResult& r) { return {r.passed, r.detail}; }

std::string fingerprint(const EnsembleResult& r, const ScenarioConfig& c) {
  std::vector<TransitionMatrix> matrices;
  std::string snapshots;
  for (const auto& s : r.library) {
    matrices.push_back(s.matrix);
    snapshots += serialize_params(s.params, s.interval, s.slot);
  }
  return render_trace_csv(r.trace, static_cast<std::size_t>(c.ma_window)) +
         render_matrices_csv(matrices) + render_correlation_csv(matrices) +
         render_manifest(c, "ensemble", r.phases, r.selected_intervals) + snapshots;
}

Outcome determinism(Runs& runs) {
  const auto c = runs.desk(1);
  const auto first = fingerprint(runs.ensemble(1), c);
  progress("ensemble seed 1 (repeat)");
  const auto again = scenario_ensemble(c, runs.baseline(1).params);
  const auto second = fingerprint(again, c);
  return {first == second, "ensemble outputs " + std::to_string(first.size()) + " bytes, " +
                               (first == second ? "identical" : "differ")};
}

}  // namespace

int main(int argc, char** argv) {
  Options opts;
  CLI::App app{"jamnet acceptance suite"};
  app.add_option("--seeds", opts.seeds, "desk-scale seeds per criterion")->check(CLI::Range(1, 50));
  app.add_option("--full-seeds", opts.full_seeds, "full-scale seeds for criteria 1 and 3")
      ->check(CLI::Range(1, 50));
  app.add_option("--only", opts.only, "run only these criteria")->delimiter(',');
  CLI11_PARSE(app, argc, argv);

  Runs runs(opts);
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"no-attack plateau", [&] { return plateau(runs); }},
      {"dynamic beats static", [&] { return dynamic_beats_static(runs); }},
      {"attack effectiveness", [&] { return attack_effectiveness(runs); }},
      {"attacker ordering", [&] { return attacker_ordering(runs); }},
      {"ensemble recovery", [&] { return ensemble_recovery(runs); }},
      {"retraining collapse", [&] { return retraining_collapse(runs); }},
      {"jakes fidelity", [&] { return from_check(verify::check_jakes_fidelity(1)); }},
      {"sinr/rate oracle", [&] { return from_check(verify::check_rate_oracle(1)); }},
      {"gradient correctness", [&] { return from_check(verify::check_gradients(1)); }},
      {"transition machinery", [&] { return from_check(verify::check_transition_machinery(1)); }},
      {"determinism", [&] { return determinism(runs); }},
  };

  const std::set<int> only(opts.only.begin(), opts.only.end());
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i) + 1;
    if (!only.empty() && !only.count(id)) continue;
    const auto start = std::chrono::steady_clock::now();
    std::fprintf(stderr, "criterion %d: %s\n", id, criteria[i].first.c_str());
    const auto outcome = criteria[i].second();
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::printf("criterion %2d %-22s %s  %s  (%.0fs)\n", id, criteria[i].first.c_str(),
                outcome.passed ? "PASS" : "FAIL", outcome.detail.c_str(), secs);
    std::fflush(stdout);
    failed += !outcome.passed;
  }
  return failed == 0 ? 0 : 1;
}
