#include <filesystem>
#include <string>

#include "doctest.h"
#include "jamnet/config.hpp"
#include "jamnet/error.hpp"
#include "jamnet/experiment.hpp"
#include "jamnet/io.hpp"
#include "jamnet/random.hpp"

using namespace jamnet;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("jamnet-test-" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string error_of(const std::string& text, const std::vector<std::string>& overrides = {}) {
  try {
    parse_config(text, overrides);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST_CASE("empty config yields the defaults") {
  const auto c = parse_config("");
  CHECK(c == ScenarioConfig{});
  CHECK(c.doppler_hz == 0.2);
  CHECK(c.num_channels == 4);
  CHECK(c.max_power == 6.3);
  CHECK(c.victim_train_slots == 500000);
  CHECK(c.jammed_channels == 2);
  CHECK(c.retrain_lr == 0.4);
  CHECK(c.num_snapshots == 72);
  CHECK(c.ensemble_size == 8);
  CHECK(c.reload_period == 720000);
  CHECK(c.snapshot_interval() == 20138);
  CHECK(c.victim_action_count() == 21);
}

TEST_CASE("config errors name the key and line") {
  CHECK(error_of("N_c = 4\nK_a = 7\n").find("K_a exceeds N_c") != std::string::npos);
  const auto unknown = error_of("f_d = 0.2\nbogus = 1\n");
  CHECK(unknown.find("bogus") != std::string::npos);
  CHECK(unknown.find("line 2") != std::string::npos);
  const auto bad = error_of("\n\nT_train = many\n");
  CHECK(bad.find("T_train") != std::string::npos);
  CHECK(bad.find("line 3") != std::string::npos);
  CHECK(error_of("gamma = 1.5").find("gamma") != std::string::npos);
  CHECK(error_of("N_e = 80").find("N_e exceeds N_s") != std::string::npos);
  CHECK(error_of("just words").find("line 1") != std::string::npos);
  CHECK(error_of("", {"f_d"}).find("key=value") != std::string::npos);
  CHECK_THROWS_AS(load_config("/nonexistent/jamnet.cfg"), ConfigError);
}

TEST_CASE("overrides beat the file") {
  const auto c = parse_config("f_d = 0.2\nseed = 4 # trailing comment\n", {"f_d=0", "attacker=random"});
  CHECK(c.doppler_hz == 0.0);
  CHECK(c.seed == 4);
  CHECK(c.attacker == AttackerType::kRandom);
}

TEST_CASE("rendered config parses back exactly") {
  auto c = desk_preset();
  c.doppler_hz = 0.1234567890123;
  c.collapse_detection = false;
  c.attacker = AttackerType::kIdeal;
  CHECK(parse_config(render_config(c)) == c);
}

TEST_CASE("bundled configs") {
  const fs::path dir = JAMNET_CONFIG_DIR;
  CHECK(load_config(dir / "full.cfg") == ScenarioConfig{});
  CHECK(load_config(dir / "desk.cfg") == desk_preset());
  const auto desk = desk_preset();
  CHECK(desk.victim_train_slots == 50000);
  CHECK(desk.collapse_window == 20000);
  CHECK(desk.ma_window == 1000);
}

TEST_CASE("random streams are independent and reproducible") {
  RandomStream a(1, "fading"), b(1, "fading"), c(1, "victim-explore"), d(2, "fading");
  const double first = a.uniform();
  CHECK(first == b.uniform());
  CHECK(first != c.uniform());
  CHECK(first != d.uniform());
  CHECK(derive_seed(1, "x") != derive_seed(1, "y"));
  CHECK_FALSE(a.bernoulli(0.0));
  CHECK(a.bernoulli(1.0));
}

TEST_CASE("snapshot round trip") {
  RandomStream rng(3, "snap");
  const auto p = QNetworkParams::random(NetShape{5, 20, 10, 21, 10}, rng);
  const auto dir = scratch_dir("snap");
  save_snapshot(dir / "nested" / "m.bin", p, 12, 345);
  const auto back = load_snapshot(dir / "nested" / "m.bin");
  CHECK(back.params == p);
  CHECK(back.interval == 12);
  CHECK(back.slot == 345);
  CHECK_FALSE(fs::exists(dir / "nested" / "m.bin.tmp"));
}

TEST_CASE("malformed snapshots are rejected") {
  RandomStream rng(4, "snap");
  const auto bytes = serialize_params(QNetworkParams::random(NetShape{5, 4, 3, 6, 2}, rng));
  CHECK(bytes.size() == kSnapshotHeaderSize + 8 * QNetworkParams::layout_for({5, 4, 3, 6, 2}).total);
  CHECK_THROWS_AS(deserialize_params(bytes.substr(0, kSnapshotHeaderSize)), FormatError);
  CHECK_THROWS_AS(deserialize_params(bytes.substr(0, 20)), FormatError);
  auto wrong_version = bytes;
  wrong_version[8] = 2;
  try {
    deserialize_params(wrong_version);
    CHECK(false);
  } catch (const FormatError& e) {
    CHECK(std::string(e.what()).find("version") != std::string::npos);
  }
  auto wrong_magic = bytes;
  wrong_magic[0] = 'X';
  CHECK_THROWS_AS(deserialize_params(wrong_magic), FormatError);
  CHECK_THROWS_AS(load_snapshot("/nonexistent/snap.bin"), IoError);
}

TEST_CASE("trace csv") {
  MetricsTrace t(2, 4, 5, 6.3);
  for (int s = 0; s < 3; ++s) {
    SlotRecord rec;
    rec.slot = s;
    rec.victim_actions = {4, 20};
    rec.decision.victims = {{0, 6.3}, {}};
    rec.decision.jammed = s == 2 ? std::vector<int>{1, 3} : std::vector<int>{};
    rec.victim_rates = {2.0, 0.0};
    rec.sum_rate = 2.0 * s;
    rec.jam = s == 2 ? JamLabel::kGreedy : JamLabel::kListen;
    t.append(rec);
  }
  const auto csv = render_trace_csv(t, 2);
  CHECK(csv ==
        "slot,sum_rate,moving_avg,victim_0_channel,victim_0_power,victim_1_channel,"
        "victim_1_power,attacker_channels,attacker_mode\n"
        "0,0,0,0,6.3,-1,0,,listen\n"
        "1,2,1,0,6.3,-1,0,,listen\n"
        "2,4,3,0,6.3,-1,0,1;3,greedy\n");
  const auto dir = scratch_dir("trace");
  emit_trace(t, 2, dir / "trace.csv");
  CHECK(read_file(dir / "trace.csv") == csv);
}

TEST_CASE("histogram csv ends at one") {
  std::vector<double> v{0.05, 0.15, 0.15, 0.3};
  const auto csv = render_histogram_csv(empirical_pdf_cdf(v, 0.1));
  CHECK(csv.rfind("bin_lower,pdf,cdf\n", 0) == 0);
  CHECK(csv.substr(csv.rfind(',') + 1) == "1\n");
}

TEST_CASE("matrices csv round trip") {
  std::vector<TransitionMatrix> m;
  for (int i = 0; i < 3; ++i) {
    TransitionMatrix x(4, 16, i * 2);
    x.at(i, 3 - i, 5) = 7 + i;
    m.push_back(x);
  }
  const auto back = parse_matrices_csv(render_matrices_csv(m));
  CHECK(back == m);
  CHECK_THROWS_AS(parse_matrices_csv("interval,n_c,r_bins\n1,4,16,3\n"), FormatError);
}

TEST_CASE("manifest re-parses as the run config") {
  auto c = desk_preset();
  c.seed = 9;
  PhaseBoundaries phases;
  phases.attack_start = 5000;
  phases.end = 7000;
  const int selected[2] = {1, 4};
  const auto manifest = render_manifest(c, "ensemble", phases, selected);
  CHECK(parse_config(manifest) == c);
  CHECK(manifest.find("attack_start") != std::string::npos);
  CHECK(manifest.find("1 4") != std::string::npos);
}

TEST_CASE("shortest double formatting") {
  CHECK(format_double(0.1) == "0.1");
  CHECK(format_double(6.3) == "6.3");
  CHECK(std::stod(format_double(1.0 / 3.0)) == 1.0 / 3.0);
}
