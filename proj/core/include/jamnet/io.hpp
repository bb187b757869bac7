#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "jamnet/config.hpp"
#include "jamnet/ensemble_defense.hpp"
#include "jamnet/experiment.hpp"
#include "jamnet/qnet.hpp"

namespace jamnet {

// Snapshot file layout (all integers little-endian):
//
//   offset  size  field
//   0       8     magic "JAMNETQ\0"
//   8       4     format version (uint32, currently 1)
//   12      4     I  input width          (uint32)
//   16      4     H  LSTM units           (uint32)
//   20      4     D  dueling head units   (uint32)
//   24      4     A  action count         (uint32)
//   28      4     N  history length       (uint32)
//   32      8     interval index          (int64, -1 if none)
//   40      8     slot                    (int64)
//   48      8     parameter count P       (uint64)
//   56      8*P   parameters, IEEE-754 binary64, in QNetworkParams order
inline constexpr std::uint32_t kSnapshotVersion = 1;
inline constexpr std::size_t kSnapshotHeaderSize = 56;

struct SnapshotFile {
  std::int64_t interval = -1;
  std::int64_t slot = 0;
  QNetworkParams params{NetShape{1, 1, 1, 1, 1}};
};

std::string serialize_params(const QNetworkParams& params, std::int64_t interval = -1,
                             std::int64_t slot = 0);
// Throws FormatError naming the byte offset of the first inconsistency.
SnapshotFile deserialize_params(std::string_view bytes);

void save_snapshot(const std::filesystem::path& path, const QNetworkParams& params,
                   std::int64_t interval = -1, std::int64_t slot = 0);
SnapshotFile load_snapshot(const std::filesystem::path& path);

// Writes via a temporary file in the same directory, then renames.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);
std::string read_file(const std::filesystem::path& path);

// Shortest round-trip decimal form.
std::string format_double(double value);

// Columns: slot, sum_rate, moving_avg, victim_<k>_channel, victim_<k>_power
// for each k, attacker_channels (';'-separated, empty when idle),
// attacker_mode. Silent victims show channel -1 and power 0.
std::string render_trace_csv(const MetricsTrace& trace, std::size_t ma_window);
// Columns: bin_lower, pdf, cdf.
std::string render_histogram_csv(const Histogram& histogram);

void emit_trace(const MetricsTrace& trace, std::size_t ma_window,
                const std::filesystem::path& path);
void emit_histogram(const Histogram& histogram, const std::filesystem::path& path);

// Columns: interval, n_c, r_bins, then the counts flattened in
// (prev channel, current channel, reward bin) row-major order.
std::string render_matrices_csv(std::span<const TransitionMatrix> matrices);
std::vector<TransitionMatrix> parse_matrices_csv(std::string_view text);

// N x N correlation table with interval indices as header and first column.
std::string render_correlation_csv(std::span<const TransitionMatrix> matrices);

// Config echo followed by commented phase boundaries; parse_config accepts
// it unchanged, so a run can be repeated from its manifest.
std::string render_manifest(const ScenarioConfig& config, std::string_view command,
                            const PhaseBoundaries& phases,
                            std::span<const int> selected_intervals = {});

}  // namespace jamnet
