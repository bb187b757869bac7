#include "jamnet/io.hpp"

#include <array>
#include <bit>
#include <charconv>
#include <cstring>
#include <fstream>
#include <sstream>
#include <system_error>

#include "jamnet/error.hpp"

namespace jamnet {

namespace {

constexpr std::array<char, 8> kMagic = {'J', 'A', 'M', 'N', 'E', 'T', 'Q', '\0'};

template <typename T>
void put_le(std::string& out, T value) {
  using U = std::make_unsigned_t<T>;
  auto bits = static_cast<U>(value);
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    out.push_back(static_cast<char>(bits & 0xff));
    bits = static_cast<U>(bits >> 8);
  }
}

template <typename T>
T get_le(std::string_view bytes, std::size_t offset) {
  using U = std::make_unsigned_t<T>;
  U bits = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    bits |= static_cast<U>(static_cast<U>(static_cast<unsigned char>(bytes[offset + i])) << (8 * i));
  }
  return static_cast<T>(bits);
}

FormatError format_error(std::size_t offset, const std::string& what) {
  return FormatError("snapshot format error at byte " + std::to_string(offset) + ": " + what);
}

std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(sep, start);
    out.push_back(line.substr(start, pos == std::string_view::npos ? pos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

template <typename T>
T parse_field(std::string_view text, std::size_t line_no) {
  T value{};
  const char* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc() || ptr != end) {
    throw FormatError("line " + std::to_string(line_no) + ": invalid number '" +
                      std::string(text) + "'");
  }
  return value;
}

}  // namespace

std::string format_double(double value) {
  std::array<char, 64> buf{};
  auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), value);
  (void)ec;
  return std::string(buf.data(), ptr);
}

std::string serialize_params(const QNetworkParams& params, std::int64_t interval,
                             std::int64_t slot) {
  const auto& s = params.shape();
  std::string out;
  out.reserve(kSnapshotHeaderSize + 8 * params.size());
  out.append(kMagic.data(), kMagic.size());
  put_le<std::uint32_t>(out, kSnapshotVersion);
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(s.input));
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(s.hidden));
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(s.duel_hidden));
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(s.actions));
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(s.history));
  put_le<std::int64_t>(out, interval);
  put_le<std::int64_t>(out, slot);
  put_le<std::uint64_t>(out, static_cast<std::uint64_t>(params.size()));
  for (double v : params.values()) put_le<std::uint64_t>(out, std::bit_cast<std::uint64_t>(v));
  return out;
}

SnapshotFile deserialize_params(std::string_view bytes) {
  if (bytes.size() < kSnapshotHeaderSize) {
    throw format_error(bytes.size(), "truncated header (" + std::to_string(bytes.size()) +
                                         " of " + std::to_string(kSnapshotHeaderSize) +
                                         " bytes)");
  }
  if (std::memcmp(bytes.data(), kMagic.data(), kMagic.size()) != 0) {
    throw format_error(0, "bad magic");
  }
  const auto version = get_le<std::uint32_t>(bytes, 8);
  if (version != kSnapshotVersion) {
    throw format_error(8, "unsupported version " + std::to_string(version) + " (expected " +
                              std::to_string(kSnapshotVersion) + ")");
  }
  NetShape shape;
  const std::array<int*, 5> dims = {&shape.input, &shape.hidden, &shape.duel_hidden,
                                    &shape.actions, &shape.history};
  for (std::size_t i = 0; i < dims.size(); ++i) {
    const std::size_t offset = 12 + 4 * i;
    const auto v = get_le<std::uint32_t>(bytes, offset);
    if (v == 0 || v > (1u << 20)) throw format_error(offset, "implausible dimension " + std::to_string(v));
    *dims[i] = static_cast<int>(v);
  }
  SnapshotFile file;
  file.interval = get_le<std::int64_t>(bytes, 32);
  file.slot = get_le<std::int64_t>(bytes, 40);
  const auto count = get_le<std::uint64_t>(bytes, 48);
  const auto expected = QNetworkParams::layout_for(shape).total;
  if (count != expected) {
    throw format_error(48, "parameter count " + std::to_string(count) +
                               " does not match dimensions (" + std::to_string(expected) + ")");
  }
  const std::size_t need = kSnapshotHeaderSize + 8 * expected;
  if (bytes.size() != need) {
    throw format_error(std::min(bytes.size(), need),
                       "payload is " + std::to_string(bytes.size()) + " bytes, expected " +
                           std::to_string(need));
  }
  file.params = QNetworkParams(shape);
  auto values = file.params.values();
  for (std::size_t i = 0; i < expected; ++i) {
    values[i] = std::bit_cast<double>(get_le<std::uint64_t>(bytes, kSnapshotHeaderSize + 8 * i));
  }
  return file;
}

void write_file_atomic(const std::filesystem::path& path, std::string_view contents) {
  namespace fs = std::filesystem;
  if (path.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(path.parent_path(), ec);
    if (ec) throw IoError("cannot create directory '" + path.parent_path().string() + "': " + ec.message());
  }
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open '" + tmp.string() + "' for writing");
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    out.flush();
    if (!out) throw IoError("write to '" + tmp.string() + "' failed");
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) throw IoError("cannot rename '" + tmp.string() + "' to '" + path.string() + "': " + ec.message());
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

void save_snapshot(const std::filesystem::path& path, const QNetworkParams& params,
                   std::int64_t interval, std::int64_t slot) {
  write_file_atomic(path, serialize_params(params, interval, slot));
}

SnapshotFile load_snapshot(const std::filesystem::path& path) {
  try {
    return deserialize_params(read_file(path));
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

std::string render_trace_csv(const MetricsTrace& trace, std::size_t ma_window) {
  std::string out = "slot,sum_rate,moving_avg";
  for (int k = 0; k < trace.num_victims(); ++k) {
    out += ",victim_" + std::to_string(k) + "_channel,victim_" + std::to_string(k) + "_power";
  }
  out += ",attacker_channels,attacker_mode\n";
  if (trace.empty()) return out;

  const auto ma = moving_average(trace.sum_rates(), ma_window);
  for (std::size_t i = 0; i < trace.size(); ++i) {
    out += std::to_string(trace.slot(i));
    out += ',';
    out += format_double(trace.sum_rates()[i]);
    out += ',';
    out += format_double(ma[i]);
    for (int k = 0; k < trace.num_victims(); ++k) {
      const auto tx = trace.codec().transmission(trace.victim_action(i, k));
      out += ',';
      out += std::to_string(tx.channel ? *tx.channel : -1);
      out += ',';
      out += format_double(tx.power);
    }
    out += ',';
    const auto jammed = trace.jammed_channels(i);
    for (std::size_t j = 0; j < jammed.size(); ++j) {
      if (j) out += ';';
      out += std::to_string(jammed[j]);
    }
    out += ',';
    out += to_string(trace.jam_label(i));
    out += '\n';
  }
  return out;
}

std::string render_histogram_csv(const Histogram& h) {
  std::string out = "bin_lower,pdf,cdf\n";
  for (std::size_t b = 0; b < h.pdf.size(); ++b) {
    out += format_double(h.bin_lower[b]) + ',' + format_double(h.pdf[b]) + ',' +
           format_double(h.cdf[b]) + '\n';
  }
  return out;
}

void emit_trace(const MetricsTrace& trace, std::size_t ma_window,
                const std::filesystem::path& path) {
  write_file_atomic(path, render_trace_csv(trace, ma_window));
}

void emit_histogram(const Histogram& histogram, const std::filesystem::path& path) {
  write_file_atomic(path, render_histogram_csv(histogram));
}

std::string render_matrices_csv(std::span<const TransitionMatrix> matrices) {
  std::string out = "interval,n_c,r_bins";
  const std::size_t cells = matrices.empty() ? 0 : matrices.front().counts().size();
  for (std::size_t i = 0; i < cells; ++i) out += ",count_" + std::to_string(i);
  out += '\n';
  for (const auto& m : matrices) {
    out += std::to_string(m.interval()) + ',' + std::to_string(m.num_channels()) + ',' +
           std::to_string(m.reward_bins());
    for (auto c : m.counts()) {
      out += ',';
      out += std::to_string(c);
    }
    out += '\n';
  }
  return out;
}

std::vector<TransitionMatrix> parse_matrices_csv(std::string_view text) {
  std::vector<TransitionMatrix> out;
  std::size_t line_no = 0;
  bool header = true;
  while (!text.empty()) {
    ++line_no;
    const auto eol = text.find('\n');
    std::string_view line = text.substr(0, eol);
    text = eol == std::string_view::npos ? std::string_view{} : text.substr(eol + 1);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) continue;
    if (header) {
      if (line.substr(0, 8) != "interval") {
        throw FormatError("line 1: expected matrices header starting with 'interval'");
      }
      header = false;
      continue;
    }
    const auto fields = split(line, ',');
    if (fields.size() < 3) throw FormatError("line " + std::to_string(line_no) + ": too few fields");
    const int interval = parse_field<int>(fields[0], line_no);
    const int n_c = parse_field<int>(fields[1], line_no);
    const int r_bins = parse_field<int>(fields[2], line_no);
    if (n_c < 1 || r_bins < 1) {
      throw FormatError("line " + std::to_string(line_no) + ": invalid matrix dimensions");
    }
    TransitionMatrix m(n_c, r_bins, interval);
    auto counts = m.counts();
    if (fields.size() != 3 + counts.size()) {
      throw FormatError("line " + std::to_string(line_no) + ": expected " +
                        std::to_string(counts.size()) + " counts, found " +
                        std::to_string(fields.size() - 3));
    }
    for (std::size_t i = 0; i < counts.size(); ++i) {
      counts[i] = parse_field<std::uint64_t>(fields[3 + i], line_no);
    }
    out.push_back(std::move(m));
  }
  if (header) throw FormatError("matrices file is empty");
  return out;
}

std::string render_correlation_csv(std::span<const TransitionMatrix> matrices) {
  const auto table = correlation_table(matrices);
  const std::size_t n = matrices.size();
  std::string out = "interval";
  for (const auto& m : matrices) out += ',' + std::to_string(m.interval());
  out += '\n';
  for (std::size_t i = 0; i < n; ++i) {
    out += std::to_string(matrices[i].interval());
    for (std::size_t j = 0; j < n; ++j) out += ',' + format_double(table[i * n + j]);
    out += '\n';
  }
  return out;
}

std::string render_manifest(const ScenarioConfig& config, std::string_view command,
                            const PhaseBoundaries& phases,
                            std::span<const int> selected_intervals) {
  std::string out = "# jamnet run manifest\n# command: " + std::string(command) + "\n";
  out += render_config(config);
  out += "# phase attack_start = " + std::to_string(phases.attack_start) + '\n';
  out += "# phase retrain_start = " + std::to_string(phases.retrain_start) + '\n';
  out += "# phase retrain_end = " + std::to_string(phases.retrain_end) + '\n';
  out += "# phase ensemble_start = " + std::to_string(phases.ensemble_start) + '\n';
  out += "# phase collapse_slot = " + std::to_string(phases.collapse_slot) + '\n';
  out += "# phase end = " + std::to_string(phases.end) + '\n';
  if (!selected_intervals.empty()) {
    out += "# selected_intervals =";
    for (int i : selected_intervals) out += ' ' + std::to_string(i);
    out += '\n';
  }
  return out;
}

}  // namespace jamnet
