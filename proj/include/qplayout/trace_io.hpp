#pragma once

// Probe-trace CSV (.ptrace.csv) reading/writing and seeded synthetic traces.
//
//   # free-form metadata lines
//   seq,send_ms,recv_ms[,spurt]
//   1,0,42.125
//   2,30,          <- lost packet: empty recv_ms
//
// Times are decimal milliseconds with at most 3 fractional digits. The header
// is optional on input and always written on output.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "qplayout/quality_model.hpp"

namespace qplayout {

struct PacketRecord {
  std::uint64_t seq = 0;
  double send_ms = 0.0;
  std::optional<double> recv_ms;
  std::optional<std::uint64_t> spurt_id;

  bool received() const noexcept { return recv_ms.has_value(); }
  double delay_ms() const { return *recv_ms - send_ms; }

  bool operator==(const PacketRecord&) const = default;
};

struct Trace {
  std::vector<PacketRecord> packets;
  std::vector<std::string> metadata;  // comment lines without the leading "# "

  bool has_spurt_ids() const;
  bool empty() const noexcept { return packets.empty(); }
  std::size_t size() const noexcept { return packets.size(); }

  bool operator==(const Trace&) const = default;
};

Trace parse_trace(std::string_view text);
std::string write_trace(const Trace& trace);

Trace load_trace(const std::filesystem::path& path);
void save_trace(const Trace& trace, const std::filesystem::path& path);

// Canonical decimal rendering used by the writer: rounded to 3 fractional
// digits, trailing zeros dropped.
std::string format_ms(double value);

enum class TailKind { Pareto, LogNormal, Exponential };

struct TailSpec {
  TailKind kind = TailKind::Pareto;
  // Pareto: (scale_ms, k); LogNormal: (mu, sigma) of ln(ms); Exponential: (lambda per ms, unused)
  double a = 20.0;
  double b = 2.0;

  void validate() const;
  // Accepts "pareto:20,2", "lognormal:3,0.5", "exponential:0.05".
  static TailSpec parse(std::string_view text);
  std::string to_string() const;
};

struct SpikeSpec {
  double rate = 0.0;  // per-packet probability of a spike event
  double magnitude_ms = 0.0;
  double decay = 0.9;  // per-packet geometric decay of the excess delay

  void validate() const;
};

struct GenConfig {
  std::uint64_t seed = 1;
  std::size_t n_packets = 10000;
  double interval_ms = 30.0;
  double base_delay_ms = 0.0;
  TailSpec tail;
  GilbertParams loss{0.0, 1.0};
  std::optional<SpikeSpec> spikes;

  void validate() const;
};

// Packet i is sent at i * interval_ms. Losses follow a Gilbert chain started
// from its stationary distribution; received delays are base + tail draw +
// current spike excess. Identical configs give identical traces.
Trace generate_trace(const GenConfig& cfg);

}  // namespace qplayout
