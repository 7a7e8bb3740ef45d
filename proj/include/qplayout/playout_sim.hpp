#pragma once

// Trace-driven playout simulation: talkspurt segmentation, per-talkspurt
// playout decisions, deadline-based loss accounting and E-Model scoring.

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "qplayout/delay_model.hpp"
#include "qplayout/playout_algorithms.hpp"
#include "qplayout/quality_model.hpp"
#include "qplayout/trace_io.hpp"

namespace qplayout {

struct Talkspurt {
  std::uint64_t id = 0;
  std::size_t begin = 0;  // index into Trace::packets
  std::size_t end = 0;    // one past the last packet
  double frame_interval_ms = 30.0;

  std::size_t size() const noexcept { return end - begin; }
  std::span<const PacketRecord> packets(const Trace& trace) const;
};

struct ExplicitColumn {};
struct GapThreshold {
  double threshold_ms = 100.0;
};
// Exponential on/off periods laid over the send-time axis. Packets sent during
// an off period belong to no talkspurt; they still feed the estimators.
struct OnOffModel {
  std::uint64_t seed = 1;
  double mean_on_ms = 1000.0;
  double mean_off_ms = 1350.0;
};
using SegmentationPolicy = std::variant<ExplicitColumn, GapThreshold, OnOffModel>;

std::vector<Talkspurt> segment_talkspurts(const Trace& trace, const SegmentationPolicy& policy,
                                          double frame_interval_ms = 30.0);

enum class DeciderKind { Proposed, GridSearch, ExpAvg, FastExpAvg, MinDelay, SpikeDetect, Fixed };

struct Decider {
  DeciderKind kind = DeciderKind::Proposed;
  double fixed_pd_ms = kDelayThresholdMs;  // Fixed only

  // proposed, p-optimum, exp-avg, f-exp-avg, min-del, spike-det, fixed:<ms>
  static Decider parse(std::string_view name);
  std::string name() const;

  bool operator==(const Decider&) const = default;
};

// Names accepted by Decider::parse, excluding the fixed:<ms> form.
std::span<const std::string_view> decider_names();

struct SimConfig {
  std::size_t window = DelayWindow::kDefaultCapacity;
  double frame_interval_ms = 30.0;
  ImpairmentConfig impairment;
  SegmentationPolicy segmentation = ExplicitColumn{};
  GridSpec grid;
  // Talkspurts shorter than this are decided but not scored.
  double min_talkspurt_ms = 0.0;
  // Extra mouth-to-ear delay added to pd when scoring.
  double delay_offset_ms = 0.0;

  void validate() const;
};

struct PlayoutSchedule {
  double pd_ms = 0.0;
  double start_ms = 0.0;  // send time of the talkspurt's first packet
  double frame_interval_ms = 30.0;

  double deadline(std::size_t index) const {
    return start_ms + pd_ms + static_cast<double>(index) * frame_interval_ms;
  }
};

struct TalkspurtResult {
  std::uint64_t id = 0;
  std::uint64_t first_seq = 0;
  std::size_t packets = 0;
  double pd_ms = 0.0;
  std::size_t network_lost = 0;
  std::size_t late_lost = 0;
  std::size_t received_on_time = 0;
  double loss_pct = 0.0;
  double burst_r = 1.0;
  double r = 0.0;
  double mos = 1.0;
  bool bootstrap = false;  // decided without usable history

  bool operator==(const TalkspurtResult&) const = default;
};

struct RunTotals {
  std::size_t talkspurts = 0;
  std::size_t packets = 0;
  std::size_t network_lost = 0;
  std::size_t late_lost = 0;
  std::size_t received_on_time = 0;
  double loss_pct = 0.0;
  double network_loss_pct = 0.0;
  double late_loss_pct = 0.0;
  double mean_pd_ms = 0.0;
  double e_mos_avg = 0.0;
  double measured_burst_r = 1.0;
  std::size_t bootstrap_decisions = 0;

  bool operator==(const RunTotals&) const = default;
};

struct RunResult {
  Decider decider;
  std::vector<TalkspurtResult> per_talkspurt;
  RunTotals totals;

  bool operator==(const RunResult&) const = default;
};

RunResult run_simulation(const Trace& trace, const Decider& decider, const SimConfig& cfg);

struct ComparisonTable {
  std::vector<RunResult> rows;  // in the order the deciders were given
};

// Runs every decider on the same trace and segmentation, concurrently when
// `parallel` is set.
ComparisonTable compare(const Trace& trace, std::span<const Decider> deciders, const SimConfig& cfg,
                        bool parallel = true);

struct Timing {
  std::size_t repetitions = 0;
  double total_ns = 0.0;
  double per_call_ns = 0.0;
};

inline constexpr std::size_t kMinBenchmarkRepetitions = 1000;

// Wall-clock cost of one playout decision from prepared optimizer inputs.
// Only Proposed and GridSearch are quality-based deciders with such a cost.
Timing timing_benchmark(const Decider& decider, const OptimizerInputs& inputs, const GridSpec& grid,
                        std::size_t repetitions);

}  // namespace qplayout
