#include "qplayout/playout_sim.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <chrono>
#include <cmath>
#include <future>
#include <optional>

#include "qplayout/error.hpp"
#include "qplayout/rng.hpp"

namespace qplayout {

std::span<const PacketRecord> Talkspurt::packets(const Trace& trace) const {
  return std::span<const PacketRecord>(trace.packets).subspan(begin, size());
}

namespace {

struct Segmenter {
  const Trace& trace;
  double frame_interval_ms;

  std::vector<Talkspurt> operator()(const ExplicitColumn&) const {
    if (!trace.has_spurt_ids()) throw ValidationError("trace has no talkspurt ids");
    std::vector<Talkspurt> out;
    for (std::size_t i = 0; i < trace.size(); ++i) {
      const auto& id = trace.packets[i].spurt_id;
      if (!id) continue;
      if (!out.empty() && out.back().end == i && out.back().id == *id) {
        ++out.back().end;
      } else {
        out.push_back({*id, i, i + 1, frame_interval_ms});
      }
    }
    return out;
  }

  std::vector<Talkspurt> operator()(const GapThreshold& g) const {
    if (!(g.threshold_ms > 0.0)) throw ConfigError("gap threshold must be positive");
    std::vector<Talkspurt> out;
    std::uint64_t next_id = 1;
    for (std::size_t i = 0; i < trace.size(); ++i) {
      if (i == 0 || trace.packets[i].send_ms - trace.packets[i - 1].send_ms > g.threshold_ms)
        out.push_back({next_id++, i, i, frame_interval_ms});
      ++out.back().end;
    }
    return out;
  }

  std::vector<Talkspurt> operator()(const OnOffModel& m) const {
    if (!(m.mean_on_ms > 0.0 && m.mean_off_ms > 0.0)) throw ConfigError("on/off means must be positive");
    Rng rng(m.seed);
    std::vector<Talkspurt> out;
    std::uint64_t next_id = 1;
    bool on = true;
    std::uint64_t period = 0;
    std::optional<std::uint64_t> open_period;
    double boundary = trace.packets.front().send_ms + rng.exponential(m.mean_on_ms);
    for (std::size_t i = 0; i < trace.size(); ++i) {
      const double t = trace.packets[i].send_ms;
      while (t >= boundary) {
        on = !on;
        ++period;
        boundary += rng.exponential(on ? m.mean_on_ms : m.mean_off_ms);
      }
      if (!on) continue;
      if (open_period != period) {
        out.push_back({next_id++, i, i, frame_interval_ms});
        open_period = period;
      }
      ++out.back().end;
    }
    return out;
  }
};

bool is_lost_flag(LossFlag f) { return f == LossFlag::Lost; }

double measured_burst_ratio(const std::vector<LossFlag>& flags) {
  if (flags.size() < 2 || std::none_of(flags.begin(), flags.end(), is_lost_flag)) return 1.0;
  return estimate_gilbert(flags).burst_ratio();
}

// Received delays of zero (equal send/recv timestamps) are floored at the
// trace resolution so the estimators see strictly positive samples.
constexpr double kMinDelayMs = 0.001;

class DecisionEngine {
 public:
  DecisionEngine(const Decider& d, const SimConfig& cfg)
      : decider_(d), cfg_(cfg), window_(cfg.window), baseline_(make_baseline(d, cfg)) {}

  void observe(const PacketRecord& p) {
    if (!p.received()) {
      window_.push_lost();
      return;
    }
    const double delay = std::max(p.delay_ms(), kMinDelayMs);
    window_.push_received(delay);
    if (baseline_) baseline_->advance(delay);
  }

  // Returns the playout delay and whether the bootstrap rule supplied it.
  std::pair<double, bool> decide() const {
    switch (decider_.kind) {
      case DeciderKind::Fixed:
        return {decider_.fixed_pd_ms, false};
      case DeciderKind::Proposed:
      case DeciderKind::GridSearch: {
        const auto in = optimizer_inputs();
        if (!in) return {kDelayThresholdMs, true};
        if (decider_.kind == DeciderKind::Proposed) return {closed_form_playout(*in), false};
        return {grid_search_playout(*in, cfg_.grid), false};
      }
      default:
        if (baseline_->updates == 0) return {kDelayThresholdMs, true};
        return {baseline_playout(*baseline_), false};
    }
  }

 private:
  static std::optional<BaselineState> make_baseline(const Decider& d, const SimConfig& cfg) {
    switch (d.kind) {
      case DeciderKind::ExpAvg: return BaselineState::make(BaselineKind::ExpAvg, cfg.window);
      case DeciderKind::FastExpAvg: return BaselineState::make(BaselineKind::FastExpAvg, cfg.window);
      case DeciderKind::MinDelay: return BaselineState::make(BaselineKind::MinDelay, cfg.window);
      case DeciderKind::SpikeDetect: return BaselineState::make(BaselineKind::SpikeDetect, cfg.window);
      default: return std::nullopt;
    }
  }

  std::optional<OptimizerInputs> optimizer_inputs() const {
    if (window_.received_count() < 2) return std::nullopt;
    OptimizerInputs in;
    try {
      in.fit = fit_pareto_tail(window_);
    } catch (const InsufficientDataError&) {
      return std::nullopt;
    } catch (const DegenerateError&) {
      return std::nullopt;
    }
    in.rho_n = window_.network_loss();
    in.burst_r = measured_burst_ratio(window_.loss_flags());
    in.cfg = cfg_.impairment;
    return in;
  }

  Decider decider_;
  const SimConfig& cfg_;
  DelayWindow window_;
  std::optional<BaselineState> baseline_;
};

}  // namespace

std::vector<Talkspurt> segment_talkspurts(const Trace& trace, const SegmentationPolicy& policy,
                                          double frame_interval_ms) {
  if (trace.empty()) throw ValidationError("cannot segment an empty trace");
  if (!(frame_interval_ms > 0.0)) throw ConfigError("frame interval must be positive");
  return std::visit(Segmenter{trace, frame_interval_ms}, policy);
}

namespace {

constexpr std::array<std::string_view, 6> kDeciderNames{"proposed", "p-optimum", "exp-avg",
                                                        "f-exp-avg", "min-del",   "spike-det"};
constexpr std::array<DeciderKind, 6> kDeciderKinds{DeciderKind::Proposed, DeciderKind::GridSearch,
                                                   DeciderKind::ExpAvg,   DeciderKind::FastExpAvg,
                                                   DeciderKind::MinDelay, DeciderKind::SpikeDetect};

}  // namespace

std::span<const std::string_view> decider_names() { return kDeciderNames; }

Decider Decider::parse(std::string_view name) {
  for (std::size_t i = 0; i < kDeciderNames.size(); ++i)
    if (name == kDeciderNames[i]) return {kDeciderKinds[i], kDelayThresholdMs};
  if (name == "grid-search") return {DeciderKind::GridSearch, kDelayThresholdMs};
  constexpr std::string_view kFixed = "fixed:";
  if (name.starts_with(kFixed)) {
    const auto arg = name.substr(kFixed.size());
    double pd = 0.0;
    const auto res = std::from_chars(arg.data(), arg.data() + arg.size(), pd);
    if (res.ec == std::errc() && res.ptr == arg.data() + arg.size() && pd > 0.0 && std::isfinite(pd))
      return {DeciderKind::Fixed, pd};
  }
  std::string valid;
  for (auto n : kDeciderNames) {
    valid += valid.empty() ? "" : ", ";
    valid += n;
  }
  throw ConfigError("unknown algorithm '" + std::string(name) + "'; valid names: " + valid + ", fixed:<ms>");
}

std::string Decider::name() const {
  if (kind == DeciderKind::Fixed) return "fixed:" + format_ms(fixed_pd_ms);
  for (std::size_t i = 0; i < kDeciderKinds.size(); ++i)
    if (kind == kDeciderKinds[i]) return std::string(kDeciderNames[i]);
  return "unknown";
}

void SimConfig::validate() const {
  if (window < 1) throw ConfigError("window must be at least 1");
  if (!(frame_interval_ms > 0.0) || !std::isfinite(frame_interval_ms)) throw ConfigError("frame interval must be positive");
  impairment.validate();
  grid.validate();
  if (!(min_talkspurt_ms >= 0.0)) throw ConfigError("minimum talkspurt length must be non-negative");
  if (!(delay_offset_ms >= 0.0) || !std::isfinite(delay_offset_ms)) throw ConfigError("delay offset must be non-negative");
}

RunResult run_simulation(const Trace& trace, const Decider& decider, const SimConfig& cfg) {
  cfg.validate();
  const auto spurts = segment_talkspurts(trace, cfg.segmentation, cfg.frame_interval_ms);
  if (spurts.empty()) throw ValidationError("segmentation produced no talkspurts");

  RunResult result;
  result.decider = decider;
  DecisionEngine engine(decider, cfg);
  std::size_t fed = 0;
  std::vector<LossFlag> all_flags;
  double pd_sum = 0.0, mos_sum = 0.0;

  for (const auto& ts : spurts) {
    // Only packets sent before this talkspurt are visible to the decider.
    for (; fed < ts.begin; ++fed) engine.observe(trace.packets[fed]);
    const auto [pd, bootstrap] = engine.decide();

    const auto packets = ts.packets(trace);
    if (static_cast<double>(packets.size()) * ts.frame_interval_ms < cfg.min_talkspurt_ms) continue;

    const PlayoutSchedule schedule{pd, packets.front().send_ms, ts.frame_interval_ms};
    TalkspurtResult tr;
    tr.id = ts.id;
    tr.first_seq = packets.front().seq;
    tr.packets = packets.size();
    tr.pd_ms = pd;
    tr.bootstrap = bootstrap;
    std::vector<LossFlag> flags;
    flags.reserve(packets.size());
    for (std::size_t i = 0; i < packets.size(); ++i) {
      const auto& p = packets[i];
      if (!p.received()) {
        ++tr.network_lost;
        flags.push_back(LossFlag::Lost);
      } else if (*p.recv_ms > schedule.deadline(i)) {
        ++tr.late_lost;
        flags.push_back(LossFlag::Lost);
      } else {
        ++tr.received_on_time;
        flags.push_back(LossFlag::Received);
      }
    }
    tr.loss_pct = 100.0 * static_cast<double>(tr.network_lost + tr.late_lost) / static_cast<double>(tr.packets);
    tr.burst_r = measured_burst_ratio(flags);
    tr.r = r_factor(pd + cfg.delay_offset_ms, tr.loss_pct, tr.burst_r, cfg.impairment);
    tr.mos = r_to_mos(tr.r);
    all_flags.insert(all_flags.end(), flags.begin(), flags.end());

    auto& t = result.totals;
    ++t.talkspurts;
    t.packets += tr.packets;
    t.network_lost += tr.network_lost;
    t.late_lost += tr.late_lost;
    t.received_on_time += tr.received_on_time;
    t.bootstrap_decisions += tr.bootstrap ? 1 : 0;
    pd_sum += tr.pd_ms;
    mos_sum += tr.mos;
    result.per_talkspurt.push_back(tr);
  }

  auto& t = result.totals;
  if (t.talkspurts == 0) throw ValidationError("no talkspurt passed the minimum-length filter");
  const double n = static_cast<double>(t.packets);
  t.network_loss_pct = 100.0 * static_cast<double>(t.network_lost) / n;
  t.late_loss_pct = 100.0 * static_cast<double>(t.late_lost) / n;
  t.loss_pct = 100.0 * static_cast<double>(t.network_lost + t.late_lost) / n;
  t.mean_pd_ms = pd_sum / static_cast<double>(t.talkspurts);
  t.e_mos_avg = mos_sum / static_cast<double>(t.talkspurts);
  t.measured_burst_r = measured_burst_ratio(all_flags);
  return result;
}

ComparisonTable compare(const Trace& trace, std::span<const Decider> deciders, const SimConfig& cfg,
                        bool parallel) {
  if (deciders.empty()) throw ConfigError("comparison needs at least one algorithm");
  cfg.validate();
  ComparisonTable table;
  table.rows.reserve(deciders.size());
  if (!parallel) {
    for (const auto& d : deciders) table.rows.push_back(run_simulation(trace, d, cfg));
    return table;
  }
  std::vector<std::future<RunResult>> jobs;
  jobs.reserve(deciders.size());
  for (const auto& d : deciders)
    jobs.push_back(std::async(std::launch::async, [&trace, d, &cfg] { return run_simulation(trace, d, cfg); }));
  for (auto& j : jobs) table.rows.push_back(j.get());
  return table;
}

Timing timing_benchmark(const Decider& decider, const OptimizerInputs& inputs, const GridSpec& grid,
                        std::size_t repetitions) {
  if (repetitions < kMinBenchmarkRepetitions)
    throw ValidationError("benchmark needs at least " + std::to_string(kMinBenchmarkRepetitions) + " repetitions");
  if (decider.kind != DeciderKind::Proposed && decider.kind != DeciderKind::GridSearch)
    throw ConfigError("only proposed and p-optimum can be timed from optimizer inputs");
  inputs.validate();
  grid.validate();

  // The volatile round trip keeps the compiler from hoisting the pure call
  // out of the loop.
  volatile double scale = inputs.fit.scale;
  volatile double sink = 0.0;
  OptimizerInputs in = inputs;
  const auto start = std::chrono::steady_clock::now();
  for (std::size_t i = 0; i < repetitions; ++i) {
    in.fit.scale = scale;
    sink = sink + (decider.kind == DeciderKind::Proposed ? closed_form_playout(in) : grid_search_playout(in, grid));
  }
  const auto stop = std::chrono::steady_clock::now();
  Timing t;
  t.repetitions = repetitions;
  t.total_ns = static_cast<double>(std::chrono::duration_cast<std::chrono::nanoseconds>(stop - start).count());
  t.per_call_ns = t.total_ns / static_cast<double>(repetitions);
  return t;
}

}  // namespace qplayout
