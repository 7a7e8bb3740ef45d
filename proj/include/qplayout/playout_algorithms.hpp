#pragma once

// Playout-delay deciders: the closed-form quality optimizer, a grid-search
// reference over the same objective, and the four Ramjee baselines.

#include <cstddef>
#include <deque>

#include "qplayout/delay_model.hpp"
#include "qplayout/quality_model.hpp"

namespace qplayout {

struct OptimizerInputs {
  ParetoFit fit;
  double rho_n = 0.0;
  double burst_r = 1.0;
  ImpairmentConfig cfg;

  void validate() const;
};

struct GridSpec {
  double lo_ms = 150.0;
  double hi_ms = 5000.0;
  std::size_t points = 200;
  bool log_spacing = true;

  void validate() const;
  double point(std::size_t i) const;
};

// Simplified delay impairment plus loss-dependent equipment impairment at pd.
// Below the tail scale the loss term is held at its value at the scale.
double objective(double pd_ms, const OptimizerInputs& in);

struct ClosedFormSolution {
  double pd_ms = kDelayThresholdMs;
  // True when the returned delay is the interior stationary point rather than
  // the 150 ms floor.
  bool interior = false;
  // Local minimum of the objective from the derivative condition, before the
  // 150 ms clamp; NaN when the quadratic has no real root.
  double stationary_pd_ms = 0.0;
  // Tail loss term 50 (1 - rho_n) (scale / pd)^k at the stationary point.
  double stationary_tail_loss = 0.0;
};

// Solves -d/dP Idd = d/dP Ie-eff analytically. With x the tail loss term
// 50 (1 - rho_n) (scale / P)^k the condition is the quadratic
//   55 (x + c)^2 = a1 x,   c = 100 rho_n + B Bpl,
//   a1 = k B^2 (95 - Ie) ln(10) Bpl,
// whose smaller root is the local minimum. Written with a2 = 110 c,
//   P = scale * (0.5 * 110 * 100 (1 - rho_n) / (a1 - a2 - sqrt(a1 (a1 - 2 a2))))^(1/k).
// The published form of this expression omits the Bpl factor in a1; see
// closed_form_playout_as_printed. The interior point is kept only if it beats
// the 150 ms floor, so the result is the global minimum over [150, inf).
ClosedFormSolution solve_closed_form(const OptimizerInputs& in);
double closed_form_playout(const OptimizerInputs& in);

// The closed form exactly as published (a1 without Bpl), clamped at 150 ms.
// Kept for comparison only.
double closed_form_playout_as_printed(const OptimizerInputs& in);

// Grid point with the smallest objective; ties go to the smaller delay.
double grid_search_playout(const OptimizerInputs& in, const GridSpec& grid);

enum class BaselineKind { ExpAvg, FastExpAvg, MinDelay, SpikeDetect };
enum class SpikeMode { Normal, Impulse };

// Ramjee et al. (INFOCOM 1994) estimator constants, with the spike detector's
// 8 kHz timestamp-unit thresholds converted to milliseconds.
struct BaselineConstants {
  static constexpr double kAlpha = 0.998002;
  static constexpr double kFastAlpha = 0.75;
  static constexpr double kSpikeWeight = 0.125;
  static constexpr double kSpikeEntryMs = 100.0;  // 800 samples
  static constexpr double kSpikeExitMs = 7.875;   // 63 samples
  static constexpr double kVariationFactor = 4.0;
};

struct BaselineState {
  BaselineKind algorithm = BaselineKind::ExpAvg;
  double d_hat = 0.0;
  double v_hat = 0.0;
  SpikeMode mode = SpikeMode::Normal;
  std::deque<double> recent_delays;
  std::size_t recent_capacity = DelayWindow::kDefaultCapacity;
  double previous_delay = 0.0;
  double previous_delay2 = 0.0;
  double spike_var = 0.0;
  std::size_t updates = 0;

  static BaselineState make(BaselineKind kind, std::size_t window = DelayWindow::kDefaultCapacity);

  // In-place form of baseline_update.
  void advance(double delay_ms);
};

BaselineState baseline_update(BaselineState state, double delay_ms);
double baseline_playout(const BaselineState& state);

}  // namespace qplayout
