#include "qplayout/playout_algorithms.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "qplayout/error.hpp"

namespace qplayout {

void OptimizerInputs::validate() const {
  fit.validate();
  cfg.validate();
  if (!(rho_n >= 0.0 && rho_n <= 1.0)) throw DomainError("network loss must lie in [0, 1]");
  if (!(burst_r > 0.0) || !std::isfinite(burst_r)) throw DomainError("burst ratio must be positive");
}

void GridSpec::validate() const {
  if (!(lo_ms > 0.0) || !std::isfinite(hi_ms)) throw ConfigError("grid bounds must be positive and finite");
  if (!(lo_ms < hi_ms)) throw ConfigError("grid needs lo < hi");
  if (points < 2) throw ConfigError("grid needs at least 2 points");
}

double GridSpec::point(std::size_t i) const {
  if (i + 1 == points) return hi_ms;
  const double t = static_cast<double>(i) / static_cast<double>(points - 1);
  return log_spacing ? lo_ms * std::pow(hi_ms / lo_ms, t) : lo_ms + t * (hi_ms - lo_ms);
}

double objective(double pd_ms, const OptimizerInputs& in) {
  const double loss = predicted_loss(in.fit, in.rho_n, std::max(pd_ms, in.fit.scale));
  return idd_simplified(pd_ms) + ie_eff(loss, in.burst_r, in.cfg);
}

namespace {

struct Stationary {
  bool exists = false;
  double pd_ms = 0.0;
  double tail_loss = 0.0;
};

Stationary stationary_point(const OptimizerInputs& in, bool with_bpl) {
  const double k = in.fit.shape;
  const double b = effective_burst_ratio(in.burst_r, in.cfg);
  const double a1 = k * b * b * (95.0 - in.cfg.ie) * std::numbers::ln10 * (with_bpl ? in.cfg.bpl : 1.0);
  const double a2 = 110.0 * (in.rho_n * 100.0 + b * in.cfg.bpl);
  const double disc = a1 * (a1 - 2.0 * a2);
  if (in.rho_n >= 1.0 || disc < 0.0) return {};
  // a1 - a2 - sqrt(disc), rewritten through the root product a2^2 to avoid
  // cancellation when a1 >> a2.
  const double denom = a2 * a2 / (a1 - a2 + std::sqrt(disc));
  if (!(denom > 0.0)) return {};
  const double numer = 0.5 * 110.0 * 100.0 * (1.0 - in.rho_n);
  return {true, in.fit.scale * std::pow(numer / denom, 1.0 / k), denom / 110.0};
}

}  // namespace

ClosedFormSolution solve_closed_form(const OptimizerInputs& in) {
  in.validate();
  ClosedFormSolution out;
  const Stationary s = stationary_point(in, true);
  if (!s.exists) {
    out.stationary_pd_ms = std::numeric_limits<double>::quiet_NaN();
    return out;
  }
  out.stationary_pd_ms = s.pd_ms;
  out.stationary_tail_loss = s.tail_loss;
  // Below the scale the stationary point is outside the tail model, and the
  // objective only grows from 150 ms upward there.
  if (!(s.pd_ms > kDelayThresholdMs && s.pd_ms > in.fit.scale) || !std::isfinite(s.pd_ms)) return out;
  // The larger root c^2 / x1 is a local maximum. If it lies beyond the tail
  // loss reachable at 150 ms, the objective is unimodal on [150, inf) and the
  // stationary point wins without evaluating the floor.
  if (in.fit.scale <= kDelayThresholdMs) {
    const double b = effective_burst_ratio(in.burst_r, in.cfg);
    const double c = 100.0 * in.rho_n + b * in.cfg.bpl;
    const double x_floor = s.tail_loss * std::pow(s.pd_ms / kDelayThresholdMs, in.fit.shape);
    if (c * c / s.tail_loss >= x_floor) {
      out.pd_ms = s.pd_ms;
      out.interior = true;
      return out;
    }
  }
  if (objective(s.pd_ms, in) < objective(kDelayThresholdMs, in)) {
    out.pd_ms = s.pd_ms;
    out.interior = true;
  }
  return out;
}

double closed_form_playout(const OptimizerInputs& in) { return solve_closed_form(in).pd_ms; }

double closed_form_playout_as_printed(const OptimizerInputs& in) {
  in.validate();
  const Stationary s = stationary_point(in, false);
  if (!s.exists || !std::isfinite(s.pd_ms)) return kDelayThresholdMs;
  return std::max(s.pd_ms, kDelayThresholdMs);
}

double grid_search_playout(const OptimizerInputs& in, const GridSpec& grid) {
  in.validate();
  grid.validate();
  double best_pd = 0.0;
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < grid.points; ++i) {
    const double pd = std::max(grid.point(i), kDelayThresholdMs);
    const double f = objective(pd, in);
    if (f < best) {
      best = f;
      best_pd = pd;
    }
  }
  return best_pd;
}

BaselineState BaselineState::make(BaselineKind kind, std::size_t window) {
  if (window == 0) throw ConfigError("baseline window must be at least 1");
  BaselineState s;
  s.algorithm = kind;
  s.recent_capacity = window;
  return s;
}

void BaselineState::advance(double n) {
  using C = BaselineConstants;
  if (!(n > 0.0) || !std::isfinite(n)) throw DomainError("baseline delays must be positive");

  if (algorithm == BaselineKind::MinDelay) {
    recent_delays.push_back(n);
    while (recent_delays.size() > recent_capacity) recent_delays.pop_front();
  }
  if (updates++ == 0) {
    d_hat = n;
    v_hat = 0.0;
    previous_delay = previous_delay2 = n;
    return;
  }

  switch (algorithm) {
    case BaselineKind::ExpAvg:
      d_hat = C::kAlpha * d_hat + (1.0 - C::kAlpha) * n;
      v_hat = C::kAlpha * v_hat + (1.0 - C::kAlpha) * std::abs(d_hat - n);
      break;
    case BaselineKind::FastExpAvg: {
      const double a = n > d_hat ? C::kFastAlpha : C::kAlpha;
      d_hat = a * d_hat + (1.0 - a) * n;
      v_hat = C::kAlpha * v_hat + (1.0 - C::kAlpha) * std::abs(d_hat - n);
      break;
    }
    case BaselineKind::MinDelay:
      d_hat = *std::min_element(recent_delays.begin(), recent_delays.end());
      v_hat = C::kAlpha * v_hat + (1.0 - C::kAlpha) * std::abs(d_hat - n);
      break;
    case BaselineKind::SpikeDetect:
      if (mode == SpikeMode::Normal) {
        if (std::abs(n - previous_delay) > 2.0 * std::abs(v_hat) + C::kSpikeEntryMs) {
          spike_var = 0.0;
          mode = SpikeMode::Impulse;
        }
      } else {
        spike_var = spike_var / 2.0 + std::abs((2.0 * n - previous_delay - previous_delay2) / 8.0);
        if (spike_var <= C::kSpikeExitMs) {
          mode = SpikeMode::Normal;
          previous_delay2 = previous_delay;
          previous_delay = n;
          return;
        }
      }
      if (mode == SpikeMode::Normal) d_hat = C::kSpikeWeight * n + (1.0 - C::kSpikeWeight) * d_hat;
      else d_hat = d_hat + n - previous_delay;
      v_hat = C::kSpikeWeight * std::abs(n - d_hat) + (1.0 - C::kSpikeWeight) * v_hat;
      break;
  }
  previous_delay2 = previous_delay;
  previous_delay = n;
}

BaselineState baseline_update(BaselineState state, double delay_ms) {
  state.advance(delay_ms);
  return state;
}

double baseline_playout(const BaselineState& state) {
  if (state.updates == 0) throw InsufficientDataError("baseline estimator has seen no delays");
  return state.d_hat + BaselineConstants::kVariationFactor * state.v_hat;
}

}  // namespace qplayout
