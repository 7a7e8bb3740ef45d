#pragma once

// Sliding-window delay statistics: median, Pareto tail fit, loss prediction,
// Gilbert estimation from loss patterns and a four-distribution fit comparison.

#include <cstddef>
#include <deque>
#include <span>
#include <string_view>
#include <vector>

#include "qplayout/quality_model.hpp"

namespace qplayout {

enum class LossFlag : unsigned char { Received, Lost };

// The last `capacity` sequence slots, each either a received delay or a loss.
// Pushing beyond capacity evicts the oldest slot (FIFO over sequence numbers).
class DelayWindow {
 public:
  static constexpr std::size_t kDefaultCapacity = 500;

  explicit DelayWindow(std::size_t capacity = kDefaultCapacity);

  void push_received(double delay_ms);
  void push_lost();
  void clear();

  std::size_t capacity() const noexcept { return capacity_; }
  std::size_t size() const noexcept { return slots_.size(); }
  std::size_t received_count() const noexcept { return received_; }
  bool empty() const noexcept { return slots_.empty(); }

  // Received delays in sequence order.
  std::vector<double> delays() const;
  std::vector<LossFlag> loss_flags() const;
  // Fraction of slots marked Lost; 0 for an empty window.
  double network_loss() const noexcept;

 private:
  struct Slot {
    LossFlag flag;
    double delay_ms;
  };
  std::size_t capacity_;
  std::size_t received_ = 0;
  std::deque<Slot> slots_;
};

struct ParetoFit {
  double scale = 1.0;  // ms, the window median
  double shape = 1.0;  // k
  std::size_t n_tail = 1;
  bool shape_capped = false;

  void validate() const;
};

inline constexpr double kMinParetoShape = 0.05;
inline constexpr double kMaxParetoShape = 50.0;

double median(std::span<const double> values);
double window_median(const DelayWindow& w);

// Pareto MLE over the samples strictly above the median, with the median as
// the known scale. Shape is clamped to [kMinParetoShape, kMaxParetoShape].
ParetoFit fit_pareto_tail(std::span<const double> delays);
ParetoFit fit_pareto_tail(const DelayWindow& w);

// P(d >= pd) under the tail model; pd must not be below the scale.
double pareto_ccdf(const ParetoFit& fit, double pd_ms);

// Total loss in percent: network loss plus half the received packets times the
// tail CCDF (the tail model covers only the upper half of received delays).
double predicted_loss(const ParetoFit& fit, double rho_n, double pd_ms);

struct GilbertEstimate {
  GilbertParams params;
  std::size_t n_transitions = 0;
  double network_loss = 0.0;

  double burst_ratio() const { return qplayout::burst_ratio(params); }
};

// Adjacent-pair transition-count estimate. With no losses, p = 0 and q = 1.
// With losses but no observed exit from the lost state, q = 1 / (n_LL + 1),
// i.e. the final run is assumed to end right after the sequence.
GilbertEstimate estimate_gilbert(std::span<const LossFlag> flags);

enum class Distribution { Pareto, Weibull, LogNormal, Exponential };

std::string_view distribution_name(Distribution d);

struct DistributionFit {
  Distribution distribution;
  // Pareto: (scale, shape); Weibull: (lambda, k); LogNormal: (mu, sigma);
  // Exponential: (lambda, unused).
  double param1 = 0.0;
  double param2 = 0.0;
  double ks_statistic = 1.0;

  double cdf(double x) const;
};

enum class FitScope {
  Full,  // all samples; Pareto scale is the sample minimum
  Tail,  // samples above the median; Pareto scale is the median
};

// Fits the four candidate distributions by maximum likelihood and reports each
// one's Kolmogorov-Smirnov distance to the empirical CDF, in the order
// Pareto, Weibull, LogNormal, Exponential.
std::vector<DistributionFit> fit_alternatives(std::span<const double> delays, FitScope scope);
std::vector<DistributionFit> fit_alternatives(const DelayWindow& w, FitScope scope = FitScope::Tail);

double ks_statistic(std::span<const double> sorted_samples, const DistributionFit& fit);

}  // namespace qplayout
