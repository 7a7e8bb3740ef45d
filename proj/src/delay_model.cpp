#include "qplayout/delay_model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "qplayout/error.hpp"

namespace qplayout {

DelayWindow::DelayWindow(std::size_t capacity) : capacity_(capacity) {
  if (capacity == 0) throw ConfigError("window capacity must be at least 1");
}

void DelayWindow::push_received(double delay_ms) {
  if (!(delay_ms > 0.0) || !std::isfinite(delay_ms)) throw DomainError("window delays must be positive");
  if (slots_.size() == capacity_) {
    if (slots_.front().flag == LossFlag::Received) --received_;
    slots_.pop_front();
  }
  slots_.push_back({LossFlag::Received, delay_ms});
  ++received_;
}

void DelayWindow::push_lost() {
  if (slots_.size() == capacity_) {
    if (slots_.front().flag == LossFlag::Received) --received_;
    slots_.pop_front();
  }
  slots_.push_back({LossFlag::Lost, 0.0});
}

void DelayWindow::clear() {
  slots_.clear();
  received_ = 0;
}

std::vector<double> DelayWindow::delays() const {
  std::vector<double> out;
  out.reserve(received_);
  for (const auto& s : slots_)
    if (s.flag == LossFlag::Received) out.push_back(s.delay_ms);
  return out;
}

std::vector<LossFlag> DelayWindow::loss_flags() const {
  std::vector<LossFlag> out;
  out.reserve(slots_.size());
  for (const auto& s : slots_) out.push_back(s.flag);
  return out;
}

double DelayWindow::network_loss() const noexcept {
  if (slots_.empty()) return 0.0;
  return static_cast<double>(slots_.size() - received_) / static_cast<double>(slots_.size());
}

void ParetoFit::validate() const {
  if (!(scale > 0.0) || !std::isfinite(scale)) throw DomainError("pareto scale must be positive");
  if (!(shape > 0.0) || !std::isfinite(shape)) throw DomainError("pareto shape must be positive");
  if (n_tail < 1) throw DomainError("pareto fit needs at least one tail sample");
}

double median(std::span<const double> values) {
  if (values.empty()) throw InsufficientDataError("median of an empty sample");
  std::vector<double> v(values.begin(), values.end());
  const std::size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
  const double upper = v[mid];
  if (v.size() % 2 == 1) return upper;
  const double lower = *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid));
  return 0.5 * (lower + upper);
}

double window_median(const DelayWindow& w) {
  const auto d = w.delays();
  return median(d);
}

ParetoFit fit_pareto_tail(std::span<const double> delays) {
  if (delays.empty()) throw InsufficientDataError("no received delays to fit");
  const auto [lo, hi] = std::minmax_element(delays.begin(), delays.end());
  if (*lo == *hi) throw DegenerateError("all delays are equal; tail is degenerate");

  ParetoFit fit;
  fit.scale = median(delays);
  if (!(fit.scale > 0.0)) throw DegenerateError("median delay is not positive");
  std::size_t n = 0;
  double log_sum = 0.0;
  for (double d : delays) {
    if (d > fit.scale) {
      ++n;
      log_sum += std::log(d / fit.scale);
    }
  }
  if (n == 0) throw InsufficientDataError("no delays strictly above the median");
  const double raw = static_cast<double>(n) / log_sum;
  fit.shape = std::clamp(raw, kMinParetoShape, kMaxParetoShape);
  fit.shape_capped = fit.shape != raw;
  fit.n_tail = n;
  return fit;
}

ParetoFit fit_pareto_tail(const DelayWindow& w) {
  const auto d = w.delays();
  return fit_pareto_tail(d);
}

double pareto_ccdf(const ParetoFit& fit, double pd_ms) {
  fit.validate();
  if (!(pd_ms >= fit.scale)) throw DomainError("tail model is undefined below the scale");
  return std::pow(fit.scale / pd_ms, fit.shape);
}

double predicted_loss(const ParetoFit& fit, double rho_n, double pd_ms) {
  if (!(rho_n >= 0.0 && rho_n <= 1.0)) throw DomainError("network loss must lie in [0, 1]");
  return 100.0 * rho_n + 50.0 * (1.0 - rho_n) * pareto_ccdf(fit, pd_ms);
}

GilbertEstimate estimate_gilbert(std::span<const LossFlag> flags) {
  if (flags.size() < 2) throw InsufficientDataError("gilbert estimate needs at least two slots");
  std::size_t rr = 0, rl = 0, lr = 0, ll = 0, lost = 0;
  for (std::size_t i = 0; i < flags.size(); ++i) {
    if (flags[i] == LossFlag::Lost) ++lost;
    if (i == 0) continue;
    const bool prev_lost = flags[i - 1] == LossFlag::Lost;
    const bool cur_lost = flags[i] == LossFlag::Lost;
    if (!prev_lost && !cur_lost) ++rr;
    else if (!prev_lost && cur_lost) ++rl;
    else if (prev_lost && !cur_lost) ++lr;
    else ++ll;
  }

  GilbertEstimate est;
  est.n_transitions = flags.size() - 1;
  est.network_loss = static_cast<double>(lost) / static_cast<double>(flags.size());
  if (lost == 0) {
    est.params = {0.0, 1.0};
    return est;
  }
  est.params.p = (rl + rr) > 0 ? static_cast<double>(rl) / static_cast<double>(rl + rr) : 0.0;
  est.params.q = lr > 0 ? static_cast<double>(lr) / static_cast<double>(lr + ll)
                        : 1.0 / static_cast<double>(ll + 1);
  return est;
}

std::string_view distribution_name(Distribution d) {
  switch (d) {
    case Distribution::Pareto: return "pareto";
    case Distribution::Weibull: return "weibull";
    case Distribution::LogNormal: return "lognormal";
    case Distribution::Exponential: return "exponential";
  }
  return "unknown";
}

double DistributionFit::cdf(double x) const {
  switch (distribution) {
    case Distribution::Pareto:
      return x < param1 ? 0.0 : 1.0 - std::pow(param1 / x, param2);
    case Distribution::Weibull:
      return x <= 0.0 ? 0.0 : 1.0 - std::exp(-std::pow(x / param1, param2));
    case Distribution::LogNormal:
      return x <= 0.0 ? 0.0 : 0.5 + 0.5 * std::erf((std::log(x) - param1) / (param2 * std::sqrt(2.0)));
    case Distribution::Exponential:
      return x <= 0.0 ? 0.0 : 1.0 - std::exp(-param1 * x);
  }
  return 0.0;
}

double ks_statistic(std::span<const double> sorted, const DistributionFit& fit) {
  const double n = static_cast<double>(sorted.size());
  double d = 0.0;
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    const double f = fit.cdf(sorted[i]);
    d = std::max({d, static_cast<double>(i + 1) / n - f, f - static_cast<double>(i) / n});
  }
  return d;
}

namespace {

// Profile-likelihood equation for the Weibull shape; increasing in k.
double weibull_score(std::span<const double> x_scaled, double mean_log, double k) {
  double s0 = 0.0, s1 = 0.0;
  for (double x : x_scaled) {
    const double xk = std::pow(x, k);
    s0 += xk;
    s1 += xk * std::log(x);
  }
  return s1 / s0 - 1.0 / k - mean_log;
}

DistributionFit fit_weibull(std::span<const double> x) {
  const double top = *std::max_element(x.begin(), x.end());
  std::vector<double> scaled(x.begin(), x.end());
  for (double& v : scaled) v /= top;
  double mean_log = 0.0;
  for (double v : scaled) mean_log += std::log(v);
  mean_log /= static_cast<double>(scaled.size());

  double lo = 1e-3, hi = 1e3;
  for (int i = 0; i < 200 && hi / lo > 1.0 + 1e-13; ++i) {
    const double mid = std::sqrt(lo * hi);
    if (weibull_score(scaled, mean_log, mid) > 0.0) hi = mid;
    else lo = mid;
  }
  const double k = std::sqrt(lo * hi);
  double mk = 0.0;
  for (double v : scaled) mk += std::pow(v, k);
  mk /= static_cast<double>(scaled.size());
  return {Distribution::Weibull, top * std::pow(mk, 1.0 / k), k, 1.0};
}

}  // namespace

std::vector<DistributionFit> fit_alternatives(std::span<const double> delays, FitScope scope) {
  if (delays.size() < 10) throw InsufficientDataError("distribution comparison needs at least 10 delays");
  for (double d : delays)
    if (!(d > 0.0)) throw DomainError("delays must be positive");
  const auto [lo, hi] = std::minmax_element(delays.begin(), delays.end());
  if (*lo == *hi) throw DegenerateError("constant delays cannot be fitted");

  std::vector<double> x;
  double pareto_scale = 0.0;
  if (scope == FitScope::Tail) {
    pareto_scale = median(delays);
    for (double d : delays)
      if (d > pareto_scale) x.push_back(d);
    if (x.size() < 2) throw InsufficientDataError("too few delays above the median");
  } else {
    x.assign(delays.begin(), delays.end());
    pareto_scale = *lo;
  }
  std::sort(x.begin(), x.end());
  if (x.front() == x.back()) throw DegenerateError("constant tail cannot be fitted");
  const double n = static_cast<double>(x.size());

  double log_sum = 0.0, lin_sum = 0.0, pareto_log = 0.0;
  for (double v : x) {
    log_sum += std::log(v);
    lin_sum += v;
    pareto_log += std::log(v / pareto_scale);
  }
  const double mu = log_sum / n;
  double var = 0.0;
  for (double v : x) var += (std::log(v) - mu) * (std::log(v) - mu);
  const double sigma = std::sqrt(var / n);

  std::vector<DistributionFit> fits{
      {Distribution::Pareto, pareto_scale, n / pareto_log, 1.0},
      fit_weibull(x),
      {Distribution::LogNormal, mu, sigma, 1.0},
      {Distribution::Exponential, n / lin_sum, 0.0, 1.0},
  };
  for (auto& f : fits) f.ks_statistic = ks_statistic(x, f);
  return fits;
}

std::vector<DistributionFit> fit_alternatives(const DelayWindow& w, FitScope scope) {
  const auto d = w.delays();
  return fit_alternatives(d, scope);
}

}  // namespace qplayout
