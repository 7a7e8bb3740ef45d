#pragma once

// E-Model impairment factors, the R factor and its MOS mapping.

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace qplayout {

enum class IddVariant { Simplified, G107Full };

struct ImpairmentConfig {
  double r0 = 93.2;   // basic signal-to-noise ratio
  double ie = 11.0;   // codec equipment impairment
  double bpl = 19.0;  // codec packet-loss robustness
  IddVariant idd_variant = IddVariant::Simplified;
  // Measured burst ratios below 1 are raised to 1 before entering Ie-eff.
  bool floor_burst_ratio = true;

  // Throws ConfigError when r0, ie or bpl is out of range.
  void validate() const;
};

struct GilbertParams {
  double p = 0.0;  // received -> lost
  double q = 1.0;  // lost -> received

  void validate() const;
  // Stationary loss rate in percent, 100 p / (p + q).
  double stationary_loss_pct() const;
};

inline constexpr double kDelayThresholdMs = 150.0;

double idd_simplified(double pd_ms);
double idd_g107(double pd_ms);
double idd(double pd_ms, IddVariant variant);

double burst_ratio(const GilbertParams& params);

// Burst ratio actually used by ie_eff under cfg (floored at 1 when enabled).
double effective_burst_ratio(double burst_r, const ImpairmentConfig& cfg);

double ie_eff(double loss_pct, double burst_r, const ImpairmentConfig& cfg);

double r_factor(double pd_ms, double loss_pct, double burst_r, const ImpairmentConfig& cfg);

double r_to_mos(double r);

// Codec Ie/Bpl presets. The built-in table holds G.113 Appendix I values; a
// user table in the same TSV layout (name, ie, bpl) may replace it.
struct CodecEntry {
  std::string name;
  double ie;
  double bpl;
  std::string source;
};

const std::vector<CodecEntry>& builtin_codecs();
std::vector<CodecEntry> parse_codec_table(std::string_view text);
std::optional<CodecEntry> find_codec(const std::vector<CodecEntry>& table, std::string_view name);

}  // namespace qplayout
