#include "qplayout/quality_model.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "qplayout/error.hpp"

namespace qplayout {

void ImpairmentConfig::validate() const {
  if (!(r0 > 0.0 && r0 <= 100.0)) throw ConfigError("r0 must lie in (0, 100]");
  if (!(ie >= 0.0 && ie < 95.0)) throw ConfigError("ie must lie in [0, 95)");
  if (!(bpl > 0.0) || !std::isfinite(bpl)) throw ConfigError("bpl must be positive");
}

void GilbertParams::validate() const {
  if (!(p >= 0.0 && p <= 1.0)) throw DomainError("gilbert p must lie in [0, 1]");
  if (!(q > 0.0 && q <= 1.0)) throw DomainError("gilbert q must lie in (0, 1]");
}

double GilbertParams::stationary_loss_pct() const { return 100.0 * p / (p + q); }

double idd_simplified(double pd_ms) {
  if (!(pd_ms > 0.0)) throw DomainError("playout delay must be positive");
  if (pd_ms < kDelayThresholdMs) return 0.0;
  return 55.0 * std::log10(pd_ms / kDelayThresholdMs);
}

double idd_g107(double pd_ms) {
  if (!(pd_ms > 0.0)) throw DomainError("playout delay must be positive");
  if (pd_ms <= 100.0) return 0.0;
  const double x = std::log10(pd_ms / 100.0) / std::log10(2.0);
  const double x6 = std::pow(x, 6.0);
  const double x3_6 = std::pow(x / 3.0, 6.0);
  return 25.0 * (std::pow(1.0 + x6, 1.0 / 6.0) - 3.0 * std::pow(1.0 + x3_6, 1.0 / 6.0) + 2.0);
}

double idd(double pd_ms, IddVariant variant) {
  return variant == IddVariant::Simplified ? idd_simplified(pd_ms) : idd_g107(pd_ms);
}

double burst_ratio(const GilbertParams& params) {
  const double sum = params.p + params.q;
  if (!(sum > 0.0)) throw DegenerateError("gilbert model with p + q = 0 has no burst ratio");
  return 1.0 / sum;
}

double effective_burst_ratio(double burst_r, const ImpairmentConfig& cfg) {
  if (!(burst_r > 0.0) || !std::isfinite(burst_r)) throw DomainError("burst ratio must be positive");
  return cfg.floor_burst_ratio ? std::max(burst_r, 1.0) : burst_r;
}

double ie_eff(double loss_pct, double burst_r, const ImpairmentConfig& cfg) {
  if (!(loss_pct >= 0.0 && loss_pct <= 100.0)) throw DomainError("loss must lie in [0, 100] percent");
  const double b = effective_burst_ratio(burst_r, cfg);
  return cfg.ie + (95.0 - cfg.ie) * loss_pct / (loss_pct / b + cfg.bpl);
}

double r_factor(double pd_ms, double loss_pct, double burst_r, const ImpairmentConfig& cfg) {
  return cfg.r0 - ie_eff(loss_pct, burst_r, cfg) - idd(pd_ms, cfg.idd_variant);
}

double r_to_mos(double r) {
  if (std::isnan(r)) return 1.0;
  if (r <= 0.0) return 1.0;
  if (r >= 100.0) return 4.5;
  // The cubic dips just below 1 for R in (0, ~6.5); hold it at the floor there.
  return std::max(1.0, 1.0 + 0.035 * r + r * (r - 60.0) * (100.0 - r) * 7.0e-6);
}

namespace {

constexpr const char* kBuiltinCodecTable =
    "g711\t0\t4.3\tG.113 I.3, G.711 without PLC\n"
    "g711-plc\t0\t25.1\tG.113 I.3, G.711 with packet loss concealment\n"
    "g729a\t11\t19.0\tG.113 I.3, G.729A + VAD\n"
    "g723.1-6.3\t15\t16.1\tG.113 I.3, G.723.1 6.3 kbit/s + VAD\n"
    "gsm-efr\t5\t10.0\tG.113 I.3, GSM 06.60 EFR\n";

}  // namespace

const std::vector<CodecEntry>& builtin_codecs() {
  static const std::vector<CodecEntry> table = parse_codec_table(kBuiltinCodecTable);
  return table;
}

std::vector<CodecEntry> parse_codec_table(std::string_view text) {
  std::vector<CodecEntry> out;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#') continue;
    std::vector<std::string> fields;
    std::istringstream row(line);
    std::string field;
    while (std::getline(row, field, '\t')) fields.push_back(field);
    if (fields.size() >= 3 && fields[0] == "name" && fields[1] == "ie") continue;
    if (fields.size() < 3) throw ParseError(line_no, "codec row needs name, ie and bpl");
    CodecEntry e;
    e.name = fields[0];
    try {
      std::size_t used = 0;
      e.ie = std::stod(fields[1], &used);
      if (used != fields[1].size()) throw std::invalid_argument("trailing");
      e.bpl = std::stod(fields[2], &used);
      if (used != fields[2].size()) throw std::invalid_argument("trailing");
    } catch (const std::exception&) {
      throw ParseError(line_no, "codec ie/bpl are not numbers");
    }
    e.source = fields.size() > 3 ? fields[3] : std::string();
    ImpairmentConfig probe;
    probe.ie = e.ie;
    probe.bpl = e.bpl;
    try {
      probe.validate();
    } catch (const ConfigError& err) {
      throw ParseError(line_no, err.what());
    }
    out.push_back(std::move(e));
  }
  return out;
}

std::optional<CodecEntry> find_codec(const std::vector<CodecEntry>& table, std::string_view name) {
  auto it = std::find_if(table.begin(), table.end(), [&](const CodecEntry& e) { return e.name == name; });
  if (it == table.end()) return std::nullopt;
  return *it;
}

}  // namespace qplayout
