#include "qplayout/trace_io.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "qplayout/error.hpp"
#include "qplayout/rng.hpp"

namespace qplayout {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const std::size_t pos = s.find(sep, start);
    if (pos == std::string_view::npos) {
      out.push_back(trim(s.substr(start)));
      return out;
    }
    out.push_back(trim(s.substr(start, pos - start)));
    start = pos + 1;
  }
}

template <typename T>
bool parse_number(std::string_view s, T& out) {
  if (s.empty()) return false;
  if (s.front() == '+') s.remove_prefix(1);
  const auto res = std::from_chars(s.data(), s.data() + s.size(), out);
  return res.ec == std::errc() && res.ptr == s.data() + s.size();
}

double parse_time(std::string_view field, std::size_t line, const char* name) {
  double v = 0.0;
  if (!parse_number(field, v) || !std::isfinite(v))
    throw ParseError(line, std::string(name) + " is not a number: '" + std::string(field) + "'");
  return v;
}

double round_ms(double v) { return std::round(v * 1000.0) / 1000.0; }

}  // namespace

bool Trace::has_spurt_ids() const {
  for (const auto& p : packets)
    if (p.spurt_id) return true;
  return false;
}

std::string format_ms(double value) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.3f", value);
  std::string s(buf);
  while (s.back() == '0') s.pop_back();
  if (s.back() == '.') s.pop_back();
  if (s == "-0") s = "0";
  return s;
}

Trace parse_trace(std::string_view text) {
  Trace trace;
  bool header_seen = false;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (trim(line).empty()) continue;
    if (line.front() == '#') {
      line.remove_prefix(1);
      if (!line.empty() && line.front() == ' ') line.remove_prefix(1);
      trace.metadata.emplace_back(line);
      continue;
    }
    const auto fields = split(line, ',');
    if (!header_seen && trace.packets.empty() && fields[0] == "seq") {
      if (fields.size() < 3 || fields.size() > 4 || fields[1] != "send_ms" || fields[2] != "recv_ms" ||
          (fields.size() == 4 && fields[3] != "spurt"))
        throw ParseError(line_no, "header must be seq,send_ms,recv_ms[,spurt]");
      header_seen = true;
      continue;
    }
    if (fields.size() < 3 || fields.size() > 4)
      throw ParseError(line_no, "expected 3 or 4 comma-separated fields");

    PacketRecord rec;
    if (!parse_number(fields[0], rec.seq))
      throw ParseError(line_no, "seq is not a non-negative integer: '" + std::string(fields[0]) + "'");
    rec.send_ms = parse_time(fields[1], line_no, "send_ms");
    if (!fields[2].empty()) rec.recv_ms = parse_time(fields[2], line_no, "recv_ms");
    if (fields.size() == 4 && !fields[3].empty()) {
      std::uint64_t id = 0;
      if (!parse_number(fields[3], id))
        throw ParseError(line_no, "spurt is not a non-negative integer: '" + std::string(fields[3]) + "'");
      rec.spurt_id = id;
    }

    if (!trace.packets.empty()) {
      const auto& prev = trace.packets.back();
      if (rec.seq == prev.seq)
        throw ValidationError("line " + std::to_string(line_no) + ": duplicate seq " + std::to_string(rec.seq));
      if (rec.seq < prev.seq)
        throw ValidationError("line " + std::to_string(line_no) + ": seq decreases to " + std::to_string(rec.seq));
      if (rec.send_ms < prev.send_ms)
        throw ValidationError("line " + std::to_string(line_no) + ": send_ms decreases");
    }
    if (rec.recv_ms && *rec.recv_ms < rec.send_ms)
      throw ValidationError("line " + std::to_string(line_no) + ": negative delay (recv_ms < send_ms)");
    trace.packets.push_back(rec);
  }
  return trace;
}

std::string write_trace(const Trace& trace) {
  std::string out;
  for (const auto& m : trace.metadata) {
    out += "# ";
    out += m;
    out += '\n';
  }
  const bool spurts = trace.has_spurt_ids();
  out += spurts ? "seq,send_ms,recv_ms,spurt\n" : "seq,send_ms,recv_ms\n";
  for (const auto& p : trace.packets) {
    out += std::to_string(p.seq);
    out += ',';
    out += format_ms(p.send_ms);
    out += ',';
    if (p.recv_ms) out += format_ms(*p.recv_ms);
    if (spurts) {
      out += ',';
      if (p.spurt_id) out += std::to_string(*p.spurt_id);
    }
    out += '\n';
  }
  return out;
}

Trace load_trace(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open trace file " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_trace(buf.str());
}

void save_trace(const Trace& trace, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write trace file " + path.string());
  out << write_trace(trace);
  if (!out) throw IoError("write failed for " + path.string());
}

void TailSpec::validate() const {
  switch (kind) {
    case TailKind::Pareto:
      if (!(a > 0.0 && b > 0.0)) throw ConfigError("pareto tail needs scale > 0 and k > 0");
      break;
    case TailKind::LogNormal:
      if (!std::isfinite(a) || !(b > 0.0)) throw ConfigError("lognormal tail needs finite mu and sigma > 0");
      break;
    case TailKind::Exponential:
      if (!(a > 0.0)) throw ConfigError("exponential tail needs lambda > 0");
      break;
  }
  if (!std::isfinite(a) || !std::isfinite(b)) throw ConfigError("tail parameters must be finite");
}

TailSpec TailSpec::parse(std::string_view text) {
  const auto colon = text.find(':');
  if (colon == std::string_view::npos) throw ConfigError("tail must look like name:a[,b]");
  const auto name = text.substr(0, colon);
  const auto params = split(text.substr(colon + 1), ',');
  TailSpec spec;
  std::size_t want = 2;
  if (name == "pareto") spec.kind = TailKind::Pareto;
  else if (name == "lognormal") spec.kind = TailKind::LogNormal;
  else if (name == "exponential") {
    spec.kind = TailKind::Exponential;
    want = 1;
  } else {
    throw ConfigError("unknown tail distribution '" + std::string(name) + "'");
  }
  if (params.size() != want) throw ConfigError("tail '" + std::string(name) + "' takes " + std::to_string(want) + " parameter(s)");
  if (!parse_number(params[0], spec.a)) throw ConfigError("tail parameter is not a number");
  spec.b = 0.0;
  if (want == 2 && !parse_number(params[1], spec.b)) throw ConfigError("tail parameter is not a number");
  spec.validate();
  return spec;
}

std::string TailSpec::to_string() const {
  std::ostringstream os;
  os.precision(17);
  switch (kind) {
    case TailKind::Pareto: os << "pareto:" << a << ',' << b; break;
    case TailKind::LogNormal: os << "lognormal:" << a << ',' << b; break;
    case TailKind::Exponential: os << "exponential:" << a; break;
  }
  return os.str();
}

void SpikeSpec::validate() const {
  if (!(rate >= 0.0 && rate <= 1.0)) throw ConfigError("spike rate must lie in [0, 1]");
  if (!(magnitude_ms >= 0.0) || !std::isfinite(magnitude_ms)) throw ConfigError("spike magnitude must be non-negative");
  if (!(decay >= 0.0 && decay < 1.0)) throw ConfigError("spike decay must lie in [0, 1)");
}

void GenConfig::validate() const {
  if (n_packets < 1) throw ConfigError("n_packets must be at least 1");
  if (!(interval_ms > 0.0) || !std::isfinite(interval_ms)) throw ConfigError("interval_ms must be positive");
  if (!(base_delay_ms >= 0.0) || !std::isfinite(base_delay_ms)) throw ConfigError("base_delay_ms must be non-negative");
  tail.validate();
  try {
    loss.validate();
  } catch (const DomainError& e) {
    throw ConfigError(e.what());
  }
  if (spikes) spikes->validate();
}

namespace {

double draw_tail(const TailSpec& t, Rng& rng) {
  switch (t.kind) {
    case TailKind::Pareto: return t.a * std::pow(rng.uniform_open_low(), -1.0 / t.b);
    case TailKind::LogNormal: return std::exp(t.a + t.b * rng.normal());
    case TailKind::Exponential: return rng.exponential(1.0 / t.a);
  }
  return 0.0;
}

}  // namespace

Trace generate_trace(const GenConfig& cfg) {
  cfg.validate();
  Rng rng(cfg.seed);
  Trace trace;
  std::ostringstream meta;
  meta.precision(17);
  trace.metadata.push_back("generator: qplayout synthetic probe trace");
  trace.metadata.push_back(std::string("rng: ") + Rng::kAlgorithm + " seed=" + std::to_string(cfg.seed));
  meta << "config: n=" << cfg.n_packets << " interval_ms=" << cfg.interval_ms << " base_delay_ms=" << cfg.base_delay_ms
       << " tail=" << cfg.tail.to_string() << " loss=" << cfg.loss.p << ',' << cfg.loss.q;
  if (cfg.spikes)
    meta << " spikes=" << cfg.spikes->rate << ',' << cfg.spikes->magnitude_ms << ',' << cfg.spikes->decay;
  trace.metadata.push_back(meta.str());

  trace.packets.reserve(cfg.n_packets);
  bool lost = false;
  double spike_excess = 0.0;
  for (std::size_t i = 0; i < cfg.n_packets; ++i) {
    const double u_loss = rng.uniform();
    if (i == 0) lost = u_loss < cfg.loss.p / (cfg.loss.p + cfg.loss.q);
    else lost = lost ? !(u_loss < cfg.loss.q) : u_loss < cfg.loss.p;

    if (cfg.spikes && rng.uniform() < cfg.spikes->rate) spike_excess += cfg.spikes->magnitude_ms;
    const double delay = cfg.base_delay_ms + draw_tail(cfg.tail, rng) + spike_excess;
    if (cfg.spikes) spike_excess *= cfg.spikes->decay;

    PacketRecord rec;
    rec.seq = i + 1;
    rec.send_ms = round_ms(static_cast<double>(i) * cfg.interval_ms);
    if (!lost) rec.recv_ms = round_ms(rec.send_ms + std::max(round_ms(delay), 0.001));
    trace.packets.push_back(rec);
  }
  return trace;
}

}  // namespace qplayout
