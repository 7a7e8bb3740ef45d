#include "qplayout/qplayout.h"

#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <new>
#include <sstream>
#include <string>

#include "qplayout/delay_model.hpp"
#include "qplayout/error.hpp"
#include "qplayout/playout_algorithms.hpp"
#include "qplayout/playout_sim.hpp"
#include "qplayout/quality_model.hpp"
#include "qplayout/trace_io.hpp"

struct qp_trace {
  qplayout::Trace trace;
};

struct qp_run_result {
  qplayout::RunResult run;
};

struct qp_comparison {
  std::vector<qp_run_result> rows;
};

namespace {

thread_local std::string g_last_error;

qp_status fail(qp_status status, std::string message) {
  g_last_error = std::move(message);
  return status;
}

// Runs fn, translating exceptions into status codes.
template <typename Fn>
qp_status guarded(Fn&& fn) {
  g_last_error.clear();
  try {
    fn();
    return QP_OK;
  } catch (const qplayout::Error& e) {
    return fail(static_cast<qp_status>(e.code()), e.what());
  } catch (const std::bad_alloc&) {
    return fail(QP_ERR_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return fail(QP_ERR_INTERNAL, e.what());
  } catch (...) {
    return fail(QP_ERR_INTERNAL, "unknown error");
  }
}

#define QP_REQUIRE(ptr)                                                   \
  do {                                                                    \
    if ((ptr) == nullptr) return fail(QP_ERR_INVALID_ARGUMENT, #ptr " is null"); \
  } while (0)

qplayout::ImpairmentConfig to_cpp(const qp_impairment_config& c) {
  qplayout::ImpairmentConfig out;
  out.r0 = c.r0;
  out.ie = c.ie;
  out.bpl = c.bpl;
  out.idd_variant = c.idd_variant == QP_IDD_G107 ? qplayout::IddVariant::G107Full : qplayout::IddVariant::Simplified;
  out.floor_burst_ratio = c.floor_burst_ratio != 0;
  return out;
}

qp_impairment_config to_c(const qplayout::ImpairmentConfig& c) {
  return {c.r0, c.ie, c.bpl, c.idd_variant == qplayout::IddVariant::G107Full ? QP_IDD_G107 : QP_IDD_SIMPLIFIED,
          c.floor_burst_ratio ? 1 : 0};
}

qplayout::ParetoFit to_cpp(const qp_pareto_fit& f) {
  return {f.scale_ms, f.shape, f.n_tail, f.shape_capped != 0};
}

qp_pareto_fit to_c(const qplayout::ParetoFit& f) { return {f.scale, f.shape, f.n_tail, f.shape_capped ? 1 : 0}; }

qplayout::OptimizerInputs to_cpp(const qp_optimizer_inputs& in) {
  qplayout::OptimizerInputs out;
  out.fit = to_cpp(in.fit);
  out.rho_n = in.rho_n;
  out.burst_r = in.burst_r;
  out.cfg = to_cpp(in.impairment);
  return out;
}

qplayout::GridSpec to_cpp(const qp_grid_spec& g) { return {g.lo_ms, g.hi_ms, g.points, g.log_spacing != 0}; }

qp_grid_spec to_c(const qplayout::GridSpec& g) { return {g.lo_ms, g.hi_ms, g.points, g.log_spacing ? 1 : 0}; }

qplayout::Decider to_cpp(const qp_decider& d) {
  using K = qplayout::DeciderKind;
  qplayout::Decider out;
  switch (d.kind) {
    case QP_DECIDER_PROPOSED: out.kind = K::Proposed; break;
    case QP_DECIDER_GRID_SEARCH: out.kind = K::GridSearch; break;
    case QP_DECIDER_EXP_AVG: out.kind = K::ExpAvg; break;
    case QP_DECIDER_FAST_EXP_AVG: out.kind = K::FastExpAvg; break;
    case QP_DECIDER_MIN_DELAY: out.kind = K::MinDelay; break;
    case QP_DECIDER_SPIKE_DETECT: out.kind = K::SpikeDetect; break;
    case QP_DECIDER_FIXED:
      if (!(d.fixed_pd_ms > 0.0)) throw qplayout::ConfigError("fixed decider needs a positive delay");
      out.kind = K::Fixed;
      out.fixed_pd_ms = d.fixed_pd_ms;
      break;
    default: throw qplayout::ConfigError("unknown decider kind");
  }
  return out;
}

qp_decider to_c(const qplayout::Decider& d) {
  using K = qplayout::DeciderKind;
  qp_decider out{QP_DECIDER_PROPOSED, d.fixed_pd_ms};
  switch (d.kind) {
    case K::Proposed: out.kind = QP_DECIDER_PROPOSED; break;
    case K::GridSearch: out.kind = QP_DECIDER_GRID_SEARCH; break;
    case K::ExpAvg: out.kind = QP_DECIDER_EXP_AVG; break;
    case K::FastExpAvg: out.kind = QP_DECIDER_FAST_EXP_AVG; break;
    case K::MinDelay: out.kind = QP_DECIDER_MIN_DELAY; break;
    case K::SpikeDetect: out.kind = QP_DECIDER_SPIKE_DETECT; break;
    case K::Fixed: out.kind = QP_DECIDER_FIXED; break;
  }
  return out;
}

qplayout::SimConfig to_cpp(const qp_sim_config& c) {
  qplayout::SimConfig out;
  out.window = c.window;
  out.frame_interval_ms = c.frame_interval_ms;
  out.impairment = to_cpp(c.impairment);
  switch (c.segmentation.kind) {
    case QP_SEGMENT_EXPLICIT: out.segmentation = qplayout::ExplicitColumn{}; break;
    case QP_SEGMENT_GAP: out.segmentation = qplayout::GapThreshold{c.segmentation.gap_ms}; break;
    case QP_SEGMENT_ONOFF:
      out.segmentation =
          qplayout::OnOffModel{c.segmentation.seed, c.segmentation.mean_on_ms, c.segmentation.mean_off_ms};
      break;
    default: throw qplayout::ConfigError("unknown segmentation kind");
  }
  out.grid = to_cpp(c.grid);
  out.min_talkspurt_ms = c.min_talkspurt_ms;
  out.delay_offset_ms = c.delay_offset_ms;
  return out;
}

qp_distribution_fit to_c(const qplayout::DistributionFit& f) { return {f.param1, f.param2, f.ks_statistic}; }

const char* static_name(qplayout::Distribution d) {
  switch (d) {
    case qplayout::Distribution::Pareto: return "pareto";
    case qplayout::Distribution::Weibull: return "weibull";
    case qplayout::Distribution::LogNormal: return "lognormal";
    case qplayout::Distribution::Exponential: return "exponential";
  }
  return "unknown";
}

}  // namespace

extern "C" {

const char* qp_version(void) { return "1.0.0"; }

const char* qp_status_name(qp_status status) {
  switch (status) {
    case QP_OK: return "ok";
    case QP_ERR_INVALID_ARGUMENT: return "invalid argument";
    case QP_ERR_DOMAIN: return "domain error";
    case QP_ERR_INSUFFICIENT_DATA: return "insufficient data";
    case QP_ERR_DEGENERATE: return "degenerate input";
    case QP_ERR_PARSE: return "parse error";
    case QP_ERR_VALIDATION: return "validation error";
    case QP_ERR_CONFIG: return "configuration error";
    case QP_ERR_IO: return "i/o error";
    case QP_ERR_INTERNAL: return "internal error";
  }
  return "unknown status";
}

const char* qp_last_error(void) { return g_last_error.c_str(); }

qp_impairment_config qp_impairment_default(void) { return to_c(qplayout::ImpairmentConfig{}); }

qp_status qp_codec_apply(const char* name, const char* table_path, qp_impairment_config* cfg) {
  QP_REQUIRE(name);
  QP_REQUIRE(cfg);
  return guarded([&] {
    std::vector<qplayout::CodecEntry> table;
    if (table_path) {
      std::ifstream in(table_path, std::ios::binary);
      if (!in) throw qplayout::IoError(std::string("cannot open codec table ") + table_path);
      std::ostringstream buf;
      buf << in.rdbuf();
      table = qplayout::parse_codec_table(buf.str());
    } else {
      table = qplayout::builtin_codecs();
    }
    const auto entry = qplayout::find_codec(table, name);
    if (!entry) {
      std::string names;
      for (const auto& e : table) names += (names.empty() ? "" : ", ") + e.name;
      throw qplayout::ConfigError(std::string("unknown codec '") + name + "'; known: " + names);
    }
    cfg->ie = entry->ie;
    cfg->bpl = entry->bpl;
  });
}

const char* qp_codec_builtin_table(void) {
  static const std::string text = [] {
    std::ostringstream os;
    for (const auto& e : qplayout::builtin_codecs()) os << e.name << '\t' << e.ie << '\t' << e.bpl << '\t' << e.source << '\n';
    return os.str();
  }();
  return text.c_str();
}

qp_status qp_idd_simplified(double pd_ms, double* out) {
  QP_REQUIRE(out);
  return guarded([&] { *out = qplayout::idd_simplified(pd_ms); });
}

qp_status qp_idd_g107(double pd_ms, double* out) {
  QP_REQUIRE(out);
  return guarded([&] { *out = qplayout::idd_g107(pd_ms); });
}

qp_status qp_burst_ratio(double p, double q, double* out) {
  QP_REQUIRE(out);
  return guarded([&] { *out = qplayout::burst_ratio({p, q}); });
}

qp_status qp_ie_eff(double loss_pct, double burst_r, const qp_impairment_config* cfg, double* out) {
  QP_REQUIRE(cfg);
  QP_REQUIRE(out);
  return guarded([&] {
    const auto c = to_cpp(*cfg);
    c.validate();
    *out = qplayout::ie_eff(loss_pct, burst_r, c);
  });
}

qp_status qp_r_factor(double pd_ms, double loss_pct, double burst_r, const qp_impairment_config* cfg, double* out) {
  QP_REQUIRE(cfg);
  QP_REQUIRE(out);
  return guarded([&] {
    const auto c = to_cpp(*cfg);
    c.validate();
    *out = qplayout::r_factor(pd_ms, loss_pct, burst_r, c);
  });
}

double qp_r_to_mos(double r) { return qplayout::r_to_mos(r); }

qp_gen_config qp_gen_config_default(void) {
  const qplayout::GenConfig d;
  return {d.seed, d.n_packets, d.interval_ms, d.base_delay_ms, QP_TAIL_PARETO, d.tail.a, d.tail.b,
          d.loss.p, d.loss.q, 0, 0.0, 0.0, 0.9};
}

qp_status qp_gen_config_set_tail(qp_gen_config* cfg, const char* spec) {
  QP_REQUIRE(cfg);
  QP_REQUIRE(spec);
  return guarded([&] {
    const auto t = qplayout::TailSpec::parse(spec);
    cfg->tail = t.kind == qplayout::TailKind::Pareto      ? QP_TAIL_PARETO
                : t.kind == qplayout::TailKind::LogNormal ? QP_TAIL_LOGNORMAL
                                                          : QP_TAIL_EXPONENTIAL;
    cfg->tail_a = t.a;
    cfg->tail_b = t.b;
  });
}

qp_status qp_trace_parse(const char* text, size_t len, qp_trace** out) {
  QP_REQUIRE(out);
  if (text == nullptr && len != 0) return fail(QP_ERR_INVALID_ARGUMENT, "text is null");
  return guarded([&] { *out = new qp_trace{qplayout::parse_trace(std::string_view(text ? text : "", len))}; });
}

qp_status qp_trace_load(const char* path, qp_trace** out) {
  QP_REQUIRE(path);
  QP_REQUIRE(out);
  return guarded([&] { *out = new qp_trace{qplayout::load_trace(path)}; });
}

qp_status qp_trace_generate(const qp_gen_config* cfg, qp_trace** out) {
  QP_REQUIRE(cfg);
  QP_REQUIRE(out);
  return guarded([&] {
    qplayout::GenConfig g;
    g.seed = cfg->seed;
    g.n_packets = cfg->n_packets;
    g.interval_ms = cfg->interval_ms;
    g.base_delay_ms = cfg->base_delay_ms;
    switch (cfg->tail) {
      case QP_TAIL_PARETO: g.tail.kind = qplayout::TailKind::Pareto; break;
      case QP_TAIL_LOGNORMAL: g.tail.kind = qplayout::TailKind::LogNormal; break;
      case QP_TAIL_EXPONENTIAL: g.tail.kind = qplayout::TailKind::Exponential; break;
      default: throw qplayout::ConfigError("unknown tail kind");
    }
    g.tail.a = cfg->tail_a;
    g.tail.b = cfg->tail_b;
    g.loss = {cfg->loss_p, cfg->loss_q};
    if (cfg->spikes) g.spikes = qplayout::SpikeSpec{cfg->spike_rate, cfg->spike_magnitude_ms, cfg->spike_decay};
    *out = new qp_trace{qplayout::generate_trace(g)};
  });
}

qp_status qp_trace_write(const qp_trace* trace, char** out, size_t* len) {
  QP_REQUIRE(trace);
  QP_REQUIRE(out);
  return guarded([&] {
    const std::string text = qplayout::write_trace(trace->trace);
    char* buf = new char[text.size() + 1];
    std::memcpy(buf, text.c_str(), text.size() + 1);
    *out = buf;
    if (len) *len = text.size();
  });
}

qp_status qp_trace_save(const qp_trace* trace, const char* path) {
  QP_REQUIRE(trace);
  QP_REQUIRE(path);
  return guarded([&] { qplayout::save_trace(trace->trace, path); });
}

size_t qp_trace_size(const qp_trace* trace) { return trace ? trace->trace.size() : 0; }

qp_status qp_trace_packet(const qp_trace* trace, size_t index, qp_packet* out) {
  QP_REQUIRE(trace);
  QP_REQUIRE(out);
  if (index >= trace->trace.size()) return fail(QP_ERR_INVALID_ARGUMENT, "packet index out of range");
  const auto& p = trace->trace.packets[index];
  *out = {p.seq, p.send_ms, p.recv_ms.value_or(0.0), p.received() ? 1 : 0, p.spurt_id ? 1 : 0,
          p.spurt_id.value_or(0)};
  return QP_OK;
}

void qp_trace_free(qp_trace* trace) { delete trace; }

void qp_string_free(char* s) { delete[] s; }

qp_status qp_pareto_ccdf(const qp_pareto_fit* fit, double pd_ms, double* out) {
  QP_REQUIRE(fit);
  QP_REQUIRE(out);
  return guarded([&] { *out = qplayout::pareto_ccdf(to_cpp(*fit), pd_ms); });
}

qp_status qp_predicted_loss(const qp_pareto_fit* fit, double rho_n, double pd_ms, double* out) {
  QP_REQUIRE(fit);
  QP_REQUIRE(out);
  return guarded([&] { *out = qplayout::predicted_loss(to_cpp(*fit), rho_n, pd_ms); });
}

qp_status qp_fit_trace(const qp_trace* trace, size_t window, qp_fit_scope scope, qp_fit_report* out) {
  QP_REQUIRE(trace);
  QP_REQUIRE(out);
  return guarded([&] {
    const auto& pkts = trace->trace.packets;
    if (pkts.empty()) throw qplayout::InsufficientDataError("trace has no packets");
    const std::size_t w = window == 0 ? pkts.size() : window;
    qplayout::DelayWindow win(w);
    for (const auto& p : pkts) {
      if (p.received()) win.push_received(std::max(p.delay_ms(), 0.001));
      else win.push_lost();
    }
    if (win.received_count() == 0) throw qplayout::InsufficientDataError("window holds no received packets");

    qp_fit_report r{};
    r.n_packets = win.size();
    r.n_received = win.received_count();
    r.median_ms = qplayout::window_median(win);
    try {
      r.pareto = to_c(qplayout::fit_pareto_tail(win));
      r.pareto_ok = 1;
    } catch (const qplayout::InsufficientDataError&) {
    } catch (const qplayout::DegenerateError&) {
    }
    r.rho_n = win.network_loss();
    qplayout::GilbertEstimate g;
    if (win.size() >= 2) g = qplayout::estimate_gilbert(win.loss_flags());
    r.gilbert_p = g.params.p;
    r.gilbert_q = g.params.q;
    r.burst_r = g.burst_ratio();
    r.best_fit = "none";
    try {
      const auto fits =
          qplayout::fit_alternatives(win, scope == QP_FIT_FULL ? qplayout::FitScope::Full : qplayout::FitScope::Tail);
      r.pareto_alt = to_c(fits[0]);
      r.weibull = to_c(fits[1]);
      r.lognormal = to_c(fits[2]);
      r.exponential = to_c(fits[3]);
      r.alternatives_ok = 1;
      const auto* best = &fits[0];
      for (const auto& f : fits)
        if (f.ks_statistic < best->ks_statistic) best = &f;
      r.best_fit = static_name(best->distribution);
    } catch (const qplayout::InsufficientDataError&) {
    } catch (const qplayout::DegenerateError&) {
    }
    *out = r;
  });
}

qp_grid_spec qp_grid_default(void) { return to_c(qplayout::GridSpec{}); }

qp_status qp_objective(const qp_optimizer_inputs* in, double pd_ms, double* out) {
  QP_REQUIRE(in);
  QP_REQUIRE(out);
  return guarded([&] {
    const auto x = to_cpp(*in);
    x.validate();
    *out = qplayout::objective(pd_ms, x);
  });
}

qp_status qp_closed_form_playout(const qp_optimizer_inputs* in, qp_closed_form* out) {
  QP_REQUIRE(in);
  QP_REQUIRE(out);
  return guarded([&] {
    const auto s = qplayout::solve_closed_form(to_cpp(*in));
    *out = {s.pd_ms, s.interior ? 1 : 0, s.stationary_pd_ms};
  });
}

qp_status qp_closed_form_playout_as_printed(const qp_optimizer_inputs* in, double* out) {
  QP_REQUIRE(in);
  QP_REQUIRE(out);
  return guarded([&] { *out = qplayout::closed_form_playout_as_printed(to_cpp(*in)); });
}

qp_status qp_grid_search_playout(const qp_optimizer_inputs* in, const qp_grid_spec* grid, double* out) {
  QP_REQUIRE(in);
  QP_REQUIRE(grid);
  QP_REQUIRE(out);
  return guarded([&] { *out = qplayout::grid_search_playout(to_cpp(*in), to_cpp(*grid)); });
}

qp_status qp_decider_parse(const char* name, qp_decider* out) {
  QP_REQUIRE(name);
  QP_REQUIRE(out);
  return guarded([&] { *out = to_c(qplayout::Decider::parse(name)); });
}

qp_status qp_decider_name(const qp_decider* d, char* buf, size_t cap) {
  QP_REQUIRE(d);
  QP_REQUIRE(buf);
  if (cap == 0) return fail(QP_ERR_INVALID_ARGUMENT, "buffer capacity is zero");
  return guarded([&] {
    const std::string n = to_cpp(*d).name();
    const std::size_t k = std::min(n.size(), cap - 1);
    std::memcpy(buf, n.data(), k);
    buf[k] = '\0';
  });
}

const char* qp_decider_names(void) {
  static const std::string names = [] {
    std::string s;
    for (auto n : qplayout::decider_names()) s += (s.empty() ? "" : ",") + std::string(n);
    return s;
  }();
  return names.c_str();
}

qp_sim_config qp_sim_config_default(void) {
  const qplayout::SimConfig d;
  const qplayout::OnOffModel onoff;
  qp_sim_config c{};
  c.window = d.window;
  c.frame_interval_ms = d.frame_interval_ms;
  c.impairment = to_c(d.impairment);
  c.segmentation = {QP_SEGMENT_EXPLICIT, qplayout::GapThreshold{}.threshold_ms, onoff.seed, onoff.mean_on_ms,
                    onoff.mean_off_ms};
  c.grid = to_c(d.grid);
  c.min_talkspurt_ms = d.min_talkspurt_ms;
  c.delay_offset_ms = d.delay_offset_ms;
  return c;
}

qp_status qp_simulate(const qp_trace* trace, const qp_decider* decider, const qp_sim_config* cfg, qp_run_result** out) {
  QP_REQUIRE(trace);
  QP_REQUIRE(decider);
  QP_REQUIRE(cfg);
  QP_REQUIRE(out);
  return guarded([&] { *out = new qp_run_result{qplayout::run_simulation(trace->trace, to_cpp(*decider), to_cpp(*cfg))}; });
}

qp_status qp_run_totals_get(const qp_run_result* run, qp_run_totals* out) {
  QP_REQUIRE(run);
  QP_REQUIRE(out);
  const auto& t = run->run.totals;
  *out = {t.talkspurts,       t.packets,          t.network_lost,  t.late_lost,  t.received_on_time,
          t.loss_pct,         t.network_loss_pct, t.late_loss_pct, t.mean_pd_ms, t.e_mos_avg,
          t.measured_burst_r, t.bootstrap_decisions};
  return QP_OK;
}

size_t qp_run_talkspurt_count(const qp_run_result* run) { return run ? run->run.per_talkspurt.size() : 0; }

qp_status qp_run_talkspurt(const qp_run_result* run, size_t index, qp_talkspurt_result* out) {
  QP_REQUIRE(run);
  QP_REQUIRE(out);
  if (index >= run->run.per_talkspurt.size()) return fail(QP_ERR_INVALID_ARGUMENT, "talkspurt index out of range");
  const auto& t = run->run.per_talkspurt[index];
  *out = {t.id,  t.first_seq, t.packets, t.pd_ms, t.network_lost, t.late_lost, t.received_on_time,
          t.loss_pct, t.burst_r, t.r, t.mos, t.bootstrap ? 1 : 0};
  return QP_OK;
}

void qp_run_free(qp_run_result* run) { delete run; }

qp_status qp_compare(const qp_trace* trace, const qp_decider* deciders, size_t count, const qp_sim_config* cfg,
                     qp_comparison** out) {
  QP_REQUIRE(trace);
  QP_REQUIRE(deciders);
  QP_REQUIRE(cfg);
  QP_REQUIRE(out);
  return guarded([&] {
    std::vector<qplayout::Decider> ds;
    ds.reserve(count);
    for (size_t i = 0; i < count; ++i) ds.push_back(to_cpp(deciders[i]));
    auto table = qplayout::compare(trace->trace, ds, to_cpp(*cfg));
    auto* c = new qp_comparison;
    c->rows.reserve(table.rows.size());
    for (auto& r : table.rows) c->rows.push_back(qp_run_result{std::move(r)});
    *out = c;
  });
}

size_t qp_comparison_rows(const qp_comparison* table) { return table ? table->rows.size() : 0; }

const qp_run_result* qp_comparison_row(const qp_comparison* table, size_t index) {
  if (!table || index >= table->rows.size()) return nullptr;
  return &table->rows[index];
}

void qp_comparison_free(qp_comparison* table) { delete table; }

qp_status qp_timing_benchmark(const qp_decider* decider, const qp_optimizer_inputs* in, const qp_grid_spec* grid,
                              size_t repetitions, qp_timing* out) {
  QP_REQUIRE(decider);
  QP_REQUIRE(in);
  QP_REQUIRE(grid);
  QP_REQUIRE(out);
  return guarded([&] {
    const auto t = qplayout::timing_benchmark(to_cpp(*decider), to_cpp(*in), to_cpp(*grid), repetitions);
    *out = {t.repetitions, t.total_ns, t.per_call_ns};
  });
}

}  // extern "C"
