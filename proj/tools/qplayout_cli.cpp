// qplayout command-line front end. Talks to the library only through the C API.

#include <CLI11.hpp>
#include <json.hpp>

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "qplayout/qplayout.h"

namespace {

enum Exit { kOk = 0, kUsage = 1, kData = 2, kStrict = 3 };

struct Failure {
  int code;
  std::string message;
};

int exit_code_for(qp_status s) {
  switch (s) {
    case QP_ERR_INVALID_ARGUMENT:
    case QP_ERR_CONFIG:
      return kUsage;
    default:
      return kData;
  }
}

void check(qp_status s) {
  if (s != QP_OK) throw Failure{exit_code_for(s), qp_last_error()};
}

struct TraceDeleter {
  void operator()(qp_trace* t) const { qp_trace_free(t); }
};
struct RunDeleter {
  void operator()(qp_run_result* r) const { qp_run_free(r); }
};
struct ComparisonDeleter {
  void operator()(qp_comparison* c) const { qp_comparison_free(c); }
};
using TracePtr = std::unique_ptr<qp_trace, TraceDeleter>;
using ComparisonPtr = std::unique_ptr<qp_comparison, ComparisonDeleter>;

// ---- output -------------------------------------------------------------

enum class Format { Tsv, Csv, JsonLines };

using Cell = std::variant<std::string, double, long long>;

struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<Cell>> rows;
};

std::string number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string cell_text(const Cell& c) {
  if (auto s = std::get_if<std::string>(&c)) return *s;
  if (auto d = std::get_if<double>(&c)) return number(*d);
  return std::to_string(std::get<long long>(c));
}

std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out += '"';
    out += ch;
  }
  return out + "\"";
}

void emit(const Table& t, Format f, std::ostream& os) {
  if (f == Format::JsonLines) {
    for (const auto& row : t.rows) {
      nlohmann::ordered_json j;
      for (std::size_t i = 0; i < t.columns.size(); ++i) {
        const auto& c = row[i];
        if (auto s = std::get_if<std::string>(&c)) j[t.columns[i]] = *s;
        else if (auto d = std::get_if<double>(&c)) j[t.columns[i]] = std::isfinite(*d) ? nlohmann::ordered_json(*d) : nullptr;
        else j[t.columns[i]] = std::get<long long>(c);
      }
      os << j.dump() << '\n';
    }
    return;
  }
  const char sep = f == Format::Tsv ? '\t' : ',';
  auto line = [&](auto&& texts) {
    for (std::size_t i = 0; i < texts.size(); ++i) {
      if (i) os << sep;
      os << (f == Format::Csv ? csv_escape(texts[i]) : texts[i]);
    }
    os << '\n';
  };
  line(t.columns);
  for (const auto& row : t.rows) {
    std::vector<std::string> texts;
    for (const auto& c : row) texts.push_back(cell_text(c));
    line(texts);
  }
}

struct Globals {
  std::string format = "tsv";
  std::string output;
  bool strict = false;
  bool show_config = false;

  Format fmt() const {
    if (format == "csv") return Format::Csv;
    if (format == "json-lines") return Format::JsonLines;
    return Format::Tsv;
  }
};

Globals g;
std::vector<std::string> warnings;

void warn(const std::string& msg) {
  std::cerr << "warning: " << msg << '\n';
  warnings.push_back(msg);
}

void write_table(const Table& t) {
  if (g.output.empty()) {
    emit(t, g.fmt(), std::cout);
    return;
  }
  std::ofstream out(g.output, std::ios::binary);
  if (!out) throw Failure{kData, "cannot write " + g.output};
  emit(t, g.fmt(), out);
}

void show_config(const std::vector<std::pair<std::string, std::string>>& items) {
  if (!g.show_config) return;
  for (const auto& [k, v] : items) std::cerr << "# " << k << " = " << v << '\n';
}

// ---- shared option groups -------------------------------------------------

struct ImpairmentOpts {
  std::string codec = "g729a";
  std::string codec_table;
  std::optional<double> ie, bpl, r0;
  std::string idd = "simplified";

  void add(CLI::App* app) {
    app->add_option("--codec", codec, "codec preset (ie, bpl)")->capture_default_str();
    app->add_option("--codec-table", codec_table, "TSV codec table to read presets from");
    app->add_option("--ie", ie, "override equipment impairment Ie");
    app->add_option("--bpl", bpl, "override packet-loss robustness Bpl");
    app->add_option("--r0", r0, "override basic signal-to-noise R0");
    app->add_option("--idd", idd, "delay impairment used for scoring")
        ->check(CLI::IsMember({"simplified", "g107"}))
        ->capture_default_str();
  }

  qp_impairment_config resolve() const {
    auto cfg = qp_impairment_default();
    check(qp_codec_apply(codec.c_str(), codec_table.empty() ? nullptr : codec_table.c_str(), &cfg));
    if (ie) cfg.ie = *ie;
    if (bpl) cfg.bpl = *bpl;
    if (r0) cfg.r0 = *r0;
    cfg.idd_variant = idd == "g107" ? QP_IDD_G107 : QP_IDD_SIMPLIFIED;
    return cfg;
  }
};

void describe(std::vector<std::pair<std::string, std::string>>& items, const qp_impairment_config& c,
              const std::string& codec) {
  items.push_back({"codec", codec});
  items.push_back({"r0", number(c.r0)});
  items.push_back({"ie", number(c.ie)});
  items.push_back({"bpl", number(c.bpl)});
  items.push_back({"idd", c.idd_variant == QP_IDD_G107 ? "g107" : "simplified"});
}

struct GridOpts {
  qp_grid_spec grid = qp_grid_default();
  bool linear = false;

  void add(CLI::App* app) {
    app->add_option("--grid-lo", grid.lo_ms, "grid search lower bound (ms)")->capture_default_str();
    app->add_option("--grid-hi", grid.hi_ms, "grid search upper bound (ms)")->capture_default_str();
    app->add_option("--grid-points", grid.points, "grid search point count")->capture_default_str();
    app->add_flag("--grid-linear", linear, "linear instead of logarithmic grid spacing");
  }
  qp_grid_spec resolve() const {
    auto out = grid;
    out.log_spacing = linear ? 0 : 1;
    return out;
  }
};

void describe(std::vector<std::pair<std::string, std::string>>& items, const qp_grid_spec& gs) {
  items.push_back({"grid_lo_ms", number(gs.lo_ms)});
  items.push_back({"grid_hi_ms", number(gs.hi_ms)});
  items.push_back({"grid_points", std::to_string(gs.points)});
  items.push_back({"grid_spacing", gs.log_spacing ? "log" : "linear"});
}

// Optimizer inputs given directly on the command line or fitted from a trace.
struct ModelOpts {
  std::string trace;
  std::size_t window = 500;
  std::optional<double> scale, k;
  double rho = 0.0;
  double burst = 1.0;

  void add(CLI::App* app) {
    app->add_option("--trace", trace, "fit the model parameters from this trace");
    app->add_option("--window", window, "packets in the estimation window (0 = whole trace)")->capture_default_str();
    app->add_option("--scale", scale, "Pareto scale (median delay, ms)");
    app->add_option("--k", k, "Pareto shape");
    app->add_option("--rho", rho, "network loss fraction")->capture_default_str();
    app->add_option("--burst", burst, "burst ratio")->capture_default_str();
  }
};

TracePtr load_trace(const std::string& path) {
  qp_trace* t = nullptr;
  check(qp_trace_load(path.c_str(), &t));
  TracePtr owned(t);
  if (qp_trace_size(t) == 0) throw Failure{kData, path + ": no packet records"};
  return owned;
}

qp_fit_report fit_report(const qp_trace* t, std::size_t window, qp_fit_scope scope) {
  qp_fit_report r{};
  check(qp_fit_trace(t, window, scope, &r));
  if (!r.pareto_ok) warn("Pareto tail fit failed (too few or identical delays)");
  else if (r.pareto.shape_capped) warn("Pareto shape hit its numeric cap");
  return r;
}

// Returns nullopt when the trace has no usable tail; the caller falls back to 150 ms.
std::optional<qp_optimizer_inputs> model_inputs(const ModelOpts& m, const qp_impairment_config& imp) {
  qp_optimizer_inputs in{};
  in.impairment = imp;
  if (!m.trace.empty()) {
    if (m.scale || m.k) throw Failure{kUsage, "--trace cannot be combined with --scale/--k"};
    const auto t = load_trace(m.trace);
    const auto r = fit_report(t.get(), m.window, QP_FIT_TAIL);
    if (!r.pareto_ok) return std::nullopt;
    in.fit = r.pareto;
    in.rho_n = r.rho_n;
    in.burst_r = r.burst_r;
    return in;
  }
  if (!m.scale || !m.k) throw Failure{kUsage, "give either --trace or both --scale and --k"};
  // no sample behind hand-given parameters; n_tail only has to be positive
  in.fit = {*m.scale, *m.k, 1, 0};
  in.rho_n = m.rho;
  in.burst_r = m.burst;
  return in;
}

void describe(std::vector<std::pair<std::string, std::string>>& items, const qp_optimizer_inputs& in) {
  items.push_back({"scale_ms", number(in.fit.scale_ms)});
  items.push_back({"k", number(in.fit.shape)});
  items.push_back({"rho_n", number(in.rho_n)});
  items.push_back({"burst_r", number(in.burst_r)});
}

// ---- subcommands --------------------------------------------------------

struct GenCmd {
  qp_gen_config cfg = qp_gen_config_default();
  std::string tail = "pareto:20,2";
  std::vector<double> loss;
  std::vector<double> spikes;

  void add(CLI::App& app) {
    auto* c = app.add_subcommand("gen", "generate a synthetic probe trace");
    c->add_option("--seed", cfg.seed, "random seed")->capture_default_str();
    c->add_option("--n", cfg.n_packets, "number of packets")->capture_default_str();
    c->add_option("--interval", cfg.interval_ms, "send interval (ms)")->capture_default_str();
    c->add_option("--base", cfg.base_delay_ms, "constant delay added to every packet (ms)")->capture_default_str();
    c->add_option("--tail", tail, "pareto:SCALE,K | lognormal:MU,SIGMA | exponential:LAMBDA")->capture_default_str();
    c->add_option("--loss", loss, "Gilbert loss parameters P,Q")->delimiter(',')->expected(2);
    c->add_option("--spikes", spikes, "spike process RATE,MAGNITUDE_MS,DECAY")->delimiter(',')->expected(3);
    c->callback([this] { run(); });
  }

  void run() {
    check(qp_gen_config_set_tail(&cfg, tail.c_str()));
    if (!loss.empty()) {
      cfg.loss_p = loss[0];
      cfg.loss_q = loss[1];
    }
    if (!spikes.empty()) {
      cfg.spikes = 1;
      cfg.spike_rate = spikes[0];
      cfg.spike_magnitude_ms = spikes[1];
      cfg.spike_decay = spikes[2];
    }
    show_config({{"seed", std::to_string(cfg.seed)},
                 {"n_packets", std::to_string(cfg.n_packets)},
                 {"interval_ms", number(cfg.interval_ms)},
                 {"base_delay_ms", number(cfg.base_delay_ms)},
                 {"tail", tail},
                 {"loss_p", number(cfg.loss_p)},
                 {"loss_q", number(cfg.loss_q)},
                 {"spikes", cfg.spikes ? number(cfg.spike_rate) + "," + number(cfg.spike_magnitude_ms) + "," +
                                             number(cfg.spike_decay)
                                       : "none"}});
    qp_trace* raw = nullptr;
    check(qp_trace_generate(&cfg, &raw));
    TracePtr t(raw);
    if (!g.output.empty()) {
      check(qp_trace_save(t.get(), g.output.c_str()));
      std::cerr << "wrote " << qp_trace_size(t.get()) << " packets to " << g.output << '\n';
      return;
    }
    char* text = nullptr;
    std::size_t len = 0;
    check(qp_trace_write(t.get(), &text, &len));
    std::cout.write(text, static_cast<std::streamsize>(len));
    qp_string_free(text);
  }
};

struct FitCmd {
  std::string trace;
  std::size_t window = 500;
  std::string scope = "tail";

  void add(CLI::App& app) {
    auto* c = app.add_subcommand("fit", "fit delay and loss models to a trace");
    c->add_option("trace", trace, "trace file")->required();
    c->add_option("--window", window, "most recent packets to fit (0 = whole trace)")->capture_default_str();
    c->add_option("--scope", scope, "samples used by the four-distribution comparison")
        ->check(CLI::IsMember({"tail", "full"}))
        ->capture_default_str();
    c->callback([this] { run(); });
  }

  void run() {
    show_config({{"trace", trace}, {"window", std::to_string(window)}, {"scope", scope}});
    const auto t = load_trace(trace);
    const auto r = fit_report(t.get(), window, scope == "full" ? QP_FIT_FULL : QP_FIT_TAIL);
    const double nan = std::nan("");
    Table out;
    out.columns = {"packets",         "received",       "median_ms",     "pareto_scale_ms", "pareto_k",
                   "rho_n",           "gilbert_p",      "gilbert_q",     "burst_r",         "best_fit",
                   "ks_pareto",       "ks_weibull",     "ks_lognormal",  "ks_exponential",  "weibull_lambda",
                   "weibull_k",       "lognormal_mu",   "lognormal_sigma", "exponential_lambda"};
    const bool alt = r.alternatives_ok != 0;
    auto a = [&](double v) { return alt ? v : nan; };
    out.rows.push_back({static_cast<long long>(r.n_packets), static_cast<long long>(r.n_received), r.median_ms,
                        r.pareto_ok ? r.pareto.scale_ms : nan, r.pareto_ok ? r.pareto.shape : nan, r.rho_n,
                        r.gilbert_p, r.gilbert_q, r.burst_r, std::string(alt ? r.best_fit : "none"),
                        a(r.pareto_alt.ks_statistic), a(r.weibull.ks_statistic), a(r.lognormal.ks_statistic),
                        a(r.exponential.ks_statistic), a(r.weibull.param1), a(r.weibull.param2),
                        a(r.lognormal.param1), a(r.lognormal.param2), a(r.exponential.param1)});
    if (!alt) warn("too few samples for the four-distribution comparison");
    write_table(out);
  }
};

struct OptimizeCmd {
  ModelOpts model;
  ImpairmentOpts imp;
  GridOpts grid;

  void add(CLI::App& app) {
    auto* c = app.add_subcommand("optimize", "optimal playout delay for a fitted or given model");
    model.add(c);
    imp.add(c);
    grid.add(c);
    c->callback([this] { run(); });
  }

  void run() {
    const auto cfg = imp.resolve();
    const auto gs = grid.resolve();
    const auto in = model_inputs(model, cfg);
    std::vector<std::pair<std::string, std::string>> items;
    describe(items, cfg, imp.codec);
    describe(items, gs);
    if (in) describe(items, *in);
    show_config(items);

    const double nan = std::nan("");
    Table out;
    out.columns = {"pd_ms",       "pd_grid_ms", "interior",  "stationary_pd_ms", "pd_as_printed_ms",
                   "predicted_loss_pct", "idd", "ie_eff", "r", "e_mos"};
    if (!in) {
      // no usable history: the bootstrap delay
      double r = 0;
      check(qp_r_factor(150.0, 0.0, 1.0, &cfg, &r));
      out.rows.push_back({150.0, 150.0, 0LL, nan, nan, nan, 0.0, cfg.ie, r, qp_r_to_mos(r)});
      write_table(out);
      return;
    }
    qp_closed_form cf{};
    double pd_grid = 0, printed = 0, loss = 0, idd = 0, ie = 0, r = 0;
    check(qp_closed_form_playout(&*in, &cf));
    check(qp_grid_search_playout(&*in, &gs, &pd_grid));
    check(qp_closed_form_playout_as_printed(&*in, &printed));
    check(qp_predicted_loss(&in->fit, in->rho_n, std::max(cf.pd_ms, in->fit.scale_ms), &loss));
    check(qp_idd_simplified(cf.pd_ms, &idd));
    check(qp_ie_eff(loss, in->burst_r, &cfg, &ie));
    check(qp_r_factor(cf.pd_ms, loss, in->burst_r, &cfg, &r));
    out.rows.push_back({cf.pd_ms, pd_grid, static_cast<long long>(cf.interior), cf.stationary_pd_ms, printed, loss,
                        idd, ie, r, qp_r_to_mos(r)});
    write_table(out);
  }
};

struct SimOpts {
  qp_sim_config cfg = qp_sim_config_default();
  std::string segmentation = "auto";
  ImpairmentOpts imp;
  GridOpts grid;

  void add(CLI::App* c) {
    c->add_option("--window", cfg.window, "estimation window W (packets)")->capture_default_str();
    c->add_option("--frame", cfg.frame_interval_ms, "frame interval (ms)")->capture_default_str();
    c->add_option("--segmentation", segmentation, "auto | explicit | gap | onoff")
        ->check(CLI::IsMember({"auto", "explicit", "gap", "onoff"}))
        ->capture_default_str();
    c->add_option("--gap", cfg.segmentation.gap_ms, "gap threshold (ms) for gap segmentation")->capture_default_str();
    c->add_option("--onoff-seed", cfg.segmentation.seed, "seed of the on/off overlay")->capture_default_str();
    c->add_option("--mean-on", cfg.segmentation.mean_on_ms, "mean talkspurt length (ms)")->capture_default_str();
    c->add_option("--mean-off", cfg.segmentation.mean_off_ms, "mean silence length (ms)")->capture_default_str();
    c->add_option("--min-talkspurt", cfg.min_talkspurt_ms, "skip scoring talkspurts shorter than this (ms)")
        ->capture_default_str();
    c->add_option("--delay-offset", cfg.delay_offset_ms, "extra delay added to pd when scoring (ms)")
        ->capture_default_str();
    imp.add(c);
    grid.add(c);
  }

  qp_sim_config resolve(const qp_trace* t) {
    auto out = cfg;
    out.impairment = imp.resolve();
    out.grid = grid.resolve();
    std::string seg = segmentation;
    if (seg == "auto") {
      qp_packet p{};
      check(qp_trace_packet(t, 0, &p));
      seg = p.has_spurt ? "explicit" : "onoff";
    }
    out.segmentation.kind = seg == "explicit" ? QP_SEGMENT_EXPLICIT : seg == "gap" ? QP_SEGMENT_GAP : QP_SEGMENT_ONOFF;
    std::vector<std::pair<std::string, std::string>> items{{"window", std::to_string(out.window)},
                                                           {"frame_interval_ms", number(out.frame_interval_ms)},
                                                           {"segmentation", seg}};
    if (seg == "gap") items.push_back({"gap_ms", number(out.segmentation.gap_ms)});
    if (seg == "onoff") {
      items.push_back({"onoff_seed", std::to_string(out.segmentation.seed)});
      items.push_back({"mean_on_ms", number(out.segmentation.mean_on_ms)});
      items.push_back({"mean_off_ms", number(out.segmentation.mean_off_ms)});
    }
    items.push_back({"min_talkspurt_ms", number(out.min_talkspurt_ms)});
    items.push_back({"delay_offset_ms", number(out.delay_offset_ms)});
    describe(items, out.impairment, imp.codec);
    describe(items, out.grid);
    show_config(items);
    return out;
  }
};

std::string decider_name(const qp_decider& d) {
  char buf[64];
  check(qp_decider_name(&d, buf, sizeof buf));
  return buf;
}

struct CompareCmd {
  std::string trace;
  std::vector<std::string> algorithms;
  std::string detail;
  bool sequential = false;
  SimOpts sim;

  void add(CLI::App& app) {
    auto* c = app.add_subcommand("compare", "run playout algorithms over a trace");
    c->add_option("trace", trace, "trace file")->required();
    c->add_option("--algorithms", algorithms, "comma-separated algorithm names")->delimiter(',');
    c->add_option("--detail", detail, "also write per-talkspurt rows to this file");
    c->add_flag("--sequential", sequential, "run algorithms one after another");
    sim.add(c);
    c->callback([this] { run(); });
  }

  void run() {
    if (algorithms.empty()) {
      std::stringstream names(qp_decider_names());
      for (std::string n; std::getline(names, n, ',');) algorithms.push_back(n);
    }
    std::vector<qp_decider> ds;
    for (const auto& a : algorithms) {
      qp_decider d{};
      check(qp_decider_parse(a.c_str(), &d));
      ds.push_back(d);
    }
    const auto t = load_trace(trace);
    const auto cfg = sim.resolve(t.get());
    std::vector<const qp_run_result*> runs;
    ComparisonPtr table;
    std::vector<std::unique_ptr<qp_run_result, RunDeleter>> owned;
    if (sequential) {
      for (const auto& d : ds) {
        qp_run_result* r = nullptr;
        check(qp_simulate(t.get(), &d, &cfg, &r));
        owned.emplace_back(r);
        runs.push_back(r);
      }
    } else {
      qp_comparison* c = nullptr;
      check(qp_compare(t.get(), ds.data(), ds.size(), &cfg, &c));
      table.reset(c);
      for (std::size_t i = 0; i < qp_comparison_rows(c); ++i) runs.push_back(qp_comparison_row(c, i));
    }

    Table out;
    out.columns = {"algorithm", "e_mos",      "loss_pct",   "network_loss_pct",  "late_loss_pct",
                   "mean_pd_ms", "talkspurts", "packets", "measured_burst_r", "bootstrap_decisions"};
    Table det;
    det.columns = {"algorithm", "talkspurt", "first_seq", "packets",  "pd_ms", "network_lost",
                   "late_lost", "on_time",   "loss_pct",  "burst_r", "r",     "mos"};
    for (std::size_t i = 0; i < runs.size(); ++i) {
      const auto name = decider_name(ds[i]);
      qp_run_totals tot{};
      check(qp_run_totals_get(runs[i], &tot));
      out.rows.push_back({name, tot.e_mos_avg, tot.loss_pct, tot.network_loss_pct, tot.late_loss_pct, tot.mean_pd_ms,
                          static_cast<long long>(tot.talkspurts), static_cast<long long>(tot.packets),
                          tot.measured_burst_r, static_cast<long long>(tot.bootstrap_decisions)});
      if (detail.empty()) continue;
      for (std::size_t j = 0; j < qp_run_talkspurt_count(runs[i]); ++j) {
        qp_talkspurt_result ts{};
        check(qp_run_talkspurt(runs[i], j, &ts));
        det.rows.push_back({name, static_cast<long long>(ts.id), static_cast<long long>(ts.first_seq),
                            static_cast<long long>(ts.packets), ts.pd_ms, static_cast<long long>(ts.network_lost),
                            static_cast<long long>(ts.late_lost), static_cast<long long>(ts.received_on_time),
                            ts.loss_pct, ts.burst_r, ts.r, ts.mos});
      }
    }
    write_table(out);
    if (!detail.empty()) {
      std::ofstream f(detail, std::ios::binary);
      if (!f) throw Failure{kData, "cannot write " + detail};
      emit(det, g.fmt(), f);
    }
  }
};

struct CurvesCmd {
  std::string what = "idd";
  double from = 150, to = 500, step = 1;
  ModelOpts model;
  ImpairmentOpts imp;

  void add(CLI::App& app) {
    auto* c = app.add_subcommand("curves", "impairment curves as plot data");
    c->add_option("--what", what, "idd: both delay impairments; impairment: Idd, Ie-eff and their sum")
        ->check(CLI::IsMember({"idd", "impairment"}))
        ->capture_default_str();
    c->add_option("--from", from, "first pd (ms)")->capture_default_str();
    c->add_option("--to", to, "last pd (ms)")->capture_default_str();
    c->add_option("--step", step, "pd step (ms)")->capture_default_str();
    model.add(c);
    imp.add(c);
    c->callback([this] { run(); });
  }

  void run() {
    if (!(step > 0) || !(to >= from) || !std::isfinite(to)) throw Failure{kUsage, "need --step > 0 and --to >= --from"};
    const auto n = static_cast<std::size_t>(std::floor((to - from) / step + 1e-9)) + 1;
    Table out;
    if (what == "idd") {
      show_config({{"from_ms", number(from)}, {"to_ms", number(to)}, {"step_ms", number(step)}});
      out.columns = {"pd_ms", "idd_simplified", "idd_g107"};
      for (std::size_t i = 0; i < n; ++i) {
        const double pd = from + static_cast<double>(i) * step;
        double a = 0, b = 0;
        check(qp_idd_simplified(pd, &a));
        check(qp_idd_g107(pd, &b));
        out.rows.push_back({pd, a, b});
      }
      write_table(out);
      return;
    }
    const auto cfg = imp.resolve();
    const auto in = model_inputs(model, cfg);
    if (!in) throw Failure{kData, "the trace has no usable delay tail"};
    std::vector<std::pair<std::string, std::string>> items{
        {"from_ms", number(from)}, {"to_ms", number(to)}, {"step_ms", number(step)}};
    describe(items, cfg, imp.codec);
    describe(items, *in);
    show_config(items);
    out.columns = {"pd_ms", "idd", "predicted_loss_pct", "ie_eff", "sum"};
    for (std::size_t i = 0; i < n; ++i) {
      const double pd = from + static_cast<double>(i) * step;
      double idd = 0, loss = 0, ie = 0, sum = 0;
      check(qp_idd_simplified(pd, &idd));
      check(qp_predicted_loss(&in->fit, in->rho_n, std::max(pd, in->fit.scale_ms), &loss));
      check(qp_ie_eff(loss, in->burst_r, &cfg, &ie));
      check(qp_objective(&*in, pd, &sum));
      out.rows.push_back({pd, idd, loss, ie, sum});
    }
    write_table(out);
  }
};

struct BenchCmd {
  std::size_t reps = 20000;
  std::vector<std::size_t> points{200};
  ModelOpts model;
  ImpairmentOpts imp;

  void add(CLI::App& app) {
    auto* c = app.add_subcommand("bench", "time one closed-form decision against grid search");
    c->add_option("--reps", reps, "repetitions per measurement (>= 1000)")->capture_default_str();
    c->add_option("--grid-points", points, "comma-separated grid sizes")->delimiter(',')->capture_default_str();
    model.add(c);
    imp.add(c);
    model.scale = 60;
    model.k = 1.5;
    model.rho = 0.01;
    model.burst = 1.5;
    c->callback([this] { run(); });
  }

  void run() {
    if (!model.trace.empty()) {
      model.scale.reset();
      model.k.reset();
    }
    const auto cfg = imp.resolve();
    const auto in = model_inputs(model, cfg);
    if (!in) throw Failure{kData, "the trace has no usable delay tail"};
    std::vector<std::pair<std::string, std::string>> items{{"reps", std::to_string(reps)}};
    describe(items, cfg, imp.codec);
    describe(items, *in);
    show_config(items);
    Table out;
    out.columns = {"grid_points", "proposed_ns", "grid_ns", "speedup"};
    qp_decider proposed{QP_DECIDER_PROPOSED, 150}, grid{QP_DECIDER_GRID_SEARCH, 150};
    for (auto p : points) {
      auto gs = qp_grid_default();
      gs.points = p;
      qp_timing a{}, b{};
      check(qp_timing_benchmark(&proposed, &*in, &gs, reps, &a));
      // the grid search is two orders slower; fewer repetitions keep runs short
      check(qp_timing_benchmark(&grid, &*in, &gs, std::max<std::size_t>(1000, reps / 20), &b));
      out.rows.push_back({static_cast<long long>(p), a.per_call_ns, b.per_call_ns, b.per_call_ns / a.per_call_ns});
    }
    write_table(out);
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Quality-based VoIP playout delay tools"};
  app.require_subcommand(1);
  app.fallthrough();
  app.add_option("--format", g.format, "output format")
      ->check(CLI::IsMember({"tsv", "csv", "json-lines"}))
      ->capture_default_str();
  app.add_option("-o,--output", g.output, "output file (default: stdout)");
  app.add_flag("--strict", g.strict, "treat numerical-degeneracy warnings as errors (exit 3)");
  app.add_flag("--show-config", g.show_config, "print the effective configuration to stderr");
  app.set_version_flag("--version", qp_version());

  GenCmd gen;
  FitCmd fit;
  OptimizeCmd optimize;
  CompareCmd cmp;
  CurvesCmd curves;
  BenchCmd bench;
  gen.add(app);
  fit.add(app);
  optimize.add(app);
  cmp.add(app);
  curves.add(app);
  bench.add(app);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kUsage;
  } catch (const Failure& f) {
    std::cerr << "error: " << f.message << '\n';
    return f.code;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kData;
  }
  if (g.strict && !warnings.empty()) {
    std::cerr << "error: warnings escalated by --strict\n";
    return kStrict;
  }
  return kOk;
}
