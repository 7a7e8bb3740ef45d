/*
 * qplayout C API.
 *
 * Opaque handles (qp_trace, qp_run_result, qp_comparison) are created by the
 * library and released with the matching *_free function. Every fallible call
 * returns a qp_status; on failure a human-readable message is available from
 * qp_last_error() on the calling thread until that thread's next API call.
 * Output parameters are only written on QP_OK.
 */
#ifndef QPLAYOUT_H
#define QPLAYOUT_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#  if defined(QPLAYOUT_BUILDING)
#    define QP_API __declspec(dllexport)
#  else
#    define QP_API __declspec(dllimport)
#  endif
#else
#  define QP_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum qp_status {
  QP_OK = 0,
  QP_ERR_INVALID_ARGUMENT = 1,
  QP_ERR_DOMAIN = 2,
  QP_ERR_INSUFFICIENT_DATA = 3,
  QP_ERR_DEGENERATE = 4,
  QP_ERR_PARSE = 5,
  QP_ERR_VALIDATION = 6,
  QP_ERR_CONFIG = 7,
  QP_ERR_IO = 8,
  QP_ERR_INTERNAL = 9
} qp_status;

QP_API const char* qp_version(void);
QP_API const char* qp_status_name(qp_status status);
QP_API const char* qp_last_error(void);

/* ---- quality model ---------------------------------------------------- */

typedef enum qp_idd_variant { QP_IDD_SIMPLIFIED = 0, QP_IDD_G107 = 1 } qp_idd_variant;

typedef struct qp_impairment_config {
  double r0;
  double ie;
  double bpl;
  qp_idd_variant idd_variant;
  int floor_burst_ratio; /* nonzero: burst ratios below 1 are raised to 1 */
} qp_impairment_config;

QP_API qp_impairment_config qp_impairment_default(void);

/* Looks up a codec preset by name. table_path may be NULL for the built-in
 * table, or name a TSV file with columns name, ie, bpl[, source]. Only ie and
 * bpl of *cfg are overwritten. */
QP_API qp_status qp_codec_apply(const char* name, const char* table_path, qp_impairment_config* cfg);
/* Newline-separated "name\tie\tbpl\tsource" rows of the built-in table. */
QP_API const char* qp_codec_builtin_table(void);

QP_API qp_status qp_idd_simplified(double pd_ms, double* out);
QP_API qp_status qp_idd_g107(double pd_ms, double* out);
QP_API qp_status qp_burst_ratio(double p, double q, double* out);
QP_API qp_status qp_ie_eff(double loss_pct, double burst_r, const qp_impairment_config* cfg, double* out);
QP_API qp_status qp_r_factor(double pd_ms, double loss_pct, double burst_r, const qp_impairment_config* cfg,
                             double* out);
QP_API double qp_r_to_mos(double r);

/* ---- traces ------------------------------------------------------------ */

typedef struct qp_trace qp_trace;

typedef struct qp_packet {
  uint64_t seq;
  double send_ms;
  double recv_ms; /* meaningful only when received != 0 */
  int received;
  int has_spurt;
  uint64_t spurt_id;
} qp_packet;

typedef enum qp_tail_kind { QP_TAIL_PARETO = 0, QP_TAIL_LOGNORMAL = 1, QP_TAIL_EXPONENTIAL = 2 } qp_tail_kind;

typedef struct qp_gen_config {
  uint64_t seed;
  size_t n_packets;
  double interval_ms;
  double base_delay_ms;
  qp_tail_kind tail;
  double tail_a; /* pareto scale ms | lognormal mu | exponential lambda */
  double tail_b; /* pareto k       | lognormal sigma | unused */
  double loss_p;
  double loss_q;
  int spikes;
  double spike_rate;
  double spike_magnitude_ms;
  double spike_decay;
} qp_gen_config;

QP_API qp_gen_config qp_gen_config_default(void);
/* Parses "pareto:20,2", "lognormal:3,0.5" or "exponential:0.05" into cfg. */
QP_API qp_status qp_gen_config_set_tail(qp_gen_config* cfg, const char* spec);

QP_API qp_status qp_trace_parse(const char* text, size_t len, qp_trace** out);
QP_API qp_status qp_trace_load(const char* path, qp_trace** out);
QP_API qp_status qp_trace_generate(const qp_gen_config* cfg, qp_trace** out);
/* *out is allocated by the library; release with qp_string_free. */
QP_API qp_status qp_trace_write(const qp_trace* trace, char** out, size_t* len);
QP_API qp_status qp_trace_save(const qp_trace* trace, const char* path);
QP_API size_t qp_trace_size(const qp_trace* trace);
QP_API qp_status qp_trace_packet(const qp_trace* trace, size_t index, qp_packet* out);
QP_API void qp_trace_free(qp_trace* trace);
QP_API void qp_string_free(char* s);

/* ---- delay model ------------------------------------------------------- */

typedef struct qp_pareto_fit {
  double scale_ms;
  double shape;
  size_t n_tail;
  int shape_capped;
} qp_pareto_fit;

QP_API qp_status qp_pareto_ccdf(const qp_pareto_fit* fit, double pd_ms, double* out);
QP_API qp_status qp_predicted_loss(const qp_pareto_fit* fit, double rho_n, double pd_ms, double* out);

typedef enum qp_fit_scope { QP_FIT_TAIL = 0, QP_FIT_FULL = 1 } qp_fit_scope;

typedef struct qp_distribution_fit {
  double param1;
  double param2;
  double ks_statistic;
} qp_distribution_fit;

typedef struct qp_fit_report {
  size_t n_packets;  /* slots in the window */
  size_t n_received;
  double median_ms;
  qp_pareto_fit pareto; /* tail fit; valid when pareto_ok != 0 */
  int pareto_ok;
  double rho_n;
  double gilbert_p;
  double gilbert_q;
  double burst_r;
  /* Four-distribution comparison; valid when alternatives_ok != 0. */
  int alternatives_ok;
  qp_distribution_fit pareto_alt;  /* scale, k */
  qp_distribution_fit weibull;     /* lambda, k */
  qp_distribution_fit lognormal;   /* mu, sigma */
  qp_distribution_fit exponential; /* lambda, - */
  const char* best_fit;            /* static string: name with the smallest KS distance */
} qp_fit_report;

/* Fits the last `window` packets of the trace (0 = whole trace). */
QP_API qp_status qp_fit_trace(const qp_trace* trace, size_t window, qp_fit_scope scope, qp_fit_report* out);

/* ---- optimizer --------------------------------------------------------- */

typedef struct qp_optimizer_inputs {
  qp_pareto_fit fit;
  double rho_n;
  double burst_r;
  qp_impairment_config impairment;
} qp_optimizer_inputs;

typedef struct qp_grid_spec {
  double lo_ms;
  double hi_ms;
  size_t points;
  int log_spacing;
} qp_grid_spec;

QP_API qp_grid_spec qp_grid_default(void);

typedef struct qp_closed_form {
  double pd_ms;
  int interior;
  double stationary_pd_ms; /* NaN when no stationary point exists */
} qp_closed_form;

QP_API qp_status qp_objective(const qp_optimizer_inputs* in, double pd_ms, double* out);
QP_API qp_status qp_closed_form_playout(const qp_optimizer_inputs* in, qp_closed_form* out);
QP_API qp_status qp_closed_form_playout_as_printed(const qp_optimizer_inputs* in, double* out);
QP_API qp_status qp_grid_search_playout(const qp_optimizer_inputs* in, const qp_grid_spec* grid, double* out);

/* ---- simulation -------------------------------------------------------- */

typedef enum qp_decider_kind {
  QP_DECIDER_PROPOSED = 0,
  QP_DECIDER_GRID_SEARCH = 1,
  QP_DECIDER_EXP_AVG = 2,
  QP_DECIDER_FAST_EXP_AVG = 3,
  QP_DECIDER_MIN_DELAY = 4,
  QP_DECIDER_SPIKE_DETECT = 5,
  QP_DECIDER_FIXED = 6
} qp_decider_kind;

typedef struct qp_decider {
  qp_decider_kind kind;
  double fixed_pd_ms;
} qp_decider;

/* Accepts proposed, p-optimum, exp-avg, f-exp-avg, min-del, spike-det, fixed:<ms>. */
QP_API qp_status qp_decider_parse(const char* name, qp_decider* out);
/* Writes the canonical name into buf (NUL-terminated, truncated to cap). */
QP_API qp_status qp_decider_name(const qp_decider* d, char* buf, size_t cap);
/* Comma-separated list of the six algorithm names. */
QP_API const char* qp_decider_names(void);

typedef enum qp_segmentation_kind {
  QP_SEGMENT_EXPLICIT = 0,
  QP_SEGMENT_GAP = 1,
  QP_SEGMENT_ONOFF = 2
} qp_segmentation_kind;

typedef struct qp_segmentation {
  qp_segmentation_kind kind;
  double gap_ms;
  uint64_t seed;
  double mean_on_ms;
  double mean_off_ms;
} qp_segmentation;

typedef struct qp_sim_config {
  size_t window;
  double frame_interval_ms;
  qp_impairment_config impairment;
  qp_segmentation segmentation;
  qp_grid_spec grid;
  double min_talkspurt_ms;
  double delay_offset_ms;
} qp_sim_config;

QP_API qp_sim_config qp_sim_config_default(void);

typedef struct qp_run_totals {
  size_t talkspurts;
  size_t packets;
  size_t network_lost;
  size_t late_lost;
  size_t received_on_time;
  double loss_pct;
  double network_loss_pct;
  double late_loss_pct;
  double mean_pd_ms;
  double e_mos_avg;
  double measured_burst_r;
  size_t bootstrap_decisions;
} qp_run_totals;

typedef struct qp_talkspurt_result {
  uint64_t id;
  uint64_t first_seq;
  size_t packets;
  double pd_ms;
  size_t network_lost;
  size_t late_lost;
  size_t received_on_time;
  double loss_pct;
  double burst_r;
  double r;
  double mos;
  int bootstrap;
} qp_talkspurt_result;

typedef struct qp_run_result qp_run_result;

QP_API qp_status qp_simulate(const qp_trace* trace, const qp_decider* decider, const qp_sim_config* cfg,
                             qp_run_result** out);
QP_API qp_status qp_run_totals_get(const qp_run_result* run, qp_run_totals* out);
QP_API size_t qp_run_talkspurt_count(const qp_run_result* run);
QP_API qp_status qp_run_talkspurt(const qp_run_result* run, size_t index, qp_talkspurt_result* out);
QP_API void qp_run_free(qp_run_result* run);

typedef struct qp_comparison qp_comparison;

/* Runs each decider on the same trace; rows keep the given order. */
QP_API qp_status qp_compare(const qp_trace* trace, const qp_decider* deciders, size_t count,
                            const qp_sim_config* cfg, qp_comparison** out);
QP_API size_t qp_comparison_rows(const qp_comparison* table);
/* Borrowed pointer, valid until qp_comparison_free. */
QP_API const qp_run_result* qp_comparison_row(const qp_comparison* table, size_t index);
QP_API void qp_comparison_free(qp_comparison* table);

typedef struct qp_timing {
  size_t repetitions;
  double total_ns;
  double per_call_ns;
} qp_timing;

/* decider must be QP_DECIDER_PROPOSED or QP_DECIDER_GRID_SEARCH; repetitions >= 1000. */
QP_API qp_status qp_timing_benchmark(const qp_decider* decider, const qp_optimizer_inputs* in,
                                     const qp_grid_spec* grid, size_t repetitions, qp_timing* out);

#ifdef __cplusplus
}
#endif

#endif /* QPLAYOUT_H */
