#ifndef CAREERFLOW_H
#define CAREERFLOW_H

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

// Result code of every fallible call.
typedef enum CfStatus {
  CF_STATUS_OK = 0,
  CF_STATUS_NULL_POINTER = 1,
  CF_STATUS_INVALID_UTF8 = 2,
  CF_STATUS_IO = 3,
  CF_STATUS_PARSE = 4,
  CF_STATUS_INVALID_ARGUMENT = 5,
  CF_STATUS_DATA = 6,
  CF_STATUS_OUT_OF_RANGE = 7,
  CF_STATUS_PANIC = 8,
} CfStatus;

// Edge reweighting applied by [`cf_network_transform`].
typedef enum CfTransform {
  CF_TRANSFORM_RESOURCES = 0,
  CF_TRANSFORM_RETENTION = 1,
  CF_TRANSFORM_GROWTH = 2,
  CF_TRANSFORM_UNIFIED = 3,
} CfTransform;

// Loaded and validated career records.
typedef struct CfCorpus CfCorpus;

// Yearly flow network.
typedef struct CfNetwork CfNetwork;

// HITS scores and ranks for one window.
typedef struct CfRanking CfRanking;

typedef struct CfR3Params {
  double alpha_ratio;
  double beta_ratio;
  double gamma;
} CfR3Params;

// One row of a ranking; ranks start at 1.
typedef struct CfRankRow {
  double hub;
  double authority;
  uint32_t hub_rank;
  uint32_t authority_rank;
  bool isolated;
} CfRankRow;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failure on this thread, or null. The pointer stays
// valid until the next failing call on the same thread.
const char *cf_last_error(void);

// Defaults: alpha and beta ratio 0.5, gamma 1.5.
struct CfR3Params cf_r3_params_default(void);

// Loads a records CSV. `rules_path` may be null for the built-in rules
// only; `horizon <= 0` takes the latest year in the records.
//
// # Safety
// Strings must be NUL-terminated; `out` must be writable.
enum CfStatus cf_corpus_load(const char *records_path,
                             const char *rules_path,
                             int32_t horizon,
                             struct CfCorpus **out);

// Number of persons, or 0 for a null handle.
//
// # Safety
// `corpus` must be null or a live handle.
size_t cf_corpus_person_count(const struct CfCorpus *corpus);

// # Safety
// `corpus` must be null or a live handle.
int32_t cf_corpus_horizon(const struct CfCorpus *corpus);

// # Safety
// `corpus` must be null or a handle not yet freed.
void cf_corpus_free(struct CfCorpus *corpus);

// Flow network over the inclusive year range.
//
// # Safety
// `corpus` must be a live handle; `out` must be writable.
enum CfStatus cf_network_build(const struct CfCorpus *corpus,
                               int32_t from,
                               int32_t to,
                               bool exclude_postdocs,
                               struct CfNetwork **out);

// A reweighted copy of `network`.
//
// # Safety
// Handles must be live and `params` readable; `out` must be writable.
enum CfStatus cf_network_transform(const struct CfNetwork *network,
                                   const struct CfCorpus *corpus,
                                   enum CfTransform mode,
                                   const struct CfR3Params *params,
                                   struct CfNetwork **out);

// Edge weight `source -> target` in `year`; 0 when absent or on bad input.
//
// # Safety
// `network` must be null or live; strings must be null or NUL-terminated.
double cf_network_weight(const struct CfNetwork *network,
                         const char *source,
                         const char *target,
                         int32_t year);

// # Safety
// `network` must be null or a handle not yet freed.
void cf_network_free(struct CfNetwork *network);

// HITS over the edges of years `from..=to`. `tol <= 0` or `max_iter == 0`
// use the defaults (1e-8, 100).
//
// # Safety
// `network` must be live; `out` must be writable.
enum CfStatus cf_rank_window(const struct CfNetwork *network,
                             int32_t from,
                             int32_t to,
                             double tol,
                             uint32_t max_iter,
                             struct CfRanking **out);

// Rows in id order; 0 for a null handle.
//
// # Safety
// `ranking` must be null or live.
size_t cf_ranking_len(const struct CfRanking *ranking);

// Organization id of row `index`, owned by the ranking; null if out of range.
//
// # Safety
// `ranking` must be null or live.
const char *cf_ranking_org(const struct CfRanking *ranking, size_t index);

// # Safety
// `ranking` must be live and `row` writable.
enum CfStatus cf_ranking_row(const struct CfRanking *ranking, size_t index, struct CfRankRow *row);

// # Safety
// `ranking` must be null or live.
bool cf_ranking_converged(const struct CfRanking *ranking);

// # Safety
// `ranking` must be null or a handle not yet freed.
void cf_ranking_free(struct CfRanking *ranking);

// Resource score of one career length against the system mean.
double cf_r_src(double career_length, double system_mean, double alpha_ratio);

// Relative growth from influx, outflux and staff count.
double cf_relative_growth(double influx, double outflux, double staff);

// HITS on a dense row-major `n × n` weight matrix; the diagonal is ignored.
// `hub` and `authority` receive `n` values each.
//
// # Safety
// `weights` must hold `n * n` values; `hub` and `authority` `n` each.
enum CfStatus cf_hits_dense(size_t n,
                            const double *weights,
                            double tol,
                            uint32_t max_iter,
                            double *hub,
                            double *authority);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CAREERFLOW_H */
