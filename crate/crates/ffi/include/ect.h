#ifndef ECT_H
#define ECT_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum EctStatus {
  ECT_STATUS_OK = 0,
  ECT_STATUS_NULL_POINTER = 1,
  ECT_STATUS_INVALID_ARGUMENT = 2,
  ECT_STATUS_FORMAT = 3,
  ECT_STATUS_IO = 4,
  ECT_STATUS_SEARCH_LIMIT = 5,
  ECT_STATUS_INTERNAL = 6,
  ECT_STATUS_PANIC = 7,
} EctStatus;

// Opaque trained model.
typedef struct EctModel EctModel;

typedef struct EctDepthBounds {
  size_t k;
  size_t m;
  size_t ceil_m2;
  size_t floor_m2;
  double first_phase[4];
  double importance[4];
  bool case4_applicable;
  double chernoff_d;
  size_t bracketed_final_rounds;
} EctDepthBounds;

typedef struct EctTightness {
  size_t k;
  double reg_t;
  double s_t;
  double i_t;
  double ratio;
} EctTightness;

// Summary of one simulated tournament. `ratio` is `INFINITY` when the
// adversary paid nothing.
typedef struct EctSimulation {
  size_t winner;
  size_t best;
  size_t contradictions;
  uint64_t weighted_errors;
  size_t first_phase_rounds;
  size_t total_rounds;
  size_t importance_depth;
  double ratio;
} EctSimulation;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Library version as a static NUL-terminated string.
const char *ect_version(void);

// Message of the last failed call on this thread, or NULL. The pointer is
// valid until the next `ect_*` call on the same thread.
const char *ect_last_error(void);

// Loads a model file written by `ect train`.
//
// # Safety
// `path` must be a NUL-terminated string and `out` a valid pointer.
enum EctStatus ect_model_load(const char *path, struct EctModel **out);

// Parses a model from its JSON text.
//
// # Safety
// `json` must be a NUL-terminated string and `out` a valid pointer.
enum EctStatus ect_model_from_json(const char *json, struct EctModel **out);

// Number of labels of a model.
//
// # Safety
// `model` must come from `ect_model_load` or `ect_model_from_json`.
enum EctStatus ect_model_k(const struct EctModel *model, size_t *out);

// Predicts the label index for one feature vector of length `len`.
//
// # Safety
// `features` must point to `len` doubles; `model` must be a live handle.
enum EctStatus ect_model_decode(const struct EctModel *model,
                                const double *features,
                                size_t len,
                                size_t *label);

// Releases a model. NULL is ignored.
//
// # Safety
// `model` must be NULL or a handle not yet freed.
void ect_model_free(struct EctModel *model);

// Closed-form depth figures for `k` labels and `m` tournaments.
//
// # Safety
// `out` must be a valid pointer.
enum EctStatus ect_depth_bounds(size_t k, size_t m, struct EctDepthBounds *out);

// Parity-cost construction for `k` a power of two, at least 4.
//
// # Safety
// `out` must be a valid pointer.
enum EctStatus ect_tightness(size_t k, struct EctTightness *out);

// Exhaustive minimum weighted error that dethrones the best label.
// `pool` selects pool semantics; `cap` of 0 means the default cap.
// Returns `SearchLimit` when the instance is too large.
//
// # Safety
// `cost` must be a valid pointer.
enum EctStatus ect_min_dethroning_cost(size_t k, size_t m, int pool, uint64_t cap, uint32_t *cost);

// Plays one tournament with label 0 best. `adversary_json` is an
// adversary model such as `{"kind":"budget_full_lie","budget":2}`, or NULL
// for an honest comparator.
//
// # Safety
// `adversary_json` must be NULL or NUL-terminated; `out` must be valid.
enum EctStatus ect_simulate(size_t k,
                            size_t m,
                            int pool,
                            const char *adversary_json,
                            struct EctSimulation *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* ECT_H */
