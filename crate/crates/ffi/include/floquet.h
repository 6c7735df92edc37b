#ifndef FLOQUET_H
#define FLOQUET_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum FloquetStatus {
  FLOQUET_STATUS_OK = 0,
  FLOQUET_STATUS_NULL_POINTER = 1,
  FLOQUET_STATUS_INVALID_UTF8 = 2,
  // Unknown model, bad parameter or malformed JSON.
  FLOQUET_STATUS_CONFIG = 3,
  // The Hamiltonian or a cutoff failed validation.
  FLOQUET_STATUS_VALIDATION = 4,
  FLOQUET_STATUS_CONVERGENCE = 5,
  FLOQUET_STATUS_OUT_OF_RANGE = 6,
  FLOQUET_STATUS_INTERNAL = 7,
} FloquetStatus;

// Opaque validated Hamiltonian.
typedef struct FloquetModel FloquetModel;

// Opaque resolved spectrum.
typedef struct FloquetSpectrum FloquetSpectrum;

// Labels of one eigentriplet; the mode is read with [`floquet_spectrum_mode`].
typedef struct FloquetTriplet {
  double quasi_energy;
  double avg_energy;
  double residual;
  double centroid;
} FloquetTriplet;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Parses a model JSON document (explicit harmonics or a built-in).
//
// # Safety
// `json` must be a NUL-terminated string and `out` a writable pointer.
enum FloquetStatus floquet_model_from_json(const char *json, struct FloquetModel **out);

// Built-in model by name with `count` parameter overrides.
//
// # Safety
// `name` must be NUL-terminated; `keys` and `values` must each hold
// `count` entries (they may be null when `count` is zero).
enum FloquetStatus floquet_model_builtin(const char *name,
                                         const char *const *keys,
                                         const double *values,
                                         size_t count,
                                         struct FloquetModel **out);

// Hilbert-space dimension, or 0 for a null handle.
//
// # Safety
// `model` must be null or a live handle.
size_t floquet_model_dim(const struct FloquetModel *model);

// Drive frequency, or NaN for a null handle.
//
// # Safety
// `model` must be null or a live handle.
double floquet_model_omega(const struct FloquetModel *model);

// # Safety
// `model` must be null or a handle not yet freed.
void floquet_model_free(struct FloquetModel *model);

// Extended-space solve. `harmonics < 0` selects the cutoff automatically;
// `tol_deg ≤ 0` uses the default degeneracy tolerance.
//
// # Safety
// `model` must be a live handle and `out` writable.
enum FloquetStatus floquet_solve(const struct FloquetModel *model,
                                 int64_t harmonics,
                                 double tol_deg,
                                 struct FloquetSpectrum **out);

// Propagation-based solve with modes on `harmonics` Fourier components
// either side; `steps_per_period = 0` uses the default.
//
// # Safety
// `model` must be a live handle and `out` writable.
enum FloquetStatus floquet_oracle_solve(const struct FloquetModel *model,
                                        size_t harmonics,
                                        size_t steps_per_period,
                                        struct FloquetSpectrum **out);

// Number of triplets, or 0 for a null handle.
//
// # Safety
// `spectrum` must be null or a live handle.
size_t floquet_spectrum_len(const struct FloquetSpectrum *spectrum);

// Harmonic cutoff `M` of the stored modes, or 0 for a null handle.
//
// # Safety
// `spectrum` must be null or a live handle.
size_t floquet_spectrum_truncation(const struct FloquetSpectrum *spectrum);

// Length `dim·(2M+1)` of every mode vector, or 0 for a null handle.
//
// # Safety
// `spectrum` must be null or a live handle.
size_t floquet_spectrum_mode_len(const struct FloquetSpectrum *spectrum);

// # Safety
// `spectrum` must be a live handle and `out` writable.
enum FloquetStatus floquet_spectrum_triplet(const struct FloquetSpectrum *spectrum,
                                            size_t index,
                                            struct FloquetTriplet *out);

// Copies mode `index` into `re` and `im`, harmonic blocks from `-M` to `M`
// each holding `dim` entries. `len` must equal [`floquet_spectrum_mode_len`].
//
// # Safety
// `re` and `im` must each be writable for `len` doubles.
enum FloquetStatus floquet_spectrum_mode(const struct FloquetSpectrum *spectrum,
                                         size_t index,
                                         double *re,
                                         double *im,
                                         size_t len);

// Full spectrum as JSON; release the string with [`floquet_string_free`].
//
// # Safety
// `spectrum` must be a live handle and `out` writable.
enum FloquetStatus floquet_spectrum_to_json(const struct FloquetSpectrum *spectrum, char **out);

// # Safety
// `spectrum` must be null or a handle not yet freed.
void floquet_spectrum_free(struct FloquetSpectrum *spectrum);

// # Safety
// `s` must be null or a string returned by this library and not yet freed.
void floquet_string_free(char *s);

// Message of the last failed call on this thread; empty after a success.
// The pointer stays valid until the next call on the same thread.
const char *floquet_last_error_message(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* FLOQUET_H */
