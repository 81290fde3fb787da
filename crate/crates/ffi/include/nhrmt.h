#ifndef NHRMT_H
#define NHRMT_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum NhrmtEnsembleClass {
  NHRMT_ENSEMBLE_CLASS_SYMM_GINE = 1,
  NHRMT_ENSEMBLE_CLASS_GINE = 2,
  NHRMT_ENSEMBLE_CLASS_SELFDUAL_GINE = 4,
} NhrmtEnsembleClass;

// Result of every fallible call.
typedef enum NhrmtStatus {
  NHRMT_STATUS_OK = 0,
  NHRMT_STATUS_NULL_POINTER = 1,
  NHRMT_STATUS_INVALID_ARGUMENT = 2,
  NHRMT_STATUS_NUMERIC = 3,
  NHRMT_STATUS_BUFFER_TOO_SMALL = 4,
  NHRMT_STATUS_PANIC = 5,
} NhrmtStatus;

typedef enum NhrmtTopClass {
  NHRMT_TOP_CLASS_OE = 1,
  NHRMT_TOP_CLASS_UE = 2,
  NHRMT_TOP_CLASS_SE = 4,
} NhrmtTopClass;

// Fitted or analytic radial density `R1(|z|)`.
typedef struct NhrmtDensity NhrmtDensity;

// An ordered collection of spectra.
typedef struct NhrmtEnsemble NhrmtEnsemble;

// One complex spectrum.
typedef struct NhrmtSpectrum NhrmtSpectrum;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failed call on this thread, or null. Valid until the
// next failing call on the same thread.
const char *nhrmt_last_error(void);

void nhrmt_clear_error(void);

// Library version as a static NUL-terminated string.
const char *nhrmt_version(void);

// Spectrum from `len` real and imaginary parts.
//
// # Safety
// `re` and `im` must point to `len` doubles; `out` must be writable.
enum NhrmtStatus nhrmt_spectrum_new(const double *re,
                                    const double *im,
                                    size_t len,
                                    struct NhrmtSpectrum **out_spectrum);

// # Safety
// `spectrum` must come from this library and not be used afterwards.
void nhrmt_spectrum_free(struct NhrmtSpectrum *spectrum);

// Number of eigenvalues, 0 for a null handle.
//
// # Safety
// `spectrum` must be null or a live handle.
size_t nhrmt_spectrum_len(const struct NhrmtSpectrum *spectrum);

// Copies the eigenvalues into `re`/`im` of capacity `cap`.
//
// # Safety
// `re` and `im` must have room for `cap` doubles.
enum NhrmtStatus nhrmt_spectrum_copy(const struct NhrmtSpectrum *spectrum,
                                     double *re,
                                     double *im,
                                     size_t cap);

// `members` spectra of an `n`-dimensional random-matrix ensemble.
//
// # Safety
// `out_ensemble` must be writable.
enum NhrmtStatus nhrmt_ensemble_sample(enum NhrmtEnsembleClass class_,
                                       size_t n,
                                       size_t members,
                                       uint64_t seed,
                                       struct NhrmtEnsemble **out_ensemble);

// Dissipative kicked-top sweep with the tabulated parameters. `points`
// (length `n_points`, may be empty) overrides the grid of each sweep axis;
// `parity_sectors` splits OE/UE spectra by parity.
//
// # Safety
// `points` must hold `n_points` entries; `out_ensemble` must be writable.
enum NhrmtStatus nhrmt_top_sample(enum NhrmtTopClass class_,
                                  bool desk_scale,
                                  const size_t *points,
                                  size_t n_points,
                                  bool parity_sectors,
                                  uint64_t seed,
                                  struct NhrmtEnsemble **out_ensemble);

// Empty ensemble to fill with [`nhrmt_ensemble_push`].
struct NhrmtEnsemble *nhrmt_ensemble_new(void);

// Appends a copy of `spectrum`.
//
// # Safety
// Both handles must be live.
enum NhrmtStatus nhrmt_ensemble_push(struct NhrmtEnsemble *ensemble,
                                     const struct NhrmtSpectrum *spectrum);

// # Safety
// `ensemble` must be null or a live handle.
size_t nhrmt_ensemble_len(const struct NhrmtEnsemble *ensemble);

// New handle holding a copy of member `index`.
//
// # Safety
// `ensemble` must be live; `out_spectrum` writable.
enum NhrmtStatus nhrmt_ensemble_get(const struct NhrmtEnsemble *ensemble,
                                    size_t index,
                                    struct NhrmtSpectrum **out_spectrum);

// # Safety
// `ensemble` must come from this library and not be used afterwards.
void nhrmt_ensemble_free(struct NhrmtEnsemble *ensemble);

// Polynomial fit of the pooled radial density; `tail` is the radius
// fraction dropped at each end.
//
// # Safety
// `ensemble` must be live; `out_density` writable.
enum NhrmtStatus nhrmt_density_fit(const struct NhrmtEnsemble *ensemble,
                                   size_t degree,
                                   double tail,
                                   struct NhrmtDensity **out_density);

// Constant density on `r_min <= |z| <= r_max`.
//
// # Safety
// `out_density` must be writable.
enum NhrmtStatus nhrmt_density_uniform(double density,
                                       double r_min,
                                       double r_max,
                                       struct NhrmtDensity **out_density);

// `R1(r)`, zero outside the support or for a null handle.
//
// # Safety
// `density` must be null or live.
double nhrmt_density_eval(const struct NhrmtDensity *density, double r);

// # Safety
// `density` must be live; `r_min` and `r_max` writable.
enum NhrmtStatus nhrmt_density_support(const struct NhrmtDensity *density,
                                       double *r_min,
                                       double *r_max);

// # Safety
// `density` must come from this library and not be used afterwards.
void nhrmt_density_free(struct NhrmtDensity *density);

// Closed-form Ginibre number variance.
//
// # Safety
// `out_value` must be writable.
enum NhrmtStatus nhrmt_sigma2_gine(double n_mean, double *out_value);

// `Sigma2_G(<n> / sqrt 2)`, the self-dual relation.
//
// # Safety
// `out_value` must be writable.
enum NhrmtStatus nhrmt_sigma2_selfdual(double n_mean, double *out_value);

// Nearest-neighbour spacings of eigenvalues with `r_min <= |z| <= r_max`,
// locally unfolded when `density` is non-null. Writes at most `cap` values
// and the full count to `out_len`; returns `BufferTooSmall` when they do
// not fit.
//
// # Safety
// `out_values` must have room for `cap` doubles; `out_len` writable.
enum NhrmtStatus nhrmt_nn_spacings(const struct NhrmtSpectrum *spectrum,
                                   const struct NhrmtDensity *density,
                                   double r_min,
                                   double r_max,
                                   double *out_values,
                                   size_t cap,
                                   size_t *out_len);

// Number variance with discs in `|z| <= r_max` of spectra at constant
// density `rho`. Fills `sigma2` and `stderr` (length `count`).
//
// # Safety
// `targets`, `sigma2`, `stderr` must hold `count` doubles.
enum NhrmtStatus nhrmt_number_variance_disc(const struct NhrmtEnsemble *ensemble,
                                            double r_max,
                                            double rho,
                                            const double *targets,
                                            size_t count,
                                            size_t centers,
                                            uint64_t seed,
                                            double *sigma2,
                                            double *stderr);

// Number variance with isochrone curves of the fitted density.
//
// # Safety
// `targets`, `sigma2`, `stderr` must hold `count` doubles.
enum NhrmtStatus nhrmt_number_variance_isochrone(const struct NhrmtEnsemble *ensemble,
                                                 const struct NhrmtDensity *density,
                                                 const double *targets,
                                                 size_t count,
                                                 size_t centers,
                                                 size_t directions,
                                                 size_t steps,
                                                 uint64_t seed,
                                                 double *sigma2,
                                                 double *stderr);

// Endpoint of the geodesic of `pi R1 |dz|^2` from `(cx, cy)` along
// `(dx, dy)` at unfolded arclength `s`, RK4 steps at most `step`.
//
// # Safety
// `density` must be live; `out_x` and `out_y` writable.
enum NhrmtStatus nhrmt_geodesic_shoot(const struct NhrmtDensity *density,
                                      double cx,
                                      double cy,
                                      double dx,
                                      double dy,
                                      double s,
                                      double step,
                                      double *out_x,
                                      double *out_y);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* NHRMT_H */
