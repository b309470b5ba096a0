#ifndef AUCTIONSIM_H
#define AUCTIONSIM_H

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Kernel selector for `asim_density_fit`.
 */
typedef enum AsimKernel {
  AsimKernelGaussian = 0,
  AsimKernelEpanechnikov = 1,
} AsimKernel;

/**
 * Status code returned by every fallible function.
 */
typedef enum AsimStatus {
  AsimOk = 0,
  AsimErrIo = 1,
  AsimErrParse = 2,
  AsimErrFit = 3,
  AsimErrSampler = 4,
  AsimErrInvalidArgument = 5,
} AsimStatus;

/**
 * A completed Metropolis-Hastings run (opaque).
 */
typedef struct AsimChain AsimChain;

/**
 * Fitted KDE plus clamped polynomial target (opaque).
 */
typedef struct AsimDensity AsimDensity;

/**
 * Inflation-adjusted price series (opaque).
 */
typedef struct AsimSeries AsimSeries;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Copy the last error message on this thread into `buf` (NUL
 * terminated, truncated to `len`). Returns the full message length,
 * terminator excluded.
 *
 * # Safety
 * `buf` must point to `len` writable bytes, or be NULL with `len` 0.
 */
uintptr_t asim_last_error(char *buf, uintptr_t len);

/**
 * Load auction and deflator CSVs and deflate to `base_year`. On success
 * writes an owned handle to `out`.
 *
 * # Safety
 * `auction_path` and `deflator_path` must be NUL-terminated strings and
 * `out` a valid pointer.
 */
enum AsimStatus asim_series_load(const char *auction_path,
                                 const char *deflator_path,
                                 int base_year,
                                 struct AsimSeries **out);

/**
 * Number of observations in the series.
 *
 * # Safety
 * `series` must be a live handle from `asim_series_load`.
 */
uintptr_t asim_series_len(const struct AsimSeries *series);

/**
 * Median real price.
 *
 * # Safety
 * `series` must be a live handle from `asim_series_load`.
 */
double asim_series_median(const struct AsimSeries *series);

/**
 * # Safety
 * `series` must be a handle from `asim_series_load`, not yet freed.
 */
void asim_series_free(struct AsimSeries *series);

/**
 * Fit the KDE and polynomial target. `bandwidth <= 0` selects
 * Silverman's rule.
 *
 * # Safety
 * `series` must be a live handle; `out` a valid pointer.
 */
enum AsimStatus asim_density_fit(const struct AsimSeries *series,
                                 enum AsimKernel kernel,
                                 double bandwidth,
                                 uintptr_t degree,
                                 uintptr_t fit_grid,
                                 struct AsimDensity **out);

/**
 * KDE value at `x`.
 *
 * # Safety
 * `density` must be a live handle from `asim_density_fit`.
 */
double asim_density_kde(const struct AsimDensity *density, double x);

/**
 * Clamped polynomial target at `x` (unnormalized).
 *
 * # Safety
 * `density` must be a live handle from `asim_density_fit`.
 */
double asim_density_target(const struct AsimDensity *density, double x);

/**
 * CDF of the normalized target at `x`.
 *
 * # Safety
 * `density` must be a live handle from `asim_density_fit`.
 */
double asim_density_cdf(const struct AsimDensity *density, double x);

/**
 * Bandwidth the fit used.
 *
 * # Safety
 * `density` must be a live handle from `asim_density_fit`.
 */
double asim_density_bandwidth(const struct AsimDensity *density);

/**
 * Support interval of the target.
 *
 * # Safety
 * `density` must be live; `lo` and `hi` must be valid or NULL.
 */
void asim_density_support(const struct AsimDensity *density, double *lo, double *hi);

/**
 * # Safety
 * `density` must be a handle from `asim_density_fit`, not yet freed.
 */
void asim_density_free(struct AsimDensity *density);

/**
 * Run one Metropolis-Hastings chain against the fitted target, started
 * at the data median. Deterministic in `seed`.
 *
 * # Safety
 * `density` must be a live handle; `out` a valid pointer.
 */
enum AsimStatus asim_chain_run(const struct AsimDensity *density,
                               uintptr_t n_samples,
                               uintptr_t burn_in,
                               uint64_t seed,
                               struct AsimChain **out);

/**
 * Number of recorded (post-burn-in) states.
 *
 * # Safety
 * `chain` must be a live handle from `asim_chain_run`.
 */
uintptr_t asim_chain_len(const struct AsimChain *chain);

/**
 * Borrowed pointer to the recorded states; valid until the chain is
 * freed.
 *
 * # Safety
 * `chain` must be a live handle from `asim_chain_run`.
 */
const double *asim_chain_states(const struct AsimChain *chain);

/**
 * Accepted proposals over all steps, burn-in included.
 *
 * # Safety
 * `chain` must be a live handle from `asim_chain_run`.
 */
double asim_chain_acceptance_rate(const struct AsimChain *chain);

/**
 * Fraction of states inside [lo, hi], both ends inclusive.
 *
 * # Safety
 * `chain` must be a live handle; `out` a valid pointer.
 */
enum AsimStatus asim_chain_band_probability(const struct AsimChain *chain,
                                            double lo,
                                            double hi,
                                            double *out);

/**
 * # Safety
 * `chain` must be a handle from `asim_chain_run`, not yet freed.
 */
void asim_chain_free(struct AsimChain *chain);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* AUCTIONSIM_H */
