#ifndef SOCLAB_H
#define SOCLAB_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum {
  SOCLAB_BOUNDARY_OPEN = 0,
  SOCLAB_BOUNDARY_CLOSED = 1,
} SoclabBoundary;

typedef enum {
  SOCLAB_REGIME_SDIDT = 0,
  SOCLAB_REGIME_INTERMEDIATE = 1,
  SOCLAB_REGIME_LAMINAR = 2,
} SoclabRegime;

typedef enum {
  SOCLAB_SITE_POLICY_CORNER = 0,
  SOCLAB_SITE_POLICY_TOP_REGION = 1,
  SOCLAB_SITE_POLICY_UNIFORM = 2,
} SoclabSitePolicy;

typedef enum {
  SOCLAB_STATUS_OK = 0,
  SOCLAB_STATUS_NULL_POINTER = 1,
  SOCLAB_STATUS_INVALID_ARGUMENT = 2,
  SOCLAB_STATUS_CONFIG = 3,
  SOCLAB_STATUS_DOMAIN = 4,
  SOCLAB_STATUS_ANALYSIS = 5,
  SOCLAB_STATUS_SIMULATION = 6,
  SOCLAB_STATUS_IO = 7,
  SOCLAB_STATUS_PANIC = 8,
} SoclabStatus;

/**
 * Opaque lattice handle.
 */
typedef struct SoclabLattice SoclabLattice;

/**
 * Opaque simulation handle: a lattice with its drive and RNG.
 */
typedef struct SoclabSimulation SoclabSimulation;

typedef struct {
  SoclabBoundary north;
  SoclabBoundary east;
  SoclabBoundary south;
  SoclabBoundary west;
} SoclabBoundaries;

typedef struct {
  uint64_t size;
  uint64_t area;
  uint64_t duration;
  uint64_t dissipated;
  /**
   * False when the avalanche had no driven cell.
   */
  bool has_trigger;
  size_t trigger_row;
  size_t trigger_col;
  uint64_t timestep;
} SoclabAvalanche;

typedef struct {
  uint64_t grains_in;
  uint64_t grains_out;
  uint64_t stored;
  uint64_t timesteps;
} SoclabLedger;

typedef struct {
  uint64_t grains_per_event;
  SoclabSitePolicy site_policy;
  /**
   * Block size for `TOP_REGION`; ignored otherwise.
   */
  size_t extent;
  double event_probability;
} SoclabDrive;

typedef struct {
  double gamma;
  double std_error;
  uint64_t s_min;
  uint64_t s_max;
  uint64_t n_tail;
  double ks_distance;
} SoclabFit;

typedef struct {
  double reynolds;
  double eta;
  double l0;
} SoclabK41;

typedef struct {
  double r_a;
  double r_a_predicted;
  int64_t beta_n_numer;
  int64_t beta_n_denom;
  double n_estimate;
} SoclabAvalancheRelations;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failure on this thread, or null. Valid until the
 * next failing call on the same thread.
 */
const char *soclab_last_error_message(void);

/**
 * Static, NUL-terminated version string.
 */
const char *soclab_version(void);

/**
 * Creates a `side × side` lattice with all heights zero.
 *
 * # Safety
 * `out` must be valid for writes.
 */
SoclabStatus soclab_lattice_new(size_t side,
                                uint64_t threshold,
                                SoclabBoundaries boundaries,
                                SoclabLattice **out);

/**
 * # Safety
 * `lattice` must come from [`soclab_lattice_new`] and not be freed yet; null is ignored.
 */
void soclab_lattice_free(SoclabLattice *lattice);

/**
 * Overwrites one height; the ledger books the difference.
 *
 * # Safety
 * `lattice` must be a live handle.
 */
SoclabStatus soclab_lattice_set_height(SoclabLattice *lattice,
                                       size_t row,
                                       size_t col,
                                       uint64_t height);

/**
 * Adds grains from outside without relaxing.
 *
 * # Safety
 * `lattice` must be a live handle.
 */
SoclabStatus soclab_lattice_add_grains(SoclabLattice *lattice,
                                       size_t row,
                                       size_t col,
                                       uint64_t grains);

/**
 * # Safety
 * `lattice` must be a live handle and `out` valid for writes.
 */
SoclabStatus soclab_lattice_height(const SoclabLattice *lattice,
                                   size_t row,
                                   size_t col,
                                   uint64_t *out);

/**
 * Copies the row-major height field into `heights`, which holds `len` values.
 *
 * # Safety
 * `lattice` must be a live handle and `heights` valid for `len` writes.
 */
SoclabStatus soclab_lattice_heights(const SoclabLattice *lattice, uint64_t *heights, size_t len);

/**
 * Topples until every height is below threshold.
 *
 * # Safety
 * `lattice` must be a live handle and `out` valid for writes.
 */
SoclabStatus soclab_lattice_relax(SoclabLattice *lattice, SoclabAvalanche *out);

/**
 * # Safety
 * `lattice` must be a live handle and `out` valid for writes.
 */
SoclabStatus soclab_lattice_ledger(const SoclabLattice *lattice, SoclabLedger *out);

/**
 * Creates a driven simulation on a fresh lattice.
 *
 * # Safety
 * `drive` must be readable and `out` valid for writes.
 */
SoclabStatus soclab_simulation_new(size_t side,
                                   uint64_t threshold,
                                   SoclabBoundaries boundaries,
                                   const SoclabDrive *drive,
                                   uint64_t seed,
                                   SoclabSimulation **out);

/**
 * # Safety
 * `sim` must come from [`soclab_simulation_new`] and not be freed yet; null is ignored.
 */
void soclab_simulation_free(SoclabSimulation *sim);

/**
 * One timestep: drive, relax, advance the clock. `*had_event` is false
 * when no grains were added, in which case `out` is left untouched.
 *
 * # Safety
 * `sim` must be a live handle; `out` and `had_event` valid for writes.
 */
SoclabStatus soclab_simulation_step(SoclabSimulation *sim, SoclabAvalanche *out, bool *had_event);

/**
 * # Safety
 * `sim` must be a live handle and `out` valid for writes.
 */
SoclabStatus soclab_simulation_ledger(const SoclabSimulation *sim, SoclabLedger *out);

/**
 * Discrete power-law MLE on `[s_min, s_max]`. `s_min = 0` picks the cutoff
 * by KS minimization; `s_max = 0` means the largest sample.
 *
 * # Safety
 * `sizes` must hold `len` readable values; `out` valid for writes.
 */
SoclabStatus soclab_fit_power_law(const uint64_t *sizes,
                                  size_t len,
                                  uint64_t s_min,
                                  uint64_t s_max,
                                  SoclabFit *out);

/**
 * Dimensionless groups of a variable table given in the text table format.
 * `*out` receives one group per line; release it with [`soclab_string_free`].
 *
 * # Safety
 * `table` must be a NUL-terminated string; `out` valid for writes.
 */
SoclabStatus soclab_pi_groups(const char *table, char **out);

/**
 * # Safety
 * `s` must come from this library and not be freed yet; null is ignored.
 */
void soclab_string_free(char *s);

/**
 * # Safety
 * `out` must be valid for writes.
 */
SoclabStatus soclab_k41_relations(double u, double l0, double nu, SoclabK41 *out);

/**
 * `alpha = alpha_numer / alpha_denom`.
 *
 * # Safety
 * `out` must be valid for writes.
 */
SoclabStatus soclab_avalanche_relations(double h,
                                        double eps,
                                        double l0_over_dl,
                                        uint32_t dimension,
                                        int64_t alpha_numer,
                                        int64_t alpha_denom,
                                        SoclabAvalancheRelations *out);

/**
 * # Safety
 * `out` must be valid for writes.
 */
SoclabStatus soclab_classify_drive_regime(double h_dt,
                                          double g_dl,
                                          double l0_over_dl,
                                          uint32_t dimension,
                                          double margin,
                                          SoclabRegime *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SOCLAB_H */
