#ifndef EFFACTION_H
#define EFFACTION_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Result code of every fallible call.
typedef enum {
  EA_STATUS_OK = 0,
  EA_STATUS_NULL_POINTER = 1,
  EA_STATUS_INVALID_UTF8 = 2,
  EA_STATUS_PARSE_ERROR = 3,
  EA_STATUS_INVALID_PROBLEM = 4,
  EA_STATUS_INVALID_ARGUMENT = 5,
  EA_STATUS_COMPUTATION_FAILED = 6,
  // Trajectory left the domain or the valid table range; the partial
  // record is still returned.
  EA_STATUS_CLIPPED = 7,
  EA_STATUS_PANIC = 8,
} EaStatus;

typedef enum {
  EA_MODE_CLASSICAL = 0,
  EA_MODE_EFFECTIVE = 1,
} EaMode;

// Validated problem definition.
typedef struct EaProblem EaProblem;

// Tabulated effective coefficients over a uniform grid.
typedef struct EaTable EaTable;

// Recorded trajectory samples.
typedef struct EaTrajectory EaTrajectory;

// Self-consistent solution at one point.
typedef struct {
  double x;
  double omega_trial;
  double a2;
  double w;
  uint32_t iterations;
  double residual;
  int converged;
} EaPoint;

// One table row; unavailable values are NaN.
typedef struct {
  double x;
  double omega;
  double omega_trial;
  double a2;
  double v;
  double w;
  double m_eff;
  int valid;
} EaTableRow;

// One trajectory sample; `r` is NaN where the adiabaticity ratio is
// undefined.
typedef struct {
  double t;
  double x;
  double v;
  double e;
  double r;
} EaSample;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Library version as a static NUL-terminated string.
const char *ea_version(void);

// Copy the calling thread's last error message into `buf` (always
// NUL-terminated when `len > 0`). Returns the full message length in
// bytes, excluding the terminator.
//
// # Safety
// `buf` must be null or point to `len` writable bytes.
size_t ea_last_error_message(char *buf, size_t len);

// Parse and validate a problem. `mass` and `potential` are expressions in
// `x`; `kt = 0` selects zero temperature.
//
// # Safety
// String arguments must be null or NUL-terminated; `out` must be null or
// writable.
EaStatus ea_problem_new(const char *mass,
                        const char *potential,
                        double hbar,
                        double kt,
                        double x_lo,
                        double x_hi,
                        EaProblem **out);

// # Safety
// `p` must be null or a handle from [`ea_problem_new`] not yet freed.
void ea_problem_free(EaProblem *p);

// Solve the trial frequency at `x` with default solver settings.
//
// # Safety
// `p` must be a live problem handle; `out` must be writable.
EaStatus ea_solve(const EaProblem *p, double x, EaPoint *out);

// One-loop potential `(ħ/2)·√(V''/m)` at `x`.
//
// # Safety
// `p` must be a live problem handle; `out` must be writable.
EaStatus ea_one_loop_potential(const EaProblem *p, double x, double *out);

// Quantum correction to the kinetic coefficient at `x`.
//
// # Safety
// `p` must be a live problem handle; `out` must be writable.
EaStatus ea_kinetic_correction(const EaProblem *p, double x, double *out);

// Variational potential `W(x)` at the problem's temperature.
//
// # Safety
// `p` must be a live problem handle; `out` must be writable.
EaStatus ea_variational_potential(const EaProblem *p, double x, double *out);

// Tabulate on `points` uniform grid points (at least 2).
//
// # Safety
// `p` must be a live problem handle; `out` must be writable.
EaStatus ea_table_new(const EaProblem *p, size_t points, EaTable **out);

// # Safety
// `t` must be a live table handle.
size_t ea_table_len(const EaTable *t);

// # Safety
// `t` must be a live table handle; `out` must be writable.
EaStatus ea_table_row(const EaTable *t, size_t i, EaTableRow *out);

// # Safety
// `t` must be null or a table handle not yet freed.
void ea_table_free(EaTable *t);

// Integrate from `(x0, v0)` to `t_max` with default tolerances. `mode` is
// an [`EaMode`] value. On [`EaStatus::Clipped`] `out` still receives the
// partial record.
//
// # Safety
// `p` must be a live problem handle; `out` must be writable.
EaStatus ea_trajectory_new(const EaProblem *p,
                           int mode,
                           double x0,
                           double v0,
                           double t_max,
                           EaTrajectory **out);

// # Safety
// `t` must be a live trajectory handle.
size_t ea_trajectory_len(const EaTrajectory *t);

// # Safety
// `t` must be a live trajectory handle; `out` must be writable.
EaStatus ea_trajectory_sample(const EaTrajectory *t, size_t i, EaSample *out);

// Largest relative energy drift over the record.
//
// # Safety
// `t` must be a live trajectory handle.
double ea_trajectory_energy_drift(const EaTrajectory *t);

// # Safety
// `t` must be null or a trajectory handle not yet freed.
void ea_trajectory_free(EaTrajectory *t);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* EFFACTION_H */
