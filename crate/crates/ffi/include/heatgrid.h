#ifndef HEATGRID_H
#define HEATGRID_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result codes. Values 2 to 5 match the command-line exit codes.
 */
typedef enum HgStatus {
  HG_STATUS_OK = 0,
  /**
   * Null pointer, bad UTF-8 or an out-of-range enum value.
   */
  HG_STATUS_INVALID_ARGUMENT = 1,
  /**
   * Scenario, file or parameter error.
   */
  HG_STATUS_SCHEMA = 2,
  HG_STATUS_VALIDATION = 3,
  HG_STATUS_NON_CONVERGENCE = 4,
  HG_STATUS_NON_FINITE = 5,
  /**
   * A panic was caught at the boundary.
   */
  HG_STATUS_INTERNAL = 6,
} HgStatus;

/**
 * One simulated month.
 */
typedef struct HgRun HgRun;

/**
 * A loaded, validated scenario.
 */
typedef struct HgScenario HgScenario;

/**
 * Energy totals of a run [kWh].
 */
typedef struct HgLedger {
  double fuel_ng;
  double fuel_bm;
  double fuel_h2;
  double heat_chp;
  double heat_boiler;
  double heat_hp;
  double heat_hp_covered;
  double heat_delivered;
  double network_loss;
  double elec_gen;
  double elec_cons;
  double elec_sold;
  double elec_bought;
} HgLedger;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or null. The pointer
 * stays valid until the next call into this library from the same thread.
 */
const char *hg_last_error_message(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *hg_version(void);

/**
 * Loads and validates a scenario file.
 *
 * # Safety
 * `path` must be a NUL-terminated string and `out` a valid pointer.
 */
enum HgStatus hg_scenario_load(const char *path, struct HgScenario **out);

/**
 * # Safety
 * `scenario` must come from [`hg_scenario_load`] and not be used afterwards.
 */
void hg_scenario_free(struct HgScenario *scenario);

/**
 * Number of building records.
 *
 * # Safety
 * `scenario` must be a live handle or null.
 */
size_t hg_scenario_building_count(const struct HgScenario *scenario);

/**
 * Limits runs to the first `days` days of the month; 0 restores full months.
 *
 * # Safety
 * `scenario` must be a live handle.
 */
enum HgStatus hg_scenario_set_days(struct HgScenario *scenario, uint32_t days);

/**
 * Simulates `variant` (1 to 4) over `month` (1 to 12).
 *
 * # Safety
 * `scenario` must be a live handle and `out` a valid pointer.
 */
enum HgStatus hg_run(const struct HgScenario *scenario,
                     uint32_t variant,
                     uint32_t month,
                     struct HgRun **out);

/**
 * # Safety
 * `run` must come from [`hg_run`] and not be used afterwards.
 */
void hg_run_free(struct HgRun *run);

/**
 * # Safety
 * `run` must be a live handle and `out` a valid pointer.
 */
enum HgStatus hg_run_ledger(const struct HgRun *run, struct HgLedger *out);

/**
 * CO2 equivalent of the run [t] with the scenario's emission factors.
 *
 * # Safety
 * `run` must be a live handle and `out` a valid pointer.
 */
enum HgStatus hg_run_emissions(const struct HgRun *run, double *out);

/**
 * Macro steps taken, spin-up included.
 *
 * # Safety
 * `run` must be a live handle or null.
 */
size_t hg_run_steps(const struct HgRun *run);

/**
 * Annual space-heating demand [kWh/a] from design power density [W/m2],
 * area [m2], simultaneity factor and full-load hours.
 */
double hg_annual_heat_demand(double q_h, double area, double g, double full_load_hours);

/**
 * Capital recovery factor for discount factor `q` over `lifetime` years;
 * NaN outside q > 1, lifetime >= 1.
 */
double hg_annuity_factor(double q, uint32_t lifetime);

/**
 * Heat-pump COP for source and sink temperatures [degC].
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum HgStatus hg_hp_cop(double t_source, double t_sink, double carnot_eta, double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* HEATGRID_H */
