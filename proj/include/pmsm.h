#ifndef PMSM_H
#define PMSM_H

/* C API of the eccentric-PMSM torque simulator. All entry points are
 * thread-safe; error messages are per-thread. Every function that can fail
 * returns a pmsm_status and leaves details in pmsm_last_error(). */

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

#define PMSM_VERSION "0.1.0"

typedef enum pmsm_status {
  PMSM_OK = 0,
  PMSM_ERR_INVALID_ARGUMENT = 1,
  PMSM_ERR_CONFIG = 2,
  PMSM_ERR_GEOMETRY = 3,
  PMSM_ERR_MESH = 4,
  PMSM_ERR_SOLVER = 5,
  PMSM_ERR_UQ = 6,
  PMSM_ERR_IO = 7,
  PMSM_ERR_UNKNOWN = 8
} pmsm_status;

const char* pmsm_version(void);

/* message of the last failure on the calling thread ("" if none) */
const char* pmsm_last_error(void);

/* Machine description plus its mesh at one refinement level. */
typedef struct pmsm_model pmsm_model;

/* harmonic_cutoff: highest harmonic entering the THD; -1 = all below
 * Nyquist. refinement halves the mesh spacing per level. */
pmsm_status pmsm_model_create(const char* config_path, int refinement,
                              int harmonic_cutoff, pmsm_model** out);
pmsm_status pmsm_model_create_from_json(const char* json_text, int refinement,
                                        int harmonic_cutoff, pmsm_model** out);
void pmsm_model_free(pmsm_model* m);

/* One full-period simulation at rotor displacement r0 (m, signed) along
 * direction theta0 (rad). Output pointers may be NULL. */
pmsm_status pmsm_eval_sample(const pmsm_model* m, double r0, double theta0,
                             double* out_tau_mean, double* out_thd);

/* Batch run writing every artifact below out_dir. */
typedef struct pmsm_run_options {
  const char* config_path;
  const char* mode; /* nominal | sweep | uq-mc | uq-gpc | sensitivity | compare */
  const char* out_dir;
  uint64_t seed;
  int refinement;
  int jobs;          /* worker threads; outputs are independent of this */
  int n_mc;          /* uq-mc / compare sample count */
  int nodes_per_dim; /* uq-gpc / compare collocation nodes per input */
  int n_base;        /* sensitivity base samples (4 runs each) */
  int harmonic_cutoff;
  const double* eps_sweep; /* NULL: default {0, 0.10, 0.25, 0.50} */
  size_t eps_sweep_len;
  int resume; /* nonzero: reuse cached sample results found in out_dir */
} pmsm_run_options;

/* fills every field with its default; config_path/mode/out_dir stay NULL */
void pmsm_run_options_init(pmsm_run_options* opt);

pmsm_status pmsm_run(const pmsm_run_options* opt);

#ifdef __cplusplus
}
#endif

#endif /* PMSM_H */
