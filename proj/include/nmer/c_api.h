/* C-compatible surface for foreign-function bindings.
 *
 * Every function returning int yields 0 on success and -1 on failure; the
 * failure message is then available from nmer_ffi_last_error() on the same
 * thread. A handle must not be used from two threads at once.
 */
#ifndef NMER_C_API_H_
#define NMER_C_API_H_

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

#define NMER_FFI_VERSION "1.0.0"

typedef struct nmer_handle nmer_handle;

/* Semantic version of this symbol surface. */
const char* nmer_ffi_version(void);

/* Message of the most recent failure on this thread ("" if none). */
const char* nmer_ffi_last_error(void);

/* strategy_config holds `key = value` lines using the strategy.* and per.*
 * keys of the run configuration format; NULL or "" selects the defaults. */
int nmer_ffi_create(size_t state_dim, size_t action_dim, const double* action_low,
                    const double* action_high, size_t capacity, const char* strategy_config,
                    nmer_handle** out);
void nmer_ffi_destroy(nmer_handle* handle);

/* Echo of the handle's configuration. */
int nmer_ffi_layout(const nmer_handle* handle, size_t* state_dim, size_t* action_dim,
                    size_t* flat_dim);
int nmer_ffi_strategy(const nmer_handle* handle, const char** kind, size_t* k);
int nmer_ffi_size(const nmer_handle* handle, size_t* count);

int nmer_ffi_insert(nmer_handle* handle, const double* s, size_t s_len, const double* a,
                    size_t a_len, double r, const double* s2, size_t s2_len, int done,
                    uint64_t episode_id, uint64_t step_idx);

/* Samples n items with a generator seeded by `seed` (std::mt19937_64(seed)).
 * Outputs are caller-allocated contiguous arrays: flats holds n * flat_dim
 * doubles row-major, the others n entries each. */
int nmer_ffi_sample(const nmer_handle* handle, size_t n, uint64_t seed, uint64_t global_step,
                    double* flats, uint8_t* dones, double* weights, size_t* slots);

int nmer_ffi_update_priorities(nmer_handle* handle, const size_t* slots, const double* td_errors,
                               size_t n);

/* Writes the buffer dump format to path. */
int nmer_ffi_dump(const nmer_handle* handle, const char* path);

#ifdef __cplusplus
}
#endif

#endif /* NMER_C_API_H_ */
