#ifndef FROBTOWER_H
#define FROBTOWER_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Ring selector.
 */
typedef enum FtRing {
  FT_RING_GM = 0,
  FT_RING_DISC0 = 1,
  FT_RING_DISC_INF = 2,
} FtRing;

/**
 * Side selector for the special test.
 */
typedef enum FtSide {
  FT_SIDE_RSI = 0,
  FT_SIDE_RS0 = 1,
} FtSide;

/**
 * Status codes.
 */
typedef enum FtStatus {
  FT_STATUS_OK = 0,
  FT_STATUS_NULL_POINTER = 1,
  FT_STATUS_INVALID_UTF8 = 2,
  FT_STATUS_PARSE = 3,
  FT_STATUS_VALIDATION = 4,
  FT_STATUS_PRECISION = 5,
  FT_STATUS_FAILED = 6,
  FT_STATUS_PANIC = 7,
} FtStatus;

typedef struct FtClass FtClass;

typedef struct FtTower FtTower;

typedef struct FtWitness FtWitness;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failure on this thread, or null. Owned by the library.
 */
const char *ft_last_error(void);

/**
 * # Safety
 * `s` must come from this library or be null.
 */
void ft_string_free(char *s);

/**
 * # Safety
 * `json` must be a NUL-terminated string; `out` a valid pointer.
 */
enum FtStatus ft_tower_from_json(const char *json, struct FtTower **out);

/**
 * # Safety
 * `json` must be a NUL-terminated string; `out` a valid pointer.
 */
enum FtStatus ft_class_from_json(const char *json, struct FtClass **out);

/**
 * # Safety
 * `json` must be a NUL-terminated string; `out` a valid pointer.
 */
enum FtStatus ft_witness_from_json(const char *json, struct FtWitness **out);

/**
 * # Safety
 * `t` must be a live handle or null.
 */
void ft_tower_free(struct FtTower *t);

/**
 * # Safety
 * `c` must be a live handle or null.
 */
void ft_class_free(struct FtClass *c);

/**
 * # Safety
 * `w` must be a live handle or null.
 */
void ft_witness_free(struct FtWitness *w);

/**
 * # Safety
 * `t` must be a live handle; `out` a valid pointer.
 */
enum FtStatus ft_tower_to_json(const struct FtTower *t, char **out);

/**
 * # Safety
 * `c` must be a live handle; `out` a valid pointer.
 */
enum FtStatus ft_class_to_json(const struct FtClass *c, char **out);

/**
 * Class of a rank-one tower.
 *
 * # Safety
 * `t` must be a live handle; `out` a valid pointer.
 */
enum FtStatus ft_classify(const struct FtTower *t, char **out);

/**
 * Triviality decision with witness or certificate.
 *
 * # Safety
 * `c` must be a live handle; `out` a valid pointer.
 */
enum FtStatus ft_decide(const struct FtClass *c,
                        enum FtRing ring,
                        size_t max_depth,
                        int64_t precision,
                        char **out);

/**
 * # Safety
 * `t` must be a live handle; `out` a valid pointer.
 */
enum FtStatus ft_is_special(const struct FtTower *t,
                            enum FtSide side,
                            size_t max_depth,
                            int64_t precision,
                            char **out);

/**
 * Lifts a triangular tower over `k((t))`; `out` receives the global tower
 * and `witness` the local gauge to its restriction.
 *
 * # Safety
 * `t` must be a live handle; `out` and `witness` valid pointers.
 */
enum FtStatus ft_lift(const struct FtTower *t,
                      size_t max_depth,
                      int64_t precision,
                      struct FtTower **out,
                      struct FtWitness **witness);

/**
 * Restriction of a tower over gm to the disc at `0` or at `∞`.
 *
 * # Safety
 * `t` must be a live handle; `out` a valid pointer.
 */
enum FtStatus ft_restrict(const struct FtTower *t,
                          bool at_infinity,
                          int64_t precision,
                          struct FtTower **out);

/**
 * Sets `ok` to whether `w` carries `a` to `b` at all explicit levels.
 *
 * # Safety
 * Handles must be live; `ok` a valid pointer.
 */
enum FtStatus ft_verify(const struct FtTower *a,
                        const struct FtTower *b,
                        const struct FtWitness *w,
                        int64_t precision,
                        bool *ok);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* FROBTOWER_H */
