#ifndef VARITREE_H
#define VARITREE_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Result code of every fallible call.
typedef enum VtStatus {
  VT_STATUS_OK = 0,
  VT_STATUS_NULL_POINTER = 1,
  VT_STATUS_INVALID_ARGUMENT = 2,
  VT_STATUS_INVALID_DATA = 3,
  VT_STATUS_NUMERICAL = 4,
  VT_STATUS_IO = 5,
  VT_STATUS_OUT_OF_RANGE = 6,
  VT_STATUS_PANIC = 7,
} VtStatus;

// A polyline in R^n.
typedef struct VtCurve VtCurve;

// A tree reconstructed from a similarity matrix.
typedef struct VtInferred VtInferred;

// A square similarity matrix over named nodes.
typedef struct VtMatrix VtMatrix;

// A rooted tree embedded in R^n with polyline edges.
typedef struct VtTree VtTree;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failed call on this thread, or null if none failed.
// The pointer stays valid until the next failing call on the same thread.
const char *vt_last_error_message(void);

// Library version as a static NUL-terminated string.
const char *vt_version(void);

// Releases a string returned by this library.
//
// # Safety
// `s` is null or a string from this library not yet freed.
void vt_string_free(char *s);

// Builds a curve from `n_points` row-major points of dimension `dim`.
//
// # Safety
// `points` holds `dim * n_points` doubles; `out_curve` is writable.
enum VtStatus vt_curve_new(size_t dim,
                           const double *points,
                           size_t n_points,
                           struct VtCurve **out_curve);

// # Safety
// `curve` is null or a live handle.
void vt_curve_free(struct VtCurve *curve);

// # Safety
// `curve` is a live handle; `out_len` is writable.
enum VtStatus vt_curve_arc_length(const struct VtCurve *curve, double *out_len);

// Kernel inner product of the varifolds of two curves.
//
// # Safety
// `a` and `b` are live handles; `out_value` is writable.
enum VtStatus vt_varifold_inner(const struct VtCurve *a,
                                const struct VtCurve *b,
                                double sigma_x,
                                double sigma_t,
                                double *out_value);

// Squared varifold distance between two curves.
//
// # Safety
// `a` and `b` are live handles; `out_value` is writable.
enum VtStatus vt_varifold_distance_sq(const struct VtCurve *a,
                                      const struct VtCurve *b,
                                      double sigma_x,
                                      double sigma_t,
                                      double *out_value);

// Random rooted tree with straight polyline edges, using the default
// embedding parameters. Deterministic given `seed`.
//
// # Safety
// `out_tree` is writable.
enum VtStatus vt_tree_generate(size_t nodes,
                               size_t dim,
                               size_t max_children,
                               uint64_t seed,
                               struct VtTree **out_tree);

// Parses a tree from its JSON form.
//
// # Safety
// `json` is a NUL-terminated string; `out_tree` is writable.
enum VtStatus vt_tree_from_json(const char *json, struct VtTree **out_tree);

// Serializes a tree to JSON. Release the string with [`vt_string_free`].
//
// # Safety
// `tree` is a live handle; `out_json` is writable.
enum VtStatus vt_tree_to_json(const struct VtTree *tree, char **out_json);

// # Safety
// `tree` is a live handle; `out_count` is writable.
enum VtStatus vt_tree_node_count(const struct VtTree *tree, size_t *out_count);

// Writes the parent of each node into `parents` (length `len`, at least
// the node count); the root gets -1.
//
// # Safety
// `tree` is a live handle; `parents` holds `len` writable slots.
enum VtStatus vt_tree_parents(const struct VtTree *tree, int64_t *parents, size_t len);

// # Safety
// `tree` is null or a live handle.
void vt_tree_free(struct VtTree *tree);

// Node similarity matrix of an embedded tree: squared varifold distances
// between root-to-node path curves. `threads == 1` runs the sequential
// reference path; any other value uses the global thread pool. Both give
// identical results.
//
// # Safety
// `tree` is a live handle; `out_matrix` is writable.
enum VtStatus vt_delta_matrix(const struct VtTree *tree,
                              double sigma_x,
                              double sigma_t,
                              size_t threads,
                              struct VtMatrix **out_matrix);

// Wraps `n * n` row-major values as a similarity matrix over nodes named
// `0 .. n-1`. The values must be finite, symmetric and nonnegative with a
// zero diagonal.
//
// # Safety
// `values` holds `n * n` doubles; `out_matrix` is writable.
enum VtStatus vt_matrix_from_values(size_t n, const double *values, struct VtMatrix **out_matrix);

// # Safety
// `matrix` is a live handle; `out_size` is writable.
enum VtStatus vt_matrix_size(const struct VtMatrix *matrix, size_t *out_size);

// # Safety
// `matrix` is a live handle; `out_value` is writable.
enum VtStatus vt_matrix_get(const struct VtMatrix *matrix, size_t i, size_t j, double *out_value);

// Copies the matrix row-major into `buf`, which holds `len >= n * n`
// doubles.
//
// # Safety
// `matrix` is a live handle; `buf` holds `len` writable doubles.
enum VtStatus vt_matrix_copy(const struct VtMatrix *matrix, double *buf, size_t len);

// # Safety
// `matrix` is null or a live handle.
void vt_matrix_free(struct VtMatrix *matrix);

// Minimum spanning tree of the matrix, rooted at node index `root`.
//
// # Safety
// `matrix` is a live handle; `out_tree` is writable.
enum VtStatus vt_reconstruct(const struct VtMatrix *matrix,
                             size_t root,
                             struct VtInferred **out_tree);

// # Safety
// `tree` is a live handle; `out_count` is writable.
enum VtStatus vt_inferred_node_count(const struct VtInferred *tree, size_t *out_count);

// Writes the parent of each node into `parents`; the root gets -1.
//
// # Safety
// `tree` is a live handle; `parents` holds `len` writable slots.
enum VtStatus vt_inferred_parent(const struct VtInferred *tree, int64_t *parents, size_t len);

// Compares an inferred tree with the topology of an embedded tree whose
// nodes are indexed the same way. `relaxed != 0` ignores node labels.
//
// # Safety
// Both handles are live; `out_equal` is writable.
enum VtStatus vt_inferred_matches(const struct VtInferred *inferred,
                                  const struct VtTree *truth,
                                  int32_t relaxed,
                                  bool *out_equal);

// # Safety
// `tree` is null or a live handle.
void vt_inferred_free(struct VtInferred *tree);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* VARITREE_H */
