#pragma once

#include <cstddef>

// Function table behind the dispatched kernel entry points. Two instances
// exist (scalar, avx2); dispatch.cpp owns the active pointer.

namespace ssrec::kernels::detail {

struct KernelTable {
  void (*vexp)(size_t, const double*, double*);
  void (*discretize_real)(size_t, double, const double*, double*, double*);
  void (*discretize_cplx)(size_t, double, const double*, const double*, double*, double*, double*,
                          double*);
  void (*scan_sequential)(size_t, size_t, const double*, const double*, const double*, double*);
  void (*scan_parallel)(size_t, size_t, const double*, const double*, const double*, double*);
  void (*scan_sequential_cplx)(size_t, size_t, const double*, const double*, const double*,
                               const double*, const double*, const double*, double*, double*);
  void (*scan_parallel_cplx)(size_t, size_t, const double*, const double*, const double*,
                             const double*, const double*, const double*, double*, double*);
  void (*layer_norm)(size_t, const double*, const double*, const double*, double, double*,
                     double*, double*);
  void (*layer_norm_bwd)(size_t, const double*, const double*, double, double, const double*,
                         double*, double*, double*);
  double (*softmax_xent)(size_t, const double*, size_t, double*);
  double (*dot)(size_t, const double*, const double*);
  void (*axpy)(size_t, double, const double*, double*);
  void (*gemv)(size_t, size_t, const double*, const double*, double*, bool);
  void (*gemv_t)(size_t, size_t, const double*, const double*, double*, bool);
  void (*ger)(size_t, size_t, double, const double*, const double*, double*);
  void (*adam_step)(size_t, double*, const double*, double*, double*, double, double, double,
                    double, double, double);
};

const KernelTable& scalar_table();
// Null when this build or CPU cannot run AVX2.
const KernelTable* avx2_table();

}  // namespace ssrec::kernels::detail
