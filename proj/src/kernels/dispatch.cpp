#include <atomic>
#include <cstring>
#include <string>

#include "ssrec/common.hpp"
#include "ssrec/kernels.hpp"
#include "table.hpp"

namespace ssrec::kernels {
namespace {

using detail::KernelTable;

bool detect_avx2() {
#if (defined(__x86_64__) || defined(_M_X64)) && defined(__GNUC__)
  return detail::avx2_table() != nullptr && __builtin_cpu_supports("avx2") &&
         __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

struct Dispatch {
  const KernelTable* table;
  Isa isa;
  Dispatch() {
    if (detect_avx2()) {
      table = detail::avx2_table();
      isa = Isa::Avx2;
    } else {
      table = &detail::scalar_table();
      isa = Isa::Scalar;
    }
  }
};

Dispatch& dispatch() {
  static Dispatch d;
  return d;
}

}  // namespace

bool avx2_supported() { return detect_avx2(); }

Isa active_isa() { return dispatch().isa; }

void set_isa(Isa isa) {
  if (isa == Isa::Avx2) {
    if (!detect_avx2()) throw NumericError("avx2 kernels unavailable on this cpu/build");
    dispatch().table = detail::avx2_table();
  } else {
    dispatch().table = &detail::scalar_table();
  }
  dispatch().isa = isa;
}

void set_isa(const char* name) {
  if (std::strcmp(name, "scalar") == 0) {
    set_isa(Isa::Scalar);
  } else if (std::strcmp(name, "avx2") == 0) {
    set_isa(Isa::Avx2);
  } else if (std::strcmp(name, "auto") == 0) {
    set_isa(detect_avx2() ? Isa::Avx2 : Isa::Scalar);
  } else {
    throw ConfigError(std::string("unknown simd mode '") + name + "' (scalar|avx2|auto)");
  }
}

const char* isa_name(Isa isa) { return isa == Isa::Avx2 ? "avx2" : "scalar"; }

void vexp(size_t n, const double* x, double* y) { dispatch().table->vexp(n, x, y); }

void discretize_real(size_t n, double delta, const double* a, double* abar, double* gamma) {
  dispatch().table->discretize_real(n, delta, a, abar, gamma);
}

void discretize_cplx(size_t n, double delta, const double* lre, const double* lim, double* are,
                     double* aim, double* gre, double* gim) {
  dispatch().table->discretize_cplx(n, delta, lre, lim, are, aim, gre, gim);
}

void scan_sequential(size_t L, size_t S, const double* A, const double* b, const double* h0,
                     double* h) {
  dispatch().table->scan_sequential(L, S, A, b, h0, h);
}

void scan_parallel(size_t L, size_t S, const double* A, const double* b, const double* h0,
                   double* h) {
  dispatch().table->scan_parallel(L, S, A, b, h0, h);
}

void scan_sequential_cplx(size_t L, size_t S, const double* Are, const double* Aim,
                          const double* bre, const double* bim, const double* h0re,
                          const double* h0im, double* hre, double* him) {
  dispatch().table->scan_sequential_cplx(L, S, Are, Aim, bre, bim, h0re, h0im, hre, him);
}

void scan_parallel_cplx(size_t L, size_t S, const double* Are, const double* Aim,
                        const double* bre, const double* bim, const double* h0re,
                        const double* h0im, double* hre, double* him) {
  dispatch().table->scan_parallel_cplx(L, S, Are, Aim, bre, bim, h0re, h0im, hre, him);
}

void layer_norm(size_t D, const double* x, const double* gamma, const double* beta, double eps,
                double* y, double* mean_out, double* rstd_out) {
  dispatch().table->layer_norm(D, x, gamma, beta, eps, y, mean_out, rstd_out);
}

void layer_norm_bwd(size_t D, const double* x, const double* gamma, double mean, double rstd,
                    const double* dy, double* dx, double* dgamma, double* dbeta) {
  dispatch().table->layer_norm_bwd(D, x, gamma, mean, rstd, dy, dx, dgamma, dbeta);
}

double softmax_xent(size_t N, const double* logits, size_t target, double* grad) {
  if (target >= N) throw NumericError("softmax_xent: target index out of range");
  return dispatch().table->softmax_xent(N, logits, target, grad);
}

double dot(size_t n, const double* x, const double* y) { return dispatch().table->dot(n, x, y); }

void axpy(size_t n, double a, const double* x, double* y) {
  dispatch().table->axpy(n, a, x, y);
}

void gemv(size_t M, size_t N, const double* W, const double* x, double* y, bool accumulate) {
  dispatch().table->gemv(M, N, W, x, y, accumulate);
}

void gemv_t(size_t M, size_t N, const double* W, const double* x, double* y, bool accumulate) {
  dispatch().table->gemv_t(M, N, W, x, y, accumulate);
}

void ger(size_t M, size_t N, double alpha, const double* x, const double* y, double* W) {
  dispatch().table->ger(M, N, alpha, x, y, W);
}

void adam_step(size_t n, double* p, const double* g, double* m, double* v, double lr,
               double beta1, double beta2, double eps, double inv_bias1, double inv_bias2) {
  dispatch().table->adam_step(n, p, g, m, v, lr, beta1, beta2, eps, inv_bias1, inv_bias2);
}

}  // namespace ssrec::kernels
