#pragma once

#include <complex>
#include <cstddef>
#include <cstdint>

// Numeric core. Every array kernel exists as a scalar reference implementation
// and, on x86-64 with AVX2+FMA, a vector variant selected at runtime. The two
// are equivalence-tested; dispatch is process-global and fixed for a run, so
// results are reproducible on a given machine.
//
// Scan element semantics: an element (A, b) maps a state h to A*h + b.
// Composition "e1 then e2" is (A2*A1, A2*b1 + b2), which is associative.

namespace ssrec::kernels {

enum class Isa { Scalar, Avx2 };

bool avx2_supported();
Isa active_isa();
// Scalar always succeeds; Avx2 throws NumericError when unsupported.
void set_isa(Isa isa);
// "scalar" | "avx2" | "auto"
void set_isa(const char* name);
const char* isa_name(Isa isa);

// ---------------------------------------------------------------------------
// Scalar-pair discretization ops (exact contracts; not dispatched).
// ---------------------------------------------------------------------------

// Below this, (exp(z)-1)/z falls back to its analytic limit.
inline constexpr double kZohSwitch = 1e-8;

struct ZohCoef {
  std::complex<double> a_bar;  // exp(delta * lambda)
  std::complex<double> b_bar;  // (a_bar - 1)/lambda * b_tilde, limit delta*b_tilde
};
ZohCoef zoh_discretize_diagonal(std::complex<double> lambda, std::complex<double> b_tilde,
                                double delta);

struct ZohCoefReal {
  double a_bar;
  double b_bar;
};
ZohCoefReal selective_discretize(double a, double b_t, double delta_t);

double softplus(double x);
double sigmoid(double x);

// ---------------------------------------------------------------------------
// Dispatched array kernels (double unless noted).
// ---------------------------------------------------------------------------

// y[i] = exp(x[i])
void vexp(size_t n, const double* x, double* y);

// abar[i] = exp(delta*a[i]); gamma[i] = (abar[i]-1)/a[i] with small-arg limit delta.
void discretize_real(size_t n, double delta, const double* a, double* abar, double* gamma);

// Complex analogue on split planes; gamma is (exp(delta*lam)-1)/lam.
void discretize_cplx(size_t n, double delta, const double* lre, const double* lim,
                     double* are, double* aim, double* gre, double* gim);

// h[l] = A[l] (*) h[l-1] + b[l], planes row-major (L x S), elementwise over S.
void scan_sequential(size_t L, size_t S, const double* A, const double* b, const double* h0,
                     double* h);
// Work-efficient tree scan; identical contract, O(L) work, O(log L) span.
// Non-power-of-two lengths run as a sequence of power-of-two chunks.
void scan_parallel(size_t L, size_t S, const double* A, const double* b, const double* h0,
                   double* h);

void scan_sequential_cplx(size_t L, size_t S, const double* Are, const double* Aim,
                          const double* bre, const double* bim, const double* h0re,
                          const double* h0im, double* hre, double* him);
void scan_parallel_cplx(size_t L, size_t S, const double* Are, const double* Aim,
                        const double* bre, const double* bim, const double* h0re,
                        const double* h0im, double* hre, double* him);

// Narrow-precision instantiations (scalar only; used by equivalence suites).
void scan_sequential_f(size_t L, size_t S, const float* A, const float* b, const float* h0,
                       float* h);
void scan_parallel_f(size_t L, size_t S, const float* A, const float* b, const float* h0,
                     float* h);

// y = (x - mean)/sqrt(var + eps) * gamma + beta over a length-D vector.
// mean_out/rstd_out may be null; they feed the backward pass.
void layer_norm(size_t D, const double* x, const double* gamma, const double* beta, double eps,
                double* y, double* mean_out, double* rstd_out);
// dgamma/dbeta are accumulated (+=); dx is written.
void layer_norm_bwd(size_t D, const double* x, const double* gamma, double mean, double rstd,
                    const double* dy, double* dx, double* dgamma, double* dbeta);

// Numerically stable cross entropy; grad (softmax - onehot) written when non-null.
double softmax_xent(size_t N, const double* logits, size_t target, double* grad);

// Dense helpers. W is MxN row-major.
double dot(size_t n, const double* x, const double* y);
void axpy(size_t n, double a, const double* x, double* y);       // y += a*x
void gemv(size_t M, size_t N, const double* W, const double* x,  // y (+)= W x
          double* y, bool accumulate);
void gemv_t(size_t M, size_t N, const double* W, const double* x,  // y (+)= W^T x
            double* y, bool accumulate);
void ger(size_t M, size_t N, double alpha, const double* x, const double* y,
         double* W);  // W += alpha x y^T

// Adam with bias-corrected moments; inv_bias* = 1/(1 - beta^t).
void adam_step(size_t n, double* p, const double* g, double* m, double* v, double lr,
               double beta1, double beta2, double eps, double inv_bias1, double inv_bias2);

}  // namespace ssrec::kernels
