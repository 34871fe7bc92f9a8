#include <cmath>
#include <complex>

#include "ssrec/common.hpp"
#include "ssrec/kernels.hpp"
#include "scan_driver.hpp"
#include "table.hpp"

// Reference implementations. These define the semantics; the AVX2 variants
// are equivalence-tested against them.

namespace ssrec::kernels {

ZohCoef zoh_discretize_diagonal(std::complex<double> lambda, std::complex<double> b_tilde,
                                double delta) {
  if (!std::isfinite(lambda.real()) || !std::isfinite(lambda.imag()) ||
      !std::isfinite(b_tilde.real()) || !std::isfinite(b_tilde.imag()) ||
      !std::isfinite(delta) || delta < 0.0)
    throw NumericError("zoh_discretize_diagonal: non-finite or negative-step input");
  const std::complex<double> z = delta * lambda;
  // split-form exp keeps the real-argument case bit-identical to std::exp
  const double er = std::exp(z.real());
  const std::complex<double> a_bar(er * std::cos(z.imag()), er * std::sin(z.imag()));
  std::complex<double> b_bar;
  if (std::abs(z) < kZohSwitch) {
    b_bar = delta * b_tilde;  // analytic limit of (e^z - 1)/lambda
  } else {
    b_bar = (a_bar - 1.0) / lambda * b_tilde;
  }
  return {a_bar, b_bar};
}

ZohCoefReal selective_discretize(double a, double b_t, double delta_t) {
  if (!std::isfinite(a) || !std::isfinite(b_t) || !std::isfinite(delta_t))
    throw NumericError("selective_discretize: non-finite input");
  const double z = delta_t * a;
  const double a_bar = std::exp(z);
  double b_bar;
  if (std::fabs(z) < kZohSwitch) {
    b_bar = delta_t * b_t;
  } else {
    b_bar = (a_bar - 1.0) / a * b_t;
  }
  return {a_bar, b_bar};
}

double softplus(double x) {
  if (x > 30.0) return x + std::log1p(std::exp(-x));
  if (x < -30.0) return std::exp(x);
  return std::log1p(std::exp(x));
}

double sigmoid(double x) {
  if (x >= 0.0) {
    const double e = std::exp(-x);
    return 1.0 / (1.0 + e);
  }
  const double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace ssrec::kernels

namespace ssrec::kernels::detail {
namespace {

void vexp_s(size_t n, const double* x, double* y) {
  for (size_t i = 0; i < n; ++i) y[i] = std::exp(x[i]);
}

void discretize_real_s(size_t n, double delta, const double* a, double* abar, double* gamma) {
  for (size_t i = 0; i < n; ++i) {
    const double z = delta * a[i];
    const double e = std::exp(z);
    abar[i] = e;
    gamma[i] = std::fabs(z) < kZohSwitch ? delta : (e - 1.0) / a[i];
  }
}

void discretize_cplx_s(size_t n, double delta, const double* lre, const double* lim, double* are,
                       double* aim, double* gre, double* gim) {
  for (size_t i = 0; i < n; ++i) {
    const double zr = delta * lre[i];
    const double zi = delta * lim[i];
    const double er = std::exp(zr);
    const double ar = er * std::cos(zi);
    const double ai = er * std::sin(zi);
    are[i] = ar;
    aim[i] = ai;
    if (std::fabs(zr) + std::fabs(zi) < kZohSwitch) {
      gre[i] = delta;
      gim[i] = 0.0;
    } else {
      // (a_bar - 1) / lambda
      const double nr = ar - 1.0;
      const double den = lre[i] * lre[i] + lim[i] * lim[i];
      gre[i] = (nr * lre[i] + ai * lim[i]) / den;
      gim[i] = (ai * lre[i] - nr * lim[i]) / den;
    }
  }
}

template <class T>
void scan_sequential_t(size_t L, size_t S, const T* A, const T* b, const T* h0, T* h) {
  const T* prev = h0;
  for (size_t l = 0; l < L; ++l) {
    T* cur = h + l * S;
    const T* Al = A + l * S;
    const T* bl = b + l * S;
    for (size_t j = 0; j < S; ++j) cur[j] = Al[j] * prev[j] + bl[j];
    prev = cur;
  }
}

template <class T>
struct RealPolicy {
  using value_type = T;
  static void compose_left(size_t S, const T* Af, const T* bf, T* Ad, T* bd) {
    for (size_t j = 0; j < S; ++j) {
      bd[j] = Ad[j] * bf[j] + bd[j];
      Ad[j] = Ad[j] * Af[j];
    }
  }
  static void compose_right(size_t S, const T* As, const T* bs, T* Ad, T* bd) {
    for (size_t j = 0; j < S; ++j) {
      bd[j] = As[j] * bd[j] + bs[j];
      Ad[j] = As[j] * Ad[j];
    }
  }
  static void apply2(size_t S, const T* Aex, const T* bex, const T* Ao, const T* bo,
                     const T* carry, T* h) {
    for (size_t j = 0; j < S; ++j) {
      const T before = Aex[j] * carry[j] + bex[j];
      h[j] = Ao[j] * before + bo[j];
    }
  }
};

void scan_parallel_s(size_t L, size_t S, const double* A, const double* b, const double* h0,
                     double* h) {
  blelloch_real<RealPolicy<double>>(L, S, A, b, h0, h);
}

void scan_sequential_cplx_s(size_t L, size_t S, const double* Are, const double* Aim,
                            const double* bre, const double* bim, const double* h0re,
                            const double* h0im, double* hre, double* him) {
  const double* pr = h0re;
  const double* pi = h0im;
  for (size_t l = 0; l < L; ++l) {
    double* cr = hre + l * S;
    double* ci = him + l * S;
    const size_t o = l * S;
    for (size_t j = 0; j < S; ++j) {
      const double r = Are[o + j] * pr[j] - Aim[o + j] * pi[j] + bre[o + j];
      const double im = Are[o + j] * pi[j] + Aim[o + j] * pr[j] + bim[o + j];
      cr[j] = r;
      ci[j] = im;
    }
    pr = cr;
    pi = ci;
  }
}

struct CplxPolicy {
  static void compose_left(size_t S, const double* Afr, const double* Afi, const double* bfr,
                           const double* bfi, double* Adr, double* Adi, double* bdr, double* bdi) {
    for (size_t j = 0; j < S; ++j) {
      const double br = Adr[j] * bfr[j] - Adi[j] * bfi[j] + bdr[j];
      const double bi = Adr[j] * bfi[j] + Adi[j] * bfr[j] + bdi[j];
      const double ar = Adr[j] * Afr[j] - Adi[j] * Afi[j];
      const double ai = Adr[j] * Afi[j] + Adi[j] * Afr[j];
      bdr[j] = br;
      bdi[j] = bi;
      Adr[j] = ar;
      Adi[j] = ai;
    }
  }
  static void compose_right(size_t S, const double* Asr, const double* Asi, const double* bsr,
                            const double* bsi, double* Adr, double* Adi, double* bdr,
                            double* bdi) {
    for (size_t j = 0; j < S; ++j) {
      const double br = Asr[j] * bdr[j] - Asi[j] * bdi[j] + bsr[j];
      const double bi = Asr[j] * bdi[j] + Asi[j] * bdr[j] + bsi[j];
      const double ar = Asr[j] * Adr[j] - Asi[j] * Adi[j];
      const double ai = Asr[j] * Adi[j] + Asi[j] * Adr[j];
      bdr[j] = br;
      bdi[j] = bi;
      Adr[j] = ar;
      Adi[j] = ai;
    }
  }
  static void apply2(size_t S, const double* Aer, const double* Aei, const double* ber,
                     const double* bei, const double* Aor, const double* Aoi, const double* bor,
                     const double* boi, const double* cr, const double* ci, double* hr,
                     double* hi) {
    for (size_t j = 0; j < S; ++j) {
      const double wr = Aer[j] * cr[j] - Aei[j] * ci[j] + ber[j];
      const double wi = Aer[j] * ci[j] + Aei[j] * cr[j] + bei[j];
      hr[j] = Aor[j] * wr - Aoi[j] * wi + bor[j];
      hi[j] = Aor[j] * wi + Aoi[j] * wr + boi[j];
    }
  }
};

void scan_parallel_cplx_s(size_t L, size_t S, const double* Are, const double* Aim,
                          const double* bre, const double* bim, const double* h0re,
                          const double* h0im, double* hre, double* him) {
  blelloch_cplx<CplxPolicy>(L, S, Are, Aim, bre, bim, h0re, h0im, hre, him);
}

void layer_norm_s(size_t D, const double* x, const double* gamma, const double* beta, double eps,
                  double* y, double* mean_out, double* rstd_out) {
  double mean = 0.0;
  for (size_t i = 0; i < D; ++i) mean += x[i];
  mean /= static_cast<double>(D);
  double var = 0.0;
  for (size_t i = 0; i < D; ++i) {
    const double d = x[i] - mean;
    var += d * d;
  }
  var /= static_cast<double>(D);
  const double rstd = 1.0 / std::sqrt(var + eps);
  for (size_t i = 0; i < D; ++i) y[i] = (x[i] - mean) * rstd * gamma[i] + beta[i];
  if (mean_out) *mean_out = mean;
  if (rstd_out) *rstd_out = rstd;
}

void layer_norm_bwd_s(size_t D, const double* x, const double* gamma, double mean, double rstd,
                      const double* dy, double* dx, double* dgamma, double* dbeta) {
  const double inv_d = 1.0 / static_cast<double>(D);
  double sum_dyg = 0.0;
  double sum_dyg_xhat = 0.0;
  for (size_t i = 0; i < D; ++i) {
    const double xhat = (x[i] - mean) * rstd;
    const double g = dy[i] * gamma[i];
    sum_dyg += g;
    sum_dyg_xhat += g * xhat;
    dgamma[i] += dy[i] * xhat;
    dbeta[i] += dy[i];
  }
  for (size_t i = 0; i < D; ++i) {
    const double xhat = (x[i] - mean) * rstd;
    const double g = dy[i] * gamma[i];
    dx[i] = rstd * (g - inv_d * sum_dyg - xhat * inv_d * sum_dyg_xhat);
  }
}

double softmax_xent_s(size_t N, const double* logits, size_t target, double* grad) {
  double mx = logits[0];
  for (size_t i = 1; i < N; ++i) mx = std::max(mx, logits[i]);
  double sum = 0.0;
  if (grad) {
    for (size_t i = 0; i < N; ++i) {
      const double e = std::exp(logits[i] - mx);
      grad[i] = e;
      sum += e;
    }
    const double inv = 1.0 / sum;
    for (size_t i = 0; i < N; ++i) grad[i] *= inv;
    grad[target] -= 1.0;
  } else {
    for (size_t i = 0; i < N; ++i) sum += std::exp(logits[i] - mx);
  }
  return mx + std::log(sum) - logits[target];
}

double dot_s(size_t n, const double* x, const double* y) {
  double acc = 0.0;
  for (size_t i = 0; i < n; ++i) acc += x[i] * y[i];
  return acc;
}

void axpy_s(size_t n, double a, const double* x, double* y) {
  for (size_t i = 0; i < n; ++i) y[i] += a * x[i];
}

void gemv_s(size_t M, size_t N, const double* W, const double* x, double* y, bool accumulate) {
  for (size_t r = 0; r < M; ++r) {
    double acc = accumulate ? y[r] : 0.0;
    const double* row = W + r * N;
    for (size_t c = 0; c < N; ++c) acc += row[c] * x[c];
    y[r] = acc;
  }
}

void gemv_t_s(size_t M, size_t N, const double* W, const double* x, double* y, bool accumulate) {
  if (!accumulate)
    for (size_t c = 0; c < N; ++c) y[c] = 0.0;
  for (size_t r = 0; r < M; ++r) {
    const double* row = W + r * N;
    const double xr = x[r];
    for (size_t c = 0; c < N; ++c) y[c] += xr * row[c];
  }
}

void ger_s(size_t M, size_t N, double alpha, const double* x, const double* y, double* W) {
  for (size_t r = 0; r < M; ++r) {
    double* row = W + r * N;
    const double ax = alpha * x[r];
    for (size_t c = 0; c < N; ++c) row[c] += ax * y[c];
  }
}

void adam_step_s(size_t n, double* p, const double* g, double* m, double* v, double lr,
                 double beta1, double beta2, double eps, double inv_bias1, double inv_bias2) {
  for (size_t i = 0; i < n; ++i) {
    m[i] = beta1 * m[i] + (1.0 - beta1) * g[i];
    v[i] = beta2 * v[i] + (1.0 - beta2) * g[i] * g[i];
    const double mh = m[i] * inv_bias1;
    const double vh = v[i] * inv_bias2;
    p[i] -= lr * mh / (std::sqrt(vh) + eps);
  }
}

}  // namespace

const KernelTable& scalar_table() {
  static const KernelTable t = {
      vexp_s,           discretize_real_s, discretize_cplx_s, scan_sequential_t<double>,
      scan_parallel_s,  scan_sequential_cplx_s, scan_parallel_cplx_s,
      layer_norm_s,     layer_norm_bwd_s,  softmax_xent_s,    dot_s,
      axpy_s,           gemv_s,            gemv_t_s,          ger_s,
      adam_step_s,
  };
  return t;
}

}  // namespace ssrec::kernels::detail

namespace ssrec::kernels {

void scan_sequential_f(size_t L, size_t S, const float* A, const float* b, const float* h0,
                       float* h) {
  detail::scan_sequential_t<float>(L, S, A, b, h0, h);
}

void scan_parallel_f(size_t L, size_t S, const float* A, const float* b, const float* h0,
                     float* h) {
  detail::blelloch_real<detail::RealPolicy<float>>(L, S, A, b, h0, h);
}

}  // namespace ssrec::kernels
