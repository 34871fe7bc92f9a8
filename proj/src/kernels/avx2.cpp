// AVX2+FMA kernel variants. Compiled with -mavx2 -mfma in its own TU; only
// reachable through the dispatch table after a runtime CPU check.

#include "ssrec/kernels.hpp"
#include "scan_driver.hpp"
#include "table.hpp"

#if defined(__x86_64__) || defined(_M_X64)
#define SSREC_HAVE_AVX2_TU 1
#include <immintrin.h>

#include <cmath>
#include <cstring>

namespace ssrec::kernels::detail {
namespace {

// ---- vectorized exp --------------------------------------------------------
// Cody-Waite range reduction, degree-13 Taylor core on |r| <= ln2/2, two-step
// power-of-two scaling so the full finite range survives. Accuracy ~2 ulp.

inline __m256d pow2i(__m256d k) {
  // k holds small integral values; build 2^k from exponent bits
  const __m128i ki = _mm256_cvtpd_epi32(k);
  const __m256i kl = _mm256_cvtepi32_epi64(ki);
  const __m256i bits = _mm256_slli_epi64(_mm256_add_epi64(kl, _mm256_set1_epi64x(1023)), 52);
  return _mm256_castsi256_pd(bits);
}

inline __m256d vexp4(__m256d x) {
  const __m256d log2e = _mm256_set1_pd(1.4426950408889634074);
  const __m256d ln2_hi = _mm256_set1_pd(6.93147180369123816490e-01);
  const __m256d ln2_lo = _mm256_set1_pd(1.90821492927058770002e-10);
  const __m256d overflow = _mm256_set1_pd(709.782712893384);
  const __m256d underflow = _mm256_set1_pd(-745.2);

  __m256d k = _mm256_round_pd(_mm256_mul_pd(x, log2e),
                              _MM_FROUND_TO_NEAREST_INT | _MM_FROUND_NO_EXC);
  // clamp k so the scaling below stays in exponent range even for inputs
  // past the finite thresholds (those lanes get blended afterwards)
  k = _mm256_max_pd(_mm256_min_pd(k, _mm256_set1_pd(1024.0)), _mm256_set1_pd(-1080.0));

  __m256d r = _mm256_fnmadd_pd(k, ln2_hi, x);
  r = _mm256_fnmadd_pd(k, ln2_lo, r);

  const double c[] = {1.0 / 6227020800.0, 1.0 / 479001600.0, 1.0 / 39916800.0, 1.0 / 3628800.0,
                      1.0 / 362880.0,     1.0 / 40320.0,     1.0 / 5040.0,     1.0 / 720.0,
                      1.0 / 120.0,        1.0 / 24.0,        1.0 / 6.0,        0.5};
  __m256d p = _mm256_set1_pd(c[0]);
  for (int i = 1; i < 12; ++i) p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(c[i]));
  p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0));
  p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0));

  // 2^k in two halves; k2 = k - trunc(k/2) keeps both factors in range
  const __m256d k1 = _mm256_round_pd(_mm256_mul_pd(k, _mm256_set1_pd(0.5)),
                                     _MM_FROUND_TO_ZERO | _MM_FROUND_NO_EXC);
  const __m256d k2 = _mm256_sub_pd(k, k1);
  __m256d y = _mm256_mul_pd(_mm256_mul_pd(p, pow2i(k1)), pow2i(k2));

  const __m256d inf = _mm256_set1_pd(std::numeric_limits<double>::infinity());
  y = _mm256_blendv_pd(y, inf, _mm256_cmp_pd(x, overflow, _CMP_GT_OQ));
  y = _mm256_blendv_pd(y, _mm256_setzero_pd(), _mm256_cmp_pd(x, underflow, _CMP_LT_OQ));
  // NaN propagation: x != x
  y = _mm256_blendv_pd(y, x, _mm256_cmp_pd(x, x, _CMP_UNORD_Q));
  return y;
}

void vexp_v(size_t n, const double* x, double* y) {
  size_t i = 0;
  for (; i + 4 <= n; i += 4) _mm256_storeu_pd(y + i, vexp4(_mm256_loadu_pd(x + i)));
  for (; i < n; ++i) y[i] = std::exp(x[i]);
}

void discretize_real_v(size_t n, double delta, const double* a, double* abar, double* gamma) {
  const __m256d vd = _mm256_set1_pd(delta);
  const __m256d eps = _mm256_set1_pd(kZohSwitch);
  const __m256d absmask = _mm256_castsi256_pd(_mm256_set1_epi64x(0x7fffffffffffffffll));
  const __m256d one = _mm256_set1_pd(1.0);
  size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d va = _mm256_loadu_pd(a + i);
    const __m256d z = _mm256_mul_pd(vd, va);
    const __m256d e = vexp4(z);
    _mm256_storeu_pd(abar + i, e);
    const __m256d g = _mm256_div_pd(_mm256_sub_pd(e, one), va);
    const __m256d small = _mm256_cmp_pd(_mm256_and_pd(z, absmask), eps, _CMP_LT_OQ);
    _mm256_storeu_pd(gamma + i, _mm256_blendv_pd(g, vd, small));
  }
  for (; i < n; ++i) {
    const double z = delta * a[i];
    const double e = std::exp(z);
    abar[i] = e;
    gamma[i] = std::fabs(z) < kZohSwitch ? delta : (e - 1.0) / a[i];
  }
}

// ---- scans -----------------------------------------------------------------

void scan_sequential_v(size_t L, size_t S, const double* A, const double* b, const double* h0,
                       double* h) {
  const double* prev = h0;
  for (size_t l = 0; l < L; ++l) {
    double* cur = h + l * S;
    const double* Al = A + l * S;
    const double* bl = b + l * S;
    size_t j = 0;
    for (; j + 4 <= S; j += 4) {
      const __m256d r =
          _mm256_fmadd_pd(_mm256_loadu_pd(Al + j), _mm256_loadu_pd(prev + j),
                          _mm256_loadu_pd(bl + j));
      _mm256_storeu_pd(cur + j, r);
    }
    for (; j < S; ++j) cur[j] = Al[j] * prev[j] + bl[j];
    prev = cur;
  }
}

struct RealPolicyV {
  using value_type = double;
  static void compose_left(size_t S, const double* Af, const double* bf, double* Ad, double* bd) {
    size_t j = 0;
    for (; j + 4 <= S; j += 4) {
      const __m256d ad = _mm256_loadu_pd(Ad + j);
      _mm256_storeu_pd(bd + j,
                       _mm256_fmadd_pd(ad, _mm256_loadu_pd(bf + j), _mm256_loadu_pd(bd + j)));
      _mm256_storeu_pd(Ad + j, _mm256_mul_pd(ad, _mm256_loadu_pd(Af + j)));
    }
    for (; j < S; ++j) {
      bd[j] = Ad[j] * bf[j] + bd[j];
      Ad[j] = Ad[j] * Af[j];
    }
  }
  static void compose_right(size_t S, const double* As, const double* bs, double* Ad, double* bd) {
    size_t j = 0;
    for (; j + 4 <= S; j += 4) {
      const __m256d as = _mm256_loadu_pd(As + j);
      _mm256_storeu_pd(bd + j,
                       _mm256_fmadd_pd(as, _mm256_loadu_pd(bd + j), _mm256_loadu_pd(bs + j)));
      _mm256_storeu_pd(Ad + j, _mm256_mul_pd(as, _mm256_loadu_pd(Ad + j)));
    }
    for (; j < S; ++j) {
      bd[j] = As[j] * bd[j] + bs[j];
      Ad[j] = As[j] * Ad[j];
    }
  }
  static void apply2(size_t S, const double* Aex, const double* bex, const double* Ao,
                     const double* bo, const double* carry, double* h) {
    size_t j = 0;
    for (; j + 4 <= S; j += 4) {
      const __m256d before = _mm256_fmadd_pd(_mm256_loadu_pd(Aex + j),
                                             _mm256_loadu_pd(carry + j), _mm256_loadu_pd(bex + j));
      _mm256_storeu_pd(h + j,
                       _mm256_fmadd_pd(_mm256_loadu_pd(Ao + j), before, _mm256_loadu_pd(bo + j)));
    }
    for (; j < S; ++j) {
      const double before = Aex[j] * carry[j] + bex[j];
      h[j] = Ao[j] * before + bo[j];
    }
  }
};

void scan_parallel_v(size_t L, size_t S, const double* A, const double* b, const double* h0,
                     double* h) {
  blelloch_real<RealPolicyV>(L, S, A, b, h0, h);
}

// split-plane complex multiply-accumulate helpers
inline void cmla4(__m256d ar, __m256d ai, __m256d br, __m256d bi, __m256d cr, __m256d ci,
                  __m256d& outr, __m256d& outi) {
  // out = a*b + c
  outr = _mm256_fmadd_pd(ar, br, _mm256_fnmadd_pd(ai, bi, cr));
  outi = _mm256_fmadd_pd(ar, bi, _mm256_fmadd_pd(ai, br, ci));
}

void scan_sequential_cplx_v(size_t L, size_t S, const double* Are, const double* Aim,
                            const double* bre, const double* bim, const double* h0re,
                            const double* h0im, double* hre, double* him) {
  const double* pr = h0re;
  const double* pi = h0im;
  for (size_t l = 0; l < L; ++l) {
    const size_t o = l * S;
    size_t j = 0;
    for (; j + 4 <= S; j += 4) {
      __m256d rr, ri;
      cmla4(_mm256_loadu_pd(Are + o + j), _mm256_loadu_pd(Aim + o + j), _mm256_loadu_pd(pr + j),
            _mm256_loadu_pd(pi + j), _mm256_loadu_pd(bre + o + j), _mm256_loadu_pd(bim + o + j),
            rr, ri);
      _mm256_storeu_pd(hre + o + j, rr);
      _mm256_storeu_pd(him + o + j, ri);
    }
    for (; j < S; ++j) {
      const double r = Are[o + j] * pr[j] - Aim[o + j] * pi[j] + bre[o + j];
      const double im = Are[o + j] * pi[j] + Aim[o + j] * pr[j] + bim[o + j];
      hre[o + j] = r;
      him[o + j] = im;
    }
    pr = hre + o;
    pi = him + o;
  }
}

struct CplxPolicyV {
  static void compose_left(size_t S, const double* Afr, const double* Afi, const double* bfr,
                           const double* bfi, double* Adr, double* Adi, double* bdr, double* bdi) {
    size_t j = 0;
    for (; j + 4 <= S; j += 4) {
      const __m256d adr = _mm256_loadu_pd(Adr + j);
      const __m256d adi = _mm256_loadu_pd(Adi + j);
      __m256d br, bi;
      cmla4(adr, adi, _mm256_loadu_pd(bfr + j), _mm256_loadu_pd(bfi + j),
            _mm256_loadu_pd(bdr + j), _mm256_loadu_pd(bdi + j), br, bi);
      __m256d ar, ai;
      cmla4(adr, adi, _mm256_loadu_pd(Afr + j), _mm256_loadu_pd(Afi + j), _mm256_setzero_pd(),
            _mm256_setzero_pd(), ar, ai);
      _mm256_storeu_pd(bdr + j, br);
      _mm256_storeu_pd(bdi + j, bi);
      _mm256_storeu_pd(Adr + j, ar);
      _mm256_storeu_pd(Adi + j, ai);
    }
    for (; j < S; ++j) {
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
    size_t j = 0;
    for (; j + 4 <= S; j += 4) {
      const __m256d asr = _mm256_loadu_pd(Asr + j);
      const __m256d asi = _mm256_loadu_pd(Asi + j);
      __m256d br, bi;
      cmla4(asr, asi, _mm256_loadu_pd(bdr + j), _mm256_loadu_pd(bdi + j),
            _mm256_loadu_pd(bsr + j), _mm256_loadu_pd(bsi + j), br, bi);
      __m256d ar, ai;
      cmla4(asr, asi, _mm256_loadu_pd(Adr + j), _mm256_loadu_pd(Adi + j), _mm256_setzero_pd(),
            _mm256_setzero_pd(), ar, ai);
      _mm256_storeu_pd(bdr + j, br);
      _mm256_storeu_pd(bdi + j, bi);
      _mm256_storeu_pd(Adr + j, ar);
      _mm256_storeu_pd(Adi + j, ai);
    }
    for (; j < S; ++j) {
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
    size_t j = 0;
    for (; j + 4 <= S; j += 4) {
      __m256d wr, wi;
      cmla4(_mm256_loadu_pd(Aer + j), _mm256_loadu_pd(Aei + j), _mm256_loadu_pd(cr + j),
            _mm256_loadu_pd(ci + j), _mm256_loadu_pd(ber + j), _mm256_loadu_pd(bei + j), wr, wi);
      __m256d rr, ri;
      cmla4(_mm256_loadu_pd(Aor + j), _mm256_loadu_pd(Aoi + j), wr, wi,
            _mm256_loadu_pd(bor + j), _mm256_loadu_pd(boi + j), rr, ri);
      _mm256_storeu_pd(hr + j, rr);
      _mm256_storeu_pd(hi + j, ri);
    }
    for (; j < S; ++j) {
      const double wr = Aer[j] * cr[j] - Aei[j] * ci[j] + ber[j];
      const double wi = Aer[j] * ci[j] + Aei[j] * cr[j] + bei[j];
      hr[j] = Aor[j] * wr - Aoi[j] * wi + bor[j];
      hi[j] = Aor[j] * wi + Aoi[j] * wr + boi[j];
    }
  }
};

void scan_parallel_cplx_v(size_t L, size_t S, const double* Are, const double* Aim,
                          const double* bre, const double* bim, const double* h0re,
                          const double* h0im, double* hre, double* him) {
  blelloch_cplx<CplxPolicyV>(L, S, Are, Aim, bre, bim, h0re, h0im, hre, him);
}

// ---- reductions and dense helpers ------------------------------------------

inline double hsum4(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d s = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

double dot_v(size_t n, const double* x, const double* y) {
  __m256d acc = _mm256_setzero_pd();
  size_t i = 0;
  for (; i + 4 <= n; i += 4)
    acc = _mm256_fmadd_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i), acc);
  double s = hsum4(acc);
  for (; i < n; ++i) s += x[i] * y[i];
  return s;
}

void axpy_v(size_t n, double a, const double* x, double* y) {
  const __m256d va = _mm256_set1_pd(a);
  size_t i = 0;
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(y + i, _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
  for (; i < n; ++i) y[i] += a * x[i];
}

void gemv_v(size_t M, size_t N, const double* W, const double* x, double* y, bool accumulate) {
  for (size_t r = 0; r < M; ++r) {
    const double s = dot_v(N, W + r * N, x);
    y[r] = accumulate ? y[r] + s : s;
  }
}

void gemv_t_v(size_t M, size_t N, const double* W, const double* x, double* y, bool accumulate) {
  if (!accumulate) std::memset(y, 0, N * sizeof(double));
  for (size_t r = 0; r < M; ++r) axpy_v(N, x[r], W + r * N, y);
}

void ger_v(size_t M, size_t N, double alpha, const double* x, const double* y, double* W) {
  for (size_t r = 0; r < M; ++r) axpy_v(N, alpha * x[r], y, W + r * N);
}

void layer_norm_v(size_t D, const double* x, const double* gamma, const double* beta, double eps,
                  double* y, double* mean_out, double* rstd_out) {
  __m256d vs = _mm256_setzero_pd();
  size_t i = 0;
  for (; i + 4 <= D; i += 4) vs = _mm256_add_pd(vs, _mm256_loadu_pd(x + i));
  double mean = hsum4(vs);
  for (; i < D; ++i) mean += x[i];
  mean /= static_cast<double>(D);

  const __m256d vm = _mm256_set1_pd(mean);
  __m256d vv = _mm256_setzero_pd();
  i = 0;
  for (; i + 4 <= D; i += 4) {
    const __m256d d = _mm256_sub_pd(_mm256_loadu_pd(x + i), vm);
    vv = _mm256_fmadd_pd(d, d, vv);
  }
  double var = hsum4(vv);
  for (; i < D; ++i) {
    const double d = x[i] - mean;
    var += d * d;
  }
  var /= static_cast<double>(D);
  const double rstd = 1.0 / std::sqrt(var + eps);

  const __m256d vr = _mm256_set1_pd(rstd);
  i = 0;
  for (; i + 4 <= D; i += 4) {
    const __m256d xh = _mm256_mul_pd(_mm256_sub_pd(_mm256_loadu_pd(x + i), vm), vr);
    _mm256_storeu_pd(y + i,
                     _mm256_fmadd_pd(xh, _mm256_loadu_pd(gamma + i), _mm256_loadu_pd(beta + i)));
  }
  for (; i < D; ++i) y[i] = (x[i] - mean) * rstd * gamma[i] + beta[i];
  if (mean_out) *mean_out = mean;
  if (rstd_out) *rstd_out = rstd;
}

void layer_norm_bwd_v(size_t D, const double* x, const double* gamma, double mean, double rstd,
                      const double* dy, double* dx, double* dgamma, double* dbeta) {
  const double inv_d = 1.0 / static_cast<double>(D);
  const __m256d vm = _mm256_set1_pd(mean);
  const __m256d vr = _mm256_set1_pd(rstd);
  __m256d vsg = _mm256_setzero_pd();
  __m256d vsgx = _mm256_setzero_pd();
  size_t i = 0;
  for (; i + 4 <= D; i += 4) {
    const __m256d xh = _mm256_mul_pd(_mm256_sub_pd(_mm256_loadu_pd(x + i), vm), vr);
    const __m256d vdy = _mm256_loadu_pd(dy + i);
    const __m256d g = _mm256_mul_pd(vdy, _mm256_loadu_pd(gamma + i));
    vsg = _mm256_add_pd(vsg, g);
    vsgx = _mm256_fmadd_pd(g, xh, vsgx);
    _mm256_storeu_pd(dgamma + i, _mm256_fmadd_pd(vdy, xh, _mm256_loadu_pd(dgamma + i)));
    _mm256_storeu_pd(dbeta + i, _mm256_add_pd(vdy, _mm256_loadu_pd(dbeta + i)));
  }
  double sum_dyg = hsum4(vsg);
  double sum_dyg_xhat = hsum4(vsgx);
  for (; i < D; ++i) {
    const double xhat = (x[i] - mean) * rstd;
    const double g = dy[i] * gamma[i];
    sum_dyg += g;
    sum_dyg_xhat += g * xhat;
    dgamma[i] += dy[i] * xhat;
    dbeta[i] += dy[i];
  }
  const __m256d va = _mm256_set1_pd(inv_d * sum_dyg);
  const __m256d vb = _mm256_set1_pd(inv_d * sum_dyg_xhat);
  i = 0;
  for (; i + 4 <= D; i += 4) {
    const __m256d xh = _mm256_mul_pd(_mm256_sub_pd(_mm256_loadu_pd(x + i), vm), vr);
    const __m256d g = _mm256_mul_pd(_mm256_loadu_pd(dy + i), _mm256_loadu_pd(gamma + i));
    const __m256d t = _mm256_sub_pd(_mm256_sub_pd(g, va), _mm256_mul_pd(xh, vb));
    _mm256_storeu_pd(dx + i, _mm256_mul_pd(vr, t));
  }
  for (; i < D; ++i) {
    const double xhat = (x[i] - mean) * rstd;
    const double g = dy[i] * gamma[i];
    dx[i] = rstd * (g - inv_d * sum_dyg - xhat * inv_d * sum_dyg_xhat);
  }
}

double softmax_xent_v(size_t N, const double* logits, size_t target, double* grad) {
  __m256d vmx = _mm256_set1_pd(-std::numeric_limits<double>::infinity());
  size_t i = 0;
  for (; i + 4 <= N; i += 4) vmx = _mm256_max_pd(vmx, _mm256_loadu_pd(logits + i));
  double mx = -std::numeric_limits<double>::infinity();
  {
    alignas(32) double tmp[4];
    _mm256_store_pd(tmp, vmx);
    for (double t : tmp) mx = std::max(mx, t);
  }
  for (; i < N; ++i) mx = std::max(mx, logits[i]);

  const __m256d vm = _mm256_set1_pd(mx);
  double sum = 0.0;
  if (grad) {
    __m256d vsum = _mm256_setzero_pd();
    i = 0;
    for (; i + 4 <= N; i += 4) {
      const __m256d e = vexp4(_mm256_sub_pd(_mm256_loadu_pd(logits + i), vm));
      _mm256_storeu_pd(grad + i, e);
      vsum = _mm256_add_pd(vsum, e);
    }
    sum = hsum4(vsum);
    for (; i < N; ++i) {
      const double e = std::exp(logits[i] - mx);
      grad[i] = e;
      sum += e;
    }
    const __m256d vinv = _mm256_set1_pd(1.0 / sum);
    i = 0;
    for (; i + 4 <= N; i += 4)
      _mm256_storeu_pd(grad + i, _mm256_mul_pd(_mm256_loadu_pd(grad + i), vinv));
    for (; i < N; ++i) grad[i] /= sum;
    grad[target] -= 1.0;
  } else {
    __m256d vsum = _mm256_setzero_pd();
    i = 0;
    for (; i + 4 <= N; i += 4)
      vsum = _mm256_add_pd(vsum, vexp4(_mm256_sub_pd(_mm256_loadu_pd(logits + i), vm)));
    sum = hsum4(vsum);
    for (; i < N; ++i) sum += std::exp(logits[i] - mx);
  }
  return mx + std::log(sum) - logits[target];
}

void adam_step_v(size_t n, double* p, const double* g, double* m, double* v, double lr,
                 double beta1, double beta2, double eps, double inv_bias1, double inv_bias2) {
  const __m256d vb1 = _mm256_set1_pd(beta1);
  const __m256d vb2 = _mm256_set1_pd(beta2);
  const __m256d vc1 = _mm256_set1_pd(1.0 - beta1);
  const __m256d vc2 = _mm256_set1_pd(1.0 - beta2);
  const __m256d vi1 = _mm256_set1_pd(inv_bias1);
  const __m256d vi2 = _mm256_set1_pd(inv_bias2);
  const __m256d vlr = _mm256_set1_pd(lr);
  const __m256d veps = _mm256_set1_pd(eps);
  size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d vg = _mm256_loadu_pd(g + i);
    const __m256d vmn = _mm256_fmadd_pd(vb1, _mm256_loadu_pd(m + i), _mm256_mul_pd(vc1, vg));
    const __m256d vvn =
        _mm256_fmadd_pd(vb2, _mm256_loadu_pd(v + i), _mm256_mul_pd(vc2, _mm256_mul_pd(vg, vg)));
    _mm256_storeu_pd(m + i, vmn);
    _mm256_storeu_pd(v + i, vvn);
    const __m256d mh = _mm256_mul_pd(vmn, vi1);
    const __m256d vh = _mm256_mul_pd(vvn, vi2);
    const __m256d den = _mm256_add_pd(_mm256_sqrt_pd(vh), veps);
    const __m256d upd = _mm256_div_pd(_mm256_mul_pd(vlr, mh), den);
    _mm256_storeu_pd(p + i, _mm256_sub_pd(_mm256_loadu_pd(p + i), upd));
  }
  for (; i < n; ++i) {
    m[i] = beta1 * m[i] + (1.0 - beta1) * g[i];
    v[i] = beta2 * v[i] + (1.0 - beta2) * g[i] * g[i];
    p[i] -= lr * (m[i] * inv_bias1) / (std::sqrt(v[i] * inv_bias2) + eps);
  }
}

}  // namespace

const KernelTable* avx2_table() {
  static const KernelTable t = {
      vexp_v,
      discretize_real_v,
      scalar_table().discretize_cplx,  // sin/cos pair stays scalar
      scan_sequential_v,
      scan_parallel_v,
      scan_sequential_cplx_v,
      scan_parallel_cplx_v,
      layer_norm_v,
      layer_norm_bwd_v,
      softmax_xent_v,
      dot_v,
      axpy_v,
      gemv_v,
      gemv_t_v,
      ger_v,
      adam_step_v,
  };
  return &t;
}

}  // namespace ssrec::kernels::detail

#else  // non-x86 build: no AVX2 table

namespace ssrec::kernels::detail {
const KernelTable* avx2_table() { return nullptr; }
}  // namespace ssrec::kernels::detail

#endif
