#include "ssrec/time_aware.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <complex>
#include <cstring>

#include "ssrec/common.hpp"
#include "ssrec/kernels.hpp"
#include "ssrec/threading.hpp"

namespace ssrec::time_aware {

namespace {

// Eigenvalues of the normal part of the HiPPO-LegS operator: -1/2 I + S with
// S skew-symmetric, S[n][k] = -sqrt((2n+1)(2k+1))/2 for n > k. i*S is
// Hermitian, so its spectrum is real and the lambdas come out as -1/2 +- i*w.
std::vector<double> hippo_normal_frequencies(int p_full) {
  using Cd = std::complex<double>;
  const int n = p_full;
  Eigen::MatrixXcd H(n, n);
  for (int r = 0; r < n; ++r) {
    for (int c = 0; c < n; ++c) {
      double s = 0.0;
      if (r > c) s = -0.5 * std::sqrt((2.0 * r + 1.0) * (2.0 * c + 1.0));
      if (r < c) s = 0.5 * std::sqrt((2.0 * r + 1.0) * (2.0 * c + 1.0));
      H(r, c) = Cd(0.0, 1.0) * s;  // i * S
    }
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(H);
  if (es.info() != Eigen::Success)
    throw NumericError("state-matrix eigendecomposition failed");
  std::vector<double> w(es.eigenvalues().data(), es.eigenvalues().data() + n);
  std::sort(w.begin(), w.end(), std::greater<>());
  std::vector<double> im(w.begin(), w.begin() + n / 2);  // one per conjugate pair
  return im;
}

}  // namespace

Grads zero_grads(const Params& p) {
  Grads g;
  g.lambda_re_log.assign(p.lambda_re_log.size(), 0.0);
  g.lambda_im.assign(p.lambda_im.size(), 0.0);
  g.b_re.assign(p.b_re.size(), 0.0);
  g.b_im.assign(p.b_im.size(), 0.0);
  g.c_re.assign(p.c_re.size(), 0.0);
  g.c_im.assign(p.c_im.size(), 0.0);
  g.log_s.assign(p.log_s.size(), 0.0);
  return g;
}

void add_grads(Grads& dst, const Grads& src) {
  auto acc = [](std::vector<double>& a, const std::vector<double>& b) {
    for (size_t i = 0; i < a.size(); ++i) a[i] += b[i];
  };
  acc(dst.lambda_re_log, src.lambda_re_log);
  acc(dst.lambda_im, src.lambda_im);
  acc(dst.b_re, src.b_re);
  acc(dst.b_im, src.b_im);
  acc(dst.c_re, src.c_re);
  acc(dst.c_im, src.c_im);
  acc(dst.log_s, src.log_s);
}

Params init(int p_full, int d, Rng& rng) {
  if (p_full < 2 || p_full % 2 != 0)
    throw ConfigError("state dimension must be even and >= 2");
  if (d < 1) throw ConfigError("model width must be >= 1");

  Params p;
  p.p_half = p_full / 2;
  p.d = d;

  p.lambda_re_log.assign(p.p_half, std::log(0.5));  // Re(lambda) = -1/2
  p.lambda_im = hippo_normal_frequencies(p_full);

  const double sb = 1.0 / std::sqrt(2.0 * d);
  const double sc = 1.0 / std::sqrt(2.0 * p_full);
  p.b_re.resize(static_cast<size_t>(p.p_half) * d);
  p.b_im.resize(p.b_re.size());
  for (auto& v : p.b_re) v = rng.normal(0.0, sb);
  for (auto& v : p.b_im) v = rng.normal(0.0, sb);
  p.c_re.resize(static_cast<size_t>(d) * p.p_half);
  p.c_im.resize(p.c_re.size());
  for (auto& v : p.c_re) v = rng.normal(0.0, sc);
  for (auto& v : p.c_im) v = rng.normal(0.0, sc);

  p.log_s.resize(p.p_half);
  for (auto& v : p.log_s) v = rng.uniform(std::log(1e-3), std::log(1e-1));
  return p;
}

// Forward math per (row, step l, channel j), with mu = s*lambda:
//   a    = exp(dt_l * mu)                       (|a| <= 1)
//   g'   = (a - 1)/mu, limit dt_l when |dt*mu| is small
//   v    = b~ x_l
//   h_l  = a (*) h_{l-1} + s * g' (*) v         (s*g' = (a-1)/lambda)
//   y_l  = 2 Re(c~ h_l)
// Pads have dt = 0, hence a = 1 and a zero increment; their outputs are
// forced to zero so left padding cannot inject dynamics.
void forward(const Params& p, const double* x, const double* delta_t, const uint8_t* valid,
             int rows, int len, double* y, Cache* cache, int threads) {
  const int ph = p.p_half;
  const int d = p.d;
  const size_t plane = static_cast<size_t>(len) * ph;
  const size_t n_pos = static_cast<size_t>(rows) * len;

  for (size_t i = 0; i < n_pos; ++i)
    if (!(delta_t[i] >= 0.0)) throw NumericError("time-aware layer: negative interval");

  if (cache) {
    cache->rows = rows;
    cache->len = len;
    cache->x.assign(x, x + n_pos * d);
    cache->delta_t.assign(delta_t, delta_t + n_pos);
    cache->valid.assign(valid, valid + n_pos);
    const size_t total = static_cast<size_t>(rows) * plane;
    cache->vre.resize(total);
    cache->vim.resize(total);
    cache->are.resize(total);
    cache->aim.resize(total);
    cache->gre.resize(total);
    cache->gim.resize(total);
    cache->hre.resize(total);
    cache->him.resize(total);
  }

  std::vector<double> s(ph), mure(ph), muim(ph);
  for (int j = 0; j < ph; ++j) {
    s[j] = std::exp(p.log_s[j]);
    mure[j] = -std::exp(p.lambda_re_log[j]) * s[j];
    muim[j] = p.lambda_im[j] * s[j];
  }

  parallel_for_chunks(rows, threads, [&](int, size_t rb, size_t re_) {
    std::vector<double> vre(plane), vim(plane), are(plane), aim(plane), gre(plane), gim(plane),
        incre(plane), incim(plane), hre(plane), him(plane), tmp(d);
    std::vector<double> h0(ph, 0.0);

    for (size_t r = rb; r < re_; ++r) {
      const double* xr = x + r * static_cast<size_t>(len) * d;
      const double* dtr = delta_t + r * len;
      const uint8_t* vr = valid + r * len;

      for (int l = 0; l < len; ++l) {
        const size_t o = static_cast<size_t>(l) * ph;
        kernels::gemv(ph, d, p.b_re.data(), xr + static_cast<size_t>(l) * d, vre.data() + o,
                      false);
        kernels::gemv(ph, d, p.b_im.data(), xr + static_cast<size_t>(l) * d, vim.data() + o,
                      false);
        kernels::discretize_cplx(ph, dtr[l], mure.data(), muim.data(), are.data() + o,
                                 aim.data() + o, gre.data() + o, gim.data() + o);
        for (int j = 0; j < ph; ++j) {
          incre[o + j] = s[j] * (gre[o + j] * vre[o + j] - gim[o + j] * vim[o + j]);
          incim[o + j] = s[j] * (gre[o + j] * vim[o + j] + gim[o + j] * vre[o + j]);
        }
      }

      kernels::scan_parallel_cplx(len, ph, are.data(), aim.data(), incre.data(), incim.data(),
                                  h0.data(), h0.data(), hre.data(), him.data());

      double* yr = y + r * static_cast<size_t>(len) * d;
      for (int l = 0; l < len; ++l) {
        double* yl = yr + static_cast<size_t>(l) * d;
        if (!vr[l]) {
          std::memset(yl, 0, sizeof(double) * d);
          continue;
        }
        const size_t o = static_cast<size_t>(l) * ph;
        kernels::gemv(d, ph, p.c_re.data(), hre.data() + o, yl, false);
        kernels::gemv(d, ph, p.c_im.data(), him.data() + o, tmp.data(), false);
        for (int k = 0; k < d; ++k) yl[k] = 2.0 * (yl[k] - tmp[k]);
      }

      if (cache) {
        const size_t off = r * plane;
        auto put = [&](std::vector<double>& dst, const std::vector<double>& src) {
          std::memcpy(dst.data() + off, src.data(), plane * sizeof(double));
        };
        put(cache->vre, vre);
        put(cache->vim, vim);
        put(cache->are, are);
        put(cache->aim, aim);
        put(cache->gre, gre);
        put(cache->gim, gim);
        put(cache->hre, hre);
        put(cache->him, him);
      }
    }
  });
}

// Reverse pass. Complex chain rules use the real-pair adjoint identities:
// for w = c*z the adjoint is dz = conj(c)*dw, and for holomorphic f,
// dz = conj(f'(z))*dw; for a real parameter t, dt = Re(conj(dw/dt)*dw).
void backward(const Params& p, const Cache& cache, const double* dy, double* dx, Grads& g,
              int threads) {
  const int ph = p.p_half;
  const int d = p.d;
  const int rows = cache.rows;
  const int len = cache.len;
  const size_t plane = static_cast<size_t>(len) * ph;

  std::vector<double> s(ph), lre(ph), lim(ph);
  for (int j = 0; j < ph; ++j) {
    s[j] = std::exp(p.log_s[j]);
    lre[j] = -std::exp(p.lambda_re_log[j]);
    lim[j] = p.lambda_im[j];
  }

  const int t = std::max(1, std::min<int>(threads, std::max(rows, 1)));
  std::vector<Grads> partial(t, zero_grads(p));

  parallel_for_chunks(rows, t, [&](int w, size_t rb, size_t re_) {
    Grads& gw = partial[w];
    std::vector<double> Gre(ph), Gim(ph), dout_re(ph), dout_im(ph), dvre(ph), dvim(ph);

    for (size_t r = rb; r < re_; ++r) {
      const size_t off = r * plane;
      const double* xr = cache.x.data() + r * static_cast<size_t>(len) * d;
      const double* dtr = cache.delta_t.data() + r * len;
      const uint8_t* vr = cache.valid.data() + r * len;
      const double* dyr = dy + r * static_cast<size_t>(len) * d;
      double* dxr = dx + r * static_cast<size_t>(len) * d;

      std::fill(Gre.begin(), Gre.end(), 0.0);
      std::fill(Gim.begin(), Gim.end(), 0.0);

      for (int l = len - 1; l >= 0; --l) {
        const size_t o = off + static_cast<size_t>(l) * ph;
        const double* dyl = dyr + static_cast<size_t>(l) * d;
        double* dxl = dxr + static_cast<size_t>(l) * d;
        std::memset(dxl, 0, sizeof(double) * d);

        if (vr[l]) {
          // y = 2(c_re h_re - c_im h_im)
          for (int k = 0; k < d; ++k) {
            const double gk = 2.0 * dyl[k];
            if (gk == 0.0) continue;
            kernels::axpy(ph, gk, cache.hre.data() + o,
                          gw.c_re.data() + static_cast<size_t>(k) * ph);
            kernels::axpy(ph, -gk, cache.him.data() + o,
                          gw.c_im.data() + static_cast<size_t>(k) * ph);
          }
          kernels::gemv_t(d, ph, p.c_re.data(), dyl, dout_re.data(), false);
          kernels::gemv_t(d, ph, p.c_im.data(), dyl, dout_im.data(), false);
          for (int j = 0; j < ph; ++j) {
            Gre[j] += 2.0 * dout_re[j];
            Gim[j] -= 2.0 * dout_im[j];
          }
        }

        const double dt = dtr[l];
        const double* hre_prev = l > 0 ? cache.hre.data() + o - ph : nullptr;
        const double* him_prev = l > 0 ? cache.him.data() + o - ph : nullptr;

        for (int j = 0; j < ph; ++j) {
          const double gr = Gre[j];
          const double gi = Gim[j];
          const double ar = cache.are[o + j];
          const double ai = cache.aim[o + j];
          const double gmr = cache.gre[o + j];  // g' = (a-1)/mu
          const double gmi = cache.gim[o + j];
          const double vre_ = cache.vre[o + j];
          const double vim_ = cache.vim[o + j];

          // h_l = a (*) h_{l-1} + s * g' (*) v
          double dar = 0.0, dai = 0.0;
          if (l > 0) {
            dar = hre_prev[j] * gr + him_prev[j] * gi;
            dai = hre_prev[j] * gi - him_prev[j] * gr;
          }
          const double dgr = s[j] * (vre_ * gr + vim_ * gi);
          const double dgi = s[j] * (vre_ * gi - vim_ * gr);
          dvre[j] = s[j] * (gmr * gr + gmi * gi);
          dvim[j] = s[j] * (gmr * gi - gmi * gr);
          // increment = s * w with w = g' (*) v:
          double ds = (gmr * vre_ - gmi * vim_) * gr + (gmr * vim_ + gmi * vre_) * gi;

          // a = exp(dt*mu): da/dmu = dt*a
          const double dtar = dt * ar, dtai = dt * ai;
          double dmur = dtar * dar + dtai * dai;
          double dmui = dtar * dai - dtai * dar;

          const double mur = s[j] * lre[j];
          const double mui = s[j] * lim[j];
          const bool small =
              std::fabs(dt * mur) + std::fabs(dt * mui) < kernels::kZohSwitch;
          if (!small) {
            // dg'/dmu = (dt*a - g')/mu
            const double nr = dtar - gmr;
            const double ni = dtai - gmi;
            const double den = mur * mur + mui * mui;
            const double qr = (nr * mur + ni * mui) / den;
            const double qi = (ni * mur - nr * mui) / den;
            dmur += qr * dgr + qi * dgi;
            dmui += qr * dgi - qi * dgr;
          }
          // else: g' = dt exactly; no mu dependence at first order

          // mu = s*lambda: ds += Re(conj(lambda) dmu), dlambda = s*dmu
          ds += lre[j] * dmur + lim[j] * dmui;
          gw.log_s[j] += s[j] * ds;                     // s = exp(log_s)
          gw.lambda_re_log[j] += lre[j] * (s[j] * dmur);  // Re = -exp(log)
          gw.lambda_im[j] += s[j] * dmui;

          // h_{l-1} receives conj(a) * G
          Gre[j] = ar * gr + ai * gi;
          Gim[j] = ar * gi - ai * gr;
        }

        // v = b~ x
        const double* xl = xr + static_cast<size_t>(l) * d;
        kernels::ger(ph, d, 1.0, dvre.data(), xl, gw.b_re.data());
        kernels::ger(ph, d, 1.0, dvim.data(), xl, gw.b_im.data());
        kernels::gemv_t(ph, d, p.b_re.data(), dvre.data(), dxl, true);
        kernels::gemv_t(ph, d, p.b_im.data(), dvim.data(), dxl, true);
      }
    }
  });

  for (const auto& part : partial) add_grads(g, part);
}

}  // namespace ssrec::time_aware
