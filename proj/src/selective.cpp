#include "ssrec/selective.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

#include "ssrec/common.hpp"
#include "ssrec/kernels.hpp"
#include "ssrec/threading.hpp"

namespace ssrec::selective {

Grads zero_grads(const Params& p) {
  Grads g;
  g.a_log.assign(p.a_log.size(), 0.0);
  g.w_b.assign(p.w_b.size(), 0.0);
  g.w_c.assign(p.w_c.size(), 0.0);
  g.w_delta.assign(p.w_delta.size(), 0.0);
  g.delta_bias.assign(p.delta_bias.size(), 0.0);
  return g;
}

void add_grads(Grads& dst, const Grads& src) {
  auto acc = [](std::vector<double>& a, const std::vector<double>& b) {
    for (size_t i = 0; i < a.size(); ++i) a[i] += b[i];
  };
  acc(dst.a_log, src.a_log);
  acc(dst.w_b, src.w_b);
  acc(dst.w_c, src.w_c);
  acc(dst.w_delta, src.w_delta);
  acc(dst.delta_bias, src.delta_bias);
}

Params init(int p_dim, int d, Rng& rng) {
  if (p_dim < 1 || d < 1) throw ConfigError("selective layer dims must be >= 1");
  Params p;
  p.d = d;
  p.p = p_dim;
  p.a_log.resize(static_cast<size_t>(d) * p_dim);
  for (int k = 0; k < d; ++k)
    for (int j = 0; j < p_dim; ++j)
      p.a_log[static_cast<size_t>(k) * p_dim + j] = std::log(static_cast<double>(j + 1));

  const double sw = 1.0 / std::sqrt(static_cast<double>(d));
  p.w_b.resize(static_cast<size_t>(p_dim) * d);
  p.w_c.resize(static_cast<size_t>(p_dim) * d);
  for (auto& v : p.w_b) v = rng.normal(0.0, sw);
  for (auto& v : p.w_c) v = rng.normal(0.0, sw);
  p.w_delta.resize(d);
  for (auto& v : p.w_delta) v = rng.normal(0.0, sw);

  p.delta_bias.resize(d);
  for (auto& v : p.delta_bias) {
    const double dt = std::exp(rng.uniform(std::log(1e-3), std::log(1e-1)));
    v = std::log(std::expm1(dt));  // softplus^-1
  }
  return p;
}

namespace {

inline size_t ceil_div(size_t a, size_t b) { return (a + b - 1) / b; }

int pick_segment(int len) {
  int seg = static_cast<int>(std::ceil(std::sqrt(static_cast<double>(len))));
  return std::clamp(seg, 1, len);
}

}  // namespace

void forward(const Params& p, const double* x, const uint8_t* valid, int rows, int len,
             double* y, Cache* cache, int threads) {
  const int D = p.d;
  const int P = p.p;
  const size_t n_pos = static_cast<size_t>(rows) * len;
  const int seg = pick_segment(len);
  const int n_seg = static_cast<int>(ceil_div(len, seg));

  // position-wise projections, shared across channels
  std::vector<double> r_all(n_pos), delta_all(n_pos * D), b_all(n_pos * P), c_all(n_pos * P);
  parallel_for_chunks(n_pos, threads, [&](int, size_t b0, size_t b1) {
    for (size_t i = b0; i < b1; ++i) {
      const double* xi = x + i * D;
      r_all[i] = kernels::dot(D, p.w_delta.data(), xi);
      for (int k = 0; k < D; ++k)
        delta_all[i * D + k] = kernels::softplus(p.delta_bias[k] + r_all[i]);
      kernels::gemv(P, D, p.w_b.data(), xi, b_all.data() + i * P, false);
      kernels::gemv(P, D, p.w_c.data(), xi, c_all.data() + i * P, false);
    }
  });

  if (cache) {
    cache->rows = rows;
    cache->len = len;
    cache->seg = seg;
    cache->n_seg = n_seg;
    cache->x.assign(x, x + n_pos * D);
    cache->valid.assign(valid, valid + n_pos);
    cache->r = r_all;
    cache->delta = delta_all;
    cache->bvec = b_all;
    cache->cvec = c_all;
    cache->h_ckpt.assign(static_cast<size_t>(rows) * D * n_seg * P, 0.0);
  }

  std::vector<double> a_mat(static_cast<size_t>(D) * P);  // A = -exp(a_log)
  for (size_t i = 0; i < a_mat.size(); ++i) a_mat[i] = -std::exp(p.a_log[i]);

  parallel_for_chunks(rows, threads, [&](int, size_t rb, size_t re_) {
    const size_t plane = static_cast<size_t>(len) * P;
    std::vector<double> abar(plane), inc(plane), h(plane), gamma(P), h0(P, 0.0);

    for (size_t r = rb; r < re_; ++r) {
      const uint8_t* vr = valid + r * len;
      const size_t pos0 = r * static_cast<size_t>(len);

      for (int d = 0; d < D; ++d) {
        const double* a_row = a_mat.data() + static_cast<size_t>(d) * P;
        for (int l = 0; l < len; ++l) {
          const size_t o = static_cast<size_t>(l) * P;
          if (!vr[l]) {
            for (int j = 0; j < P; ++j) {
              abar[o + j] = 1.0;
              inc[o + j] = 0.0;
            }
            continue;
          }
          const double dt = delta_all[(pos0 + l) * D + d];
          const double xv = x[(pos0 + l) * D + d];
          const double* bl = b_all.data() + (pos0 + l) * P;
          kernels::discretize_real(P, dt, a_row, abar.data() + o, gamma.data());
          for (int j = 0; j < P; ++j) inc[o + j] = gamma[j] * bl[j] * xv;
        }

        kernels::scan_parallel(len, P, abar.data(), inc.data(), h0.data(), h.data());

        double* yr = y + pos0 * D;
        for (int l = 0; l < len; ++l) {
          yr[static_cast<size_t>(l) * D + d] =
              vr[l] ? kernels::dot(P, c_all.data() + (pos0 + l) * P,
                                   h.data() + static_cast<size_t>(l) * P)
                    : 0.0;
        }

        if (cache) {
          double* ck = cache->h_ckpt.data() +
                       ((r * D + d) * static_cast<size_t>(n_seg)) * P;
          // state before segment si = h after position si*seg - 1
          for (int si = 1; si < n_seg; ++si)
            std::memcpy(ck + static_cast<size_t>(si) * P,
                        h.data() + (static_cast<size_t>(si) * seg - 1) * P,
                        sizeof(double) * P);
        }
      }
    }
  });
}

void backward(const Params& p, const Cache& cache, const double* dy, double* dx, Grads& g,
              int threads) {
  const int D = p.d;
  const int P = p.p;
  const int rows = cache.rows;
  const int len = cache.len;
  const int seg = cache.seg;
  const int n_seg = cache.n_seg;

  const int t = std::max(1, std::min<int>(threads, std::max(rows, 1)));
  std::vector<Grads> partial(t, zero_grads(p));

  parallel_for_chunks(rows, t, [&](int w, size_t rb, size_t re_) {
    Grads& gw = partial[w];
    std::vector<double> a_row(P), habar(static_cast<size_t>(seg) * P),
        hgamma(static_cast<size_t>(seg) * P), hloc(static_cast<size_t>(seg) * P), hpre(P),
        G(P);
    std::vector<double> dbvec(static_cast<size_t>(len) * P);
    std::vector<double> dcvec(static_cast<size_t>(len) * P);
    std::vector<double> dr(len);
    std::vector<double> ddelta(static_cast<size_t>(len) * D);

    for (size_t r = rb; r < re_; ++r) {
      const size_t pos0 = r * static_cast<size_t>(len);
      const uint8_t* vr = cache.valid.data() + pos0;
      const double* dyr = dy + pos0 * D;
      double* dxr = dx + pos0 * D;
      std::memset(dxr, 0, sizeof(double) * static_cast<size_t>(len) * D);
      std::fill(dbvec.begin(), dbvec.end(), 0.0);
      std::fill(dcvec.begin(), dcvec.end(), 0.0);
      std::fill(dr.begin(), dr.end(), 0.0);
      std::fill(ddelta.begin(), ddelta.end(), 0.0);

      for (int d = 0; d < D; ++d) {
        for (int j = 0; j < P; ++j)
          a_row[j] = -std::exp(p.a_log[static_cast<size_t>(d) * P + j]);
        std::fill(G.begin(), G.end(), 0.0);

        const double* ck =
            cache.h_ckpt.data() + ((r * D + d) * static_cast<size_t>(n_seg)) * P;

        for (int si = n_seg - 1; si >= 0; --si) {
          const int l0 = si * seg;
          const int l1 = std::min(len, l0 + seg);

          // recompute the segment forward from its checkpoint
          std::memcpy(hpre.data(), ck + static_cast<size_t>(si) * P, sizeof(double) * P);
          const double* prev = hpre.data();
          for (int l = l0; l < l1; ++l) {
            const size_t o = static_cast<size_t>(l - l0) * P;
            double* hl = hloc.data() + o;
            if (vr[l]) {
              const double dt = cache.delta[(pos0 + l) * D + d];
              const double xv = cache.x[(pos0 + l) * D + d];
              const double* bl = cache.bvec.data() + (pos0 + l) * P;
              kernels::discretize_real(P, dt, a_row.data(), habar.data() + o,
                                       hgamma.data() + o);
              for (int j = 0; j < P; ++j)
                hl[j] = habar[o + j] * prev[j] + hgamma[o + j] * bl[j] * xv;
            } else {
              for (int j = 0; j < P; ++j) {
                habar[o + j] = 1.0;
                hgamma[o + j] = 0.0;
                hl[j] = prev[j];
              }
            }
            prev = hl;
          }

          // reverse within the segment
          for (int l = l1 - 1; l >= l0; --l) {
            const size_t o = static_cast<size_t>(l - l0) * P;
            const double* h_prev = l == l0 ? ck + static_cast<size_t>(si) * P
                                           : hloc.data() + o - P;
            if (vr[l]) {
              const double dyv = dyr[static_cast<size_t>(l) * D + d];
              const double dt = cache.delta[(pos0 + l) * D + d];
              const double xv = cache.x[(pos0 + l) * D + d];
              const double* bl = cache.bvec.data() + (pos0 + l) * P;
              const double* cl = cache.cvec.data() + (pos0 + l) * P;
              double* dbl = dbvec.data() + static_cast<size_t>(l) * P;
              double* dcl = dcvec.data() + static_cast<size_t>(l) * P;
              double dxv = 0.0;
              double d_dt = 0.0;
              double* ga = gw.a_log.data() + static_cast<size_t>(d) * P;

              for (int j = 0; j < P; ++j) {
                // y pull: y = C . h
                double gj = G[j] + dyv * cl[j];
                dcl[j] += dyv * hloc[o + j];

                const double ab = habar[o + j];
                const double gm = hgamma[o + j];
                const double da = gj * h_prev[j];
                const double dinc = gj;
                const double dgm = dinc * bl[j] * xv;
                dbl[j] += dinc * gm * xv;
                dxv += dinc * gm * bl[j];

                const double a = a_row[j];
                const double z = dt * a;
                double dA = da * dt * ab;
                if (std::fabs(z) < kernels::kZohSwitch) {
                  d_dt += da * a * ab + dgm;  // dgamma/ddt = 1 in the limit
                } else {
                  d_dt += da * a * ab + dgm * ab;
                  dA += dgm * (dt * ab - gm) / a;
                }
                ga[j] += a * dA;  // A = -exp(a_log)

                G[j] = ab * gj;  // propagate to h_{l-1}
              }
              dxr[static_cast<size_t>(l) * D + d] += dxv;
              ddelta[static_cast<size_t>(l) * D + d] = d_dt;
            }
            // pads: abar = 1, so G passes through and nothing learns here
          }
        }
      }

      // chain delta = softplus(bias_d + r_l) and the shared projections
      for (int l = 0; l < len; ++l) {
        if (!vr[l]) continue;
        const double* xl = cache.x.data() + (pos0 + l) * D;
        double* dxl = dxr + static_cast<size_t>(l) * D;
        double drl = 0.0;
        for (int d = 0; d < D; ++d) {
          const double du = ddelta[static_cast<size_t>(l) * D + d] *
                            kernels::sigmoid(p.delta_bias[d] + cache.r[pos0 + l]);
          gw.delta_bias[d] += du;
          drl += du;
        }
        dr[l] = drl;

        const double* dbl = dbvec.data() + static_cast<size_t>(l) * P;
        const double* dcl = dcvec.data() + static_cast<size_t>(l) * P;
        kernels::ger(P, D, 1.0, dbl, xl, gw.w_b.data());
        kernels::ger(P, D, 1.0, dcl, xl, gw.w_c.data());
        kernels::gemv_t(P, D, p.w_b.data(), dbl, dxl, true);
        kernels::gemv_t(P, D, p.w_c.data(), dcl, dxl, true);
        kernels::axpy(D, dr[l], xl, gw.w_delta.data());
        kernels::axpy(D, dr[l], p.w_delta.data(), dxl);
      }
    }
  });

  for (const auto& part : partial) add_grads(g, part);
}

}  // namespace ssrec::selective
