#include "ssrec/audit.hpp"

#include <chrono>
#include <cmath>
#include <complex>
#include <functional>
#include <sstream>

#include "ssrec/common.hpp"
#include "ssrec/data.hpp"
#include "ssrec/kernels.hpp"
#include "ssrec/model.hpp"
#include "ssrec/rng.hpp"
#include "ssrec/trainer.hpp"

namespace ssrec::audit {

namespace {

double now_seconds() {
  using clock = std::chrono::steady_clock;
  return std::chrono::duration<double>(clock::now().time_since_epoch()).count();
}

double rel_err(double got, double want) {
  return std::fabs(got - want) / std::max({std::fabs(got), std::fabs(want), 1e-300});
}

// recursive adaptive Simpson on a real integrand
double adaptive_simpson(const std::function<double(double)>& f, double a, double b, double fa,
                        double fb, double fm, double whole, double tol, int depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m);
  const double rm = 0.5 * (m + b);
  const double flm = f(lm);
  const double frm = f(rm);
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  const double delta = left + right - whole;
  if (depth <= 0 || std::fabs(delta) <= 15.0 * tol) return left + right + delta / 15.0;
  return adaptive_simpson(f, a, m, fa, fm, flm, left, 0.5 * tol, depth - 1) +
         adaptive_simpson(f, m, b, fm, fb, frm, right, 0.5 * tol, depth - 1);
}

double integrate(const std::function<double(double)>& f, double a, double b, double tol) {
  const double fa = f(a);
  const double fb = f(b);
  const double fm = f(0.5 * (a + b));
  const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  return adaptive_simpson(f, a, b, fa, fb, fm, whole, tol, 48);
}

}  // namespace

void quad_exp_integral(double lre, double lim, double delta, double tol, double* out_re,
                       double* out_im) {
  if (delta == 0.0) {
    *out_re = 0.0;
    *out_im = 0.0;
    return;
  }
  *out_re = integrate([&](double u) { return std::exp(lre * u) * std::cos(lim * u); }, 0.0,
                      delta, tol);
  *out_im = integrate([&](double u) { return std::exp(lre * u) * std::sin(lim * u); }, 0.0,
                      delta, tol);
}

SuiteResult run_scan_suite(uint64_t seed, int n_cases, double tol, int fault) {
  const double t0 = now_seconds();
  SuiteResult res;
  res.name = "scan";
  Rng rng(seed);
  double worst = 0.0;
  size_t worst_len = 0;

  for (int c = 0; c < n_cases; ++c) {
    const size_t L = 1 + rng.below(1024);
    const size_t S = 1 + rng.below(8);
    std::vector<double> A(L * S), b(L * S), h0(S), hs(L * S), hp(L * S);
    for (auto& v : A) v = rng.uniform(-1.0, 1.0);  // stable: |A| <= 1
    for (auto& v : b) v = rng.uniform(-2.0, 2.0);
    for (auto& v : h0) v = rng.uniform(-1.0, 1.0);
    kernels::scan_sequential(L, S, A.data(), b.data(), h0.data(), hs.data());
    kernels::scan_parallel(L, S, A.data(), b.data(), h0.data(), hp.data());
    if (fault && c == n_cases / 2) hp[hp.size() / 2] += 1e-3;
    for (size_t i = 0; i < hs.size(); ++i) {
      const double e = std::fabs(hp[i] - hs[i]) /
                       std::max({std::fabs(hs[i]), std::fabs(hp[i]), 1.0});
      if (e > worst) {
        worst = e;
        worst_len = L;
      }
    }
    // complex planes every few cases
    if (c % 4 == 0) {
      std::vector<double> Ai(L * S), bi(L * S), h0i(S), hsr(L * S), hsi(L * S), hpr(L * S),
          hpi(L * S);
      for (size_t i = 0; i < L * S; ++i) {
        const double mag = rng.uniform(0.0, 1.0);
        const double ph = rng.uniform(0.0, 6.283185307179586);
        A[i] = mag * std::cos(ph);
        Ai[i] = mag * std::sin(ph);
        bi[i] = rng.uniform(-2.0, 2.0);
      }
      for (auto& v : h0i) v = rng.uniform(-1.0, 1.0);
      kernels::scan_sequential_cplx(L, S, A.data(), Ai.data(), b.data(), bi.data(), h0.data(),
                                    h0i.data(), hsr.data(), hsi.data());
      kernels::scan_parallel_cplx(L, S, A.data(), Ai.data(), b.data(), bi.data(), h0.data(),
                                  h0i.data(), hpr.data(), hpi.data());
      for (size_t i = 0; i < hsr.size(); ++i) {
        const double e1 = std::fabs(hpr[i] - hsr[i]) /
                          std::max({std::fabs(hsr[i]), std::fabs(hpr[i]), 1.0});
        const double e2 = std::fabs(hpi[i] - hsi[i]) /
                          std::max({std::fabs(hsi[i]), std::fabs(hpi[i]), 1.0});
        worst = std::max({worst, e1, e2});
      }
    }
  }

  res.pass = worst <= tol;
  std::ostringstream os;
  os << n_cases << " systems, max rel dev " << worst << " (tol " << tol << ", worst at L "
     << worst_len << ")";
  res.detail = os.str();
  res.seconds = now_seconds() - t0;
  return res;
}

SuiteResult run_zoh_suite(uint64_t seed, int n_cases, double tol, int fault) {
  const double t0 = now_seconds();
  SuiteResult res;
  res.name = "zoh";
  Rng rng(seed);
  double worst = 0.0;

  for (int c = 0; c < n_cases; ++c) {
    const double lre = -std::exp(rng.uniform(std::log(1e-3), std::log(3.0)));
    const double lim = rng.uniform(-5.0, 5.0);
    const double delta = std::exp(rng.uniform(std::log(1e-6), std::log(3.0)));
    const std::complex<double> lambda(lre, lim);
    const std::complex<double> btilde(rng.uniform(-2.0, 2.0), rng.uniform(-2.0, 2.0));

    const auto zoh = kernels::zoh_discretize_diagonal(lambda, btilde, delta);

    double qre = 0.0, qim = 0.0;
    quad_exp_integral(lre, lim, delta, 1e-13, &qre, &qim);
    std::complex<double> want = std::complex<double>(qre, qim) * btilde;
    std::complex<double> got = zoh.b_bar;
    if (fault && c == n_cases / 2) got += 1e-4;
    const double err = std::abs(got - want) / std::max(std::abs(want), 1e-12);
    worst = std::max(worst, err);

    // a_bar against the closed form of the homogeneous solution
    const std::complex<double> aref = std::exp(delta * lambda);
    worst = std::max(worst, std::abs(zoh.a_bar - aref) / std::max(std::abs(aref), 1e-12));
  }

  res.pass = worst <= tol;
  std::ostringstream os;
  os << n_cases << " (lambda, delta) draws vs adaptive quadrature, max rel err " << worst
     << " (tol " << tol << ")";
  res.detail = os.str();
  res.seconds = now_seconds() - t0;
  return res;
}

SuiteResult run_cross_suite(uint64_t seed, int n_cases, int fault) {
  const double t0 = now_seconds();
  SuiteResult res;
  res.name = "cross";
  Rng rng(seed);
  int mismatches = 0;

  for (int c = 0; c < n_cases; ++c) {
    const double a = -std::exp(rng.uniform(std::log(1e-6), std::log(16.0)));
    const double b = rng.uniform(-3.0, 3.0);
    const double delta = std::exp(rng.uniform(std::log(1e-12), std::log(4.0)));
    const auto sel = kernels::selective_discretize(a, b, delta);
    const auto zoh = kernels::zoh_discretize_diagonal({a, 0.0}, {b, 0.0}, delta);
    double abar = zoh.a_bar.real();
    if (fault && c == n_cases / 2) abar += 1e-9;
    if (abar != sel.a_bar || zoh.b_bar.real() != sel.b_bar || zoh.a_bar.imag() != 0.0 ||
        zoh.b_bar.imag() != 0.0)
      ++mismatches;
  }

  res.pass = mismatches == 0;
  std::ostringstream os;
  os << n_cases << " matched-argument draws, " << mismatches << " bitwise mismatches";
  res.detail = os.str();
  res.seconds = now_seconds() - t0;
  return res;
}

SuiteResult run_grad_suite(uint64_t seed, double tol, int fault) {
  const double t0 = now_seconds();
  SuiteResult res;
  res.name = "grad";

  model::ModelConfig cfg;
  cfg.n_items = 12;
  cfg.d = 8;
  cfg.p = 4;
  cfg.blocks = 1;
  cfg.max_len = 4;
  cfg.dropout = 0.0;
  cfg.interval_scale = 1.0;
  model::ModelState m = model::init_model(cfg, seed);

  // two short sequences with irregular spacing
  std::vector<data::Interaction> recs;
  Rng rng(seed);
  for (int u = 0; u < 2; ++u) {
    int64_t ts = 0;
    for (int i = 0; i < 4; ++i) {
      ts += 1 + static_cast<int64_t>(rng.below(5));
      recs.push_back({u, static_cast<int32_t>(1 + rng.below(cfg.n_items)), ts});
    }
  }
  auto seqs = data::build_user_sequences(recs);
  const auto batches = data::make_batches(seqs, cfg.max_len, 2);

  model::ModelState analytic = train::compute_grads(m, batches[0]);
  if (fault) {
    auto refs = analytic.tensors();
    for (auto& r : refs)
      if (r.name == "block0.ta.c_re")
        for (size_t i = 0; i < r.size; ++i) r.data[i] = -r.data[i];
  }
  const auto report = train::audit_grads(m, batches[0], analytic, 1e-5, 8, tol, seed);

  res.pass = report.pass;
  double worst = 0.0;
  std::string worst_name;
  for (const auto& e : report.entries)
    if (e.max_rel > worst) {
      worst = e.max_rel;
      worst_name = e.tensor;
    }
  std::ostringstream os;
  os << report.entries.size() << " tensors, worst rel err " << worst << " (" << worst_name
     << ", tol " << tol << ")";
  res.detail = os.str();
  res.seconds = now_seconds() - t0;
  return res;
}

SuiteResult run_simd_suite(uint64_t seed, int fault) {
  const double t0 = now_seconds();
  SuiteResult res;
  res.name = "simd";
  if (!kernels::avx2_supported()) {
    res.pass = true;
    res.detail = "avx2 unavailable; skipped";
    res.seconds = now_seconds() - t0;
    return res;
  }

  const kernels::Isa saved = kernels::active_isa();
  Rng rng(seed);
  double worst = 0.0;

  const size_t n = 4097;
  std::vector<double> x(n), ys(n), yv(n);
  for (auto& v : x) v = rng.uniform(-700.0, 700.0);
  kernels::set_isa(kernels::Isa::Scalar);
  kernels::vexp(n, x.data(), ys.data());
  kernels::set_isa(kernels::Isa::Avx2);
  kernels::vexp(n, x.data(), yv.data());
  if (fault) yv[7] *= 1.0 + 1e-9;
  for (size_t i = 0; i < n; ++i) worst = std::max(worst, rel_err(yv[i], ys[i]));

  // scans, layer norm, softmax, gemv
  const size_t L = 257, S = 7;
  std::vector<double> A(L * S), b(L * S), h0(S), h1(L * S), h2(L * S);
  for (auto& v : A) v = rng.uniform(-1.0, 1.0);
  for (auto& v : b) v = rng.uniform(-1.0, 1.0);
  for (auto& v : h0) v = rng.uniform(-1.0, 1.0);
  kernels::set_isa(kernels::Isa::Scalar);
  kernels::scan_parallel(L, S, A.data(), b.data(), h0.data(), h1.data());
  kernels::set_isa(kernels::Isa::Avx2);
  kernels::scan_parallel(L, S, A.data(), b.data(), h0.data(), h2.data());
  for (size_t i = 0; i < h1.size(); ++i)
    worst = std::max(worst, std::fabs(h1[i] - h2[i]) /
                                std::max({std::fabs(h1[i]), std::fabs(h2[i]), 1.0}));

  const size_t D = 37;
  std::vector<double> xx(D), gamma(D), beta(D), y1(D), y2(D);
  for (auto& v : xx) v = rng.uniform(-2.0, 2.0);
  for (auto& v : gamma) v = rng.uniform(0.5, 1.5);
  for (auto& v : beta) v = rng.uniform(-0.5, 0.5);
  kernels::set_isa(kernels::Isa::Scalar);
  kernels::layer_norm(D, xx.data(), gamma.data(), beta.data(), 1e-5, y1.data(), nullptr,
                      nullptr);
  kernels::set_isa(kernels::Isa::Avx2);
  kernels::layer_norm(D, xx.data(), gamma.data(), beta.data(), 1e-5, y2.data(), nullptr,
                      nullptr);
  for (size_t i = 0; i < D; ++i) worst = std::max(worst, std::fabs(y1[i] - y2[i]));

  std::vector<double> logits(101), g1(101), g2(101);
  for (auto& v : logits) v = rng.uniform(-8.0, 8.0);
  kernels::set_isa(kernels::Isa::Scalar);
  const double l1 = kernels::softmax_xent(logits.size(), logits.data(), 13, g1.data());
  kernels::set_isa(kernels::Isa::Avx2);
  const double l2 = kernels::softmax_xent(logits.size(), logits.data(), 13, g2.data());
  worst = std::max(worst, std::fabs(l1 - l2));
  for (size_t i = 0; i < g1.size(); ++i) worst = std::max(worst, std::fabs(g1[i] - g2[i]));

  kernels::set_isa(saved);
  const double tol = 1e-11;
  res.pass = worst <= tol;
  std::ostringstream os;
  os << "scalar vs avx2, max deviation " << worst << " (tol " << tol << ")";
  res.detail = os.str();
  res.seconds = now_seconds() - t0;
  return res;
}

const std::vector<std::string>& suite_names() {
  static const std::vector<std::string> names = {"scan", "zoh", "cross", "grad", "simd"};
  return names;
}

std::vector<SuiteResult> run_suites(const std::vector<std::string>& names, uint64_t seed,
                                    int fault) {
  std::vector<SuiteResult> out;
  for (const auto& n : names) {
    if (n == "scan")
      out.push_back(run_scan_suite(seed, 300, 1e-10, fault));
    else if (n == "zoh")
      out.push_back(run_zoh_suite(seed, 400, 1e-8, fault));
    else if (n == "cross")
      out.push_back(run_cross_suite(seed, 2000, fault));
    else if (n == "grad")
      out.push_back(run_grad_suite(seed, 1e-4, fault));
    else if (n == "simd")
      out.push_back(run_simd_suite(seed, fault));
    else
      throw ConfigError("unknown audit suite '" + n + "' (scan|zoh|cross|grad|simd)");
  }
  return out;
}

}  // namespace ssrec::audit
