#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <complex>
#include <limits>
#include <vector>

#include "ssrec/audit.hpp"
#include "ssrec/kernels.hpp"
#include "ssrec/rng.hpp"
#include "testing_util.hpp"

using namespace ssrec;
using kernels::Isa;
using testing::rel_err;

namespace {

// every dispatched kernel is exercised under both tables when available
struct IsaIter {
  std::vector<Isa> isas;
  IsaIter() {
    isas.push_back(Isa::Scalar);
    if (kernels::avx2_supported()) isas.push_back(Isa::Avx2);
  }
  ~IsaIter() { kernels::set_isa("auto"); }
};

}  // namespace

TEST_CASE("zoh closed forms") {
  const auto id = kernels::zoh_discretize_diagonal({-1.0, 0.5}, {1.0, 0.0}, 0.0);
  CHECK(id.a_bar == std::complex<double>(1.0, 0.0));
  CHECK(id.b_bar == std::complex<double>(0.0, 0.0));

  const auto half = kernels::zoh_discretize_diagonal({-1.0, 0.0}, {1.0, 0.0}, std::log(2.0));
  CHECK(rel_err(half.a_bar.real(), 0.5) < 1e-14);
  CHECK(std::fabs(half.a_bar.imag()) == 0.0);
  CHECK(rel_err(half.b_bar.real(), 0.5) < 1e-14);

  CHECK_THROWS_AS(
      kernels::zoh_discretize_diagonal({std::nan(""), 0.0}, {1.0, 0.0}, 1.0),
      NumericError);
  CHECK_THROWS_AS(kernels::zoh_discretize_diagonal({-1.0, 0.0}, {1.0, 0.0}, -0.5),
                  NumericError);
}

TEST_CASE("zoh against adaptive quadrature") {
  Rng rng(42);
  double worst = 0.0;
  for (int c = 0; c < 200; ++c) {
    const double lre = -std::exp(rng.uniform(std::log(1e-3), std::log(3.0)));
    const double lim = rng.uniform(-5.0, 5.0);
    const double delta = std::exp(rng.uniform(std::log(1e-6), std::log(3.0)));
    const std::complex<double> btilde(rng.uniform(-2.0, 2.0), rng.uniform(-2.0, 2.0));
    const auto got = kernels::zoh_discretize_diagonal({lre, lim}, btilde, delta);
    double qre = 0.0, qim = 0.0;
    audit::quad_exp_integral(lre, lim, delta, 1e-13, &qre, &qim);
    const std::complex<double> want = std::complex<double>(qre, qim) * btilde;
    worst = std::max(worst, std::abs(got.b_bar - want) / std::max(std::abs(want), 1e-12));
  }
  CHECK(worst < 1e-8);
}

TEST_CASE("zoh small-step euler consistency") {
  // for delta -> 0: a_bar = 1 + delta*lambda + O(delta^2)
  Rng rng(7);
  for (int c = 0; c < 100; ++c) {
    const std::complex<double> lambda(-rng.uniform(0.1, 4.0), rng.uniform(-4.0, 4.0));
    const double delta = 1e-6;
    const auto got = kernels::zoh_discretize_diagonal(lambda, {1.0, 0.0}, delta);
    const std::complex<double> euler = 1.0 + delta * lambda;
    CHECK(std::abs(got.a_bar - euler) / std::abs(euler) < 1e-5);
    const std::complex<double> b_euler = delta;
    CHECK(std::abs(got.b_bar - b_euler) / std::abs(b_euler) < 1e-5);
  }
}

TEST_CASE("selective discretize closed forms and limits") {
  const auto v = kernels::selective_discretize(-1.0, 2.0, 1.0);
  CHECK(rel_err(v.a_bar, std::exp(-1.0)) < 1e-15);
  CHECK(rel_err(v.b_bar, 2.0 * (1.0 - std::exp(-1.0))) < 1e-14);

  const auto tiny = kernels::selective_discretize(-3.0, 2.0, 1e-12);
  CHECK(tiny.a_bar == doctest::Approx(1.0));
  CHECK(tiny.b_bar == doctest::Approx(2e-12).epsilon(1e-9));
}

TEST_CASE("selective matches diagonal zoh exactly on real arguments") {
  Rng rng(3);
  for (int c = 0; c < 500; ++c) {
    const double a = -std::exp(rng.uniform(std::log(1e-6), std::log(16.0)));
    const double b = rng.uniform(-3.0, 3.0);
    const double delta = std::exp(rng.uniform(std::log(1e-12), std::log(4.0)));
    const auto sel = kernels::selective_discretize(a, b, delta);
    const auto zoh = kernels::zoh_discretize_diagonal({a, 0.0}, {b, 0.0}, delta);
    CHECK(zoh.a_bar.real() == sel.a_bar);
    CHECK(zoh.b_bar.real() == sel.b_bar);
    CHECK(zoh.a_bar.imag() == 0.0);
    CHECK(zoh.b_bar.imag() == 0.0);
  }
}

TEST_CASE("softplus") {
  CHECK(rel_err(kernels::softplus(0.0), std::log(2.0)) < 1e-15);
  CHECK(rel_err(kernels::softplus(100.0), 100.0) < 1e-15);
  CHECK(std::isfinite(kernels::softplus(100.0)));
  CHECK(rel_err(kernels::softplus(-100.0), std::exp(-100.0)) < 1e-12);
  CHECK(kernels::softplus(-100.0) > 0.0);
  CHECK(std::isfinite(kernels::softplus(700.0)));
}

TEST_CASE("scan element composition is associative") {
  // ((e1 o e2) o e3)(h0) vs (e1 o (e2 o e3))(h0), wide precision
  Rng rng(11);
  auto compose = [](std::pair<double, double> f, std::pair<double, double> s) {
    return std::pair<double, double>{s.first * f.first, s.first * f.second + s.second};
  };
  double worst = 0.0;
  for (int c = 0; c < 500; ++c) {
    const std::pair<double, double> e1{rng.uniform(-1, 1), rng.uniform(-2, 2)};
    const std::pair<double, double> e2{rng.uniform(-1, 1), rng.uniform(-2, 2)};
    const std::pair<double, double> e3{rng.uniform(-1, 1), rng.uniform(-2, 2)};
    const double h0 = rng.uniform(-1, 1);
    const auto left = compose(compose(e1, e2), e3);
    const auto right = compose(e1, compose(e2, e3));
    const double hl = left.first * h0 + left.second;
    const double hr = right.first * h0 + right.second;
    worst = std::max(worst, std::fabs(hl - hr) / std::max({std::fabs(hl), std::fabs(hr), 1.0}));
  }
  CHECK(worst < 1e-12);
}

TEST_CASE("sequential recurrence basics") {
  SUBCASE("empty") {
    std::vector<double> h;
    kernels::scan_sequential(0, 4, nullptr, nullptr, nullptr, h.data());
  }
  SUBCASE("cumulative sum") {
    const size_t L = 17;
    std::vector<double> A(L, 1.0), b(L, 1.0), h0(1, 0.0), h(L);
    kernels::scan_sequential(L, 1, A.data(), b.data(), h0.data(), h.data());
    for (size_t l = 0; l < L; ++l) CHECK(h[l] == doctest::Approx(l + 1.0));
  }
  SUBCASE("single step") {
    const double A = 0.37, b = -1.25, h0 = 2.0;
    double h = 0.0;
    kernels::scan_sequential(1, 1, &A, &b, &h0, &h);
    CHECK(h == doctest::Approx(A * h0 + b));
  }
}

TEST_CASE("parallel scan equals sequential recurrence") {
  IsaIter it;
  for (Isa isa : it.isas) {
    kernels::set_isa(isa);
    CAPTURE(kernels::isa_name(isa));
    Rng rng(99);
    double worst = 0.0;
    for (int c = 0; c < 120; ++c) {
      const size_t L = 1 + rng.below(1024);
      const size_t S = 1 + rng.below(9);
      std::vector<double> A(L * S), b(L * S), h0(S), hs(L * S), hp(L * S);
      for (auto& v : A) v = rng.uniform(-1.0, 1.0);
      for (auto& v : b) v = rng.uniform(-2.0, 2.0);
      for (auto& v : h0) v = rng.uniform(-1.0, 1.0);
      kernels::scan_sequential(L, S, A.data(), b.data(), h0.data(), hs.data());
      kernels::scan_parallel(L, S, A.data(), b.data(), h0.data(), hp.data());
      for (size_t i = 0; i < hs.size(); ++i)
        worst = std::max(worst, std::fabs(hp[i] - hs[i]) /
                                    std::max({std::fabs(hs[i]), std::fabs(hp[i]), 1.0}));
    }
    CHECK(worst < 1e-10);

    SUBCASE("L=1 identical to one step") {}
    {
      const double A = -0.8, b = 0.4, h0 = 1.5;
      double hs = 0.0, hp = 0.0;
      kernels::scan_sequential(1, 1, &A, &b, &h0, &hs);
      kernels::scan_parallel(1, 1, &A, &b, &h0, &hp);
      CHECK(hs == hp);
    }

    // fixed L=1024 randomized suite with an absolute bound
    {
      Rng r2(5);
      const size_t L = 1024, S = 4;
      std::vector<double> A(L * S), b(L * S), h0(S, 0.25), hs(L * S), hp(L * S);
      for (auto& v : A) v = r2.uniform(-1.0, 1.0);
      for (auto& v : b) v = r2.uniform(-2.0, 2.0);
      kernels::scan_sequential(L, S, A.data(), b.data(), h0.data(), hs.data());
      kernels::scan_parallel(L, S, A.data(), b.data(), h0.data(), hp.data());
      double worst_abs = 0.0;
      for (size_t i = 0; i < hs.size(); ++i)
        worst_abs = std::max(worst_abs, std::fabs(hp[i] - hs[i]));
      CHECK(worst_abs < 1e-9);
    }
  }
}

TEST_CASE("complex parallel scan equals sequential") {
  IsaIter it;
  for (Isa isa : it.isas) {
    kernels::set_isa(isa);
    CAPTURE(kernels::isa_name(isa));
    Rng rng(123);
    double worst = 0.0;
    for (int c = 0; c < 60; ++c) {
      const size_t L = 1 + rng.below(600);
      const size_t S = 1 + rng.below(7);
      std::vector<double> Ar(L * S), Ai(L * S), br(L * S), bi(L * S), h0r(S), h0i(S);
      std::vector<double> sr(L * S), si(L * S), pr(L * S), pi(L * S);
      for (size_t i = 0; i < L * S; ++i) {
        const double mag = rng.uniform(0.0, 1.0);
        const double ph = rng.uniform(0.0, 6.28318530717958648);
        Ar[i] = mag * std::cos(ph);
        Ai[i] = mag * std::sin(ph);
        br[i] = rng.uniform(-2.0, 2.0);
        bi[i] = rng.uniform(-2.0, 2.0);
      }
      for (size_t j = 0; j < S; ++j) {
        h0r[j] = rng.uniform(-1.0, 1.0);
        h0i[j] = rng.uniform(-1.0, 1.0);
      }
      kernels::scan_sequential_cplx(L, S, Ar.data(), Ai.data(), br.data(), bi.data(), h0r.data(),
                                    h0i.data(), sr.data(), si.data());
      kernels::scan_parallel_cplx(L, S, Ar.data(), Ai.data(), br.data(), bi.data(), h0r.data(),
                                  h0i.data(), pr.data(), pi.data());
      for (size_t i = 0; i < sr.size(); ++i) {
        worst = std::max(worst, std::fabs(pr[i] - sr[i]) /
                                    std::max({std::fabs(sr[i]), std::fabs(pr[i]), 1.0}));
        worst = std::max(worst, std::fabs(pi[i] - si[i]) /
                                    std::max({std::fabs(si[i]), std::fabs(pi[i]), 1.0}));
      }
    }
    CHECK(worst < 1e-10);
  }
}

TEST_CASE("narrow-precision scans agree at float tolerance") {
  Rng rng(17);
  double worst = 0.0;
  for (int c = 0; c < 60; ++c) {
    const size_t L = 1 + rng.below(1024);
    const size_t S = 1 + rng.below(5);
    std::vector<float> A(L * S), b(L * S), h0(S), hs(L * S), hp(L * S);
    for (auto& v : A) v = static_cast<float>(rng.uniform(-1.0, 1.0));
    for (auto& v : b) v = static_cast<float>(rng.uniform(-2.0, 2.0));
    for (auto& v : h0) v = static_cast<float>(rng.uniform(-1.0, 1.0));
    kernels::scan_sequential_f(L, S, A.data(), b.data(), h0.data(), hs.data());
    kernels::scan_parallel_f(L, S, A.data(), b.data(), h0.data(), hp.data());
    for (size_t i = 0; i < hs.size(); ++i)
      worst = std::max(
          worst, static_cast<double>(std::fabs(hp[i] - hs[i])) /
                     std::max({std::fabs(static_cast<double>(hs[i])),
                               std::fabs(static_cast<double>(hp[i])), 1.0}));
  }
  CHECK(worst < 1e-5);
}

TEST_CASE("array discretization matches the scalar ops") {
  IsaIter it;
  for (Isa isa : it.isas) {
    kernels::set_isa(isa);
    CAPTURE(kernels::isa_name(isa));
    Rng rng(31);
    const size_t n = 37;
    std::vector<double> a(n), abar(n), gamma(n);
    for (auto& v : a) v = -std::exp(rng.uniform(std::log(1e-10), std::log(8.0)));
    const double delta = 0.73;
    kernels::discretize_real(n, delta, a.data(), abar.data(), gamma.data());
    for (size_t i = 0; i < n; ++i) {
      const auto want = kernels::selective_discretize(a[i], 1.0, delta);
      CHECK(rel_err(abar[i], want.a_bar) < 1e-13);
      CHECK(rel_err(gamma[i], want.b_bar) < 1e-13);
    }

    std::vector<double> lre(n), lim(n), are(n), aim(n), gre(n), gim(n);
    for (size_t i = 0; i < n; ++i) {
      lre[i] = -std::exp(rng.uniform(std::log(1e-10), std::log(4.0)));
      lim[i] = rng.uniform(-6.0, 6.0);
    }
    kernels::discretize_cplx(n, delta, lre.data(), lim.data(), are.data(), aim.data(),
                             gre.data(), gim.data());
    for (size_t i = 0; i < n; ++i) {
      const auto want =
          kernels::zoh_discretize_diagonal({lre[i], lim[i]}, {1.0, 0.0}, delta);
      CHECK(std::abs(std::complex<double>(are[i], aim[i]) - want.a_bar) < 1e-13);
      CHECK(std::abs(std::complex<double>(gre[i], gim[i]) - want.b_bar) < 1e-12);
    }
  }
}

TEST_CASE("layer norm") {
  IsaIter it;
  for (Isa isa : it.isas) {
    kernels::set_isa(isa);
    CAPTURE(kernels::isa_name(isa));

    const size_t D = 13;
    std::vector<double> gamma(D, 1.0), beta(D, 0.0), y(D);

    std::vector<double> constant(D, 3.7);
    kernels::layer_norm(D, constant.data(), gamma.data(), beta.data(), 1e-5, y.data(), nullptr,
                        nullptr);
    for (double v : y) CHECK(std::fabs(v) < 1e-12);

    Rng rng(5);
    std::vector<double> x(D);
    for (auto& v : x) v = rng.uniform(-4.0, 4.0);
    kernels::layer_norm(D, x.data(), gamma.data(), beta.data(), 1e-12, y.data(), nullptr,
                        nullptr);
    double mean = 0.0, var = 0.0;
    for (double v : y) mean += v;
    mean /= D;
    for (double v : y) var += (v - mean) * (v - mean);
    var /= D;
    CHECK(std::fabs(mean) < 1e-12);
    CHECK(var == doctest::Approx(1.0).epsilon(1e-9));

    std::vector<double> pm{1.0, -1.0};
    std::vector<double> g2(2, 1.0), b2(2, 0.0), y2(2);
    kernels::layer_norm(2, pm.data(), g2.data(), b2.data(), 1e-12, y2.data(), nullptr, nullptr);
    CHECK(y2[0] == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(y2[1] == doctest::Approx(-1.0).epsilon(1e-9));
  }
}

TEST_CASE("layer norm backward matches finite differences") {
  const size_t D = 9;
  Rng rng(8);
  std::vector<double> x(D), gamma(D), beta(D), dy(D);
  for (auto& v : x) v = rng.uniform(-2.0, 2.0);
  for (auto& v : gamma) v = rng.uniform(0.5, 1.5);
  for (auto& v : beta) v = rng.uniform(-0.5, 0.5);
  for (auto& v : dy) v = rng.uniform(-1.0, 1.0);
  const double eps = 1e-5;

  auto objective = [&](const std::vector<double>& xx, const std::vector<double>& gg,
                       const std::vector<double>& bb) {
    std::vector<double> y(D);
    kernels::layer_norm(D, xx.data(), gg.data(), bb.data(), eps, y.data(), nullptr, nullptr);
    double s = 0.0;
    for (size_t i = 0; i < D; ++i) s += y[i] * dy[i];
    return s;
  };

  double mean = 0.0, rstd = 0.0;
  std::vector<double> y(D), dx(D), dgamma(D, 0.0), dbeta(D, 0.0);
  kernels::layer_norm(D, x.data(), gamma.data(), beta.data(), eps, y.data(), &mean, &rstd);
  kernels::layer_norm_bwd(D, x.data(), gamma.data(), mean, rstd, dy.data(), dx.data(),
                          dgamma.data(), dbeta.data());

  const double h = 1e-6;
  for (size_t i = 0; i < D; ++i) {
    auto xp = x, xm = x;
    xp[i] += h;
    xm[i] -= h;
    const double fd = (objective(xp, gamma, beta) - objective(xm, gamma, beta)) / (2 * h);
    CHECK(testing::rel_err_floor(dx[i], fd, 1e-6) < 1e-5);
    auto gp = gamma, gm = gamma;
    gp[i] += h;
    gm[i] -= h;
    const double fg = (objective(x, gp, beta) - objective(x, gm, beta)) / (2 * h);
    CHECK(testing::rel_err_floor(dgamma[i], fg, 1e-6) < 1e-5);
    auto bp = beta, bm = beta;
    bp[i] += h;
    bm[i] -= h;
    const double fb = (objective(x, gamma, bp) - objective(x, gamma, bm)) / (2 * h);
    CHECK(testing::rel_err_floor(dbeta[i], fb, 1e-6) < 1e-5);
  }
}

TEST_CASE("softmax cross entropy") {
  IsaIter it;
  for (Isa isa : it.isas) {
    kernels::set_isa(isa);
    CAPTURE(kernels::isa_name(isa));

    const size_t N = 50;
    std::vector<double> uniform(N, 0.7), grad(N);
    CHECK(rel_err(kernels::softmax_xent(N, uniform.data(), 3, grad.data()),
                  std::log(static_cast<double>(N))) < 1e-12);

    // independently evaluated: loss = log(e^10 + 2) - 10 = log1p(2 e^-10)
    std::vector<double> spiked{10.0, 0.0, 0.0};
    const double want = std::log1p(2.0 * std::exp(-10.0));
    CHECK(rel_err(kernels::softmax_xent(3, spiked.data(), 0, nullptr), want) < 1e-10);
    CHECK(want == doctest::Approx(9.08e-5).epsilon(1e-3));

    Rng rng(21);
    std::vector<double> logits(N);
    for (auto& v : logits) v = rng.uniform(-8.0, 8.0);
    kernels::softmax_xent(N, logits.data(), 17, grad.data());
    double sum = 0.0;
    for (double g : grad) sum += g;
    CHECK(std::fabs(sum) < 1e-12);  // softmax minus onehot sums to zero

    // gradient vs finite differences of the loss in the logits
    const double h = 1e-5;
    for (size_t i : {size_t(0), size_t(17), size_t(N - 1)}) {
      auto lp = logits, lm = logits;
      lp[i] += h;
      lm[i] -= h;
      const double fd = (kernels::softmax_xent(N, lp.data(), 17, nullptr) -
                         kernels::softmax_xent(N, lm.data(), 17, nullptr)) /
                        (2 * h);
      CHECK(testing::rel_err_floor(grad[i], fd, 1e-6) < 1e-4);
    }

    CHECK_THROWS_AS(kernels::softmax_xent(N, logits.data(), N, nullptr), NumericError);
  }
}

TEST_CASE("dense helpers against naive loops") {
  IsaIter it;
  for (Isa isa : it.isas) {
    kernels::set_isa(isa);
    CAPTURE(kernels::isa_name(isa));
    Rng rng(2);
    const size_t M = 11, N = 19;
    std::vector<double> W(M * N), x(N), xm(M), y(M), yt(N);
    for (auto& v : W) v = rng.uniform(-1.0, 1.0);
    for (auto& v : x) v = rng.uniform(-1.0, 1.0);
    for (auto& v : xm) v = rng.uniform(-1.0, 1.0);

    kernels::gemv(M, N, W.data(), x.data(), y.data(), false);
    for (size_t r = 0; r < M; ++r) {
      double want = 0.0;
      for (size_t c = 0; c < N; ++c) want += W[r * N + c] * x[c];
      CHECK(rel_err(y[r], want) < 1e-12);
    }

    kernels::gemv_t(M, N, W.data(), xm.data(), yt.data(), false);
    for (size_t c = 0; c < N; ++c) {
      double want = 0.0;
      for (size_t r = 0; r < M; ++r) want += W[r * N + c] * xm[r];
      CHECK(testing::rel_err_floor(yt[c], want, 1e-12) < 1e-11);
    }

    const double d = kernels::dot(N, x.data(), x.data());
    double want = 0.0;
    for (double v : x) want += v * v;
    CHECK(rel_err(d, want) < 1e-13);

    std::vector<double> W2(M * N, 0.0);
    kernels::ger(M, N, 0.5, xm.data(), x.data(), W2.data());
    for (size_t r = 0; r < M; ++r)
      for (size_t c = 0; c < N; ++c)
        CHECK(testing::rel_err_floor(W2[r * N + c], 0.5 * xm[r] * x[c], 1e-14) < 1e-12);
  }
}

TEST_CASE("adam step against a hand-rolled reference") {
  IsaIter it;
  for (Isa isa : it.isas) {
    kernels::set_isa(isa);
    CAPTURE(kernels::isa_name(isa));
    Rng rng(6);
    const size_t n = 13;
    std::vector<double> p(n), g(n), m(n, 0.0), v(n, 0.0);
    for (auto& x : p) x = rng.uniform(-1.0, 1.0);
    for (auto& x : g) x = rng.uniform(-1.0, 1.0);
    auto p2 = p;
    auto m2 = m;
    auto v2 = v;
    const double lr = 0.01, b1 = 0.9, b2 = 0.999, eps = 1e-8;
    const double i1 = 1.0 / (1.0 - b1), i2 = 1.0 / (1.0 - b2);
    kernels::adam_step(n, p.data(), g.data(), m.data(), v.data(), lr, b1, b2, eps, i1, i2);
    for (size_t i = 0; i < n; ++i) {
      m2[i] = b1 * m2[i] + (1 - b1) * g[i];
      v2[i] = b2 * v2[i] + (1 - b2) * g[i] * g[i];
      p2[i] -= lr * (m2[i] * i1) / (std::sqrt(v2[i] * i2) + eps);
      CHECK(rel_err(p[i], p2[i]) < 1e-14);
    }
  }
}

TEST_CASE("avx2 vexp equivalence including edge values" *
          doctest::skip(!kernels::avx2_supported())) {
  kernels::set_isa(Isa::Avx2);
  Rng rng(77);
  const size_t n = 100003;
  std::vector<double> x(n), y(n);
  for (size_t i = 0; i < n; ++i) x[i] = rng.uniform(-745.0, 709.0);
  x[0] = 0.0;
  x[1] = 709.78;      // just below overflow
  x[2] = 710.0;       // overflow -> inf
  x[3] = -745.2;      // underflow -> 0
  x[4] = -708.0;      // subnormal-range result
  x[5] = std::numeric_limits<double>::quiet_NaN();
  x[6] = std::numeric_limits<double>::infinity();
  x[7] = -std::numeric_limits<double>::infinity();
  kernels::vexp(n, x.data(), y.data());
  double worst = 0.0;
  for (size_t i = 0; i < n; ++i) {
    const double want = std::exp(x[i]);
    if (std::isnan(want)) {
      CHECK(std::isnan(y[i]));
      continue;
    }
    if (std::isinf(want) || want == 0.0) {
      CHECK(y[i] == want);
      continue;
    }
    worst = std::max(worst, rel_err(y[i], want));
  }
  CHECK(worst < 5e-15);
  kernels::set_isa("auto");
}

TEST_CASE("isa dispatch controls") {
  CHECK(std::string(kernels::isa_name(Isa::Scalar)) == "scalar");
  kernels::set_isa(Isa::Scalar);
  CHECK(kernels::active_isa() == Isa::Scalar);
  if (kernels::avx2_supported()) {
    kernels::set_isa("avx2");
    CHECK(kernels::active_isa() == Isa::Avx2);
  }
  CHECK_THROWS_AS(kernels::set_isa("sse9"), ConfigError);
  kernels::set_isa("auto");
}
