#pragma once

#include <cstddef>
#include <cstring>
#include <vector>

// Chunked Blelloch scan over first-order recurrence elements. The element at
// step l is (A_l, b_l) acting as h -> A_l*h + b_l elementwise over a width-S
// state. Composition is non-commutative; (e_first THEN e_second) composes to
// (A2*A1, A2*b1 + b2). Non-power-of-two lengths run as a descending sequence
// of power-of-two chunks with the carry state threaded through sequentially.
//
// A policy supplies the elementwise plane arithmetic so the same tree runs
// with scalar or SIMD inner loops, for real or split-plane complex states.

namespace ssrec::kernels::detail {

inline size_t floor_pow2(size_t n) {
  size_t p = 1;
  while (p * 2 <= n) p *= 2;
  return p;
}

// Real policy interface (T = float or double):
//   compose_left (S, Af, bf, Ad, bd): dst = first THEN dst
//   compose_right(S, As, bs, Ad, bd): dst = dst THEN second
//   apply2(S, Aex, bex, Ao, bo, carry, h): h = Ao*(Aex*carry + bex) + bo
template <class P>
void blelloch_real(size_t L, size_t S, const typename P::value_type* A,
                   const typename P::value_type* b, const typename P::value_type* h0,
                   typename P::value_type* h) {
  using T = typename P::value_type;
  if (L == 0) return;

  thread_local std::vector<T> ws;
  ws.resize(2 * L * S + 3 * S);
  T* sA = ws.data();           // scratch A planes
  T* sb = sA + L * S;          // scratch b planes
  T* tA = sb + L * S;          // temp node
  T* tb = tA + S;
  T* carry = tb + S;
  std::memcpy(carry, h0, S * sizeof(T));

  size_t pos = 0;
  while (pos < L) {
    const size_t n = floor_pow2(L - pos);
    std::memcpy(sA, A + pos * S, n * S * sizeof(T));
    std::memcpy(sb, b + pos * S, n * S * sizeof(T));

    for (size_t d = 1; d < n; d <<= 1)
      for (size_t i = 2 * d - 1; i < n; i += 2 * d)
        P::compose_left(S, sA + (i - d) * S, sb + (i - d) * S, sA + i * S, sb + i * S);

    // down-sweep turns the tree into an exclusive scan
    for (size_t j = 0; j < S; ++j) {
      sA[(n - 1) * S + j] = T(1);
      sb[(n - 1) * S + j] = T(0);
    }
    for (size_t d = n >> 1; d >= 1; d >>= 1) {
      for (size_t i = 2 * d - 1; i < n; i += 2 * d) {
        std::memcpy(tA, sA + (i - d) * S, S * sizeof(T));
        std::memcpy(tb, sb + (i - d) * S, S * sizeof(T));
        std::memcpy(sA + (i - d) * S, sA + i * S, S * sizeof(T));
        std::memcpy(sb + (i - d) * S, sb + i * S, S * sizeof(T));
        P::compose_right(S, tA, tb, sA + i * S, sb + i * S);
      }
      if (d == 1) break;
    }

    for (size_t j = 0; j < n; ++j) {
      P::apply2(S, sA + j * S, sb + j * S, A + (pos + j) * S, b + (pos + j) * S, carry,
                h + (pos + j) * S);
    }
    std::memcpy(carry, h + (pos + n - 1) * S, S * sizeof(T));
    pos += n;
  }
}

// Complex policy interface mirrors the real one on split re/im planes.
template <class P>
void blelloch_cplx(size_t L, size_t S, const double* Are, const double* Aim, const double* bre,
                   const double* bim, const double* h0re, const double* h0im, double* hre,
                   double* him) {
  if (L == 0) return;

  thread_local std::vector<double> ws;
  ws.resize(4 * L * S + 6 * S);
  double* sAre = ws.data();
  double* sAim = sAre + L * S;
  double* sbre = sAim + L * S;
  double* sbim = sbre + L * S;
  double* t = sbim + L * S;  // 4 temp planes + 2 carry planes
  double* tAre = t;
  double* tAim = t + S;
  double* tbre = t + 2 * S;
  double* tbim = t + 3 * S;
  double* cre = t + 4 * S;
  double* cim = t + 5 * S;
  std::memcpy(cre, h0re, S * sizeof(double));
  std::memcpy(cim, h0im, S * sizeof(double));

  const size_t bytes = S * sizeof(double);
  size_t pos = 0;
  while (pos < L) {
    const size_t n = floor_pow2(L - pos);
    std::memcpy(sAre, Are + pos * S, n * bytes);
    std::memcpy(sAim, Aim + pos * S, n * bytes);
    std::memcpy(sbre, bre + pos * S, n * bytes);
    std::memcpy(sbim, bim + pos * S, n * bytes);

    for (size_t d = 1; d < n; d <<= 1)
      for (size_t i = 2 * d - 1; i < n; i += 2 * d) {
        const size_t f = (i - d) * S, g = i * S;
        P::compose_left(S, sAre + f, sAim + f, sbre + f, sbim + f, sAre + g, sAim + g, sbre + g,
                        sbim + g);
      }

    const size_t last = (n - 1) * S;
    for (size_t j = 0; j < S; ++j) {
      sAre[last + j] = 1.0;
      sAim[last + j] = 0.0;
      sbre[last + j] = 0.0;
      sbim[last + j] = 0.0;
    }
    for (size_t d = n >> 1; d >= 1; d >>= 1) {
      for (size_t i = 2 * d - 1; i < n; i += 2 * d) {
        const size_t f = (i - d) * S, g = i * S;
        std::memcpy(tAre, sAre + f, bytes);
        std::memcpy(tAim, sAim + f, bytes);
        std::memcpy(tbre, sbre + f, bytes);
        std::memcpy(tbim, sbim + f, bytes);
        std::memcpy(sAre + f, sAre + g, bytes);
        std::memcpy(sAim + f, sAim + g, bytes);
        std::memcpy(sbre + f, sbre + g, bytes);
        std::memcpy(sbim + f, sbim + g, bytes);
        P::compose_right(S, tAre, tAim, tbre, tbim, sAre + g, sAim + g, sbre + g, sbim + g);
      }
      if (d == 1) break;
    }

    for (size_t j = 0; j < n; ++j) {
      const size_t g = j * S, o = (pos + j) * S;
      P::apply2(S, sAre + g, sAim + g, sbre + g, sbim + g, Are + o, Aim + o, bre + o, bim + o,
                cre, cim, hre + o, him + o);
    }
    std::memcpy(cre, hre + (pos + n - 1) * S, bytes);
    std::memcpy(cim, him + (pos + n - 1) * S, bytes);
    pos += n;
  }
}

}  // namespace ssrec::kernels::detail
