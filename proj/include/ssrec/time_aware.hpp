#pragma once

#include <cstdint>
#include <vector>

#include "ssrec/rng.hpp"

namespace ssrec::time_aware {

// Diagonal complex state-space layer stepped by per-position intervals.
// The state matrix is stored as p_half conjugate representatives; outputs are
// reconstructed as 2*Re(c~ h), which is exactly real under conjugate symmetry.
// Stability: Re(lambda) = -exp(lambda_re_log) < 0, so |exp(delta*lambda)| <= 1
// for every delta >= 0.
struct Params {
  int p_half = 0;  // stored representatives (full state dim = 2*p_half)
  int d = 0;       // model width
  std::vector<double> lambda_re_log;  // p_half
  std::vector<double> lambda_im;      // p_half
  std::vector<double> b_re, b_im;     // p_half x d   (V^-1 B, stored directly)
  std::vector<double> c_re, c_im;     // d x p_half   (C V, stored directly)
  std::vector<double> log_s;          // p_half; timescale s = exp(log_s) > 0
};

struct Grads {
  std::vector<double> lambda_re_log, lambda_im, b_re, b_im, c_re, c_im, log_s;
};

Grads zero_grads(const Params& p);
void add_grads(Grads& dst, const Grads& src);

// p_full must be even. Eigenvalues come from the diagonalized normal part of
// the HiPPO-LegS operator of order p_full; input/output maps are
// variance-preserving random; timescales are log-uniform over [1e-3, 1e-1].
Params init(int p_full, int d, Rng& rng);

// Activations stashed by the training forward pass.
struct Cache {
  int rows = 0, len = 0;
  std::vector<double> x;            // rows*len*d
  std::vector<double> delta_t;      // rows*len (effective steps; 0 at pads)
  std::vector<uint8_t> valid;       // rows*len
  std::vector<double> vre, vim;     // rows*len*p_half   (b~ x)
  std::vector<double> are, aim;     // rows*len*p_half   exp(delta*lambda)
  std::vector<double> gre, gim;     // rows*len*p_half   (a_bar-1)/lambda
  std::vector<double> hre, him;     // rows*len*p_half   states
};

// y[b,l,:] = 2*Re(c~ h[b,l]); pad positions carry the state through unchanged
// (a_bar = 1, increment 0) and emit zeros. delta_t must be >= 0 and 0 at pads.
// cache may be null for inference.
void forward(const Params& p, const double* x, const double* delta_t, const uint8_t* valid,
             int rows, int len, double* y, Cache* cache, int threads = 1);

// dx is written (rows*len*d); parameter grads are accumulated into g.
void backward(const Params& p, const Cache& cache, const double* dy, double* dx, Grads& g,
              int threads = 1);

}  // namespace ssrec::time_aware
