#pragma once

#include <cstdint>
#include <vector>

#include "ssrec/rng.hpp"

namespace ssrec::selective {

// Input-selective diagonal state-space layer: B, C and the step size are
// functions of the input at each position. Per channel d the state is a
// length-p real vector with diagonal transition A[d] = -exp(a_log[d]) < 0,
// so |exp(delta*A)| < 1 for every positive step.
struct Params {
  int d = 0;  // model width
  int p = 0;  // state dim per channel
  std::vector<double> a_log;       // d x p
  std::vector<double> w_b;         // p x d   (B_l = w_b x_l)
  std::vector<double> w_c;         // p x d   (C_l = w_c x_l)
  std::vector<double> w_delta;     // d       (rank-1 step projection)
  std::vector<double> delta_bias;  // d       (learnable softplus bias)
};

struct Grads {
  std::vector<double> a_log, w_b, w_c, w_delta, delta_bias;
};

Grads zero_grads(const Params& p);
void add_grads(Grads& dst, const Grads& src);

// A rows follow the -[1..p] pattern; projections are variance-preserving;
// softplus(delta_bias) is log-uniform over [1e-3, 1e-1].
Params init(int p, int d, Rng& rng);

// Step recomputation happens per segment in backward; only segment-boundary
// states are kept, trading compute for O(rows*d*L/seg*p) memory.
struct Cache {
  int rows = 0, len = 0, seg = 0, n_seg = 0;
  std::vector<double> x;       // rows*len*d
  std::vector<double> r;       // rows*len          (w_delta . x)
  std::vector<double> delta;   // rows*len*d        softplus(bias + r)
  std::vector<double> bvec;    // rows*len*p
  std::vector<double> cvec;    // rows*len*p
  std::vector<uint8_t> valid;  // rows*len
  std::vector<double> h_ckpt;  // rows*d*n_seg*p    state before each segment
};

// y[b,l,d] = C_l . h[b,l,d,:]; pads are transparent (state carried, zero
// output). cache may be null for inference.
void forward(const Params& p, const double* x, const uint8_t* valid, int rows, int len,
             double* y, Cache* cache, int threads = 1);

void backward(const Params& p, const Cache& cache, const double* dy, double* dx, Grads& g,
              int threads = 1);

}  // namespace ssrec::selective
