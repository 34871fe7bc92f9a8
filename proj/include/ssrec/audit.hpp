#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace ssrec::audit {

// Self-contained numeric verification suites, runnable from the CLI. Each
// suite compares an implementation path against an independent oracle.
// fault > 0 perturbs one computed value so the suite's sensitivity can be
// demonstrated end to end.

struct SuiteResult {
  std::string name;
  bool pass = false;
  std::string detail;
  double seconds = 0.0;
};

// Tree scan vs the sequential reference over random stable systems,
// lengths 1..1024, wide precision.
SuiteResult run_scan_suite(uint64_t seed, int n_cases, double tol, int fault = 0);

// Discretized input map vs adaptive-quadrature of the hold integral.
SuiteResult run_zoh_suite(uint64_t seed, int n_cases, double tol, int fault = 0);

// Real-argument diagonal discretization against the selective path: exact.
SuiteResult run_cross_suite(uint64_t seed, int n_cases, int fault = 0);

// Finite-difference audit of a small end-to-end model.
SuiteResult run_grad_suite(uint64_t seed, double tol, int fault = 0);

// Scalar vs AVX2 kernel equivalence (skips cleanly when unsupported).
SuiteResult run_simd_suite(uint64_t seed, int fault = 0);

std::vector<SuiteResult> run_suites(const std::vector<std::string>& names, uint64_t seed,
                                    int fault = 0);
const std::vector<std::string>& suite_names();

// Adaptive Simpson quadrature of exp(lambda*u) over [0, delta] (split into
// real and imaginary parts); the oracle for the zero-order-hold input map.
void quad_exp_integral(double lre, double lim, double delta, double tol, double* out_re,
                       double* out_im);

}  // namespace ssrec::audit
