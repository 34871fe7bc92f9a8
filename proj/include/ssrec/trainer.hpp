#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "ssrec/data.hpp"
#include "ssrec/model.hpp"

namespace ssrec::train {

struct TrainConfig {
  double lr = 1e-3;
  int batch_size = 1024;
  int max_epochs = 200;
  int patience = 10;  // epochs without validation improvement
  uint64_t seed = 1;
  double drop_prob = 0.0;  // partial-observation simulation on training prefixes
  double clip_norm = 5.0;  // 0 disables clipping
  int threads = 0;         // 0 = hardware concurrency
  int eval_k = 10;
  std::string precision = "wide";  // f64 end to end; kernels also ship f32
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
};

struct EpochStats {
  int epoch = 0;  // 1-based
  double train_loss = 0.0;
  double hr = 0.0, ndcg = 0.0, mrr = 0.0;  // validation metrics @ eval_k
};

struct TrainResult {
  std::vector<EpochStats> history;
  int best_epoch = 0;
  double best_ndcg = 0.0;
  int stopped_after = 0;  // epochs actually run
};

// Epoch-loop callback: return true to keep training (used by tests to stop early).
using EpochCallback = std::function<bool(const EpochStats&)>;

// Optimizes the model in place and restores the best-validation parameters
// before returning. Throws DivergenceError on non-finite loss.
TrainResult train(model::ModelState& m, const data::SplitCorpus& corpus, const TrainConfig& cfg,
                  const EpochCallback& on_epoch = nullptr);

void write_history(const std::string& path, const std::vector<EpochStats>& history);

// ---------------------------------------------------------------------------
// Finite-difference gradient audit.
// ---------------------------------------------------------------------------
struct AuditEntry {
  std::string tensor;
  double max_rel = 0.0;
  size_t coords = 0;
};

struct AuditReport {
  std::vector<AuditEntry> entries;
  double tol = 1e-4;
  bool pass = false;
  std::string summary() const;
};

// Analytic gradients for one batch; clipping and dropout are not applied.
model::ModelState compute_grads(const model::ModelState& m, const data::Batch& batch,
                                int threads = 1);

// Compares supplied analytic gradients against central finite differences at
// k random coordinates per tensor. Exposed separately so a corrupted gradient
// can be injected to prove the audit trips.
AuditReport audit_grads(const model::ModelState& m, const data::Batch& batch,
                        const model::ModelState& analytic, double h = 1e-5,
                        int coords_per_tensor = 8, double tol = 1e-4, uint64_t seed = 12345);

AuditReport grad_audit(const model::ModelState& m, const data::Batch& batch, double h = 1e-5,
                       int coords_per_tensor = 8, double tol = 1e-4, uint64_t seed = 12345);

}  // namespace ssrec::train
