#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ssrec/data.hpp"
#include "ssrec/rng.hpp"
#include "ssrec/selective.hpp"
#include "ssrec/time_aware.hpp"

namespace ssrec::model {

enum class Ablation { Full, IgnoreTime, S5Only, S6Only };

Ablation ablation_from_string(const std::string& s);
const char* to_string(Ablation a);

struct ModelConfig {
  int32_t n_items = 0;  // N real items; embedding has N+1 rows (row 0 = pad)
  int d = 64;           // embedding width
  int p = 32;           // state dimension (even)
  int blocks = 2;
  int max_len = 200;
  double dropout = 0.2;
  Ablation ablation = Ablation::Full;
  double ln_eps = 1e-5;
  // Interval normalization fitted on the training split, carried with the
  // model so a checkpoint evaluates identically later.
  double interval_scale = 1.0;
  double interval_clamp = 10.0;

  bool operator==(const ModelConfig&) const = default;
};

struct LayerNormParams {
  std::vector<double> gamma, beta;  // size d
};

struct BlockParams {
  time_aware::Params ta;
  LayerNormParams norm1;
  selective::Params sel;
  LayerNormParams norm2;
};

struct TensorRef {
  std::string name;
  double* data;
  size_t size;
};
struct ConstTensorRef {
  std::string name;
  const double* data;
  size_t size;
};

struct ModelState {
  ModelConfig cfg;
  std::vector<double> embedding;  // (n_items+1) x d, row 0 pinned to zero
  std::vector<BlockParams> blocks;

  // Declared parameter order; checkpointing, Adam and the gradient audit all
  // align on this registry.
  std::vector<TensorRef> tensors();
  std::vector<ConstTensorRef> tensors() const;
  size_t n_params() const;
  uint64_t param_digest() const;
};

ModelState init_model(const ModelConfig& cfg, uint64_t seed);
// Same shapes, all parameters zero; doubles as the gradient container.
ModelState zero_like(const ModelState& m);

struct ForwardOptions {
  bool training = false;      // enables dropout
  uint64_t dropout_seed = 0;  // consumed only when training and dropout > 0
  int threads = 1;
};

// Block stack output, rows*len*d.
std::vector<double> forward(const ModelState& m, const data::Batch& batch,
                            const ForwardOptions& opt = {});

// logits[i] = embedding[i+1] . o for the N real items (pad row excluded).
void score(const ModelState& m, const double* o, double* logits);

struct LossResult {
  double loss = 0.0;  // mean cross entropy over supervised positions
  size_t n_targets = 0;
};

// Mean teacher-forced cross entropy over every (position, next-item) pair.
LossResult loss(const ModelState& m, const data::Batch& batch, const ForwardOptions& opt = {});

// Loss plus gradients of every parameter, accumulated into a zero_like-shaped
// container. Throws DataError when the batch carries no targets.
LossResult loss_and_grad(const ModelState& m, const data::Batch& batch,
                         const ForwardOptions& opt, ModelState& grads);

}  // namespace ssrec::model
