#include "ssrec/model.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

#include "ssrec/common.hpp"
#include "ssrec/kernels.hpp"
#include "ssrec/threading.hpp"

namespace ssrec::model {

Ablation ablation_from_string(const std::string& s) {
  if (s == "full") return Ablation::Full;
  if (s == "ignore_time") return Ablation::IgnoreTime;
  if (s == "s5_only") return Ablation::S5Only;
  if (s == "s6_only") return Ablation::S6Only;
  throw ConfigError("unknown ablation '" + s + "' (full|ignore_time|s5_only|s6_only)");
}

const char* to_string(Ablation a) {
  switch (a) {
    case Ablation::Full: return "full";
    case Ablation::IgnoreTime: return "ignore_time";
    case Ablation::S5Only: return "s5_only";
    case Ablation::S6Only: return "s6_only";
  }
  return "full";
}

namespace {

void validate(const ModelConfig& cfg) {
  if (cfg.n_items < 1) throw ConfigError("model requires n_items >= 1");
  if (cfg.d < 1 || cfg.p < 1 || cfg.blocks < 1 || cfg.max_len < 1)
    throw ConfigError("model dims must be >= 1");
  if (cfg.p % 2 != 0) throw ConfigError("state dimension must be even");
  if (cfg.dropout < 0.0 || cfg.dropout >= 1.0)
    throw ConfigError("dropout must be in [0, 1)");
}

}  // namespace

std::vector<TensorRef> ModelState::tensors() {
  std::vector<TensorRef> out;
  auto add = [&out](const std::string& name, std::vector<double>& v) {
    out.push_back({name, v.data(), v.size()});
  };
  add("embedding", embedding);
  for (size_t k = 0; k < blocks.size(); ++k) {
    const std::string b = "block" + std::to_string(k) + ".";
    auto& bl = blocks[k];
    add(b + "ta.lambda_re_log", bl.ta.lambda_re_log);
    add(b + "ta.lambda_im", bl.ta.lambda_im);
    add(b + "ta.b_re", bl.ta.b_re);
    add(b + "ta.b_im", bl.ta.b_im);
    add(b + "ta.c_re", bl.ta.c_re);
    add(b + "ta.c_im", bl.ta.c_im);
    add(b + "ta.log_s", bl.ta.log_s);
    add(b + "norm1.gamma", bl.norm1.gamma);
    add(b + "norm1.beta", bl.norm1.beta);
    add(b + "sel.a_log", bl.sel.a_log);
    add(b + "sel.w_b", bl.sel.w_b);
    add(b + "sel.w_c", bl.sel.w_c);
    add(b + "sel.w_delta", bl.sel.w_delta);
    add(b + "sel.delta_bias", bl.sel.delta_bias);
    add(b + "norm2.gamma", bl.norm2.gamma);
    add(b + "norm2.beta", bl.norm2.beta);
  }
  return out;
}

std::vector<ConstTensorRef> ModelState::tensors() const {
  auto refs = const_cast<ModelState*>(this)->tensors();
  std::vector<ConstTensorRef> out;
  out.reserve(refs.size());
  for (const auto& r : refs) out.push_back({r.name, r.data, r.size});
  return out;
}

size_t ModelState::n_params() const {
  size_t n = 0;
  for (const auto& t : tensors()) n += t.size;
  return n;
}

uint64_t ModelState::param_digest() const {
  uint64_t h = 1469598103934665603ull;
  for (const auto& t : tensors()) h = fnv1a(t.data, t.size * sizeof(double), h);
  return h;
}

ModelState init_model(const ModelConfig& cfg, uint64_t seed) {
  validate(cfg);
  ModelState m;
  m.cfg = cfg;
  Rng root(seed);

  m.embedding.assign(static_cast<size_t>(cfg.n_items + 1) * cfg.d, 0.0);
  {
    Rng r = root.fork(1);
    const double sigma = 1.0 / std::sqrt(static_cast<double>(cfg.d));
    for (size_t i = cfg.d; i < m.embedding.size(); ++i) m.embedding[i] = r.normal(0.0, sigma);
  }

  m.blocks.resize(cfg.blocks);
  for (int k = 0; k < cfg.blocks; ++k) {
    Rng rta = root.fork(100 + 2 * k);
    Rng rsel = root.fork(101 + 2 * k);
    auto& bl = m.blocks[k];
    bl.ta = time_aware::init(cfg.p, cfg.d, rta);
    bl.sel = selective::init(cfg.p, cfg.d, rsel);
    bl.norm1.gamma.assign(cfg.d, 1.0);
    bl.norm1.beta.assign(cfg.d, 0.0);
    bl.norm2.gamma.assign(cfg.d, 1.0);
    bl.norm2.beta.assign(cfg.d, 0.0);
  }
  return m;
}

ModelState zero_like(const ModelState& m) {
  ModelState z = m;
  for (auto& t : z.tensors()) std::memset(t.data, 0, t.size * sizeof(double));
  return z;
}

// ---------------------------------------------------------------------------
// Forward.
// ---------------------------------------------------------------------------

namespace {

struct LnCache {
  std::vector<double> in;    // rows*len*d residual sums
  std::vector<double> mean;  // rows*len
  std::vector<double> rstd;  // rows*len
};

struct BlockCache {
  time_aware::Cache ta;
  selective::Cache sel;
  std::vector<uint8_t> drop1, drop2;  // keep masks
  LnCache ln1, ln2;
};

struct Cache {
  std::vector<double> x0;  // embedded block input (post dropout)
  std::vector<uint8_t> emb_drop;
  std::vector<BlockCache> blocks;
};

// Inverted dropout over valid positions; draws are consumed row-major so a
// fixed seed gives a fixed mask.
void apply_dropout(std::vector<double>& x, const data::Batch& batch, int d, double rate,
                   uint64_t seed, std::vector<uint8_t>* mask_out) {
  const double keep = 1.0 - rate;
  const double scale = 1.0 / keep;
  Rng rng(seed);
  if (mask_out) mask_out->assign(x.size(), 1);
  for (int r = 0; r < batch.rows; ++r) {
    for (int l = 0; l < batch.len; ++l) {
      if (!batch.valid[batch.at(r, l)]) continue;
      const size_t base = batch.at(r, l) * d;
      for (int k = 0; k < d; ++k) {
        if (rng.uniform() < keep) {
          x[base + k] *= scale;
        } else {
          x[base + k] = 0.0;
          if (mask_out) (*mask_out)[base + k] = 0;
        }
      }
    }
  }
}

void dropout_backward(std::vector<double>& dy, const std::vector<uint8_t>& mask, double rate) {
  const double scale = 1.0 / (1.0 - rate);
  for (size_t i = 0; i < dy.size(); ++i) dy[i] = mask[i] ? dy[i] * scale : 0.0;
}

// The effective step sequence seen by the time-aware layers. ignore_time
// replaces every valid interval with 1 so no temporal information survives.
std::vector<double> effective_delta_t(const ModelState& m, const data::Batch& batch) {
  std::vector<double> dt(batch.intervals.begin(), batch.intervals.end());
  if (m.cfg.ablation == Ablation::IgnoreTime) {
    for (size_t i = 0; i < dt.size(); ++i) dt[i] = batch.valid[i] ? 1.0 : 0.0;
  }
  return dt;
}

void layer_norm_all(const LayerNormParams& ln, double eps, const std::vector<double>& z, int d,
                    std::vector<double>& out, LnCache* cache) {
  const size_t n_pos = z.size() / d;
  out.resize(z.size());
  if (cache) {
    cache->in = z;
    cache->mean.resize(n_pos);
    cache->rstd.resize(n_pos);
  }
  for (size_t i = 0; i < n_pos; ++i) {
    double mean = 0.0, rstd = 0.0;
    kernels::layer_norm(d, z.data() + i * d, ln.gamma.data(), ln.beta.data(), eps,
                        out.data() + i * d, &mean, &rstd);
    if (cache) {
      cache->mean[i] = mean;
      cache->rstd[i] = rstd;
    }
  }
}

void forward_impl(const ModelState& m, const data::Batch& batch, const ForwardOptions& opt,
                  std::vector<double>& x, Cache* cache) {
  const auto& cfg = m.cfg;
  const int d = cfg.d;
  const size_t n_pos = static_cast<size_t>(batch.rows) * batch.len;
  const bool drop = opt.training && cfg.dropout > 0.0;

  for (size_t i = 0; i < n_pos; ++i) {
    const int32_t id = batch.items[i];
    if (id < 0 || id > cfg.n_items) throw DataError("item id out of embedding range");
  }

  x.resize(n_pos * d);
  for (size_t i = 0; i < n_pos; ++i)
    std::memcpy(x.data() + i * d, m.embedding.data() + static_cast<size_t>(batch.items[i]) * d,
                sizeof(double) * d);
  if (drop)
    apply_dropout(x, batch, d, cfg.dropout, Rng::mix(opt.dropout_seed, 0),
                  cache ? &cache->emb_drop : nullptr);
  if (cache) cache->x0 = x;

  const std::vector<double> dt = effective_delta_t(m, batch);
  if (cache) cache->blocks.resize(cfg.blocks);

  std::vector<double> layer_out(n_pos * d), z(n_pos * d);
  for (int k = 0; k < cfg.blocks; ++k) {
    BlockCache* bc = cache ? &cache->blocks[k] : nullptr;
    const auto& bl = m.blocks[k];

    if (cfg.ablation != Ablation::S6Only) {
      time_aware::forward(bl.ta, x.data(), dt.data(), batch.valid.data(), batch.rows, batch.len,
                          layer_out.data(), bc ? &bc->ta : nullptr, opt.threads);
      if (drop)
        apply_dropout(layer_out, batch, d, cfg.dropout,
                      Rng::mix(opt.dropout_seed, 1 + 2 * static_cast<uint64_t>(k)),
                      bc ? &bc->drop1 : nullptr);
      for (size_t i = 0; i < z.size(); ++i) z[i] = layer_out[i] + x[i];
      layer_norm_all(bl.norm1, cfg.ln_eps, z, d, x, bc ? &bc->ln1 : nullptr);
    }

    if (cfg.ablation != Ablation::S5Only) {
      selective::forward(bl.sel, x.data(), batch.valid.data(), batch.rows, batch.len,
                         layer_out.data(), bc ? &bc->sel : nullptr, opt.threads);
      if (drop)
        apply_dropout(layer_out, batch, d, cfg.dropout,
                      Rng::mix(opt.dropout_seed, 2 + 2 * static_cast<uint64_t>(k)),
                      bc ? &bc->drop2 : nullptr);
      for (size_t i = 0; i < z.size(); ++i) z[i] = layer_out[i] + x[i];
      layer_norm_all(bl.norm2, cfg.ln_eps, z, d, x, bc ? &bc->ln2 : nullptr);
    }
  }
}

}  // namespace

std::vector<double> forward(const ModelState& m, const data::Batch& batch,
                            const ForwardOptions& opt) {
  std::vector<double> out;
  forward_impl(m, batch, opt, out, nullptr);
  return out;
}

void score(const ModelState& m, const double* o, double* logits) {
  kernels::gemv(m.cfg.n_items, m.cfg.d, m.embedding.data() + m.cfg.d, o, logits, false);
}

LossResult loss(const ModelState& m, const data::Batch& batch, const ForwardOptions& opt) {
  std::vector<double> out;
  forward_impl(m, batch, opt, out, nullptr);

  const int d = m.cfg.d;
  const int n_items = m.cfg.n_items;
  LossResult res;
  double total = 0.0;
  std::vector<double> logits(n_items);
  for (int r = 0; r < batch.rows; ++r) {
    for (int l = 0; l < batch.len; ++l) {
      const size_t i = batch.at(r, l);
      const int32_t tgt = batch.targets[i];
      if (tgt == 0) continue;
      score(m, out.data() + i * d, logits.data());
      total += kernels::softmax_xent(n_items, logits.data(), tgt - 1, nullptr);
      ++res.n_targets;
    }
  }
  if (res.n_targets == 0) throw DataError("batch carries no supervised targets");
  res.loss = total / static_cast<double>(res.n_targets);
  return res;
}

LossResult loss_and_grad(const ModelState& m, const data::Batch& batch,
                         const ForwardOptions& opt, ModelState& grads) {
  const auto& cfg = m.cfg;
  const int d = cfg.d;
  const int n_items = cfg.n_items;
  const size_t n_pos = static_cast<size_t>(batch.rows) * batch.len;

  Cache cache;
  std::vector<double> out;
  forward_impl(m, batch, opt, out, &cache);

  LossResult res;
  for (size_t i = 0; i < n_pos; ++i)
    if (batch.targets[i] != 0) ++res.n_targets;
  if (res.n_targets == 0) throw DataError("batch carries no supervised targets");
  const double inv_count = 1.0 / static_cast<double>(res.n_targets);

  // scoring head: logits = E_real o; weight tying routes gradients into the
  // embedding both here and through the input gather below
  std::vector<double> dx(n_pos * d, 0.0);
  const int t = std::max(1, opt.threads);
  std::vector<double> worker_loss(t, 0.0);
  std::vector<std::vector<double>> worker_demb(
      t, std::vector<double>(static_cast<size_t>(n_items) * d, 0.0));

  parallel_for_chunks(batch.rows, t, [&](int w, size_t rb, size_t re_) {
    std::vector<double> logits(n_items), g(n_items);
    for (size_t r = rb; r < re_; ++r) {
      for (int l = 0; l < batch.len; ++l) {
        const size_t i = batch.at(static_cast<int>(r), l);
        const int32_t tgt = batch.targets[i];
        if (tgt == 0) continue;
        const double* o = out.data() + i * d;
        score(m, o, logits.data());
        worker_loss[w] += kernels::softmax_xent(n_items, logits.data(), tgt - 1, g.data());
        for (int j = 0; j < n_items; ++j) g[j] *= inv_count;
        kernels::gemv_t(n_items, d, m.embedding.data() + d, g.data(), dx.data() + i * d, true);
        kernels::ger(n_items, d, 1.0, g.data(), o, worker_demb[w].data());
      }
    }
  });

  double total = 0.0;
  for (int w = 0; w < t; ++w) total += worker_loss[w];
  res.loss = total * inv_count;
  for (int w = 0; w < t; ++w)
    kernels::axpy(static_cast<size_t>(n_items) * d, 1.0, worker_demb[w].data(),
                  grads.embedding.data() + d);

  // blocks in reverse
  std::vector<double> dz(n_pos * d), dlayer(n_pos * d), dxin(n_pos * d);
  for (int k = cfg.blocks - 1; k >= 0; --k) {
    const auto& bl = m.blocks[k];
    auto& gbl = grads.blocks[k];
    BlockCache& bc = cache.blocks[k];

    if (cfg.ablation != Ablation::S5Only) {
      // x_out = LN2(sel_drop + x_mid)
      for (size_t i = 0; i < n_pos; ++i)
        kernels::layer_norm_bwd(d, bc.ln2.in.data() + i * d, bl.norm2.gamma.data(),
                                bc.ln2.mean[i], bc.ln2.rstd[i], dx.data() + i * d,
                                dz.data() + i * d, gbl.norm2.gamma.data(),
                                gbl.norm2.beta.data());
      dlayer = dz;
      if (opt.training && cfg.dropout > 0.0) dropout_backward(dlayer, bc.drop2, cfg.dropout);
      selective::Grads sg = selective::zero_grads(bl.sel);
      selective::backward(bl.sel, bc.sel, dlayer.data(), dxin.data(), sg, opt.threads);
      auto acc = [](std::vector<double>& dst, const std::vector<double>& src) {
        for (size_t i = 0; i < src.size(); ++i) dst[i] += src[i];
      };
      acc(gbl.sel.a_log, sg.a_log);
      acc(gbl.sel.w_b, sg.w_b);
      acc(gbl.sel.w_c, sg.w_c);
      acc(gbl.sel.w_delta, sg.w_delta);
      acc(gbl.sel.delta_bias, sg.delta_bias);
      for (size_t i = 0; i < n_pos * d; ++i) dx[i] = dz[i] + dxin[i];
    }

    if (cfg.ablation != Ablation::S6Only) {
      for (size_t i = 0; i < n_pos; ++i)
        kernels::layer_norm_bwd(d, bc.ln1.in.data() + i * d, bl.norm1.gamma.data(),
                                bc.ln1.mean[i], bc.ln1.rstd[i], dx.data() + i * d,
                                dz.data() + i * d, gbl.norm1.gamma.data(),
                                gbl.norm1.beta.data());
      dlayer = dz;
      if (opt.training && cfg.dropout > 0.0) dropout_backward(dlayer, bc.drop1, cfg.dropout);
      time_aware::Grads tg = time_aware::zero_grads(bl.ta);
      time_aware::backward(bl.ta, bc.ta, dlayer.data(), dxin.data(), tg, opt.threads);
      auto acc = [](std::vector<double>& dst, const std::vector<double>& src) {
        for (size_t i = 0; i < src.size(); ++i) dst[i] += src[i];
      };
      acc(gbl.ta.lambda_re_log, tg.lambda_re_log);
      acc(gbl.ta.lambda_im, tg.lambda_im);
      acc(gbl.ta.b_re, tg.b_re);
      acc(gbl.ta.b_im, tg.b_im);
      acc(gbl.ta.c_re, tg.c_re);
      acc(gbl.ta.c_im, tg.c_im);
      acc(gbl.ta.log_s, tg.log_s);
      for (size_t i = 0; i < n_pos * d; ++i) dx[i] = dz[i] + dxin[i];
    }
  }

  // embedding gather adjoint; the pad row is pinned to zero and never updated
  if (opt.training && cfg.dropout > 0.0) dropout_backward(dx, cache.emb_drop, cfg.dropout);
  for (size_t i = 0; i < n_pos; ++i) {
    const int32_t id = batch.items[i];
    if (id == 0) continue;
    kernels::axpy(d, 1.0, dx.data() + i * d, grads.embedding.data() + static_cast<size_t>(id) * d);
  }

  return res;
}

}  // namespace ssrec::model
