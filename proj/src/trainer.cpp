#include "ssrec/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include "ssrec/common.hpp"
#include "ssrec/evaluator.hpp"
#include "ssrec/kernels.hpp"
#include "ssrec/threading.hpp"

namespace ssrec::train {

namespace {

struct AdamState {
  std::vector<std::vector<double>> m, v;
  int64_t t = 0;

  explicit AdamState(model::ModelState& params) {
    for (auto& ref : params.tensors()) {
      m.emplace_back(ref.size, 0.0);
      v.emplace_back(ref.size, 0.0);
    }
  }

  void step(model::ModelState& params, model::ModelState& grads, const TrainConfig& cfg) {
    ++t;
    const double inv1 = 1.0 / (1.0 - std::pow(cfg.adam_beta1, static_cast<double>(t)));
    const double inv2 = 1.0 / (1.0 - std::pow(cfg.adam_beta2, static_cast<double>(t)));
    auto prefs = params.tensors();
    auto grefs = grads.tensors();
    for (size_t i = 0; i < prefs.size(); ++i)
      kernels::adam_step(prefs[i].size, prefs[i].data, grefs[i].data, m[i].data(), v[i].data(),
                         cfg.lr, cfg.adam_beta1, cfg.adam_beta2, cfg.adam_eps, inv1, inv2);
  }
};

double global_grad_norm(model::ModelState& grads) {
  double sq = 0.0;
  for (auto& ref : grads.tensors()) sq += kernels::dot(ref.size, ref.data, ref.data);
  return std::sqrt(sq);
}

void scale_grads(model::ModelState& grads, double factor) {
  for (auto& ref : grads.tensors())
    for (size_t i = 0; i < ref.size; ++i) ref.data[i] *= factor;
}

void zero_grads(model::ModelState& grads) {
  for (auto& ref : grads.tensors()) std::memset(ref.data, 0, ref.size * sizeof(double));
}

std::vector<double> snapshot(const model::ModelState& m) {
  std::vector<double> out;
  for (const auto& ref : m.tensors()) out.insert(out.end(), ref.data, ref.data + ref.size);
  return out;
}

void restore(model::ModelState& m, const std::vector<double>& snap) {
  size_t off = 0;
  for (auto& ref : m.tensors()) {
    std::memcpy(ref.data, snap.data() + off, ref.size * sizeof(double));
    off += ref.size;
  }
}

}  // namespace

TrainResult train(model::ModelState& m, const data::SplitCorpus& corpus, const TrainConfig& cfg,
                  const EpochCallback& on_epoch) {
  if (!(cfg.lr > 0.0)) throw ConfigError("learning rate must be > 0");
  if (cfg.patience < 1) throw ConfigError("patience must be >= 1");
  if (cfg.precision != "wide")
    throw ConfigError("precision mode '" + cfg.precision +
                      "' not supported by the trainer (use 'wide')");
  const int threads = cfg.threads > 0 ? cfg.threads : default_threads();

  Rng shuffle_rng = Rng(cfg.seed).fork(2);
  Rng drop_rng = Rng(cfg.seed).fork(3);

  model::ModelState grads = model::zero_like(m);
  AdamState adam(m);

  TrainResult result;
  std::vector<double> best_params = snapshot(m);
  double best_ndcg = -1.0;
  int best_epoch = 0;
  int since_best = 0;

  eval::EvalOptions vopt;
  vopt.k = cfg.eval_k;
  vopt.split = eval::Split::Valid;
  vopt.threads = threads;

  std::vector<size_t> order(corpus.train.size());

  for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    // fresh working copy: optional partial-observation drop, then interval
    // normalization with the scale carried by the model
    std::vector<data::UserSequence> working;
    working.reserve(corpus.train.size());
    for (const auto& seq : corpus.train) {
      data::UserSequence w = cfg.drop_prob > 0.0
                                 ? data::simulate_partial_observation(seq, cfg.drop_prob, drop_rng)
                                 : seq;
      data::normalize_intervals(w, m.cfg.interval_scale, m.cfg.interval_clamp);
      working.push_back(std::move(w));
    }

    for (size_t i = 0; i < order.size(); ++i) order[i] = i;
    for (size_t i = order.size(); i > 1; --i)
      std::swap(order[i - 1], order[shuffle_rng.below(i)]);
    std::vector<data::UserSequence> shuffled;
    shuffled.reserve(working.size());
    for (size_t i : order) shuffled.push_back(std::move(working[i]));

    const auto batches = data::make_batches(shuffled, m.cfg.max_len, cfg.batch_size);

    double epoch_loss = 0.0;
    size_t epoch_targets = 0;
    int step = 0;
    for (const auto& batch : batches) {
      zero_grads(grads);
      model::ForwardOptions fopt;
      fopt.training = true;
      fopt.threads = threads;
      fopt.dropout_seed = Rng::mix(Rng::mix(cfg.seed, 4), static_cast<uint64_t>(epoch) * 100000 +
                                                              static_cast<uint64_t>(step));
      const auto lr = model::loss_and_grad(m, batch, fopt, grads);
      if (!std::isfinite(lr.loss))
        throw DivergenceError("training diverged: non-finite loss at epoch " +
                                  std::to_string(epoch) + " step " + std::to_string(step),
                              epoch, step, lr.loss);
      epoch_loss += lr.loss * static_cast<double>(lr.n_targets);
      epoch_targets += lr.n_targets;

      // the pad embedding row must never move
      std::memset(grads.embedding.data(), 0, sizeof(double) * m.cfg.d);
      if (cfg.clip_norm > 0.0) {
        const double norm = global_grad_norm(grads);
        if (norm > cfg.clip_norm) scale_grads(grads, cfg.clip_norm / norm);
      }
      adam.step(m, grads, cfg);
      std::memset(m.embedding.data(), 0, sizeof(double) * m.cfg.d);
      ++step;
    }
    if (epoch_targets == 0) throw DataError("training corpus produced no supervised targets");

    const auto vm = eval::evaluate(m, corpus, vopt);

    EpochStats st;
    st.epoch = epoch;
    st.train_loss = epoch_loss / static_cast<double>(epoch_targets);
    st.hr = vm.hr;
    st.ndcg = vm.ndcg;
    st.mrr = vm.mrr;
    result.history.push_back(st);
    result.stopped_after = epoch;

    if (vm.ndcg > best_ndcg) {
      best_ndcg = vm.ndcg;
      best_epoch = epoch;
      best_params = snapshot(m);
      since_best = 0;
    } else {
      ++since_best;
    }

    if (on_epoch && !on_epoch(st)) break;
    if (since_best >= cfg.patience) break;
  }

  restore(m, best_params);
  result.best_epoch = best_epoch;
  result.best_ndcg = best_ndcg;
  return result;
}

void write_history(const std::string& path, const std::vector<EpochStats>& history) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write history file: " + path);
  out << "epoch\ttrain_loss\tvalid_HR@10\tvalid_NDCG@10\tvalid_MRR@10\n";
  char buf[160];
  for (const auto& st : history) {
    std::snprintf(buf, sizeof(buf), "%d\t%.6f\t%.6f\t%.6f\t%.6f\n", st.epoch, st.train_loss,
                  st.hr, st.ndcg, st.mrr);
    out << buf;
  }
}

// ---------------------------------------------------------------------------
// Gradient audit.
// ---------------------------------------------------------------------------

model::ModelState compute_grads(const model::ModelState& m, const data::Batch& batch,
                                int threads) {
  model::ModelState grads = model::zero_like(m);
  model::ForwardOptions opt;
  opt.training = false;  // dropout off: the loss must be deterministic
  opt.threads = threads;
  model::loss_and_grad(m, batch, opt, grads);
  return grads;
}

std::string AuditReport::summary() const {
  std::ostringstream os;
  os << (pass ? "PASS" : "FAIL") << " (tol " << tol << ")\n";
  for (const auto& e : entries) {
    os << "  " << (e.max_rel <= tol ? "ok  " : "BAD ") << e.tensor << " max_rel=" << e.max_rel
       << " coords=" << e.coords << "\n";
  }
  return os.str();
}

AuditReport audit_grads(const model::ModelState& m, const data::Batch& batch,
                        const model::ModelState& analytic, double h, int coords_per_tensor,
                        double tol, uint64_t seed) {
  AuditReport report;
  report.tol = tol;
  report.pass = true;

  model::ModelState probe = m;  // perturbed in place, coordinate at a time
  auto prefs = probe.tensors();
  auto arefs = analytic.tensors();
  Rng rng(seed);
  model::ForwardOptions opt;
  opt.training = false;

  for (size_t ti = 0; ti < prefs.size(); ++ti) {
    auto& ref = prefs[ti];
    AuditEntry entry;
    entry.tensor = ref.name;

    std::vector<size_t> coords;
    if (ref.size <= static_cast<size_t>(coords_per_tensor)) {
      for (size_t i = 0; i < ref.size; ++i) coords.push_back(i);
    } else {
      for (int i = 0; i < coords_per_tensor; ++i) coords.push_back(rng.below(ref.size));
    }
    // the frozen pad row of the embedding is excluded by construction
    if (ref.name == "embedding") {
      for (auto& c : coords)
        c = static_cast<size_t>(m.cfg.d) +
            c % (ref.size - static_cast<size_t>(m.cfg.d));
    }

    for (size_t c : coords) {
      const double saved = ref.data[c];
      ref.data[c] = saved + h;
      const double lp = model::loss(probe, batch, opt).loss;
      ref.data[c] = saved - h;
      const double lm = model::loss(probe, batch, opt).loss;
      ref.data[c] = saved;
      const double fd = (lp - lm) / (2.0 * h);
      const double an = arefs[ti].data[c];
      // relative error with a floor so numerically-zero gradients compare sanely
      const double rel = std::fabs(an - fd) / std::max({std::fabs(an), std::fabs(fd), 1e-3});
      entry.max_rel = std::max(entry.max_rel, rel);
      ++entry.coords;
    }
    if (entry.max_rel > tol) report.pass = false;
    report.entries.push_back(entry);
  }
  return report;
}

AuditReport grad_audit(const model::ModelState& m, const data::Batch& batch, double h,
                       int coords_per_tensor, double tol, uint64_t seed) {
  const model::ModelState analytic = compute_grads(m, batch);
  return audit_grads(m, batch, analytic, h, coords_per_tensor, tol, seed);
}

}  // namespace ssrec::train
