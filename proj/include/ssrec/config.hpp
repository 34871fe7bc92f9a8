#pragma once

#include <map>
#include <string>
#include <vector>

#include "ssrec/data.hpp"
#include "ssrec/model.hpp"
#include "ssrec/trainer.hpp"

namespace ssrec::config {

// Flat dotted-key configuration. Precedence: defaults < file < environment
// (SSREC_ prefix, '.' spelled '__') < command-line overrides. The resolved
// merge is persisted next to a run's outputs so it can be replayed.
struct RunConfig {
  // data.*
  std::string data_path;
  std::string data_delim = "\t";
  std::string data_columns = "user,item,time";
  std::string data_header = "auto";  // auto|yes|no
  bool data_lenient = false;

  // model.* (n_items comes from the data)
  int embed_dim = 64;
  int state_dim = 32;
  int blocks = 2;
  int max_len = 200;
  double dropout = 0.2;
  std::string ablation = "full";

  // train.*
  double lr = 1e-3;
  int batch_size = 1024;
  int max_epochs = 200;
  int patience = 10;
  uint64_t seed = 1;
  double drop_prob = 0.0;
  double clip_norm = 5.0;
  int threads = 0;
  std::string precision = "wide";

  // norm.*
  std::string norm_scale = "auto";  // "auto" or a positive number
  double norm_clamp = 10.0;

  // eval.*
  int eval_k = 10;
  bool filter_history = false;

  // out.*
  std::string out_dir = "run";

  std::string simd = "auto";  // scalar|avx2|auto
};

using KeyValues = std::map<std::string, std::string>;

// Parses "key = value" lines; '#' starts a comment. Unknown keys raise
// ConfigError naming the key.
KeyValues parse_config_file(const std::string& path);
KeyValues parse_config_text(const std::string& text, const std::string& name);

// Environment overrides for every known key (SSREC_train__lr=0.01 etc).
KeyValues env_overrides();

void apply(RunConfig& cfg, const KeyValues& kv);
std::string serialize(const RunConfig& cfg);  // one key=value per line, fixed order
const std::vector<std::string>& known_keys();

data::ParseOptions parse_options(const RunConfig& cfg);
model::ModelConfig model_config(const RunConfig& cfg, int32_t n_items);
train::TrainConfig train_config(const RunConfig& cfg);

}  // namespace ssrec::config
