#include "ssrec/config.hpp"

#include <cstdlib>
#include <fstream>
#include <functional>
#include <sstream>

#include "ssrec/common.hpp"

namespace ssrec::config {

namespace {

std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t");
  size_t b = s.find_last_not_of(" \t");
  if (a == std::string::npos) return "";
  return s.substr(a, b - a + 1);
}

struct Field {
  std::string key;
  std::function<void(RunConfig&, const std::string&)> set;
  std::function<std::string(const RunConfig&)> get;
};

int parse_int(const std::string& key, const std::string& v) {
  try {
    size_t pos = 0;
    const int r = std::stoi(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return r;
  } catch (const std::exception&) {
    throw ConfigError("config key '" + key + "': expected integer, got '" + v + "'");
  }
}

uint64_t parse_u64(const std::string& key, const std::string& v) {
  try {
    size_t pos = 0;
    const uint64_t r = std::stoull(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return r;
  } catch (const std::exception&) {
    throw ConfigError("config key '" + key + "': expected unsigned integer, got '" + v + "'");
  }
}

double parse_double(const std::string& key, const std::string& v) {
  try {
    size_t pos = 0;
    const double r = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return r;
  } catch (const std::exception&) {
    throw ConfigError("config key '" + key + "': expected number, got '" + v + "'");
  }
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ConfigError("config key '" + key + "': expected boolean, got '" + v + "'");
}

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

const std::vector<Field>& fields() {
  static const std::vector<Field> f = {
      {"data.path", [](RunConfig& c, const std::string& v) { c.data_path = v; },
       [](const RunConfig& c) { return c.data_path; }},
      {"data.delim", [](RunConfig& c, const std::string& v) { c.data_delim = v; },
       [](const RunConfig& c) { return c.data_delim; }},
      {"data.columns", [](RunConfig& c, const std::string& v) { c.data_columns = v; },
       [](const RunConfig& c) { return c.data_columns; }},
      {"data.header", [](RunConfig& c, const std::string& v) { c.data_header = v; },
       [](const RunConfig& c) { return c.data_header; }},
      {"data.lenient",
       [](RunConfig& c, const std::string& v) { c.data_lenient = parse_bool("data.lenient", v); },
       [](const RunConfig& c) { return c.data_lenient ? "true" : "false"; }},
      {"model.embed_dim",
       [](RunConfig& c, const std::string& v) { c.embed_dim = parse_int("model.embed_dim", v); },
       [](const RunConfig& c) { return std::to_string(c.embed_dim); }},
      {"model.state_dim",
       [](RunConfig& c, const std::string& v) { c.state_dim = parse_int("model.state_dim", v); },
       [](const RunConfig& c) { return std::to_string(c.state_dim); }},
      {"model.blocks",
       [](RunConfig& c, const std::string& v) { c.blocks = parse_int("model.blocks", v); },
       [](const RunConfig& c) { return std::to_string(c.blocks); }},
      {"model.max_len",
       [](RunConfig& c, const std::string& v) { c.max_len = parse_int("model.max_len", v); },
       [](const RunConfig& c) { return std::to_string(c.max_len); }},
      {"model.dropout",
       [](RunConfig& c, const std::string& v) { c.dropout = parse_double("model.dropout", v); },
       [](const RunConfig& c) { return fmt_double(c.dropout); }},
      {"model.ablation", [](RunConfig& c, const std::string& v) { c.ablation = v; },
       [](const RunConfig& c) { return c.ablation; }},
      {"train.lr",
       [](RunConfig& c, const std::string& v) { c.lr = parse_double("train.lr", v); },
       [](const RunConfig& c) { return fmt_double(c.lr); }},
      {"train.batch_size",
       [](RunConfig& c, const std::string& v) {
         c.batch_size = parse_int("train.batch_size", v);
       },
       [](const RunConfig& c) { return std::to_string(c.batch_size); }},
      {"train.max_epochs",
       [](RunConfig& c, const std::string& v) {
         c.max_epochs = parse_int("train.max_epochs", v);
       },
       [](const RunConfig& c) { return std::to_string(c.max_epochs); }},
      {"train.patience",
       [](RunConfig& c, const std::string& v) { c.patience = parse_int("train.patience", v); },
       [](const RunConfig& c) { return std::to_string(c.patience); }},
      {"train.seed",
       [](RunConfig& c, const std::string& v) { c.seed = parse_u64("train.seed", v); },
       [](const RunConfig& c) { return std::to_string(c.seed); }},
      {"train.drop_prob",
       [](RunConfig& c, const std::string& v) {
         c.drop_prob = parse_double("train.drop_prob", v);
       },
       [](const RunConfig& c) { return fmt_double(c.drop_prob); }},
      {"train.clip_norm",
       [](RunConfig& c, const std::string& v) {
         c.clip_norm = parse_double("train.clip_norm", v);
       },
       [](const RunConfig& c) { return fmt_double(c.clip_norm); }},
      {"train.threads",
       [](RunConfig& c, const std::string& v) { c.threads = parse_int("train.threads", v); },
       [](const RunConfig& c) { return std::to_string(c.threads); }},
      {"train.precision", [](RunConfig& c, const std::string& v) { c.precision = v; },
       [](const RunConfig& c) { return c.precision; }},
      {"norm.scale", [](RunConfig& c, const std::string& v) { c.norm_scale = v; },
       [](const RunConfig& c) { return c.norm_scale; }},
      {"norm.clamp_max",
       [](RunConfig& c, const std::string& v) {
         c.norm_clamp = parse_double("norm.clamp_max", v);
       },
       [](const RunConfig& c) { return fmt_double(c.norm_clamp); }},
      {"eval.k", [](RunConfig& c, const std::string& v) { c.eval_k = parse_int("eval.k", v); },
       [](const RunConfig& c) { return std::to_string(c.eval_k); }},
      {"eval.filter_history",
       [](RunConfig& c, const std::string& v) {
         c.filter_history = parse_bool("eval.filter_history", v);
       },
       [](const RunConfig& c) { return c.filter_history ? "true" : "false"; }},
      {"out.dir", [](RunConfig& c, const std::string& v) { c.out_dir = v; },
       [](const RunConfig& c) { return c.out_dir; }},
      {"simd", [](RunConfig& c, const std::string& v) { c.simd = v; },
       [](const RunConfig& c) { return c.simd; }},
  };
  return f;
}

const Field* find_field(const std::string& key) {
  for (const auto& f : fields())
    if (f.key == key) return &f;
  return nullptr;
}

}  // namespace

const std::vector<std::string>& known_keys() {
  static const std::vector<std::string> keys = [] {
    std::vector<std::string> k;
    for (const auto& f : fields()) k.push_back(f.key);
    return k;
  }();
  return keys;
}

KeyValues parse_config_text(const std::string& text, const std::string& name) {
  KeyValues kv;
  std::istringstream in(text);
  std::string line;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError(name + ":" + std::to_string(lineno) + ": expected key=value");
    const std::string key = trim(line.substr(0, eq));
    const std::string val = trim(line.substr(eq + 1));
    if (!find_field(key))
      throw ConfigError(name + ":" + std::to_string(lineno) + ": unknown config key '" + key +
                        "'");
    kv[key] = val;
  }
  return kv;
}

KeyValues parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open config file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str(), path);
}

KeyValues env_overrides() {
  KeyValues kv;
  for (const auto& key : known_keys()) {
    // '.' is spelled '__' so embedded underscores stay unambiguous
    std::string env = "SSREC_";
    for (char c : key) {
      if (c == '.')
        env += "__";
      else
        env += c;
    }
    if (const char* v = std::getenv(env.c_str())) kv[key] = v;
  }
  return kv;
}

void apply(RunConfig& cfg, const KeyValues& kv) {
  for (const auto& [key, val] : kv) {
    const Field* f = find_field(key);
    if (!f) throw ConfigError("unknown config key '" + key + "'");
    f->set(cfg, val);
  }
}

std::string serialize(const RunConfig& cfg) {
  std::ostringstream os;
  for (const auto& f : fields()) os << f.key << " = " << f.get(cfg) << "\n";
  return os.str();
}

data::ParseOptions parse_options(const RunConfig& cfg) {
  data::ParseOptions opt;
  opt.delim = cfg.data_delim;
  opt.columns.clear();
  std::istringstream in(cfg.data_columns);
  std::string tok;
  while (std::getline(in, tok, ',')) opt.columns.push_back(trim(tok));
  if (cfg.data_header == "auto")
    opt.header = data::ParseOptions::Header::Auto;
  else if (cfg.data_header == "yes")
    opt.header = data::ParseOptions::Header::Yes;
  else if (cfg.data_header == "no")
    opt.header = data::ParseOptions::Header::No;
  else
    throw ConfigError("data.header must be auto|yes|no");
  opt.lenient = cfg.data_lenient;
  return opt;
}

model::ModelConfig model_config(const RunConfig& cfg, int32_t n_items) {
  model::ModelConfig mc;
  mc.n_items = n_items;
  mc.d = cfg.embed_dim;
  mc.p = cfg.state_dim;
  mc.blocks = cfg.blocks;
  mc.max_len = cfg.max_len;
  mc.dropout = cfg.dropout;
  mc.ablation = model::ablation_from_string(cfg.ablation);
  mc.interval_clamp = cfg.norm_clamp;
  return mc;
}

train::TrainConfig train_config(const RunConfig& cfg) {
  train::TrainConfig tc;
  tc.lr = cfg.lr;
  tc.batch_size = cfg.batch_size;
  tc.max_epochs = cfg.max_epochs;
  tc.patience = cfg.patience;
  tc.seed = cfg.seed;
  tc.drop_prob = cfg.drop_prob;
  tc.clip_norm = cfg.clip_norm;
  tc.threads = cfg.threads;
  tc.eval_k = cfg.eval_k;
  tc.precision = cfg.precision;
  return tc;
}

}  // namespace ssrec::config
