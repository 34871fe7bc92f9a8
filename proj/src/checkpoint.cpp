#include "ssrec/checkpoint.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>
#include <vector>

#include "ssrec/common.hpp"

static_assert(std::endian::native == std::endian::little,
              "checkpoint format assumes a little-endian host");

namespace ssrec::train {

namespace {

constexpr char kMagic[8] = {'S', 'S', 'R', 'E', 'C', 'K', 'P', 'T'};
constexpr uint32_t kVersion = 1;

uint32_t crc32_update(uint32_t crc, const void* data, size_t n) {
  static uint32_t table[256];
  static bool init = false;
  if (!init) {
    for (uint32_t i = 0; i < 256; ++i) {
      uint32_t c = i;
      for (int k = 0; k < 8; ++k) c = (c & 1) ? 0xEDB88320u ^ (c >> 1) : c >> 1;
      table[i] = c;
    }
    init = true;
  }
  const unsigned char* p = static_cast<const unsigned char*>(data);
  crc ^= 0xFFFFFFFFu;
  for (size_t i = 0; i < n; ++i) crc = table[(crc ^ p[i]) & 0xFF] ^ (crc >> 8);
  return crc ^ 0xFFFFFFFFu;
}

struct Writer {
  std::ofstream out;
  uint32_t crc = 0;

  explicit Writer(const std::string& path) : out(path, std::ios::binary) {
    if (!out) throw CheckpointError("cannot open checkpoint for writing: " + path);
  }
  void write(const void* p, size_t n) {
    out.write(static_cast<const char*>(p), static_cast<std::streamsize>(n));
    crc = crc32_update(crc, p, n);
  }
  template <class T>
  void write_pod(const T& v) {
    write(&v, sizeof(T));
  }
};

struct Reader {
  std::ifstream in;
  uint32_t crc = 0;

  explicit Reader(const std::string& path) : in(path, std::ios::binary) {
    if (!in) throw CheckpointError("cannot open checkpoint: " + path);
  }
  void read(void* p, size_t n) {
    in.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
    if (static_cast<size_t>(in.gcount()) != n)
      throw CheckpointError("checkpoint truncated");
    crc = crc32_update(crc, p, n);
  }
  template <class T>
  T read_pod() {
    T v;
    read(&v, sizeof(T));
    return v;
  }
};

std::string serialize_config(const model::ModelConfig& cfg) {
  char buf[512];
  std::snprintf(buf, sizeof(buf),
                "n_items=%d\nd=%d\np=%d\nblocks=%d\nmax_len=%d\ndropout=%.17g\n"
                "ablation=%s\nln_eps=%.17g\ninterval_scale=%.17g\ninterval_clamp=%.17g\n",
                cfg.n_items, cfg.d, cfg.p, cfg.blocks, cfg.max_len, cfg.dropout,
                model::to_string(cfg.ablation), cfg.ln_eps, cfg.interval_scale,
                cfg.interval_clamp);
  return buf;
}

model::ModelConfig parse_config(const std::string& text) {
  model::ModelConfig cfg;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    const size_t eq = line.find('=');
    if (eq == std::string::npos) continue;
    const std::string key = line.substr(0, eq);
    const std::string val = line.substr(eq + 1);
    try {
      if (key == "n_items") cfg.n_items = std::stoi(val);
      else if (key == "d") cfg.d = std::stoi(val);
      else if (key == "p") cfg.p = std::stoi(val);
      else if (key == "blocks") cfg.blocks = std::stoi(val);
      else if (key == "max_len") cfg.max_len = std::stoi(val);
      else if (key == "dropout") cfg.dropout = std::stod(val);
      else if (key == "ablation") cfg.ablation = model::ablation_from_string(val);
      else if (key == "ln_eps") cfg.ln_eps = std::stod(val);
      else if (key == "interval_scale") cfg.interval_scale = std::stod(val);
      else if (key == "interval_clamp") cfg.interval_clamp = std::stod(val);
      else throw CheckpointError("unknown checkpoint config key: " + key);
    } catch (const std::invalid_argument&) {
      throw CheckpointError("bad checkpoint config value for " + key);
    }
  }
  return cfg;
}

}  // namespace

void save_checkpoint(const model::ModelState& m, const std::string& path) {
  Writer w(path);
  w.write(kMagic, sizeof(kMagic));
  w.write_pod(kVersion);

  const std::string header = serialize_config(m.cfg);
  w.write_pod(static_cast<uint32_t>(header.size()));
  w.write(header.data(), header.size());

  const auto refs = m.tensors();
  w.write_pod(static_cast<uint32_t>(refs.size()));
  for (const auto& t : refs) {
    w.write_pod(static_cast<uint32_t>(t.name.size()));
    w.write(t.name.data(), t.name.size());
    w.write_pod(static_cast<uint64_t>(t.size));
    w.write(t.data, t.size * sizeof(double));
  }
  const uint32_t crc = w.crc;
  w.out.write(reinterpret_cast<const char*>(&crc), sizeof(crc));
  if (!w.out) throw CheckpointError("checkpoint write failed: " + path);
}

model::ModelState load_checkpoint(const std::string& path) {
  Reader r(path);
  char magic[8];
  r.read(magic, sizeof(magic));
  if (std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
    throw CheckpointError("not a checkpoint file: " + path);
  const uint32_t version = r.read_pod<uint32_t>();
  if (version != kVersion)
    throw CheckpointError("unsupported checkpoint version " + std::to_string(version));

  const uint32_t header_len = r.read_pod<uint32_t>();
  if (header_len > 1 << 20) throw CheckpointError("implausible checkpoint header");
  std::string header(header_len, '\0');
  r.read(header.data(), header_len);

  model::ModelState m = model::init_model(parse_config(header), 0);

  const uint32_t n_tensors = r.read_pod<uint32_t>();
  auto refs = m.tensors();
  if (n_tensors != refs.size())
    throw CheckpointError("checkpoint tensor count mismatch");
  for (auto& t : refs) {
    const uint32_t name_len = r.read_pod<uint32_t>();
    std::string name(name_len, '\0');
    r.read(name.data(), name_len);
    const uint64_t count = r.read_pod<uint64_t>();
    if (name != t.name || count != t.size)
      throw CheckpointError("checkpoint tensor mismatch at '" + name + "' (expected '" +
                            t.name + "')");
    r.read(t.data, t.size * sizeof(double));
  }

  const uint32_t computed = r.crc;
  uint32_t stored = 0;
  r.in.read(reinterpret_cast<char*>(&stored), sizeof(stored));
  if (static_cast<size_t>(r.in.gcount()) != sizeof(stored))
    throw CheckpointError("checkpoint truncated");
  if (stored != computed) throw CheckpointError("checkpoint checksum mismatch: " + path);
  return m;
}

model::ModelState load_checkpoint(const std::string& path, const model::ModelConfig& expected) {
  model::ModelState m = load_checkpoint(path);
  if (!(m.cfg == expected)) {
    std::ostringstream os;
    os << "checkpoint config mismatch:";
    auto field = [&os](const char* name, auto a, auto b) {
      if (!(a == b)) os << " " << name << "(" << a << "!=" << b << ")";
    };
    field("n_items", m.cfg.n_items, expected.n_items);
    field("d", m.cfg.d, expected.d);
    field("p", m.cfg.p, expected.p);
    field("blocks", m.cfg.blocks, expected.blocks);
    field("max_len", m.cfg.max_len, expected.max_len);
    field("dropout", m.cfg.dropout, expected.dropout);
    field("ablation", static_cast<int>(m.cfg.ablation), static_cast<int>(expected.ablation));
    field("interval_scale", m.cfg.interval_scale, expected.interval_scale);
    throw CheckpointError(os.str());
  }
  return m;
}

}  // namespace ssrec::train
