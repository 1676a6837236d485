#include "pnn/model.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <random>

#include "pnn/errors.hpp"
#include "pnn/rng.hpp"

namespace pnn {

namespace {
constexpr double kInitScale = 0.1;
constexpr char kCheckpointMagic[8] = {'P', 'N', 'N', 'C', 'K', 'P', 'T', '\0'};
constexpr std::uint32_t kCheckpointVersion = 1;
}  // namespace

bool ModelParams::all_finite() const {
  if (!user_emb.all_finite() || !item_emb.all_finite() || !w2.all_finite()) {
    return false;
  }
  for (double x : w1) {
    if (!std::isfinite(x)) return false;
  }
  for (double x : b) {
    if (!std::isfinite(x)) return false;
  }
  return true;
}

ModelParams init_params(std::int64_t num_users, std::int64_t num_items,
                        std::int64_t d, std::uint64_t seed) {
  if (num_users <= 0 || num_items <= 0) {
    throw ConfigError("init_params: need at least one user and one item");
  }
  if (d < 1) throw ConfigError("init_params: embedding dimension must be >= 1");

  ModelParams p;
  p.num_users = num_users;
  p.num_items = num_items;
  p.d = d;
  p.seed = seed;
  p.user_emb = Matrix(static_cast<std::size_t>(num_users),
                      static_cast<std::size_t>(d));
  p.item_emb = Matrix(static_cast<std::size_t>(num_items),
                      static_cast<std::size_t>(d));
  p.w1.assign(static_cast<std::size_t>(d), 0.0);
  p.w2 = Matrix(static_cast<std::size_t>(d), static_cast<std::size_t>(d));
  p.b.assign(static_cast<std::size_t>(d), 0.0);

  auto rng = make_rng(seed, 0x696e6974ULL);  // "init"
  std::normal_distribution<double> normal(0.0, kInitScale);
  for (std::size_t k = 0; k < p.user_emb.size(); ++k) p.user_emb.data()[k] = normal(rng);
  for (std::size_t k = 0; k < p.item_emb.size(); ++k) p.item_emb.data()[k] = normal(rng);
  // Attention weights start non-negative so lambda's gate is interpretable
  // from the first step; the trainer's projection keeps them that way.
  for (auto& w : p.w1) w = std::fabs(normal(rng));
  for (std::size_t k = 0; k < p.w2.size(); ++k) p.w2.data()[k] = std::fabs(normal(rng));
  return p;
}

std::vector<double> centroid(std::span<const ItemId> items,
                             const ModelParams& p) {
  if (items.empty()) throw ConfigError("centroid of an empty class");
  std::vector<double> c(static_cast<std::size_t>(p.d), 0.0);
  for (ItemId i : items) axpy(1.0, p.item(i), c);
  const double inv = 1.0 / static_cast<double>(items.size());
  for (double& x : c) x *= inv;
  return c;
}

namespace {

void write_bytes(std::ofstream& out, const void* data, std::size_t n) {
  out.write(static_cast<const char*>(data), static_cast<std::streamsize>(n));
}

void write_i64(std::ofstream& out, std::int64_t v) { write_bytes(out, &v, 8); }

void read_bytes(std::ifstream& in, void* data, std::size_t n,
                const std::string& path) {
  in.read(static_cast<char*>(data), static_cast<std::streamsize>(n));
  if (static_cast<std::size_t>(in.gcount()) != n) {
    throw DataError("truncated checkpoint: " + path);
  }
}

std::int64_t read_i64(std::ifstream& in, const std::string& path) {
  std::int64_t v = 0;
  read_bytes(in, &v, 8, path);
  return v;
}

}  // namespace

// Layout (all integers and doubles little-endian):
//   magic[8] version:u32 pad:u32 num_users:i64 num_items:i64 d:i64 seed:u64
//   user_emb item_emb w1 w2 b   (row-major f64)
void save_checkpoint(const ModelParams& p, const std::string& path) {
  static_assert(std::endian::native == std::endian::little,
                "checkpoint writer assumes a little-endian host");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot open checkpoint for writing: " + path);
  write_bytes(out, kCheckpointMagic, 8);
  const std::uint32_t version = kCheckpointVersion;
  const std::uint32_t pad = 0;
  write_bytes(out, &version, 4);
  write_bytes(out, &pad, 4);
  write_i64(out, p.num_users);
  write_i64(out, p.num_items);
  write_i64(out, p.d);
  write_bytes(out, &p.seed, 8);
  write_bytes(out, p.user_emb.data(), p.user_emb.size() * 8);
  write_bytes(out, p.item_emb.data(), p.item_emb.size() * 8);
  write_bytes(out, p.w1.data(), p.w1.size() * 8);
  write_bytes(out, p.w2.data(), p.w2.size() * 8);
  write_bytes(out, p.b.data(), p.b.size() * 8);
  if (!out) throw DataError("failed writing checkpoint: " + path);
}

ModelParams load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open checkpoint: " + path);
  char magic[8];
  read_bytes(in, magic, 8, path);
  if (std::memcmp(magic, kCheckpointMagic, 8) != 0) {
    throw DataError("not a pnn checkpoint (bad magic): " + path);
  }
  std::uint32_t version = 0, pad = 0;
  read_bytes(in, &version, 4, path);
  read_bytes(in, &pad, 4, path);
  if (version != kCheckpointVersion) {
    throw DataError("unsupported checkpoint version " + std::to_string(version));
  }

  ModelParams p;
  p.num_users = read_i64(in, path);
  p.num_items = read_i64(in, path);
  p.d = read_i64(in, path);
  read_bytes(in, &p.seed, 8, path);
  if (p.num_users <= 0 || p.num_items <= 0 || p.d <= 0) {
    throw DataError("checkpoint has impossible shapes: " + path);
  }
  p.user_emb = Matrix(static_cast<std::size_t>(p.num_users),
                      static_cast<std::size_t>(p.d));
  p.item_emb = Matrix(static_cast<std::size_t>(p.num_items),
                      static_cast<std::size_t>(p.d));
  p.w1.assign(static_cast<std::size_t>(p.d), 0.0);
  p.w2 = Matrix(static_cast<std::size_t>(p.d), static_cast<std::size_t>(p.d));
  p.b.assign(static_cast<std::size_t>(p.d), 0.0);
  read_bytes(in, p.user_emb.data(), p.user_emb.size() * 8, path);
  read_bytes(in, p.item_emb.data(), p.item_emb.size() * 8, path);
  read_bytes(in, p.w1.data(), p.w1.size() * 8, path);
  read_bytes(in, p.w2.data(), p.w2.size() * 8, path);
  read_bytes(in, p.b.data(), p.b.size() * 8, path);
  return p;
}

}  // namespace pnn
