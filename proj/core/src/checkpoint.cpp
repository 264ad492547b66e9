#include "hsinoise/checkpoint.hpp"

#include <fstream>
#include <map>
#include <string>

#include "hsinoise/binary_io.hpp"

namespace hsinoise {
namespace {

constexpr char kMagic[5] = "HDNM";
constexpr std::uint32_t kMaxNameLength = 256;
constexpr std::uint32_t kMaxRank = 8;
constexpr std::uint64_t kMaxElements = 1ull << 31;

struct Block {
  Shape shape;
  std::vector<double> values;
};

void write_header(std::ostream& os, const std::string& name, const Shape& shape) {
  binary::write_u32(os, static_cast<std::uint32_t>(name.size()));
  os.write(name.data(), static_cast<std::streamsize>(name.size()));
  binary::write_u32(os, static_cast<std::uint32_t>(shape.size()));
  for (auto e : shape) binary::write_u32(os, static_cast<std::uint32_t>(e));
}

void write_block(std::ostream& os, const std::string& name, const Shape& shape, std::span<const double> values) {
  write_header(os, name, shape);
  for (double v : values) binary::write_f64(os, v);
}

std::vector<double> encode_config(const ModelConfig& c) {
  auto f = [](std::size_t v) { return static_cast<double>(v); };
  return {f(c.bands),
          f(c.neighbor_size),
          f(c.num_classes),
          f(c.feature_dim),
          f(c.num_bases),
          f(c.conv1_kernels),
          f(c.conv1_extent[0]),
          f(c.conv1_extent[1]),
          f(c.conv1_extent[2]),
          f(c.conv2_kernels),
          f(c.conv2_extent[0]),
          f(c.conv2_extent[1]),
          f(c.conv2_extent[2]),
          c.baseline ? 1.0 : 0.0,
          c.noise.alpha,
          c.noise.beta,
          c.noise.epsilon,
          c.noise.update_sign == UpdateSign::descent ? 0.0 : 1.0,
          c.lambda_c,
          c.gamma};
}

ModelConfig decode_config(const std::vector<double>& v) {
  if (v.size() != 20) throw FormatError("config block has " + std::to_string(v.size()) + " entries, expected 20");
  auto u = [&](std::size_t i) {
    if (!(v[i] >= 0.0 && v[i] < 4294967296.0)) throw FormatError("config entry out of range");
    return static_cast<std::size_t>(v[i]);
  };
  ModelConfig c;
  c.bands = u(0);
  c.neighbor_size = u(1);
  c.num_classes = u(2);
  c.feature_dim = u(3);
  c.num_bases = u(4);
  c.conv1_kernels = u(5);
  c.conv1_extent = {u(6), u(7), u(8)};
  c.conv2_kernels = u(9);
  c.conv2_extent = {u(10), u(11), u(12)};
  c.baseline = v[13] != 0.0;
  c.noise.alpha = v[14];
  c.noise.beta = v[15];
  c.noise.epsilon = v[16];
  c.noise.update_sign = v[17] == 0.0 ? UpdateSign::descent : UpdateSign::as_written;
  c.lambda_c = v[18];
  c.gamma = v[19];
  return c;
}

const Block& require(const std::map<std::string, Block>& blocks, const std::string& name) {
  auto it = blocks.find(name);
  if (it == blocks.end()) throw FormatError("checkpoint is missing block \"" + name + "\"");
  return it->second;
}

}  // namespace

void write_checkpoint(std::ostream& os, const ModelState& state) {
  binary::write_magic(os, kMagic);
  binary::write_u32(os, kCheckpointVersion);
  const auto config = encode_config(state.config);
  write_block(os, "config", {config.size()}, config);
  const auto entries = state.params.entries();
  for (std::size_t i = 0; i < entries.size(); ++i) {
    write_block(os, NetworkParams::kNames[i], entries[i]->shape(), entries[i]->values());
  }
  // rank 2 followed by the noise-space encoding (k, d, payload).
  const std::string bases = "noise_space.bases";
  binary::write_u32(os, static_cast<std::uint32_t>(bases.size()));
  os.write(bases.data(), static_cast<std::streamsize>(bases.size()));
  binary::write_u32(os, 2);
  write_bases(os, state.noise_space);
  write_block(os, "centers", {state.centers.num_classes, state.centers.dim}, state.centers.centers);
}

ModelState read_checkpoint(std::istream& is) {
  binary::expect_magic(is, kMagic);
  const auto version = binary::read_u32(is, "checkpoint version");
  if (version != kCheckpointVersion) {
    throw FormatError("unsupported checkpoint version " + std::to_string(version));
  }
  std::map<std::string, Block> blocks;
  while (is.peek() != std::char_traits<char>::eof()) {
    const auto len = binary::read_u32(is, "block name length");
    if (len == 0 || len > kMaxNameLength) throw FormatError("bad block name length");
    std::string name(len, '\0');
    if (!is.read(name.data(), len)) throw FormatError("truncated block name");
    const auto rank = binary::read_u32(is, "block rank");
    if (rank == 0 || rank > kMaxRank) throw FormatError("bad rank for block \"" + name + "\"");
    Block block;
    std::uint64_t n = 1;
    for (std::uint32_t i = 0; i < rank; ++i) {
      const auto e = binary::read_u32(is, "block extent");
      if (e == 0) throw FormatError("zero extent in block \"" + name + "\"");
      n *= e;
      if (n > kMaxElements) throw FormatError("extent overflow in block \"" + name + "\"");
      block.shape.push_back(e);
    }
    block.values.resize(n);
    for (double& v : block.values) v = binary::read_f64(is, "block payload");
    if (!blocks.emplace(name, std::move(block)).second) throw FormatError("duplicate block \"" + name + "\"");
  }

  ModelConfig config = decode_config(require(blocks, "config").values);
  try {
    config.validate();
  } catch (const std::invalid_argument& e) {
    throw FormatError(std::string("invalid model config: ") + e.what());
  }
  // Shapes come from a freshly initialised model, so mismatches surface here.
  ModelState state = init_model(config, 0);
  auto entries = state.params.entries();
  for (std::size_t i = 0; i < entries.size(); ++i) {
    const Block& b = require(blocks, NetworkParams::kNames[i]);
    if (b.shape != entries[i]->shape()) {
      throw FormatError(std::string("shape mismatch for ") + NetworkParams::kNames[i]);
    }
    *entries[i] = Tensor::from(b.shape, b.values);
  }
  const Block& bases = require(blocks, "noise_space.bases");
  if (bases.shape != Shape{config.num_bases, config.feature_dim}) throw FormatError("noise space shape mismatch");
  state.noise_space = NoiseSpace(config.num_bases, config.feature_dim, bases.values, config.noise);
  const Block& centers = require(blocks, "centers");
  if (centers.shape != Shape{config.num_classes, config.feature_dim}) throw FormatError("center bank shape mismatch");
  state.centers.centers = centers.values;
  return state;
}

void save_checkpoint(const ModelState& state, const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw std::runtime_error("cannot open " + path.string() + " for writing");
  write_checkpoint(os, state);
  if (!os) throw std::runtime_error("failed writing " + path.string());
}

ModelState load_checkpoint(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open " + path.string());
  return read_checkpoint(is);
}

}  // namespace hsinoise
