#include "pcm/checkpoint.hpp"

#include <string>

#include "pcm/binary_io.hpp"
#include "pcm/error.hpp"

namespace pcm {
namespace {

constexpr std::string_view kMagic{"PCMCKPT\0", 8};
constexpr std::uint64_t kMaxDim = 1u << 20;

void write_layer(binary::Writer& w, const DenseLayer& layer) {
  w.f64s(layer.weights.data(), static_cast<std::size_t>(layer.weights.size()));
  w.f64s(layer.bias.data(), static_cast<std::size_t>(layer.bias.size()));
}

DenseLayer read_layer(binary::Reader& r, std::size_t in, std::size_t out, Activation act) {
  DenseLayer layer;
  layer.weights.resize(static_cast<Index>(out), static_cast<Index>(in));
  layer.bias.resize(static_cast<Index>(out));
  layer.activation = act;
  r.f64s(layer.weights.data(), in * out);
  r.f64s(layer.bias.data(), out);
  return layer;
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const Network& net, std::uint64_t seed) {
  net.validate();
  binary::Writer w(path);
  w.magic(kMagic);
  w.u32(kCheckpointVersion);
  w.u8(static_cast<std::uint8_t>(net.mode));
  w.u8(0);
  w.u8(0);
  w.u8(0);
  const std::size_t d = net.input_dim();
  w.u64(d);
  w.u64(seed);
  w.u64(net.hidden.size());
  for (const auto& layer : net.hidden) w.u64(static_cast<std::uint64_t>(layer.outputs()));
  for (const auto& layer : net.hidden) w.f64(layer.activation.slope);
  if (net.mode == Mode::kMask) {
    w.f64(net.mask->threshold);
    w.bytes(net.mask->bits.data(), net.mask->bits.size());
  }
  if (net.input_kernel) write_layer(w, *net.input_kernel);
  for (const auto& layer : net.hidden) write_layer(w, layer);
  write_layer(w, net.output);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  binary::Reader r(path);
  r.expect_magic(kMagic);
  const auto version = r.u32();
  if (version != kCheckpointVersion) {
    throw ParseError(path.string() + ": unsupported checkpoint version " + std::to_string(version));
  }
  const auto mode_byte = r.u8();
  if (mode_byte > 1) throw ParseError(path.string() + ": bad mode byte");
  r.u8();
  r.u8();
  r.u8();

  Checkpoint ckpt;
  Network& net = ckpt.network;
  net.mode = static_cast<Mode>(mode_byte);
  const auto d = static_cast<std::size_t>(r.bounded_u64(kMaxDim, "input dimension"));
  ckpt.seed = r.u64();
  const auto n_hidden = static_cast<std::size_t>(r.bounded_u64(4096, "hidden layer count"));
  std::vector<std::size_t> widths(n_hidden);
  for (auto& wdt : widths) wdt = static_cast<std::size_t>(r.bounded_u64(kMaxDim, "layer width"));
  std::vector<double> slopes(n_hidden);
  for (auto& s : slopes) s = r.f64();

  if (net.mode == Mode::kMask) {
    BinaryMask mask;
    mask.threshold = r.f64();
    mask.bits.resize(d);
    r.bytes(mask.bits.data(), d);
    for (auto b : mask.bits) {
      if (b > 1) throw ParseError(path.string() + ": mask bit is not 0/1");
    }
    net.mask = std::move(mask);
  } else {
    net.input_kernel = read_layer(r, d, d, Activation::linear());
  }
  std::size_t prev = d;
  for (std::size_t k = 0; k < n_hidden; ++k) {
    net.hidden.push_back(read_layer(r, prev, widths[k], Activation::leaky(slopes[k])));
    prev = widths[k];
  }
  net.output = read_layer(r, prev, 1, Activation::linear());
  if (!r.at_end()) throw ParseError(path.string() + ": trailing bytes after parameters");
  net.validate();
  return ckpt;
}

}  // namespace pcm
