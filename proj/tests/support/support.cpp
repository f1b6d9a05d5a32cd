#include "support.hpp"

#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

#include <unistd.h>

#include "pcm/rng.hpp"

namespace pcm::testing {

Network random_network(std::size_t d, const std::vector<std::size_t>& widths, Mode mode,
                       std::uint64_t seed) {
  const Architecture arch{d, widths, 0.3};
  Rng rng(seed);
  BinaryMask mask = BinaryMask::all_ones(d);
  if (mode == Mode::kMask) {
    std::bernoulli_distribution keep(0.6);
    for (auto& b : mask.bits) b = keep(rng) ? 1 : 0;
    mask.bits[rng() % d] = 1;
  }
  Network net = mode == Mode::kPreMask ? make_premask_network(arch, seed) : make_mask_network(arch, mask, seed);
  std::uniform_real_distribution<double> u(-0.5, 0.5);
  if (net.input_kernel) {
    for (Index i = 0; i < net.input_kernel->bias.size(); ++i) net.input_kernel->bias[i] = u(rng);
  }
  for (auto& layer : net.hidden) {
    for (Index i = 0; i < layer.bias.size(); ++i) layer.bias[i] = u(rng);
  }
  net.output.bias[0] = u(rng);
  return net;
}

Matrix random_matrix(std::size_t rows, std::size_t cols, std::uint64_t seed, double scale) {
  Rng rng(seed);
  std::normal_distribution<double> n(0.0, scale);
  Matrix m(static_cast<Index>(rows), static_cast<Index>(cols));
  for (Index i = 0; i < m.size(); ++i) m.data()[i] = n(rng);
  return m;
}

Vector random_vector(std::size_t n, std::uint64_t seed, double scale) {
  Rng rng(seed);
  std::normal_distribution<double> dist(0.0, scale);
  Vector v(static_cast<Index>(n));
  for (Index i = 0; i < v.size(); ++i) v[i] = dist(rng);
  return v;
}

GradientCheck check_gradients(const Network& net, const Matrix& x, const Vector& y, double lambda,
                              double step, double tolerance) {
  GradientCheck out;
  const auto analytic = backward(net, x, y, lambda).gradients;
  const auto grad_blocks = analytic.blocks();
  Network probe = net;
  auto params = probe.parameter_blocks();
  const bool has_kernel = probe.input_kernel.has_value();
  for (std::size_t b = 0; b < params.size(); ++b) {
    // Block 0 is the input-kernel weight matrix in pre-mask mode.
    const bool l1_block = has_kernel && b == 0 && lambda > 0.0;
    for (std::size_t i = 0; i < params[b].size(); ++i) {
      double& w = params[b][i];
      const double saved = w;
      if (l1_block && std::abs(saved) < 2.0 * step) {
        ++out.skipped;
        continue;
      }
      w = saved + step;
      const double up = loss(probe, x, y, lambda).total;
      w = saved - step;
      const double down = loss(probe, x, y, lambda).total;
      w = saved;
      const double numeric = (up - down) / (2.0 * step);
      const double a = grad_blocks[b][i];
      const double scale = std::max(std::abs(a), std::abs(numeric));
      const double rel = scale < 1e-9 ? 0.0 : std::abs(a - numeric) / scale;
      out.max_relative_error = std::max(out.max_relative_error, rel);
      if (rel > tolerance) ++out.failures;
      ++out.checked;
    }
  }
  return out;
}

std::filesystem::path fresh_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() /
                   ("pcm-test-" + name + "-" + std::to_string(::getpid()));
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

Dataset linear_dataset(std::size_t n, const std::vector<double>& w, double noise, std::uint64_t seed) {
  Dataset data;
  data.schema = DatasetSchema::generic(w.size());
  data.inputs = random_matrix(n, w.size(), derive_seed(seed, 1));
  const Vector weights = Eigen::Map<const Vector>(w.data(), static_cast<Index>(w.size()));
  data.targets = data.inputs * weights;
  if (noise > 0.0) data.targets += random_vector(n, derive_seed(seed, 2), noise);
  data.split = Split::kTrain;
  return data;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

}  // namespace pcm::testing
