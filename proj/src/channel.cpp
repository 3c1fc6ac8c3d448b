#include "slp/channel.hpp"

#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace slp {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

std::uint64_t child_seed(std::uint64_t master, std::uint64_t a, std::uint64_t b,
                         std::uint64_t c) {
  std::uint64_t h = splitmix64(master);
  h = splitmix64(h ^ a);
  h = splitmix64(h ^ (b + 0x632BE59BD9B4E019ULL));
  h = splitmix64(h ^ (c + 0x85157AF5ULL));
  return h;
}

cdouble complex_normal(Rng& rng, double variance) {
  std::normal_distribution<double> n(0.0, std::sqrt(variance / 2.0));
  const double re = n(rng);
  const double im = n(rng);
  return {re, im};
}

ChannelRealization draw_rayleigh(int antennas, int users, Rng& rng) {
  if (antennas < 1 || users < 1) throw std::invalid_argument("draw_rayleigh: empty channel");
  ChannelRealization ch;
  ch.H.resize(users, antennas);
  for (int k = 0; k < users; ++k)
    for (int n = 0; n < antennas; ++n) ch.H(k, n) = complex_normal(rng);
  return ch;
}

CVector receive(const CMatrix& H, const CVector& x, double noise_var, Rng& rng) {
  if (H.cols() != x.size()) throw std::invalid_argument("receive: dimension mismatch");
  if (noise_var < 0) throw std::invalid_argument("receive: negative noise variance");
  CVector y = H * x;
  if (noise_var > 0)
    for (Eigen::Index k = 0; k < y.size(); ++k) y[k] += complex_normal(rng, noise_var);
  return y;
}

namespace {

void put_f32(std::ofstream& out, float v) {
  std::array<unsigned char, 4> bytes;
  std::uint32_t u = std::bit_cast<std::uint32_t>(v);
  for (int i = 0; i < 4; ++i) bytes[i] = static_cast<unsigned char>(u >> (8 * i));
  out.write(reinterpret_cast<const char*>(bytes.data()), 4);
}

float get_f32(const unsigned char* p) {
  std::uint32_t u = 0;
  for (int i = 0; i < 4; ++i) u |= static_cast<std::uint32_t>(p[i]) << (8 * i);
  return std::bit_cast<float>(u);
}

}  // namespace

void save_channel(const std::filesystem::path& path, const CMatrix& H) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("save_channel: cannot open " + path.string());
  for (Eigen::Index r = 0; r < H.rows(); ++r)
    for (Eigen::Index c = 0; c < H.cols(); ++c) {
      put_f32(out, static_cast<float>(H(r, c).real()));
      put_f32(out, static_cast<float>(H(r, c).imag()));
    }
  if (!out) throw std::runtime_error("save_channel: write failed for " + path.string());
}

CMatrix load_channel(const std::filesystem::path& path, int users, int antennas) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("load_channel: cannot open " + path.string());
  std::vector<unsigned char> buf((std::istreambuf_iterator<char>(in)), {});
  const std::size_t expected = static_cast<std::size_t>(users) * antennas * 8;
  if (buf.size() != expected)
    throw std::runtime_error("load_channel: expected " + std::to_string(expected) +
                             " bytes, found " + std::to_string(buf.size()));
  CMatrix H(users, antennas);
  const unsigned char* p = buf.data();
  for (int r = 0; r < users; ++r)
    for (int c = 0; c < antennas; ++c, p += 8) H(r, c) = {get_f32(p), get_f32(p + 4)};
  return H;
}

}  // namespace slp
