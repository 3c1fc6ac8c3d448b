#pragma once

#include <cstdint>
#include <filesystem>
#include <random>

#include "slp/types.hpp"

namespace slp {

using Rng = std::mt19937_64;

std::uint64_t splitmix64(std::uint64_t x);

// Child seed for stream (a, b, c) under a master seed. Streams depend only on
// their coordinates, so serial and parallel runs draw identical numbers.
std::uint64_t child_seed(std::uint64_t master, std::uint64_t a, std::uint64_t b = 0,
                         std::uint64_t c = 0);

// CN(0, variance) sample.
cdouble complex_normal(Rng& rng, double variance = 1.0);

struct ChannelRealization {
  CMatrix H;  // K x N, row k is h_k^T
  int antennas() const { return static_cast<int>(H.cols()); }
  int users() const { return static_cast<int>(H.rows()); }
};

ChannelRealization draw_rayleigh(int antennas, int users, Rng& rng);

// y = H x + n, n ~ CN(0, noise_var I). Uses h_k^T, not h_k^H.
CVector receive(const CMatrix& H, const CVector& x, double noise_var, Rng& rng);

// Raw row-major complex64 (two little-endian float32 per entry), no header.
void save_channel(const std::filesystem::path& path, const CMatrix& H);
CMatrix load_channel(const std::filesystem::path& path, int users, int antennas);

}  // namespace slp
