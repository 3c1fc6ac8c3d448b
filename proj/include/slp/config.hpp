#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "slp/constellation.hpp"
#include "slp/demod.hpp"
#include "slp/gmm.hpp"
#include "slp/precoder.hpp"

namespace slp {

/// One Monte Carlo experiment. Loaded from a flat `key = value` file where
/// `#` starts a comment; see README for the key list.
struct ExperimentConfig {
  int antennas = 8;  // N
  int users = 8;     // K
  std::string constellation = "psk16";
  PrecoderKind precoder = PrecoderKind::Cisb;
  RescaleMode mode = RescaleMode::Wor;
  std::vector<DemodKind> demods{DemodKind::Gmm};
  std::vector<double> snr_db{30.0};
  int lp = 1024;
  int ld = 2048;
  int blocks = 50;
  std::uint64_t seed = 1;
  EmConfig em;  // em.seed is ignored; per-fit seeds derive from `seed`
  std::optional<std::filesystem::path> code_path;
  int max_bp_iter = 50;
  std::optional<std::filesystem::path> pfen_dir;
  int threads = 1;

  int block_length() const { return lp + ld; }
  ConstellationSpec spec() const { return constellation_from_id(constellation); }
};

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Relative paths in the file are resolved against `base_dir`.
ExperimentConfig parse_config(std::istream& in, const std::filesystem::path& base_dir = {});
ExperimentConfig load_config(const std::filesystem::path& path);

// Throws ConfigError naming the offending key.
void validate(const ExperimentConfig& cfg);

std::string to_string(PrecoderKind kind);
std::string to_string(RescaleMode mode);

}  // namespace slp
