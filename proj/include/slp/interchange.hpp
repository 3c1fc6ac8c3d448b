#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "slp/demod.hpp"

namespace slp {

// JSON-lines records exchanged with an external parameter estimator.
//
// Pilot line:  {"block_id", "user", "snr_db", "gamma_bar"?, "sets": {"TC", "TI"?, "TL"?}}
//              each set a list of [re, im] pairs; PSK lines carry TC only and
//              gamma_bar is present only with receiver rescaling.
// Params line: {"block_id", "user", "P_I"?, "P_C"?, "P_L"?}
//              each {"weights": [..], "means": [[x, y]..], "covs": [[[a, b], [c, d]]..]}.

struct PilotRecord {
  std::uint64_t block_id = 0;
  int user = 0;
  double snr_db = 0.0;
  PilotSets sets;
};

struct ParamsRecord {
  std::uint64_t block_id = 0;
  int user = 0;
  ClassParams params;
};

std::string pilot_line(const PilotRecord& rec, Modulation kind);
PilotRecord parse_pilot_line(const std::string& line);

std::string params_line(const ParamsRecord& rec);
// Throws std::invalid_argument when a field is missing or malformed or any
// mixture violates the parameter invariants.
ParamsRecord parse_params_line(const std::string& line);

using ParamsKey = std::pair<std::uint64_t, int>;  // (block_id, user)

struct ParamsTable {
  std::map<ParamsKey, ClassParams> entries;
  std::vector<std::string> rejected;  // one diagnostic per rejected line
};

ParamsTable read_params(std::istream& in);
ParamsTable load_params(const std::filesystem::path& path);

// Throws std::invalid_argument naming the block when a class required by
// `spec` is missing.
void require_classes(const ClassParams& p, const ConstellationSpec& spec, std::uint64_t block_id, int user);

}  // namespace slp
