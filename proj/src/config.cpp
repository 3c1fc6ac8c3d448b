#include "slp/config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>

namespace slp {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_list(const std::string& v) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream ss(v);
  while (std::getline(ss, item, ',')) {
    std::istringstream words(item);
    std::string w;
    while (words >> w) out.push_back(w);
  }
  return out;
}

template <typename T>
T parse_number(const std::string& key, const std::string& v) {
  T out{};
  const auto* end = v.data() + v.size();
  const auto [ptr, ec] = std::from_chars(v.data(), end, out);
  if (ec != std::errc{} || ptr != end) throw ConfigError(key + ": cannot parse '" + v + "'");
  return out;
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& v) {
  std::filesystem::path p(v);
  return p.is_absolute() || base.empty() ? p : base / p;
}

}  // namespace

std::string to_string(PrecoderKind kind) { return kind == PrecoderKind::Zf ? "zf" : "cisb"; }
std::string to_string(RescaleMode mode) { return mode == RescaleMode::Wr ? "wr" : "wor"; }

ExperimentConfig parse_config(std::istream& in, const std::filesystem::path& base_dir) {
  ExperimentConfig cfg;
  std::optional<int> total_length;
  using Setter = std::function<void(const std::string&, const std::string&)>;
  const std::map<std::string, Setter> setters{
      {"N", [&](auto& k, auto& v) { cfg.antennas = parse_number<int>(k, v); }},
      {"K", [&](auto& k, auto& v) { cfg.users = parse_number<int>(k, v); }},
      {"constellation", [&](auto&, auto& v) { cfg.constellation = v; }},
      {"precoder", [&](auto&, auto& v) { cfg.precoder = precoder_from_string(v); }},
      {"mode", [&](auto&, auto& v) { cfg.mode = mode_from_string(v); }},
      {"demod",
       [&](auto& k, auto& v) {
         cfg.demods.clear();
         for (const auto& d : split_list(v)) cfg.demods.push_back(demod_from_string(d));
         if (cfg.demods.empty()) throw ConfigError(k + ": empty list");
       }},
      {"snr_db",
       [&](auto& k, auto& v) {
         cfg.snr_db.clear();
         for (const auto& s : split_list(v)) cfg.snr_db.push_back(parse_number<double>(k, s));
       }},
      {"lp", [&](auto& k, auto& v) { cfg.lp = parse_number<int>(k, v); }},
      {"ld", [&](auto& k, auto& v) { cfg.ld = parse_number<int>(k, v); }},
      {"l", [&](auto& k, auto& v) { total_length = parse_number<int>(k, v); }},
      {"blocks", [&](auto& k, auto& v) { cfg.blocks = parse_number<int>(k, v); }},
      {"seed", [&](auto& k, auto& v) { cfg.seed = parse_number<std::uint64_t>(k, v); }},
      {"em_components", [&](auto& k, auto& v) { cfg.em.components = parse_number<int>(k, v); }},
      {"em_max_iter", [&](auto& k, auto& v) { cfg.em.max_iter = parse_number<int>(k, v); }},
      {"em_tol", [&](auto& k, auto& v) { cfg.em.tol = parse_number<double>(k, v); }},
      {"em_floor_scale", [&](auto& k, auto& v) { cfg.em.floor_scale = parse_number<double>(k, v); }},
      {"code_path",
       [&](auto&, auto& v) {
         if (v == "none")
           cfg.code_path.reset();
         else
           cfg.code_path = resolve(base_dir, v);
       }},
      {"max_bp_iter", [&](auto& k, auto& v) { cfg.max_bp_iter = parse_number<int>(k, v); }},
      {"pfen_dir", [&](auto&, auto& v) { cfg.pfen_dir = resolve(base_dir, v); }},
      {"threads", [&](auto& k, auto& v) { cfg.threads = parse_number<int>(k, v); }},
  };

  std::set<std::string> seen;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string body = trim(line.substr(0, line.find('#')));
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos)
      throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
    const std::string key = trim(body.substr(0, eq));
    const std::string value = trim(body.substr(eq + 1));
    const auto it = setters.find(key);
    if (it == setters.end()) throw ConfigError("line " + std::to_string(lineno) + ": unknown key '" + key + "'");
    if (!seen.insert(key).second) throw ConfigError("line " + std::to_string(lineno) + ": duplicate key '" + key + "'");
    try {
      it->second(key, value);
    } catch (const ConfigError&) {
      throw;
    } catch (const std::exception& e) {
      throw ConfigError(key + ": " + e.what());
    }
  }
  if (total_length && *total_length != cfg.block_length())
    throw ConfigError("l: " + std::to_string(*total_length) + " differs from lp + ld = " +
                      std::to_string(cfg.block_length()));
  validate(cfg);
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  return parse_config(in, path.parent_path());
}

void validate(const ExperimentConfig& cfg) {
  auto require = [](bool ok, const std::string& msg) {
    if (!ok) throw ConfigError(msg);
  };
  require(cfg.antennas >= 1, "N: must be positive");
  require(cfg.users >= 1, "K: must be positive");
  require(cfg.users <= cfg.antennas, "K: more users than antennas (N)");
  ConstellationSpec spec;
  try {
    spec = cfg.spec();
  } catch (const std::exception& e) {
    throw ConfigError(std::string("constellation: ") + e.what());
  }
  require(cfg.mode == RescaleMode::Wr || spec.kind == Modulation::Psk,
          "mode: wor is only defined for PSK constellations");
  require(cfg.lp >= 0 && cfg.ld >= 1, "lp/ld: need lp >= 0 and ld >= 1");
  require(cfg.blocks >= 0, "blocks: must be non-negative");
  require(!cfg.snr_db.empty(), "snr_db: empty list");
  require(cfg.threads >= 1, "threads: must be at least 1");
  require(cfg.max_bp_iter >= 1, "max_bp_iter: must be at least 1");
  require(cfg.em.components >= 1 && cfg.em.max_iter >= 1 && cfg.em.tol > 0 && cfg.em.floor_scale >= 0,
          "em_*: invalid EM settings");
  std::set<DemodKind> unique(cfg.demods.begin(), cfg.demods.end());
  require(unique.size() == cfg.demods.size(), "demod: duplicate entry");
  for (DemodKind d : cfg.demods) {
    if (d == DemodKind::MGaus) require(spec.kind == Modulation::Qam, "demod: mgaus needs a QAM constellation");
    require(cfg.lp >= (d == DemodKind::Gaus ? 1 : spec.size()),
            "lp: demod " + std::string(to_string(d)) + " needs at least one pilot per symbol");
  }
  std::size_t smallest_class = spec.corner_set.size();
  if (spec.kind == Modulation::Qam) smallest_class = std::min(spec.inner_set.size(), spec.lateral_set.size());
  const long smallest_pool = static_cast<long>(cfg.lp / spec.size()) * static_cast<long>(smallest_class);
  for (DemodKind d : cfg.demods)
    if (d == DemodKind::Gmm)
      require(smallest_pool >= 4L * cfg.em.components,
              "lp: too few pilots per point class for " + std::to_string(cfg.em.components) + " EM components");
}

}  // namespace slp
