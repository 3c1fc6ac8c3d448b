#include "slp/interchange.hpp"

#include <fstream>
#include <json.hpp>

namespace slp {

using nlohmann::json;

namespace {

json points_json(const Points& p) {
  json arr = json::array();
  for (Eigen::Index i = 0; i < p.rows(); ++i) arr.push_back({p(i, 0), p(i, 1)});
  return arr;
}

Points points_from(const json& arr, const char* name) {
  if (!arr.is_array()) throw std::invalid_argument(std::string(name) + ": expected an array");
  Points p(static_cast<Eigen::Index>(arr.size()), 2);
  for (std::size_t i = 0; i < arr.size(); ++i) {
    const json& e = arr[i];
    if (!e.is_array() || e.size() != 2) throw std::invalid_argument(std::string(name) + ": expected [re, im] pairs");
    p(static_cast<Eigen::Index>(i), 0) = e[0].get<double>();
    p(static_cast<Eigen::Index>(i), 1) = e[1].get<double>();
  }
  return p;
}

json gmm_json(const GmmParams& g) {
  json means = json::array();
  json covs = json::array();
  for (int i = 0; i < g.components(); ++i) {
    means.push_back({g.means[i].x(), g.means[i].y()});
    const Mat2& s = g.covs[i];
    covs.push_back({{s(0, 0), s(0, 1)}, {s(1, 0), s(1, 1)}});
  }
  return {{"weights", g.weights}, {"means", means}, {"covs", covs}};
}

GmmParams gmm_from(const json& j, const std::string& name) {
  auto field = [&](const char* f) -> const json& {
    if (!j.contains(f) || !j[f].is_array()) throw std::invalid_argument(name + ": missing array '" + f + "'");
    return j[f];
  };
  GmmParams g;
  g.weights = field("weights").get<std::vector<double>>();
  for (const json& m : field("means")) {
    if (!m.is_array() || m.size() != 2) throw std::invalid_argument(name + ": means must be [x, y] pairs");
    g.means.emplace_back(m[0].get<double>(), m[1].get<double>());
  }
  for (const json& c : field("covs")) {
    if (!c.is_array() || c.size() != 2 || c[0].size() != 2 || c[1].size() != 2)
      throw std::invalid_argument(name + ": covs must be 2x2 nested arrays");
    Mat2 s;
    s << c[0][0].get<double>(), c[0][1].get<double>(), c[1][0].get<double>(), c[1][1].get<double>();
    g.covs.push_back(s);
  }
  try {
    validate_gmm(g);
  } catch (const std::exception& e) {
    throw std::invalid_argument(name + ": " + e.what());
  }
  return g;
}

std::string where(const json& j) {
  std::string out;
  if (j.contains("block_id")) out += "block " + j["block_id"].dump();
  if (j.contains("user")) out += (out.empty() ? "user " : " user ") + j["user"].dump();
  return out.empty() ? "line" : out;
}

}  // namespace

std::string pilot_line(const PilotRecord& rec, Modulation kind) {
  json j;
  j["block_id"] = rec.block_id;
  j["user"] = rec.user;
  j["snr_db"] = rec.snr_db;
  if (rec.sets.gamma_bar) j["gamma_bar"] = *rec.sets.gamma_bar;
  json sets;
  sets["TC"] = points_json(rec.sets.corner);
  if (kind == Modulation::Qam) {
    sets["TI"] = points_json(rec.sets.inner);
    sets["TL"] = points_json(rec.sets.lateral);
  }
  j["sets"] = std::move(sets);
  return j.dump();
}

PilotRecord parse_pilot_line(const std::string& line) {
  const json j = json::parse(line);
  PilotRecord rec;
  rec.block_id = j.at("block_id").get<std::uint64_t>();
  rec.user = j.at("user").get<int>();
  rec.snr_db = j.at("snr_db").get<double>();
  if (j.contains("gamma_bar")) rec.sets.gamma_bar = j["gamma_bar"].get<double>();
  const json& sets = j.at("sets");
  rec.sets.corner = points_from(sets.at("TC"), "TC");
  if (sets.contains("TI")) rec.sets.inner = points_from(sets["TI"], "TI");
  if (sets.contains("TL")) rec.sets.lateral = points_from(sets["TL"], "TL");
  return rec;
}

std::string params_line(const ParamsRecord& rec) {
  json j;
  j["block_id"] = rec.block_id;
  j["user"] = rec.user;
  if (rec.params.inner) j["P_I"] = gmm_json(*rec.params.inner);
  if (rec.params.corner) j["P_C"] = gmm_json(*rec.params.corner);
  if (rec.params.lateral) j["P_L"] = gmm_json(*rec.params.lateral);
  return j.dump();
}

ParamsRecord parse_params_line(const std::string& line) {
  json j;
  try {
    j = json::parse(line);
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw std::invalid_argument("expected a JSON object");
  const std::string at = where(j);
  try {
    ParamsRecord rec;
    if (!j.contains("block_id") || !j.contains("user"))
      throw std::invalid_argument("missing block_id or user");
    rec.block_id = j["block_id"].get<std::uint64_t>();
    rec.user = j["user"].get<int>();
    if (j.contains("P_I")) rec.params.inner = gmm_from(j["P_I"], "P_I");
    if (j.contains("P_C")) rec.params.corner = gmm_from(j["P_C"], "P_C");
    if (j.contains("P_L")) rec.params.lateral = gmm_from(j["P_L"], "P_L");
    return rec;
  } catch (const json::exception& e) {
    throw std::invalid_argument(at + ": " + e.what());
  } catch (const std::invalid_argument& e) {
    throw std::invalid_argument(at + ": " + e.what());
  }
}

ParamsTable read_params(std::istream& in) {
  ParamsTable table;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      ParamsRecord rec = parse_params_line(line);
      const ParamsKey key{rec.block_id, rec.user};
      if (!table.entries.emplace(key, std::move(rec.params)).second)
        throw std::invalid_argument("duplicate entry for block " + std::to_string(key.first) + " user " +
                                    std::to_string(key.second));
    } catch (const std::invalid_argument& e) {
      table.rejected.push_back("line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return table;
}

ParamsTable load_params(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open params file " + path.string());
  return read_params(in);
}

void require_classes(const ClassParams& p, const ConstellationSpec& spec, std::uint64_t block_id, int user) {
  auto missing = [&](const char* name) {
    throw std::invalid_argument("block " + std::to_string(block_id) + " user " + std::to_string(user) +
                                ": missing " + name);
  };
  if (!p.corner) missing("P_C");
  if (spec.kind == Modulation::Qam) {
    if (!p.inner) missing("P_I");
    if (!p.lateral) missing("P_L");
  }
}

}  // namespace slp
