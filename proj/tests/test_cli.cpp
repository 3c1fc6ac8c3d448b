#include <doctest.h>

#include <json.hpp>
#include <sstream>

#include "slp/channel.hpp"
#include "slp/experiment.hpp"

using namespace slp;

namespace {

ExperimentConfig parse(const std::string& text) {
  std::istringstream in(text);
  return parse_config(in, "/base");
}

ExperimentConfig small_config(const std::string& constellation, RescaleMode mode) {
  ExperimentConfig cfg;
  cfg.antennas = 4;
  cfg.users = 4;
  cfg.constellation = constellation;
  cfg.mode = mode;
  cfg.demods = {DemodKind::Gaus, DemodKind::Gmm};
  cfg.snr_db = {25.0};
  cfg.lp = 256;
  cfg.ld = 256;
  cfg.blocks = 2;
  cfg.seed = 11;
  cfg.em.components = 3;
  return cfg;
}

std::string csv_of(const ExperimentConfig& cfg, const RunOptions& opts = {}) {
  std::ostringstream out;
  write_csv(out, run_experiment(cfg, opts));
  return out.str();
}

}  // namespace

TEST_SUITE("cli") {
  TEST_CASE("config parsing") {
    const auto cfg = parse(
        "# comment\n"
        "N = 6\nK=3\nconstellation = qam16   # trailing comment\nprecoder = zf\nmode = wr\n"
        "demod = gaus, mgaus,gmm\nsnr_db = 20, 25.5\nlp = 512\nld = 1024\nl = 1536\nblocks = 7\n"
        "seed = 99\nem_components = 4\nem_tol = 1e-5\ncode_path = codes/x.alist\nthreads = 2\n");
    CHECK(cfg.antennas == 6);
    CHECK(cfg.users == 3);
    CHECK(cfg.constellation == "qam16");
    CHECK(cfg.precoder == PrecoderKind::Zf);
    CHECK(cfg.mode == RescaleMode::Wr);
    CHECK(cfg.demods == std::vector<DemodKind>{DemodKind::Gaus, DemodKind::MGaus, DemodKind::Gmm});
    CHECK(cfg.snr_db == std::vector<double>{20.0, 25.5});
    CHECK(cfg.block_length() == 1536);
    CHECK(cfg.blocks == 7);
    CHECK(cfg.seed == 99);
    CHECK(cfg.em.components == 4);
    CHECK(cfg.em.tol == 1e-5);
    CHECK(cfg.code_path == std::filesystem::path("/base/codes/x.alist"));
    CHECK(cfg.threads == 2);
    CHECK_NOTHROW(validate(cfg));
    CHECK_FALSE(parse("code_path = none\n").code_path);
  }

  TEST_CASE("config errors") {
    const char* bad[] = {
        "N = 8\nN = 8\n",           "foo = 1\n",          "N 8\n",
        "lp = x\n",                 "lp = 12abc\n",       "lp = 10\nld = 10\nl = 30\n",
        "demod = gaus, ca\n",       "precoder = mmse\n",  "snr_db = \n",
    };
    for (const char* text : bad) {
      CAPTURE(text);
      CHECK_THROWS_AS(parse(text), ConfigError);
    }
    const char* invalid[] = {
        "N = 4\nK = 8\n",
        "constellation = qam16\nmode = wor\n",
        "demod = mgaus\n",
        "demod = gmm, gmm\n",
        "lp = 8\n",
        "constellation = qam16\nmode = wr\nlp = 64\nem_components = 5\n",
        "constellation = psk12\n",
        "threads = 0\n",
    };
    for (const char* text : invalid) {
      CAPTURE(text);
      CHECK_THROWS_AS(validate(parse(text)), ConfigError);
    }
    CHECK_THROWS_AS(load_config("/nonexistent.cfg"), ConfigError);
  }

  TEST_CASE("params lines round trip and validation") {
    GmmParams g{{0.25, 0.75}, {Vec2(0.1, 0.2), Vec2(-0.3, 0.4)}, {Mat2::Identity() * 0.01, Mat2::Identity() * 0.02}};
    ParamsRecord rec{12, 3, {g, g, std::nullopt}};
    const std::string line = params_line(rec);
    const ParamsRecord back = parse_params_line(line);
    CHECK(back.block_id == 12);
    CHECK(back.user == 3);
    REQUIRE(back.params.inner);
    CHECK(back.params.inner->weights == g.weights);
    CHECK(back.params.corner->means[1] == g.means[1]);
    CHECK(back.params.corner->covs[0] == g.covs[0]);
    CHECK_FALSE(back.params.lateral);

    // Weights off by more than 1e-6 are rejected.
    auto j = nlohmann::json::parse(line);
    j["P_I"]["weights"] = {0.25, 0.75 + 2e-6};
    CHECK_THROWS_AS(parse_params_line(j.dump()), std::invalid_argument);
    j["P_I"]["weights"] = {0.25, 0.75 + 5e-7};
    CHECK_NOTHROW(parse_params_line(j.dump()));
    CHECK_THROWS(parse_params_line("{\"block_id\": 1}"));
    CHECK_THROWS(parse_params_line("not json"));

    std::istringstream in(line + "\n\n" + line + "\n{\"block_id\": 5, \"user\": 0, \"P_C\": 3}\n");
    const ParamsTable table = read_params(in);
    CHECK(table.entries.size() == 1);
    CHECK(table.rejected.size() == 2);

    try {
      require_classes(back.params, build_qam(16), 12, 3);
      FAIL("missing class accepted");
    } catch (const std::invalid_argument& e) {
      CHECK(std::string(e.what()).find("block 12") != std::string::npos);
      CHECK(std::string(e.what()).find("P_L") != std::string::npos);
    }
    CHECK_NOTHROW(require_classes(back.params, build_psk(8), 12, 3));
  }

  TEST_CASE("runs are deterministic and thread-count independent") {
    ExperimentConfig cfg = small_config("psk8", RescaleMode::Wor);
    const std::string a = csv_of(cfg);
    CHECK(a == csv_of(cfg));
    cfg.threads = 2;
    CHECK(a == csv_of(cfg));
    cfg.seed = 12;
    CHECK(a != csv_of(cfg));
  }

  TEST_CASE("zero blocks write only the header") {
    ExperimentConfig cfg = small_config("psk8", RescaleMode::Wor);
    cfg.blocks = 0;
    CHECK(csv_of(cfg) == std::string(kCsvHeader) + "\n");
  }

  TEST_CASE("GMM beats the Gaussian demodulator on CISB signals") {
    ExperimentConfig cfg = small_config("psk16", RescaleMode::Wor);
    cfg.antennas = cfg.users = 8;
    cfg.snr_db = {30.0};
    cfg.lp = 512;
    cfg.ld = 512;
    const ExperimentResult r = run_experiment(cfg);
    REQUIRE(r.records.size() == 2);
    CHECK(r.records[0].demod == "gaus");
    CHECK(r.records[1].demod == "gmm");
    CHECK(*r.records[1].mi > *r.records[0].mi + 0.1);
    CHECK(r.records[0].blocks_total == 16);
    CHECK_FALSE(r.records[0].se);
  }

  TEST_CASE("coded runs fill the coded columns") {
    ExperimentConfig cfg = small_config("qam16", RescaleMode::Wr);
    cfg.ld = 324;  // two codewords of 648 bits
    cfg.code_path = SLP_DATA_DIR "/peg_648_r12.alist";
    cfg.demods = {DemodKind::MGaus};
    const ExperimentResult r = run_experiment(cfg);
    REQUIRE(r.records.size() == 1);
    CHECK(r.records[0].ber_coded);
    CHECK(r.records[0].se);
    CHECK(*r.records[0].blocks_ok <= r.records[0].blocks_total);
    cfg.ld = 100;
    CHECK_THROWS_AS(run_experiment(cfg), ConfigError);
  }

  TEST_CASE("pilot export") {
    for (const auto& [name, mode] : {std::pair{"qam16", RescaleMode::Wr}, std::pair{"psk8", RescaleMode::Wor}}) {
      const ExperimentConfig cfg = small_config(name, mode);
      std::ostringstream out;
      write_pilot_sets(out, cfg);
      std::istringstream in(out.str());
      std::string line;
      int lines = 0;
      while (std::getline(in, line)) {
        const auto j = nlohmann::json::parse(line);
        CHECK(j["block_id"].get<int>() == lines / cfg.users);
        CHECK(j["user"].get<int>() == lines % cfg.users);
        CHECK(j.contains("gamma_bar") == (mode == RescaleMode::Wr));
        const auto& sets = j["sets"];
        if (mode == RescaleMode::Wr) {
          CHECK(sets["TI"].size() == 64);
          CHECK(sets["TC"].size() == 64);
          CHECK(sets["TL"].size() == 128);
        } else {
          CHECK(sets.size() == 1);
          CHECK(sets["TC"].size() == 256);
        }
        const PilotRecord rec = parse_pilot_line(line);
        CHECK(rec.sets.corner.rows() == static_cast<Eigen::Index>(sets["TC"].size()));
        ++lines;
      }
      CHECK(lines == cfg.blocks * cfg.users);
    }
  }

  TEST_CASE("exported pilots fitted externally reproduce the built-in GMM") {
    ExperimentConfig cfg = small_config("qam16", RescaleMode::Wr);
    cfg.demods = {DemodKind::Gmm};
    cfg.snr_db = {20.0, 30.0};
    const ExperimentResult builtin = run_experiment(cfg);

    // Stand-in for an external estimator: EM with the run's seeds.
    ParamsTable table;
    for (const PilotRecord& rec : export_pilot_sets(cfg)) {
      EmConfig em = cfg.em;
      em.seed = child_seed(cfg.seed, 4, rec.block_id, static_cast<std::uint64_t>(rec.user));
      std::ostringstream line;
      line << params_line({rec.block_id, rec.user, fit_class_params(rec.sets, cfg.spec(), em)});
      const ParamsRecord parsed = parse_params_line(line.str());
      table.entries[{parsed.block_id, parsed.user}] = parsed.params;
    }
    CHECK_NOTHROW(check_params_coverage(cfg, table));
    RunOptions opts;
    opts.external = &table;
    cfg.demods = {DemodKind::Pfen};
    const ExperimentResult ext = run_experiment(cfg, opts);
    REQUIRE(ext.records.size() == builtin.records.size());
    for (std::size_t i = 0; i < ext.records.size(); ++i) {
      CHECK(ext.records[i].demod == "pfen");
      CHECK(*ext.records[i].mi == doctest::Approx(*builtin.records[i].mi).epsilon(1e-9));
    }

    table.entries.erase({1, 2});
    try {
      check_params_coverage(cfg, table);
      FAIL("incomplete table accepted");
    } catch (const std::invalid_argument& e) {
      CHECK(std::string(e.what()).find("block 1 user 2") != std::string::npos);
    }
  }

  TEST_CASE("pfen without parameters is skipped") {
    ExperimentConfig cfg = small_config("psk8", RescaleMode::Wor);
    cfg.demods = {DemodKind::Gaus, DemodKind::Pfen};
    std::ostringstream log;
    RunOptions opts;
    opts.log = &log;
    const ExperimentResult r = run_experiment(cfg, opts);
    CHECK(r.records.size() == 1);
    CHECK(log.str().find("pfen") != std::string::npos);
  }
}
