// Command-line front end: Monte Carlo runs, pilot export and demodulation
// with externally estimated mixture parameters.
#include <CLI11.hpp>
#include <bit>
#include <cmath>
#include <fstream>
#include <iostream>
#include <random>

#include "slp/channel.hpp"
#include "slp/codec.hpp"
#include "slp/experiment.hpp"

namespace {

// Writes to `path`, or stdout when empty.
template <typename Fn>
void with_output(const std::string& path, Fn&& fn) {
  if (path.empty()) {
    fn(std::cout);
    std::cout.flush();
    return;
  }
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot open " + path + " for writing");
  fn(f);
  f.flush();
  if (!f) throw std::runtime_error("write to " + path + " failed");
}

int selftest() {
  using namespace slp;
  int failures = 0;
  auto check = [&](bool ok, const char* what) {
    std::cout << (ok ? "ok   " : "FAIL ") << what << "\n";
    failures += ok ? 0 : 1;
  };

  const ConstellationSpec psk = build_psk(8);
  const ConstellationSpec qam = build_qam(16);
  bool gray = true;
  for (int q = 0; q < psk.size(); ++q)
    gray = gray && std::popcount(psk.labels[q] ^ psk.labels[(q + 1) % psk.size()]) == 1;
  check(gray, "8PSK Gray labels");
  double energy = 0;
  for (auto p : qam.points) energy += std::norm(p);
  check(std::abs(energy / qam.size() - 1.0) < 1e-12, "16QAM unit average energy");

  Rng rng(7);
  const ChannelRealization ch = draw_rayleigh(4, 4, rng);
  const ChannelInverse inv(ch.H);
  const std::vector<int> sym{1, 3, 5, 7};
  const PrecodeResult r = cisb_precode(inv, sym, psk);
  check(std::abs(r.x.squaredNorm() - 1.0) < 1e-9 && r.kkt_residual < 1e-6, "CISB power and optimality");
  bool inside = true;
  const CVector noiseless = ch.H * r.x / r.gamma;
  for (int k = 0; k < 4; ++k) inside = inside && cir_contains(cir_of(psk, sym[k]), to_vec2(noiseless[k]), 1e-7);
  check(inside, "CISB received points inside their regions");

  Points samples(2000, 2);
  std::normal_distribution<double> nd;
  for (Eigen::Index i = 0; i < samples.rows(); ++i)
    samples.row(i) << (i % 2 ? 2.0 : -2.0) + 0.3 * nd(rng), 0.3 * nd(rng);
  EmConfig em;
  em.components = 2;
  const EmFit fit = em_fit(samples, em);
  bool monotone = true;
  for (std::size_t i = 1; i < fit.log_likelihood.size(); ++i)
    monotone = monotone && fit.log_likelihood[i] >= fit.log_likelihood[i - 1] - 1e-12;
  const double spread = std::abs(fit.params.means[0].x() - fit.params.means[1].x());
  check(monotone && std::abs(spread - 4.0) < 0.1, "EM two-cluster recovery");

  const ParityCheckCode code = peg_code(96, 48, 3, 1);
  Bits info(code.k());
  for (auto& b : info) b = rng() & 1U;
  const Bits cw = code.encode(info);
  std::vector<double> llr(cw.size());
  for (std::size_t i = 0; i < cw.size(); ++i) llr[i] = cw[i] ? -50.0 : 50.0;
  const DecodeResult dec = bp_decode(code, llr);
  check(code.is_codeword(cw) && dec.converged && dec.iterations == 1 && dec.bits == cw, "LDPC encode/decode");

  LlrFrame frame;
  frame.llr = RMatrix::Zero(4, 2);
  frame.bits = BitMatrix::Zero(4, 2);
  check(std::abs(mutual_information(frame)) < 1e-12, "MI of uninformative LLRs");

  std::cout << (failures ? "selftest: FAILED\n" : "selftest: ok\n");
  return failures ? 1 : 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Coded multiuser MISO symbol-level precoding simulator"};
  app.require_subcommand(1);

  std::string config_path, params_path, output;
  std::optional<int> threads;

  auto* run = app.add_subcommand("run", "Run a Monte Carlo experiment and write CSV metrics");
  run->add_option("config", config_path, "experiment config file")->required()->check(CLI::ExistingFile);
  run->add_option("-o,--output", output, "CSV path (stdout when omitted)");
  run->add_option("-j,--threads", threads, "worker threads (overrides the config)");

  auto* exp = app.add_subcommand("export-pilots", "Write transformed pilot sets as JSON lines");
  exp->add_option("config", config_path, "experiment config file")->required()->check(CLI::ExistingFile);
  exp->add_option("-o,--output", output, "JSON-lines path (stdout when omitted)");
  exp->add_option("-j,--threads", threads, "worker threads (overrides the config)");

  auto* dwp = app.add_subcommand("demod-with-params", "Demodulate with mixture parameters read from JSON lines");
  dwp->add_option("config", config_path, "experiment config file")->required()->check(CLI::ExistingFile);
  dwp->add_option("params", params_path, "parameter JSON-lines file")->required()->check(CLI::ExistingFile);
  dwp->add_option("-o,--output", output, "CSV path (stdout when omitted)");
  dwp->add_option("-j,--threads", threads, "worker threads (overrides the config)");

  app.add_subcommand("selftest", "Run quick internal consistency checks");

  CLI11_PARSE(app, argc, argv);

  try {
    if (app.got_subcommand("selftest")) return selftest();

    slp::ExperimentConfig cfg = slp::load_config(config_path);
    if (threads) cfg.threads = *threads;
    slp::validate(cfg);

    if (app.got_subcommand("export-pilots")) {
      with_output(output, [&](std::ostream& out) { slp::write_pilot_sets(out, cfg); });
      return 0;
    }

    slp::RunOptions opts;
    opts.log = &std::cerr;
    slp::ParamsTable table;
    if (app.got_subcommand("demod-with-params")) {
      table = slp::load_params(params_path);
      for (const auto& msg : table.rejected) std::cerr << params_path << ": rejected " << msg << "\n";
      slp::check_params_coverage(cfg, table);
      cfg.demods = {slp::DemodKind::Pfen};
      opts.external = &table;
    }
    const slp::ExperimentResult result = slp::run_experiment(cfg, opts);
    with_output(output, [&](std::ostream& out) { slp::write_csv(out, result); });
    return 0;
  } catch (const slp::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
