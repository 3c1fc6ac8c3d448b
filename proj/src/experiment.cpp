#include "slp/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <functional>
#include <ostream>
#include <thread>

#include "slp/channel.hpp"
#include "slp/codec.hpp"
#include "slp/precoder.hpp"

namespace slp {

namespace {

// Seed stream tags.
enum : std::uint64_t { kChannelStream = 1, kSymbolStream = 2, kNoiseStream = 3, kEmStream = 4 };

struct UserPayload {
  std::vector<int> symbols;  // L entries, pilots first
  Bits data_bits;            // ld * bits_per_symbol, codewords first
  std::vector<Bits> info;    // information bits of each codeword
};

struct BlockSignals {
  CMatrix noiseless;  // K x L
  std::optional<double> gamma_bar;
  double power_sum = 0.0;
  double power_target = 0.0;
  std::vector<UserPayload> users;
};

int codewords_per_user(const ExperimentConfig& cfg, const ConstellationSpec& spec, const ParityCheckCode* code) {
  return code ? cfg.ld * spec.bits_per_symbol / code->n() : 0;
}

// lp / order pilots per symbol in an independent random order for each user.
// A shared order (plain round robin) would send the same symbol to every
// user in each pilot slot, and the interference seen on pilots would no
// longer match the data.
std::vector<int> pilot_schedule(int lp, int order, Rng& rng) {
  std::vector<int> s(lp);
  for (int l = 0; l < lp; ++l) s[l] = l % order;
  std::vector<int> extra(order);
  for (int q = 0; q < order; ++q) extra[q] = q;
  std::shuffle(extra.begin(), extra.end(), rng);
  const int full = lp - lp % order;
  for (int l = full; l < lp; ++l) s[l] = extra[l - full];
  std::shuffle(s.begin(), s.end(), rng);
  return s;
}

UserPayload draw_payload(const ExperimentConfig& cfg, const ConstellationSpec& spec, const ParityCheckCode* code,
                         Rng& rng) {
  UserPayload u;
  u.symbols = pilot_schedule(cfg.lp, spec.size(), rng);
  const int bps = spec.bits_per_symbol;
  u.data_bits.reserve(static_cast<std::size_t>(cfg.ld) * bps);
  const int cws = codewords_per_user(cfg, spec, code);
  for (int c = 0; c < cws; ++c) {
    Bits info(code->k());
    for (auto& b : info) b = rng() & 1U;
    const Bits cw = code->encode(info);
    u.data_bits.insert(u.data_bits.end(), cw.begin(), cw.end());
    u.info.push_back(std::move(info));
  }
  while (u.data_bits.size() < static_cast<std::size_t>(cfg.ld) * bps) u.data_bits.push_back(rng() & 1U);
  for (int l = 0; l < cfg.ld; ++l) {
    unsigned label = 0;
    for (int i = 0; i < bps; ++i) label = (label << 1) | u.data_bits[static_cast<std::size_t>(l) * bps + i];
    u.symbols.push_back(spec.symbol_of_label(label));
  }
  return u;
}

BlockSignals transmit_block(const ExperimentConfig& cfg, const ConstellationSpec& spec, const ParityCheckCode* code,
                            int block) {
  BlockSignals b;
  Rng channel_rng(child_seed(cfg.seed, kChannelStream, static_cast<std::uint64_t>(block)));
  const ChannelRealization ch = draw_rayleigh(cfg.antennas, cfg.users, channel_rng);
  for (int k = 0; k < cfg.users; ++k) {
    Rng rng(child_seed(cfg.seed, kSymbolStream, static_cast<std::uint64_t>(block), static_cast<std::uint64_t>(k)));
    b.users.push_back(draw_payload(cfg, spec, code, rng));
  }

  const ChannelInverse inv(ch.H);
  const int L = cfg.block_length();
  CMatrix x(cfg.antennas, L);
  RVector gammas(L);
  std::vector<int> symbols(cfg.users);
  CVector s(cfg.users);
  for (int l = 0; l < L; ++l) {
    for (int k = 0; k < cfg.users; ++k) {
      symbols[k] = b.users[k].symbols[l];
      s[k] = spec.points[symbols[k]];
    }
    const PrecodeResult r =
        cfg.precoder == PrecoderKind::Zf ? zf_precode(inv, s) : cisb_precode(inv, symbols, spec);
    x.col(l) = r.x;
    gammas[l] = r.gamma;
  }
  const RVector powers = RVector::Ones(L);
  if (cfg.mode == RescaleMode::Wr) {
    const PowerAllocation pa = power_allocate(gammas, powers);
    x = x * pa.scale.asDiagonal();
    b.gamma_bar = pa.gamma_bar;
  }
  b.power_sum = x.colwise().squaredNorm().sum();
  b.power_target = powers.sum();
  b.noiseless = ch.H * x;
  return b;
}

// Received, demodulator-ready signals of one user at one SNR point.
struct UserSignals {
  LabeledSignals pilots;
  LabeledSignals data;
};

std::vector<UserSignals> receive_block(const ExperimentConfig& cfg, const BlockSignals& b, std::size_t snr_index,
                                       int block) {
  const double noise_var = std::pow(10.0, -cfg.snr_db[snr_index] / 10.0);
  Rng rng(child_seed(cfg.seed, kNoiseStream, snr_index, static_cast<std::uint64_t>(block)));
  const int L = cfg.block_length();
  std::vector<UserSignals> out(cfg.users);
  for (auto& u : out) {
    u.pilots.y.resize(cfg.lp, 2);
    u.data.y.resize(cfg.ld, 2);
  }
  const double gb = b.gamma_bar.value_or(0.0);
  for (int l = 0; l < L; ++l)
    for (int k = 0; k < cfg.users; ++k) {
      const cdouble y = demod_signal(b.noiseless(k, l) + complex_normal(rng, noise_var), gb, cfg.mode);
      if (l < cfg.lp)
        out[k].pilots.y.row(l) = to_vec2(y).transpose();
      else
        out[k].data.y.row(l - cfg.lp) = to_vec2(y).transpose();
    }
  for (int k = 0; k < cfg.users; ++k) {
    const auto& sym = b.users[k].symbols;
    out[k].pilots.symbols.assign(sym.begin(), sym.begin() + cfg.lp);
    out[k].data.symbols.assign(sym.begin() + cfg.lp, sym.end());
  }
  return out;
}

struct PointAccumulator {
  MiAccumulator mi;
  ErrorCounter symbols;
  ErrorCounter bits;
  ErrorCounter coded;
  std::uint64_t ok = 0;
  std::uint64_t total = 0;

  void merge(const PointAccumulator& o) {
    mi.merge(o.mi);
    symbols.merge(o.symbols);
    bits.merge(o.bits);
    coded.merge(o.coded);
    ok += o.ok;
    total += o.total;
  }
};

struct BlockOutcome {
  std::vector<PointAccumulator> points;  // snr-major, demod-minor
  std::vector<BlockDiagnostics> diagnostics;
  std::optional<std::string> error;
};

// Runs `work(block)` for every block, on up to `threads` workers.
void parallel_blocks(int blocks, int threads, const std::function<void(int)>& work) {
  const int workers = std::min(threads, blocks);
  if (workers <= 1) {
    for (int b = 0; b < blocks; ++b) work(b);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::thread> pool;
  for (int w = 0; w < workers; ++w)
    pool.emplace_back([&] {
      for (int b = next++; b < blocks; b = next++) work(b);
    });
  for (auto& t : pool) t.join();
}

std::optional<ParityCheckCode> load_code(const ExperimentConfig& cfg, const ConstellationSpec& spec) {
  if (!cfg.code_path) return std::nullopt;
  ParityCheckCode code = load_alist(*cfg.code_path);
  if (cfg.ld * spec.bits_per_symbol < code.n())
    throw ConfigError("ld: a block of " + std::to_string(cfg.ld) + " symbols cannot hold one codeword of length " +
                      std::to_string(code.n()));
  return code;
}

void decode_user(const LlrFrame& frame, const UserPayload& payload, const ParityCheckCode& code, int max_iter,
                 PointAccumulator& acc) {
  const int bps = static_cast<int>(frame.llr.cols());
  const int n = code.n();
  std::vector<double> llr(n);
  bool all_ok = true;
  for (std::size_t c = 0; c < payload.info.size(); ++c) {
    for (int j = 0; j < n; ++j) {
      const std::size_t bit = c * n + j;
      // Demodulator LLRs favor bit 1 when positive; the decoder expects the opposite.
      llr[j] = -frame.llr(static_cast<Eigen::Index>(bit / bps), static_cast<Eigen::Index>(bit % bps));
    }
    const DecodeResult r = bp_decode(code, llr, max_iter);
    const Bits info = code.extract_info(r.bits);
    const ErrorCounter e = count_bit_errors(info, payload.info[c]);
    acc.coded.merge(e);
    all_ok = all_ok && r.converged && e.errors == 0;
  }
  acc.ok += all_ok ? 1 : 0;
}

}  // namespace

void check_params_coverage(const ExperimentConfig& cfg, const ParamsTable& table) {
  const ConstellationSpec spec = cfg.spec();
  for (std::size_t si = 0; si < cfg.snr_db.size(); ++si)
    for (int b = 0; b < cfg.blocks; ++b)
      for (int k = 0; k < cfg.users; ++k) {
        const std::uint64_t id = block_id(si, b, cfg.blocks);
        const auto it = table.entries.find({id, k});
        if (it == table.entries.end())
          throw std::invalid_argument("block " + std::to_string(id) + " user " + std::to_string(k) +
                                      ": no parameters");
        require_classes(it->second, spec, id, k);
      }
}

ExperimentResult run_experiment(const ExperimentConfig& cfg, const RunOptions& options) {
  validate(cfg);
  const ConstellationSpec spec = cfg.spec();
  const std::optional<ParityCheckCode> code = load_code(cfg, spec);

  std::optional<ParamsTable> loaded;
  const ParamsTable* external = options.external;
  std::vector<DemodKind> demods;
  for (DemodKind d : cfg.demods) {
    if (d == DemodKind::Pfen && !external) {
      const auto path = cfg.pfen_dir ? *cfg.pfen_dir / "params.jsonl" : std::filesystem::path{};
      if (!cfg.pfen_dir || !std::filesystem::exists(path)) {
        if (options.log) *options.log << "skipping demod=pfen: no parameter file (set pfen_dir)\n";
        continue;
      }
      loaded = load_params(path);
      for (const auto& msg : loaded->rejected)
        if (options.log) *options.log << path.string() << ": rejected " << msg << "\n";
      external = &*loaded;
    }
    demods.push_back(d);
  }

  const std::size_t n_snr = cfg.snr_db.size();
  const std::size_t n_dem = demods.size();
  std::vector<BlockOutcome> outcomes(cfg.blocks);

  parallel_blocks(cfg.blocks, cfg.threads, [&](int block) {
    BlockOutcome& out = outcomes[block];
    try {
      const BlockSignals sig = transmit_block(cfg, spec, code ? &*code : nullptr, block);
      out.points.assign(n_snr * n_dem, {});
      for (std::size_t si = 0; si < n_snr; ++si) {
        const std::uint64_t id = block_id(si, block, cfg.blocks);
        const std::vector<UserSignals> rx = receive_block(cfg, sig, si, block);
        for (int k = 0; k < cfg.users; ++k) {
          const UserSignals& u = rx[k];
          BlockDiagnostics diag;
          diag.snr_index = si;
          diag.block = block;
          diag.block_id = id;
          diag.user = k;
          diag.gamma_bar = sig.gamma_bar;
          diag.power_sum = sig.power_sum;
          diag.power_target = sig.power_target;
          if (cfg.lp > 0) {
            diag.sigma2_all = gaussian_variance(u.pilots, spec);
            if (spec.kind == Modulation::Qam && cfg.lp >= spec.size()) diag.sigma2_inner = inner_variance(u.pilots, spec);
          }
          out.diagnostics.push_back(diag);

          std::vector<int> decisions(cfg.ld);
          for (int l = 0; l < cfg.ld; ++l) decisions[l] = ml_decide(spec, u.data.y.row(l).transpose());
          const ErrorCounter sym = count_symbol_errors(decisions, u.data.symbols);

          for (std::size_t di = 0; di < n_dem; ++di) {
            LlrFrame frame;
            switch (demods[di]) {
              case DemodKind::Gaus: frame = gaussian_demod(u.pilots, u.data, spec); break;
              case DemodKind::MGaus: frame = mgaus_demod(u.pilots, u.data, spec); break;
              case DemodKind::Gmm: {
                EmConfig em = cfg.em;
                em.seed = child_seed(cfg.seed, kEmStream, id, static_cast<std::uint64_t>(k));
                frame = gmm_demod(u.pilots, u.data, spec, sig.gamma_bar, em);
                break;
              }
              case DemodKind::Pfen: {
                const auto it = external->entries.find({id, k});
                if (it == external->entries.end())
                  throw std::invalid_argument("block " + std::to_string(id) + " user " + std::to_string(k) +
                                              ": no external parameters");
                require_classes(it->second, spec, id, k);
                frame = external_gmm_demod(u.data, spec, it->second);
                break;
              }
            }
            PointAccumulator& acc = out.points[si * n_dem + di];
            acc.mi.add(frame);
            acc.symbols.merge(sym);
            const BitMatrix hard = hard_bits(frame.llr);
            acc.bits.errors += static_cast<std::uint64_t>((hard.array() != frame.bits.array()).count());
            acc.bits.total += static_cast<std::uint64_t>(hard.size());
            acc.total += 1;
            if (code) decode_user(frame, sig.users[k], *code, cfg.max_bp_iter, acc);
          }
        }
      }
    } catch (const std::exception& e) {
      out.points.clear();
      out.diagnostics.clear();
      out.error = "block " + std::to_string(block) + ": " + e.what();
    }
  });

  ExperimentResult result;
  std::vector<PointAccumulator> totals(n_snr * n_dem);
  for (auto& o : outcomes) {
    if (o.error) {
      if (options.log) *options.log << "aborted " << *o.error << "\n";
      result.errors.push_back(*o.error);
      continue;
    }
    for (std::size_t i = 0; i < totals.size(); ++i) totals[i].merge(o.points[i]);
    result.diagnostics.insert(result.diagnostics.end(), o.diagnostics.begin(), o.diagnostics.end());
  }
  std::stable_sort(result.diagnostics.begin(), result.diagnostics.end(),
                   [](const BlockDiagnostics& a, const BlockDiagnostics& b) {
                     return std::tie(a.snr_index, a.block, a.user) < std::tie(b.snr_index, b.block, b.user);
                   });

  if (cfg.blocks == 0) return result;
  for (std::size_t si = 0; si < n_snr; ++si)
    for (std::size_t di = 0; di < n_dem; ++di) {
      const PointAccumulator& acc = totals[si * n_dem + di];
      MetricRecord r;
      r.snr_db = cfg.snr_db[si];
      r.precoder = to_string(cfg.precoder);
      r.demod = std::string(to_string(demods[di]));
      r.lp = cfg.lp;
      r.ld = cfg.ld;
      r.seed = cfg.seed;
      r.blocks_total = acc.total;
      if (acc.mi.bits > 0) {
        r.mi = acc.mi.value();
        r.ser = acc.symbols.rate();
        r.ber_uncoded = acc.bits.rate();
      }
      if (code) {
        r.blocks_ok = acc.ok;
        if (acc.coded.total > 0) r.ber_coded = acc.coded.rate();
        if (acc.total > 0) r.se = spectrum_efficiency(code->rate(), spec.bits_per_symbol, acc.ok, acc.total);
      }
      result.records.push_back(std::move(r));
    }
  return result;
}

void write_csv(std::ostream& out, const ExperimentResult& result) {
  write_csv_header(out);
  for (const auto& r : result.records) write_csv_row(out, r);
}

std::vector<PilotRecord> export_pilot_sets(const ExperimentConfig& cfg) {
  validate(cfg);
  const ConstellationSpec spec = cfg.spec();
  if (cfg.lp < spec.size()) throw ConfigError("lp: pilot export needs at least one pilot per symbol");
  const std::optional<ParityCheckCode> code = load_code(cfg, spec);
  std::vector<std::vector<PilotRecord>> per_block(cfg.blocks);
  std::vector<std::optional<std::string>> errors(cfg.blocks);
  parallel_blocks(cfg.blocks, cfg.threads, [&](int block) {
    try {
      const BlockSignals sig = transmit_block(cfg, spec, code ? &*code : nullptr, block);
      for (std::size_t si = 0; si < cfg.snr_db.size(); ++si) {
        const std::vector<UserSignals> rx = receive_block(cfg, sig, si, block);
        for (int k = 0; k < cfg.users; ++k) {
          PilotRecord rec;
          rec.block_id = block_id(si, block, cfg.blocks);
          rec.user = k;
          rec.snr_db = cfg.snr_db[si];
          rec.sets = build_pilot_sets(rx[k].pilots, spec, sig.gamma_bar);
          per_block[block].push_back(std::move(rec));
        }
      }
    } catch (const std::exception& e) {
      errors[block] = "block " + std::to_string(block) + ": " + e.what();
    }
  });
  for (const auto& e : errors)
    if (e) throw std::runtime_error(*e);
  std::vector<PilotRecord> all;
  for (auto& v : per_block)
    for (auto& r : v) all.push_back(std::move(r));
  std::stable_sort(all.begin(), all.end(), [](const PilotRecord& a, const PilotRecord& b) {
    return std::tie(a.block_id, a.user) < std::tie(b.block_id, b.user);
  });
  return all;
}

void write_pilot_sets(std::ostream& out, const ExperimentConfig& cfg) {
  const Modulation kind = cfg.spec().kind;
  for (const auto& rec : export_pilot_sets(cfg)) out << pilot_line(rec, kind) << '\n';
}

}  // namespace slp
