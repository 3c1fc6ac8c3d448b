#include <doctest.h>

#include <algorithm>
#include <numeric>
#include <random>
#include <sstream>

#include "oracles.hpp"
#include "slp/metrics.hpp"

using namespace slp;

namespace {

LlrFrame frame(std::vector<double> llr, std::vector<std::uint8_t> bits) {
  LlrFrame f;
  f.llr = Eigen::Map<RMatrix>(llr.data(), static_cast<Eigen::Index>(llr.size()), 1);
  f.bits = Eigen::Map<BitMatrix>(bits.data(), static_cast<Eigen::Index>(bits.size()), 1);
  return f;
}

}  // namespace

TEST_SUITE("metrics") {
  TEST_CASE("mutual information examples") {
    // Zero LLRs carry no information.
    CHECK(mutual_information(frame({0, 0, 0, 0}, {0, 1, 1, 0})) == doctest::Approx(0.0).epsilon(1e-15));
    // Confident and correct: 1 - log2(1 + e^-50) ~ 1.
    CHECK(mutual_information(frame({50, -50}, {1, 0})) == doctest::Approx(1.0).epsilon(1e-15));
    // Confident and wrong: heavily negative.
    CHECK(mutual_information(frame({-50}, {1})) == doctest::Approx(1 - 50 / std::log(2.0)).epsilon(1e-12));
    // LLR = log 3 on a 1 bit: 1 - log2(4/3) = log2(3) - 1.
    CHECK(mutual_information(frame({std::log(3.0)}, {1})) == doctest::Approx(std::log2(3.0) - 1).epsilon(1e-14));
    CHECK_THROWS(mutual_information(frame({}, {})));
  }

  TEST_CASE("quadrature reference agrees with the frozen values") {
    for (const auto& ref : oracle::kQpskBicmMi)
      CHECK(oracle::qpsk_bicm_mi(std::pow(10.0, -ref.snr_db / 10.0)) == doctest::Approx(ref.mi).epsilon(1e-9));
  }

  TEST_CASE("mutual information is order invariant and merges") {
    std::mt19937_64 rng(1);
    std::normal_distribution<double> nd(0, 3);
    std::vector<double> llr(1000);
    std::vector<std::uint8_t> bits(1000);
    for (int i = 0; i < 1000; ++i) {
      bits[i] = rng() & 1U;
      llr[i] = nd(rng) + (bits[i] ? 2 : -2);
    }
    const double base = mutual_information(frame(llr, bits));
    std::vector<int> idx(1000);
    std::iota(idx.begin(), idx.end(), 0);
    std::shuffle(idx.begin(), idx.end(), rng);
    std::vector<double> l2(1000);
    std::vector<std::uint8_t> b2(1000);
    for (int i = 0; i < 1000; ++i) {
      l2[i] = llr[idx[i]];
      b2[i] = bits[idx[i]];
    }
    CHECK(mutual_information(frame(l2, b2)) == doctest::Approx(base).epsilon(1e-12));

    const std::vector<LlrFrame> parts{frame({llr.begin(), llr.begin() + 300}, {bits.begin(), bits.begin() + 300}),
                                      frame({llr.begin() + 300, llr.end()}, {bits.begin() + 300, bits.end()})};
    CHECK(mutual_information(parts) == doctest::Approx(base).epsilon(1e-12));
  }

  TEST_CASE("mutual information grows with LLR reliability") {
    std::vector<std::uint8_t> bits{1, 0, 1, 1, 0};
    double prev = -1;
    for (double mag : {0.0, 0.5, 1.0, 2.0, 5.0, 20.0}) {
      std::vector<double> llr;
      for (auto b : bits) llr.push_back(b ? mag : -mag);
      const double mi = mutual_information(frame(llr, bits));
      CHECK(mi > prev);
      CHECK(mi <= 1.0);
      prev = mi;
    }
  }

  TEST_CASE("error rates") {
    const std::vector<int> truth{0, 1, 2, 3}, dec{0, 1, 3, 3};
    CHECK(ser(dec, truth) == 0.25);
    const std::vector<std::uint8_t> tb{0, 1, 1, 0, 1}, bb{0, 0, 1, 1, 1};
    CHECK(ber(bb, tb) == 0.4);
    CHECK_THROWS(ser(std::vector<int>{1}, truth));
    CHECK_THROWS(ber(std::vector<std::uint8_t>{}, std::vector<std::uint8_t>{}));
    ErrorCounter a = count_bit_errors(bb, tb), b = count_bit_errors(tb, tb);
    a.merge(b);
    CHECK(a.rate() == 0.2);
    RMatrix llr(1, 3);
    llr << 1.5, -0.2, 0.0;
    const BitMatrix hb = hard_bits(llr);
    CHECK(hb(0, 0) == 1);
    CHECK(hb(0, 1) == 0);
    CHECK(hb(0, 2) == 0);
  }

  TEST_CASE("spectrum efficiency") {
    CHECK(spectrum_efficiency(0.5, 4, 10, 10) == 2.0);
    CHECK(spectrum_efficiency(0.5, 4, 0, 10) == 0.0);
    CHECK(spectrum_efficiency(0.5, 4, 7, 10) == doctest::Approx(1.4));
    CHECK(spectrum_efficiency(0.5, 6, 1, 2) == 1.5);
    CHECK_THROWS(spectrum_efficiency(0.5, 4, 0, 0));
    CHECK_THROWS(spectrum_efficiency(0.5, 4, 3, 2));
  }

  TEST_CASE("CSV output") {
    std::ostringstream out;
    write_csv_header(out);
    MetricRecord r;
    r.snr_db = 30;
    r.precoder = "cisb";
    r.demod = "gmm";
    r.lp = 1024;
    r.ld = 2048;
    r.mi = 0.1;
    r.blocks_total = 8;
    r.seed = 7;
    write_csv_row(out, r);
    CHECK(out.str() ==
          "snr_db,precoder,demod,lp,ld,mi,ser,ber_uncoded,ber_coded,se,blocks_ok,blocks_total,seed\n"
          "30,cisb,gmm,1024,2048,0.10000000000000001,,,,,,8,7\n");
  }
}
