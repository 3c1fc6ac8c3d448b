// Writes a constant-variable-degree PEG parity-check matrix in alist format.
#include <CLI11.hpp>
#include <fstream>
#include <iostream>

#include "slp/codec.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Generate a PEG LDPC code as an alist file"};
  int n = 648;
  int m = 324;
  int degree = 3;
  std::uint64_t seed = 20240611;
  std::string out;
  app.add_option("-n", n, "code length");
  app.add_option("-m", m, "number of checks");
  app.add_option("-d,--degree", degree, "variable node degree");
  app.add_option("--seed", seed, "tie-break seed");
  app.add_option("-o,--output", out, "output path (stdout when omitted)");
  CLI11_PARSE(app, argc, argv);

  try {
    const slp::ParityCheckCode code = slp::peg_code(n, m, degree, seed);
    std::cerr << "n=" << code.n() << " m=" << code.m() << " rank=" << code.rank() << " k=" << code.k()
              << "\n";
    if (out.empty()) {
      std::cout << code.to_alist();
    } else {
      std::ofstream f(out);
      f << code.to_alist();
      if (!f) throw std::runtime_error("cannot write " + out);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
