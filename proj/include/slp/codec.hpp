#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace slp {

using Bits = std::vector<std::uint8_t>;

/// Binary LDPC code given by a sparse parity-check matrix, with a systematic
/// encoder derived by GF(2) elimination.
///
/// Elimination scans columns from the last to the first and takes the first
/// available row as pivot, so parity bits land on the right-most independent
/// columns. Information bits occupy the remaining positions in ascending
/// order. If H is rank deficient the code dimension grows accordingly.
class ParityCheckCode {
 public:
  ParityCheckCode(int rows, int cols, std::vector<std::vector<int>> row_adjacency);

  static ParityCheckCode from_alist(std::istream& in);
  std::string to_alist() const;

  int n() const { return cols_; }
  int m() const { return rows_; }
  int k() const { return static_cast<int>(info_positions_.size()); }
  int rank() const { return rows_ - rank_deficiency_; }
  int rank_deficiency() const { return rank_deficiency_; }
  double rate() const { return static_cast<double>(k()) / n(); }

  const std::vector<std::vector<int>>& row_adjacency() const { return row_adj_; }
  const std::vector<std::vector<int>>& col_adjacency() const { return col_adj_; }
  const std::vector<int>& info_positions() const { return info_positions_; }

  Bits encode(std::span<const std::uint8_t> info) const;
  Bits extract_info(std::span<const std::uint8_t> codeword) const;
  bool is_codeword(std::span<const std::uint8_t> word) const;

 private:
  void derive_encoder();

  int rows_ = 0;
  int cols_ = 0;
  std::vector<std::vector<int>> row_adj_;
  std::vector<std::vector<int>> col_adj_;
  bool padded_alist_ = true;
  int rank_deficiency_ = 0;
  std::vector<int> info_positions_;
  std::vector<int> parity_positions_;
  // parity_rows_[r] lists info indices (into info_positions_) feeding parity r.
  std::vector<std::vector<int>> parity_rows_;
};

ParityCheckCode load_alist(const std::filesystem::path& path);

struct DecodeResult {
  Bits bits;  // hard decisions on the full codeword
  bool converged = false;
  int iterations = 0;
};

/// Flooding sum-product decoding with tanh-rule check updates and early exit
/// on a zero syndrome. Input LLRs are log P(0)/P(1): positive favors bit 0.
/// A bit with zero posterior LLR counts as undecided and blocks convergence.
DecodeResult bp_decode(const ParityCheckCode& code, std::span<const double> llr, int max_iter = 50);

/// Progressive edge-growth construction of an m x n parity-check matrix with
/// constant variable degree. Ties between candidate checks of equal degree
/// are broken with a generator seeded by `seed`.
ParityCheckCode peg_code(int n, int m, int var_degree, std::uint64_t seed);

}  // namespace slp
