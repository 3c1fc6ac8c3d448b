#include "slp/codec.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <limits>
#include <queue>
#include <random>
#include <sstream>
#include <stdexcept>

namespace slp {

namespace {

std::vector<int> read_ints(const std::string& line) {
  std::istringstream ss(line);
  std::vector<int> v;
  std::string tok;
  while (ss >> tok) {
    try {
      std::size_t used = 0;
      v.push_back(std::stoi(tok, &used));
      if (used != tok.size()) throw std::invalid_argument(tok);
    } catch (const std::exception&) {
      throw std::runtime_error("alist: not an integer: '" + tok + "'");
    }
  }
  return v;
}

bool next_line(std::istream& in, std::vector<int>& out) {
  std::string line;
  while (std::getline(in, line)) {
    out = read_ints(line);
    if (!out.empty()) return true;
  }
  return false;
}

using Row = std::vector<std::uint64_t>;

bool get_bit(const Row& r, int c) { return (r[c >> 6] >> (c & 63)) & 1U; }
void flip_bit(Row& r, int c) { r[c >> 6] ^= std::uint64_t{1} << (c & 63); }

}  // namespace

ParityCheckCode::ParityCheckCode(int rows, int cols, std::vector<std::vector<int>> row_adjacency)
    : rows_(rows), cols_(cols), row_adj_(std::move(row_adjacency)) {
  if (rows < 1 || cols <= rows) throw std::invalid_argument("ParityCheckCode: need 0 < m < n");
  if (static_cast<int>(row_adj_.size()) != rows)
    throw std::invalid_argument("ParityCheckCode: row list count differs from m");
  col_adj_.assign(cols, {});
  for (int r = 0; r < rows; ++r) {
    auto& adj = row_adj_[r];
    std::sort(adj.begin(), adj.end());
    if (std::adjacent_find(adj.begin(), adj.end()) != adj.end())
      throw std::invalid_argument("ParityCheckCode: duplicate entry in row " + std::to_string(r));
    for (int c : adj) {
      if (c < 0 || c >= cols) throw std::invalid_argument("ParityCheckCode: column index out of range");
      col_adj_[c].push_back(r);
    }
  }
  derive_encoder();
}

void ParityCheckCode::derive_encoder() {
  const int words = (cols_ + 63) / 64;
  std::vector<Row> h(rows_, Row(words, 0));
  for (int r = 0; r < rows_; ++r)
    for (int c : row_adj_[r]) flip_bit(h[r], c);

  std::vector<int> pivot_col;
  int row = 0;
  for (int col = cols_ - 1; col >= 0 && row < rows_; --col) {
    int p = row;
    while (p < rows_ && !get_bit(h[p], col)) ++p;
    if (p == rows_) continue;
    std::swap(h[p], h[row]);
    for (int r = 0; r < rows_; ++r) {
      if (r == row || !get_bit(h[r], col)) continue;
      for (int w = 0; w < words; ++w) h[r][w] ^= h[row][w];
    }
    pivot_col.push_back(col);
    ++row;
  }
  rank_deficiency_ = rows_ - row;

  std::vector<bool> is_pivot(cols_, false);
  for (int c : pivot_col) is_pivot[c] = true;
  info_positions_.clear();
  std::vector<int> info_index(cols_, -1);
  for (int c = 0; c < cols_; ++c)
    if (!is_pivot[c]) {
      info_index[c] = static_cast<int>(info_positions_.size());
      info_positions_.push_back(c);
    }
  parity_positions_ = pivot_col;
  parity_rows_.assign(pivot_col.size(), {});
  for (std::size_t r = 0; r < pivot_col.size(); ++r)
    for (int c = 0; c < cols_; ++c)
      if (!is_pivot[c] && get_bit(h[r], c)) parity_rows_[r].push_back(info_index[c]);
}

ParityCheckCode ParityCheckCode::from_alist(std::istream& in) {
  std::vector<int> line;
  if (!next_line(in, line) || line.size() != 2) throw std::runtime_error("alist: bad dimension line");
  const int n = line[0];
  const int m = line[1];
  if (n <= 0 || m <= 0) throw std::runtime_error("alist: non-positive dimensions");
  if (!next_line(in, line) || line.size() != 2) throw std::runtime_error("alist: bad max-degree line");
  const int max_col = line[0];
  const int max_row = line[1];
  std::vector<int> col_deg, row_deg;
  if (!next_line(in, col_deg) || static_cast<int>(col_deg.size()) != n)
    throw std::runtime_error("alist: bad column degree line");
  if (!next_line(in, row_deg) || static_cast<int>(row_deg.size()) != m)
    throw std::runtime_error("alist: bad row degree line");

  bool padded = true;
  auto read_lists = [&](int count, const std::vector<int>& deg, int max_deg, int bound, const char* what) {
    std::vector<std::vector<int>> lists(count);
    for (int i = 0; i < count; ++i) {
      if (!next_line(in, line)) throw std::runtime_error(std::string("alist: missing ") + what + " list");
      if (static_cast<int>(line.size()) != max_deg) padded = false;
      for (int v : line) {
        if (v == 0) continue;
        if (v < 1 || v > bound) throw std::runtime_error(std::string("alist: index out of range in ") + what);
        lists[i].push_back(v - 1);
      }
      if (static_cast<int>(lists[i].size()) != deg[i])
        throw std::runtime_error(std::string("alist: degree mismatch in ") + what + " " + std::to_string(i + 1));
    }
    return lists;
  };
  const auto cols = read_lists(n, col_deg, max_col, m, "column");
  const auto rows = read_lists(m, row_deg, max_row, n, "row");

  // Both views must describe the same matrix.
  std::vector<std::vector<int>> from_cols(m);
  for (int c = 0; c < n; ++c)
    for (int r : cols[c]) from_cols[r].push_back(c);
  for (int r = 0; r < m; ++r) {
    auto a = rows[r];
    auto b = from_cols[r];
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    if (a != b) throw std::runtime_error("alist: row and column lists disagree at row " + std::to_string(r + 1));
  }

  ParityCheckCode code(m, n, rows);
  code.padded_alist_ = padded;
  if (code.rank_deficiency_ > 0)
    std::cerr << "warning: parity-check matrix has rank " << code.rank() << " < " << m
              << "; code rate adjusted to " << code.rate() << "\n";
  return code;
}

std::string ParityCheckCode::to_alist() const {
  std::size_t max_col = 0, max_row = 0;
  for (const auto& c : col_adj_) max_col = std::max(max_col, c.size());
  for (const auto& r : row_adj_) max_row = std::max(max_row, r.size());
  std::ostringstream out;
  out << cols_ << ' ' << rows_ << '\n' << max_col << ' ' << max_row << '\n';
  auto degrees = [&](const std::vector<std::vector<int>>& lists) {
    for (std::size_t i = 0; i < lists.size(); ++i) out << (i ? " " : "") << lists[i].size();
    out << '\n';
  };
  degrees(col_adj_);
  degrees(row_adj_);
  auto entries = [&](const std::vector<std::vector<int>>& lists, std::size_t width) {
    for (const auto& l : lists) {
      for (std::size_t i = 0; i < l.size(); ++i) out << (i ? " " : "") << l[i] + 1;
      if (padded_alist_)
        for (std::size_t i = l.size(); i < width; ++i) out << (i ? " " : "") << 0;
      out << '\n';
    }
  };
  entries(col_adj_, max_col);
  entries(row_adj_, max_row);
  return out.str();
}

ParityCheckCode load_alist(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("alist: cannot open " + path.string());
  return ParityCheckCode::from_alist(in);
}

Bits ParityCheckCode::encode(std::span<const std::uint8_t> info) const {
  if (static_cast<int>(info.size()) != k())
    throw std::invalid_argument("encode: expected " + std::to_string(k()) + " info bits, got " +
                                std::to_string(info.size()));
  Bits c(cols_, 0);
  for (int i = 0; i < k(); ++i) c[info_positions_[i]] = info[i] & 1U;
  for (std::size_t r = 0; r < parity_positions_.size(); ++r) {
    std::uint8_t v = 0;
    for (int i : parity_rows_[r]) v ^= info[i] & 1U;
    c[parity_positions_[r]] = v;
  }
  return c;
}

Bits ParityCheckCode::extract_info(std::span<const std::uint8_t> codeword) const {
  if (static_cast<int>(codeword.size()) != cols_) throw std::invalid_argument("extract_info: length mismatch");
  Bits info(k());
  for (int i = 0; i < k(); ++i) info[i] = codeword[info_positions_[i]];
  return info;
}

bool ParityCheckCode::is_codeword(std::span<const std::uint8_t> word) const {
  if (static_cast<int>(word.size()) != cols_) return false;
  for (const auto& row : row_adj_) {
    std::uint8_t s = 0;
    for (int c : row) s ^= word[c] & 1U;
    if (s) return false;
  }
  return true;
}

DecodeResult bp_decode(const ParityCheckCode& code, std::span<const double> llr, int max_iter) {
  const int n = code.n();
  if (static_cast<int>(llr.size()) != n) throw std::invalid_argument("bp_decode: LLR length mismatch");
  const auto& rows = code.row_adjacency();

  // Edge e of check r is (r, rows[r][j]); offsets index the flat message arrays.
  std::vector<int> offset(rows.size() + 1, 0);
  for (std::size_t r = 0; r < rows.size(); ++r) offset[r + 1] = offset[r] + static_cast<int>(rows[r].size());
  const int edges = offset.back();
  std::vector<double> v2c(edges), c2v(edges, 0.0), t(edges), prefix(edges);
  for (std::size_t r = 0; r < rows.size(); ++r)
    for (std::size_t j = 0; j < rows[r].size(); ++j) v2c[offset[r] + j] = llr[rows[r][j]];

  constexpr double kMaxTanh = 1.0 - 1e-15;
  DecodeResult res;
  res.bits.assign(n, 0);
  std::vector<double> total(n);
  for (int iter = 1; iter <= max_iter; ++iter) {
    res.iterations = iter;
    for (std::size_t r = 0; r < rows.size(); ++r) {
      const int b = offset[r];
      const int e = offset[r + 1];
      for (int i = b; i < e; ++i) t[i] = std::tanh(0.5 * v2c[i]);
      double acc = 1.0;
      for (int i = b; i < e; ++i) {
        prefix[i] = acc;
        acc *= t[i];
      }
      acc = 1.0;
      for (int i = e - 1; i >= b; --i) {
        const double prod = std::clamp(prefix[i] * acc, -kMaxTanh, kMaxTanh);
        c2v[i] = 2.0 * std::atanh(prod);
        acc *= t[i];
      }
    }

    std::copy(llr.begin(), llr.end(), total.begin());
    for (std::size_t r = 0; r < rows.size(); ++r)
      for (std::size_t j = 0; j < rows[r].size(); ++j) total[rows[r][j]] += c2v[offset[r] + j];
    for (std::size_t r = 0; r < rows.size(); ++r)
      for (std::size_t j = 0; j < rows[r].size(); ++j) {
        const int i = offset[r] + static_cast<int>(j);
        v2c[i] = total[rows[r][j]] - c2v[i];
      }

    bool decided = true;
    for (int c = 0; c < n; ++c) {
      res.bits[c] = total[c] < 0 ? 1 : 0;
      decided = decided && total[c] != 0.0;
    }
    if (decided && code.is_codeword(res.bits)) {
      res.converged = true;
      break;
    }
  }
  return res;
}

ParityCheckCode peg_code(int n, int m, int var_degree, std::uint64_t seed) {
  if (var_degree < 1 || var_degree > m) throw std::invalid_argument("peg_code: bad variable degree");
  std::mt19937_64 rng(seed);
  std::vector<std::vector<int>> var_adj(n), chk_adj(m);

  auto pick_min_degree = [&](const std::vector<int>& candidates) {
    std::size_t best = std::numeric_limits<std::size_t>::max();
    std::vector<int> ties;
    for (int c : candidates) {
      const std::size_t d = chk_adj[c].size();
      if (d < best) {
        best = d;
        ties.assign(1, c);
      } else if (d == best) {
        ties.push_back(c);
      }
    }
    std::uniform_int_distribution<std::size_t> u(0, ties.size() - 1);
    return ties[u(rng)];
  };

  std::vector<int> all(m);
  for (int c = 0; c < m; ++c) all[c] = c;

  for (int v = 0; v < n; ++v) {
    for (int e = 0; e < var_degree; ++e) {
      int chosen;
      if (e == 0) {
        chosen = pick_min_degree(all);
      } else {
        // Breadth-first expansion from v over the current graph.
        std::vector<bool> seen_chk(m, false), seen_var(n, false);
        std::vector<int> frontier_vars{v};
        seen_var[v] = true;
        std::vector<int> last_new;
        int reached = 0;
        while (true) {
          std::vector<int> new_chk;
          for (int x : frontier_vars)
            for (int c : var_adj[x])
              if (!seen_chk[c]) {
                seen_chk[c] = true;
                new_chk.push_back(c);
              }
          if (new_chk.empty() || reached + static_cast<int>(new_chk.size()) == m) {
            if (!new_chk.empty() && reached + static_cast<int>(new_chk.size()) == m && reached < m) {
              // Every check becomes reachable at this depth: take the deepest layer.
              last_new = new_chk;
            }
            break;
          }
          reached += static_cast<int>(new_chk.size());
          last_new = new_chk;
          std::vector<int> next_vars;
          for (int c : new_chk)
            for (int x : chk_adj[c])
              if (!seen_var[x]) {
                seen_var[x] = true;
                next_vars.push_back(x);
              }
          frontier_vars = std::move(next_vars);
        }
        std::vector<int> unreached;
        for (int c = 0; c < m; ++c)
          if (!seen_chk[c]) unreached.push_back(c);
        if (!unreached.empty()) {
          chosen = pick_min_degree(unreached);
        } else {
          std::vector<int> candidates;
          for (int c : last_new)
            if (std::find(var_adj[v].begin(), var_adj[v].end(), c) == var_adj[v].end()) candidates.push_back(c);
          chosen = pick_min_degree(candidates.empty() ? all : candidates);
        }
      }
      var_adj[v].push_back(chosen);
      chk_adj[chosen].push_back(v);
    }
  }
  return ParityCheckCode(m, n, chk_adj);
}

}  // namespace slp
