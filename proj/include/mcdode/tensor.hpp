#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace mcdode {

/// Index layout shared by every vector/matrix in the estimation pipeline.
/// All indices are 0-based: interval h, link a, global path k, OD pair rs.
struct LayoutSpec {
  int num_intervals = 0;  // N
  int num_links = 0;      // |A|
  int num_paths = 0;      // total paths across all OD pairs
  int num_od = 0;         // |K|

  int od_size() const { return num_intervals * num_od; }
  int path_size() const { return num_intervals * num_paths; }
  int link_size() const { return num_intervals * num_links; }

  int od_index(int h, int rs) const { return h * num_od + rs; }
  int path_index(int h, int k) const { return h * num_paths + k; }
  int link_index(int h, int a) const { return h * num_links + a; }

  std::pair<int, int> od_unindex(int flat) const {
    return {flat / num_od, flat % num_od};
  }
  std::pair<int, int> path_unindex(int flat) const {
    return {flat / num_paths, flat % num_paths};
  }
  std::pair<int, int> link_unindex(int flat) const {
    return {flat / num_links, flat % num_links};
  }
};

enum class VectorRole { Od, Path, Link, Observation };

struct DenseVector {
  VectorRole role = VectorRole::Od;
  std::vector<double> values;

  DenseVector() = default;
  DenseVector(VectorRole r, std::size_t n) : role(r), values(n, 0.0) {}
  DenseVector(VectorRole r, std::vector<double> v)
      : role(r), values(std::move(v)) {}

  std::size_t size() const { return values.size(); }
  double &operator[](std::size_t i) { return values[i]; }
  double operator[](std::size_t i) const { return values[i]; }
};

struct Triplet {
  int row = 0;
  int col = 0;
  double value = 0.0;
};

/// Compressed-row sparse matrix. Assembly sums duplicate (row, col) pairs
/// and freezes a deterministic row-major storage order.
class SparseMatrix {
 public:
  SparseMatrix() = default;

  static SparseMatrix assemble(std::vector<Triplet> triplets, int rows,
                               int cols) {
    if (rows < 0 || cols < 0) throw std::invalid_argument("negative shape");
    for (const Triplet &t : triplets) {
      if (t.row < 0 || t.row >= rows || t.col < 0 || t.col >= cols)
        throw std::out_of_range("triplet index out of range");
      if (!std::isfinite(t.value))
        throw std::invalid_argument("non-finite triplet value");
    }
    std::sort(triplets.begin(), triplets.end(),
              [](const Triplet &a, const Triplet &b) {
                return a.row != b.row ? a.row < b.row : a.col < b.col;
              });
    SparseMatrix m;
    m.rows_ = rows;
    m.cols_ = cols;
    m.row_ptr_.assign(rows + 1, 0);
    for (std::size_t i = 0; i < triplets.size();) {
      std::size_t j = i;
      double sum = 0.0;
      while (j < triplets.size() && triplets[j].row == triplets[i].row &&
             triplets[j].col == triplets[i].col) {
        sum += triplets[j].value;
        ++j;
      }
      m.col_idx_.push_back(triplets[i].col);
      m.values_.push_back(sum);
      m.row_ptr_[triplets[i].row + 1]++;
      i = j;
    }
    for (int r = 0; r < rows; ++r) m.row_ptr_[r + 1] += m.row_ptr_[r];
    return m;
  }

  static SparseMatrix identity(int n) {
    std::vector<Triplet> t;
    t.reserve(n);
    for (int i = 0; i < n; ++i) t.push_back({i, i, 1.0});
    return assemble(std::move(t), n, n);
  }

  static SparseMatrix diagonal(std::span<const double> d) {
    std::vector<Triplet> t;
    for (int i = 0; i < static_cast<int>(d.size()); ++i)
      if (d[i] != 0.0) t.push_back({i, i, d[i]});
    return assemble(std::move(t), static_cast<int>(d.size()),
                    static_cast<int>(d.size()));
  }

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  std::size_t nnz() const { return values_.size(); }

  std::vector<double> multiply(std::span<const double> v) const {
    if (static_cast<int>(v.size()) != cols_)
      throw std::invalid_argument("spmv shape mismatch");
    std::vector<double> out(rows_, 0.0);
    for (int r = 0; r < rows_; ++r) {
      double acc = 0.0;
      for (int p = row_ptr_[r]; p < row_ptr_[r + 1]; ++p)
        acc += values_[p] * v[col_idx_[p]];
      out[r] = acc;
    }
    return out;
  }

  std::vector<double> multiply_transpose(std::span<const double> v) const {
    if (static_cast<int>(v.size()) != rows_)
      throw std::invalid_argument("spmv_t shape mismatch");
    std::vector<double> out(cols_, 0.0);
    for (int r = 0; r < rows_; ++r) {
      const double vr = v[r];
      if (vr == 0.0) continue;
      for (int p = row_ptr_[r]; p < row_ptr_[r + 1]; ++p)
        out[col_idx_[p]] += values_[p] * vr;
    }
    return out;
  }

  std::vector<Triplet> to_triplets() const {
    std::vector<Triplet> out;
    out.reserve(nnz());
    for (int r = 0; r < rows_; ++r)
      for (int p = row_ptr_[r]; p < row_ptr_[r + 1]; ++p)
        out.push_back({r, col_idx_[p], values_[p]});
    return out;
  }

  /// Debug dump: one `row col value` line per entry, row-major order.
  void dump(std::ostream &os) const {
    for (int r = 0; r < rows_; ++r)
      for (int p = row_ptr_[r]; p < row_ptr_[r + 1]; ++p)
        os << r << ' ' << col_idx_[p] << ' ' << values_[p] << '\n';
  }

 private:
  int rows_ = 0;
  int cols_ = 0;
  std::vector<int> row_ptr_{0};
  std::vector<int> col_idx_;
  std::vector<double> values_;
};

inline DenseVector spmv(const SparseMatrix &m, const DenseVector &v,
                        VectorRole out_role) {
  return DenseVector(out_role, m.multiply(v.values));
}

inline DenseVector spmv_t(const SparseMatrix &m, const DenseVector &v,
                          VectorRole out_role) {
  return DenseVector(out_role, m.multiply_transpose(v.values));
}

}  // namespace mcdode
