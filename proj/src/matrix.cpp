#include "olive/matrix.hpp"

#include <algorithm>

#include "olive/error.hpp"

namespace olive {

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows_ * cols_) {
    throw DataError("matrix data length does not equal rows * cols");
  }
}

std::vector<double> Matrix::column(std::size_t c) const {
  std::vector<double> out(rows_);
  for (std::size_t r = 0; r < rows_; ++r) out[r] = (*this)(r, c);
  return out;
}

Matrix Matrix::select_rows(std::span<const std::size_t> indices) const {
  Matrix out(indices.size(), cols_);
  for (std::size_t i = 0; i < indices.size(); ++i) {
    const auto src = row(indices[i]);
    std::copy(src.begin(), src.end(), out.row(i).begin());
  }
  return out;
}

Matrix Matrix::append_columns(const Matrix& extra) const {
  if (extra.rows() != rows_) {
    throw DataError("cannot append columns: row counts differ");
  }
  Matrix out(rows_, cols_ + extra.cols());
  for (std::size_t r = 0; r < rows_; ++r) {
    auto dst = out.row(r);
    const auto a = row(r);
    const auto b = extra.row(r);
    std::copy(a.begin(), a.end(), dst.begin());
    std::copy(b.begin(), b.end(), dst.begin() + static_cast<std::ptrdiff_t>(cols_));
  }
  return out;
}

}  // namespace olive
