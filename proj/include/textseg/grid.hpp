#pragma once

#include <cstdint>
#include <stdexcept>
#include <vector>

namespace textseg {

/// Dense row-major 2-D array. Used for masks, label maps and saliency values.
template <typename T>
class Grid {
 public:
  Grid() = default;
  Grid(int rows, int cols, T fill = T{})
      : rows_(rows), cols_(cols), data_(static_cast<size_t>(rows) * cols, fill) {
    if (rows < 0 || cols < 0) throw std::invalid_argument("grid: negative shape");
  }

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  T& operator()(int r, int c) { return data_[static_cast<size_t>(r) * cols_ + c]; }
  const T& operator()(int r, int c) const { return data_[static_cast<size_t>(r) * cols_ + c]; }

  T& at(int r, int c) {
    check(r, c);
    return (*this)(r, c);
  }
  const T& at(int r, int c) const {
    check(r, c);
    return (*this)(r, c);
  }

  bool in_bounds(int r, int c) const { return r >= 0 && r < rows_ && c >= 0 && c < cols_; }
  bool same_shape(const Grid& other) const {
    return rows_ == other.rows_ && cols_ == other.cols_;
  }

  std::vector<T>& data() { return data_; }
  const std::vector<T>& data() const { return data_; }

  friend bool operator==(const Grid& a, const Grid& b) {
    return a.rows_ == b.rows_ && a.cols_ == b.cols_ && a.data_ == b.data_;
  }

 private:
  void check(int r, int c) const {
    if (!in_bounds(r, c)) throw std::out_of_range("grid: index out of range");
  }

  int rows_ = 0;
  int cols_ = 0;
  std::vector<T> data_;
};

/// Binary mask with values in {0, 1}.
using BinaryMask = Grid<std::uint8_t>;
/// Connected-component labels; 0 is background.
using LabelMap = Grid<int>;
/// Real-valued per-pixel map.
using RealMap = Grid<double>;

inline size_t mask_area(const BinaryMask& m) {
  size_t n = 0;
  for (auto v : m.data()) n += (v != 0);
  return n;
}

}  // namespace textseg
