#pragma once

#include <algorithm>
#include <cstdlib>
#include <stdexcept>
#include <string>
#include <vector>

namespace sensorplan {

using CellIndex = int;

/// Regular rectangular grid; cells are stored row-major.
struct GridSpec {
  int rows = 0;
  int cols = 0;
  double cell_size = 1.0;

  GridSpec() = default;
  GridSpec(int r, int c, double size = 1.0) : rows(r), cols(c), cell_size(size) {
    validate();
  }

  void validate() const {
    if (rows < 2 || cols < 2)
      throw std::invalid_argument("grid needs at least 2 rows and 2 columns, got " +
                                  std::to_string(rows) + "x" + std::to_string(cols));
    if (!(cell_size > 0.0)) throw std::invalid_argument("cell_size must be positive");
  }

  int size() const noexcept { return rows * cols; }
  CellIndex index(int r, int c) const noexcept { return r * cols + c; }
  int row(CellIndex i) const noexcept { return i / cols; }
  int col(CellIndex i) const noexcept { return i % cols; }
  bool contains(CellIndex i) const noexcept { return i >= 0 && i < size(); }
  bool contains(int r, int c) const noexcept {
    return r >= 0 && r < rows && c >= 0 && c < cols;
  }

  int chebyshev(CellIndex a, CellIndex b) const noexcept {
    return std::max(std::abs(row(a) - row(b)), std::abs(col(a) - col(b)));
  }

  /// Cells within Chebyshev distance `radius` of `center`, ascending.
  std::vector<CellIndex> patch(CellIndex center, int radius) const {
    std::vector<CellIndex> out;
    const int r0 = row(center), c0 = col(center);
    for (int r = std::max(0, r0 - radius); r <= std::min(rows - 1, r0 + radius); ++r)
      for (int c = std::max(0, c0 - radius); c <= std::min(cols - 1, c0 + radius); ++c)
        out.push_back(index(r, c));
    return out;
  }

  bool operator==(const GridSpec&) const = default;
};

}  // namespace sensorplan
