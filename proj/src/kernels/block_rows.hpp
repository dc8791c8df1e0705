#pragma once

#include <algorithm>
#include <span>

#include "levelset/kernels.hpp"

namespace levelset::kernels::detail {

/// Rows [begin, end) of the selection, resolved to sample indices.
struct RowBlock {
  std::span<const Index> rows;  // empty: contiguous range starting at `first`
  Index first = 0;
  Index size = 0;

  Index operator[](Index j) const { return rows.empty() ? first + j : rows[static_cast<std::size_t>(j)]; }
};

inline Index selection_size(Index n, std::span<const Index> rows) {
  return rows.empty() ? n : static_cast<Index>(rows.size());
}

inline Index num_blocks(Index m) { return (m + kBlockRows - 1) / kBlockRows; }

inline RowBlock block(Index b, Index m, std::span<const Index> rows) {
  const Index begin = b * kBlockRows;
  const Index len = std::min(kBlockRows, m - begin);
  if (rows.empty()) return RowBlock{{}, begin, len};
  return RowBlock{rows.subspan(static_cast<std::size_t>(begin), static_cast<std::size_t>(len)), 0, len};
}

/// Copies the block's samples into a (features x samples) matrix.
inline Matrix gather_columns(const Matrix& X, const RowBlock& blk) {
  if (blk.rows.empty()) return X.middleRows(blk.first, blk.size).transpose();
  Matrix out(X.cols(), blk.size);
  for (Index j = 0; j < blk.size; ++j) out.col(j) = X.row(blk[j]).transpose();
  return out;
}

inline void check_rows(Index n, std::span<const Index> rows) {
  for (Index r : rows) require(r >= 0 && r < n, "sample index out of range");
  require(selection_size(n, rows) > 0, "empty sample selection");
}

}  // namespace levelset::kernels::detail
