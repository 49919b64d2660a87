#include "mdforms/int_rank.hpp"

#include <boost/multiprecision/cpp_int.hpp>

#include <map>
#include <vector>

namespace mdforms {

namespace {

using Int = boost::multiprecision::cpp_int;
using Row = std::map<int, Int>;  // column -> value, sparse

}  // namespace

// Bareiss-style fraction-free elimination on sparse rows. Unit pivots are
// preferred to limit coefficient growth; the division by the previous pivot
// is exact.
int integer_rank(const SpMatI& m) {
  std::vector<Row> rows(m.rows());
  for (int c = 0; c < m.outerSize(); ++c)
    for (SpMatI::InnerIterator it(m, c); it; ++it)
      if (it.value() != 0) rows[it.row()][static_cast<int>(it.col())] = Int(it.value());

  std::vector<char> used(rows.size(), 0);
  Int prev_pivot = 1;
  int rank = 0;
  while (true) {
    // pick the unused row with a minimal (|value|, fill) pivot
    int best_row = -1, best_col = -1;
    std::size_t best_fill = 0;
    bool best_unit = false;
    for (int r = 0; r < static_cast<int>(rows.size()); ++r) {
      if (used[r] || rows[r].empty()) continue;
      for (const auto& [col, val] : rows[r]) {
        const bool unit = (val == 1 || val == -1);
        const std::size_t fill = rows[r].size();
        if (best_row < 0 || (unit && !best_unit) || (unit == best_unit && fill < best_fill)) {
          best_row = r;
          best_col = col;
          best_fill = fill;
          best_unit = unit;
        }
      }
    }
    if (best_row < 0) break;

    used[best_row] = 1;
    ++rank;
    const Row pivot_row = rows[best_row];
    const Int pivot = pivot_row.at(best_col);
    for (int r = 0; r < static_cast<int>(rows.size()); ++r) {
      if (used[r] || rows[r].empty()) continue;
      auto it = rows[r].find(best_col);
      if (it == rows[r].end()) {
        if (prev_pivot != 1)
          for (auto& [col, val] : rows[r]) {
            val *= pivot;
            val /= prev_pivot;
          }
        else
          for (auto& [col, val] : rows[r]) val *= pivot;
        continue;
      }
      const Int factor = it->second;
      Row updated;
      for (const auto& [col, val] : rows[r]) {
        if (col == best_col) continue;
        Int v = val * pivot;
        auto pit = pivot_row.find(col);
        if (pit != pivot_row.end()) v -= factor * pit->second;
        if (prev_pivot != 1) v /= prev_pivot;
        if (v != 0) updated.emplace(col, std::move(v));
      }
      rows[r] = std::move(updated);
    }
    prev_pivot = pivot;
  }
  return rank;
}

}  // namespace mdforms
