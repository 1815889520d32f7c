#include "sensched/assignment.h"

#include <limits>

#include "sensched/errors.h"

namespace sensched {

std::vector<int> SolveAssignment(const Eigen::Ref<const Eigen::MatrixXd>& cost) {
  const int n = static_cast<int>(cost.rows());
  if (cost.cols() != n) {
    throw StructuralError("SolveAssignment: cost matrix must be square");
  }
  if (n == 0) return {};
  constexpr double kInf = std::numeric_limits<double>::infinity();
  // Potentials u (rows), v (columns); 1-based with column 0 as the sentinel.
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
  std::vector<int> row_of_col(n + 1, 0), way(n + 1, 0);
  for (int i = 1; i <= n; ++i) {
    row_of_col[0] = i;
    int j0 = 0;
    std::vector<double> minv(n + 1, kInf);
    std::vector<bool> used(n + 1, false);
    do {
      used[j0] = true;
      const int i0 = row_of_col[j0];
      double delta = kInf;
      int j1 = 0;
      for (int j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[j]) {
          u[row_of_col[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (row_of_col[j0] != 0);
    do {
      const int j1 = way[j0];
      row_of_col[j0] = row_of_col[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<int> col_of_row(n, -1);
  for (int j = 1; j <= n; ++j) col_of_row[row_of_col[j] - 1] = j - 1;
  return col_of_row;
}

namespace {

bool Augment(int r,
             const Eigen::Ref<const Eigen::Matrix<bool, Eigen::Dynamic,
                                                  Eigen::Dynamic>>& support,
             std::vector<int>& row_of_col, std::vector<char>& visited) {
  for (int c = 0; c < support.cols(); ++c) {
    if (!support(r, c) || visited[c]) continue;
    visited[c] = 1;
    if (row_of_col[c] < 0 || Augment(row_of_col[c], support, row_of_col, visited)) {
      row_of_col[c] = r;
      return true;
    }
  }
  return false;
}

}  // namespace

std::vector<int> PerfectMatching(
    const Eigen::Ref<const Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic>>&
        support) {
  const int n = static_cast<int>(support.rows());
  if (support.cols() != n) {
    throw StructuralError("PerfectMatching: support must be square");
  }
  std::vector<int> row_of_col(n, -1);
  for (int r = 0; r < n; ++r) {
    std::vector<char> visited(n, 0);
    if (!Augment(r, support, row_of_col, visited)) return {};
  }
  std::vector<int> col_of_row(n, -1);
  for (int c = 0; c < n; ++c) col_of_row[row_of_col[c]] = c;
  return col_of_row;
}

}  // namespace sensched
