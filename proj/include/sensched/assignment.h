#pragma once

#include <vector>

#include <Eigen/Core>

namespace sensched {

/// Minimum-cost perfect matching on a square cost matrix (Hungarian method,
/// O(n^3)).  Returns column_of_row.
std::vector<int> SolveAssignment(const Eigen::Ref<const Eigen::MatrixXd>& cost);

/// Perfect matching of a square bipartite graph restricted to
/// support(r, c) == true, found by augmenting paths with rows scanned in
/// order and columns in ascending order.  Returns column_of_row, or an empty
/// vector when no perfect matching exists.
std::vector<int> PerfectMatching(
    const Eigen::Ref<const Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic>>&
        support);

}  // namespace sensched
