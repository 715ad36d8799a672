#ifndef MVLAB_ASSIGNMENT_HPP
#define MVLAB_ASSIGNMENT_HPP

#include <Eigen/Dense>
#include <vector>

namespace mvlab {

struct AssignmentResult {
    double cost = 0;
    std::vector<int> col_of_row;  // col_of_row[i] = column matched to row i
};

// Exact minimum-cost perfect matching on a square cost matrix via shortest
// augmenting paths with potentials, O(n^3).
AssignmentResult solve_assignment(const Eigen::MatrixXd& cost);

}  // namespace mvlab

#endif
