#pragma once

#include "homodrift/simulate.hpp"

#include <Eigen/Core>

namespace homodrift {

// Exponential kernel k(r) = exp(-rate * r). The rate is kept as a field
// for completeness but everything in this project uses rate = 1.
struct FilterSpec {
    double delta = 1.0;
    double rate = 1.0;
};

// Z_0 = 0, Z_n = delta * sum_{k=0}^{n-1} exp(-delta (n-k)) x_k.
// O(N^2) reference implementation.
Eigen::VectorXd filter_direct(const Eigen::VectorXd& x, double delta);

// Same output via Z_{n+1} = exp(-delta) Z_n + delta exp(-delta) x_n; O(N).
Eigen::VectorXd filter_recurrent(const Eigen::VectorXd& x, double delta);

// Column-wise recurrence for vector-valued observations.
Eigen::MatrixXd filter_recurrent_columns(const Eigen::MatrixXd& x, double delta);

// Attaches filtered values to an observation set (recurrence path).
ObservationSet with_filtered(ObservationSet obs);

}  // namespace homodrift
