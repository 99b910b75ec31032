#include "homodrift/filterbank.hpp"

#include <cmath>
#include <stdexcept>

namespace homodrift {

Eigen::VectorXd filter_direct(const Eigen::VectorXd& x, double delta) {
    if (x.size() < 1) throw std::invalid_argument("filter_direct: empty input");
    if (delta <= 0.0) throw std::invalid_argument("filter_direct: delta must be positive");
    const Eigen::Index n = x.size();
    Eigen::VectorXd z = Eigen::VectorXd::Zero(n);
    for (Eigen::Index i = 1; i < n; ++i) {
        double s = 0.0;
        for (Eigen::Index k = 0; k < i; ++k) s += std::exp(-delta * static_cast<double>(i - k)) * x[k];
        z[i] = delta * s;
    }
    return z;
}

Eigen::VectorXd filter_recurrent(const Eigen::VectorXd& x, double delta) {
    if (x.size() < 1) throw std::invalid_argument("filter_recurrent: empty input");
    if (delta <= 0.0) throw std::invalid_argument("filter_recurrent: delta must be positive");
    const Eigen::Index n = x.size();
    const double decay = std::exp(-delta);
    Eigen::VectorXd z(n);
    z[0] = 0.0;
    for (Eigen::Index i = 0; i + 1 < n; ++i) z[i + 1] = decay * z[i] + delta * decay * x[i];
    return z;
}

Eigen::MatrixXd filter_recurrent_columns(const Eigen::MatrixXd& x, double delta) {
    Eigen::MatrixXd z(x.rows(), x.cols());
    for (Eigen::Index c = 0; c < x.cols(); ++c) z.col(c) = filter_recurrent(x.col(c), delta);
    return z;
}

ObservationSet with_filtered(ObservationSet obs) {
    obs.z = filter_recurrent_columns(obs.x, obs.delta);
    return obs;
}

}  // namespace homodrift
