#include "homodrift/simulate.hpp"

#include "homodrift/rng.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace homodrift {

namespace {

void check_step(double T, double h) {
    if (h <= 0.0) throw std::invalid_argument("simulate: h must be positive");
    if (T < h) throw std::invalid_argument("simulate: T must be at least h");
}

void check_multiscale_stability(const MultiscaleModel& model, double h) {
    // Fast drift has magnitude 1/epsilon; explicit Euler needs h well below
    // epsilon^2 when the fast potential is active.
    if (!model.p.is_zero() && h > model.epsilon * model.epsilon / 10.0)
        throw std::invalid_argument(
            "simulate_multiscale: h > epsilon^2/10 is unstable for the fast drift (h=" +
            std::to_string(h) + ", epsilon=" + std::to_string(model.epsilon) + ")");
}

Eigen::Index n_steps_for(double T, double h) {
    return static_cast<Eigen::Index>(std::floor(T / h + 1e-9));
}

// One Euler-Maruyama path of a scalar SDE dX = b(X) dt + sqrt(2 sigma) dW.
// If record_stride > 0, only every record_stride-th snapshot is kept.
template <typename Drift>
Eigen::MatrixXd run_scalar(Drift&& drift, double sigma, double T, double h, std::uint64_t seed,
                           double x0, Eigen::Index record_stride) {
    const Eigen::Index n_steps = n_steps_for(T, h);
    const Eigen::Index stride = record_stride > 0 ? record_stride : 1;
    const Eigen::Index n_rec = n_steps / stride;
    Eigen::MatrixXd out(n_rec + 1, 1);

    Xoshiro256pp rng(seed);
    const double noise = std::sqrt(2.0 * sigma * h);
    double x = x0;
    out(0, 0) = x;
    Eigen::Index rec = 1;
    for (Eigen::Index k = 0; k < n_steps; ++k) {
        x += h * drift(x) + noise * rng.normal();
        if (!std::isfinite(x))
            throw std::runtime_error("simulate: trajectory blew up at step " + std::to_string(k + 1));
        if ((k + 1) % stride == 0 && rec <= n_rec) out(rec++, 0) = x;
    }
    return out;
}

Eigen::Index stride_for(double delta, double h) {
    const double ratio = delta / h;
    const double rounded = std::round(ratio);
    if (std::abs(ratio - rounded) > 1e-9 * std::max(1.0, ratio) || rounded < 1.0)
        throw std::invalid_argument("delta must be an integer multiple of h");
    return static_cast<Eigen::Index>(rounded);
}

}  // namespace

Trajectory simulate_multiscale(const MultiscaleModel& model, double T, double h,
                               std::uint64_t seed, double x0) {
    model.validate();
    check_step(T, h);
    check_multiscale_stability(model, h);
    auto drift = [&model](double x) { return eval_drift_slow(model, x) + eval_drift_fast(model, x); };
    return {run_scalar(drift, model.sigma, T, h, seed, x0, 1), h, 0.0, seed};
}

Trajectory simulate_homogenized(const HomogenizedModel& hmodel, double T, double h,
                                std::uint64_t seed, double x0) {
    check_step(T, h);
    auto drift = [&hmodel](double x) { return -hmodel.V.dot_d1(hmodel.A, x); };
    return {run_scalar(drift, hmodel.Sigma, T, h, seed, x0, 1), h, 0.0, seed};
}

namespace {

Eigen::MatrixXd run_particles(double alpha, double theta, double sigma, double epsilon,
                              const FastPotential& p, int d, double T, double h,
                              std::uint64_t seed, Eigen::Index record_stride) {
    if (d < 2) throw std::invalid_argument("simulate_particles: d must be >= 2");
    check_step(T, h);
    if (!p.is_zero() && h > epsilon * epsilon / 10.0)
        throw std::invalid_argument("simulate_particles: h > epsilon^2/10 is unstable");

    const Eigen::Index n_steps = n_steps_for(T, h);
    const Eigen::Index stride = record_stride > 0 ? record_stride : 1;
    const Eigen::Index n_rec = n_steps / stride;
    Eigen::MatrixXd out(n_rec + 1, d);

    Xoshiro256pp rng(seed);
    const double noise = std::sqrt(2.0 * sigma * h);
    Eigen::VectorXd x = Eigen::VectorXd::Zero(d);
    Eigen::VectorXd xn(d);
    out.row(0) = x.transpose();
    Eigen::Index rec = 1;
    for (Eigen::Index k = 0; k < n_steps; ++k) {
        const double mean = x.mean();
        for (int i = 0; i < d; ++i) {
            double drift = -alpha * x[i] - theta * (x[i] - mean);
            if (!p.is_zero()) drift -= p.d1(x[i] / epsilon) / epsilon;
            xn[i] = x[i] + h * drift + noise * rng.normal();
        }
        x = xn;
        if (!x.allFinite())
            throw std::runtime_error("simulate_particles: blow-up at step " + std::to_string(k + 1));
        if ((k + 1) % stride == 0 && rec <= n_rec) out.row(rec++) = x.transpose();
    }
    return out;
}

}  // namespace

Trajectory simulate_particles(double alpha, double theta, double sigma, double epsilon,
                              const FastPotential& p, int d, double T, double h,
                              std::uint64_t seed) {
    return {run_particles(alpha, theta, sigma, epsilon, p, d, T, h, seed, 1), h, 0.0, seed};
}

ObservationSet subsample(const Trajectory& traj, double delta) {
    const Eigen::Index stride = stride_for(delta, traj.step);
    const Eigen::Index n = (traj.size() - 1) / stride;
    Eigen::MatrixXd x(n + 1, traj.dim());
    for (Eigen::Index i = 0; i <= n; ++i) x.row(i) = traj.values.row(i * stride);
    return {std::move(x), delta, std::nullopt};
}

ObservationSet simulate_multiscale_observations(const MultiscaleModel& model, double T, double h,
                                                double delta, std::uint64_t seed, double x0) {
    model.validate();
    check_step(T, h);
    check_multiscale_stability(model, h);
    const Eigen::Index stride = stride_for(delta, h);
    auto drift = [&model](double x) { return eval_drift_slow(model, x) + eval_drift_fast(model, x); };
    return {run_scalar(drift, model.sigma, T, h, seed, x0, stride), delta, std::nullopt};
}

ObservationSet simulate_homogenized_observations(const HomogenizedModel& hmodel, double T, double h,
                                                 double delta, std::uint64_t seed, double x0) {
    check_step(T, h);
    const Eigen::Index stride = stride_for(delta, h);
    auto drift = [&hmodel](double x) { return -hmodel.V.dot_d1(hmodel.A, x); };
    return {run_scalar(drift, hmodel.Sigma, T, h, seed, x0, stride), delta, std::nullopt};
}

ObservationSet simulate_particles_observations(double alpha, double theta, double sigma,
                                               double epsilon, const FastPotential& p, int d,
                                               double T, double h, double delta,
                                               std::uint64_t seed) {
    const Eigen::Index stride = stride_for(delta, h);
    return {run_particles(alpha, theta, sigma, epsilon, p, d, T, h, seed, stride), delta,
            std::nullopt};
}

}  // namespace homodrift
