#pragma once

#include "homodrift/homogenize.hpp"
#include "homodrift/potentials.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <optional>

namespace homodrift {

// Euler-Maruyama path stored at step resolution. Rows are time snapshots,
// columns are coordinates (one column for scalar dynamics).
struct Trajectory {
    Eigen::MatrixXd values;
    double step = 0.0;
    double t0 = 0.0;
    std::uint64_t seed = 0;

    Eigen::Index size() const { return values.rows(); }
    int dim() const { return static_cast<int>(values.cols()); }
};

// Uniformly sampled observations with spacing delta, optionally paired
// with filtered values z (z.row(0) = 0 when present).
struct ObservationSet {
    Eigen::MatrixXd x;
    double delta = 0.0;
    std::optional<Eigen::MatrixXd> z;

    Eigen::Index size() const { return x.rows(); }
    int dim() const { return static_cast<int>(x.cols()); }
};

Trajectory simulate_multiscale(const MultiscaleModel& model, double T, double h,
                               std::uint64_t seed, double x0 = 0.0);

Trajectory simulate_homogenized(const HomogenizedModel& hmodel, double T, double h,
                                std::uint64_t seed, double x0 = 0.0);

// d interacting particles, each seeing the two-scale potential plus a
// quadratic coupling of strength theta/d.
Trajectory simulate_particles(double alpha, double theta, double sigma, double epsilon,
                              const FastPotential& p, int d, double T, double h,
                              std::uint64_t seed);

ObservationSet subsample(const Trajectory& traj, double delta);

// Streaming variants: never store the fine path, only every (delta/h)-th
// snapshot. Bitwise identical to simulate + subsample.
ObservationSet simulate_multiscale_observations(const MultiscaleModel& model, double T, double h,
                                                double delta, std::uint64_t seed, double x0 = 0.0);
ObservationSet simulate_homogenized_observations(const HomogenizedModel& hmodel, double T, double h,
                                                 double delta, std::uint64_t seed, double x0 = 0.0);
ObservationSet simulate_particles_observations(double alpha, double theta, double sigma,
                                               double epsilon, const FastPotential& p, int d,
                                               double T, double h, double delta,
                                               std::uint64_t seed);

}  // namespace homodrift
