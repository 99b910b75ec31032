#pragma once

#include "homodrift/potentials.hpp"

#include <Eigen/Core>

#include <functional>

namespace homodrift {

// Effective coefficients of the homogenized dynamics together with the
// cell-problem quantities they are built from.
struct HomogenizationResult {
    double K = 1.0;
    double C_sigma = 0.0;
    double C_hat_sigma = 0.0;
    Eigen::VectorXd A;
    double Sigma = 0.0;
    // Normalized invariant density of the fast process on [0, L].
    std::function<double(double)> mu_weight;
};

struct HomogenizedModel {
    Eigen::VectorXd A;
    double Sigma = 1.0;
    SlowPotential V = SlowPotential::quadratic();
};

// Composite Simpson over [a, b] with n even panels.
double simpson(const std::function<double(double)>& f, double a, double b, int n);

// C_sigma = int_0^L exp(-p/sigma), C_hat_sigma = int_0^L exp(+p/sigma).
std::pair<double, double> compute_partition_constants(const FastPotential& p, double sigma,
                                                      int n_quad = 4096);

// K = L^2 / (C_sigma * C_hat_sigma).
double compute_K(const FastPotential& p, double sigma, int n_quad = 4096);

// Cross-check route: K = int_0^L (1 + Phi') dmu.
double compute_K_integral(const FastPotential& p, double sigma, int n_quad = 4096);
// Second identity route: K = int_0^L (1 + Phi')^2 dmu.
double compute_K_integral_squared(const FastPotential& p, double sigma, int n_quad = 4096);

// Phi'(y) = L exp(p(y)/sigma) / C_hat_sigma - 1; C_hat_sigma is passed in
// so it is computed once per model.
double eval_phi_prime(const FastPotential& p, double sigma, double c_hat_sigma, double y);

std::pair<HomogenizedModel, HomogenizationResult> homogenize_model(const MultiscaleModel& model,
                                                                   int n_quad = 4096);

}  // namespace homodrift
