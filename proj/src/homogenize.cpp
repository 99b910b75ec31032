#include "homodrift/homogenize.hpp"

#include <cmath>
#include <stdexcept>

namespace homodrift {

double simpson(const std::function<double(double)>& f, double a, double b, int n) {
    if (n < 2 || n % 2 != 0) throw std::invalid_argument("simpson: n must be even and >= 2");
    const double h = (b - a) / n;
    double s = f(a) + f(b);
    for (int i = 1; i < n; ++i) s += f(a + i * h) * (i % 2 == 1 ? 4.0 : 2.0);
    return s * h / 3.0;
}

namespace {

void check_quad_args(double sigma, int n_quad) {
    if (sigma <= 0.0) throw std::invalid_argument("sigma must be positive");
    if (n_quad < 16 || n_quad % 2 != 0) throw std::invalid_argument("n_quad must be even and >= 16");
}

}  // namespace

std::pair<double, double> compute_partition_constants(const FastPotential& p, double sigma,
                                                      int n_quad) {
    check_quad_args(sigma, n_quad);
    const double L = p.period();
    const double c = simpson([&](double y) { return std::exp(-p.value(y) / sigma); }, 0.0, L, n_quad);
    const double c_hat = simpson([&](double y) { return std::exp(p.value(y) / sigma); }, 0.0, L, n_quad);
    return {c, c_hat};
}

double compute_K(const FastPotential& p, double sigma, int n_quad) {
    const auto [c, c_hat] = compute_partition_constants(p, sigma, n_quad);
    const double L = p.period();
    return L * L / (c * c_hat);
}

double compute_K_integral(const FastPotential& p, double sigma, int n_quad) {
    const auto [c, c_hat] = compute_partition_constants(p, sigma, n_quad);
    const double L = p.period();
    return simpson([&](double y) {
        const double phi_prime = eval_phi_prime(p, sigma, c_hat, y);
        return (1.0 + phi_prime) * std::exp(-p.value(y) / sigma) / c;
    }, 0.0, L, n_quad);
}

double compute_K_integral_squared(const FastPotential& p, double sigma, int n_quad) {
    const auto [c, c_hat] = compute_partition_constants(p, sigma, n_quad);
    const double L = p.period();
    return simpson([&](double y) {
        const double one_plus = 1.0 + eval_phi_prime(p, sigma, c_hat, y);
        return one_plus * one_plus * std::exp(-p.value(y) / sigma) / c;
    }, 0.0, L, n_quad);
}

double eval_phi_prime(const FastPotential& p, double sigma, double c_hat_sigma, double y) {
    return p.period() * std::exp(p.value(y) / sigma) / c_hat_sigma - 1.0;
}

std::pair<HomogenizedModel, HomogenizationResult> homogenize_model(const MultiscaleModel& model,
                                                                   int n_quad) {
    model.validate();
    const auto [c, c_hat] = compute_partition_constants(model.p, model.sigma, n_quad);
    const double L = model.p.period();

    HomogenizationResult res;
    res.C_sigma = c;
    res.C_hat_sigma = c_hat;
    res.K = model.p.is_zero() ? 1.0 : L * L / (c * c_hat);
    res.A = res.K * model.alpha;
    res.Sigma = res.K * model.sigma;
    const FastPotential p = model.p;
    const double sigma = model.sigma;
    res.mu_weight = [p, sigma, c = c](double y) { return std::exp(-p.value(y) / sigma) / c; };

    HomogenizedModel hmodel{res.A, res.Sigma, model.V};
    return {std::move(hmodel), std::move(res)};
}

}  // namespace homodrift
