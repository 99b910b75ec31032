#pragma once

#include <Eigen/Core>

#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

namespace homodrift {

// Polynomial with coefficients in ascending degree order.
class Polynomial {
public:
    Polynomial() = default;
    explicit Polynomial(std::vector<double> coeffs) : coeffs_(std::move(coeffs)) {
        while (coeffs_.size() > 1 && coeffs_.back() == 0.0) coeffs_.pop_back();
        if (coeffs_.empty()) coeffs_.push_back(0.0);
    }

    double operator()(double x) const {
        double v = 0.0;
        for (auto it = coeffs_.rbegin(); it != coeffs_.rend(); ++it) v = v * x + *it;
        return v;
    }

    Polynomial derivative() const {
        if (coeffs_.size() <= 1) return Polynomial({0.0});
        std::vector<double> d(coeffs_.size() - 1);
        for (std::size_t k = 1; k < coeffs_.size(); ++k) d[k - 1] = coeffs_[k] * static_cast<double>(k);
        return Polynomial(std::move(d));
    }

    int degree() const { return static_cast<int>(coeffs_.size()) - 1; }
    double coeff(int k) const {
        return (k >= 0 && k < static_cast<int>(coeffs_.size())) ? coeffs_[static_cast<std::size_t>(k)] : 0.0;
    }
    const std::vector<double>& coeffs() const { return coeffs_; }

    Polynomial scaled(double c) const {
        std::vector<double> s = coeffs_;
        for (double& v : s) v *= c;
        return Polynomial(std::move(s));
    }

private:
    std::vector<double> coeffs_{0.0};
};

enum class SlowKind { Quadratic, Quartic, Sextic, Bistable, Custom };

// Slow-scale potential V: R -> R^m, each component a polynomial with
// analytic first and second derivatives.
class SlowPotential {
public:
    static SlowPotential quadratic();  // x^2/2
    static SlowPotential quartic();    // x^4/4
    static SlowPotential sextic();     // x^6/6
    static SlowPotential bistable();   // (x^4/4, -x^2/2)
    static SlowPotential custom(std::vector<Polynomial> components);

    int dim() const { return static_cast<int>(components_.size()); }
    SlowKind kind() const { return kind_; }

    double value(int i, double x) const { return components_[static_cast<std::size_t>(i)](x); }
    double d1(int i, double x) const { return d1_[static_cast<std::size_t>(i)](x); }
    double d2(int i, double x) const { return d2_[static_cast<std::size_t>(i)](x); }

    const Polynomial& component(int i) const { return components_[static_cast<std::size_t>(i)]; }

    double dot_value(const Eigen::VectorXd& a, double x) const;
    double dot_d1(const Eigen::VectorXd& a, double x) const;
    double dot_d2(const Eigen::VectorXd& a, double x) const;

    // Highest polynomial degree across components; the coefficient of that
    // degree in a.V determines whether the drift is confining.
    int max_degree() const;
    double leading_coefficient(const Eigen::VectorXd& a) const;

private:
    SlowPotential(SlowKind kind, std::vector<Polynomial> components);

    SlowKind kind_ = SlowKind::Quadratic;
    std::vector<Polynomial> components_;
    std::vector<Polynomial> d1_;
    std::vector<Polynomial> d2_;
};

// Periodic fast-scale potential p with period L and a uniform bound.
class FastPotential {
public:
    static FastPotential cosine(double period = 2.0 * M_PI);
    static FastPotential zero();

    double value(double y) const { return value_(y); }
    double d1(double y) const { return d1_(y); }
    double period() const { return period_; }
    double sup_bound() const { return sup_bound_; }
    bool is_zero() const { return is_zero_; }

private:
    FastPotential(std::function<double(double)> value, std::function<double(double)> d1,
                  double period, double sup_bound, bool is_zero)
        : value_(std::move(value)), d1_(std::move(d1)), period_(period),
          sup_bound_(sup_bound), is_zero_(is_zero) {}

    std::function<double(double)> value_;
    std::function<double(double)> d1_;
    double period_;
    double sup_bound_;
    bool is_zero_;
};

// The two-scale SDE specification: drift -alpha.V'(x) - (1/eps) p'(x/eps),
// diffusion sqrt(2 sigma).
struct MultiscaleModel {
    Eigen::VectorXd alpha;
    double sigma = 1.0;
    double epsilon = 0.1;
    SlowPotential V = SlowPotential::quadratic();
    FastPotential p = FastPotential::cosine();

    void validate() const {
        // sigma == 0 is allowed as the degenerate deterministic limit.
        if (sigma < 0.0) throw std::invalid_argument("MultiscaleModel: sigma must be nonnegative");
        if (epsilon <= 0.0) throw std::invalid_argument("MultiscaleModel: epsilon must be positive");
        if (alpha.size() != V.dim())
            throw std::invalid_argument("MultiscaleModel: dim(alpha) must equal number of V components");
    }
};

double eval_drift_slow(const MultiscaleModel& model, double x);
double eval_drift_fast(const MultiscaleModel& model, double x);

// Parsers for the config surface: "quadratic", "quartic", "sextic",
// "bistable", "poly:[c0,c1,...]" per component and "cos" / "zero".
SlowPotential parse_slow_potential(const std::vector<std::string>& specs);
FastPotential parse_fast_potential(const std::string& spec, double period);

}  // namespace homodrift
