#include "homodrift/potentials.hpp"

#include <cmath>
#include <sstream>

namespace homodrift {

SlowPotential::SlowPotential(SlowKind kind, std::vector<Polynomial> components)
    : kind_(kind), components_(std::move(components)) {
    if (components_.empty()) throw std::invalid_argument("SlowPotential: needs at least one component");
    d1_.reserve(components_.size());
    d2_.reserve(components_.size());
    for (const auto& c : components_) {
        d1_.push_back(c.derivative());
        d2_.push_back(d1_.back().derivative());
    }
}

SlowPotential SlowPotential::quadratic() {
    return SlowPotential(SlowKind::Quadratic, {Polynomial({0.0, 0.0, 0.5})});
}

SlowPotential SlowPotential::quartic() {
    return SlowPotential(SlowKind::Quartic, {Polynomial({0.0, 0.0, 0.0, 0.0, 0.25})});
}

SlowPotential SlowPotential::sextic() {
    return SlowPotential(SlowKind::Sextic, {Polynomial({0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0 / 6.0})});
}

SlowPotential SlowPotential::bistable() {
    return SlowPotential(SlowKind::Bistable,
                         {Polynomial({0.0, 0.0, 0.0, 0.0, 0.25}), Polynomial({0.0, 0.0, -0.5})});
}

SlowPotential SlowPotential::custom(std::vector<Polynomial> components) {
    return SlowPotential(SlowKind::Custom, std::move(components));
}

double SlowPotential::dot_value(const Eigen::VectorXd& a, double x) const {
    double s = 0.0;
    for (int i = 0; i < dim(); ++i) s += a[i] * value(i, x);
    return s;
}

double SlowPotential::dot_d1(const Eigen::VectorXd& a, double x) const {
    double s = 0.0;
    for (int i = 0; i < dim(); ++i) s += a[i] * d1(i, x);
    return s;
}

double SlowPotential::dot_d2(const Eigen::VectorXd& a, double x) const {
    double s = 0.0;
    for (int i = 0; i < dim(); ++i) s += a[i] * d2(i, x);
    return s;
}

int SlowPotential::max_degree() const {
    int d = 0;
    for (const auto& c : components_) d = std::max(d, c.degree());
    return d;
}

double SlowPotential::leading_coefficient(const Eigen::VectorXd& a) const {
    const int d = max_degree();
    double lead = 0.0;
    for (int i = 0; i < dim(); ++i) lead += a[i] * components_[static_cast<std::size_t>(i)].coeff(d);
    return lead;
}

FastPotential FastPotential::cosine(double period) {
    if (period <= 0.0) throw std::invalid_argument("FastPotential: period must be positive");
    const double omega = 2.0 * M_PI / period;
    return FastPotential([omega](double y) { return std::cos(omega * y); },
                         [omega](double y) { return -omega * std::sin(omega * y); },
                         period, 1.0, false);
}

FastPotential FastPotential::zero() {
    return FastPotential([](double) { return 0.0; }, [](double) { return 0.0; },
                         2.0 * M_PI, 0.0, true);
}

double eval_drift_slow(const MultiscaleModel& model, double x) {
    return -model.V.dot_d1(model.alpha, x);
}

double eval_drift_fast(const MultiscaleModel& model, double x) {
    if (model.p.is_zero()) return 0.0;
    return -model.p.d1(x / model.epsilon) / model.epsilon;
}

namespace {

Polynomial parse_poly_spec(const std::string& spec) {
    // "poly:[c0,c1,...]" or "poly:c0,c1,..."
    std::string body = spec.substr(5);
    if (!body.empty() && body.front() == '[') body = body.substr(1);
    if (!body.empty() && body.back() == ']') body.pop_back();
    std::vector<double> coeffs;
    std::stringstream ss(body);
    std::string tok;
    while (std::getline(ss, tok, ',')) coeffs.push_back(std::stod(tok));
    if (coeffs.empty()) throw std::invalid_argument("empty polynomial spec: " + spec);
    return Polynomial(std::move(coeffs));
}

}  // namespace

SlowPotential parse_slow_potential(const std::vector<std::string>& specs) {
    if (specs.size() == 1) {
        const std::string& s = specs[0];
        if (s == "quadratic") return SlowPotential::quadratic();
        if (s == "quartic") return SlowPotential::quartic();
        if (s == "sextic") return SlowPotential::sextic();
        if (s == "bistable") return SlowPotential::bistable();
    }
    std::vector<Polynomial> components;
    for (const std::string& s : specs) {
        if (s.rfind("poly:", 0) == 0) {
            components.push_back(parse_poly_spec(s));
        } else if (s == "quadratic") {
            components.push_back(Polynomial({0.0, 0.0, 0.5}));
        } else if (s == "quartic") {
            components.push_back(Polynomial({0.0, 0.0, 0.0, 0.0, 0.25}));
        } else if (s == "sextic") {
            components.push_back(Polynomial({0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0 / 6.0}));
        } else {
            throw std::invalid_argument("unknown slow potential spec: " + s);
        }
    }
    return SlowPotential::custom(std::move(components));
}

FastPotential parse_fast_potential(const std::string& spec, double period) {
    if (spec == "cos") return FastPotential::cosine(period);
    if (spec == "zero") return FastPotential::zero();
    throw std::invalid_argument("unknown fast potential spec: " + spec);
}

}  // namespace homodrift
