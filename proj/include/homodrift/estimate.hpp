#pragma once

#include "homodrift/potentials.hpp"
#include "homodrift/simulate.hpp"
#include "homodrift/spectral.hpp"

#include <Eigen/Core>

#include <string>
#include <vector>

namespace homodrift {

// The weight functions beta_j: R -> R^m of the estimating function, one
// polynomial per component. By default the same function is used for all j.
class BetaFamily {
public:
    static BetaFamily identity(int J, int m);           // beta_j(z) = z in each component
    static BetaFamily monomial(int J, int m, int k);    // beta_j(z) = z^k
    static BetaFamily component_list(int J, std::vector<Polynomial> components);
    // "identity", "mono:k" or "list:x^3,x" (one monomial per component).
    static BetaFamily parse(const std::string& spec, int J, int m);

    int J() const { return static_cast<int>(per_j_.size()); }
    int m() const { return static_cast<int>(per_j_.front().size()); }

    Eigen::VectorXd eval(int j, double z) const {
        const auto& comps = per_j_[static_cast<std::size_t>(j - 1)];
        Eigen::VectorXd out(static_cast<Eigen::Index>(comps.size()));
        for (std::size_t i = 0; i < comps.size(); ++i)
            out[static_cast<Eigen::Index>(i)] = comps[i](z);
        return out;
    }

    BetaFamily scaled(double c) const;

private:
    explicit BetaFamily(std::vector<std::vector<Polynomial>> per_j) : per_j_(std::move(per_j)) {}
    std::vector<std::vector<Polynomial>> per_j_;  // [j][component]
};

// Everything needed to evaluate the score function at a candidate a.
struct ScoreContext {
    ObservationSet obs;
    int J = 1;
    BetaFamily beta = BetaFamily::identity(1, 1);
    double Sigma = 1.0;
    SlowPotential V = SlowPotential::quadratic();
    bool use_filter = false;

    // Spectral settings; the mesh is built once from the observations and
    // reused for every candidate a.
    double mesh_h = 0.05;
    double R_floor = 1.7;
    int n_quad_per_elem = 2;
    // Use the closed-form OU eigensystem when V is quadratic and m = 1.
    bool prefer_analytic_ou = true;

    double tol_score = 1e-8;   // on the per-observation average score
    int max_iter = 100;
    double fd_rel_step = 1e-5;

    Mesh mesh;  // filled by prepare()

    void prepare();
    bool admissible(const Eigen::VectorXd& a) const {
        return V.leading_coefficient(a) > 0.0;
    }
    bool analytic_ou_active() const {
        return prefer_analytic_ou && V.kind() == SlowKind::Quadratic && V.dim() == 1;
    }
};

struct EstimatorResult {
    Eigen::VectorXd a_hat;
    double score_norm = 0.0;  // per-observation average at a_hat
    int iterations = 0;
    bool converged = false;
    Eigen::VectorXd lambda_at_solution;
    std::string method;  // "newton" or "minimize"
};

// Single-term estimating function g_j(x, y, z; a).
Eigen::VectorXd score_g(double x, double y, double z, const SpectralBasis& basis,
                        const BetaFamily& beta, int j, double delta);

// Score G(a) = (1/Delta) sum_n sum_j g_j(X_n, X_{n+1}, slot_n; a) where the
// slot is X_n or the filtered Z_n depending on ctx.use_filter.
Eigen::VectorXd score_G(const ScoreContext& ctx, const Eigen::VectorXd& a);

Eigen::MatrixXd jacobian_fd(const ScoreContext& ctx, const Eigen::VectorXd& a,
                            double rel_step = 1e-5);

EstimatorResult solve_estimator(const ScoreContext& ctx, const Eigen::VectorXd& a0);

// Closed forms for the OU case with J = 1, beta(z) = z.
double ou_closed_form_hat(const ObservationSet& obs);
double ou_closed_form_tilde(const ObservationSet& obs);

// Discrete MLE comparators.
double mle_hat(const ObservationSet& obs);
double mle_tilde(const ObservationSet& obs);

// Interacting particles: the OU closed forms applied to the summed
// coordinate series.
double particles_closed_form(const ObservationSet& obs, bool filtered);

}  // namespace homodrift
