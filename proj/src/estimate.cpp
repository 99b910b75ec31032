#include "homodrift/estimate.hpp"

#include "homodrift/filterbank.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace homodrift {

namespace {

Polynomial monomial(int k, double c = 1.0) {
    std::vector<double> coeffs(static_cast<std::size_t>(k) + 1, 0.0);
    coeffs.back() = c;
    return Polynomial(std::move(coeffs));
}

}  // namespace

BetaFamily BetaFamily::identity(int J, int m) { return monomial(J, m, 1); }

BetaFamily BetaFamily::monomial(int J, int m, int k) {
    std::vector<Polynomial> comps(static_cast<std::size_t>(m), homodrift::monomial(k));
    return component_list(J, std::move(comps));
}

BetaFamily BetaFamily::component_list(int J, std::vector<Polynomial> components) {
    if (J < 1 || components.empty()) throw std::invalid_argument("BetaFamily: J >= 1 and m >= 1");
    std::vector<std::vector<Polynomial>> per_j(static_cast<std::size_t>(J), components);
    return BetaFamily(std::move(per_j));
}

BetaFamily BetaFamily::parse(const std::string& spec, int J, int m) {
    if (spec == "identity") return identity(J, m);
    if (spec.rfind("mono:", 0) == 0) return monomial(J, m, std::stoi(spec.substr(5)));
    if (spec.rfind("list:", 0) == 0) {
        std::vector<Polynomial> comps;
        std::stringstream ss(spec.substr(5));
        std::string tok;
        while (std::getline(ss, tok, ',')) {
            const auto caret = tok.find('^');
            const int k = caret == std::string::npos ? 1 : std::stoi(tok.substr(caret + 1));
            comps.push_back(homodrift::monomial(k));
        }
        if (static_cast<int>(comps.size()) != m)
            throw std::invalid_argument("BetaFamily: list length must equal parameter dimension");
        return component_list(J, std::move(comps));
    }
    throw std::invalid_argument("BetaFamily: unknown spec " + spec);
}

BetaFamily BetaFamily::scaled(double c) const {
    std::vector<std::vector<Polynomial>> per_j = per_j_;
    for (auto& comps : per_j)
        for (auto& p : comps) p = p.scaled(c);
    return BetaFamily(std::move(per_j));
}

void ScoreContext::prepare() {
    if (use_filter && !obs.z) obs = with_filtered(std::move(obs));
    mesh = build_mesh(&obs, mesh_h, R_floor);
}

Eigen::VectorXd score_g(double x, double y, double z, const SpectralBasis& basis,
                        const BetaFamily& beta, int j, double delta) {
    const double bracket = basis.eval(j, y) - std::exp(-basis.lambda(j) * delta) * basis.eval(j, x);
    return beta.eval(j, z) * bracket;
}

namespace {

// Accumulates the double sum of the score given per-observation
// eigenfunction values phi[j-1][n] and eigenvalues.
Eigen::VectorXd accumulate_score(const ScoreContext& ctx,
                                 const std::vector<Eigen::VectorXd>& phi,
                                 const Eigen::VectorXd& lambdas) {
    const Eigen::VectorXd& x = ctx.obs.x.col(0);
    if (ctx.use_filter && !ctx.obs.z)
        throw std::invalid_argument("score_G: filtered score needs obs.z");
    const Eigen::Index n_inc = x.size() - 1;
    const int m = ctx.V.dim();
    Eigen::VectorXd G = Eigen::VectorXd::Zero(m);
    for (int j = 1; j <= ctx.J; ++j) {
        const double decay = std::exp(-lambdas[j - 1] * ctx.obs.delta);
        const Eigen::VectorXd& pj = phi[static_cast<std::size_t>(j - 1)];
        for (Eigen::Index n = 0; n < n_inc; ++n) {
            const double bracket = pj[n + 1] - decay * pj[n];
            const double slot = ctx.use_filter ? (*ctx.obs.z)(n, 0) : x[n];
            G += ctx.beta.eval(j, slot) * bracket;
        }
    }
    return G / ctx.obs.delta;
}

}  // namespace

Eigen::VectorXd score_G(const ScoreContext& ctx, const Eigen::VectorXd& a) {
    if (a.size() != ctx.V.dim()) throw std::invalid_argument("score_G: dim(a) != dim(V)");
    if (!ctx.admissible(a)) throw std::domain_error("score_G: a outside the admissible set");
    if (ctx.obs.x.cols() != 1) throw std::invalid_argument("score_G: scalar observations expected");

    const Eigen::VectorXd& x = ctx.obs.x.col(0);
    std::vector<Eigen::VectorXd> phi(static_cast<std::size_t>(ctx.J));

    if (ctx.analytic_ou_active()) {
        const OuEigenSystem sys = ou_eigen_analytic(a[0], ctx.Sigma, ctx.J);
        for (int j = 0; j < ctx.J; ++j) {
            phi[static_cast<std::size_t>(j)] =
                x.unaryExpr([&](double v) { return sys.phi[static_cast<std::size_t>(j)](v); });
        }
        return accumulate_score(ctx, phi, sys.lambdas);
    }

    if (ctx.mesh.n_elems == 0)
        throw std::logic_error("score_G: ScoreContext::prepare() was not called");
    const SpectralBasis basis =
        solve_generator_eigenpairs(ctx.mesh, a, ctx.Sigma, ctx.V, ctx.J, ctx.n_quad_per_elem);
    for (int j = 1; j <= ctx.J; ++j) {
        phi[static_cast<std::size_t>(j - 1)] =
            x.unaryExpr([&](double v) { return basis.eval(j, v); });
    }
    return accumulate_score(ctx, phi, basis.lambdas());
}

Eigen::MatrixXd jacobian_fd(const ScoreContext& ctx, const Eigen::VectorXd& a, double rel_step) {
    const int m = static_cast<int>(a.size());
    Eigen::MatrixXd J(m, m);
    for (int i = 0; i < m; ++i) {
        const double step = rel_step * std::max(1.0, std::abs(a[i]));
        Eigen::VectorXd ap = a, am = a;
        ap[i] += step;
        am[i] -= step;
        if (ctx.admissible(ap) && ctx.admissible(am)) {
            J.col(i) = (score_G(ctx, ap) - score_G(ctx, am)) / (2.0 * step);
        } else if (ctx.admissible(ap)) {
            J.col(i) = (score_G(ctx, ap) - score_G(ctx, a)) / step;
        } else {
            J.col(i) = (score_G(ctx, a) - score_G(ctx, am)) / step;
        }
    }
    return J;
}

namespace {

double per_obs_scale(const ScoreContext& ctx) {
    return ctx.obs.delta / static_cast<double>(ctx.obs.x.rows() - 1);
}

Eigen::VectorXd lambdas_at(const ScoreContext& ctx, const Eigen::VectorXd& a) {
    if (ctx.analytic_ou_active()) return ou_eigen_analytic(a[0], ctx.Sigma, ctx.J).lambdas;
    return solve_generator_eigenpairs(ctx.mesh, a, ctx.Sigma, ctx.V, ctx.J, ctx.n_quad_per_elem)
        .lambdas();
}

struct IterState {
    Eigen::VectorXd a;
    Eigen::VectorXd G;
    double norm;
    int iterations = 0;
};

// Damped Newton on the score. Returns true on convergence; on a stall the
// best iterate is left in the state for the fallback to continue from.
bool newton_path(const ScoreContext& ctx, IterState& st, double tol_raw) {
    for (; st.iterations < ctx.max_iter; ++st.iterations) {
        if (st.norm <= tol_raw) return true;
        const Eigen::MatrixXd J = jacobian_fd(ctx, st.a, ctx.fd_rel_step);
        Eigen::FullPivLU<Eigen::MatrixXd> lu(J);
        if (!lu.isInvertible()) return false;
        const Eigen::VectorXd d = lu.solve(-st.G);
        double t = 1.0;
        bool accepted = false;
        for (int bt = 0; bt < 40; ++bt, t *= 0.5) {
            const Eigen::VectorXd cand = st.a + t * d;
            if (!ctx.admissible(cand)) continue;
            const Eigen::VectorXd Gc = score_G(ctx, cand);
            const double nc = Gc.norm();
            if (nc < st.norm) {
                st.a = cand;
                st.G = Gc;
                st.norm = nc;
                accepted = true;
                break;
            }
            if (t * d.norm() < 1e-10 * std::max(1.0, st.a.norm())) break;
        }
        if (!accepted) return st.norm <= tol_raw;
    }
    return st.norm <= tol_raw;
}

// Levenberg-Marquardt descent on |G|^2.
bool minimize_path(const ScoreContext& ctx, IterState& st, double tol_raw) {
    const int m = static_cast<int>(st.a.size());
    double mu = 1e-3;
    for (int it = 0; it < 2 * ctx.max_iter; ++it, ++st.iterations) {
        if (st.norm <= tol_raw) return true;
        const Eigen::MatrixXd J = jacobian_fd(ctx, st.a, ctx.fd_rel_step);
        const Eigen::MatrixXd JtJ = J.transpose() * J;
        const Eigen::VectorXd g = J.transpose() * st.G;
        const Eigen::VectorXd d =
            (JtJ + mu * Eigen::MatrixXd::Identity(m, m)).ldlt().solve(-g);
        const Eigen::VectorXd cand = st.a + d;
        if (ctx.admissible(cand)) {
            const Eigen::VectorXd Gc = score_G(ctx, cand);
            if (Gc.norm() < st.norm) {
                st.a = cand;
                st.G = Gc;
                st.norm = Gc.norm();
                mu = std::max(mu * 0.3, 1e-12);
                continue;
            }
        }
        mu *= 3.0;
        if (mu > 1e12 || d.norm() < 1e-14 * std::max(1.0, st.a.norm()))
            return st.norm <= tol_raw;
    }
    return st.norm <= tol_raw;
}

EstimatorResult solve_from(const ScoreContext& ctx, const Eigen::VectorXd& a0) {
    const double tol_raw = ctx.tol_score / per_obs_scale(ctx);
    IterState st{a0, score_G(ctx, a0), 0.0, 0};
    st.norm = st.G.norm();

    EstimatorResult res;
    res.method = "newton";
    bool ok = newton_path(ctx, st, tol_raw);
    if (!ok) {
        res.method = "minimize";
        ok = minimize_path(ctx, st, tol_raw);
    }
    res.a_hat = st.a;
    res.score_norm = st.norm * per_obs_scale(ctx);
    res.iterations = st.iterations;
    res.converged = ok;
    res.lambda_at_solution = lambdas_at(ctx, st.a);
    return res;
}

}  // namespace

EstimatorResult solve_estimator(const ScoreContext& ctx, const Eigen::VectorXd& a0) {
    if (!ctx.admissible(a0)) throw std::domain_error("solve_estimator: a0 outside the admissible set");

    EstimatorResult best = solve_from(ctx, a0);
    if (best.converged) return best;

    // Multi-start on non-convergence: three perturbed starts.
    for (double factor : {0.5, 2.0, 0.25}) {
        const Eigen::VectorXd start = factor * a0;
        if (!ctx.admissible(start)) continue;
        EstimatorResult r = solve_from(ctx, start);
        if (r.converged) return r;
        if (r.score_norm < best.score_norm) best = r;
    }
    return best;
}

namespace {

double safe_log_ratio(double num, double den, double delta, const char* who) {
    if (den == 0.0 || num / den <= 0.0)
        throw std::runtime_error(std::string(who) + ": estimator undefined for this sample");
    return -std::log(num / den) / delta;
}

Eigen::VectorXd filtered_column(const ObservationSet& obs) {
    if (!obs.z) throw std::invalid_argument("filtered estimator needs obs.z");
    return obs.z->col(0);
}

}  // namespace

double ou_closed_form_hat(const ObservationSet& obs) {
    const Eigen::VectorXd& x = obs.x.col(0);
    const Eigen::Index n = x.size() - 1;
    const double num = x.head(n).dot(x.tail(n));
    const double den = x.head(n).squaredNorm();
    return safe_log_ratio(num, den, obs.delta, "ou_closed_form_hat");
}

double ou_closed_form_tilde(const ObservationSet& obs) {
    const Eigen::VectorXd& x = obs.x.col(0);
    const Eigen::VectorXd z = filtered_column(obs);
    const Eigen::Index n = x.size() - 1;
    const double num = z.head(n).dot(x.tail(n));
    const double den = z.head(n).dot(x.head(n));
    return safe_log_ratio(num, den, obs.delta, "ou_closed_form_tilde");
}

double mle_hat(const ObservationSet& obs) {
    const Eigen::VectorXd& x = obs.x.col(0);
    const Eigen::Index n = x.size() - 1;
    const double den = obs.delta * x.head(n).squaredNorm();
    if (den == 0.0) throw std::runtime_error("mle_hat: zero denominator");
    return -x.head(n).dot(x.tail(n) - x.head(n)) / den;
}

double mle_tilde(const ObservationSet& obs) {
    const Eigen::VectorXd& x = obs.x.col(0);
    const Eigen::VectorXd z = filtered_column(obs);
    const Eigen::Index n = x.size() - 1;
    const double den = obs.delta * z.head(n).dot(x.head(n));
    if (den == 0.0) throw std::runtime_error("mle_tilde: zero denominator");
    return -z.head(n).dot(x.tail(n) - x.head(n)) / den;
}

double particles_closed_form(const ObservationSet& obs, bool filtered) {
    if (obs.dim() < 2) throw std::invalid_argument("particles_closed_form: d must be >= 2");
    ObservationSet summed;
    summed.delta = obs.delta;
    summed.x = obs.x.rowwise().sum();
    if (!filtered) return ou_closed_form_hat(summed);
    // The filter is linear, so the sum of filtered coordinates equals the
    // filtered coordinate sum.
    if (obs.z)
        summed.z = obs.z->rowwise().sum();
    else
        summed.z = filter_recurrent(summed.x.col(0), obs.delta);
    return ou_closed_form_tilde(summed);
}

}  // namespace homodrift
