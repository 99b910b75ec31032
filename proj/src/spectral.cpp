#include "homodrift/spectral.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace homodrift {

Mesh Mesh::uniform(double left, double right, int n_elems) {
    if (n_elems < 1 || right <= left) throw std::invalid_argument("Mesh::uniform: bad arguments");
    Mesh m;
    m.left = left;
    m.right = right;
    m.n_elems = n_elems;
    m.nodes = Eigen::VectorXd::LinSpaced(n_elems + 1, left, right);
    return m;
}

Mesh build_mesh(const ObservationSet* observations, double h_target, double R_floor) {
    double r_bar = 0.0;
    if (observations != nullptr) {
        if (!observations->x.allFinite() ||
            (observations->z && !observations->z->allFinite()))
            throw std::invalid_argument("build_mesh: nonfinite observations");
        r_bar = observations->x.cwiseAbs().maxCoeff();
        if (observations->z) r_bar = std::max(r_bar, observations->z->cwiseAbs().maxCoeff());
    }
    const double R = std::max(r_bar + 0.1, R_floor);
    const int n_elems = static_cast<int>(std::ceil(2.0 * R / h_target - 1e-12));
    return Mesh::uniform(-R, R, n_elems);
}

WeightedMatrices assemble(const Mesh& mesh, const Eigen::VectorXd& a, double Sigma,
                          const SlowPotential& V, int n_quad_per_elem) {
    if (n_quad_per_elem < 2 || n_quad_per_elem % 2 != 0)
        throw std::invalid_argument("assemble: n_quad_per_elem must be even and >= 2");
    if (a.size() != V.dim()) throw std::invalid_argument("assemble: dim(a) != dim(V)");

    const int n = mesh.n_nodes();
    const int nq = n_quad_per_elem;
    const double len = mesh.h();

    auto exponent = [&](double x) { return -V.dot_value(a, x) / Sigma; };

    // Rescale the weight by its maximum over the quadrature grid; a pure
    // scaling leaves the generalized eigenpairs invariant and avoids
    // overflow for strongly confining a.V.
    double shift = -std::numeric_limits<double>::infinity();
    for (int e = 0; e < mesh.n_elems; ++e)
        for (int q = 0; q <= nq; ++q)
            shift = std::max(shift, exponent(mesh.nodes[e] + q * len / nq));

    Eigen::MatrixXd S = Eigen::MatrixXd::Zero(n, n);
    Eigen::MatrixXd M = Eigen::MatrixXd::Zero(n, n);

    const double qh = len / nq;
    for (int e = 0; e < mesh.n_elems; ++e) {
        const double xl = mesh.nodes[e];
        double w_int = 0.0;      // int w
        double m_ll = 0.0, m_lr = 0.0, m_rr = 0.0;
        for (int q = 0; q <= nq; ++q) {
            const double x = xl + q * qh;
            const double w = std::exp(exponent(x) - shift);
            const double sw = (q == 0 || q == nq) ? 1.0 : (q % 2 == 1 ? 4.0 : 2.0);
            const double c = sw * qh / 3.0;
            const double pl = 1.0 - static_cast<double>(q) / nq;  // left hat on the element
            const double pr = static_cast<double>(q) / nq;
            w_int += c * w;
            m_ll += c * w * pl * pl;
            m_lr += c * w * pl * pr;
            m_rr += c * w * pr * pr;
        }
        const double s_diag = Sigma * w_int / (len * len);
        S(e, e) += s_diag;
        S(e + 1, e + 1) += s_diag;
        S(e, e + 1) -= s_diag;
        S(e + 1, e) -= s_diag;
        M(e, e) += m_ll;
        M(e, e + 1) += m_lr;
        M(e + 1, e) += m_lr;
        M(e + 1, e + 1) += m_rr;
    }

    return {std::move(S), std::move(M), shift};
}

SpectralBasis solve_eigenpairs(const WeightedMatrices& W, int J, const Mesh& mesh,
                               const Eigen::VectorXd& a, double Sigma) {
    const int n = static_cast<int>(W.M.rows());
    if (J < 1) throw std::invalid_argument("solve_eigenpairs: J must be >= 1");
    if (J + 1 > n) throw std::invalid_argument("solve_eigenpairs: J + 1 must not exceed n_nodes");

    Eigen::LLT<Eigen::MatrixXd> llt(W.M);
    if (llt.info() != Eigen::Success)
        throw std::runtime_error("solve_eigenpairs: mass matrix is not positive definite");

    // Reduce S theta = lambda M theta to the standard symmetric problem
    // (L^-1 S L^-T) y = lambda y with M = L L^T.
    const Eigen::MatrixXd L = llt.matrixL();
    Eigen::MatrixXd C = L.triangularView<Eigen::Lower>().solve(W.S);
    Eigen::MatrixXd B = L.triangularView<Eigen::Lower>().solve(C.transpose());
    B = 0.5 * (B + B.transpose()).eval();

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(B);
    if (es.info() != Eigen::Success) throw std::runtime_error("solve_eigenpairs: eigensolver failed");

    const Eigen::VectorXd& evals = es.eigenvalues();
    const double tau0 = 1e-8 * evals.cwiseAbs().maxCoeff();

    Eigen::VectorXd lambdas(J);
    Eigen::MatrixXd thetas(n, J);
    int found = 0;
    for (int i = 0; i < n && found < J; ++i) {
        if (evals[i] <= tau0) continue;
        Eigen::VectorXd theta =
            L.transpose().triangularView<Eigen::Upper>().solve(es.eigenvectors().col(i));
        theta /= std::sqrt(theta.dot(W.M * theta));
        if (theta[n - 1] < 0.0) theta = -theta;

        const Eigen::VectorXd mtheta = W.M * theta;
        const double residual = (W.S * theta - evals[i] * mtheta).norm();
        if (residual > 1e-8 * mtheta.norm())
            throw std::runtime_error("solve_eigenpairs: residual too large for eigenvalue " +
                                     std::to_string(evals[i]));

        lambdas[found] = evals[i];
        thetas.col(found) = theta;
        ++found;
    }
    if (found < J)
        throw std::runtime_error("solve_eigenpairs: fewer than J eigenvalues above the zero mode");

    return SpectralBasis(mesh, std::move(lambdas), std::move(thetas), a, Sigma);
}

SpectralBasis solve_generator_eigenpairs(const Mesh& mesh, const Eigen::VectorXd& a, double Sigma,
                                         const SlowPotential& V, int J, int n_quad_per_elem) {
    return solve_eigenpairs(assemble(mesh, a, Sigma, V, n_quad_per_elem), J, mesh, a, Sigma);
}

double SpectralBasis::eval(int j, double x) const {
    const int n = mesh_.n_nodes();
    const Eigen::Index col = j - 1;
    if (x <= mesh_.left) {
        if (x < mesh_.left) clamp_count_->fetch_add(1, std::memory_order_relaxed);
        return thetas_(0, col);
    }
    if (x >= mesh_.right) {
        if (x > mesh_.right) clamp_count_->fetch_add(1, std::memory_order_relaxed);
        return thetas_(n - 1, col);
    }
    const double h = mesh_.h();
    int e = static_cast<int>((x - mesh_.left) / h);
    if (e >= mesh_.n_elems) e = mesh_.n_elems - 1;
    const double t = (x - mesh_.nodes[e]) / h;
    return (1.0 - t) * thetas_(e, col) + t * thetas_(e + 1, col);
}

OuEigenSystem ou_eigen_analytic(double a, double Sigma, int J) {
    if (a <= 0.0) throw std::invalid_argument("ou_eigen_analytic: a must be positive");
    if (J < 1) throw std::invalid_argument("ou_eigen_analytic: J must be >= 1");

    OuEigenSystem sys;
    sys.lambdas = Eigen::VectorXd::LinSpaced(J, a, J * a);
    sys.phi.reserve(J);

    // phi_{j+1} = x phi_j - j (Sigma/a) phi_{j-1}, phi_0 = 1, phi_1 = x.
    Polynomial prev({1.0});
    Polynomial cur({0.0, 1.0});
    sys.phi.push_back(cur);
    for (int j = 1; j < J; ++j) {
        std::vector<double> next(static_cast<std::size_t>(cur.degree()) + 2, 0.0);
        for (int k = 0; k <= cur.degree(); ++k) next[static_cast<std::size_t>(k) + 1] += cur.coeff(k);
        const double c = j * Sigma / a;
        for (int k = 0; k <= prev.degree(); ++k) next[static_cast<std::size_t>(k)] -= c * prev.coeff(k);
        prev = cur;
        cur = Polynomial(std::move(next));
        sys.phi.push_back(cur);
    }
    return sys;
}

}  // namespace homodrift
