#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "homodrift/spectral.hpp"

#include <Eigen/Cholesky>

#include <cmath>

using namespace homodrift;

namespace {

Eigen::VectorXd vec1(double a) { return Eigen::VectorXd::Constant(1, a); }

Mesh mesh_R(double R, double h) {
    return Mesh::uniform(-R, R, static_cast<int>(std::llround(2.0 * R / h)));
}

}  // namespace

TEST_CASE("mesh construction and truncation rule") {
    const Mesh m0 = build_mesh(nullptr, 0.1, 1.7);
    CHECK(m0.R() == doctest::Approx(1.7));
    CHECK(m0.n_elems == 34);
    CHECK(m0.h() == doctest::Approx(0.1).epsilon(1e-12));

    ObservationSet obs;
    obs.delta = 1.0;
    obs.x = Eigen::MatrixXd::Zero(3, 1);
    obs.x << 0.1, -2.3, 1.0;
    obs.z = Eigen::MatrixXd::Zero(3, 1);
    (*obs.z) << 0.0, 1.1, -0.4;
    const Mesh m1 = build_mesh(&obs, 0.1, 1.7);
    CHECK(m1.R() == doctest::Approx(2.4).epsilon(1e-12));

    // uniform nodes to 1e-12
    for (int i = 0; i < m1.n_elems; ++i)
        CHECK(m1.nodes[i + 1] - m1.nodes[i] == doctest::Approx(m1.h()).epsilon(1e-12));

    obs.x(1, 0) = std::nan("");
    CHECK_THROWS(build_mesh(&obs, 0.1, 1.7));
}

TEST_CASE("single element with constant weight gives the textbook matrices") {
    // Custom zero potential makes the weight exp(0) = 1.
    const SlowPotential flat = SlowPotential::custom({Polynomial({0.0})});
    const Mesh m = Mesh::uniform(-0.5, 0.5, 1);
    const double Sigma = 1.3;
    const WeightedMatrices W = assemble(m, vec1(1.0), Sigma, flat, 4);
    CHECK(W.M(0, 0) == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
    CHECK(W.M(0, 1) == doctest::Approx(1.0 / 6.0).epsilon(1e-12));
    CHECK(W.M(1, 1) == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
    CHECK(W.S(0, 0) == doctest::Approx(Sigma).epsilon(1e-12));
    CHECK(W.S(0, 1) == doctest::Approx(-Sigma).epsilon(1e-12));
}

TEST_CASE("assembled matrices: symmetry, PSD structure, null space") {
    const Mesh m = mesh_R(3.0, 0.1);
    const WeightedMatrices W = assemble(m, vec1(1.0), 1.0, SlowPotential::quadratic());
    CHECK((W.S - W.S.transpose()).cwiseAbs().maxCoeff() <= 1e-12);
    CHECK((W.M - W.M.transpose()).cwiseAbs().maxCoeff() <= 1e-12);
    // constants are in the null space of S
    const Eigen::VectorXd ones = Eigen::VectorXd::Ones(m.n_nodes());
    CHECK((W.S * ones).cwiseAbs().maxCoeff() <= 1e-10 * W.S.cwiseAbs().maxCoeff());
    // M positive definite
    Eigen::LLT<Eigen::MatrixXd> llt(W.M);
    CHECK(llt.info() == Eigen::Success);
}

TEST_CASE("FEM eigenvalues match the OU analytic spectrum") {
    const Mesh m = mesh_R(6.0, 0.05);
    for (double a : {0.5, 1.0, 2.0}) {
        const SpectralBasis basis = solve_generator_eigenpairs(m, vec1(a), 1.0,
                                                               SlowPotential::quadratic(), 3);
        for (int j = 1; j <= 3; ++j)
            CHECK(std::abs(basis.lambda(j) - j * a) <= 0.03 * j * a);
        CHECK(basis.lambda(1) < basis.lambda(2));
        CHECK(basis.lambda(2) < basis.lambda(3));
    }
}

TEST_CASE("normalization, sign and residual invariants") {
    const Mesh m = mesh_R(6.0, 0.05);
    const Eigen::VectorXd a = vec1(1.0);
    const WeightedMatrices W = assemble(m, a, 1.0, SlowPotential::quadratic());
    const SpectralBasis basis = solve_eigenpairs(W, 3, m, a, 1.0);
    for (int j = 1; j <= 3; ++j) {
        const Eigen::VectorXd theta = basis.theta(j);
        CHECK(std::abs(theta.dot(W.M * theta) - 1.0) <= 1e-10);
        CHECK(theta[theta.size() - 1] > 0.0);
        const Eigen::VectorXd mtheta = W.M * theta;
        CHECK((W.S * theta - basis.lambda(j) * mtheta).norm() <= 1e-8 * mtheta.norm());
    }
}

TEST_CASE("mesh refinement improves lambda_1 by at least 3x") {
    // The reference is a much finer mesh on the same domain, so the fixed
    // truncation error at R cancels and only the mesh error remains.  phi_1
    // is linear and lives in every P1 space, so its mesh error drops below
    // solver noise very quickly; compare at coarse h where it is resolvable.
    const Eigen::VectorXd a = vec1(1.0);
    auto lam = [&](double h, int j) {
        return solve_generator_eigenpairs(mesh_R(6.0, h), a, 1.0, SlowPotential::quadratic(), j)
            .lambda(j);
    };
    const double ref1 = lam(0.025, 1);
    const double e_coarse = std::abs(lam(0.4, 1) - ref1);
    const double e_fine = std::abs(lam(0.2, 1) - ref1);
    CHECK(e_coarse >= 3.0 * e_fine);

    // Second eigenvalue stays in the O(h^2) regime down to fine meshes.
    const double e2_coarse = std::abs(lam(0.1, 2) - 2.0);
    const double e2_fine = std::abs(lam(0.05, 2) - 2.0);
    CHECK(e2_coarse >= 3.0 * e2_fine);
}

TEST_CASE("weight rescaling leaves the eigenpairs invariant") {
    // Adding a constant to the potential multiplies the weight by a positive
    // constant; eigenvalues and M-normalized vectors must not move.
    const Mesh m = mesh_R(4.0, 0.1);
    const Eigen::VectorXd a = vec1(1.0);
    const SlowPotential base = SlowPotential::quadratic();
    const SlowPotential shifted = SlowPotential::custom({Polynomial({7.5, 0.0, 0.5})});
    const SpectralBasis b0 = solve_generator_eigenpairs(m, a, 1.0, base, 3);
    const SpectralBasis b1 = solve_generator_eigenpairs(m, a, 1.0, shifted, 3);
    for (int j = 1; j <= 3; ++j) {
        CHECK(std::abs(b0.lambda(j) - b1.lambda(j)) <= 1e-10 * std::max(1.0, b0.lambda(j)));
        const double dev = std::min((b0.theta(j) - b1.theta(j)).norm(),
                                    (b0.theta(j) + b1.theta(j)).norm());
        CHECK(dev <= 1e-8);
    }
}

TEST_CASE("eigenfunction evaluation: nodal, midpoint, clamping, linearity") {
    const Mesh m = mesh_R(2.0, 0.1);
    const SpectralBasis basis = solve_generator_eigenpairs(m, vec1(1.0), 1.0,
                                                           SlowPotential::quadratic(), 2);
    const Eigen::VectorXd th = basis.theta(1);
    CHECK(basis.eval(1, m.nodes[5]) == doctest::Approx(th[5]).epsilon(1e-12));
    const double mid = 0.5 * (m.nodes[5] + m.nodes[6]);
    CHECK(basis.eval(1, mid) == doctest::Approx(0.5 * (th[5] + th[6])).epsilon(1e-12));

    const long clamps_before = basis.clamp_count();
    CHECK(basis.eval(1, 100.0) == doctest::Approx(th[th.size() - 1]));
    CHECK(basis.clamp_count() == clamps_before + 1);
}

TEST_CASE("phi_1 of the OU generator is nearly linear") {
    const Mesh m = mesh_R(6.0, 0.05);
    const SpectralBasis basis = solve_generator_eigenpairs(m, vec1(1.0), 1.0,
                                                           SlowPotential::quadratic(), 1);
    // Best-fit slope through the origin on [-2, 2].
    double sxy = 0.0, sxx = 0.0;
    for (double x = -2.0; x <= 2.0; x += 0.05) {
        sxy += x * basis.eval(1, x);
        sxx += x * x;
    }
    const double c = sxy / sxx;
    CHECK(c > 0.0);
    double max_rel = 0.0;
    for (double x = -2.0; x <= 2.0; x += 0.05)
        max_rel = std::max(max_rel, std::abs(basis.eval(1, x) - c * x) / (std::abs(c) * 2.0));
    CHECK(max_rel < 0.02);
}

TEST_CASE("analytic OU eigensystem") {
    CHECK_THROWS(ou_eigen_analytic(0.0, 1.0, 1));
    CHECK_THROWS(ou_eigen_analytic(-1.0, 1.0, 1));

    const OuEigenSystem sys = ou_eigen_analytic(1.0, 1.0, 3);
    CHECK(sys.lambdas[0] == doctest::Approx(1.0));
    CHECK(sys.lambdas[1] == doctest::Approx(2.0));
    CHECK(sys.lambdas[2] == doctest::Approx(3.0));
    // phi_2 = x^2 - 1, phi_3 = x^3 - 3x
    CHECK(sys.phi[1](2.0) == doctest::Approx(3.0));
    CHECK(sys.phi[1](0.0) == doctest::Approx(-1.0));
    CHECK(sys.phi[2](2.0) == doctest::Approx(2.0));
    // derivative identity phi_j' = j phi_{j-1}
    const Polynomial d2 = sys.phi[1].derivative();
    for (double x : {-1.5, 0.3, 2.0})
        CHECK(d2(x) == doctest::Approx(2.0 * sys.phi[0](x)).epsilon(1e-12));

    // general Sigma/a scaling: phi_2 = x^2 - Sigma/a
    const OuEigenSystem sys2 = ou_eigen_analytic(2.0, 0.5, 2);
    CHECK(sys2.lambdas[1] == doctest::Approx(4.0));
    CHECK(sys2.phi[1](0.0) == doctest::Approx(-0.25));
}

TEST_CASE("FEM eigenfunctions match the analytic polynomials in weighted L2") {
    // Compare the M-normalized FEM vector with the analytic polynomial
    // normalized in the same discrete M inner product.
    const Mesh m = mesh_R(6.0, 0.05);
    const Eigen::VectorXd a = vec1(1.0);
    const WeightedMatrices W = assemble(m, a, 1.0, SlowPotential::quadratic());
    const SpectralBasis basis = solve_eigenpairs(W, 3, m, a, 1.0);
    const OuEigenSystem sys = ou_eigen_analytic(1.0, 1.0, 3);
    for (int j = 1; j <= 3; ++j) {
        Eigen::VectorXd nodal(m.n_nodes());
        for (int i = 0; i < m.n_nodes(); ++i) nodal[i] = sys.phi[static_cast<std::size_t>(j - 1)](m.nodes[i]);
        nodal /= std::sqrt(nodal.dot(W.M * nodal));
        if (nodal[nodal.size() - 1] < 0.0) nodal = -nodal;
        const Eigen::VectorXd diff = nodal - basis.theta(j);
        CHECK(std::sqrt(diff.dot(W.M * diff)) <= 0.03);
    }
}

TEST_CASE("solver rejects bad requests") {
    const Mesh m = mesh_R(2.0, 0.5);
    const WeightedMatrices W = assemble(m, vec1(1.0), 1.0, SlowPotential::quadratic());
    CHECK_THROWS(solve_eigenpairs(W, 0, m, vec1(1.0), 1.0));
    CHECK_THROWS(solve_eigenpairs(W, m.n_nodes(), m, vec1(1.0), 1.0));
    CHECK_THROWS(assemble(m, vec1(1.0), 1.0, SlowPotential::quadratic(), 3));
    CHECK_THROWS(assemble(m, Eigen::VectorXd::Ones(2), 1.0, SlowPotential::quadratic()));
}

TEST_CASE("overflow guard: huge constant offset in the exponent is absorbed") {
    // V(x) = x^2/2 - 720 makes the unshifted weight exp(720 - x^2/2)
    // overflow everywhere on the mesh; the rescale must absorb it without
    // changing the spectrum.
    const Mesh m = mesh_R(3.0, 0.1);
    const SlowPotential shifted = SlowPotential::custom({Polynomial({-720.0, 0.0, 0.5})});
    const WeightedMatrices W = assemble(m, vec1(1.0), 1.0, shifted);
    CHECK(W.log_weight_shift > 700.0);
    CHECK(W.S.allFinite());
    CHECK(W.M.allFinite());
    const SpectralBasis basis = solve_eigenpairs(W, 1, m, vec1(1.0), 1.0);
    const SpectralBasis plain =
        solve_generator_eigenpairs(m, vec1(1.0), 1.0, SlowPotential::quadratic(), 1);
    CHECK(basis.lambda(1) == doctest::Approx(plain.lambda(1)).epsilon(1e-10));
}
