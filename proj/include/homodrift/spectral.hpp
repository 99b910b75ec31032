#pragma once

#include "homodrift/potentials.hpp"
#include "homodrift/simulate.hpp"

#include <Eigen/Core>

#include <atomic>
#include <memory>
#include <vector>

namespace homodrift {

// Uniform mesh on [-R, R] (an arbitrary interval is allowed for tests).
struct Mesh {
    double left = 0.0;
    double right = 0.0;
    int n_elems = 0;
    Eigen::VectorXd nodes;

    static Mesh uniform(double left, double right, int n_elems);

    double R() const { return right; }
    double h() const { return (right - left) / n_elems; }
    int n_nodes() const { return n_elems + 1; }
};

// P1 stiffness and mass matrices weighted by the unnormalized invariant
// density exp(-a.V(x)/Sigma). Matrices are tridiagonal; stored dense since
// meshes are tiny.
struct WeightedMatrices {
    Eigen::MatrixXd S;
    Eigen::MatrixXd M;
    double log_weight_shift = 0.0;  // weight was multiplied by exp(-shift)
};

// First J eigenpairs of the generator at parameter a, nodal P1 coefficients,
// M-normalized with positive last coefficient, eigenvalues ascending and
// strictly above the zero mode.
class SpectralBasis {
public:
    SpectralBasis(Mesh mesh, Eigen::VectorXd lambdas, Eigen::MatrixXd thetas,
                  Eigen::VectorXd a, double Sigma)
        : mesh_(std::move(mesh)), lambdas_(std::move(lambdas)), thetas_(std::move(thetas)),
          a_(std::move(a)), Sigma_(Sigma), clamp_count_(std::make_shared<std::atomic<long>>(0)) {}

    int J() const { return static_cast<int>(lambdas_.size()); }
    double lambda(int j) const { return lambdas_[j - 1]; }
    const Eigen::VectorXd& lambdas() const { return lambdas_; }
    Eigen::VectorXd theta(int j) const { return thetas_.col(j - 1); }
    const Eigen::MatrixXd& thetas() const { return thetas_; }
    const Mesh& mesh() const { return mesh_; }
    const Eigen::VectorXd& a() const { return a_; }
    double Sigma() const { return Sigma_; }

    // P1 interpolation of eigenfunction j (1-based); outside the mesh the
    // boundary value is used and a clamp is counted.
    double eval(int j, double x) const;
    long clamp_count() const { return clamp_count_->load(); }

private:
    Mesh mesh_;
    Eigen::VectorXd lambdas_;
    Eigen::MatrixXd thetas_;  // n_nodes x J
    Eigen::VectorXd a_;
    double Sigma_;
    std::shared_ptr<std::atomic<long>> clamp_count_;
};

// Truncation rule: R_bar = max |observation| (x and z), R = max(R_bar + 0.1, R_floor).
Mesh build_mesh(const ObservationSet* observations, double h_target = 0.05,
                double R_floor = 1.7);

WeightedMatrices assemble(const Mesh& mesh, const Eigen::VectorXd& a, double Sigma,
                          const SlowPotential& V, int n_quad_per_elem = 2);

SpectralBasis solve_eigenpairs(const WeightedMatrices& W, int J, const Mesh& mesh,
                               const Eigen::VectorXd& a, double Sigma);

// Convenience: assemble + solve.
SpectralBasis solve_generator_eigenpairs(const Mesh& mesh, const Eigen::VectorXd& a, double Sigma,
                                         const SlowPotential& V, int J, int n_quad_per_elem = 2);

// Closed-form eigensystem of the OU generator (quadratic V, scalar a):
// lambda_j = j a, monic Hermite-type polynomials with variance Sigma/a.
struct OuEigenSystem {
    std::vector<Polynomial> phi;  // phi[0] = phi_1, ..., phi[J-1] = phi_J
    Eigen::VectorXd lambdas;
};

OuEigenSystem ou_eigen_analytic(double a, double Sigma, int J);

}  // namespace homodrift
