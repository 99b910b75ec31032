#pragma once

#include "homodrift/estimate.hpp"
#include "homodrift/homogenize.hpp"
#include "homodrift/potentials.hpp"
#include "homodrift/simulate.hpp"

#include <json.hpp>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace homodrift {

struct DeltaSpec {
    enum class Kind { Absolute, ZetaEps, Dyadic };
    Kind kind = Kind::Absolute;
    std::vector<double> values{1.0};

    double delta_for(double value, double epsilon) const;
};

struct ExperimentConfig {
    // "multiscale" (default), "homogenized" (simulate the effective SDE
    // directly) or "particles".
    std::string dynamics = "multiscale";
    MultiscaleModel model;
    double theta = 1.0;  // particle coupling
    int d = 2;           // particle count

    double T = 400.0;
    DeltaSpec delta_spec;
    std::vector<int> Js{1};
    std::string beta_spec = "identity";
    int n_rep = 15;
    std::uint64_t master_seed = 0;
    std::vector<std::string> estimators{"hat"};
    double h = 0.0;  // 0 means epsilon^3
    double mesh_h = 0.1;
    double R_floor = 1.7;
    double tol_score = 1e-8;
    std::optional<Eigen::VectorXd> a0;

    double h_used() const;

    static ExperimentConfig from_json(const nlohmann::json& j);
    nlohmann::json to_json() const;
};

struct GridPointResult {
    double grid_value = 0.0;  // the raw delta-spec value (zeta, exponent or delta)
    double delta = 0.0;
    int J = 1;
    std::string estimator;
    std::vector<Eigen::VectorXd> estimates;  // per replication; empty on failure
    std::vector<std::string> failures;       // failure messages, "" when ok
    Eigen::VectorXd mean;
    Eigen::VectorXd stddev;
    double mean_abs_error = 0.0;    // mean over replications of |A - a_r|_2
    double median_abs_error = 0.0;
    int n_fail = 0;
    bool flagged = false;  // more than 50% failures
};

struct ExperimentResult {
    std::vector<GridPointResult> points;
    Eigen::VectorXd A_true;
    double Sigma = 0.0;
    double h_used = 0.0;
    std::uint64_t config_hash = 0;
};

std::uint64_t config_hash(const ExperimentConfig& cfg);

ExperimentResult run_experiment(const ExperimentConfig& cfg, int n_threads = 1);

ExperimentResult sweep_zeta(ExperimentConfig cfg, const std::vector<double>& zetas,
                            int n_threads = 1);
ExperimentResult sweep_J(ExperimentConfig cfg, const std::vector<int>& Js, int n_threads = 1);

// Bistable two-parameter protocol: one long path per replication, the
// estimator evaluated on observation prefixes of growing length.
struct Table1Row {
    int N = 0;
    double mean_abs_error = 0.0;
    double median_abs_error = 0.0;
    std::vector<double> errors;  // per replication (NaN on failure)
    int n_fail = 0;
};

std::vector<Table1Row> table1_protocol(const ExperimentConfig& cfg,
                                       const std::vector<int>& Ns, int n_threads = 1);

// CSV/JSON emission. Files carry the config hash and are written atomically.
void write_aggregate_csv(const std::string& path, const ExperimentResult& result);
void write_replications_csv(const std::string& path, const ExperimentResult& result);
void write_table1_csv(const std::string& path, const std::vector<Table1Row>& rows,
                      std::uint64_t cfg_hash);

// Reloads a replications CSV, rejecting it when the hash does not match,
// and recomputes the per-point aggregates from the stored values.
ExperimentResult load_replications_csv(const std::string& path, std::uint64_t expected_hash);

bool any_flagged(const ExperimentResult& result);

}  // namespace homodrift
