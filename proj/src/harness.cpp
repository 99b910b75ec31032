#include "homodrift/harness.hpp"

#include "homodrift/filterbank.hpp"
#include "homodrift/rng.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <thread>

namespace homodrift {

using nlohmann::json;

double DeltaSpec::delta_for(double value, double epsilon) const {
    switch (kind) {
        case Kind::Absolute: return value;
        case Kind::ZetaEps: return std::pow(epsilon, value);
        case Kind::Dyadic: return std::pow(2.0, value);
    }
    throw std::logic_error("DeltaSpec: unknown kind");
}

double ExperimentConfig::h_used() const {
    return h > 0.0 ? h : std::pow(model.epsilon, 3);
}

ExperimentConfig ExperimentConfig::from_json(const json& j) {
    ExperimentConfig cfg;
    cfg.dynamics = j.value("dynamics", std::string("multiscale"));

    const json& m = j.at("model");
    const auto alpha = m.at("alpha").get<std::vector<double>>();
    cfg.model.alpha = Eigen::Map<const Eigen::VectorXd>(alpha.data(),
                                                        static_cast<Eigen::Index>(alpha.size()));
    cfg.model.sigma = m.at("sigma").get<double>();
    cfg.model.epsilon = m.value("epsilon", 0.1);
    const json& pot = m.at("potential");
    std::vector<std::string> slow;
    if (pot.at("slow").is_string())
        slow.push_back(pot.at("slow").get<std::string>());
    else
        slow = pot.at("slow").get<std::vector<std::string>>();
    cfg.model.V = parse_slow_potential(slow);
    cfg.model.p = parse_fast_potential(pot.value("fast", std::string("cos")),
                                       pot.value("period", 2.0 * M_PI));

    cfg.theta = j.value("theta", 1.0);
    cfg.d = j.value("d", 2);
    cfg.T = j.at("T").get<double>();

    const json& ds = j.at("delta");
    auto read_values = [](const json& v) {
        return v.is_array() ? v.get<std::vector<double>>() : std::vector<double>{v.get<double>()};
    };
    if (ds.contains("absolute")) {
        cfg.delta_spec = {DeltaSpec::Kind::Absolute, read_values(ds.at("absolute"))};
    } else if (ds.contains("zeta")) {
        cfg.delta_spec = {DeltaSpec::Kind::ZetaEps, read_values(ds.at("zeta"))};
    } else if (ds.contains("dyadic")) {
        cfg.delta_spec = {DeltaSpec::Kind::Dyadic, read_values(ds.at("dyadic"))};
    } else {
        throw std::invalid_argument("config: delta must contain absolute, zeta or dyadic");
    }
    if (cfg.delta_spec.values.empty()) throw std::invalid_argument("config: empty delta list");

    if (j.contains("J")) {
        cfg.Js = j.at("J").is_array() ? j.at("J").get<std::vector<int>>()
                                      : std::vector<int>{j.at("J").get<int>()};
    }
    if (cfg.Js.empty()) throw std::invalid_argument("config: empty J list");
    cfg.beta_spec = j.value("beta", std::string("identity"));
    cfg.n_rep = j.value("n_rep", 15);
    if (cfg.n_rep < 1) throw std::invalid_argument("config: n_rep must be >= 1");
    cfg.master_seed = j.value("master_seed", static_cast<std::uint64_t>(0));
    if (j.contains("estimators")) cfg.estimators = j.at("estimators").get<std::vector<std::string>>();
    cfg.h = j.value("h", 0.0);
    cfg.mesh_h = j.value("mesh_h", 0.1);
    cfg.R_floor = j.value("R_floor", 1.7);
    cfg.tol_score = j.value("tol_score", 1e-8);
    if (j.contains("a0")) {
        const auto a0 = j.at("a0").get<std::vector<double>>();
        cfg.a0 = Eigen::Map<const Eigen::VectorXd>(a0.data(), static_cast<Eigen::Index>(a0.size()));
    }
    return cfg;
}

json ExperimentConfig::to_json() const {
    json pot;
    // Canonical serialization; used for hashing, so fields are emitted
    // unconditionally.
    std::vector<std::string> slow;
    for (int i = 0; i < model.V.dim(); ++i) {
        std::ostringstream os;
        os << "poly:";
        const auto& c = model.V.component(i).coeffs();
        for (std::size_t k = 0; k < c.size(); ++k) os << (k ? "," : "") << std::setprecision(17) << c[k];
        slow.push_back(os.str());
    }
    pot["slow"] = slow;
    pot["fast"] = model.p.is_zero() ? "zero" : "cos";
    pot["period"] = model.p.period();

    json j;
    j["dynamics"] = dynamics;
    j["model"] = {{"alpha", std::vector<double>(model.alpha.data(), model.alpha.data() + model.alpha.size())},
                  {"sigma", model.sigma},
                  {"epsilon", model.epsilon},
                  {"potential", pot}};
    j["theta"] = theta;
    j["d"] = d;
    j["T"] = T;
    switch (delta_spec.kind) {
        case DeltaSpec::Kind::Absolute: j["delta"] = {{"absolute", delta_spec.values}}; break;
        case DeltaSpec::Kind::ZetaEps: j["delta"] = {{"zeta", delta_spec.values}}; break;
        case DeltaSpec::Kind::Dyadic: j["delta"] = {{"dyadic", delta_spec.values}}; break;
    }
    j["J"] = Js;
    j["beta"] = beta_spec;
    j["n_rep"] = n_rep;
    j["master_seed"] = master_seed;
    j["estimators"] = estimators;
    j["h"] = h;
    j["mesh_h"] = mesh_h;
    j["R_floor"] = R_floor;
    j["tol_score"] = tol_score;
    if (a0) j["a0"] = std::vector<double>(a0->data(), a0->data() + a0->size());
    return j;
}

std::uint64_t config_hash(const ExperimentConfig& cfg) {
    const std::string s = cfg.to_json().dump();
    std::uint64_t h = 0xCBF29CE484222325ULL;  // FNV-1a
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001B3ULL;
    }
    return h;
}

namespace {

struct RepOutcome {
    Eigen::VectorXd estimate;
    std::string failure;  // empty on success
};

bool needs_filter(const std::vector<std::string>& estimators) {
    for (const auto& e : estimators)
        if (e == "tilde" || e == "mle_tilde" || e == "closed_form_tilde" || e == "closed_form")
            return true;
    return false;
}

std::vector<std::string> expand_estimators(std::vector<std::string> names) {
    std::vector<std::string> out;
    for (auto& n : names) {
        if (n == "closed_form") {
            out.push_back("closed_form_hat");
            out.push_back("closed_form_tilde");
        } else {
            out.push_back(n);
        }
    }
    return out;
}

Eigen::VectorXd scalar_vec(double v) {
    Eigen::VectorXd out(1);
    out[0] = v;
    return out;
}

RepOutcome run_one_estimator(const ExperimentConfig& cfg, const ObservationSet& obs,
                             const std::string& estimator, int J, double Sigma) {
    RepOutcome out;
    try {
        if (cfg.dynamics == "particles") {
            if (estimator == "closed_form_hat")
                out.estimate = scalar_vec(particles_closed_form(obs, false));
            else if (estimator == "closed_form_tilde")
                out.estimate = scalar_vec(particles_closed_form(obs, true));
            else
                throw std::invalid_argument("particles support only closed-form estimators");
            return out;
        }
        if (estimator == "closed_form_hat") {
            out.estimate = scalar_vec(ou_closed_form_hat(obs));
        } else if (estimator == "closed_form_tilde") {
            out.estimate = scalar_vec(ou_closed_form_tilde(obs));
        } else if (estimator == "mle_hat") {
            out.estimate = scalar_vec(mle_hat(obs));
        } else if (estimator == "mle_tilde") {
            out.estimate = scalar_vec(mle_tilde(obs));
        } else if (estimator == "hat" || estimator == "tilde") {
            ScoreContext ctx;
            ctx.obs = obs;
            ctx.J = J;
            ctx.beta = BetaFamily::parse(cfg.beta_spec, J, cfg.model.V.dim());
            ctx.Sigma = Sigma;
            ctx.V = cfg.model.V;
            ctx.use_filter = (estimator == "tilde");
            ctx.mesh_h = cfg.mesh_h;
            ctx.R_floor = cfg.R_floor;
            ctx.tol_score = cfg.tol_score;
            ctx.prepare();
            const Eigen::VectorXd a0 =
                cfg.a0 ? *cfg.a0 : Eigen::VectorXd::Ones(cfg.model.V.dim());
            const EstimatorResult res = solve_estimator(ctx, a0);
            if (!res.converged) throw std::runtime_error("estimator did not converge");
            out.estimate = res.a_hat;
        } else {
            throw std::invalid_argument("unknown estimator: " + estimator);
        }
    } catch (const std::exception& ex) {
        out.failure = ex.what();
    }
    return out;
}

void parallel_for(int n_tasks, int n_threads, const std::function<void(int)>& fn) {
    if (n_threads <= 1 || n_tasks <= 1) {
        for (int i = 0; i < n_tasks; ++i) fn(i);
        return;
    }
    std::atomic<int> next{0};
    std::vector<std::thread> workers;
    const int n = std::min(n_threads, n_tasks);
    workers.reserve(static_cast<std::size_t>(n));
    for (int w = 0; w < n; ++w) {
        workers.emplace_back([&]() {
            for (int i = next.fetch_add(1); i < n_tasks; i = next.fetch_add(1)) fn(i);
        });
    }
    for (auto& t : workers) t.join();
}

double median_of(std::vector<double> v) {
    if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

void aggregate_point(GridPointResult& pt, const Eigen::VectorXd& A_true) {
    const int n_rep = static_cast<int>(pt.estimates.size());
    int n_ok = 0;
    Eigen::VectorXd sum, sumsq;
    std::vector<double> errors;
    for (int r = 0; r < n_rep; ++r) {
        if (!pt.failures[static_cast<std::size_t>(r)].empty()) continue;
        const Eigen::VectorXd& a = pt.estimates[static_cast<std::size_t>(r)];
        if (n_ok == 0) {
            sum = Eigen::VectorXd::Zero(a.size());
            sumsq = Eigen::VectorXd::Zero(a.size());
        }
        sum += a;
        sumsq += a.cwiseProduct(a);
        const Eigen::Index k = std::min(a.size(), A_true.size());
        errors.push_back((A_true.head(k) - a.head(k)).norm());
        ++n_ok;
    }
    pt.n_fail = n_rep - n_ok;
    pt.flagged = pt.n_fail * 2 > n_rep;
    if (n_ok > 0) {
        pt.mean = sum / n_ok;
        Eigen::VectorXd var = (sumsq / n_ok - pt.mean.cwiseProduct(pt.mean)).cwiseMax(0.0);
        pt.stddev = var.cwiseSqrt();
        pt.mean_abs_error = 0.0;
        for (double e : errors) pt.mean_abs_error += e;
        pt.mean_abs_error /= static_cast<double>(n_ok);
        pt.median_abs_error = median_of(errors);
    } else {
        pt.mean = Eigen::VectorXd();
        pt.stddev = Eigen::VectorXd();
        pt.mean_abs_error = std::numeric_limits<double>::quiet_NaN();
        pt.median_abs_error = std::numeric_limits<double>::quiet_NaN();
    }
}

}  // namespace

ExperimentResult run_experiment(const ExperimentConfig& cfg, int n_threads) {
    ExperimentResult result;
    result.config_hash = config_hash(cfg);

    const double K = cfg.model.p.is_zero() ? 1.0 : compute_K(cfg.model.p, cfg.model.sigma);
    const double Sigma = K * cfg.model.sigma;
    result.A_true = cfg.dynamics == "homogenized" ? cfg.model.alpha
                                                  : Eigen::VectorXd(K * cfg.model.alpha);
    result.Sigma = cfg.dynamics == "homogenized" ? cfg.model.sigma : Sigma;
    result.h_used = cfg.h_used();

    const std::vector<std::string> estimators = expand_estimators(cfg.estimators);
    const bool filter = needs_filter(cfg.estimators);
    const int n_grid = static_cast<int>(cfg.delta_spec.values.size());
    const int n_rep = cfg.n_rep;

    // outcomes[grid][rep][J][estimator]
    std::vector<std::vector<std::vector<std::vector<RepOutcome>>>> outcomes(
        static_cast<std::size_t>(n_grid));
    for (auto& g : outcomes)
        g.assign(static_cast<std::size_t>(n_rep),
                 std::vector<std::vector<RepOutcome>>(
                     cfg.Js.size(), std::vector<RepOutcome>(estimators.size())));

    const int n_tasks = n_grid * n_rep;
    parallel_for(n_tasks, n_threads, [&](int task) {
        const int g = task / n_rep;
        const int r = task % n_rep;
        const double delta =
            cfg.delta_spec.delta_for(cfg.delta_spec.values[static_cast<std::size_t>(g)],
                                     cfg.model.epsilon);
        // The fine step is snapped to an exact divisor of delta so that
        // subsampling is commensurate; rounding up keeps h_eff <= h_target
        // (the stability bound must not be crossed by snapping).
        const double h_target = std::min(result.h_used, delta);
        const auto stride = static_cast<Eigen::Index>(std::max(1.0, std::ceil(delta / h_target - 1e-9)));
        const double h_eff = delta / static_cast<double>(stride);
        const std::uint64_t seed =
            derive_seed(cfg.master_seed, {static_cast<std::uint64_t>(g), static_cast<std::uint64_t>(r)});

        ObservationSet obs;
        try {
            if (cfg.dynamics == "particles") {
                obs = simulate_particles_observations(cfg.model.alpha[0], cfg.theta, cfg.model.sigma,
                                                      cfg.model.epsilon, cfg.model.p, cfg.d, cfg.T,
                                                      h_eff, delta, seed);
            } else if (cfg.dynamics == "homogenized") {
                const HomogenizedModel hm{cfg.model.alpha, cfg.model.sigma, cfg.model.V};
                obs = simulate_homogenized_observations(hm, cfg.T, h_eff, delta, seed);
            } else {
                obs = simulate_multiscale_observations(cfg.model, cfg.T, h_eff, delta, seed);
            }
            if (filter) obs = with_filtered(std::move(obs));
        } catch (const std::exception& ex) {
            for (std::size_t ji = 0; ji < cfg.Js.size(); ++ji)
                for (std::size_t ei = 0; ei < estimators.size(); ++ei)
                    outcomes[static_cast<std::size_t>(g)][static_cast<std::size_t>(r)][ji][ei]
                        .failure = ex.what();
            return;
        }

        for (std::size_t ji = 0; ji < cfg.Js.size(); ++ji)
            for (std::size_t ei = 0; ei < estimators.size(); ++ei)
                outcomes[static_cast<std::size_t>(g)][static_cast<std::size_t>(r)][ji][ei] =
                    run_one_estimator(cfg, obs, estimators[ei], cfg.Js[ji], result.Sigma);
    });

    for (int g = 0; g < n_grid; ++g) {
        const double value = cfg.delta_spec.values[static_cast<std::size_t>(g)];
        for (std::size_t ji = 0; ji < cfg.Js.size(); ++ji) {
            for (std::size_t ei = 0; ei < estimators.size(); ++ei) {
                GridPointResult pt;
                pt.grid_value = value;
                pt.delta = cfg.delta_spec.delta_for(value, cfg.model.epsilon);
                pt.J = cfg.Js[ji];
                pt.estimator = estimators[ei];
                for (int r = 0; r < n_rep; ++r) {
                    const RepOutcome& o =
                        outcomes[static_cast<std::size_t>(g)][static_cast<std::size_t>(r)][ji][ei];
                    pt.estimates.push_back(o.estimate);
                    pt.failures.push_back(o.failure);
                }
                aggregate_point(pt, result.A_true);
                result.points.push_back(std::move(pt));
            }
        }
    }
    return result;
}

ExperimentResult sweep_zeta(ExperimentConfig cfg, const std::vector<double>& zetas, int n_threads) {
    if (zetas.empty()) throw std::invalid_argument("sweep_zeta: empty zeta list");
    cfg.delta_spec = {DeltaSpec::Kind::ZetaEps, zetas};
    return run_experiment(cfg, n_threads);
}

ExperimentResult sweep_J(ExperimentConfig cfg, const std::vector<int>& Js, int n_threads) {
    if (Js.empty()) throw std::invalid_argument("sweep_J: empty J list");
    cfg.Js = Js;
    return run_experiment(cfg, n_threads);
}

std::vector<Table1Row> table1_protocol(const ExperimentConfig& cfg, const std::vector<int>& Ns,
                                       int n_threads) {
    if (Ns.empty()) throw std::invalid_argument("table1_protocol: empty N list");
    if (cfg.delta_spec.values.size() != 1)
        throw std::invalid_argument("table1_protocol: exactly one delta expected");
    const double delta = cfg.delta_spec.delta_for(cfg.delta_spec.values[0], cfg.model.epsilon);
    const int n_max = *std::max_element(Ns.begin(), Ns.end());
    if (cfg.T < n_max * delta) throw std::invalid_argument("table1_protocol: T too short for max N");

    const double K = cfg.model.p.is_zero() ? 1.0 : compute_K(cfg.model.p, cfg.model.sigma);
    const Eigen::VectorXd A_true = K * cfg.model.alpha;
    const double Sigma = K * cfg.model.sigma;
    const bool filter = needs_filter(cfg.estimators);

    // errors[rep][N index]
    std::vector<std::vector<double>> errors(
        static_cast<std::size_t>(cfg.n_rep),
        std::vector<double>(Ns.size(), std::numeric_limits<double>::quiet_NaN()));

    parallel_for(cfg.n_rep, n_threads, [&](int r) {
        const double h_target = std::min(cfg.h_used(), delta);
        const auto stride = static_cast<Eigen::Index>(std::max(1.0, std::ceil(delta / h_target - 1e-9)));
        const double h_eff = delta / static_cast<double>(stride);
        const std::uint64_t seed = derive_seed(cfg.master_seed, {0, static_cast<std::uint64_t>(r)});
        ObservationSet full =
            simulate_multiscale_observations(cfg.model, cfg.T, h_eff, delta, seed);
        if (filter) full = with_filtered(std::move(full));

        for (std::size_t ni = 0; ni < Ns.size(); ++ni) {
            const int N = Ns[ni];
            ObservationSet prefix;
            prefix.delta = delta;
            prefix.x = full.x.topRows(N + 1);
            if (full.z) prefix.z = full.z->topRows(N + 1);
            try {
                ScoreContext ctx;
                ctx.obs = std::move(prefix);
                ctx.J = cfg.Js.front();
                ctx.beta = BetaFamily::parse(cfg.beta_spec, ctx.J, cfg.model.V.dim());
                ctx.Sigma = Sigma;
                ctx.V = cfg.model.V;
                ctx.use_filter = filter;
                ctx.mesh_h = cfg.mesh_h;
                ctx.R_floor = cfg.R_floor;
                ctx.tol_score = cfg.tol_score;
                ctx.prepare();
                const Eigen::VectorXd a0 =
                    cfg.a0 ? *cfg.a0 : Eigen::VectorXd::Ones(cfg.model.V.dim());
                const EstimatorResult res = solve_estimator(ctx, a0);
                if (res.converged)
                    errors[static_cast<std::size_t>(r)][ni] = (A_true - res.a_hat).norm();
            } catch (const std::exception&) {
                // failure stays NaN
            }
        }
    });

    std::vector<Table1Row> rows;
    for (std::size_t ni = 0; ni < Ns.size(); ++ni) {
        Table1Row row;
        row.N = Ns[ni];
        std::vector<double> ok;
        for (int r = 0; r < cfg.n_rep; ++r) {
            const double e = errors[static_cast<std::size_t>(r)][ni];
            row.errors.push_back(e);
            if (std::isfinite(e)) ok.push_back(e);
        }
        row.n_fail = cfg.n_rep - static_cast<int>(ok.size());
        row.mean_abs_error = ok.empty() ? std::numeric_limits<double>::quiet_NaN()
                                        : std::accumulate(ok.begin(), ok.end(), 0.0) /
                                              static_cast<double>(ok.size());
        row.median_abs_error = median_of(ok);
        rows.push_back(std::move(row));
    }
    return rows;
}

namespace {

std::string fmt(double v) {
    std::ostringstream os;
    os << std::setprecision(17) << v;
    return os.str();
}

std::string join_components(const Eigen::VectorXd& v) {
    std::ostringstream os;
    for (Eigen::Index i = 0; i < v.size(); ++i) os << (i ? ";" : "") << fmt(v[i]);
    return os.str();
}

void atomic_write(const std::string& path, const std::string& content) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp);
        if (!out) throw std::runtime_error("cannot write " + tmp);
        out << content;
    }
    std::filesystem::rename(tmp, path);
}

}  // namespace

void write_aggregate_csv(const std::string& path, const ExperimentResult& result) {
    std::ostringstream os;
    os << "# config_hash=" << result.config_hash << "\n";
    os << "# A_true=" << join_components(result.A_true) << "\n";
    os << "# Sigma=" << fmt(result.Sigma) << " h=" << fmt(result.h_used) << "\n";
    os << "grid_value,delta,J,estimator,mean,std,mean_abs_error,median_abs_error,n_fail,n_rep,flagged\n";
    for (const auto& pt : result.points) {
        os << fmt(pt.grid_value) << ',' << fmt(pt.delta) << ',' << pt.J << ',' << pt.estimator
           << ',' << join_components(pt.mean) << ',' << join_components(pt.stddev) << ','
           << fmt(pt.mean_abs_error) << ',' << fmt(pt.median_abs_error) << ',' << pt.n_fail << ','
           << pt.estimates.size() << ',' << (pt.flagged ? 1 : 0) << "\n";
    }
    atomic_write(path, os.str());
}

void write_replications_csv(const std::string& path, const ExperimentResult& result) {
    std::ostringstream os;
    os << "# config_hash=" << result.config_hash << "\n";
    os << "# A_true=" << join_components(result.A_true) << "\n";
    os << "# Sigma=" << fmt(result.Sigma) << " h=" << fmt(result.h_used) << "\n";
    os << "grid_value,delta,J,estimator,rep,ok,estimate,failure\n";
    for (const auto& pt : result.points) {
        for (std::size_t r = 0; r < pt.estimates.size(); ++r) {
            const bool ok = pt.failures[r].empty();
            std::string failure = pt.failures[r];
            std::replace(failure.begin(), failure.end(), ',', ';');
            std::replace(failure.begin(), failure.end(), '\n', ' ');
            os << fmt(pt.grid_value) << ',' << fmt(pt.delta) << ',' << pt.J << ',' << pt.estimator
               << ',' << r << ',' << (ok ? 1 : 0) << ','
               << (ok ? join_components(pt.estimates[r]) : std::string()) << ',' << failure << "\n";
        }
    }
    atomic_write(path, os.str());
}

void write_table1_csv(const std::string& path, const std::vector<Table1Row>& rows,
                      std::uint64_t cfg_hash) {
    std::ostringstream os;
    os << "# config_hash=" << cfg_hash << "\n";
    os << "N,mean_abs_error,median_abs_error,n_fail,errors\n";
    for (const auto& row : rows) {
        os << row.N << ',' << fmt(row.mean_abs_error) << ',' << fmt(row.median_abs_error) << ','
           << row.n_fail << ',';
        for (std::size_t i = 0; i < row.errors.size(); ++i) os << (i ? ";" : "") << fmt(row.errors[i]);
        os << "\n";
    }
    atomic_write(path, os.str());
}

namespace {

Eigen::VectorXd parse_components(const std::string& s) {
    std::vector<double> v;
    std::stringstream ss(s);
    std::string tok;
    while (std::getline(ss, tok, ';'))
        if (!tok.empty()) v.push_back(std::stod(tok));
    return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::stringstream ss(line);
    std::string tok;
    while (std::getline(ss, tok, ',')) out.push_back(tok);
    // trailing empty field
    if (!line.empty() && line.back() == ',') out.push_back("");
    return out;
}

}  // namespace

ExperimentResult load_replications_csv(const std::string& path, std::uint64_t expected_hash) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read " + path);
    std::string line;

    ExperimentResult result;
    bool hash_seen = false;
    while (std::getline(in, line)) {
        if (line.rfind("# config_hash=", 0) == 0) {
            result.config_hash = std::stoull(line.substr(14));
            if (result.config_hash != expected_hash)
                throw std::runtime_error("config hash mismatch for " + path);
            hash_seen = true;
        } else if (line.rfind("# A_true=", 0) == 0) {
            result.A_true = parse_components(line.substr(9));
        } else if (line.rfind("#", 0) == 0 || line.rfind("grid_value", 0) == 0) {
            continue;
        } else if (!line.empty()) {
            break;
        }
    }
    if (!hash_seen) throw std::runtime_error("no config hash in " + path);

    auto find_point = [&](double grid_value, double delta, int J,
                          const std::string& estimator) -> GridPointResult& {
        for (auto& pt : result.points)
            if (pt.grid_value == grid_value && pt.J == J && pt.estimator == estimator)
                return pt;
        GridPointResult pt;
        pt.grid_value = grid_value;
        pt.delta = delta;
        pt.J = J;
        pt.estimator = estimator;
        result.points.push_back(std::move(pt));
        return result.points.back();
    };

    do {
        if (line.empty() || line[0] == '#' || line.rfind("grid_value", 0) == 0) continue;
        const auto f = split_csv_line(line);
        if (f.size() < 7) continue;
        GridPointResult& pt = find_point(std::stod(f[0]), std::stod(f[1]), std::stoi(f[2]), f[3]);
        const bool ok = f[5] == "1";
        pt.estimates.push_back(ok ? parse_components(f[6]) : Eigen::VectorXd());
        pt.failures.push_back(ok ? std::string() : (f.size() > 7 && !f[7].empty() ? f[7] : "failed"));
    } while (std::getline(in, line));

    for (auto& pt : result.points) aggregate_point(pt, result.A_true);
    return result;
}

bool any_flagged(const ExperimentResult& result) {
    for (const auto& pt : result.points)
        if (pt.flagged) return true;
    return false;
}

}  // namespace homodrift
