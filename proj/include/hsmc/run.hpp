#pragma once

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "hsmc/diagnostics.hpp"
#include "hsmc/io.hpp"
#include "hsmc/kernel_approx.hpp"
#include "hsmc/kernel_baseline.hpp"
#include "hsmc/kernel_exact.hpp"
#include "hsmc/rng.hpp"

namespace hsmc {

enum class KernelMode { exact, approx, old_kernel };

inline std::string to_string(KernelMode m) {
    switch (m) {
        case KernelMode::exact: return "exact";
        case KernelMode::approx: return "approx";
        case KernelMode::old_kernel: return "old";
    }
    return "?";
}

inline KernelMode kernel_mode_from_string(const std::string& s) {
    if (s == "exact") return KernelMode::exact;
    if (s == "approx") return KernelMode::approx;
    if (s == "old") return KernelMode::old_kernel;
    throw config_error("unknown mode '" + s + "' (expected exact|approx|old)");
}

struct RunConfig {
    KernelMode mode = KernelMode::exact;
    long iterations = 0;
    long burnin = 0;
    long thin = 1;
    std::uint64_t seed = 0;
    HyperParams hyper;
    std::optional<double> floor_value = 1e-10;  // old kernel only; nullopt disables
    std::vector<int> track_beta;                // 0-based; empty selects the default block
    std::vector<int> track_eta;

    void validate() const {
        hyper.validate();
        if (iterations < 1) throw config_error("iterations must be at least 1");
        if (burnin < 0 || burnin >= iterations) throw config_error("need iterations > burnin >= 0");
        if (thin < 1) throw config_error("thin must be at least 1");
        if ((iterations - burnin) % thin != 0)
            throw config_error("(iterations - burnin) must be divisible by thin");
        if (floor_value && !(*floor_value > 0.0))
            throw config_error("floor must be positive (or off)");
    }

    // beta/eta indices 1..100 (or all when p < 100); log xi and -2 log sigma
    // are always stored.
    static std::vector<int> default_track(Eigen::Index p) {
        std::vector<int> idx(static_cast<std::size_t>(std::min<Eigen::Index>(p, 100)));
        for (std::size_t k = 0; k < idx.size(); ++k) idx[k] = static_cast<int>(k);
        return idx;
    }
};

struct SampleStore {
    Eigen::MatrixXd draws;  // stored scan x tracked coordinate
    std::vector<std::string> colnames;
    std::vector<int> track_beta;
    std::vector<int> track_eta;
    KernelMode mode = KernelMode::exact;
    long iterations = 0, burnin = 0, thin = 1;
    std::uint64_t seed = 0;
    HyperParams hyper;
    std::optional<double> floor_value;
    Eigen::Index data_n = 0, data_p = 0;
    long accept_xi = 0;
    long accept_sigma = 0;
    Eigen::VectorXd scan_seconds;  // one entry per scan, burn-in included
    double wall_total = 0.0;

    Eigen::Index stored_rows() const { return draws.rows(); }
    double accept_rate_xi() const {
        return iterations > 0 ? static_cast<double>(accept_xi) / static_cast<double>(iterations)
                              : 0.0;
    }
    double accept_rate_sigma() const {
        return iterations > 0 ? static_cast<double>(accept_sigma) / static_cast<double>(iterations)
                              : 0.0;
    }
    double median_scan_seconds() const {
        if (scan_seconds.size() == 0) return 0.0;
        std::vector<double> t(scan_seconds.data(), scan_seconds.data() + scan_seconds.size());
        std::nth_element(t.begin(), t.begin() + t.size() / 2, t.end());
        return t[t.size() / 2];
    }

    // column blocks: [beta...][eta...][log_xi][neg2_log_sigma]
    Eigen::Index beta_col(std::size_t k) const { return static_cast<Eigen::Index>(k); }
    Eigen::Index eta_col(std::size_t k) const {
        return static_cast<Eigen::Index>(track_beta.size() + k);
    }
    Eigen::Index log_xi_col() const {
        return static_cast<Eigen::Index>(track_beta.size() + track_eta.size());
    }
    Eigen::Index neg2_log_sigma_col() const { return log_xi_col() + 1; }
};

using ScanObserver = std::function<void(long scan, const ChainState&, const ScanInfo&)>;

// Dispatches to the requested kernel and persists the tracked coordinates.
// Deterministic: (seed, config, data) fixes every stored number bitwise.
inline SampleStore run_chain(const ModelData& data, const RunConfig& cfg,
                             const ScanObserver& observer = {}) {
    cfg.validate();
    data.validate();
    const Eigen::Index p = data.p();
    SampleStore store;
    store.mode = cfg.mode;
    store.iterations = cfg.iterations;
    store.burnin = cfg.burnin;
    store.thin = cfg.thin;
    store.seed = cfg.seed;
    store.hyper = cfg.hyper;
    store.floor_value = cfg.mode == KernelMode::old_kernel ? cfg.floor_value : std::nullopt;
    store.data_n = data.n();
    store.data_p = p;
    store.track_beta = cfg.track_beta.empty() ? RunConfig::default_track(p) : cfg.track_beta;
    store.track_eta = cfg.track_eta.empty() ? RunConfig::default_track(p) : cfg.track_eta;
    for (int j : store.track_beta)
        if (j < 0 || j >= p) throw config_error("tracked beta index out of range");
    for (int j : store.track_eta)
        if (j < 0 || j >= p) throw config_error("tracked eta index out of range");

    for (int j : store.track_beta) store.colnames.push_back("beta_" + std::to_string(j + 1));
    for (int j : store.track_eta) store.colnames.push_back("eta_" + std::to_string(j + 1));
    store.colnames.push_back("log_xi");
    store.colnames.push_back("neg2_log_sigma");

    const long rows = (cfg.iterations - cfg.burnin) / cfg.thin;
    store.draws.resize(rows, static_cast<Eigen::Index>(store.colnames.size()));
    store.scan_seconds.resize(cfg.iterations);

    ChainState state = ChainState::initial(p);
    Rng rng(cfg.seed);
    const auto t_start = std::chrono::steady_clock::now();
    long row = 0;
    for (long scan = 1; scan <= cfg.iterations; ++scan) {
        ScanInfo info;
        const auto t0 = std::chrono::steady_clock::now();
        try {
            switch (cfg.mode) {
                case KernelMode::exact: state = step_exact(state, data, cfg.hyper, rng, &info); break;
                case KernelMode::approx: state = step_approx(state, data, cfg.hyper, rng, &info); break;
                case KernelMode::old_kernel:
                    state = step_old(state, data, cfg.hyper, rng, cfg.floor_value, &info);
                    break;
            }
        } catch (const error& e) {
            throw numerical_error("scan " + std::to_string(scan) + ": " + e.what());
        }
        const auto t1 = std::chrono::steady_clock::now();
        store.scan_seconds[scan - 1] = std::chrono::duration<double>(t1 - t0).count();
        store.accept_xi += info.xi_accepted ? 1 : 0;
        store.accept_sigma += info.sigma_accepted ? 1 : 0;
        if (observer) observer(scan, state, info);
        if (scan > cfg.burnin && (scan - cfg.burnin) % cfg.thin == 0) {
            Eigen::Index c = 0;
            for (int j : store.track_beta) store.draws(row, c++) = state.beta[j];
            for (int j : store.track_eta) store.draws(row, c++) = state.eta[j];
            store.draws(row, c++) = std::log(state.xi);
            store.draws(row, c++) = -std::log(state.sigma2);
            ++row;
        }
    }
    store.wall_total =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
    return store;
}

// Empirical quantile with linear interpolation between order statistics.
inline double empirical_quantile(std::vector<double> v, double q) {
    if (v.empty()) throw data_error("quantile of empty sample");
    std::sort(v.begin(), v.end());
    const double h = q * static_cast<double>(v.size() - 1);
    const std::size_t lo = static_cast<std::size_t>(h);
    if (lo + 1 >= v.size()) return v.back();
    const double w = h - static_cast<double>(lo);
    if (w == 0.0 || v[lo] == v[lo + 1]) return v[lo];
    return (1.0 - w) * v[lo] + w * v[lo + 1];
}

struct CoordinateSummary {
    std::string name;
    double mean = 0.0;
    double lower = 0.0;  // 0.025 empirical quantile
    double upper = 0.0;  // 0.975 empirical quantile
    bool has_truth = false;
    double truth = 0.0;
    bool covered = false;
    double sqerr = 0.0;
};

struct Summary {
    std::vector<CoordinateSummary> coords;
    double mse = std::numeric_limits<double>::quiet_NaN();       // over tracked beta with truth
    double coverage = std::numeric_limits<double>::quiet_NaN();  // fraction of covering intervals
    DiagnosticsReport report;
};

// Posterior means, equal-tailed 95% intervals, MSE/coverage against the truth
// when supplied, plus the pathwise diagnostics. `discard` drops leading stored
// rows before everything (the 5,000-scan convention belongs to the caller).
inline Summary summarize(const SampleStore& store, const Eigen::VectorXd* true_beta = nullptr,
                         Eigen::Index discard = 0, int max_lag = 50) {
    if (store.draws.rows() <= discard) throw data_error("discard leaves no stored samples");
    const Eigen::MatrixXd kept = store.draws.bottomRows(store.draws.rows() - discard);
    Summary out;
    out.report = build_report(store.draws, store.colnames, discard, max_lag,
                              store.accept_rate_xi(), store.median_scan_seconds());
    out.coords.resize(static_cast<std::size_t>(kept.cols()));
    for (Eigen::Index c = 0; c < kept.cols(); ++c) {
        CoordinateSummary& cs = out.coords[static_cast<std::size_t>(c)];
        cs.name = store.colnames[static_cast<std::size_t>(c)];
        cs.mean = kept.col(c).mean();
        std::vector<double> v(kept.col(c).data(), kept.col(c).data() + kept.rows());
        cs.lower = empirical_quantile(v, 0.025);
        cs.upper = empirical_quantile(std::move(v), 0.975);
    }
    if (true_beta) {
        if (true_beta->size() != store.data_p)
            throw data_error("truth vector length does not match p");
        double sse = 0.0;
        long covered = 0;
        for (std::size_t k = 0; k < store.track_beta.size(); ++k) {
            CoordinateSummary& cs = out.coords[k];
            cs.has_truth = true;
            cs.truth = (*true_beta)[store.track_beta[k]];
            cs.covered = cs.lower <= cs.truth && cs.truth <= cs.upper;
            cs.sqerr = (cs.mean - cs.truth) * (cs.mean - cs.truth);
            sse += cs.sqerr;
            covered += cs.covered ? 1 : 0;
        }
        const double nb = static_cast<double>(store.track_beta.size());
        out.mse = sse / nb;
        out.coverage = static_cast<double>(covered) / nb;
    }
    return out;
}

// ---- store persistence: one CSV per tracked block plus a JSON sidecar ----

inline void save_store(const std::string& dir, const SampleStore& store) {
    namespace fs = std::filesystem;
    fs::create_directories(dir);
    const auto beta_cols = static_cast<Eigen::Index>(store.track_beta.size());
    const auto eta_cols = static_cast<Eigen::Index>(store.track_eta.size());
    std::vector<std::string> beta_names(store.colnames.begin(), store.colnames.begin() + beta_cols);
    std::vector<std::string> eta_names(store.colnames.begin() + beta_cols,
                                       store.colnames.begin() + beta_cols + eta_cols);
    write_matrix_csv(dir + "/beta.csv", store.draws.leftCols(beta_cols), beta_names);
    write_matrix_csv(dir + "/eta.csv", store.draws.middleCols(beta_cols, eta_cols), eta_names);
    write_matrix_csv(dir + "/global.csv", store.draws.rightCols(2),
                     {"log_xi", "neg2_log_sigma"});
    write_matrix_csv(dir + "/timings.csv", store.scan_seconds, {"scan_seconds"});

    nlohmann::json meta;
    meta["format"] = "hsmc-run/1";
    meta["rng"] = std::string(Rng::stream_id);
    meta["mode"] = to_string(store.mode);
    meta["N"] = store.data_n;
    meta["p"] = store.data_p;
    meta["iterations"] = store.iterations;
    meta["burnin"] = store.burnin;
    meta["thin"] = store.thin;
    meta["seed"] = store.seed;
    meta["hyper"] = {{"a0", store.hyper.a0},
                     {"b0", store.hyper.b0},
                     {"prop_sd_xi", store.hyper.prop_sd_xi},
                     {"prop_sd_sigma", store.hyper.prop_sd_sigma},
                     {"sigma_update", store.hyper.sigma_update == SigmaUpdate::gibbs ? "gibbs" : "mh"},
                     {"delta", store.hyper.delta}};
    if (store.floor_value)
        meta["floor"] = *store.floor_value;
    else
        meta["floor"] = "off";
    std::vector<int> tb, te;
    for (int j : store.track_beta) tb.push_back(j + 1);
    for (int j : store.track_eta) te.push_back(j + 1);
    meta["tracked_beta"] = tb;
    meta["tracked_eta"] = te;
    meta["accept_count_xi"] = store.accept_xi;
    meta["accept_count_sigma"] = store.accept_sigma;
    meta["accept_rate_xi"] = store.accept_rate_xi();
    meta["accept_rate_sigma"] = store.accept_rate_sigma();
    meta["wall_seconds_total"] = store.wall_total;
    meta["wall_seconds_per_scan_median"] = store.median_scan_seconds();
    std::ofstream out(dir + "/meta.json");
    if (!out) throw data_error("cannot write " + dir + "/meta.json");
    out << meta.dump(2) << "\n";
}

inline SampleStore load_store(const std::string& dir) {
    std::ifstream in(dir + "/meta.json");
    if (!in) throw data_error("cannot open " + dir + "/meta.json");
    nlohmann::json meta;
    try {
        in >> meta;
    } catch (const nlohmann::json::exception& e) {
        throw data_error(dir + "/meta.json: " + e.what());
    }
    SampleStore store;
    try {
        if (meta.at("format") != "hsmc-run/1")
            throw data_error(dir + ": unsupported store format");
        store.mode = kernel_mode_from_string(meta.at("mode"));
        store.data_n = meta.at("N").get<Eigen::Index>();
        store.data_p = meta.at("p").get<Eigen::Index>();
        store.iterations = meta.at("iterations").get<long>();
        store.burnin = meta.at("burnin").get<long>();
        store.thin = meta.at("thin").get<long>();
        store.seed = meta.at("seed").get<std::uint64_t>();
        store.hyper.a0 = meta.at("hyper").at("a0").get<double>();
        store.hyper.b0 = meta.at("hyper").at("b0").get<double>();
        store.hyper.prop_sd_xi = meta.at("hyper").at("prop_sd_xi").get<double>();
        store.hyper.prop_sd_sigma = meta.at("hyper").at("prop_sd_sigma").get<double>();
        store.hyper.sigma_update = meta.at("hyper").at("sigma_update") == "mh" ? SigmaUpdate::mh
                                                                               : SigmaUpdate::gibbs;
        store.hyper.delta = meta.at("hyper").at("delta").get<double>();
        if (meta.at("floor").is_number())
            store.floor_value = meta.at("floor").get<double>();
        for (int j : meta.at("tracked_beta").get<std::vector<int>>())
            store.track_beta.push_back(j - 1);
        for (int j : meta.at("tracked_eta").get<std::vector<int>>())
            store.track_eta.push_back(j - 1);
        store.accept_xi = meta.at("accept_count_xi").get<long>();
        store.accept_sigma = meta.at("accept_count_sigma").get<long>();
        store.wall_total = meta.at("wall_seconds_total").get<double>();
    } catch (const nlohmann::json::exception& e) {
        throw data_error(dir + "/meta.json: " + e.what());
    }

    const Eigen::MatrixXd beta = load_matrix_csv(dir + "/beta.csv");
    const Eigen::MatrixXd eta = load_matrix_csv(dir + "/eta.csv");
    const Eigen::MatrixXd global = load_matrix_csv(dir + "/global.csv");
    if (beta.rows() != eta.rows() || beta.rows() != global.rows() || global.cols() != 2)
        throw data_error(dir + ": inconsistent stored blocks");
    store.draws.resize(beta.rows(), beta.cols() + eta.cols() + 2);
    store.draws << beta, eta, global;
    for (int j : store.track_beta) store.colnames.push_back("beta_" + std::to_string(j + 1));
    for (int j : store.track_eta) store.colnames.push_back("eta_" + std::to_string(j + 1));
    store.colnames.push_back("log_xi");
    store.colnames.push_back("neg2_log_sigma");
    const Eigen::MatrixXd t = load_matrix_csv(dir + "/timings.csv");
    store.scan_seconds = t.col(0);
    return store;
}

// ---- diagnostics reports: one CSV per instrument plus a JSON summary ----

inline void save_report(const std::string& dir, const Summary& summary, Eigen::Index discard) {
    namespace fs = std::filesystem;
    fs::create_directories(dir);
    const DiagnosticsReport& rep = summary.report;
    const Eigen::Index k = rep.ess.size();

    {
        std::ofstream out(dir + "/report_ess.csv");
        out << "coordinate,ess,super_efficient\n";
        for (Eigen::Index j = 0; j < k; ++j)
            out << rep.names[static_cast<std::size_t>(j)] << "," << rep.ess[j] << ","
                << (rep.super_efficient[static_cast<std::size_t>(j)] ? 1 : 0) << "\n";
    }
    {
        std::ofstream out(dir + "/report_mcse.csv");
        out << "coordinate,mcse\n";
        for (Eigen::Index j = 0; j < k; ++j)
            out << rep.names[static_cast<std::size_t>(j)] << "," << rep.mcse[j] << "\n";
    }
    {
        std::ofstream out(dir + "/report_acf.csv");
        out << "lag";
        for (const auto& n : rep.names) out << "," << n;
        out << "\n";
        for (Eigen::Index l = 0; l < rep.autocorrelations.rows(); ++l) {
            out << l + 1;
            for (Eigen::Index j = 0; j < k; ++j) out << "," << rep.autocorrelations(l, j);
            out << "\n";
        }
    }
    {
        std::ofstream out(dir + "/report_summary.csv");
        out << "coordinate,mean,q025,q975,truth,covered,sqerr\n";
        for (const auto& cs : summary.coords) {
            out << cs.name << "," << cs.mean << "," << cs.lower << "," << cs.upper << ",";
            if (cs.has_truth)
                out << cs.truth << "," << (cs.covered ? 1 : 0) << "," << cs.sqerr;
            else
                out << ",,";
            out << "\n";
        }
    }
    nlohmann::json j;
    j["accept_rate_xi"] = rep.accept_rate_xi;
    j["wall_seconds_per_scan_median"] = rep.wall_seconds_per_scan;
    j["discard"] = discard;
    if (std::isfinite(summary.mse)) j["mse"] = summary.mse;
    if (std::isfinite(summary.coverage)) j["coverage"] = summary.coverage;
    std::vector<double> ess_sorted(rep.ess.data(), rep.ess.data() + rep.ess.size());
    std::sort(ess_sorted.begin(), ess_sorted.end());
    if (!ess_sorted.empty()) j["ess_median"] = ess_sorted[ess_sorted.size() / 2];
    std::ofstream out(dir + "/report.json");
    if (!out) throw data_error("cannot write " + dir + "/report.json");
    out << j.dump(2) << "\n";
}

} // namespace hsmc
