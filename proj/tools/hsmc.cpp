// Command-line front end: simulate | run | diagnose | scaling.
// Exit codes: 0 success, 2 config error, 3 data error, 4 numerical failure.

#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include "hsmc/hsmc.hpp"

namespace {

using namespace hsmc;

int cmd_simulate(const std::string& out_dir, SimulationConfig cfg, const std::string& format) {
    const auto [data, beta] = simulate_data(cfg);
    namespace fs = std::filesystem;
    fs::create_directories(out_dir);
    std::string design_path, response_path;
    if (format == "csv") {
        design_path = out_dir + "/design.csv";
        response_path = out_dir + "/response.csv";
        write_matrix_csv(design_path, data.W);
        write_matrix_csv(response_path, data.z, {"z"});
    } else {
        design_path = out_dir + "/design.bin";
        response_path = out_dir + "/response.bin";
        write_matrix_bin(design_path, data.W);
        write_matrix_bin(response_path, data.z);
    }
    write_matrix_csv(out_dir + "/truth.csv", beta, {"beta_true"});
    nlohmann::json meta;
    meta["format"] = "hsmc-sim/1";
    meta["rng"] = std::string(Rng::stream_id);
    meta["N"] = cfg.n;
    meta["p"] = cfg.p;
    meta["design"] = cfg.design == DesignKind::independent ? "independent" : "ar1";
    meta["phi"] = cfg.phi;
    meta["residual_sd"] = cfg.residual_sd;
    meta["seed"] = cfg.seed;
    meta["design_path"] = design_path;
    meta["response_path"] = response_path;
    std::ofstream out(out_dir + "/sim.json");
    out << meta.dump(2) << "\n";
    std::cout << "wrote " << cfg.n << "x" << cfg.p << " design to " << design_path << "\n";
    return 0;
}

int cmd_run(const std::string& design_path, const std::string& response_path,
            const std::string& out_dir, RunConfig cfg, const std::string& track) {
    const ModelData data = load_data(design_path, response_path);
    if (track == "all") {
        cfg.track_beta.resize(static_cast<std::size_t>(data.p()));
        for (std::size_t k = 0; k < cfg.track_beta.size(); ++k)
            cfg.track_beta[k] = static_cast<int>(k);
        cfg.track_eta = cfg.track_beta;
    } else if (!track.empty()) {
        const long k = std::stol(track);
        if (k < 1) throw config_error("--track must be a positive count or 'all'");
        const long kk = std::min<long>(k, data.p());
        cfg.track_beta.resize(static_cast<std::size_t>(kk));
        for (long i = 0; i < kk; ++i) cfg.track_beta[static_cast<std::size_t>(i)] = static_cast<int>(i);
        cfg.track_eta = cfg.track_beta;
    }
    const SampleStore store = run_chain(data, cfg);
    save_store(out_dir, store);
    std::cout << "mode=" << to_string(cfg.mode) << " stored " << store.stored_rows()
              << " scans to " << out_dir << " (accept_xi=" << store.accept_rate_xi()
              << ", median scan " << store.median_scan_seconds() << " s)\n";
    return 0;
}

int cmd_diagnose(const std::string& chain_dir, const std::string& truth_path, long discard,
                 int max_lag) {
    const SampleStore store = load_store(chain_dir);
    Eigen::VectorXd truth;
    const Eigen::VectorXd* truth_ptr = nullptr;
    if (!truth_path.empty()) {
        const Eigen::MatrixXd t = load_matrix_csv(truth_path);
        truth = t.col(0);
        truth_ptr = &truth;
    }
    const Summary summary = summarize(store, truth_ptr, discard, max_lag);
    save_report(chain_dir, summary, discard);
    std::cout << "diagnosed " << chain_dir << ": " << store.stored_rows() - discard
              << " scans kept";
    if (truth_ptr)
        std::cout << ", mse=" << summary.mse << ", coverage=" << summary.coverage;
    std::cout << "\n";
    return 0;
}

// Manifest: either one chain directory per line, or a CSV table with header
// N,p,response. Blank lines and '#' comments are skipped.
std::vector<ScalingRecord> read_manifest(const std::string& path, long discard) {
    std::ifstream in(path);
    if (!in) throw data_error("cannot open manifest " + path);
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) {
        while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        lines.push_back(line);
    }
    if (lines.empty()) throw data_error(path + ": empty manifest");
    std::vector<ScalingRecord> records;
    if (lines.front() == "N,p,response") {
        for (std::size_t i = 1; i < lines.size(); ++i) {
            const auto cells = detail::split_csv_line(lines[i]);
            ScalingRecord r;
            if (cells.size() != 3 || !detail::parse_double(cells[0], r.n) ||
                !detail::parse_double(cells[1], r.p) || !detail::parse_double(cells[2], r.response))
                throw data_error(path + ": bad manifest row " + std::to_string(i + 1));
            records.push_back(r);
        }
        return records;
    }
    for (const auto& dir : lines) {
        const SampleStore store = load_store(dir);
        if (store.draws.rows() <= discard)
            throw data_error(dir + ": discard leaves no stored samples");
        const Eigen::MatrixXd kept = store.draws.bottomRows(store.draws.rows() - discard);
        std::vector<double> avars;
        for (std::size_t k = 0; k < store.track_beta.size(); ++k)
            avars.push_back(obm_variance(kept.col(store.beta_col(k))));
        if (avars.empty()) throw data_error(dir + ": no tracked beta coordinates");
        std::sort(avars.begin(), avars.end());
        records.push_back({static_cast<double>(store.data_n), static_cast<double>(store.data_p),
                           avars[avars.size() / 2]});
    }
    return records;
}

int cmd_scaling(const std::string& manifest, long discard, const std::string& out_path) {
    const auto records = read_manifest(manifest, discard);
    const ScalingFit fit = scaling_regression(records);
    std::ostringstream table;
    table << "term,estimate,std_error\n";
    table << "intercept," << fit.intercept << "," << fit.se_intercept << "\n";
    table << "log_N," << fit.a1 << "," << fit.se_a1 << "\n";
    table << "log_p," << fit.a2 << "," << fit.se_a2 << "\n";
    std::cout << table.str();
    if (!out_path.empty()) {
        std::ofstream out(out_path);
        if (!out) throw data_error("cannot write " + out_path);
        out << table.str();
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Horseshoe regression MCMC: exact, thresholded and legacy Gibbs kernels"};
    app.require_subcommand(1);

    // simulate
    auto* sim = app.add_subcommand("simulate", "Generate a synthetic regression problem");
    hsmc::SimulationConfig sim_cfg;
    std::string sim_out, sim_design = "independent", sim_format = "bin";
    sim->add_option("--n", sim_cfg.n, "observations")->required();
    sim->add_option("--p", sim_cfg.p, "predictors")->required();
    sim->add_option("--design", sim_design, "independent|ar1")
        ->check(CLI::IsMember({"independent", "ar1"}));
    sim->add_option("--phi", sim_cfg.phi, "AR(1) coefficient");
    sim->add_option("--residual-sd", sim_cfg.residual_sd, "residual standard deviation");
    sim->add_option("--seed", sim_cfg.seed, "rng seed");
    sim->add_option("--out", sim_out, "output directory")->required();
    sim->add_option("--format", sim_format, "bin|csv")->check(CLI::IsMember({"bin", "csv"}));

    // run
    auto* run = app.add_subcommand("run", "Run one chain");
    std::string run_mode, run_design, run_response, run_out, run_sigma_update = "gibbs";
    std::string run_floor = "1e-10", run_track;
    hsmc::RunConfig run_cfg;
    run->add_option("--mode", run_mode, "exact|approx|old")
        ->required()
        ->check(CLI::IsMember({"exact", "approx", "old"}));
    run->add_option("--design", run_design, "design matrix path (.csv or .bin)")->required();
    run->add_option("--response", run_response, "response path (.csv or .bin)")->required();
    run->add_option("--iters", run_cfg.iterations, "total scans")->required();
    run->add_option("--burnin", run_cfg.burnin, "scans dropped before storing");
    run->add_option("--thin", run_cfg.thin, "store every thin-th scan");
    run->add_option("--delta", run_cfg.hyper.delta, "threshold for the approx kernel");
    run->add_option("--a0", run_cfg.hyper.a0, "sigma^2 prior shape numerator");
    run->add_option("--b0", run_cfg.hyper.b0, "sigma^2 prior rate numerator");
    run->add_option("--prop-sd-xi", run_cfg.hyper.prop_sd_xi, "random-walk sd on log xi");
    run->add_option("--prop-sd-sigma", run_cfg.hyper.prop_sd_sigma,
                    "random-walk sd on log sigma^{-2}");
    run->add_option("--sigma-update", run_sigma_update, "gibbs|mh")
        ->check(CLI::IsMember({"gibbs", "mh"}));
    run->add_option("--seed", run_cfg.seed, "rng seed");
    run->add_option("--out", run_out, "chain output directory")->required();
    run->add_option("--floor", run_floor, "legacy truncation floor (old mode only), or 'off'");
    run->add_option("--track", run_track, "tracked beta/eta count, or 'all' (default 100)");

    // diagnose
    auto* diag = app.add_subcommand("diagnose", "Pathwise diagnostics for a stored chain");
    std::string diag_chain, diag_truth;
    long diag_discard = 5000;
    int diag_max_lag = 50;
    diag->add_option("--chain", diag_chain, "chain directory")->required();
    diag->add_option("--truth", diag_truth, "true beta CSV (single column)");
    diag->add_option("--discard", diag_discard, "stored scans discarded before diagnostics");
    diag->add_option("--max-lag", diag_max_lag, "autocorrelation lags");

    // scaling
    auto* scal = app.add_subcommand("scaling", "Log-log regression of response on N and p");
    std::string scal_manifest, scal_out;
    long scal_discard = 5000;
    scal->add_option("--runs", scal_manifest, "manifest: chain dirs, or CSV N,p,response")
        ->required();
    scal->add_option("--discard", scal_discard, "stored scans discarded per chain");
    scal->add_option("--out", scal_out, "also write the table to this file");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (sim->parsed()) {
            sim_cfg.design =
                sim_design == "ar1" ? hsmc::DesignKind::ar1 : hsmc::DesignKind::independent;
            return cmd_simulate(sim_out, sim_cfg, sim_format);
        }
        if (run->parsed()) {
            run_cfg.mode = hsmc::kernel_mode_from_string(run_mode);
            run_cfg.hyper.sigma_update =
                run_sigma_update == "mh" ? hsmc::SigmaUpdate::mh : hsmc::SigmaUpdate::gibbs;
            if (run_floor == "off") {
                run_cfg.floor_value.reset();
            } else {
                try {
                    run_cfg.floor_value = std::stod(run_floor);
                } catch (const std::exception&) {
                    throw hsmc::config_error("--floor expects a number or 'off'");
                }
            }
            return cmd_run(run_design, run_response, run_out, run_cfg, run_track);
        }
        if (diag->parsed()) return cmd_diagnose(diag_chain, diag_truth, diag_discard, diag_max_lag);
        if (scal->parsed()) return cmd_scaling(scal_manifest, scal_discard, scal_out);
    } catch (const hsmc::config_error& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const hsmc::data_error& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return 3;
    } catch (const hsmc::error& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return 4;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
