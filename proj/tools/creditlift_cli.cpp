#include <exception>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "creditlift/errors.hpp"
#include "creditlift/pipeline.hpp"

namespace {

using creditlift::PipelineConfig;
using creditlift::StageResult;

StageResult run_stage(const std::string& stage, const PipelineConfig& config) {
    if (stage == "simulate") return creditlift::run_simulate(config);
    if (stage == "discretize") return creditlift::run_discretize(config);
    if (stage == "select") return creditlift::run_select(config);
    if (stage == "recommend") return creditlift::run_recommend(config);
    if (stage == "evaluate") return creditlift::run_evaluate(config);
    if (stage == "report") return creditlift::run_report(config);
    throw creditlift::ConfigError("unknown subcommand '" + stage + "'");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Risk-aware credit limit recommendation pipeline"};
    app.require_subcommand(1);
    app.fallthrough();

    std::string config_path;
    std::uint64_t seed = 0;
    std::string policy;
    std::string levels;
    double eps = 0.0;
    double p = 0.0;
    int bootstrap = 0;
    std::string out_dir;

    app.add_option("--config", config_path, "Pipeline config JSON file");
    auto* seed_opt = app.add_option("--seed", seed, "Master seed (also used for simulation)");
    auto* policy_opt =
        app.add_option("--policy", policy, "Policy: cl, cl-cvar, cl-cvar-fl, predict-only, or all");
    auto* levels_opt =
        app.add_option("--levels", levels, "Dosage cut points as a comma-separated list");
    auto* eps_opt = app.add_option("--eps", eps, "Propensity overlap trim threshold");
    auto* p_opt = app.add_option("--p", p, "CVaR confidence level");
    auto* bootstrap_opt = app.add_option("--bootstrap", bootstrap, "Bootstrap replicate count");
    auto* out_opt = app.add_option("--out", out_dir, "Output directory for artifacts");

    app.add_subcommand("simulate", "Generate a synthetic portfolio with ground truth");
    app.add_subcommand("discretize", "Bin observed dosages into treatment levels");
    app.add_subcommand("select", "Rank effect estimators per level by estimated root-PEHE");
    app.add_subcommand("recommend", "Write per-customer limit decisions for the chosen policy");
    app.add_subcommand("evaluate", "Back-test decisions against the historical policy");
    app.add_subcommand("report", "Assemble available artifacts into one markdown report");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        PipelineConfig config;
        if (!config_path.empty()) config = creditlift::load_config(config_path);

        creditlift::FlagOverrides flags;
        if (seed_opt->count() > 0) flags.seed = seed;
        if (policy_opt->count() > 0) flags.policy = policy;
        if (levels_opt->count() > 0) flags.cut_points = creditlift::parse_cut_points_csv(levels);
        if (eps_opt->count() > 0) flags.trim_eps = eps;
        if (p_opt->count() > 0) flags.cvar_p = p;
        if (bootstrap_opt->count() > 0) flags.bootstrap_b = bootstrap;
        if (out_opt->count() > 0) flags.out_dir = out_dir;
        creditlift::apply_overrides(config, flags);

        const StageResult result = run_stage(app.get_subcommands().front()->get_name(), config);
        for (const auto& path : result.artifacts) std::cout << "wrote " << path << "\n";
        return 0;
    } catch (const creditlift::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const creditlift::DataError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return 3;
    } catch (const creditlift::NumericError& e) {
        std::cerr << "numeric failure: " << e.what() << "\n";
        return 4;
    } catch (const std::exception& e) {
        std::cerr << "numeric failure: " << e.what() << "\n";
        return 4;
    }
}
