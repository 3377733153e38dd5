#include "creditlift/pipeline.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include <nlohmann/json.hpp>

#include "creditlift/backtest.hpp"
#include "creditlift/csv.hpp"
#include "creditlift/errors.hpp"
#include "creditlift/finance.hpp"
#include "creditlift/policy.hpp"
#include "creditlift/portfolio_io.hpp"
#include "creditlift/risk.hpp"
#include "creditlift/rng.hpp"
#include "creditlift/selection.hpp"

namespace creditlift {
namespace {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

constexpr std::uint64_t kTagCandidate = 0x0A;
constexpr std::uint64_t kTagGate = 0x6A;
constexpr std::uint64_t kTagSelect = 0x5E;
constexpr std::uint64_t kTagPoint = 0x07;
constexpr std::uint64_t kTagBootSpec = 0xB5;
constexpr std::uint64_t kTagBootData = 0xBD;
constexpr std::uint64_t kTagForward = 0xF0;

const std::vector<std::string> kAllPolicies = {"cl", "cl-cvar", "cl-cvar-fl", "predict-only"};

void check_keys(const json& j, const std::vector<std::string>& allowed, const std::string& where) {
    for (const auto& [key, value] : j.items()) {
        (void)value;
        if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
            throw ConfigError("config: unknown key '" + key + "' in " + where);
        }
    }
}

std::string kind_to_string(LearnerKind kind) {
    switch (kind) {
        case LearnerKind::linear: return "linear";
        case LearnerKind::ridge: return "ridge";
        case LearnerKind::logistic: return "logistic";
        case LearnerKind::tree: return "tree";
        case LearnerKind::forest: return "forest";
        case LearnerKind::gbm: return "gbm";
    }
    throw ConfigError("config: unknown learner kind");
}

LearnerKind kind_from_string(const std::string& name) {
    if (name == "linear") return LearnerKind::linear;
    if (name == "ridge") return LearnerKind::ridge;
    if (name == "logistic") return LearnerKind::logistic;
    if (name == "tree") return LearnerKind::tree;
    if (name == "forest") return LearnerKind::forest;
    if (name == "gbm") return LearnerKind::gbm;
    throw ConfigError("config: unknown learner kind '" + name + "'");
}

json learner_to_json(const LearnerSpec& spec) {
    json j;
    j["kind"] = kind_to_string(spec.kind);
    j["lambda"] = spec.lambda;
    j["max_depth"] = spec.max_depth;
    j["min_leaf"] = spec.min_leaf;
    j["n_trees"] = spec.n_trees;
    j["feature_frac"] = spec.feature_frac;
    j["bagging"] = spec.bagging;
    j["n_rounds"] = spec.n_rounds;
    j["learning_rate"] = spec.learning_rate;
    return j;
}

LearnerSpec learner_from_json(const json& j, const std::string& where) {
    if (!j.is_object()) throw ConfigError("config: " + where + " must be an object");
    check_keys(j,
               {"kind", "lambda", "max_depth", "min_leaf", "n_trees", "feature_frac", "bagging",
                "n_rounds", "learning_rate"},
               where);
    if (!j.contains("kind")) throw ConfigError("config: " + where + " is missing 'kind'");
    LearnerSpec spec;
    try {
        spec.kind = kind_from_string(j.at("kind").get<std::string>());
        if (j.contains("lambda")) spec.lambda = j.at("lambda").get<double>();
        if (j.contains("max_depth")) spec.max_depth = j.at("max_depth").get<int>();
        if (j.contains("min_leaf")) spec.min_leaf = j.at("min_leaf").get<int>();
        if (j.contains("n_trees")) spec.n_trees = j.at("n_trees").get<int>();
        if (j.contains("feature_frac")) spec.feature_frac = j.at("feature_frac").get<double>();
        if (j.contains("bagging")) spec.bagging = j.at("bagging").get<bool>();
        if (j.contains("n_rounds")) spec.n_rounds = j.at("n_rounds").get<int>();
        if (j.contains("learning_rate")) spec.learning_rate = j.at("learning_rate").get<double>();
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("config: bad value in " + where + ": " + e.what());
    }
    return spec;
}

json method_to_json(const CateMethodSpec& spec) {
    json j;
    j["method"] = to_string(spec.method);
    j["name"] = spec.name;
    j["outcome_base"] = learner_to_json(spec.outcome_base);
    j["effect_base"] = learner_to_json(spec.effect_base);
    j["propensity_base"] = learner_to_json(spec.propensity_base);
    j["cross_fit_folds"] = spec.cross_fit_folds;
    return j;
}

CateMethodSpec method_from_json(const json& j, const std::string& where) {
    if (!j.is_object()) throw ConfigError("config: " + where + " must be an object");
    check_keys(j, {"method", "name", "outcome_base", "effect_base", "propensity_base", "cross_fit_folds"},
               where);
    if (!j.contains("method")) throw ConfigError("config: " + where + " is missing 'method'");
    try {
        CateMethodSpec spec = default_method_spec(cate_method_from_string(j.at("method").get<std::string>()));
        if (j.contains("name")) spec.name = j.at("name").get<std::string>();
        if (j.contains("outcome_base")) {
            spec.outcome_base = learner_from_json(j.at("outcome_base"), where + ".outcome_base");
        }
        if (j.contains("effect_base")) {
            spec.effect_base = learner_from_json(j.at("effect_base"), where + ".effect_base");
        }
        if (j.contains("propensity_base")) {
            spec.propensity_base = learner_from_json(j.at("propensity_base"), where + ".propensity_base");
        }
        if (j.contains("cross_fit_folds")) spec.cross_fit_folds = j.at("cross_fit_folds").get<int>();
        return spec;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("config: bad value in " + where + ": " + e.what());
    } catch (const std::invalid_argument& e) {
        throw ConfigError("config: bad value in " + where + ": " + e.what());
    }
}

json gen_to_json(const GenConfig& gen) {
    json j;
    j["n_customers"] = gen.n_customers;
    j["k_levels"] = gen.k_levels;
    j["cut_points"] = gen.cut_points;
    j["effect_shape"] = to_string(gen.effect_shape);
    j["effect_scale"] = gen.effect_scale;
    j["confounding_strength"] = gen.confounding_strength;
    j["overlap_violation_fraction"] = gen.overlap_violation_fraction;
    j["noise_sd"] = gen.noise_sd;
    j["seed"] = gen.seed;
    return j;
}

GenConfig gen_from_json(const json& j) {
    if (!j.is_object()) throw ConfigError("config: gen must be an object");
    check_keys(j,
               {"n_customers", "k_levels", "cut_points", "effect_shape", "effect_scale",
                "confounding_strength", "overlap_violation_fraction", "noise_sd", "seed"},
               "gen");
    GenConfig gen;
    try {
        if (j.contains("n_customers")) gen.n_customers = j.at("n_customers").get<int>();
        if (j.contains("k_levels")) gen.k_levels = j.at("k_levels").get<int>();
        if (j.contains("cut_points")) gen.cut_points = j.at("cut_points").get<std::vector<double>>();
        if (j.contains("effect_shape")) {
            gen.effect_shape = effect_shape_from_string(j.at("effect_shape").get<std::string>());
        }
        if (j.contains("effect_scale")) gen.effect_scale = j.at("effect_scale").get<double>();
        if (j.contains("confounding_strength")) {
            gen.confounding_strength = j.at("confounding_strength").get<double>();
        }
        if (j.contains("overlap_violation_fraction")) {
            gen.overlap_violation_fraction = j.at("overlap_violation_fraction").get<double>();
        }
        if (j.contains("noise_sd")) gen.noise_sd = j.at("noise_sd").get<double>();
        if (j.contains("seed")) gen.seed = j.at("seed").get<std::uint64_t>();
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("config: bad value in gen: ") + e.what());
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("config: bad value in gen: ") + e.what());
    }
    return gen;
}

std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void write_text_file(const std::string& path, const std::string& content) {
    const fs::path parent = fs::path(path).parent_path();
    if (!parent.empty()) fs::create_directories(parent);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot open '" + path + "' for writing");
    out << content;
    if (!out) throw DataError("failed while writing '" + path + "'");
}

void require_artifact(const std::string& path, const std::string& hint) {
    if (!fs::exists(path)) {
        throw ConfigError("config: " + hint + " '" + path + "' does not exist");
    }
}

std::vector<double> effective_cut_points(const PipelineConfig& config) {
    return config.cut_points.empty() ? config.gen.cut_points : config.cut_points;
}

std::vector<CateMethodSpec> effective_candidates(const PipelineConfig& config) {
    std::vector<CateMethodSpec> out =
        config.candidates.empty() ? default_candidates() : config.candidates;
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i].seed = derive_seed(config.seed, kTagCandidate, static_cast<std::uint64_t>(i));
    }
    return out;
}

std::vector<std::string> requested_policies(const PipelineConfig& config) {
    if (config.policy == "all") return kAllPolicies;
    criterion_from_string(config.policy);
    return {config.policy};
}

DosagePartition load_partition_artifact(const PipelineConfig& config) {
    const std::string path = partition_path(config);
    require_artifact(path, "partition artifact (run discretize first)");
    return partition_from_json(read_text_file(path));
}

std::vector<CustomerRecord> load_portfolio_artifact(const PipelineConfig& config) {
    const std::string path = portfolio_path(config);
    require_artifact(path, "paths.portfolio");
    return load_portfolio(path);
}

struct LevelEngine {
    int level = 0;
    PropensityModel gate;
    OverlapDataset data;
};

LevelEngine build_level_engine(const PipelineConfig& config,
                               const std::vector<CustomerRecord>& records,
                               const DosagePartition& partition, int level) {
    LevelEngine engine;
    engine.level = level;
    const LevelSlice slice = make_level_slice(records, partition, level);
    LearnerSpec gate_spec = config.propensity;
    gate_spec.seed = derive_seed(config.seed, kTagGate, static_cast<std::uint64_t>(level));
    engine.gate = fit_propensity(slice, gate_spec, config.trim_eps);
    engine.data = overlap_subset(slice, engine.gate);
    return engine;
}

const CateMethodSpec& candidate_by_name(const std::vector<CateMethodSpec>& candidates,
                                        const std::string& name) {
    for (const auto& c : candidates) {
        if (c.describe() == name) return c;
    }
    throw ConfigError("config: selected method '" + name + "' is not among the candidates");
}

double estimate_effective_ccf(const PipelineConfig& config, std::string& source) {
    if (!config.estimate_ccf) {
        source = "configured";
        return config.ccf;
    }
    if (config.paths.defaulters.empty()) {
        throw ConfigError("config: paths.defaulters is required when estimate_ccf is true");
    }
    require_artifact(config.paths.defaulters, "paths.defaulters");
    std::ifstream in(config.paths.defaulters, std::ios::binary);
    if (!in) throw DataError("cannot open defaulters file '" + config.paths.defaulters + "'");
    std::string line;
    if (!std::getline(in, line)) throw DataError("defaulters file is empty");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (csv::split_line(line) !=
        std::vector<std::string>{"balance_ref", "limit_ref", "balance_at_default"}) {
        throw DataError("defaulters file: unexpected header");
    }
    std::vector<DefaulterRecord> defaulters;
    std::size_t row = 0;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        ++row;
        const auto cells = csv::split_line(line);
        if (cells.size() != 3) {
            throw DataError("defaulters file, row " + std::to_string(row) + ": expected 3 columns");
        }
        try {
            defaulters.push_back(
                {csv::parse_double(cells[0]), csv::parse_double(cells[1]), csv::parse_double(cells[2])});
        } catch (const std::exception& e) {
            throw DataError("defaulters file, row " + std::to_string(row) + ": " + e.what());
        }
    }
    try {
        const double ccf = estimate_ccf(defaulters);
        source = "estimated from " + std::to_string(defaulters.size()) + " defaulter records";
        return ccf;
    } catch (const std::invalid_argument&) {
        source = "configured (estimation had no usable records)";
        return config.ccf;
    }
}

std::string percent(double fraction) { return csv::format_double(fraction * 100.0) + "%"; }

}  // namespace

std::vector<CateMethodSpec> default_candidates() {
    std::vector<CateMethodSpec> out;
    out.push_back(default_method_spec(CateMethod::two_model));  // two_model[forest]
    out.push_back(default_method_spec(CateMethod::direct));     // direct[ridge]
    CateMethodSpec two_linear = default_method_spec(CateMethod::two_model);
    two_linear.outcome_base = LearnerSpec::Linear();
    two_linear.name = "two_model[linear]";
    out.push_back(two_linear);
    out.push_back(default_method_spec(CateMethod::causal_tree));
    out.push_back(default_method_spec(CateMethod::x_learner));
    out.push_back(default_method_spec(CateMethod::r_learner));
    out.push_back(default_method_spec(CateMethod::causal_forest_dml));
    return out;
}

PipelineConfig config_from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("config: invalid JSON: ") + e.what());
    }
    if (!j.is_object()) throw ConfigError("config: top level must be an object");
    check_keys(j,
               {"seed", "policy", "folds", "correction_order", "bootstrap_b", "cvar_p", "trim_eps",
                "holdout_frac", "lgd", "ccf", "estimate_ccf", "cut_points", "paths", "gen",
                "propensity", "forward", "candidates", "risk_method"},
               "the top level");

    PipelineConfig config;
    try {
        if (j.contains("seed")) config.seed = j.at("seed").get<std::uint64_t>();
        if (j.contains("policy")) config.policy = j.at("policy").get<std::string>();
        if (j.contains("folds")) config.folds = j.at("folds").get<int>();
        if (j.contains("correction_order")) config.correction_order = j.at("correction_order").get<int>();
        if (j.contains("bootstrap_b")) config.bootstrap_b = j.at("bootstrap_b").get<int>();
        if (j.contains("cvar_p")) config.cvar_p = j.at("cvar_p").get<double>();
        if (j.contains("trim_eps")) config.trim_eps = j.at("trim_eps").get<double>();
        if (j.contains("holdout_frac")) config.holdout_frac = j.at("holdout_frac").get<double>();
        if (j.contains("lgd")) config.lgd = j.at("lgd").get<double>();
        if (j.contains("ccf")) config.ccf = j.at("ccf").get<double>();
        if (j.contains("estimate_ccf")) config.estimate_ccf = j.at("estimate_ccf").get<bool>();
        if (j.contains("cut_points")) config.cut_points = j.at("cut_points").get<std::vector<double>>();
        if (j.contains("paths")) {
            const json& pj = j.at("paths");
            if (!pj.is_object()) throw ConfigError("config: paths must be an object");
            check_keys(pj, {"out_dir", "portfolio", "truth", "defaulters"}, "paths");
            if (pj.contains("out_dir")) config.paths.out_dir = pj.at("out_dir").get<std::string>();
            if (pj.contains("portfolio")) config.paths.portfolio = pj.at("portfolio").get<std::string>();
            if (pj.contains("truth")) config.paths.truth = pj.at("truth").get<std::string>();
            if (pj.contains("defaulters")) config.paths.defaulters = pj.at("defaulters").get<std::string>();
        }
        if (j.contains("gen")) config.gen = gen_from_json(j.at("gen"));
        if (j.contains("propensity")) config.propensity = learner_from_json(j.at("propensity"), "propensity");
        if (j.contains("forward")) config.forward = learner_from_json(j.at("forward"), "forward");
        if (j.contains("candidates")) {
            config.candidates.clear();
            const json& cj = j.at("candidates");
            if (!cj.is_array()) throw ConfigError("config: candidates must be an array");
            for (std::size_t i = 0; i < cj.size(); ++i) {
                config.candidates.push_back(method_from_json(cj[i], "candidates[" + std::to_string(i) + "]"));
            }
        }
        if (j.contains("risk_method") && !j.at("risk_method").is_null()) {
            config.risk_method = method_from_json(j.at("risk_method"), "risk_method");
        }
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("config: bad value: ") + e.what());
    }
    validate_config(config);
    return config;
}

std::string config_to_json(const PipelineConfig& config) {
    json j;
    j["seed"] = config.seed;
    j["policy"] = config.policy;
    j["folds"] = config.folds;
    j["correction_order"] = config.correction_order;
    j["bootstrap_b"] = config.bootstrap_b;
    j["cvar_p"] = config.cvar_p;
    j["trim_eps"] = config.trim_eps;
    j["holdout_frac"] = config.holdout_frac;
    j["lgd"] = config.lgd;
    j["ccf"] = config.ccf;
    j["estimate_ccf"] = config.estimate_ccf;
    j["cut_points"] = config.cut_points;
    j["paths"] = {{"out_dir", config.paths.out_dir},
                  {"portfolio", config.paths.portfolio},
                  {"truth", config.paths.truth},
                  {"defaulters", config.paths.defaulters}};
    j["gen"] = gen_to_json(config.gen);
    j["propensity"] = learner_to_json(config.propensity);
    j["forward"] = learner_to_json(config.forward);
    j["candidates"] = json::array();
    for (const auto& c : config.candidates) j["candidates"].push_back(method_to_json(c));
    if (config.risk_method.has_value()) {
        j["risk_method"] = method_to_json(*config.risk_method);
    } else {
        j["risk_method"] = nullptr;
    }
    return j.dump(2) + "\n";
}

PipelineConfig load_config(const std::string& path) {
    require_artifact(path, "config file");
    return config_from_json(read_text_file(path));
}

void validate_config(const PipelineConfig& config) {
    if (config.paths.out_dir.empty()) throw ConfigError("config: paths.out_dir is empty");
    if (config.folds < 2) throw ConfigError("config: folds must be at least 2");
    if (config.correction_order != 0 && config.correction_order != 1) {
        throw ConfigError("config: correction_order must be 0 or 1");
    }
    if (config.bootstrap_b < 1) throw ConfigError("config: bootstrap_b must be positive");
    if (!(config.cvar_p > 0.0 && config.cvar_p < 1.0)) {
        throw ConfigError("config: cvar_p must lie in (0, 1)");
    }
    if (!(config.trim_eps >= 0.0 && config.trim_eps < 0.5)) {
        throw ConfigError("config: trim_eps must lie in [0, 0.5)");
    }
    if (!(config.holdout_frac > 0.0 && config.holdout_frac < 1.0)) {
        throw ConfigError("config: holdout_frac must lie in (0, 1)");
    }
    if (!(config.lgd >= 0.0 && config.lgd <= 1.0)) throw ConfigError("config: lgd must lie in [0, 1]");
    if (!(config.ccf >= 0.0 && config.ccf <= 1.0)) throw ConfigError("config: ccf must lie in [0, 1]");
    if (config.policy != "all") criterion_from_string(config.policy);
    for (std::size_t i = 0; i < config.candidates.size(); ++i) {
        if (config.candidates[i].cross_fit_folds < 2) {
            throw ConfigError("config: candidates[" + std::to_string(i) + "].cross_fit_folds must be at least 2");
        }
    }
}

void apply_overrides(PipelineConfig& config, const FlagOverrides& flags) {
    if (flags.seed.has_value()) {
        config.seed = *flags.seed;
        config.gen.seed = *flags.seed;
    }
    if (flags.policy.has_value()) config.policy = *flags.policy;
    if (flags.cut_points.has_value()) {
        config.cut_points = *flags.cut_points;
        config.gen.cut_points = *flags.cut_points;
        config.gen.k_levels = static_cast<int>(flags.cut_points->size()) + 1;
    }
    if (flags.trim_eps.has_value()) config.trim_eps = *flags.trim_eps;
    if (flags.cvar_p.has_value()) config.cvar_p = *flags.cvar_p;
    if (flags.bootstrap_b.has_value()) config.bootstrap_b = *flags.bootstrap_b;
    if (flags.out_dir.has_value()) config.paths.out_dir = *flags.out_dir;
    validate_config(config);
}

std::vector<double> parse_cut_points_csv(const std::string& text) {
    std::vector<double> cuts;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        const auto first = item.find_first_not_of(" \t");
        const auto last = item.find_last_not_of(" \t");
        const std::string token = first == std::string::npos ? "" : item.substr(first, last - first + 1);
        try {
            cuts.push_back(csv::parse_double(token));
        } catch (const std::exception&) {
            throw ConfigError("config: cut point '" + item + "' is not a number");
        }
    }
    if (cuts.empty()) throw ConfigError("config: --levels needs at least one cut point");
    return cuts;
}

std::string portfolio_path(const PipelineConfig& config) {
    return config.paths.portfolio.empty() ? (fs::path(config.paths.out_dir) / "portfolio.csv").string()
                                          : config.paths.portfolio;
}

std::string truth_path(const PipelineConfig& config) {
    return config.paths.truth.empty() ? truth_path_for(portfolio_path(config)) : config.paths.truth;
}

std::string partition_path(const PipelineConfig& config) {
    return (fs::path(config.paths.out_dir) / "partition.json").string();
}

std::string selection_path(const PipelineConfig& config) {
    return (fs::path(config.paths.out_dir) / "selection.json").string();
}

std::string forward_path(const PipelineConfig& config) {
    return (fs::path(config.paths.out_dir) / "forward.json").string();
}

std::string decisions_path(const PipelineConfig& config, const std::string& policy) {
    return (fs::path(config.paths.out_dir) / ("decisions_" + policy + ".csv")).string();
}

std::string backtest_path(const PipelineConfig& config, const std::string& policy, bool markdown) {
    return (fs::path(config.paths.out_dir) / ("backtest_" + policy + (markdown ? ".md" : ".json")))
        .string();
}

std::string report_path(const PipelineConfig& config) {
    return (fs::path(config.paths.out_dir) / "report.md").string();
}

StageResult run_simulate(const PipelineConfig& config) {
    validate_config(config);
    const auto [records, truth] = generate_portfolio(config.gen);
    const std::string pf = portfolio_path(config);
    const std::string tf = truth_path(config);
    fs::create_directories(config.paths.out_dir);
    const fs::path parent = fs::path(pf).parent_path();
    if (!parent.empty()) fs::create_directories(parent);
    write_portfolio(records, pf);
    write_ground_truth(truth, tf);
    return {{pf, tf}};
}

StageResult run_discretize(const PipelineConfig& config) {
    validate_config(config);
    const auto records = load_portfolio_artifact(config);
    std::vector<double> dosages;
    dosages.reserve(records.size());
    for (const auto& r : records) dosages.push_back(r.observed_dosage);
    const DosagePartition partition = discretize(dosages, effective_cut_points(config));
    const std::string path = partition_path(config);
    write_text_file(path, partition_to_json(partition));
    return {{path}};
}

StageResult run_select(const PipelineConfig& config) {
    validate_config(config);
    const auto records = load_portfolio_artifact(config);
    const DosagePartition partition = load_partition_artifact(config);
    const std::vector<CateMethodSpec> candidates = effective_candidates(config);

    SelectionReport report;
    for (const auto& c : candidates) report.methods.push_back(c.describe());
    for (int level = 1; level <= partition.k(); ++level) {
        if (!partition.defined(level)) continue;
        const LevelEngine engine = build_level_engine(config, records, partition, level);
        report.per_level.push_back(select_model(candidates, engine.data, engine.gate, config.folds,
                                                config.correction_order,
                                                derive_seed(config.seed, kTagSelect,
                                                            static_cast<std::uint64_t>(level))));
    }
    if (report.per_level.empty()) throw DataError("select: the partition has no defined levels");

    const std::string jpath = selection_path(config);
    const std::string mpath = (fs::path(config.paths.out_dir) / "selection.md").string();
    write_text_file(jpath, selection_report_json(report));
    write_text_file(mpath, selection_report_markdown(report));
    return {{jpath, mpath}};
}

StageResult run_recommend(const PipelineConfig& config) {
    validate_config(config);
    const auto records = load_portfolio_artifact(config);
    const DosagePartition partition = load_partition_artifact(config);
    const std::vector<CateMethodSpec> candidates = effective_candidates(config);
    const std::vector<std::string> policies = requested_policies(config);

    const bool need_point =
        std::find(policies.begin(), policies.end(), "cl") != policies.end();
    const bool need_cvar =
        std::find(policies.begin(), policies.end(), "cl-cvar") != policies.end() ||
        std::find(policies.begin(), policies.end(), "cl-cvar-fl") != policies.end();
    const bool need_forward =
        std::find(policies.begin(), policies.end(), "cl-cvar-fl") != policies.end() ||
        std::find(policies.begin(), policies.end(), "predict-only") != policies.end();

    // Selected method per level; without a selection artifact every level
    // falls back to the first candidate.
    std::map<int, CateMethodSpec> chosen;
    if (fs::exists(selection_path(config))) {
        const SelectionReport sel = selection_report_from_json(read_text_file(selection_path(config)));
        for (const auto& level_sel : sel.per_level) {
            chosen.emplace(level_sel.level,
                           candidate_by_name(candidates,
                                             level_sel.scores[static_cast<std::size_t>(level_sel.chosen)].name));
        }
        for (int level = 1; level <= partition.k(); ++level) {
            if (partition.defined(level) && chosen.find(level) == chosen.end()) {
                throw DataError("recommend: selection artifact has no entry for level " +
                                std::to_string(level) + "; rerun select");
            }
        }
    } else {
        for (int level = 1; level <= partition.k(); ++level) {
            if (partition.defined(level)) chosen.emplace(level, candidates.front());
        }
    }

    const auto n = static_cast<Eigen::Index>(records.size());
    const Eigen::MatrixXd X = feature_matrix(records);
    const auto k = static_cast<std::size_t>(partition.k());
    std::vector<std::vector<std::optional<double>>> point_values;
    std::vector<std::vector<std::optional<double>>> cvar_values;
    if (need_point) point_values.assign(records.size(), std::vector<std::optional<double>>(k));
    if (need_cvar) cvar_values.assign(records.size(), std::vector<std::optional<double>>(k));

    StageResult result;
    for (int level = 1; level <= partition.k(); ++level) {
        if (!partition.defined(level)) continue;
        const LevelEngine engine = build_level_engine(config, records, partition, level);
        const std::size_t slot = static_cast<std::size_t>(level - 1);
        if (need_point) {
            CateMethodSpec spec = chosen.at(level);
            spec.seed = derive_seed(config.seed, kTagPoint, static_cast<std::uint64_t>(level));
            const CateModel model = fit_cate(spec, engine.data, engine.gate);
            for (Eigen::Index i = 0; i < n; ++i) {
                point_values[static_cast<std::size_t>(i)][slot] = model.predict_cate(X.row(i));
            }
        }
        if (need_cvar) {
            CateMethodSpec spec = config.risk_method.has_value() ? *config.risk_method : chosen.at(level);
            spec.seed = derive_seed(config.seed, kTagBootSpec, static_cast<std::uint64_t>(level));
            const BootstrapEnsemble ensemble =
                fit_bootstrap_ensemble(spec, engine.data, engine.gate, config.bootstrap_b,
                                       derive_seed(config.seed, kTagBootData,
                                                   static_cast<std::uint64_t>(level)));
            for (Eigen::Index i = 0; i < n; ++i) {
                if (!engine.gate.in_band(X.row(i))) continue;
                cvar_values[static_cast<std::size_t>(i)][slot] =
                    cvar(distribution_at(ensemble, X.row(i)), config.cvar_p);
            }
        }
    }

    std::optional<ForwardModel> forward;
    if (need_forward) {
        forward = fit_forward_model(records, partition, config.forward, config.holdout_frac,
                                    derive_seed(config.seed, kTagForward));
        json fj;
        fj["holdout_rmse"] = forward->holdout_rmse;
        fj["holdout_sd"] = forward->holdout_sd;
        fj["rmse_to_sd"] = forward->holdout_rmse / forward->holdout_sd;
        write_text_file(forward_path(config), fj.dump(2) + "\n");
        result.artifacts.push_back(forward_path(config));
    }

    for (const std::string& policy : policies) {
        const Criterion criterion = criterion_from_string(policy);
        std::vector<PolicyDecision> decisions;
        decisions.reserve(records.size());
        for (Eigen::Index i = 0; i < n; ++i) {
            const auto& r = records[static_cast<std::size_t>(i)];
            switch (criterion) {
                case Criterion::cl:
                    decisions.push_back(decide_from_values(point_values[static_cast<std::size_t>(i)],
                                                           partition, r.id, Criterion::cl));
                    break;
                case Criterion::cl_cvar:
                    decisions.push_back(decide_from_values(cvar_values[static_cast<std::size_t>(i)],
                                                           partition, r.id, Criterion::cl_cvar));
                    break;
                case Criterion::cl_cvar_fl: {
                    const PolicyDecision upstream = decide_from_values(
                        cvar_values[static_cast<std::size_t>(i)], partition, r.id, Criterion::cl_cvar);
                    decisions.push_back(recommend_cl_cvar_fl(upstream, r.ep_m3, *forward, X.row(i)));
                    break;
                }
                case Criterion::predict_only:
                    decisions.push_back(
                        recommend_prediction_only(*forward, X.row(i), partition, r.ep_m3, r.id));
                    break;
            }
        }
        const std::string path = decisions_path(config, policy);
        write_decisions(decisions, path);
        result.artifacts.push_back(path);
    }
    return result;
}

StageResult run_evaluate(const PipelineConfig& config) {
    validate_config(config);
    const auto records = load_portfolio_artifact(config);
    const DosagePartition partition = load_partition_artifact(config);

    std::vector<int> cpp_levels;
    cpp_levels.reserve(records.size());
    for (const auto& r : records) cpp_levels.push_back(assign_level(r.observed_dosage, partition));

    std::optional<GroundTruth> truth;
    if (fs::exists(truth_path(config))) truth = load_ground_truth(truth_path(config));

    const bool explicit_policy = config.policy != "all";
    StageResult result;
    for (const std::string& policy : requested_policies(config)) {
        const std::string dpath = decisions_path(config, policy);
        if (!fs::exists(dpath)) {
            if (explicit_policy) {
                throw ConfigError("config: decisions artifact '" + dpath +
                                  "' does not exist (run recommend first)");
            }
            continue;
        }
        const std::vector<PolicyDecision> decisions = load_decisions(dpath);
        const ScenarioMetrics metrics = evaluate(decisions, cpp_levels, records);

        std::int64_t treated = 0;
        for (const auto& d : decisions) treated += d.chosen_level > 0 ? 1 : 0;
        const double treated_fraction =
            decisions.empty() ? 0.0 : static_cast<double>(treated) / static_cast<double>(decisions.size());

        json j;
        j["policy"] = policy;
        j["treated_fraction"] = treated_fraction;
        j["scenarios"] = json::parse(scenario_json(metrics));
        if (truth.has_value()) {
            j["oracle_policy_value"] = oracle_policy_value(*truth, decisions);
            j["oracle_always_control"] = truth->y0.sum();
        } else {
            j["oracle_policy_value"] = nullptr;
            j["oracle_always_control"] = nullptr;
        }
        write_text_file(backtest_path(config, policy, false), j.dump(2) + "\n");

        std::ostringstream md;
        md << "### Policy " << policy << "\n\n";
        md << "Treated fraction: " << percent(treated_fraction) << "\n\n";
        md << scenario_markdown(metrics);
        if (truth.has_value()) {
            md << "\nOracle policy value: " << csv::format_double(oracle_policy_value(*truth, decisions))
               << "\n";
            md << "Oracle always-control value: " << csv::format_double(truth->y0.sum()) << "\n";
        }
        write_text_file(backtest_path(config, policy, true), md.str());

        result.artifacts.push_back(backtest_path(config, policy, false));
        result.artifacts.push_back(backtest_path(config, policy, true));
    }
    if (result.artifacts.empty()) {
        throw ConfigError("config: no decisions artifacts found in '" + config.paths.out_dir +
                          "' (run recommend first)");
    }
    return result;
}

StageResult run_report(const PipelineConfig& config) {
    validate_config(config);
    std::vector<std::string> missing;
    std::ostringstream out;

    out << "# Credit limit recommendation report\n\n";

    out << "## Configuration\n\n";
    out << "- seed: " << config.seed << "\n";
    out << "- folds: " << config.folds << "\n";
    out << "- correction order: " << config.correction_order << "\n";
    out << "- bootstrap replicates: " << config.bootstrap_b << "\n";
    out << "- CVaR confidence p: " << csv::format_double(config.cvar_p) << "\n";
    out << "- overlap trim eps: " << csv::format_double(config.trim_eps) << "\n";
    out << "- LGD: " << csv::format_double(config.lgd) << "\n";
    std::string ccf_source;
    const double ccf = estimate_effective_ccf(config, ccf_source);
    out << "- CCF: " << csv::format_double(ccf) << " (" << ccf_source << ")\n";
    out << "- policy: " << config.policy << "\n\n";

    std::optional<DosagePartition> partition;
    std::vector<CustomerRecord> records;
    if (fs::exists(partition_path(config))) {
        partition = partition_from_json(read_text_file(partition_path(config)));
    } else {
        missing.push_back(partition_path(config));
    }
    if (fs::exists(portfolio_path(config))) {
        records = load_portfolio(portfolio_path(config));
    } else {
        missing.push_back(portfolio_path(config));
    }

    if (partition.has_value() && !records.empty()) {
        std::vector<int> cpp_levels;
        cpp_levels.reserve(records.size());
        for (const auto& r : records) cpp_levels.push_back(assign_level(r.observed_dosage, *partition));
        out << "## Historical policy\n\n";
        out << level_distribution_markdown(cpp_levels, *partition,
                                           "Distribution of historically assigned levels:");
        out << "\n";
    }

    if (fs::exists(selection_path(config))) {
        const SelectionReport sel = selection_report_from_json(read_text_file(selection_path(config)));
        out << "## Model selection (estimated root-PEHE, mean +/- SD over folds)\n\n";
        out << selection_report_markdown(sel) << "\n";
    } else {
        missing.push_back(selection_path(config));
    }

    if (fs::exists(forward_path(config))) {
        const json fj = json::parse(read_text_file(forward_path(config)));
        out << "## Profit prediction model\n\n";
        out << "Held-out rmse " << csv::format_double(fj.at("holdout_rmse").get<double>()) << " vs target SD "
            << csv::format_double(fj.at("holdout_sd").get<double>()) << " (ratio "
            << csv::format_double(fj.at("rmse_to_sd").get<double>()) << ")\n\n";
    } else {
        missing.push_back(forward_path(config));
    }

    bool any_decisions = false;
    if (partition.has_value()) {
        for (const std::string& policy : kAllPolicies) {
            const std::string dpath = decisions_path(config, policy);
            if (!fs::exists(dpath)) continue;
            if (!any_decisions) out << "## Recommended level distributions\n\n";
            any_decisions = true;
            const auto decisions = load_decisions(dpath);
            std::vector<int> levels;
            levels.reserve(decisions.size());
            for (const auto& d : decisions) levels.push_back(d.chosen_level);
            out << level_distribution_markdown(levels, *partition, "Policy " + policy + ":") << "\n";
        }
    }
    if (!any_decisions) missing.push_back(decisions_path(config, "<policy>"));

    bool any_backtest = false;
    for (const std::string& policy : kAllPolicies) {
        const std::string bpath = backtest_path(config, policy, true);
        if (!fs::exists(bpath)) continue;
        if (!any_backtest) out << "## Back-test against the historical policy\n\n";
        any_backtest = true;
        out << read_text_file(bpath) << "\n";
    }
    if (!any_backtest) missing.push_back(backtest_path(config, "<policy>", true));

    if (!missing.empty()) {
        out << "## Missing artifacts\n\n";
        for (const auto& path : missing) out << "- " << fs::path(path).filename().string() << "\n";
    }

    const std::string path = report_path(config);
    write_text_file(path, out.str());
    return {{path}};
}

}  // namespace creditlift
