// Command-line front end: single trials, the Table-1 comparison, the
// sparsity histograms, grid sweeps, the GLM penalty check and the
// finite-difference gradient check.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "bridgeout/data.hpp"
#include "bridgeout/errors.hpp"
#include "bridgeout/glm.hpp"
#include "bridgeout/harness.hpp"
#include "bridgeout/matrix.hpp"
#include "bridgeout/network.hpp"
#include "bridgeout/optim.hpp"
#include "bridgeout/regularizers.hpp"
#include "bridgeout/rng.hpp"

namespace {

using namespace bridgeout;

const std::set<std::string> kKnownKeys = {
    "kind",        "seed",        "seeds",      "trials",     "regularizer",
    "p",           "q",           "c",          "unbiased_shakeout", "eps",
    "data_dir",    "out_dir",     "subset_size", "subset_seed",
    "lr",          "iterations",  "epochs",     "batch_size", "optimizer",
    "activation",  "hidden",      "max_norm",   "row_norm_clip", "grad_scale",
    "bins",        "q_list",      "p_grid",     "q_grid",     "c_grid",
    "family",      "n_samples",   "beta_scale", "n",          "d",
    "widths",      "tol",         "h",          "noise_sigma"};

// Flat key=value settings merged from an optional config file and the
// command line; command-line values win.
struct OptionBag {
    std::map<std::string, std::string> file_vals;
    std::map<std::string, std::string> cli_vals;

    void load_file(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw ConfigError("cannot open config file " + path);
        std::string line;
        std::size_t lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            const auto hash = line.find('#');
            if (hash != std::string::npos) line = line.substr(0, hash);
            const auto strip = [](std::string s) {
                const auto a = s.find_first_not_of(" \t\r");
                if (a == std::string::npos) return std::string();
                const auto b = s.find_last_not_of(" \t\r");
                return s.substr(a, b - a + 1);
            };
            line = strip(line);
            if (line.empty()) continue;
            const auto eq = line.find('=');
            if (eq == std::string::npos)
                throw ConfigError(path + ":" + std::to_string(lineno) +
                                  ": expected key=value, got '" + line + "'");
            const std::string key = strip(line.substr(0, eq));
            const std::string value = strip(line.substr(eq + 1));
            if (!kKnownKeys.count(key))
                throw ConfigError(path + ":" + std::to_string(lineno) + ": unknown key '" +
                                  key + "'");
            file_vals[key] = value;
        }
    }

    std::optional<std::string> get(const std::string& key) const {
        if (auto it = cli_vals.find(key); it != cli_vals.end()) return it->second;
        if (auto it = file_vals.find(key); it != file_vals.end()) return it->second;
        return std::nullopt;
    }

    bool has(const std::string& key) const { return get(key).has_value(); }

    std::string get_str(const std::string& key, const std::string& dflt) const {
        return get(key).value_or(dflt);
    }

    double get_double(const std::string& key, double dflt) const {
        const auto v = get(key);
        if (!v) return dflt;
        try {
            std::size_t pos = 0;
            const double out = std::stod(*v, &pos);
            if (pos != v->size()) throw std::invalid_argument("");
            return out;
        } catch (const std::exception&) {
            throw ConfigError("option " + key + ": '" + *v + "' is not a number");
        }
    }

    std::uint64_t get_u64(const std::string& key, std::uint64_t dflt) const {
        const auto v = get(key);
        if (!v) return dflt;
        try {
            return std::stoull(*v);
        } catch (const std::exception&) {
            throw ConfigError("option " + key + ": '" + *v + "' is not an integer");
        }
    }

    bool get_bool(const std::string& key, bool dflt) const {
        const auto v = get(key);
        if (!v) return dflt;
        if (*v == "1" || *v == "true" || *v == "yes") return true;
        if (*v == "0" || *v == "false" || *v == "no") return false;
        throw ConfigError("option " + key + ": '" + *v + "' is not a boolean");
    }

    std::vector<double> get_double_list(const std::string& key,
                                        const std::vector<double>& dflt) const {
        const auto v = get(key);
        if (!v) return dflt;
        std::vector<double> out;
        std::stringstream ss(*v);
        std::string item;
        while (std::getline(ss, item, ','))
            if (!item.empty()) out.push_back(std::stod(item));
        if (out.empty()) throw ConfigError("option " + key + ": empty list");
        return out;
    }

    std::vector<std::uint64_t> get_u64_list(const std::string& key,
                                            const std::vector<std::uint64_t>& dflt) const {
        const auto v = get(key);
        if (!v) return dflt;
        std::vector<std::uint64_t> out;
        std::stringstream ss(*v);
        std::string item;
        while (std::getline(ss, item, ','))
            if (!item.empty()) out.push_back(std::stoull(item));
        if (out.empty()) throw ConfigError("option " + key + ": empty list");
        return out;
    }
};

// Registers --flag writing into the bag under key, plus --config itself.
void add_common_options(CLI::App* cmd, OptionBag& bag, std::string& config_path) {
    cmd->add_option("--config", config_path, "key=value config file; flags override it");
    const auto opt = [cmd, &bag](const char* flag, const char* key, const char* desc) {
        cmd->add_option(flag, [&bag, key](const CLI::results_t& res) {
            bag.cli_vals[key] = res.back();
            return true;
        }, desc);
    };
    opt("--kind", "kind", "experiment kind: table1 | sparsity_hist | autoencoder_hist | mnist_dnn");
    opt("--seed", "seed", "trial seed");
    opt("--seeds", "seeds", "comma-separated seed list");
    opt("--regularizer", "regularizer", "none | dropout | shakeout | bridgeout");
    opt("--p", "p", "retention probability");
    opt("--q", "q", "bridgeout norm power");
    opt("--c", "c", "shakeout L1 strength");
    opt("--unbiased-shakeout", "unbiased_shakeout", "use the unbiased m=1 increment (0/1)");
    opt("--eps", "eps", "gradient singularity floor");
    opt("--data-dir", "data_dir", "directory holding the IDX files");
    opt("--out-dir", "out_dir", "directory for result files");
    opt("--subset-size", "subset_size", "training subset size for mnist_dnn");
    opt("--subset-seed", "subset_seed", "seed fixing the training subset");
    opt("--lr", "lr", "learning rate");
    opt("--iterations", "iterations", "full-batch iterations (GLM experiments)");
    opt("--epochs", "epochs", "training epochs (network experiments)");
    opt("--batch-size", "batch_size", "minibatch size");
    opt("--optimizer", "optimizer", "sgd | adam");
    opt("--activation", "activation", "hidden activation: sigmoid | relu");
    opt("--hidden", "hidden", "comma-separated hidden widths");
    opt("--max-norm", "max_norm", "per-weight clamp threshold; 0 disables");
    opt("--row-norm-clip", "row_norm_clip", "clip per-row L2 norms instead (0/1)");
    opt("--grad-scale", "grad_scale", "objective scale: gradient multiplier on the mean loss");
}

Activation activation_from_name(const std::string& name) {
    if (name == "sigmoid") return Activation::Sigmoid;
    if (name == "relu") return Activation::Relu;
    if (name == "identity") return Activation::Identity;
    if (name == "softmax") return Activation::Softmax;
    throw ConfigError("unknown activation '" + name + "'");
}

RegKind reg_kind_from_name(const std::string& name) {
    if (name == "none") return RegKind::None;
    if (name == "dropout") return RegKind::Dropout;
    if (name == "shakeout") return RegKind::Shakeout;
    if (name == "bridgeout") return RegKind::Bridgeout;
    throw ConfigError("unknown regularizer '" + name + "'");
}

RegularizerConfig build_regularizer(const OptionBag& bag, ExperimentKind kind,
                                    const std::string& dflt_kind = "none") {
    RegularizerConfig reg;
    reg.kind = reg_kind_from_name(bag.get_str("regularizer", dflt_kind));
    reg.p = bag.get_double("p", 0.5);
    reg.q = bag.get_double("q", 1.0);
    reg.c = bag.get_double("c", 0.3);
    // The Table-1 comparison needs the zero-mean variant to converge; the
    // published (biased) form stays the default everywhere else.
    reg.unbiased_shakeout =
        bag.get_bool("unbiased_shakeout", kind == ExperimentKind::Table1);
    reg.eps = bag.get_double("eps", 0.0);  // 0 resolves to the kind default
    return reg;
}

ExperimentConfig build_experiment_config(const OptionBag& bag,
                                         const std::string& default_kind) {
    ExperimentConfig cfg;
    cfg.kind = experiment_kind_from_name(bag.get_str("kind", default_kind));
    cfg.regularizer = build_regularizer(bag, cfg.kind);
    cfg.train.learning_rate = bag.get_double("lr", 0.0);
    cfg.train.epochs = static_cast<std::size_t>(bag.get_u64(
        "epochs", bag.get_u64("iterations", ExperimentConfig::kUnsetEpochs)));
    cfg.train.batch_size = static_cast<std::size_t>(bag.get_u64("batch_size", 0));
    cfg.train.grad_scale = bag.get_double("grad_scale", 0.0);
    cfg.train.max_norm_t = bag.get_double("max_norm", -1.0);
    cfg.train.row_norm_clip = bag.get_bool("row_norm_clip", false);
    if (bag.has("optimizer")) {
        const std::string name = bag.get_str("optimizer", "sgd");
        if (name == "sgd") cfg.train.optimizer = OptimizerKind::Sgd;
        else if (name == "adam") cfg.train.optimizer = OptimizerKind::Adam;
        else throw ConfigError("unknown optimizer '" + name + "'");
    } else if (cfg.kind == ExperimentKind::MnistDnn ||
               cfg.kind == ExperimentKind::AutoencoderHist) {
        cfg.train.optimizer = OptimizerKind::Adam;
    }
    cfg.hidden_activation = activation_from_name(bag.get_str("activation", "sigmoid"));
    if (bag.has("hidden")) {
        cfg.hidden_widths.clear();
        for (double w : bag.get_double_list("hidden", {}))
            cfg.hidden_widths.push_back(static_cast<std::size_t>(w));
    }
    cfg.data_dir = bag.get_str("data_dir", "data");
    cfg.out_dir = bag.get_str("out_dir", "out");
    cfg.subset_size = static_cast<std::size_t>(bag.get_u64("subset_size", 3000));
    cfg.subset_seed = bag.get_u64("subset_seed", 1234);
    cfg.seeds = bag.get_u64_list("seeds", {bag.get_u64("seed", 1)});
    return cfg;
}

int cmd_train(const OptionBag& bag) {
    ExperimentConfig cfg = build_experiment_config(bag, "table1");
    const std::uint64_t seed = bag.get_u64("seed", 1);
    TrialResult trial = run_trial(cfg, seed);
    const std::string stem = std::string("trial_") + experiment_kind_name(cfg.kind) + "_" +
                             reg_kind_name(cfg.regularizer.kind) + "_seed" +
                             std::to_string(seed);
    trial.write_files(cfg.out_dir, stem);
    std::cout << trial.result_record();
    std::printf("wall_seconds=%.3f\n", trial.wall_seconds);
    std::cout << "wrote " << cfg.out_dir << "/" << stem << ".txt\n";
    return 0;
}

int cmd_table1(const OptionBag& bag) {
    const auto trials = static_cast<std::size_t>(bag.get_u64("trials", 20));
    if (trials < 2) throw ConfigError("table1 needs at least 2 trials");
    OptionBag local = bag;
    std::vector<std::uint64_t> seeds;
    for (std::size_t s = 1; s <= trials; ++s) seeds.push_back(s);

    std::printf("%-18s %12s %12s\n", "method", "mean err %", "stderr");
    const std::string out_dir = bag.get_str("out_dir", "out");
    std::filesystem::create_directories(out_dir);
    std::ofstream csv(out_dir + "/table1.csv");
    csv << "method,mean_test_error_pct,stderr,trials\n";
    for (const char* method : {"none", "dropout", "shakeout", "bridgeout"}) {
        local.cli_vals["regularizer"] = method;
        ExperimentConfig cfg = build_experiment_config(local, "table1");
        cfg.seeds = seeds;
        std::vector<TrialResult> results;
        results.reserve(trials);
        for (std::uint64_t seed : seeds) results.push_back(run_trial(cfg, seed));
        const auto [mean, se] = aggregate(results);
        std::printf("%-18s %12.4f %12.4f\n", method, mean, se);
        csv << method << "," << mean << "," << se << "," << trials << "\n";
    }
    std::cout << "wrote " << out_dir << "/table1.csv\n";
    return 0;
}

int cmd_hist(const OptionBag& bag) {
    OptionBag local = bag;
    local.cli_vals["kind"] = bag.get_str("kind", "sparsity_hist");
    const std::uint64_t seed = bag.get_u64("seed", 1);
    const auto bins = static_cast<std::size_t>(bag.get_u64("bins", 101));
    const std::vector<double> q_list = bag.get_double_list("q_list", {2.0, 1.5, 1.0, 0.5});
    const std::string out_dir = bag.get_str("out_dir", "out");
    std::filesystem::create_directories(out_dir);

    std::printf("%-22s %18s\n", "run", "near_zero_fraction");
    local.cli_vals["regularizer"] = "dropout";
    {
        ExperimentConfig cfg = build_experiment_config(local, "sparsity_hist");
        TrialResult trial = run_trial(cfg, seed);
        WeightHistogram h = export_weight_histogram(trial.final_weights, bins,
                                                    out_dir + "/hist_dropout.csv");
        std::printf("%-22s %18.6f\n", "dropout", h.layers[0].near_zero_fraction);
    }
    local.cli_vals["regularizer"] = "bridgeout";
    for (double q : q_list) {
        local.cli_vals["q"] = std::to_string(q);
        ExperimentConfig cfg = build_experiment_config(local, "sparsity_hist");
        TrialResult trial = run_trial(cfg, seed);
        char name[64];
        std::snprintf(name, sizeof name, "hist_bridgeout_q%g.csv", q);
        WeightHistogram h =
            export_weight_histogram(trial.final_weights, bins, out_dir + "/" + name);
        std::snprintf(name, sizeof name, "bridgeout q=%g", q);
        std::printf("%-22s %18.6f\n", name, h.layers[0].near_zero_fraction);
    }
    std::cout << "histograms written under " << out_dir << "\n";
    return 0;
}

int cmd_sweep(const OptionBag& bag) {
    ExperimentConfig cfg = build_experiment_config(bag, "mnist_dnn");
    const std::vector<double> p_grid = bag.get_double_list("p_grid", default_p_grid());
    std::vector<double> second_grid;
    if (cfg.regularizer.kind == RegKind::Bridgeout)
        second_grid = bag.get_double_list("q_grid", default_q_grid());
    else if (cfg.regularizer.kind == RegKind::Shakeout)
        second_grid = bag.get_double_list("c_grid", {0.1, 0.3, 0.5});

    SweepResult result = sweep(cfg, p_grid, second_grid);
    const std::string out_dir = cfg.out_dir;
    std::filesystem::create_directories(out_dir);
    std::ofstream csv(out_dir + "/sweep.csv");
    csv << "p,second,mean_val_error_pct\n";
    for (const SweepPoint& point : result.grid)
        csv << point.p << "," << point.second << "," << point.mean_val_error << "\n";
    const SweepPoint& best = result.best();
    std::printf("selected p=%g", best.p);
    if (cfg.regularizer.kind == RegKind::Bridgeout) std::printf(" q=%g", best.second);
    if (cfg.regularizer.kind == RegKind::Shakeout) std::printf(" c=%g", best.second);
    std::printf(" mean_val_error=%.4f%%\n", best.mean_val_error);
    std::cout << "wrote " << out_dir << "/sweep.csv\n";
    return 0;
}

int cmd_glm_check(const OptionBag& bag) {
    const std::uint64_t seed = bag.get_u64("seed", 1);
    const std::string family_name = bag.get_str("family", "logistic");
    GlmFamily family;
    if (family_name == "linear") family = GlmFamily::Linear;
    else if (family_name == "logistic") family = GlmFamily::Logistic;
    else throw ConfigError("unknown family '" + family_name + "'");
    const auto n = static_cast<std::size_t>(bag.get_u64("n", 20));
    const auto d = static_cast<std::size_t>(bag.get_u64("d", 8));
    const double p = bag.get_double("p", 0.5);
    const double q = bag.get_double("q", 1.0);
    const double beta_scale = bag.get_double("beta_scale", family == GlmFamily::Logistic ? 0.1 : 1.0);
    const auto n_samples = static_cast<std::size_t>(bag.get_u64("n_samples", 200000));

    RngStream rng(seed, 0x61D);
    GlmProblem prob;
    prob.family = family;
    prob.X = sample_gaussian(n, d, rng);
    prob.beta = scale(sample_gaussian(d, 1, rng), beta_scale);
    prob.y = Matrix(n, 1);
    for (std::size_t i = 0; i < n; ++i)
        prob.y(i, 0) = family == GlmFamily::Logistic ? (rng.next_double() < 0.5 ? 0.0 : 1.0)
                                                     : rng.next_gaussian();

    RngStream mc_rng = rng.split(0x4D43);
    PenaltyReport report = mc_marginalized_regularizer(prob, p, q, n_samples, mc_rng);
    std::cout << report.to_record(prob, p, q) << "\n";
    return 0;
}

int cmd_gradcheck(const OptionBag& bag) {
    const std::uint64_t seed = bag.get_u64("seed", 1);
    const double h = bag.get_double("h", 1e-5);
    const double tol = bag.get_double("tol", 1e-4);
    const std::string act_name = bag.get_str("activation", "sigmoid");
    std::vector<std::size_t> widths = {6, 5};
    if (bag.has("widths")) {
        widths.clear();
        for (double w : bag.get_double_list("widths", {}))
            widths.push_back(static_cast<std::size_t>(w));
    }
    RegularizerConfig reg = build_regularizer(bag, ExperimentKind::MnistDnn, "bridgeout");
    if (reg.eps == 0.0) reg.eps = 1e-8;

    RngStream rng(seed, 0x6C);
    const std::size_t in_dim = 4, out_dim = 3, batch = 5;
    Network net;
    net.loss = LossKind::CrossEntropy;
    std::size_t prev = in_dim;
    for (std::size_t w : widths) {
        Layer layer;
        layer.weights = xavier_init(w, prev, rng);
        layer.bias = sample_uniform(1, w, -0.1, 0.1, rng);
        layer.activation = activation_from_name(act_name);
        layer.regularizer = reg;
        net.layers.push_back(std::move(layer));
        prev = w;
    }
    Layer out;
    out.weights = xavier_init(out_dim, prev, rng);
    out.bias = Matrix(1, out_dim);
    out.activation = Activation::Softmax;
    net.layers.push_back(std::move(out));

    Matrix batch_x = sample_gaussian(batch, in_dim, rng);
    Matrix targets(batch, out_dim);
    for (std::size_t i = 0; i < batch; ++i)
        targets(i, rng.next_below(out_dim)) = 1.0;

    std::vector<MaskSet> masks;
    RngStream mask_rng = rng.split(7);
    for (const Layer& layer : net.layers) {
        if (layer.regularizer.kind == RegKind::None) {
            masks.emplace_back();
        } else if (layer.regularizer.kind == RegKind::Dropout) {
            MaskSet m;
            m.unit_mask = sample_bernoulli(batch, layer.in_dim(), layer.regularizer.p, mask_rng);
            masks.push_back(std::move(m));
        } else {
            masks.push_back(
                sample_masks(layer.regularizer, layer.out_dim(), layer.in_dim(), mask_rng));
        }
    }

    ForwardTrace trace = forward_with_masks(net, batch_x, masks);
    Gradients analytic = backward(net, trace, targets);
    Gradients numeric = finite_diff_grad(net, batch_x, targets, masks, h);

    double max_rel = 0.0;
    for (std::size_t l = 0; l < net.layers.size(); ++l) {
        for (std::size_t i = 0; i < analytic.weights[l].size(); ++i) {
            const double w = net.layers[l].weights[i];
            if (std::fabs(w) < 1e-3 &&
                (net.layers[l].regularizer.kind == RegKind::Bridgeout ||
                 net.layers[l].regularizer.kind == RegKind::Shakeout))
                continue;
            const double a = analytic.weights[l][i], nmr = numeric.weights[l][i];
            const double diff = std::fabs(a - nmr);
            if (diff < 1e-10) continue;
            max_rel = std::max(max_rel, diff / std::max(std::fabs(a), std::fabs(nmr)));
        }
        for (std::size_t i = 0; i < analytic.biases[l].size(); ++i) {
            const double a = analytic.biases[l][i], nmr = numeric.biases[l][i];
            const double diff = std::fabs(a - nmr);
            if (diff < 1e-10) continue;
            max_rel = std::max(max_rel, diff / std::max(std::fabs(a), std::fabs(nmr)));
        }
    }
    std::printf("gradcheck regularizer=%s activation=%s h=%g max_rel_error=%.3e tol=%g %s\n",
                reg_kind_name(reg.kind), act_name.c_str(), h, max_rel, tol,
                max_rel < tol ? "OK" : "FAIL");
    return max_rel < tol ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"stochastic weight-perturbation training toolkit"};
    app.require_subcommand(1);

    OptionBag bag;
    std::string config_path;

    CLI::App* train_cmd = app.add_subcommand("train", "run one trial");
    CLI::App* table1_cmd = app.add_subcommand("table1", "synthetic-classification comparison");
    table1_cmd->add_option("--trials", [&bag](const CLI::results_t& res) {
        bag.cli_vals["trials"] = res.back();
        return true;
    }, "number of trials per method");
    CLI::App* hist_cmd = app.add_subcommand("hist", "weight-histogram experiment");
    hist_cmd->add_option("--q-list", [&bag](const CLI::results_t& res) {
        bag.cli_vals["q_list"] = res.back();
        return true;
    }, "comma-separated q values");
    hist_cmd->add_option("--bins", [&bag](const CLI::results_t& res) {
        bag.cli_vals["bins"] = res.back();
        return true;
    }, "histogram bins (odd keeps zero centered)");
    CLI::App* sweep_cmd = app.add_subcommand("sweep", "hyperparameter grid search");
    for (const char* grid : {"--p-grid", "--q-grid", "--c-grid"}) {
        std::string key = grid + 2;
        for (auto& ch : key)
            if (ch == '-') ch = '_';
        sweep_cmd->add_option(grid, [&bag, key](const CLI::results_t& res) {
            bag.cli_vals[key] = res.back();
            return true;
        }, "comma-separated grid");
    }
    CLI::App* glm_cmd = app.add_subcommand("glm-check", "closed form vs Monte-Carlo penalty");
    for (const char* flag : {"--family", "--n", "--d", "--n-samples", "--beta-scale"}) {
        std::string key = flag + 2;
        for (auto& ch : key)
            if (ch == '-') ch = '_';
        glm_cmd->add_option(flag, [&bag, key](const CLI::results_t& res) {
            bag.cli_vals[key] = res.back();
            return true;
        }, "");
    }
    CLI::App* grad_cmd = app.add_subcommand("gradcheck", "backward vs finite differences");
    for (auto [flag, key] : std::initializer_list<std::pair<const char*, const char*>>{
             {"--widths", "widths"}, {"--tol", "tol"}, {"--fd-step", "h"}}) {
        grad_cmd->add_option(flag, [&bag, key = std::string(key)](const CLI::results_t& res) {
            bag.cli_vals[key] = res.back();
            return true;
        }, "");
    }

    for (CLI::App* cmd : {train_cmd, table1_cmd, hist_cmd, sweep_cmd, glm_cmd, grad_cmd})
        add_common_options(cmd, bag, config_path);

    try {
        app.parse(argc, argv);
        if (!config_path.empty()) bag.load_file(config_path);
        if (train_cmd->parsed()) return cmd_train(bag);
        if (table1_cmd->parsed()) return cmd_table1(bag);
        if (hist_cmd->parsed()) return cmd_hist(bag);
        if (sweep_cmd->parsed()) return cmd_sweep(bag);
        if (glm_cmd->parsed()) return cmd_glm_check(bag);
        if (grad_cmd->parsed()) return cmd_gradcheck(bag);
        return 2;
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 2;
    } catch (const DivergenceError& e) {
        std::cerr << "divergence: " << e.what() << "\n";
        return 4;
    } catch (const DataError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return 3;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const ShapeError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
