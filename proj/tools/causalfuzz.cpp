// causalfuzz: black-box unlearning audit via budgeted causal interventions.
//
// Exit codes: 0 success / no leak, 1 leak verdict, 2 usage or config error,
// 3 runtime error. CI pipelines key off these, so a leak is always
// distinguishable from a crash.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "causalfuzz/baselines.hpp"
#include "causalfuzz/dataset.hpp"
#include "causalfuzz/errors.hpp"
#include "causalfuzz/estimator.hpp"
#include "causalfuzz/graph.hpp"
#include "causalfuzz/predictor.hpp"
#include "causalfuzz/remote.hpp"
#include "causalfuzz/report.hpp"
#include "causalfuzz/sem.hpp"
#include "causalfuzz/unlearn.hpp"

namespace cf = causalfuzz;
namespace fs = std::filesystem;

namespace {

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw cf::ConfigError("cannot write file: " + path);
    out << content;
}

cf::Dataset load_data(const std::string& path, const std::string& encodings_path) {
    cf::CsvOptions options;
    if (!encodings_path.empty()) options.encodings = cf::load_encoding_table(encodings_path);
    return cf::load_csv(path, {}, options);
}

std::shared_ptr<cf::Predictor> open_model(const std::string& spec) {
    if (spec.rfind("http://", 0) == 0 || spec.rfind("https://", 0) == 0) {
        return cf::connect_remote(spec, {});
    }
    return cf::load_model(spec);
}

int run(int argc, char** argv) {
    CLI::App app{"causal fuzzing toolkit for unlearning audits"};
    app.require_subcommand(1);

    // gen-data
    auto* gen = app.add_subcommand("gen-data", "generate a synthetic failure-mode fixture");
    std::string gen_family, gen_out;
    std::size_t gen_n = 20000;
    std::uint64_t gen_seed = 0;
    double gen_strength = 1.0;
    gen->add_option("--family", gen_family, "proxy|cancellation|subgroup|heart")->required();
    gen->add_option("--n", gen_n, "rows to generate");
    gen->add_option("--seed", gen_seed, "generator seed");
    gen->add_option("--strength", gen_strength, "effect strength multiplier");
    gen->add_option("--out", gen_out, "output directory")->required();

    // fit-sem
    auto* fit = app.add_subcommand("fit-sem", "fit structural equations from reference data");
    std::string fit_graph, fit_data, fit_out, fit_encodings;
    fit->add_option("--graph", fit_graph, "graph JSON file")->required();
    fit->add_option("--data", fit_data, "reference CSV")->required();
    fit->add_option("--out", fit_out, "output SEM file")->required();
    fit->add_option("--encodings", fit_encodings, "categorical encoding table (JSON)");

    // train
    auto* train = app.add_subcommand("train", "train the built-in logistic model");
    std::string train_data, train_outcome, train_features, train_out, train_encodings;
    std::uint64_t train_seed = 0;
    cf::TrainHyper train_hyper;
    train->add_option("--data", train_data, "training CSV")->required();
    train->add_option("--outcome", train_outcome, "binary outcome column")->required();
    train->add_option("--features", train_features, "comma-separated feature columns")->required();
    train->add_option("--seed", train_seed, "training seed");
    train->add_option("--out", train_out, "output model file")->required();
    train->add_option("--lr", train_hyper.learning_rate, "learning rate");
    train->add_option("--iterations", train_hyper.iterations, "gradient descent iterations");
    train->add_option("--l2", train_hyper.l2, "L2 regularization");
    train->add_option("--encodings", train_encodings, "categorical encoding table (JSON)");

    // unlearn
    auto* unlearn = app.add_subcommand("unlearn", "feature-removal unlearning (retrain without the target)");
    std::string ul_data, ul_target, ul_outcome, ul_out, ul_encodings;
    std::uint64_t ul_seed = 0;
    cf::TrainHyper ul_hyper;
    unlearn->add_option("--data", ul_data, "training CSV")->required();
    unlearn->add_option("--target", ul_target, "feature to unlearn")->required();
    unlearn->add_option("--outcome", ul_outcome, "binary outcome column")->required();
    unlearn->add_option("--seed", ul_seed, "training seed");
    unlearn->add_option("--out", ul_out, "output model file")->required();
    unlearn->add_option("--lr", ul_hyper.learning_rate, "learning rate");
    unlearn->add_option("--iterations", ul_hyper.iterations, "gradient descent iterations");
    unlearn->add_option("--l2", ul_hyper.l2, "L2 regularization");
    unlearn->add_option("--encodings", ul_encodings, "categorical encoding table (JSON)");

    // fuzz
    auto* fuzz = app.add_subcommand("fuzz", "run a causal-fuzz audit and write the leakage report");
    std::string fz_graph, fz_sem, fz_model, fz_data, fz_target, fz_score = "probability";
    std::string fz_report, fz_format = "json", fz_encodings;
    std::vector<std::string> fz_subgroups;
    double fz_tau = 0.05;
    std::uint64_t fz_budget = 0, fz_seed = 0;
    std::size_t fz_k = 4, fz_maxlen = 4;
    fuzz->add_option("--graph", fz_graph, "graph JSON file")->required();
    fuzz->add_option("--sem", fz_sem, "SEM file for counterfactual propagation")->required();
    fuzz->add_option("--model", fz_model,
                     "model file or http://host:port (default from CAUSALFUZZ_MODEL_URL)");
    fuzz->add_option("--data", fz_data, "reference CSV sampled for interventions")->required();
    fuzz->add_option("--target", fz_target, "unlearned feature Z under audit")->required();
    fuzz->add_option("--budget", fz_budget, "query budget")->required();
    fuzz->add_option("--threshold", fz_tau, "leak threshold tau in score units");
    fuzz->add_option("--k", fz_k, "number of prioritized paths to estimate");
    fuzz->add_option("--score-kind", fz_score, "probability|raw");
    fuzz->add_option("--seed", fz_seed, "run seed");
    fuzz->add_option("--subgroup", fz_subgroups, "subgroup predicate, e.g. \"age<40\" (repeatable)");
    fuzz->add_option("--report", fz_report, "report output path")->required();
    fuzz->add_option("--format", fz_format, "json|text");
    fuzz->add_option("--max-path-len", fz_maxlen, "maximum path length in edges");
    fuzz->add_option("--encodings", fz_encodings, "categorical encoding table (JSON)");

    // baselines
    auto* base = app.add_subcommand("baselines", "attribution baselines for side-by-side comparison");
    std::string bl_model, bl_data, bl_target, bl_group, bl_outcome, bl_encodings;
    std::uint64_t bl_seed = 0;
    base->add_option("--model", bl_model, "model file or http://host:port")->required();
    base->add_option("--data", bl_data, "labeled evaluation CSV")->required();
    base->add_option("--target", bl_target, "feature whose importance is checked")->required();
    base->add_option("--group", bl_group, "binary group column for the parity gap")->required();
    base->add_option("--seed", bl_seed, "shuffle seed");
    base->add_option("--outcome", bl_outcome, "label column (inferred when omitted)");
    base->add_option("--encodings", bl_encodings, "categorical encoding table (JSON)");

    // diff
    auto* dif = app.add_subcommand("diff", "compare two leakage reports");
    std::string diff_old, diff_new;
    dif->add_option("--old", diff_old, "baseline report JSON")->required();
    dif->add_option("--new", diff_new, "new report JSON")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        std::cout << app.help();
        return 0;
    } catch (const CLI::ParseError& e) {
        std::cerr << e.what() << "\n\n" << app.help();
        return 2;
    }

    if (*gen) {
        auto fx = cf::gen_failure_mode(gen_family, gen_n, gen_seed, gen_strength);
        fs::create_directories(gen_out);
        cf::save_csv(fx.data, (fs::path(gen_out) / "data.csv").string());
        write_file((fs::path(gen_out) / "graph.json").string(), cf::graph_to_json(fx.graph));
        write_file((fs::path(gen_out) / "sem.json").string(), cf::sem_to_json(fx.sem));
        write_file((fs::path(gen_out) / "truth.csv").string(), cf::truth_to_csv(fx.truth));
        std::cerr << "gen-data: family=" << gen_family << " n=" << gen_n << " seed=" << gen_seed
                  << " out=" << gen_out << "\n";
        return 0;
    }

    if (*fit) {
        auto graph = cf::load_graph(fit_graph);
        auto data = load_data(fit_data, fit_encodings);
        auto sem = cf::fit_sem(graph, data);
        write_file(fit_out, cf::sem_to_json(sem));
        std::cerr << "fit-sem: " << sem.equations().size() << " equations -> " << fit_out << "\n";
        return 0;
    }

    if (*train) {
        auto data = load_data(train_data, train_encodings);
        std::vector<std::string> features;
        std::string item;
        std::istringstream stream(train_features);
        while (std::getline(stream, item, ',')) {
            if (!item.empty()) features.push_back(item);
        }
        auto model = cf::train_builtin(data, train_outcome, features, train_hyper, train_seed);
        cf::save_model(*model, train_out);
        std::cerr << "train: accuracy=" << cf::accuracy(*model, data, train_outcome) << " -> "
                  << train_out << "\n";
        return 0;
    }

    if (*unlearn) {
        auto data = load_data(ul_data, ul_encodings);
        auto model = cf::unlearn_feature_removal(data, ul_target, ul_outcome, ul_hyper, ul_seed);
        cf::save_model(*model, ul_out);
        std::cerr << "unlearn: removed " << ul_target
                  << " accuracy=" << cf::accuracy(*model, data, ul_outcome) << " -> " << ul_out
                  << "\n";
        return 0;
    }

    if (*fuzz) {
        if (fz_model.empty()) {
            const char* env = std::getenv("CAUSALFUZZ_MODEL_URL");
            if (env == nullptr || *env == '\0') {
                std::cerr << "fuzz: --model missing and CAUSALFUZZ_MODEL_URL unset\n";
                return 2;
            }
            fz_model = env;
        }
        auto graph = cf::load_graph(fz_graph).with_target(fz_target);
        auto sem = cf::load_sem(fz_sem, graph);
        auto model = open_model(fz_model);
        auto data = load_data(fz_data, fz_encodings);

        cf::FuzzConfig config;
        config.graph = &graph;
        config.sem = &sem;
        config.predictor = model;
        config.reference = &data;
        config.target = fz_target;
        config.threshold = fz_tau;
        config.budget = fz_budget;
        config.top_k = fz_k;
        config.max_path_length = fz_maxlen;
        config.score_kind = cf::score_kind_from_string(fz_score);
        config.seed = fz_seed;
        config.contrast.mode = graph.node(fz_target).kind == cf::ColumnKind::binary
                                   ? cf::ContrastMode::flip
                                   : cf::ContrastMode::marginal_resample;
        for (const auto& pred : fz_subgroups) {
            config.subgroups.push_back(cf::parse_subgroup_predicate(pred));
        }

        auto outcome = cf::run_causal_fuzz(config);

        cf::ReportHeader header;
        header.target = fz_target;
        header.model_id = fz_model;
        header.score_kind = config.score_kind;
        header.tau = fz_tau;
        header.budget = fz_budget;
        header.budget_used = outcome.budget_used;
        header.seed = fz_seed;
        header.status = outcome.no_path ? "no-path" : "ok";
        auto report = cf::assemble(outcome.estimates, {}, header);

        write_file(fz_report,
                   fz_format == "text" ? cf::render_text(report) : cf::render_json(report));
        std::cerr << "fuzz: seed=" << fz_seed << " budget_used=" << outcome.budget_used
                  << " report=" << fz_report << "\n";
        return report.overall == cf::Verdict::leak ? 1 : 0;
    }

    if (*base) {
        auto model = open_model(bl_model);
        auto data = load_data(bl_data, bl_encodings);
        std::string outcome = bl_outcome;
        if (outcome.empty()) {
            // the label is the one binary non-schema column that is neither
            // the target nor the group
            std::vector<std::string> candidates;
            for (const auto& col : data.schema) {
                if (col.name == bl_target || col.name == bl_group) continue;
                if (model->has_feature(col.name)) continue;
                if (col.kind == cf::ColumnKind::binary) candidates.push_back(col.name);
            }
            if (candidates.size() != 1) {
                std::cerr << "baselines: cannot infer the outcome column, pass --outcome\n";
                return 2;
            }
            outcome = candidates.front();
        }
        auto perm = cf::permutation_importance(*model, data, outcome, bl_target,
                                               cf::BaselineMetric::accuracy, 10, bl_seed);
        double gap = cf::demographic_parity_gap(*model, data, bl_group, 0.5);

        cf::LeakageReport shell;  // reuse the report baselines rendering
        shell.baselines.permutation = perm;
        shell.baselines.parity_gap = gap;
        shell.baselines.parity_group = bl_group;
        nlohmann::ordered_json out = nlohmann::ordered_json::parse(cf::render_json(shell));
        std::cout << out["baselines"].dump(2) << "\n";
        return 0;
    }

    if (*dif) {
        auto old_report = cf::load_report(diff_old);
        auto new_report = cf::load_report(diff_new);
        auto diff = cf::diff_reports(old_report, new_report);
        std::cout << cf::render_diff(diff);
        return diff.new_leaks.empty() ? 0 : 1;
    }

    return 2;
}

}  // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const cf::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const cf::SchemaMismatch& e) {
        std::cerr << "schema error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
}
