#include "seqrisk/cli.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "seqrisk/errors.hpp"
#include "seqrisk/explain.hpp"
#include "seqrisk/persistence.hpp"
#include "seqrisk/synthetic.hpp"

namespace fs = std::filesystem;

namespace seqrisk {

namespace {

std::string number(double v) { return nlohmann::json(v).dump(); }

std::string code(std::string_view sv) { return std::string(sv); }

void ensure_dir(const fs::path& dir) {
    if (dir.empty()) return;
    fs::create_directories(dir);
}

std::uint64_t resolve_seed(std::uint64_t flag_seed) {
    const char* env = std::getenv("SEQRISK_SEED");
    if (!env || !*env) return flag_seed;
    try {
        std::size_t used = 0;
        const auto v = std::stoull(env, &used);
        if (used != std::string(env).size()) throw std::invalid_argument("trailing characters");
        return v;
    } catch (const std::exception&) {
        throw std::invalid_argument(std::string("SEQRISK_SEED is not an unsigned integer: ") + env);
    }
}

std::vector<UserTimeline> load_nonempty_corpus(const std::string& path) {
    auto users = load_corpus(path);
    if (users.empty()) throw std::invalid_argument("corpus " + path + " contains no posts");
    return users;
}

struct ModelOptions {
    std::string config_path;
    std::string embedder;
    std::uint64_t seed = 0;
    bool seed_given = false;
    std::vector<std::string> ablate;
};

Ablations parse_ablation(const std::string& which) {
    Ablations a;
    if (which == "rf") a.disable_rf = true;
    else if (which == "pf") a.disable_pf = true;
    else if (which == "df") a.disable_df = true;
    else throw std::invalid_argument("unknown ablation: " + which);
    return a;
}

TrainConfig resolve_config(const ModelOptions& o) {
    TrainConfig c;
    if (!o.config_path.empty()) c = config_from_json(read_json_file(o.config_path));
    if (!o.embedder.empty()) c.embedder = o.embedder;
    if (o.seed_given) c.seed = o.seed;
    c.seed = resolve_seed(c.seed);
    c.validate();
    return c;
}

std::unique_ptr<EmbeddingProvider> provider_for(TrainConfig& c) {
    auto p = make_provider(c.embedder, c.dims.embedding, c.embedding_seed);
    c.dims.embedding = p->dim();
    return p;
}

void add_model_flags(CLI::App* cmd, ModelOptions& o) {
    cmd->add_option("--config", o.config_path, "JSON training config (missing keys take defaults)")
        ->check(CLI::ExistingFile);
    cmd->add_option("--embedder", o.embedder, "hash | file:<path>");
    cmd->add_option("--seed", o.seed, "Random seed (SEQRISK_SEED overrides)")->each([&o](const std::string&) {
        o.seed_given = true;
    });
}

nlohmann::ordered_json scores_json(const GradedScores& s) {
    nlohmann::ordered_json j;
    j["gp"] = s.gp;
    j["gr"] = s.gr;
    j["fs"] = s.fs;
    return j;
}

std::string pretty(const nlohmann::ordered_json& j) { return j.dump(2) + "\n"; }

}  // namespace

nlohmann::ordered_json analysis_report(const std::vector<UserTimeline>& users, int window_length,
                                       const RatingMatrix* ratings) {
    if (users.empty()) throw std::invalid_argument("cannot analyze an empty corpus");
    std::size_t n_posts = 0;
    for (const auto& u : users) n_posts += u.posts.size();
    const auto windows = build_windows(users, window_length);

    nlohmann::ordered_json j;
    j["n_users"] = users.size();
    j["n_posts"] = n_posts;
    j["window_length"] = window_length;
    j["n_windows"] = windows.size();
    if (ratings) {
        j["kappa"] = fleiss_kappa(*ratings);
        j["kappa_note"] = "from supplied rating counts";
    } else {
        j["kappa"] = nullptr;
        j["kappa_note"] = "corpus carries one label per post; pass --ratings for agreement";
    }

    j["chi_square_grouping"] =
        "windows; factor present in any observed post vs target level high (BR, AT) or low (IN, ID)";
    auto table = nlohmann::ordered_json::array();
    if (!windows.empty()) {
        for (const auto& row : factor_discrimination(windows)) {
            nlohmann::ordered_json r;
            r["code"] = row.code;
            r["type"] = row.protective ? "protective" : "risk";
            r["a"] = row.table.a;
            r["b"] = row.table.b;
            r["c"] = row.table.c;
            r["d"] = row.table.d;
            if (row.result) {
                r["chi2"] = row.result->chi2;
                r["significant"] = row.result->significant;
                r["undefined"] = nullptr;
            } else {
                r["chi2"] = nullptr;
                r["significant"] = nullptr;
                r["undefined"] = row.undefined_reason;
            }
            table.push_back(r);
        }
    }
    j["chi_square"] = table;

    const auto m = cooccurrence(users);
    nlohmann::ordered_json co;
    auto rcodes = nlohmann::ordered_json::array();
    auto pcodes = nlohmann::ordered_json::array();
    for (auto c : FactorCatalog::risk_codes) rcodes.push_back(code(c));
    for (auto c : FactorCatalog::protective_codes) pcodes.push_back(code(c));
    co["risk_codes"] = rcodes;
    co["protective_codes"] = pcodes;
    auto values = nlohmann::ordered_json::array();
    for (std::size_t i = 0; i < kNumRiskFactors; ++i) {
        auto row = nlohmann::ordered_json::array();
        for (std::size_t k = 0; k < kNumProtectiveFactors; ++k) {
            row.push_back(m.defined[i] ? nlohmann::ordered_json(m.values[i][k]) : nlohmann::ordered_json(nullptr));
        }
        values.push_back(row);
    }
    co["values"] = values;
    co["row_counts"] = m.row_counts;
    j["cooccurrence"] = co;
    return j;
}

std::string cooccurrence_csv(const CooccurrenceMatrix& m) {
    std::ostringstream s;
    s << "risk_factor";
    for (auto c : FactorCatalog::protective_codes) s << ',' << c;
    s << '\n';
    for (std::size_t i = 0; i < kNumRiskFactors; ++i) {
        s << FactorCatalog::risk_codes[i];
        for (std::size_t k = 0; k < kNumProtectiveFactors; ++k) {
            s << ',';
            if (m.defined[i]) s << number(m.values[i][k]);
        }
        s << '\n';
    }
    return s.str();
}

std::string discrimination_csv(const std::vector<FactorDiscriminationRow>& rows) {
    std::ostringstream s;
    s << "code,type,a,b,c,d,chi2,significant\n";
    for (const auto& r : rows) {
        s << r.code << ',' << (r.protective ? "protective" : "risk") << ',' << r.table.a << ',' << r.table.b << ','
          << r.table.c << ',' << r.table.d << ',';
        if (r.result) {
            s << number(r.result->chi2) << ',' << (r.result->significant ? "true" : "false");
        } else {
            s << "undefined,";
        }
        s << '\n';
    }
    return s.str();
}

nlohmann::ordered_json evaluation_report(const TrainConfig& config, const std::vector<EvaluationVariant>& variants,
                                         const GradedScores& baseline) {
    nlohmann::ordered_json j;
    j["config"] = to_json(config);
    j["majority_baseline"] = scores_json(baseline);
    auto vs = nlohmann::ordered_json::array();
    for (const auto& v : variants) {
        nlohmann::ordered_json vj;
        vj["label"] = v.label;
        auto folds = nlohmann::ordered_json::array();
        for (const auto& f : v.result.per_fold) {
            nlohmann::ordered_json fj;
            fj["fold"] = f.fold;
            fj["n_train"] = f.n_train;
            fj["n_validation"] = f.n_validation;
            fj["n_test"] = f.n_test;
            fj["tp"] = f.counts.tp;
            fj["fp"] = f.counts.fp;
            fj["fn"] = f.counts.fn;
            fj["gp"] = f.scores.gp;
            fj["gr"] = f.scores.gr;
            fj["fs"] = f.scores.fs;
            fj["best_epoch"] = f.best_epoch;
            fj["epochs_run"] = f.epochs_run;
            folds.push_back(fj);
        }
        vj["folds"] = folds;
        vj["mean"] = scores_json(v.result.mean);
        vs.push_back(vj);
    }
    j["variants"] = vs;
    return j;
}

std::string folds_csv(const nlohmann::json& evaluation) {
    std::ostringstream s;
    s << "variant,fold,n_test,tp,fp,fn,gp,gr,fs\n";
    for (const auto& v : evaluation.at("variants")) {
        for (const auto& f : v.at("folds")) {
            s << v.at("label").get<std::string>() << ',' << f.at("fold").dump() << ',' << f.at("n_test").dump() << ','
              << f.at("tp").dump() << ',' << f.at("fp").dump() << ',' << f.at("fn").dump() << ','
              << f.at("gp").dump() << ',' << f.at("gr").dump() << ',' << f.at("fs").dump() << '\n';
        }
    }
    return s.str();
}

std::string comparison_csv(const nlohmann::json& evaluation) {
    std::ostringstream s;
    s << "variant,gp,gr,fs\n";
    const auto& b = evaluation.at("majority_baseline");
    s << "majority," << b.at("gp").dump() << ',' << b.at("gr").dump() << ',' << b.at("fs").dump() << '\n';
    for (const auto& v : evaluation.at("variants")) {
        const auto& m = v.at("mean");
        s << v.at("label").get<std::string>() << ',' << m.at("gp").dump() << ',' << m.at("gr").dump() << ','
          << m.at("fs").dump() << '\n';
    }
    return s.str();
}

std::string sweep_csv(const std::vector<SweepRow>& rows) {
    std::ostringstream s;
    s << "value,n_windows,gp,gr,fs\n";
    for (const auto& r : rows) {
        s << number(r.value) << ',' << r.n_windows << ',' << number(r.scores.gp) << ',' << number(r.scores.gr) << ','
          << number(r.scores.fs) << '\n';
    }
    return s.str();
}

RatingMatrix read_ratings_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    RatingMatrix m;
    std::string line;
    std::size_t n = 0;
    while (std::getline(in, line)) {
        ++n;
        if (n == 1 || line.empty()) continue;
        std::vector<int> row;
        std::stringstream ls(line);
        std::string cell;
        while (std::getline(ls, cell, ',')) {
            try {
                std::size_t used = 0;
                row.push_back(std::stoi(cell, &used));
                if (used != cell.size()) throw std::invalid_argument("trailing characters");
            } catch (const std::exception&) {
                throw ParseError(n, "rating count is not an integer: " + cell);
            }
        }
        m.counts.push_back(std::move(row));
    }
    if (m.counts.empty()) throw std::invalid_argument("ratings file " + path + " has no items");
    return m;
}

namespace {

struct EvaluateOptions {
    std::string corpus;
    std::string out;
    std::string run;
    int folds = 5;
    ModelOptions model;
};

std::vector<Ablations> variants_for(const std::vector<std::string>& ablate) {
    std::vector<Ablations> out{Ablations{}};
    for (const auto& a : ablate) out.push_back(parse_ablation(a));
    return out;
}

nlohmann::ordered_json run_evaluation(const std::vector<UserTimeline>& users, const TrainConfig& base,
                                      const std::vector<Ablations>& variants, int k, FoldAssignment* folds_out) {
    TrainConfig c = base;
    auto embedder = provider_for(c);
    const auto data = Dataset::build(users, c.window_length, *embedder);
    if (data.examples.empty()) throw std::invalid_argument("corpus yields no windows at l = " +
                                                           std::to_string(c.window_length));
    std::vector<EvaluationVariant> results;
    FoldAssignment folds;
    for (const auto& ab : variants) {
        TrainConfig vc = c;
        vc.ablations = ab;
        auto cv = cross_validate(data, vc, k);
        folds = cv.folds;
        results.push_back({ablation_label(ab), std::move(cv)});
    }
    if (folds_out) *folds_out = folds;
    return evaluation_report(c, results, majority_baseline(data, folds));
}

void write_evaluation_files(const fs::path& dir, const nlohmann::ordered_json& evaluation,
                            const FoldAssignment& folds) {
    ensure_dir(dir);
    auto fj = folds_to_json(folds);
    fj["evaluation"] = evaluation;
    write_text_file(dir / "folds.json", pretty(fj));
    write_text_file(dir / "evaluation.json", pretty(evaluation));
    write_text_file(dir / "folds.csv", folds_csv(evaluation));
    write_text_file(dir / "comparison.csv", comparison_csv(evaluation));
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Sequential suicide-risk forecasting with risk and protective factors", "seqrisk"};
    app.require_subcommand(1);

    // generate
    auto* gen = app.add_subcommand("generate", "Write a synthetic corpus and its ground-truth sidecar");
    std::string gen_out;
    int gen_users = 200;
    std::uint64_t gen_seed = 0;
    double gen_pull = SyntheticConfig{}.protective_pull;
    double gen_push = SyntheticConfig{}.risk_push;
    gen->add_option("--out", gen_out, "Corpus path (ground truth goes to <out>.truth.jsonl)")->required();
    gen->add_option("--users", gen_users, "Number of users")->check(CLI::Validator(
        [](const std::string& v) {
            try {
                if (std::stoi(v) >= 1) return std::string();
            } catch (const std::exception&) {
            }
            return "must be an integer >= 1, got " + v;
        },
        "INT>=1"));
    gen->add_option("--seed", gen_seed, "Random seed (SEQRISK_SEED overrides)");
    gen->add_option("--protective-pull", gen_pull, "Probability an effective protective factor lowers the level")
        ->check(CLI::Range(0.0, 1.0));
    gen->add_option("--risk-push", gen_push, "Probability an effective risk factor raises the level")
        ->check(CLI::Range(0.0, 1.0));

    // analyze
    auto* ana = app.add_subcommand("analyze", "Agreement, factor discrimination and co-occurrence reports");
    std::string ana_corpus, ana_out, ana_ratings;
    int ana_l = 4;
    ana->add_option("--corpus", ana_corpus, "Corpus path")->required()->check(CLI::ExistingFile);
    ana->add_option("--out", ana_out, "Directory for analysis.json, chi_square.csv, cooccurrence.csv");
    ana->add_option("--window-length", ana_l, "Window length for the discrimination table")
        ->check(CLI::PositiveNumber);
    ana->add_option("--ratings", ana_ratings, "CSV of per-item category counts for Fleiss' kappa")
        ->check(CLI::ExistingFile);

    // train
    auto* trn = app.add_subcommand("train", "Cross-validate, then fit a final model into a run directory");
    std::string trn_corpus, trn_out;
    int trn_folds = 5;
    ModelOptions trn_model;
    trn->add_option("--corpus", trn_corpus, "Corpus path")->required()->check(CLI::ExistingFile);
    trn->add_option("--out", trn_out, "Run directory")->required();
    trn->add_option("--folds", trn_folds, "Cross-validation folds (0 skips cross-validation)")
        ->check(CLI::Range(0, 1000));
    trn->add_option("--ablate", trn_model.ablate, "Disable a task: rf | pf | df")
        ->check(CLI::IsMember({"rf", "pf", "df"}));
    add_model_flags(trn, trn_model);

    // evaluate
    auto* evl = app.add_subcommand("evaluate", "k-fold scores for the full model and requested ablations");
    EvaluateOptions ev;
    evl->add_option("--corpus", ev.corpus, "Corpus path")->check(CLI::ExistingFile);
    evl->add_option("--run", ev.run, "Reprint the stored scores of a run directory")->check(CLI::ExistingDirectory);
    evl->add_option("--out", ev.out, "Directory for evaluation.json, folds.csv, comparison.csv, folds.json");
    evl->add_option("--folds", ev.folds, "Cross-validation folds")->check(CLI::Range(2, 1000));
    evl->add_option("--ablate", ev.model.ablate, "Add an ablation row: rf | pf | df (repeatable)")
        ->check(CLI::IsMember({"rf", "pf", "df"}));
    add_model_flags(evl, ev.model);

    // sweep
    auto* swp = app.add_subcommand("sweep", "Sensitivity sweep over window length or temperature");
    std::string swp_corpus, swp_out, swp_param;
    std::vector<double> swp_values;
    int swp_folds = 5;
    ModelOptions swp_model;
    swp->add_option("--corpus", swp_corpus, "Corpus path")->required()->check(CLI::ExistingFile);
    swp->add_option("--sweep", swp_param, "Parameter: l | tau")->required()->check(CLI::IsMember({"l", "tau"}));
    swp->add_option("--values", swp_values, "Comma-separated values")->delimiter(',');
    swp->add_option("--out", swp_out, "Directory for sweep.csv and sweep.json");
    swp->add_option("--folds", swp_folds, "Cross-validation folds")->check(CLI::Range(2, 1000));
    add_model_flags(swp, swp_model);

    // explain
    auto* exp = app.add_subcommand("explain", "Per-post attention, factors and alignment for one window");
    std::string exp_model, exp_corpus, exp_user, exp_out, exp_config;
    std::size_t exp_index = 0;
    bool exp_text = false;
    exp->add_option("--model", exp_model, "Run directory or model.bin path")->required();
    exp->add_option("--corpus", exp_corpus, "Corpus path")->required()->check(CLI::ExistingFile);
    exp->add_option("--user", exp_user, "User id")->required();
    exp->add_option("--window-index", exp_index, "Index of the window within the user's timeline")->required();
    exp->add_option("--config", exp_config, "Config JSON (defaults to config.json beside the model)");
    exp->add_option("--out", exp_out, "Directory for explain.json and explain.txt");
    exp->add_flag("--text", exp_text, "Print the aligned-column text instead of JSON");

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        return app.exit(e, out, err);
    }

    try {
        if (*gen) {
            SyntheticConfig sc;
            sc.n_users = gen_users;
            sc.seed = resolve_seed(gen_seed);
            sc.protective_pull = gen_pull;
            sc.risk_push = gen_push;
            const auto corpus = generate_synthetic(sc);
            const fs::path path(gen_out);
            ensure_dir(path.parent_path());
            save_corpus(path, corpus.users);
            const fs::path truth_path = path.string() + ".truth.jsonl";
            save_truth(truth_path, corpus.truth);
            std::size_t n_posts = 0;
            for (const auto& u : corpus.users) n_posts += u.posts.size();
            nlohmann::ordered_json j;
            j["corpus"] = path.string();
            j["truth"] = truth_path.string();
            j["users"] = corpus.users.size();
            j["posts"] = n_posts;
            j["seed"] = sc.seed;
            out << pretty(j);
        } else if (*ana) {
            const auto users = load_nonempty_corpus(ana_corpus);
            RatingMatrix ratings;
            if (!ana_ratings.empty()) ratings = read_ratings_csv(ana_ratings);
            const auto report = analysis_report(users, ana_l, ana_ratings.empty() ? nullptr : &ratings);
            if (!ana_out.empty()) {
                const fs::path dir(ana_out);
                ensure_dir(dir);
                write_text_file(dir / "analysis.json", pretty(report));
                write_text_file(dir / "cooccurrence.csv", cooccurrence_csv(cooccurrence(users)));
                const auto windows = build_windows(users, ana_l);
                write_text_file(dir / "chi_square.csv",
                                discrimination_csv(windows.empty() ? std::vector<FactorDiscriminationRow>{}
                                                                   : factor_discrimination(windows)));
            }
            out << pretty(report);
        } else if (*trn) {
            const auto users = load_nonempty_corpus(trn_corpus);
            TrainConfig c = resolve_config(trn_model);
            for (const auto& a : trn_model.ablate) {
                const auto ab = parse_ablation(a);
                c.ablations.disable_rf |= ab.disable_rf;
                c.ablations.disable_pf |= ab.disable_pf;
                c.ablations.disable_df |= ab.disable_df;
            }
            auto embedder = provider_for(c);
            const auto data = Dataset::build(users, c.window_length, *embedder);
            if (data.examples.empty())
                throw std::invalid_argument("corpus yields no windows at l = " + std::to_string(c.window_length));
            const fs::path dir(trn_out);
            ensure_dir(dir);
            write_text_file(dir / "config.json", pretty(to_json(c)));

            nlohmann::ordered_json evaluation;
            if (trn_folds >= 2) {
                auto cv = cross_validate(data, c, trn_folds);
                const auto baseline = majority_baseline(data, cv.folds);
                const FoldAssignment folds = cv.folds;
                std::vector<EvaluationVariant> v;
                v.push_back({ablation_label(c.ablations), std::move(cv)});
                evaluation = evaluation_report(c, v, baseline);
                write_evaluation_files(dir, evaluation, folds);
            }
            const auto result = train(data, c);
            save_model(dir / "model.bin", result.params);
            std::ostringstream history;
            write_history_csv(history, result.history);
            write_text_file(dir / "history.csv", history.str());

            nlohmann::ordered_json j;
            j["run"] = dir.string();
            j["windows"] = data.examples.size();
            j["epochs"] = result.history.size();
            j["best_epoch"] = result.best_epoch;
            j["initial_train_loss"] = result.initial_train_total;
            j["final_train_loss"] = result.final_train_total;
            j["evaluation"] = evaluation.is_null() ? nlohmann::ordered_json(nullptr) : evaluation;
            out << pretty(j);
        } else if (*evl) {
            if (ev.run.empty() == ev.corpus.empty())
                throw CLI::ValidationError("evaluate", "exactly one of --run or --corpus is required");
            if (!ev.run.empty()) {
                const fs::path path = fs::path(ev.run) / "folds.json";
                std::ifstream in(path);
                if (!in) throw std::runtime_error("cannot open " + path.string());
                nlohmann::ordered_json stored;
                try {
                    stored = nlohmann::ordered_json::parse(in);
                } catch (const nlohmann::json::parse_error& e) {
                    throw FormatError(path.string() + ": " + e.what());
                }
                if (!stored.contains("evaluation"))
                    throw FormatError(path.string() + " holds no stored evaluation");
                out << pretty(stored.at("evaluation"));
            } else {
                const auto users = load_nonempty_corpus(ev.corpus);
                TrainConfig c = resolve_config(ev.model);
                FoldAssignment folds;
                const auto evaluation = run_evaluation(users, c, variants_for(ev.model.ablate), ev.folds, &folds);
                if (!ev.out.empty()) write_evaluation_files(ev.out, evaluation, folds);
                out << pretty(evaluation);
            }
        } else if (*swp) {
            const auto users = load_nonempty_corpus(swp_corpus);
            TrainConfig c = resolve_config(swp_model);
            const auto param = swp_param == "l" ? SweepParameter::WindowLength : SweepParameter::Tau;
            if (swp_values.empty()) {
                if (param == SweepParameter::WindowLength) {
                    swp_values = {1, 2, 3, 4, 5, 6};
                } else {
                    for (int i = 1; i <= 15; ++i) swp_values.push_back(0.2 * i);
                }
            }
            const auto embedder = provider_for(c);
            (void)embedder;
            const auto rows = sweep(users, c, param, swp_values, swp_folds);
            nlohmann::ordered_json j;
            j["parameter"] = swp_param;
            j["config"] = to_json(c);
            auto arr = nlohmann::ordered_json::array();
            for (const auto& r : rows) {
                nlohmann::ordered_json rj;
                rj["value"] = r.value;
                rj["n_windows"] = r.n_windows;
                rj["gp"] = r.scores.gp;
                rj["gr"] = r.scores.gr;
                rj["fs"] = r.scores.fs;
                arr.push_back(rj);
            }
            j["rows"] = arr;
            if (!swp_out.empty()) {
                const fs::path dir(swp_out);
                ensure_dir(dir);
                write_text_file(dir / "sweep.csv", sweep_csv(rows));
                write_text_file(dir / "sweep.json", pretty(j));
            }
            out << pretty(j);
        } else if (*exp) {
            fs::path model_path(exp_model);
            fs::path config_path(exp_config);
            if (fs::is_directory(model_path)) {
                if (config_path.empty()) config_path = model_path / "config.json";
                model_path /= "model.bin";
            } else if (config_path.empty()) {
                config_path = model_path.parent_path() / "config.json";
            }
            TrainConfig c = fs::exists(config_path) ? config_from_json(read_json_file(config_path)) : TrainConfig{};
            const auto params = load_model(model_path);
            auto embedder = provider_for(c);
            if (params.dims.embedding != c.dims.embedding)
                throw FormatError("model embedding width " + std::to_string(params.dims.embedding) +
                                  " does not match the embedder's " + std::to_string(c.dims.embedding));
            const auto users = load_nonempty_corpus(exp_corpus);
            const auto windows = build_windows(users, c.window_length);
            const auto& window = find_window(windows, exp_user, exp_index);
            const auto report = explain_window(params, window, exp_index, *embedder, c.forward_options());
            auto j = to_json(report);
            j["config"] = to_json(c);
            const auto text = format_text(report);
            if (!exp_out.empty()) {
                const fs::path dir(exp_out);
                ensure_dir(dir);
                write_text_file(dir / "explain.json", pretty(j));
                write_text_file(dir / "explain.txt", text);
            }
            out << (exp_text ? text : pretty(j));
        }
    } catch (const CLI::ParseError& e) {
        return app.exit(e, out, err);
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}

}  // namespace seqrisk
