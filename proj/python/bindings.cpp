#include <sstream>

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "seqrisk/analysis.hpp"
#include "seqrisk/cli.hpp"
#include "seqrisk/decoder.hpp"
#include "seqrisk/embedding.hpp"
#include "seqrisk/metrics.hpp"
#include "seqrisk/persistence.hpp"
#include "seqrisk/synthetic.hpp"
#include "seqrisk/trainer.hpp"

namespace py = pybind11;
using namespace seqrisk;

namespace {

RiskLevel level_arg(const std::string& code) {
    const auto level = parse_level(code);
    if (!level) throw py::value_error("unknown risk level: " + code);
    return *level;
}

std::vector<RiskLevel> levels_arg(const std::vector<std::string>& codes) {
    std::vector<RiskLevel> out;
    for (const auto& c : codes) out.push_back(level_arg(c));
    return out;
}

py::dict scores_dict(const GradedScores& s) {
    py::dict d;
    d["gp"] = s.gp;
    d["gr"] = s.gr;
    d["fs"] = s.fs;
    return d;
}

}  // namespace

PYBIND11_MODULE(_seqrisk, m) {
    m.doc() = "Sequential suicide-risk forecasting core (C++)";

    m.def(
        "run_cli",
        [](const std::vector<std::string>& args) {
            std::ostringstream out, err;
            int code = 0;
            {
                py::gil_scoped_release release;
                code = run_cli(args, out, err);
            }
            return py::make_tuple(code, out.str(), err.str());
        },
        py::arg("args"), "Run a seqrisk subcommand in-process; returns (exit_code, stdout, stderr).");

    m.def(
        "generate",
        [](const std::string& out, int users, std::uint64_t seed, double protective_pull, double risk_push) {
            SyntheticConfig c;
            c.n_users = users;
            c.seed = seed;
            c.protective_pull = protective_pull;
            c.risk_push = risk_push;
            const auto corpus = generate_synthetic(c);
            save_corpus(out, corpus.users);
            save_truth(out + ".truth.jsonl", corpus.truth);
            return corpus.users.size();
        },
        py::arg("out"), py::arg("users") = 200, py::arg("seed") = 0,
        py::arg("protective_pull") = SyntheticConfig{}.protective_pull,
        py::arg("risk_push") = SyntheticConfig{}.risk_push);

    m.def(
        "analyze",
        [](const std::string& corpus, int window_length) {
            return analysis_report(load_corpus(corpus), window_length).dump();
        },
        py::arg("corpus"), py::arg("window_length") = 4, "Analysis report as a JSON string.");

    m.def(
        "evaluate",
        [](const std::string& corpus, const std::string& config_json, int folds) {
            std::string json;
            {
                py::gil_scoped_release release;
                TrainConfig c = config_from_json(nlohmann::json::parse(config_json));
                c.validate();
                const auto embedder = make_provider(c.embedder, c.dims.embedding, c.embedding_seed);
                c.dims.embedding = embedder->dim();
                const auto data = Dataset::build(load_corpus(corpus), c.window_length, *embedder);
                auto cv = cross_validate(data, c, folds);
                const auto baseline = majority_baseline(data, cv.folds);
                std::vector<EvaluationVariant> v;
                v.push_back({ablation_label(c.ablations), std::move(cv)});
                json = evaluation_report(c, v, baseline).dump();
            }
            return json;
        },
        py::arg("corpus"), py::arg("config_json") = "{}", py::arg("folds") = 5,
        "Cross-validated evaluation report as a JSON string.");

    m.def("sord_targets", [](const std::string& level, double alpha) { return sord_targets(level_arg(level), alpha); },
          py::arg("level"), py::arg("alpha") = 1.0);
    m.def("fleiss_kappa", [](const std::vector<std::vector<int>>& counts) { return fleiss_kappa({counts}); });
    m.def("chi_square", [](long long a, long long b, long long c, long long d) {
        const auto r = chi_square_2x2({a, b, c, d});
        return py::make_tuple(r.chi2, r.significant);
    });
    m.def("graded_scores", [](const std::vector<std::string>& preds, const std::vector<std::string>& truths) {
        const auto p = levels_arg(preds), t = levels_arg(truths);
        return scores_dict(graded_scores(graded_counts(p, t)));
    });
    m.def("hash_embed", [](const std::string& text, int dim, std::uint64_t seed) {
        const auto v = hash_featurize(text, dim, seed);
        return std::vector<double>(v.data(), v.data() + v.size());
    }, py::arg("text"), py::arg("dim") = kDefaultEmbeddingDim, py::arg("seed") = 0);
}
