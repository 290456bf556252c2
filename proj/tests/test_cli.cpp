#include <doctest.h>

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "helpers.hpp"
#include "seqrisk/cli.hpp"
#include "seqrisk/corpus.hpp"

using namespace seqrisk;
namespace fs = std::filesystem;

namespace {

struct Run {
    int code = 0;
    std::string out;
    std::string err;
};

Run cli(std::vector<std::string> args) {
    std::ostringstream out, err;
    Run r;
    r.code = run_cli(args, out, err);
    r.out = out.str();
    r.err = err.str();
    return r;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

std::vector<std::string> lines(const std::string& text) {
    std::vector<std::string> out;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) out.push_back(line);
    return out;
}

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("generate is reproducible and validates its arguments") {
    const auto dir = seqrisk::testing::scratch_dir("cli-generate");
    const auto a = (dir / "a.jsonl").string(), b = (dir / "b.jsonl").string();
    CHECK(cli({"generate", "--users", "5", "--seed", "1", "--out", a}).code == 0);
    CHECK(cli({"generate", "--users", "5", "--seed", "1", "--out", b}).code == 0);
    CHECK(slurp(a) == slurp(b));
    CHECK(slurp(a + ".truth.jsonl") == slurp(b + ".truth.jsonl"));
    CHECK(load_corpus(a).size() == 5);

    const auto zero = cli({"generate", "--users", "0", "--out", (dir / "z.jsonl").string()});
    CHECK(zero.code != 0);
    CHECK(zero.err.find("--users") != std::string::npos);
    CHECK_FALSE(fs::exists(dir / "z.jsonl"));
    CHECK(cli({"frobnicate"}).code != 0);
}

TEST_CASE("SEQRISK_SEED overrides --seed") {
    const auto dir = seqrisk::testing::scratch_dir("cli-seed");
    ::setenv("SEQRISK_SEED", "9", 1);
    cli({"generate", "--users", "3", "--seed", "1", "--out", (dir / "env.jsonl").string()});
    ::unsetenv("SEQRISK_SEED");
    cli({"generate", "--users", "3", "--seed", "9", "--out", (dir / "nine.jsonl").string()});
    CHECK(slurp(dir / "env.jsonl") == slurp(dir / "nine.jsonl"));
}

TEST_CASE("analyze writes the report and co-occurrence table") {
    const auto dir = seqrisk::testing::scratch_dir("cli-analyze");
    const auto corpus = (dir / "c.jsonl").string();
    REQUIRE(cli({"generate", "--users", "40", "--out", corpus}).code == 0);
    const auto r = cli({"analyze", "--corpus", corpus, "--out", (dir / "an").string()});
    REQUIRE(r.code == 0);
    const auto report = nlohmann::json::parse(r.out);
    CHECK(report.at("n_users") == 40);
    CHECK(report.at("kappa").is_null());
    const auto csv = lines(slurp(dir / "an" / "cooccurrence.csv"));
    REQUIRE(csv.size() == 20);
    CHECK(csv[0] == "risk_factor,SS,CS,PC,SR,ML");
    for (std::size_t i = 1; i < csv.size(); ++i) CHECK(std::count(csv[i].begin(), csv[i].end(), ',') == 5);
    CHECK(lines(slurp(dir / "an" / "chi_square.csv")).size() == 25);

    std::ofstream(dir / "ratings.csv") << "a,b\n2,1\n1,2\n";
    const auto k = cli({"analyze", "--corpus", corpus, "--ratings", (dir / "ratings.csv").string()});
    CHECK(nlohmann::json::parse(k.out).at("kappa").get<double>() == doctest::Approx(-1.0 / 3.0));
}

TEST_CASE("analyze rejects an empty corpus") {
    const auto dir = seqrisk::testing::scratch_dir("cli-empty");
    std::ofstream(dir / "empty.jsonl").close();
    const auto r = cli({"analyze", "--corpus", (dir / "empty.jsonl").string()});
    CHECK(r.code != 0);
    CHECK(r.err.find("error:") != std::string::npos);
}

TEST_CASE("train, evaluate, sweep and explain on a small corpus") {
    const auto dir = seqrisk::testing::scratch_dir("cli-train");
    const auto corpus = (dir / "c.jsonl").string();
    REQUIRE(cli({"generate", "--users", "20", "--seed", "2", "--out", corpus}).code == 0);
    std::ofstream(dir / "cfg.json") << R"({"max_epochs": 2, "hidden": 4, "factor_hidden": 6, "risk_hidden": 6})";
    const auto cfg = (dir / "cfg.json").string();
    const auto run = (dir / "run").string();

    const auto t = cli({"train", "--corpus", corpus, "--config", cfg, "--out", run, "--folds", "3"});
    REQUIRE_MESSAGE(t.code == 0, t.err);
    for (const char* f : {"config.json", "history.csv", "model.bin", "folds.json"}) CHECK(fs::exists(fs::path(run) / f));
    CHECK(lines(slurp(fs::path(run) / "history.csv")).size() == 3);

    SUBCASE("evaluate --run reprints the stored scores exactly") {
        const auto e = cli({"evaluate", "--run", run});
        REQUIRE(e.code == 0);
        CHECK(e.out == slurp(fs::path(run) / "evaluation.json"));
    }
    SUBCASE("evaluate with an ablation labels the row") {
        const auto out = (dir / "ev").string();
        const auto e = cli({"evaluate", "--corpus", corpus, "--config", cfg, "--folds", "2", "--ablate", "df", "--out", out});
        REQUIRE_MESSAGE(e.code == 0, e.err);
        const auto cmp = lines(slurp(fs::path(out) / "comparison.csv"));
        REQUIRE(cmp.size() == 4);
        CHECK(cmp[0] == "variant,gp,gr,fs");
        CHECK(cmp[3].rfind("w/o DF,", 0) == 0);
        CHECK(lines(slurp(fs::path(out) / "folds.csv")).size() == 5);
    }
    SUBCASE("sweep rows") {
        const auto e = cli({"sweep", "--corpus", corpus, "--config", cfg, "--sweep", "l", "--values", "2,3",
                            "--folds", "2", "--out", (dir / "sw").string()});
        REQUIRE_MESSAGE(e.code == 0, e.err);
        const auto rows = lines(slurp(dir / "sw" / "sweep.csv"));
        REQUIRE(rows.size() == 3);
        CHECK(rows[0] == "value,n_windows,gp,gr,fs");
    }
    SUBCASE("explain") {
        const auto user = load_corpus(corpus).front().user_id;
        const auto e = cli({"explain", "--model", run, "--corpus", corpus, "--user", user, "--window-index", "0"});
        REQUIRE_MESSAGE(e.code == 0, e.err);
        const auto j = nlohmann::json::parse(e.out);
        CHECK(j.at("posts").size() == 4);
        CHECK(j.at("s_p").get<double>() + j.at("s_r").get<double>() == doctest::Approx(1.0));

        const auto text = cli({"explain", "--model", run, "--corpus", corpus, "--user", user, "--window-index", "0", "--text"});
        CHECK(text.out.find("attention") != std::string::npos);

        const auto ghost = cli({"explain", "--model", run, "--corpus", corpus, "--user", "ghost", "--window-index", "0"});
        CHECK(ghost.code != 0);
        CHECK(ghost.err.find("ghost") != std::string::npos);
        const auto far = cli({"explain", "--model", run, "--corpus", corpus, "--user", user, "--window-index", "999"});
        CHECK(far.code != 0);
        CHECK(far.err.find("999") != std::string::npos);
    }
}

}  // TEST_SUITE
