// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// nonzero when any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "model_fixtures.hpp"
#include "seqrisk/analysis.hpp"
#include "seqrisk/decoder.hpp"
#include "seqrisk/encoder.hpp"
#include "seqrisk/metrics.hpp"
#include "seqrisk/model.hpp"
#include "seqrisk/synthetic.hpp"
#include "seqrisk/trainer.hpp"

using namespace seqrisk;
using Clock = std::chrono::steady_clock;

namespace {

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

int failures = 0;

void report(int id, const std::string& name, bool pass, const std::string& detail, double secs) {
    std::printf("[%s] criterion %d: %s: %s (%.1f s)\n", pass ? "PASS" : "FAIL", id, name.c_str(), detail.c_str(), secs);
    std::fflush(stdout);
    if (!pass) ++failures;
}

template <typename... Args>
std::string fmt(const char* f, Args... args) {
    char buf[128];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

// ---------------------------------------------------------------------------

void oracle_suite() {
    const auto start = Clock::now();
    double worst = 0.0;
    int checked = 0;
    std::vector<std::string> misses;
    auto expect = [&](const std::string& what, double got, double want) {
        ++checked;
        const double err = std::abs(got - want);
        worst = std::max(worst, err);
        if (!(err <= 1e-3)) misses.push_back(what);
    };

    const Eigen::VectorXd zeros = Eigen::VectorXd::Zero(kNumRiskFactors);
    Eigen::VectorXd labels = Eigen::VectorXd::Zero(kNumRiskFactors);
    labels.head(5).setOnes();
    expect("bce 19 ln2", multilabel_bce(zeros, labels), 13.169);
    expect("bce 0.75", bce_with_logit(std::log(3.0), 1.0), 0.2877);

    const auto t = sord_targets(RiskLevel::BR, 1.0);
    const double want[4] = {0.0723, 0.1966, 0.5344, 0.1966};
    for (int k = 0; k < 4; ++k) expect("sord", t[static_cast<std::size_t>(k)], want[k]);

    const Eigen::VectorXd u = Eigen::Vector2d(1, 0);
    const Eigen::MatrixXd plus = Eigen::Vector2d(3, 0), minus = Eigen::Vector2d(0, -2);
    const auto s = alignment(u, plus, minus, 1.0);
    expect("alignment", s.s_p, 0.7311);

    const std::vector<EffectivenessFlags> flags = {{true, false}};
    const std::vector<AlignmentScores> scores = {s};
    expect("dynamic loss", dynamic_loss(flags, scores), 0.3133);

    expect("chi-square", chi_square_2x2({10, 20, 20, 10}).chi2, 6.6667);
    expect("kappa", fleiss_kappa({{{2, 1}, {1, 2}}}), -1.0 / 3.0);

    const auto g = graded_scores({1, 1, 1});
    expect("gp", g.gp, 0.5);
    expect("gr", g.gr, 0.5);
    expect("fs", g.fs, 0.5);

    UncertaintyWeights w;
    w.log_sigma = {0.0, 0.0, std::log(2.0), std::log(2.0)};
    expect("weighted total", total_loss({1, 2, 3, 4}, w), 3.7613);

    const double secs = seconds_since(start);
    std::string detail = std::to_string(checked) + " values, max abs error " + fmt("%.1e", worst);
    for (const auto& m : misses) detail += "; off: " + m;
    report(1, "loss/metric oracles", misses.empty() && secs < 10.0, detail, secs);
}

// ---------------------------------------------------------------------------

void gradient_suite() {
    const auto start = Clock::now();
    std::mt19937_64 rng(20240611);
    const int instances = 24;
    double worst = 0.0;
    std::string worst_group;
    for (int i = 0; i < instances; ++i) {
        const int d_e = 3 + static_cast<int>(rng() % 3);
        const int l = 1 + static_cast<int>(rng() % 4);
        const int batch = 2 + static_cast<int>(rng() % 3);
        std::vector<WindowExample> ex;
        for (int b = 0; b < batch; ++b) ex.push_back(testing::random_example(rng, l, d_e, static_cast<std::size_t>(b)));
        // One protective-effective and one risk-effective window per batch.
        ex[0].last_level = RiskLevel::AT;
        ex[0].target = RiskLevel::ID;
        ex[1].last_level = RiskLevel::IN;
        ex[1].target = RiskLevel::BR;
        std::vector<const WindowExample*> ptrs;
        for (const auto& e : ex) ptrs.push_back(&e);
        const auto params = testing::random_parameters(testing::tiny_dims(d_e), rng);
        ForwardOptions o;
        o.tau = 0.3 + 0.5 * static_cast<double>(rng() % 100) / 100.0;
        o.alpha = 0.5 + static_cast<double>(rng() % 100) / 100.0;
        o.pooling = i % 2 == 0 ? PoolingMode::Raw : PoolingMode::Gated;
        const auto r = testing::check_gradients(params, ptrs, o, 1e-5);
        if (r.worst_relative_error > worst) {
            worst = r.worst_relative_error;
            worst_group = r.worst_group;
        }
    }
    const double secs = seconds_since(start);
    report(2, "gradient check", worst <= 1e-4 && secs < 60.0,
           fmt("%d instances, every tensor group, worst relative error ", instances) + fmt("%.2e", worst) + " (" +
               worst_group + ")",
           secs);
}

// ---------------------------------------------------------------------------

void property_suite() {
    const auto start = Clock::now();
    const int cases = 1000;
    std::mt19937_64 rng(777);
    std::normal_distribution<double> n(0.0, 1.0);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    auto levels = [&] { return level_from_index(static_cast<int>(rng() % kNumLevels)); };
    std::map<std::string, int> broken;

    for (int c = 0; c < cases; ++c) {
        const int l = 1 + static_cast<int>(rng() % 8);
        const int h = 1 + static_cast<int>(rng() % 4);
        auto p = EncoderParams::random(2, h, 1 + static_cast<int>(rng() % 4), rng);
        p.theta = 3 * n(rng);
        p.mu = std::abs(n(rng));
        p.attn_v *= 1 + 10 * unit(rng);
        Eigen::MatrixXd H(l, 2 * h);
        for (Eigen::Index i = 0; i < H.size(); ++i) H.data()[i] = 5 * n(rng);
        std::vector<double> dt(static_cast<std::size_t>(l));
        for (auto& d : dt) d = 30 * unit(rng);
        const auto enc = temporal_attention(H, dt, p, c % 2 ? PoolingMode::Gated : PoolingMode::Raw);
        if (!(std::abs(enc.attention.sum() - 1.0) < 1e-9 && enc.attention.minCoeff() >= 0.0)) ++broken["attention"];
    }
    for (int c = 0; c < cases; ++c) {
        const int d = 1 + static_cast<int>(rng() % 6), l = 1 + static_cast<int>(rng() % 6);
        Eigen::VectorXd u(d);
        Eigen::MatrixXd ep(d, l), em(d, l);
        for (Eigen::Index i = 0; i < u.size(); ++i) u[i] = n(rng);
        for (Eigen::Index i = 0; i < ep.size(); ++i) ep.data()[i] = n(rng), em.data()[i] = n(rng);
        const double tau = std::pow(10.0, -2.0 + 5.0 * unit(rng));
        const auto s = alignment(u, ep, em, tau);
        if (!(std::abs(s.s_p + s.s_r - 1.0) < 1e-9)) ++broken["alignment"];
    }
    for (int c = 0; c < cases; ++c) {
        const auto f = effectiveness(levels(), levels());
        if (f.protective && f.risk) ++broken["effectiveness"];
    }
    for (int c = 0; c < cases; ++c) {
        const auto k = levels();
        const double alpha = 1e-3 + 50 * unit(rng);
        const auto t = sord_targets(k, alpha);
        const auto arg = std::max_element(t.begin(), t.end()) - t.begin();
        if (arg != level_index(k)) ++broken["sord"];
    }
    for (int c = 0; c < cases; ++c) {
        const std::size_t len = 1 + rng() % 50;
        std::vector<RiskLevel> p(len), t(len);
        for (std::size_t i = 0; i < len; ++i) p[i] = levels(), t[i] = levels();
        if (graded_counts(p, t).total() != static_cast<long long>(len)) ++broken["graded"];
    }
    const double secs = seconds_since(start);
    std::string detail = fmt("5 properties x %d cases", cases);
    for (const auto& [k, v] : broken) detail += "; " + k + " violated " + std::to_string(v) + "x";
    report(3, "structural invariants", broken.empty() && secs < 30.0, detail, secs);
}

// ---------------------------------------------------------------------------

struct SeedRun {
    std::uint64_t seed = 0;
    GradedScores full, no_df, baseline;
    double sp_protective = 0.0, sp_risk = 0.0;
    std::map<double, double> fs_by_tau;
    double full_seconds = 0.0;
};

SeedRun run_seed(std::uint64_t seed, bool with_tau) {
    SeedRun out;
    out.seed = seed;
    SyntheticConfig sc;
    sc.n_users = 200;
    sc.seed = seed;
    sc.protective_pull = 0.9;
    sc.risk_push = 0.9;
    const auto corpus = generate_synthetic(sc);

    TrainConfig c;
    c.window_length = 4;
    c.tau = 0.4;
    c.seed = seed;
    const auto embedder = make_provider(c.embedder, c.dims.embedding, c.embedding_seed);
    const auto data = Dataset::build(corpus.users, c.window_length, *embedder);

    auto start = Clock::now();
    const auto full = cross_validate(data, c, 5);
    out.full_seconds = seconds_since(start);
    out.full = full.mean;
    out.baseline = majority_baseline(data, full.folds);
    out.fs_by_tau[0.4] = full.mean.fs;

    std::map<std::string, TransitionCause> cause;
    for (const auto& t : corpus.truth) cause[t.post_id] = t.cause;
    double sp = 0, np = 0, sr = 0, nr = 0;
    for (const auto& fold : full.per_fold) {
        for (const auto& rec : fold.records) {
            const auto it = cause.find(data.windows[rec.window_id].target_post_id);
            if (it == cause.end()) continue;
            if (it->second == TransitionCause::Protective) sp += rec.s_p, np += 1;
            if (it->second == TransitionCause::Risk) sr += rec.s_p, nr += 1;
        }
    }
    out.sp_protective = np > 0 ? sp / np : std::nan("");
    out.sp_risk = nr > 0 ? sr / nr : std::nan("");

    TrainConfig ablated = c;
    ablated.ablations.disable_df = true;
    out.no_df = cross_validate(data, ablated, 5).mean;

    if (with_tau) {
        for (double tau : {0.2, 3.0}) {
            TrainConfig t = c;
            t.tau = tau;
            out.fs_by_tau[tau] = cross_validate(data, t, 5).mean.fs;
        }
    }
    std::printf("  seed %llu: FS full %.4f, w/o DF %.4f, majority %.4f; S_p protective %.3f, risk %.3f",
                static_cast<unsigned long long>(seed), out.full.fs, out.no_df.fs, out.baseline.fs,
                out.sp_protective, out.sp_risk);
    if (with_tau)
        std::printf("; FS tau 0.2 %.4f, 3.0 %.4f", out.fs_by_tau[0.2], out.fs_by_tau[3.0]);
    std::printf("\n");
    std::fflush(stdout);
    return out;
}

void end_to_end_suite(const std::vector<std::uint64_t>& seeds, bool with_tau) {
    std::vector<SeedRun> runs;
    double secs = 0.0, full_secs = 0.0;
    for (auto seed : seeds) {
        const auto start = Clock::now();
        runs.push_back(run_seed(seed, with_tau));
        secs += seconds_since(start);
        full_secs += runs.back().full_seconds;
    }
    const int n = static_cast<int>(runs.size());
    const int need = n - 1;

    int beat = 0, ablation = 0, influence = 0;
    std::string margins, deltas, gaps;
    for (const auto& r : runs) {
        const double m = r.full.fs - r.baseline.fs;
        if (m >= 0.05) ++beat;
        margins += fmt(" %+.3f", m);
        const double d = r.full.fs - r.no_df.fs;
        if (d >= 0.0) ++ablation;
        deltas += fmt(" %+.3f", d);
        const double g = r.sp_protective - r.sp_risk;
        if (g >= 0.05) ++influence;
        gaps += fmt(" %+.3f", g);
    }
    report(4, "synthetic end-to-end vs majority baseline", beat >= need && full_secs < 600.0,
           std::to_string(beat) + "/" + std::to_string(n) + " seeds with FS margin >= 0.05; margins" + margins,
           full_secs);
    report(5, "ablation direction FS(full) >= FS(w/o DF)", ablation >= need,
           std::to_string(ablation) + "/" + std::to_string(n) + " seeds; FS(full) - FS(w/o DF)" + deltas, secs);
    report(6, "influence recovery S_p gap", influence >= need,
           std::to_string(influence) + "/" + std::to_string(n) + " seeds with gap >= 0.05; gaps" + gaps, secs);

    if (with_tau) {
        std::map<double, double> mean;
        for (const auto& r : runs)
            for (const auto& [tau, fs] : r.fs_by_tau) mean[tau] += fs / n;
        const bool pass = mean[0.4] >= mean[0.2] - 0.02 && mean[0.4] >= mean[3.0] - 0.02;
        report(7, "temperature sensitivity", pass,
               fmt("mean FS over seeds: tau 0.2 %.4f", mean[0.2]) + fmt(", 0.4 %.4f", mean[0.4]) +
                   fmt(", 3.0 %.4f", mean[3.0]),
               secs);
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"seqrisk acceptance checks"};
    std::vector<int> only;
    std::vector<std::uint64_t> seeds = {11, 12, 13, 14, 15};
    app.add_option("--only", only, "Run only these criteria (1-7)")->delimiter(',');
    app.add_option("--seeds", seeds, "Corpus seeds for criteria 4-7")->delimiter(',');
    CLI11_PARSE(app, argc, argv);
    auto wanted = [&](int id) { return only.empty() || std::find(only.begin(), only.end(), id) != only.end(); };

    if (wanted(1)) oracle_suite();
    if (wanted(2)) gradient_suite();
    if (wanted(3)) property_suite();
    if (wanted(4) || wanted(5) || wanted(6) || wanted(7)) end_to_end_suite(seeds, wanted(7));
    std::printf("%s: %d criterion/criteria failed\n", failures ? "FAILED" : "ALL PASSED", failures);
    return failures ? 1 : 0;
}
