#include <doctest.h>

#include <cmath>
#include <numeric>
#include <set>

#include "model_fixtures.hpp"
#include "seqrisk/model.hpp"

using namespace seqrisk;
using namespace seqrisk::testing;

namespace {

std::vector<const WindowExample*> pointers(const std::vector<WindowExample>& v) {
    std::vector<const WindowExample*> out;
    for (const auto& e : v) out.push_back(&e);
    return out;
}

}  // namespace

TEST_SUITE("model") {

TEST_CASE("uncertainty-weighted total") {
    const LossBundle losses{1, 2, 3, 4};
    SUBCASE("unit sigmas halve the plain sum") {
        CHECK(total_loss(losses, {}) == doctest::Approx(5.0));
    }
    SUBCASE("sigmas 1, 1, 2, 2") {
        UncertaintyWeights w;
        w.log_sigma = {0.0, 0.0, std::log(2.0), std::log(2.0)};
        CHECK(total_loss(losses, w) == doctest::Approx(2.375 + std::log(4.0)).epsilon(1e-12));
        CHECK(total_loss(losses, w) == doctest::Approx(3.7613).epsilon(1e-4));
    }
    SUBCASE("disabled tasks drop out, regulariser included") {
        UncertaintyWeights w;
        w.log_sigma = {0.0, 0.0, 0.0, std::log(2.0)};
        Ablations a;
        a.disable_df = true;
        CHECK(total_loss(losses, w, a) == doctest::Approx(3.0));
    }
}

TEST_CASE("tensor table names are unique and cover every parameter") {
    auto p = ModelParameters::initialize(tiny_dims(5), 1);
    const auto views = tensors(p);
    std::set<std::string> names;
    std::size_t total = 0;
    for (const auto& v : views) {
        names.insert(v.name);
        total += v.values.size();
        CHECK(static_cast<Eigen::Index>(v.values.size()) == v.rows * v.cols);
    }
    CHECK(names.size() == views.size());
    CHECK(total == parameter_count(p));
    CHECK(names.count("encoder.theta") == 1);
    CHECK(names.count("encoder.mu") == 1);
    CHECK(names.count("uncertainty.log_sigma") == 1);
}

TEST_CASE("initialisation is deterministic in the seed") {
    auto a = ModelParameters::initialize(tiny_dims(5), 9);
    auto b = ModelParameters::initialize(tiny_dims(5), 9);
    auto c = ModelParameters::initialize(tiny_dims(5), 10);
    CHECK(a.encoder.forward.W == b.encoder.forward.W);
    CHECK(a.encoder.forward.W != c.encoder.forward.W);
}

TEST_CASE("analytic gradients match central differences") {
    std::mt19937_64 rng(2024);
    for (int instance = 0; instance < 3; ++instance) {
        const int d_e = 4;
        std::vector<WindowExample> ex;
        for (int i = 0; i < 3; ++i) ex.push_back(random_example(rng, 3, d_e, static_cast<std::size_t>(i)));
        ex[0].last_level = RiskLevel::AT;
        ex[0].target = RiskLevel::ID;  // at least one effective window
        const auto params = random_parameters(tiny_dims(d_e), rng);
        ForwardOptions o;
        o.pooling = instance == 2 ? PoolingMode::Gated : PoolingMode::Raw;
        const auto r = check_gradients(params, pointers(ex), o);
        CAPTURE(instance);
        CAPTURE(r.worst_group);
        CHECK(r.worst_relative_error <= 1e-4);
    }
}

TEST_CASE("disabling the dynamic task zeroes its sigma gradient") {
    std::mt19937_64 rng(7);
    std::vector<WindowExample> ex;
    for (int i = 0; i < 4; ++i) ex.push_back(random_example(rng, 3, 4, static_cast<std::size_t>(i)));
    ex[0].last_level = RiskLevel::IN;
    ex[0].target = RiskLevel::AT;
    const auto params = random_parameters(tiny_dims(4), rng);
    ForwardOptions o;
    o.ablations.disable_df = true;
    auto g = params.zeros_like();
    const auto batch = pointers(ex);
    const auto r = evaluate_batch(params, batch, o, &g);
    CHECK(g.uncertainty.log_sigma[static_cast<int>(Task::Dynamic)] == 0.0);
    CHECK(g.uncertainty.log_sigma[static_cast<int>(Task::RiskLevel)] != 0.0);
    CHECK(r.total == doctest::Approx(total_loss(r.losses, params.uncertainty, o.ablations)));
}

TEST_CASE("huge temperature makes the dynamic loss ln 2") {
    std::mt19937_64 rng(8);
    std::vector<WindowExample> ex;
    for (int i = 0; i < 6; ++i) ex.push_back(random_example(rng, 3, 4, static_cast<std::size_t>(i)));
    ex[0].last_level = RiskLevel::AT;
    ex[0].target = RiskLevel::IN;
    ForwardOptions o;
    o.tau = 1e9;
    const auto r = evaluate_batch(random_parameters(tiny_dims(4), rng), ex, o);
    CHECK(r.losses.df == doctest::Approx(std::log(2.0)).epsilon(1e-8));
    for (const auto& out : r.outputs) CHECK(out.alignment.s_p == doctest::Approx(0.5).epsilon(1e-8));
}

TEST_CASE("forward invariants on random windows") {
    std::mt19937_64 rng(99);
    for (int trial = 0; trial < 50; ++trial) {
        const int l = 1 + static_cast<int>(rng() % 5);
        std::vector<WindowExample> ex;
        for (int i = 0; i < 3; ++i) ex.push_back(random_example(rng, l, 4, static_cast<std::size_t>(i)));
        const auto r = evaluate_batch(random_parameters(tiny_dims(4), rng), ex, ForwardOptions{});
        for (const auto& out : r.outputs) {
            CHECK(out.attention.sum() == doctest::Approx(1.0));
            CHECK(out.attention.minCoeff() >= 0.0);
            CHECK(out.alignment.s_p + out.alignment.s_r == doctest::Approx(1.0));
            CHECK_FALSE((out.flags.protective && out.flags.risk));
            CHECK(std::accumulate(out.risk_probs.begin(), out.risk_probs.end(), 0.0) == doctest::Approx(1.0));
        }
    }
}

TEST_CASE("gradient evaluation does not change the forward result") {
    std::mt19937_64 rng(5);
    std::vector<WindowExample> ex;
    for (int i = 0; i < 3; ++i) ex.push_back(random_example(rng, 2, 4, static_cast<std::size_t>(i)));
    const auto params = random_parameters(tiny_dims(4), rng);
    auto g = params.zeros_like();
    const auto batch = pointers(ex);
    const double with = evaluate_batch(params, batch, ForwardOptions{}, &g).total;
    const double without = evaluate_batch(params, batch, ForwardOptions{}).total;
    CHECK(with == without);
}

TEST_CASE("dropout masks are reproducible from the rng seed") {
    std::mt19937_64 rng(6);
    std::vector<WindowExample> ex;
    for (int i = 0; i < 3; ++i) ex.push_back(random_example(rng, 3, 4, static_cast<std::size_t>(i)));
    const auto params = random_parameters(tiny_dims(4), rng);
    ForwardOptions o;
    o.dropout = 0.5;
    const auto batch = pointers(ex);
    std::mt19937_64 r1(11), r2(11);
    CHECK(evaluate_batch(params, batch, o, nullptr, &r1).total == evaluate_batch(params, batch, o, nullptr, &r2).total);
    CHECK(evaluate_batch(params, batch, o, nullptr, &r1).total != evaluate_batch(params, batch, o).total);
}

}  // TEST_SUITE
