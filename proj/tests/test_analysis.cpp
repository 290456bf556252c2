#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "helpers.hpp"
#include "seqrisk/analysis.hpp"
#include "seqrisk/errors.hpp"
#include "seqrisk/synthetic.hpp"

using namespace seqrisk;
using seqrisk::testing::make_post;

TEST_SUITE("analysis") {

TEST_CASE("Fleiss kappa") {
    SUBCASE("two items split 2:1 and 1:2 among three raters") {
        CHECK(fleiss_kappa({{{2, 1}, {1, 2}}}) == doctest::Approx(-1.0 / 3.0).epsilon(1e-12));
    }
    SUBCASE("unanimous raters over several categories") {
        CHECK(fleiss_kappa({{{3, 0, 0}, {0, 3, 0}, {0, 0, 3}}}) == doctest::Approx(1.0));
    }
    SUBCASE("a single category ever used is 1 by convention") {
        CHECK(fleiss_kappa({{{4, 0}, {4, 0}}}) == 1.0);
    }
    SUBCASE("malformed inputs") {
        CHECK_THROWS_AS(fleiss_kappa({{{2, 1}, {1, 1, 1}}}), std::invalid_argument);
        CHECK_THROWS_AS(fleiss_kappa({{{2, 1}, {1, 1}}}), std::invalid_argument);
        CHECK_THROWS_AS(fleiss_kappa({{{1, 0}, {0, 1}}}), std::invalid_argument);
        CHECK_THROWS_AS(fleiss_kappa({}), std::invalid_argument);
    }
}

TEST_CASE("chi-square on 2x2 tables") {
    SUBCASE("closed form") {
        const auto r = chi_square_2x2({10, 20, 20, 10});
        CHECK(r.chi2 == doctest::Approx(20.0 / 3.0).epsilon(1e-12));
        CHECK(r.significant);
    }
    SUBCASE("identical distributions") {
        const auto r = chi_square_2x2({15, 15, 15, 15});
        CHECK(r.chi2 == 0.0);
        CHECK_FALSE(r.significant);
    }
    SUBCASE("scales linearly in n at fixed proportions") {
        const double base = chi_square_2x2({3, 1, 1, 3}).chi2;
        CHECK(chi_square_2x2({300, 100, 100, 300}).chi2 == doctest::Approx(100 * base));
    }
    SUBCASE("zero marginal is undefined") {
        CHECK_THROWS_AS(chi_square_2x2({0, 0, 5, 5}), UndefinedResult);
    }
}

namespace {

const FactorDiscriminationRow& row_for(const std::vector<FactorDiscriminationRow>& rows, const std::string& code) {
    return *std::find_if(rows.begin(), rows.end(), [&](const auto& r) { return r.code == code; });
}

}  // namespace

TEST_CASE("a causally protective factor outranks every non-causal factor") {
    int significant = 0;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        SyntheticConfig c;
        c.seed = seed;
        c.effective_protective_codes = {"CS"};
        c.protective_pull = 1.0;
        const auto corpus = generate_synthetic(c);
        const auto rows = factor_discrimination(build_windows(corpus.users, 4));
        const auto it = std::find_if(rows.begin(), rows.end(), [](const auto& r) { return r.code == "CS"; });
        CAPTURE(seed);
        // Only the causally effective risk codes may outrank it.
        for (auto r = rows.begin(); r != it; ++r) {
            CAPTURE(r->code);
            CHECK(std::find(c.effective_risk_codes.begin(), c.effective_risk_codes.end(), r->code) !=
                  c.effective_risk_codes.end());
        }
        if (it->result && it->result->significant) ++significant;
    }
    CHECK(significant >= 4);
}

TEST_CASE("a factor independent of the group rarely looks significant") {
    // Non-effective codes are emitted at fixed rates whatever the level.
    int runs = 0, below = 0;
    for (std::uint64_t seed = 100; seed < 130; ++seed) {
        SyntheticConfig c;
        c.seed = seed;
        c.n_users = 120;
        const auto rows = factor_discrimination(build_windows(generate_synthetic(c).users, 1));
        const auto& r = row_for(rows, "MHI");
        if (!r.result) continue;
        ++runs;
        if (r.result->chi2 < kChiSquareCritical05) ++below;
    }
    REQUIRE(runs >= 25);
    CHECK(below >= 0.9 * runs);
}

TEST_CASE("a factor never present is reported undefined") {
    std::vector<LabeledWindow> windows(2);
    windows[0].observed = {make_post("a", "1", 1)};
    windows[0].target_level = RiskLevel::AT;
    windows[1].observed = {make_post("b", "2", 1)};
    windows[1].target_level = RiskLevel::IN;
    const auto rows = factor_discrimination(windows);
    CHECK(rows.size() == kNumFactors);
    const auto& r = row_for(rows, "SM");
    CHECK_FALSE(r.result.has_value());
    CHECK_FALSE(r.undefined_reason.empty());
}

TEST_CASE("user-level co-occurrence") {
    auto user = [](const std::string& id, std::vector<std::string> rf, std::vector<std::string> pf) {
        UserTimeline u;
        u.user_id = id;
        u.posts = {make_post(id, id + "-0", 1, RiskLevel::IN, std::move(rf)),
                   make_post(id, id + "-1", 2, RiskLevel::IN, {}, std::move(pf))};
        return u;
    };
    const auto ls = *FactorCatalog::risk_index("LS");
    const auto te = *FactorCatalog::risk_index("TE");
    const auto ph = *FactorCatalog::risk_index("PH");
    const auto ss = *FactorCatalog::protective_index("SS");
    const auto cs = *FactorCatalog::protective_index("CS");
    const auto m = cooccurrence({user("a", {"LS", "TE"}, {"SS", "CS"}), user("b", {"LS"}, {"CS"}),
                                 user("c", {"LS", "TE"}, {"CS"})});
    CHECK(m.row_counts[ls] == 3);
    CHECK(m.values[ls][ss] == doctest::Approx(1.0 / 3.0));
    CHECK(m.values[te][cs] == 1.0);
    CHECK(m.defined[ls]);
    CHECK_FALSE(m.defined[ph]);
    CHECK(m.row_counts[ph] == 0);
}

}  // TEST_SUITE
