#include <doctest.h>

#include <sstream>

#include "helpers.hpp"
#include "model_fixtures.hpp"
#include "seqrisk/errors.hpp"
#include "seqrisk/explain.hpp"
#include "seqrisk/persistence.hpp"

using namespace seqrisk;
using namespace seqrisk::testing;

TEST_SUITE("persistence") {

TEST_CASE("model files round-trip bit for bit") {
    std::mt19937_64 rng(3);
    auto p = random_parameters(tiny_dims(8), rng);
    std::stringstream s;
    write_model(s, p);
    auto back = read_model(s);
    CHECK(back.dims == p.dims);
    const auto a = tensors(p), b = tensors(back);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].name == b[i].name);
        CHECK(std::equal(a[i].values.begin(), a[i].values.end(), b[i].values.begin()));
    }
}

TEST_CASE("corrupt model files are rejected") {
    std::mt19937_64 rng(3);
    std::stringstream good;
    write_model(good, random_parameters(tiny_dims(8), rng));
    const auto bytes = good.str();
    SUBCASE("bad magic") {
        std::string b = bytes;
        b[0] = 'X';
        std::istringstream in(b);
        CHECK_THROWS_AS(read_model(in), FormatError);
    }
    SUBCASE("truncated") {
        std::istringstream in(bytes.substr(0, bytes.size() - 3));
        CHECK_THROWS_AS(read_model(in), FormatError);
    }
    SUBCASE("unknown version") {
        std::string b = bytes;
        b[8] = 9;
        std::istringstream in(b);
        CHECK_THROWS_AS(read_model(in), FormatError);
    }
}

TEST_CASE("history CSV has a header and one row per epoch") {
    std::vector<EpochRecord> h(3);
    for (int i = 0; i < 3; ++i) h[static_cast<std::size_t>(i)].epoch = i + 1;
    std::ostringstream out;
    write_history_csv(out, h);
    std::istringstream in(out.str());
    std::string line;
    std::getline(in, line);
    CHECK(line.rfind("epoch,loss_sr,", 0) == 0);
    int rows = 0;
    while (std::getline(in, line)) ++rows;
    CHECK(rows == 3);
}

TEST_CASE("fold assignments round-trip through JSON") {
    FoldAssignment f;
    f.k = 3;
    f.fold_of_user = {{"a", 0}, {"b", 2}, {"c", 1}};
    const auto back = folds_from_json(nlohmann::json::parse(folds_to_json(f).dump()));
    CHECK(back.k == 3);
    CHECK(back.fold_of_user == f.fold_of_user);
}

}  // TEST_SUITE

TEST_SUITE("explain") {

TEST_CASE("explanations are consistent with the forward pass") {
    const auto embedder = make_provider("hash", 8, 0);
    UserTimeline u = make_user("u1", 6, {RiskLevel::AT, RiskLevel::BR, RiskLevel::ID});
    u.posts[1].risk_factors = {"SM"};
    const auto windows = build_windows(u, 4);
    std::mt19937_64 rng(4);
    const auto params = random_parameters(tiny_dims(8), rng);
    ForwardOptions o;
    const auto& w = find_window(windows, "u1", 1);
    const auto r = explain_window(params, w, 1, *embedder, o);
    REQUIRE(r.rows.size() == 4);
    double total = 0;
    for (const auto& row : r.rows) total += row.attention;
    CHECK(total == doctest::Approx(1.0));
    CHECK(r.s_p + r.s_r == doctest::Approx(1.0));
    CHECK(r.rows[0].post_id == "u1-p1");
    CHECK(r.target_post_id == "u1-p5");
    CHECK(r.truth == w.target_level);

    const auto out = evaluate_batch(params, std::vector<WindowExample>{make_example(w, *embedder)}, o);
    CHECK(r.s_p == doctest::Approx(out.outputs[0].alignment.s_p));
    CHECK(r.predicted == out.outputs[0].predicted);

    const auto j = to_json(r);
    CHECK(j.at("posts").size() == 4);
    CHECK(j.at("risk_distribution").contains("AT"));
    const auto text = format_text(r);
    CHECK(text.find("u1-p4") != std::string::npos);
    CHECK(text.find("S_p") != std::string::npos);
}

TEST_CASE("unknown users and windows are named in the error") {
    const auto windows = build_windows(make_user("u1", 6), 4);
    try {
        find_window(windows, "ghost", 0);
        FAIL("expected a lookup error");
    } catch (const LookupError& e) {
        CHECK(std::string(e.what()).find("ghost") != std::string::npos);
    }
    try {
        find_window(windows, "u1", 7);
        FAIL("expected a lookup error");
    } catch (const LookupError& e) {
        CHECK(std::string(e.what()).find("7") != std::string::npos);
    }
}

}  // TEST_SUITE
