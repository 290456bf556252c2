#include "seqrisk/corpus.hpp"

#include <algorithm>
#include <array>
#include <fstream>
#include <random>
#include <set>
#include <stdexcept>
#include <unordered_map>

#include <nlohmann/json.hpp>

#include "seqrisk/errors.hpp"

namespace seqrisk {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

const std::set<std::string> kFields = {"user_id",           "post_id",   "timestamp",
                                       "text",              "risk_level", "risk_factors",
                                       "protective_factors"};

std::vector<std::string> parse_codes(const json& array, const char* field, bool protective,
                                     std::size_t line_number) {
    if (!array.is_array()) throw ParseError(line_number, std::string(field) + " must be an array");
    std::vector<std::string> codes;
    std::set<std::string> seen;
    for (const auto& item : array) {
        if (!item.is_string()) throw ParseError(line_number, std::string(field) + " entries must be strings");
        auto code = item.get<std::string>();
        bool known = protective ? FactorCatalog::protective_index(code).has_value()
                                : FactorCatalog::risk_index(code).has_value();
        if (!known) {
            throw SchemaError("line " + std::to_string(line_number) + ": unknown " +
                              (protective ? "protective" : "risk") + " factor code \"" + code + "\"");
        }
        if (!seen.insert(code).second) {
            throw SchemaError("line " + std::to_string(line_number) + ": duplicate factor code \"" +
                              code + "\"");
        }
        codes.push_back(std::move(code));
    }
    return codes;
}

}  // namespace

std::vector<std::string> FoldAssignment::test_users(int fold) const {
    std::vector<std::string> out;
    for (const auto& [user, f] : fold_of_user) {
        if (f == fold) out.push_back(user);
    }
    return out;
}

std::vector<std::string> FoldAssignment::train_users(int fold) const {
    std::vector<std::string> out;
    for (const auto& [user, f] : fold_of_user) {
        if (f != fold) out.push_back(user);
    }
    return out;
}

Post parse_post(const std::string& line, std::size_t line_number) {
    json record;
    try {
        record = json::parse(line);
    } catch (const json::parse_error& e) {
        throw ParseError(line_number, e.what());
    }
    if (!record.is_object()) throw ParseError(line_number, "record must be a JSON object");
    for (const auto& [key, value] : record.items()) {
        if (!kFields.count(key)) throw ParseError(line_number, "unknown field \"" + key + "\"");
    }
    for (const auto& field : kFields) {
        if (!record.contains(field)) throw ParseError(line_number, "missing field \"" + field + "\"");
    }

    Post post;
    auto require_string = [&](const char* field) {
        const auto& v = record.at(field);
        if (!v.is_string()) throw ParseError(line_number, std::string(field) + " must be a string");
        return v.get<std::string>();
    };
    post.user_id = require_string("user_id");
    post.post_id = require_string("post_id");
    post.text = require_string("text");

    const auto& ts = record.at("timestamp");
    if (!ts.is_number_integer()) throw ParseError(line_number, "timestamp must be an integer");
    post.timestamp = ts.get<std::int64_t>();
    if (post.timestamp < 0) throw SchemaError("line " + std::to_string(line_number) + ": negative timestamp");

    auto level = parse_level(require_string("risk_level"));
    if (!level) throw SchemaError("line " + std::to_string(line_number) + ": unknown risk level");
    post.risk_level = *level;

    post.risk_factors = parse_codes(record.at("risk_factors"), "risk_factors", false, line_number);
    post.protective_factors =
        parse_codes(record.at("protective_factors"), "protective_factors", true, line_number);
    return post;
}

std::string format_post(const Post& post) {
    ordered_json record;
    record["user_id"] = post.user_id;
    record["post_id"] = post.post_id;
    record["timestamp"] = post.timestamp;
    record["text"] = post.text;
    record["risk_level"] = std::string(level_code(post.risk_level));
    record["risk_factors"] = post.risk_factors;
    record["protective_factors"] = post.protective_factors;
    return record.dump();
}

void sort_timeline(UserTimeline& timeline) {
    std::stable_sort(timeline.posts.begin(), timeline.posts.end(), [](const Post& a, const Post& b) {
        if (a.timestamp != b.timestamp) return a.timestamp < b.timestamp;
        return a.post_id < b.post_id;
    });
}

std::vector<UserTimeline> group_posts(std::vector<Post> posts) {
    std::vector<UserTimeline> users;
    std::unordered_map<std::string, std::size_t> index;
    for (auto& post : posts) {
        auto [it, inserted] = index.try_emplace(post.user_id, users.size());
        if (inserted) users.push_back(UserTimeline{post.user_id, {}});
        users[it->second].posts.push_back(std::move(post));
    }
    for (auto& user : users) {
        sort_timeline(user);
        std::set<std::string> ids;
        for (const auto& post : user.posts) {
            if (!ids.insert(post.post_id).second) {
                throw SchemaError("duplicate post_id \"" + post.post_id + "\" for user \"" +
                                  user.user_id + "\"");
            }
        }
    }
    return users;
}

std::vector<UserTimeline> read_corpus(std::istream& in) {
    std::vector<Post> posts;
    std::string line;
    std::size_t line_number = 0;
    while (std::getline(in, line)) {
        ++line_number;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.find_first_not_of(" \t") == std::string::npos) continue;
        posts.push_back(parse_post(line, line_number));
    }
    return group_posts(std::move(posts));
}

std::vector<UserTimeline> load_corpus(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open corpus file " + path.string());
    return read_corpus(in);
}

void write_corpus(std::ostream& out, const std::vector<UserTimeline>& users) {
    for (const auto& user : users) {
        for (const auto& post : user.posts) out << format_post(post) << '\n';
    }
}

void save_corpus(const std::filesystem::path& path, const std::vector<UserTimeline>& users) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write corpus file " + path.string());
    write_corpus(out, users);
}

std::vector<LabeledWindow> build_windows(const UserTimeline& timeline, int window_length) {
    if (window_length < 1) throw std::invalid_argument("window length must be >= 1");
    const auto& posts = timeline.posts;
    const auto l = static_cast<std::size_t>(window_length);
    std::vector<LabeledWindow> windows;
    if (posts.size() <= l) return windows;
    windows.reserve(posts.size() - l);
    for (std::size_t start = 0; start + l < posts.size(); ++start) {
        LabeledWindow w;
        w.user_id = timeline.user_id;
        w.observed.assign(posts.begin() + static_cast<std::ptrdiff_t>(start),
                          posts.begin() + static_cast<std::ptrdiff_t>(start + l));
        const Post& target = posts[start + l];
        w.target_level = target.risk_level;
        w.target_post_id = target.post_id;
        w.target_timestamp = target.timestamp;
        const auto anchor = w.observed.back().timestamp;
        w.delta_days.reserve(l);
        for (const auto& p : w.observed) {
            w.delta_days.push_back(static_cast<double>(anchor - p.timestamp) / kSecondsPerDay);
        }
        windows.push_back(std::move(w));
    }
    return windows;
}

std::vector<LabeledWindow> build_windows(const std::vector<UserTimeline>& users, int window_length) {
    std::vector<LabeledWindow> all;
    for (const auto& user : users) {
        auto w = build_windows(user, window_length);
        std::move(w.begin(), w.end(), std::back_inserter(all));
    }
    return all;
}

RiskLevel majority_level(const UserTimeline& timeline) {
    std::array<int, kNumLevels> counts{};
    for (const auto& p : timeline.posts) ++counts[level_index(p.risk_level)];
    int best = 0;
    for (int i = 1; i < kNumLevels; ++i) {
        if (counts[i] > counts[best]) best = i;
    }
    return level_from_index(best);
}

FoldAssignment split_users(const std::vector<UserTimeline>& users, int k, std::uint64_t seed) {
    if (k < 2) throw std::invalid_argument("fold count must be >= 2");
    if (static_cast<std::size_t>(k) > users.size()) {
        throw std::invalid_argument("fold count " + std::to_string(k) + " exceeds user count " +
                                    std::to_string(users.size()));
    }

    std::array<std::vector<std::string>, kNumLevels> strata;
    std::set<std::string> seen;
    for (const auto& user : users) {
        if (!seen.insert(user.user_id).second) {
            throw std::invalid_argument("duplicate user \"" + user.user_id + "\"");
        }
        strata[level_index(majority_level(user))].push_back(user.user_id);
    }

    std::mt19937_64 rng(seed);
    std::vector<std::string> order;
    std::vector<std::string> pooled;
    for (auto& stratum : strata) {
        std::sort(stratum.begin(), stratum.end());
        auto& dest = stratum.size() >= static_cast<std::size_t>(k) ? order : pooled;
        dest.insert(dest.end(), stratum.begin(), stratum.end());
        if (&dest == &order) {
            std::shuffle(order.end() - static_cast<std::ptrdiff_t>(stratum.size()), order.end(), rng);
        }
    }
    std::shuffle(pooled.begin(), pooled.end(), rng);
    order.insert(order.end(), pooled.begin(), pooled.end());

    // Dealing the concatenated strata round-robin keeps fold sizes within 1.
    FoldAssignment folds;
    folds.k = k;
    for (std::size_t i = 0; i < order.size(); ++i) {
        folds.fold_of_user[order[i]] = static_cast<int>(i % static_cast<std::size_t>(k));
    }
    return folds;
}

}  // namespace seqrisk
