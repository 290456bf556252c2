#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "seqrisk/catalog.hpp"

namespace seqrisk {

struct Post {
    std::string user_id;
    std::string post_id;
    std::int64_t timestamp = 0;  // epoch seconds, UTC
    std::string text;
    RiskLevel risk_level = RiskLevel::IN;
    std::vector<std::string> risk_factors;
    std::vector<std::string> protective_factors;

    bool operator==(const Post&) const = default;
};

struct UserTimeline {
    std::string user_id;
    std::vector<Post> posts;  // ascending timestamp, ties by post_id
};

struct LabeledWindow {
    std::string user_id;
    std::vector<Post> observed;
    RiskLevel target_level = RiskLevel::IN;
    std::string target_post_id;
    std::int64_t target_timestamp = 0;
    std::vector<double> delta_days;  // days from each observed post to the last one

    RiskLevel last_observed_level() const { return observed.back().risk_level; }
};

struct FoldAssignment {
    int k = 0;
    std::map<std::string, int> fold_of_user;

    std::vector<std::string> test_users(int fold) const;
    std::vector<std::string> train_users(int fold) const;
};

inline constexpr double kSecondsPerDay = 86400.0;

/// Parses one corpus record. Throws ParseError/SchemaError with the given line number.
Post parse_post(const std::string& line, std::size_t line_number);
std::string format_post(const Post& post);

std::vector<UserTimeline> read_corpus(std::istream& in);
std::vector<UserTimeline> load_corpus(const std::filesystem::path& path);
void write_corpus(std::ostream& out, const std::vector<UserTimeline>& users);
void save_corpus(const std::filesystem::path& path, const std::vector<UserTimeline>& users);

/// Groups posts by user (users in first-appearance order), sorts each timeline
/// and rejects duplicate post ids within a user.
std::vector<UserTimeline> group_posts(std::vector<Post> posts);
void sort_timeline(UserTimeline& timeline);

std::vector<LabeledWindow> build_windows(const UserTimeline& timeline, int window_length);
std::vector<LabeledWindow> build_windows(const std::vector<UserTimeline>& users, int window_length);

/// Majority risk level over a user's posts; ties resolve to the lower level.
RiskLevel majority_level(const UserTimeline& timeline);

FoldAssignment split_users(const std::vector<UserTimeline>& users, int k, std::uint64_t seed);

}  // namespace seqrisk
