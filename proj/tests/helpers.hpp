#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "seqrisk/corpus.hpp"

namespace seqrisk::testing {

inline Post make_post(const std::string& user, const std::string& id, std::int64_t ts,
                      RiskLevel level = RiskLevel::IN, std::vector<std::string> rf = {},
                      std::vector<std::string> pf = {}, std::string text = "some words here") {
    Post p;
    p.user_id = user;
    p.post_id = id;
    p.timestamp = ts;
    p.text = std::move(text);
    p.risk_level = level;
    p.risk_factors = std::move(rf);
    p.protective_factors = std::move(pf);
    return p;
}

/// A user with n daily posts at the given levels (cycled).
inline UserTimeline make_user(const std::string& user, int n, std::vector<RiskLevel> levels = {RiskLevel::IN}) {
    UserTimeline u;
    u.user_id = user;
    for (int i = 0; i < n; ++i) {
        u.posts.push_back(make_post(user, user + "-p" + std::to_string(i), 1'600'000'000 + i * 86'400,
                                    levels[static_cast<std::size_t>(i) % levels.size()]));
    }
    return u;
}

/// Fresh, empty scratch directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
    auto dir = std::filesystem::temp_directory_path() / ("seqrisk-test-" + name);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

}  // namespace seqrisk::testing
