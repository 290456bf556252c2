#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "seqrisk/catalog.hpp"
#include "seqrisk/corpus.hpp"

namespace seqrisk {

/// Parameters of the latent-Markov synthetic corpus.
///
/// Each user's level sequence is a Markov chain. After post t, if an
/// effective protective factor was emitted and a draw falls under
/// `protective_pull`, the next level is max(level-1, IN); symmetrically for
/// `risk_push`. When both fire a fair coin picks one. An unforced step keeps
/// the level with probability `persistence` and otherwise draws it from a
/// distribution solved so that `level_marginals` stays stationary (clipped
/// when infeasible).
struct SyntheticConfig {
    int n_users = 200;
    int min_posts = 6;
    int max_posts = 16;
    std::uint64_t seed = 0;
    /// Start level of every user; drawn from `level_marginals` when unset.
    std::optional<RiskLevel> initial_level;
    std::array<double, kNumLevels> level_marginals = {0.375, 0.315, 0.240, 0.070};
    double protective_pull = 0.6;
    double risk_push = 0.6;
    double persistence = 0.5;
    /// Bernoulli emission rate per post, indexed by combined factor index.
    std::array<double, kNumFactors> factor_emission_rates = default_emission_rates();
    /// Codes able to force a transition. Others are emitted as pure noise.
    std::vector<std::string> effective_risk_codes = {"SM", "PSST", "TE", "PH", "HL"};
    std::vector<std::string> effective_protective_codes = {"SS", "CS", "PC", "SR", "ML"};
    double interval_mean_days = 2.54;
    /// Probability that a post's level words describe its true level.
    double level_cue_fidelity = 0.95;
    /// Level words per post (factor codes contribute two words each).
    int level_cue_words = 3;

    static std::array<double, kNumFactors> default_emission_rates();
    void validate() const;
};

enum class TransitionCause { None, Protective, Risk };

std::string_view cause_name(TransitionCause cause);

/// One record per consecutive post pair: what drove the move into `post_id`.
struct TransitionTruth {
    std::string user_id;
    std::string post_id;  // the later post of the pair
    RiskLevel from_level = RiskLevel::IN;
    RiskLevel to_level = RiskLevel::IN;
    TransitionCause cause = TransitionCause::None;
    std::string trigger_code;  // empty when cause is None
};

struct SyntheticCorpus {
    std::vector<UserTimeline> users;
    std::vector<TransitionTruth> truth;
};

/// Jump distribution of unforced non-persistent steps that keeps `level_marginals` stationary.
std::array<double, kNumLevels> unforced_distribution(const SyntheticConfig& config);

SyntheticCorpus generate_synthetic(const SyntheticConfig& config);

void write_truth(std::ostream& out, const std::vector<TransitionTruth>& truth);
std::vector<TransitionTruth> read_truth(std::istream& in);
void save_truth(const std::filesystem::path& path, const std::vector<TransitionTruth>& truth);
std::vector<TransitionTruth> load_truth(const std::filesystem::path& path);

/// Vocabulary used to synthesize text for a factor code or level.
const std::vector<std::string>& factor_vocabulary(std::string_view code);
const std::vector<std::string>& level_vocabulary(RiskLevel level);

}  // namespace seqrisk
