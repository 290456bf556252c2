#include "seqrisk/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <random>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "seqrisk/errors.hpp"

namespace seqrisk {

namespace {

const std::map<std::string_view, std::vector<std::string>>& vocabularies() {
    static const std::map<std::string_view, std::vector<std::string>> vocab = {
        {"MHI", {"depression", "diagnosis", "disorder"}},
        {"PH", {"illness", "chronic", "obesity"}},
        {"SU", {"alcohol", "drugs", "drinking"}},
        {"HL", {"hopeless", "trapped", "stuck"}},
        {"ED", {"anger", "panic", "anxiety"}},
        {"LS", {"worthless", "burden", "selfhate"}},
        {"PSP", {"grades", "failing", "exams"}},
        {"LSS", {"unemployed", "poverty", "homeless"}},
        {"IV", {"assault", "violence", "attacked"}},
        {"PSST", {"relapse", "previously", "scars"}},
        {"PSS", {"lonely", "isolated", "abandoned"}},
        {"ID", {"awkward", "friendless", "socializing"}},
        {"DF", {"parents", "abusive", "household"}},
        {"EOS", {"funeral", "bereaved", "memorial"}},
        {"SLE", {"breakup", "deadline", "eviction"}},
        {"TE", {"trauma", "flashbacks", "nightmares"}},
        {"CD", {"forgetful", "confused", "concentrate"}},
        {"SM", {"pills", "rope", "bridge"}},
        {"SORI", {"closeted", "gender", "identity"}},
        {"SS", {"supportive", "therapist", "listened"}},
        {"CS", {"journaling", "exercise", "breathing"}},
        {"PC", {"hopeful", "resilient", "optimistic"}},
        {"SR", {"responsibility", "children", "pets"}},
        {"ML", {"purpose", "meaning", "future"}},
    };
    return vocab;
}

const std::array<std::vector<std::string>, kNumLevels>& level_vocabularies() {
    static const std::array<std::vector<std::string>, kNumLevels> vocab = {{
        {"tired", "sad", "empty"},
        {"die", "disappear", "ending"},
        {"plan", "cutting", "goodbye"},
        {"overdosed", "attempted", "hospitalized"},
    }};
    return vocab;
}

const std::vector<std::string> kFiller = {"today", "really", "just",  "think", "feel",
                                          "know",  "going",  "time",  "day",   "week",
                                          "people", "work",  "night", "morning", "again"};

constexpr std::int64_t kBaseTimestamp = 1483228800;  // 2017-01-01T00:00:00Z

struct ForceProbabilities {
    double protective = 0.0;  // P(some effective protective factor emitted)
    double risk = 0.0;
};

ForceProbabilities emission_probabilities(const SyntheticConfig& config) {
    double none_p = 1.0;
    for (const auto& code : config.effective_protective_codes) {
        none_p *= 1.0 - config.factor_emission_rates[*FactorCatalog::factor_index(code)];
    }
    double none_r = 1.0;
    for (const auto& code : config.effective_risk_codes) {
        none_r *= 1.0 - config.factor_emission_rates[*FactorCatalog::factor_index(code)];
    }
    return {1.0 - none_p, 1.0 - none_r};
}

std::string make_post_id(const std::string& user_id, int index) {
    std::ostringstream os;
    os << user_id << "-p";
    os.width(3);
    os.fill('0');
    os << index;
    return os.str();
}

}  // namespace

std::array<double, kNumFactors> SyntheticConfig::default_emission_rates() {
    std::array<double, kNumFactors> rates{};
    rates.fill(0.06);
    for (auto code : {"SM", "PSST", "TE", "PH", "HL"}) rates[*FactorCatalog::factor_index(code)] = 0.08;
    for (std::size_t j = 0; j < kNumProtectiveFactors; ++j) rates[kNumRiskFactors + j] = 0.07;
    return rates;
}

void SyntheticConfig::validate() const {
    if (n_users < 1) throw std::invalid_argument("n_users must be >= 1");
    if (min_posts < 1 || max_posts < min_posts) throw std::invalid_argument("invalid posts-per-user range");
    double sum = 0.0;
    for (double p : level_marginals) {
        if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("level marginals must lie in [0,1]");
        sum += p;
    }
    if (std::abs(sum - 1.0) > 1e-9) throw std::invalid_argument("level marginals must sum to 1");
    auto check_rate = [](double p, const char* name) {
        if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument(std::string(name) + " must lie in [0,1]");
    };
    check_rate(protective_pull, "protective_pull");
    check_rate(risk_push, "risk_push");
    check_rate(level_cue_fidelity, "level_cue_fidelity");
    for (double r : factor_emission_rates) check_rate(r, "factor emission rate");
    for (const auto& code : effective_risk_codes) {
        if (!FactorCatalog::risk_index(code)) throw std::invalid_argument("unknown risk code " + code);
    }
    for (const auto& code : effective_protective_codes) {
        if (!FactorCatalog::protective_index(code)) {
            throw std::invalid_argument("unknown protective code " + code);
        }
    }
    check_rate(persistence, "persistence");
    if (level_cue_words < 0) throw std::invalid_argument("level_cue_words must be >= 0");
    if (!(interval_mean_days > 0.0)) throw std::invalid_argument("interval_mean_days must be positive");
}

std::string_view cause_name(TransitionCause cause) {
    switch (cause) {
        case TransitionCause::Protective: return "protective-effective";
        case TransitionCause::Risk: return "risk-effective";
        case TransitionCause::None: break;
    }
    return "none";
}

const std::vector<std::string>& factor_vocabulary(std::string_view code) {
    const auto& vocab = vocabularies();
    auto it = vocab.find(code);
    if (it == vocab.end()) throw std::invalid_argument("unknown factor code " + std::string(code));
    return it->second;
}

const std::vector<std::string>& level_vocabulary(RiskLevel level) {
    return level_vocabularies()[level_index(level)];
}

std::array<double, kNumLevels> unforced_distribution(const SyntheticConfig& config) {
    const auto emit = emission_probabilities(config);
    const double pc = emit.protective * config.protective_pull;
    const double rc = emit.risk * config.risk_push;
    const auto& pi = config.level_marginals;

    // Forcing at the boundary levels clamps, so the forced mass is level-independent.
    const double down = pc * (1.0 - rc) + 0.5 * pc * rc;
    const double up = rc * (1.0 - pc) + 0.5 * pc * rc;
    std::array<double, kNumLevels> forced_in{};
    for (int k = 0; k < kNumLevels; ++k) {
        forced_in[std::max(k - 1, 0)] += pi[k] * down;
        forced_in[std::min(k + 1, kNumLevels - 1)] += pi[k] * up;
    }
    // Unforced steps stay put with probability rho and otherwise jump to q, so
    // pi = forced_in + m * (rho * pi + (1 - rho) * q) with m the unforced mass.
    const double m = 1.0 - down - up;
    const double rho = config.persistence;
    if (m <= 0.0 || rho >= 1.0) return pi;
    std::array<double, kNumLevels> q{};
    double total = 0.0;
    for (int k = 0; k < kNumLevels; ++k) {
        q[k] = std::max(0.0, pi[k] - forced_in[k] - m * rho * pi[k]);
        total += q[k];
    }
    if (total <= 0.0) return pi;
    for (auto& v : q) v /= total;
    return q;
}

SyntheticCorpus generate_synthetic(const SyntheticConfig& config) {
    config.validate();
    const auto unforced = unforced_distribution(config);

    std::vector<std::size_t> effective_p, effective_r;
    for (const auto& c : config.effective_protective_codes) effective_p.push_back(*FactorCatalog::factor_index(c));
    for (const auto& c : config.effective_risk_codes) effective_r.push_back(*FactorCatalog::factor_index(c));
    auto is_in = [](const std::vector<std::size_t>& v, std::size_t x) {
        return std::find(v.begin(), v.end(), x) != v.end();
    };

    std::mt19937_64 rng(config.seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::uniform_int_distribution<int> post_count(config.min_posts, config.max_posts);
    std::exponential_distribution<double> interval(1.0 / config.interval_mean_days);
    std::discrete_distribution<int> marginal(config.level_marginals.begin(), config.level_marginals.end());
    std::discrete_distribution<int> free_step(unforced.begin(), unforced.end());
    auto pick = [&](const std::vector<std::string>& words) -> const std::string& {
        return words[std::uniform_int_distribution<std::size_t>(0, words.size() - 1)(rng)];
    };

    SyntheticCorpus corpus;
    corpus.users.reserve(static_cast<std::size_t>(config.n_users));
    for (int u = 0; u < config.n_users; ++u) {
        UserTimeline timeline;
        {
            std::ostringstream os;
            os << "u";
            os.width(4);
            os.fill('0');
            os << u;
            timeline.user_id = os.str();
        }
        const int n_posts = post_count(rng);
        std::int64_t timestamp =
            kBaseTimestamp + static_cast<std::int64_t>(unit(rng) * 365.0 * kSecondsPerDay);
        int level = config.initial_level ? level_index(*config.initial_level) : marginal(rng);

        for (int t = 0; t < n_posts; ++t) {
            Post post;
            post.user_id = timeline.user_id;
            post.post_id = make_post_id(timeline.user_id, t);
            post.timestamp = timestamp;
            post.risk_level = level_from_index(level);

            std::vector<std::size_t> emitted;
            for (std::size_t f = 0; f < kNumFactors; ++f) {
                if (unit(rng) < config.factor_emission_rates[f]) emitted.push_back(f);
            }

            std::vector<std::string> words;
            const int cue_level =
                unit(rng) < config.level_cue_fidelity
                    ? level
                    : std::uniform_int_distribution<int>(0, kNumLevels - 1)(rng);
            for (int i = 0; i < config.level_cue_words; ++i) words.push_back(pick(level_vocabulary(level_from_index(cue_level))));
            for (std::size_t f : emitted) {
                const auto code = FactorCatalog::factor_code(f);
                (f < kNumRiskFactors ? post.risk_factors : post.protective_factors).emplace_back(code);
                for (int i = 0; i < 2; ++i) words.push_back(pick(factor_vocabulary(code)));
            }
            const int n_filler = std::uniform_int_distribution<int>(3, 6)(rng);
            for (int i = 0; i < n_filler; ++i) words.push_back(pick(kFiller));
            std::shuffle(words.begin(), words.end(), rng);
            for (std::size_t i = 0; i < words.size(); ++i) {
                if (i) post.text += ' ';
                post.text += words[i];
            }
            timeline.posts.push_back(std::move(post));

            if (t + 1 == n_posts) break;

            std::vector<std::size_t> active_p, active_r;
            for (std::size_t f : emitted) {
                if (is_in(effective_p, f)) active_p.push_back(f);
                if (is_in(effective_r, f)) active_r.push_back(f);
            }
            const bool protective_fires = !active_p.empty() && unit(rng) < config.protective_pull;
            const bool risk_fires = !active_r.empty() && unit(rng) < config.risk_push;

            TransitionCause forced = TransitionCause::None;
            if (protective_fires && risk_fires) {
                forced = unit(rng) < 0.5 ? TransitionCause::Protective : TransitionCause::Risk;
            } else if (protective_fires) {
                forced = TransitionCause::Protective;
            } else if (risk_fires) {
                forced = TransitionCause::Risk;
            }

            TransitionTruth truth;
            truth.user_id = timeline.user_id;
            truth.post_id = make_post_id(timeline.user_id, t + 1);
            truth.from_level = level_from_index(level);
            int next = level;
            std::string trigger;
            if (forced == TransitionCause::Protective) {
                next = std::max(level - 1, 0);
                trigger = FactorCatalog::factor_code(
                    active_p[std::uniform_int_distribution<std::size_t>(0, active_p.size() - 1)(rng)]);
            } else if (forced == TransitionCause::Risk) {
                next = std::min(level + 1, kNumLevels - 1);
                trigger = FactorCatalog::factor_code(
                    active_r[std::uniform_int_distribution<std::size_t>(0, active_r.size() - 1)(rng)]);
            } else if (unit(rng) >= config.persistence) {
                next = free_step(rng);
            }
            // A clamped force (protective at IN, risk at AT) moved nothing and is not credited.
            if (next != level) {
                truth.cause = forced;
                truth.trigger_code = std::move(trigger);
            }
            truth.to_level = level_from_index(next);
            corpus.truth.push_back(std::move(truth));

            level = next;
            timestamp += std::max<std::int64_t>(1, std::llround(interval(rng) * kSecondsPerDay));
        }
        corpus.users.push_back(std::move(timeline));
    }
    return corpus;
}

void write_truth(std::ostream& out, const std::vector<TransitionTruth>& truth) {
    for (const auto& t : truth) {
        nlohmann::ordered_json record;
        record["user_id"] = t.user_id;
        record["post_id"] = t.post_id;
        record["from_level"] = std::string(level_code(t.from_level));
        record["to_level"] = std::string(level_code(t.to_level));
        record["cause"] = std::string(cause_name(t.cause));
        record["trigger_code"] = t.trigger_code;
        out << record.dump() << '\n';
    }
}

std::vector<TransitionTruth> read_truth(std::istream& in) {
    std::vector<TransitionTruth> truth;
    std::string line;
    std::size_t line_number = 0;
    while (std::getline(in, line)) {
        ++line_number;
        if (line.empty()) continue;
        try {
            auto record = nlohmann::json::parse(line);
            TransitionTruth t;
            t.user_id = record.at("user_id").get<std::string>();
            t.post_id = record.at("post_id").get<std::string>();
            auto from = parse_level(record.at("from_level").get<std::string>());
            auto to = parse_level(record.at("to_level").get<std::string>());
            if (!from || !to) throw ParseError(line_number, "unknown risk level");
            t.from_level = *from;
            t.to_level = *to;
            const auto cause = record.at("cause").get<std::string>();
            if (cause == cause_name(TransitionCause::Protective)) {
                t.cause = TransitionCause::Protective;
            } else if (cause == cause_name(TransitionCause::Risk)) {
                t.cause = TransitionCause::Risk;
            } else if (cause == cause_name(TransitionCause::None)) {
                t.cause = TransitionCause::None;
            } else {
                throw ParseError(line_number, "unknown cause \"" + cause + "\"");
            }
            t.trigger_code = record.at("trigger_code").get<std::string>();
            truth.push_back(std::move(t));
        } catch (const nlohmann::json::exception& e) {
            throw ParseError(line_number, e.what());
        }
    }
    return truth;
}

void save_truth(const std::filesystem::path& path, const std::vector<TransitionTruth>& truth) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    write_truth(out, truth);
}

std::vector<TransitionTruth> load_truth(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    return read_truth(in);
}

}  // namespace seqrisk
