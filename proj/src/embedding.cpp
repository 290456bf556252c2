#include "seqrisk/embedding.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "seqrisk/errors.hpp"

namespace seqrisk {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

std::uint64_t token_hash(std::string_view token, std::uint64_t seed) {
    std::uint64_t h = 0xcbf29ce484222325ULL ^ splitmix64(seed);  // FNV-1a
    for (unsigned char ch : token) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    return splitmix64(h);
}

bool is_token_byte(unsigned char ch) {
    return (ch >= '0' && ch <= '9') || (ch >= 'a' && ch <= 'z') || (ch >= 'A' && ch <= 'Z') || ch >= 0x80;
}

}  // namespace

std::vector<std::string> tokenize(std::string_view text) {
    std::vector<std::string> tokens;
    std::string current;
    for (unsigned char ch : text) {
        if (is_token_byte(ch)) {
            current.push_back(ch >= 'A' && ch <= 'Z' ? static_cast<char>(ch - 'A' + 'a') : static_cast<char>(ch));
        } else if (!current.empty()) {
            tokens.push_back(std::move(current));
            current.clear();
        }
    }
    if (!current.empty()) tokens.push_back(std::move(current));
    return tokens;
}

EmbeddingVector hash_featurize(std::string_view text, int dim, std::uint64_t seed) {
    if (dim < 8) throw std::invalid_argument("hash embedding dimension must be >= 8");
    EmbeddingVector v = EmbeddingVector::Zero(dim);
    for (const auto& token : tokenize(text)) {
        const auto h = token_hash(token, seed);
        const auto index = static_cast<Eigen::Index>(h % static_cast<std::uint64_t>(dim));
        v[index] += (h >> 63) ? -1.0 : 1.0;
    }
    const double norm = v.norm();
    if (norm > 0.0) v /= norm;
    return v;
}

HashFeaturizer::HashFeaturizer(int dim, std::uint64_t seed) : dim_(dim), seed_(seed) {
    if (dim < 8) throw std::invalid_argument("hash embedding dimension must be >= 8");
}

PrecomputedEmbeddings PrecomputedEmbeddings::read(std::istream& in, const std::vector<std::string>& expected_ids) {
    PrecomputedEmbeddings out;
    std::string line;
    std::size_t line_number = 0;
    while (std::getline(in, line)) {
        ++line_number;
        std::istringstream fields(line);
        std::string id;
        if (!(fields >> id)) continue;
        std::vector<double> values;
        std::string token;
        while (fields >> token) {
            try {
                std::size_t used = 0;
                double x = std::stod(token, &used);
                if (used != token.size() || !std::isfinite(x)) throw std::invalid_argument(token);
                values.push_back(x);
            } catch (const std::exception&) {
                throw ParseError(line_number, "bad vector component \"" + token + "\"");
            }
        }
        if (values.empty()) throw FormatError("line " + std::to_string(line_number) + ": empty vector for " + id);
        if (out.dim_ == 0) out.dim_ = static_cast<int>(values.size());
        if (static_cast<int>(values.size()) != out.dim_) {
            throw FormatError("line " + std::to_string(line_number) + ": dimension " +
                              std::to_string(values.size()) + " differs from " + std::to_string(out.dim_));
        }
        if (out.vectors_.count(id)) throw FormatError("duplicate vector id \"" + id + "\"");
        out.vectors_.emplace(id, Eigen::Map<EmbeddingVector>(values.data(), out.dim_));
    }
    for (const auto& id : expected_ids) out.lookup(id);
    return out;
}

PrecomputedEmbeddings PrecomputedEmbeddings::load(const std::filesystem::path& path,
                                                  const std::vector<std::string>& expected_ids) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open embedding file " + path.string());
    auto out = read(in, expected_ids);
    out.source_ = path.string();
    return out;
}

const EmbeddingVector& PrecomputedEmbeddings::lookup(const std::string& post_id) const {
    auto it = vectors_.find(post_id);
    if (it == vectors_.end()) throw LookupError("no precomputed embedding for post id \"" + post_id + "\"");
    return it->second;
}

std::unique_ptr<EmbeddingProvider> make_provider(std::string_view selector, int hash_dim, std::uint64_t hash_seed) {
    if (selector == "hash") return std::make_unique<HashFeaturizer>(hash_dim, hash_seed);
    constexpr std::string_view prefix = "file:";
    if (selector.substr(0, prefix.size()) == prefix) {
        return std::make_unique<PrecomputedEmbeddings>(
            PrecomputedEmbeddings::load(std::string(selector.substr(prefix.size()))));
    }
    throw std::invalid_argument("unknown embedder \"" + std::string(selector) + "\" (expected hash or file:<path>)");
}

}  // namespace seqrisk
