#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <memory>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <Eigen/Core>

#include "seqrisk/corpus.hpp"

namespace seqrisk {

using EmbeddingVector = Eigen::VectorXd;

/// Maps a post to a fixed-dimension vector. Implementations are immutable
/// after construction and deterministic.
class EmbeddingProvider {
  public:
    virtual ~EmbeddingProvider() = default;
    virtual int dim() const = 0;
    virtual EmbeddingVector embed(const Post& post) const = 0;
    /// Provider selector as accepted by make_provider ("hash" or "file:<path>").
    virtual std::string describe() const = 0;
};

inline constexpr int kDefaultEmbeddingDim = 64;

/// Lowercased alphanumeric tokens; bytes >= 0x80 are kept inside tokens so
/// UTF-8 words are not split.
std::vector<std::string> tokenize(std::string_view text);

/// Signed feature hashing of the token bag, L2-normalized when nonzero.
EmbeddingVector hash_featurize(std::string_view text, int dim, std::uint64_t seed);

class HashFeaturizer final : public EmbeddingProvider {
  public:
    explicit HashFeaturizer(int dim = kDefaultEmbeddingDim, std::uint64_t seed = 0);

    int dim() const override { return dim_; }
    EmbeddingVector embed(const Post& post) const override { return hash_featurize(post.text, dim_, seed_); }
    std::string describe() const override { return "hash"; }

  private:
    int dim_;
    std::uint64_t seed_;
};

/// Vectors keyed by post_id, one record per line: `post_id v1 v2 ... vd`.
class PrecomputedEmbeddings final : public EmbeddingProvider {
  public:
    static PrecomputedEmbeddings read(std::istream& in, const std::vector<std::string>& expected_ids = {});
    static PrecomputedEmbeddings load(const std::filesystem::path& path,
                                      const std::vector<std::string>& expected_ids = {});

    int dim() const override { return dim_; }
    EmbeddingVector embed(const Post& post) const override { return lookup(post.post_id); }
    std::string describe() const override { return "file:" + source_; }

    /// Throws LookupError naming the id when absent.
    const EmbeddingVector& lookup(const std::string& post_id) const;
    std::size_t size() const { return vectors_.size(); }

  private:
    int dim_ = 0;
    std::string source_;
    std::unordered_map<std::string, EmbeddingVector> vectors_;
};

/// Builds a provider from a selector: "hash" or "file:<path>".
std::unique_ptr<EmbeddingProvider> make_provider(std::string_view selector,
                                                 int hash_dim = kDefaultEmbeddingDim,
                                                 std::uint64_t hash_seed = 0);

}  // namespace seqrisk
