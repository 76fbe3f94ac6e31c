#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <Eigen/Core>

namespace geoevent {

/// Static word-vector table loaded from the "N d" text format.
class VectorTable {
public:
    VectorTable() = default;
    explicit VectorTable(int dimension);

    int dimension() const { return dimension_; }
    std::size_t size() const { return index_.size(); }

    /// Adds or replaces `token` (lowercased by the caller). Throws
    /// DimensionError on a length mismatch.
    void insert(const std::string& token, const Eigen::VectorXd& vector);

    /// The stored row, or the character n-gram estimate when subword
    /// fallback is enabled and the token is unknown.
    std::optional<Eigen::VectorXd> lookup(std::string_view token) const;
    bool contains(std::string_view token) const;

    /// Enables the out-of-vocabulary fallback: a missing word maps to the mean
    /// of hashed n-gram buckets (n = 3..6 over "<word>") populated from the
    /// vocabulary.
    void enable_subwords(std::size_t buckets = 1 << 16);
    bool subwords_enabled() const { return !bucket_count_.empty(); }

private:
    int dimension_ = 0;
    std::unordered_map<std::string, Eigen::Index> index_;
    Eigen::MatrixXd rows_;  // d x capacity
    Eigen::Index used_ = 0;
    Eigen::MatrixXd buckets_;
    std::vector<int> bucket_count_;
};

/// Character n-gram bucket ids of `word` as used by the subword fallback.
std::vector<std::size_t> subword_buckets(std::string_view word, std::size_t buckets);

/// Reads the text format: header "N d", then N lines "token f_1 ... f_d".
/// Throws LoadError naming the line number on malformed input and IoError
/// when the file cannot be opened.
VectorTable load_vectors(const std::filesystem::path& path);
void write_vectors(const std::filesystem::path& path,
                   const std::vector<std::pair<std::string, Eigen::VectorXd>>& rows);

struct TweetVector {
    std::string tweet_id;
    Eigen::VectorXd vector;
    int keyword_count = 0;  // keywords that resolved in the table
};

/// Mean of the resolvable keyword vectors; a multi-word keyword contributes
/// the mean of its resolvable words. Empty when nothing resolves.
std::optional<TweetVector> embed_keywords(const std::vector<std::string>& keywords,
                                          const VectorTable& table);

/// Mean over the non-stop-word tokens of `text` that resolve in the table.
std::optional<TweetVector> embed_text(std::string_view text, const VectorTable& table);

}  // namespace geoevent
