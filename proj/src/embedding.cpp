#include "geoevent/embedding.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "geoevent/seed.hpp"
#include "geoevent/text.hpp"
#include "geoevent/types.hpp"

namespace geoevent {

VectorTable::VectorTable(int dimension) : dimension_(dimension) {
    if (dimension <= 0) throw DimensionError("vector dimension must be positive");
}

void VectorTable::insert(const std::string& token, const Eigen::VectorXd& vector) {
    if (vector.size() != dimension_) {
        throw DimensionError("vector for '" + token + "' has dimension " +
                             std::to_string(vector.size()) + ", expected " +
                             std::to_string(dimension_));
    }
    if (auto it = index_.find(token); it != index_.end()) {
        rows_.col(it->second) = vector;
        return;
    }
    if (used_ == rows_.cols()) rows_.conservativeResize(dimension_, std::max<Eigen::Index>(16, 2 * used_));
    rows_.col(used_) = vector;
    index_.emplace(token, used_++);
}

bool VectorTable::contains(std::string_view token) const {
    return index_.find(std::string(token)) != index_.end();
}

std::optional<Eigen::VectorXd> VectorTable::lookup(std::string_view token) const {
    if (auto it = index_.find(std::string(token)); it != index_.end()) {
        return Eigen::VectorXd(rows_.col(it->second));
    }
    if (bucket_count_.empty()) return std::nullopt;
    Eigen::VectorXd sum = Eigen::VectorXd::Zero(dimension_);
    int hits = 0;
    for (std::size_t b : subword_buckets(token, bucket_count_.size())) {
        if (bucket_count_[b] == 0) continue;
        sum += buckets_.col(static_cast<Eigen::Index>(b));
        ++hits;
    }
    if (hits == 0) return std::nullopt;
    return Eigen::VectorXd(sum / hits);
}

void VectorTable::enable_subwords(std::size_t buckets) {
    buckets_ = Eigen::MatrixXd::Zero(dimension_, static_cast<Eigen::Index>(buckets));
    bucket_count_.assign(buckets, 0);
    for (const auto& [token, col] : index_) {
        for (std::size_t b : subword_buckets(token, buckets)) {
            buckets_.col(static_cast<Eigen::Index>(b)) += rows_.col(col);
            ++bucket_count_[b];
        }
    }
    for (std::size_t b = 0; b < buckets; ++b) {
        if (bucket_count_[b] > 0) buckets_.col(static_cast<Eigen::Index>(b)) /= bucket_count_[b];
    }
}

std::vector<std::size_t> subword_buckets(std::string_view word, std::size_t buckets) {
    const std::string padded = "<" + std::string(word) + ">";
    std::vector<std::size_t> out;
    for (std::size_t n = 3; n <= 6; ++n) {
        for (std::size_t i = 0; i + n <= padded.size(); ++i) {
            out.push_back(fnv1a(std::string_view(padded).substr(i, n)) % buckets);
        }
    }
    return out;
}

namespace {

bool parse_double(std::string_view s, double& out) {
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    return ec == std::errc() && ptr == s.data() + s.size();
}

std::vector<std::string_view> split_spaces(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t i = 0;
    while (i < line.size()) {
        while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
        std::size_t j = i;
        while (j < line.size() && line[j] != ' ' && line[j] != '\t' && line[j] != '\r') ++j;
        if (j > i) out.push_back(line.substr(i, j - i));
        i = j;
    }
    return out;
}

LoadError load_error(const std::filesystem::path& path, std::size_t line, const std::string& what) {
    return LoadError(path.string() + ":" + std::to_string(line) + ": " + what);
}

}  // namespace

VectorTable load_vectors(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open vector file " + path.string());
    std::string line;
    if (!std::getline(in, line)) throw load_error(path, 1, "missing header");
    const auto header = split_spaces(line);
    long long n = 0, d = 0;
    if (header.size() != 2 ||
        std::from_chars(header[0].data(), header[0].data() + header[0].size(), n).ec != std::errc() ||
        std::from_chars(header[1].data(), header[1].data() + header[1].size(), d).ec != std::errc() ||
        n < 0 || d <= 0) {
        throw load_error(path, 1, "header must be \"N d\"");
    }
    VectorTable table(static_cast<int>(d));
    Eigen::VectorXd row(d);
    std::size_t line_no = 1;
    long long read = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto fields = split_spaces(line);
        if (fields.empty()) continue;
        if (static_cast<long long>(fields.size()) != d + 1) {
            throw load_error(path, line_no,
                             "expected token and " + std::to_string(d) + " values, found " +
                                 std::to_string(fields.size() - 1));
        }
        for (long long k = 0; k < d; ++k) {
            if (!parse_double(fields[k + 1], row[k])) {
                throw load_error(path, line_no, "bad number '" + std::string(fields[k + 1]) + "'");
            }
        }
        table.insert(to_lower(fields[0]), row);
        ++read;
    }
    if (read != n) {
        throw load_error(path, line_no,
                         "header declares " + std::to_string(n) + " rows, found " +
                             std::to_string(read));
    }
    return table;
}

void write_vectors(const std::filesystem::path& path,
                   const std::vector<std::pair<std::string, Eigen::VectorXd>>& rows) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write vector file " + path.string());
    const Eigen::Index d = rows.empty() ? 1 : rows.front().second.size();
    out << rows.size() << ' ' << d << '\n';
    char buf[32];
    for (const auto& [token, v] : rows) {
        out << token;
        for (Eigen::Index k = 0; k < v.size(); ++k) {
            const auto res = std::to_chars(buf, buf + sizeof buf, v[k]);
            out << ' ' << std::string_view(buf, static_cast<std::size_t>(res.ptr - buf));
        }
        out << '\n';
    }
    if (!out) throw IoError("failed writing vector file " + path.string());
}

namespace {

std::optional<Eigen::VectorXd> keyword_vector(const std::string& keyword, const VectorTable& table) {
    if (keyword.find(' ') == std::string::npos) return table.lookup(keyword);
    Eigen::VectorXd sum = Eigen::VectorXd::Zero(table.dimension());
    int hits = 0;
    std::istringstream words(keyword);
    std::string w;
    while (words >> w) {
        if (auto v = table.lookup(w)) {
            sum += *v;
            ++hits;
        }
    }
    if (hits == 0) return std::nullopt;
    return Eigen::VectorXd(sum / hits);
}

}  // namespace

std::optional<TweetVector> embed_keywords(const std::vector<std::string>& keywords,
                                          const VectorTable& table) {
    TweetVector out;
    out.vector = Eigen::VectorXd::Zero(table.dimension());
    for (const auto& k : keywords) {
        if (auto v = keyword_vector(k, table)) {
            out.vector += *v;
            ++out.keyword_count;
        }
    }
    if (out.keyword_count == 0) return std::nullopt;
    out.vector /= out.keyword_count;
    return out;
}

std::optional<TweetVector> embed_text(std::string_view text, const VectorTable& table) {
    TweetVector out;
    out.vector = Eigen::VectorXd::Zero(table.dimension());
    for (const auto& w : word_tokens(text)) {
        if (is_stop_word(w)) continue;
        if (auto v = table.lookup(w)) {
            out.vector += *v;
            ++out.keyword_count;
        }
    }
    if (out.keyword_count == 0) return std::nullopt;
    out.vector /= out.keyword_count;
    return out;
}

}  // namespace geoevent
