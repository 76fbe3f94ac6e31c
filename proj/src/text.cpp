#include "geoevent/text.hpp"

#include <algorithm>
#include <cctype>
#include <iterator>

namespace geoevent {

namespace {

// Sorted for binary search.
constexpr std::string_view kStopWords[] = {
    "a",          "about",     "above",    "after",   "again",    "against", "all",
    "am",         "an",        "and",      "any",     "are",      "aren't",  "as",
    "at",         "be",        "because",  "been",    "before",   "being",   "below",
    "between",    "both",      "but",      "by",      "can",      "can't",   "cannot",
    "could",      "couldn't",  "did",      "didn't",  "do",       "does",    "doesn't",
    "doing",      "don't",     "down",     "during",  "each",     "few",     "for",
    "from",       "further",   "had",      "hadn't",  "has",      "hasn't",  "have",
    "haven't",    "having",    "he",       "he'd",    "he'll",    "he's",    "her",
    "here",       "here's",    "hers",     "herself", "him",      "himself", "his",
    "how",        "how's",     "i",        "i'd",     "i'll",     "i'm",     "i've",
    "if",         "in",        "into",     "is",      "isn't",    "it",      "it's",
    "its",        "itself",    "just",     "let's",   "me",       "more",    "most",
    "mustn't",    "my",        "myself",   "no",      "nor",      "not",     "now",
    "of",         "off",       "on",       "once",    "only",     "or",      "other",
    "ought",      "our",       "ours",     "ourselves", "out",    "over",    "own",
    "same",       "shan't",    "she",      "she'd",   "she'll",   "she's",   "should",
    "shouldn't",  "so",        "some",     "such",    "than",     "that",    "that's",
    "the",        "their",     "theirs",   "them",    "themselves", "then",  "there",
    "there's",    "these",     "they",     "they'd",  "they'll",  "they're", "they've",
    "this",       "those",     "through",  "to",      "too",      "under",   "until",
    "up",         "very",      "was",      "wasn't",  "we",       "we'd",    "we'll",
    "we're",      "we've",     "were",     "weren't", "what",     "what's",  "when",
    "when's",     "where",     "where's",  "which",   "while",    "who",     "who's",
    "whom",       "why",       "why's",    "will",    "with",     "won't",   "would",
    "wouldn't",   "you",       "you'd",    "you'll",  "you're",   "you've",  "your",
    "yours",      "yourself",  "yourselves"};

bool is_word_byte(unsigned char c) {
    return std::isalnum(c) != 0 || c == '_' || c == '\'' || c >= 0x80;
}

bool is_space(unsigned char c) { return std::isspace(c) != 0; }

}  // namespace

bool is_stop_word(std::string_view word) {
    return std::binary_search(std::begin(kStopWords), std::end(kStopWords), word);
}

std::span<const std::string_view> stop_words() { return kStopWords; }

std::string to_lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

std::vector<std::string> word_tokens(std::string_view text) {
    std::vector<std::string> out;
    std::size_t i = 0;
    while (i < text.size()) {
        while (i < text.size() && !is_word_byte(static_cast<unsigned char>(text[i]))) ++i;
        std::size_t j = i;
        while (j < text.size() && is_word_byte(static_cast<unsigned char>(text[j]))) ++j;
        if (j > i) {
            std::string_view w = text.substr(i, j - i);
            while (!w.empty() && w.front() == '\'') w.remove_prefix(1);
            while (!w.empty() && w.back() == '\'') w.remove_suffix(1);
            if (!w.empty()) out.push_back(to_lower(w));
        }
        i = j;
    }
    return out;
}

std::vector<std::string> extract_keywords(std::string_view text) {
    std::vector<std::string> out;
    std::string run;
    auto flush = [&] {
        if (!run.empty()) out.push_back(std::move(run));
        run.clear();
    };

    std::size_t i = 0;
    while (i < text.size()) {
        while (i < text.size() && is_space(static_cast<unsigned char>(text[i]))) ++i;
        std::size_t end = i;
        while (end < text.size() && !is_space(static_cast<unsigned char>(text[end]))) ++end;
        std::string_view token = text.substr(i, end - i);
        i = end;
        if (token.empty()) continue;

        std::size_t k = 0;
        while (k < token.size() && !is_word_byte(static_cast<unsigned char>(token[k])) &&
               token[k] != '#' && token[k] != '@') {
            ++k;
        }
        if (k > 0) flush();
        if (k == token.size()) continue;

        if (token[k] == '#' || token[k] == '@') {
            flush();
            std::size_t j = k + 1;
            while (j < token.size() && is_word_byte(static_cast<unsigned char>(token[j])) &&
                   token[j] != '\'') {
                ++j;
            }
            if (j > k + 1) out.push_back(to_lower(token.substr(k + 1, j - k - 1)));
            continue;
        }

        std::size_t j = k;
        while (j < token.size() && is_word_byte(static_cast<unsigned char>(token[j]))) ++j;
        std::string_view word = token.substr(k, j - k);
        while (!word.empty() && word.back() == '\'') word.remove_suffix(1);
        const std::string lower = to_lower(word);
        const bool capitalised = !word.empty() && std::isupper(static_cast<unsigned char>(word[0]));
        if (capitalised && !is_stop_word(lower)) {
            if (!run.empty()) run += ' ';
            run += lower;
        } else {
            flush();
        }
        if (j < token.size()) flush();
    }
    flush();
    return out;
}

}  // namespace geoevent
