#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace geoevent {

/// True for entries of the built-in English stop-word list (lowercase input).
bool is_stop_word(std::string_view word);

/// The built-in stop-word list, sorted.
std::span<const std::string_view> stop_words();

std::string to_lower(std::string_view s);

/// Lowercased word tokens of `text`. Words are maximal runs of letters,
/// digits, '_', '\'' and non-ASCII bytes; '#'/'@' markers are dropped.
std::vector<std::string> word_tokens(std::string_view text);

/// Hashtags, mentions and maximal runs of consecutive capitalised words that
/// are not stop words, lowercased, in text order, duplicates kept.
/// Punctuation after a word ends the current run.
std::vector<std::string> extract_keywords(std::string_view text);

}  // namespace geoevent
