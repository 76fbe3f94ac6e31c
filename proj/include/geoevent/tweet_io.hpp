#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "geoevent/types.hpp"
#include "json.hpp"

namespace geoevent {

/// Collects `marker`-prefixed tokens ('#' or '@') from `text`, lowercased,
/// one entry per occurrence. A marker only starts a token at the beginning
/// of the text or after a non-word character.
std::vector<std::string> scan_markers(std::string_view text, char marker);

/// Builds a Tweet from one JSONL record with keys id, ts, lat, lon, text and
/// optional images. Throws ParseError naming a missing or mistyped field and
/// RangeError for out-of-bounds coordinates.
Tweet parse_tweet(const nlohmann::json& record);
Tweet parse_tweet_line(std::string_view line);

nlohmann::json serialize_tweet(const Tweet& tweet);

/// Reads a JSONL stream; blank lines are skipped. Output is sorted by
/// timestamp (stable, so ties keep file order).
std::vector<Tweet> read_tweets(const std::filesystem::path& path);
void write_tweets(const std::filesystem::path& path, const std::vector<Tweet>& tweets);

/// Buckets timestamp-ordered tweets into consecutive [start, start+length)
/// windows beginning at `origin`. Window ids start at 0; empty windows are
/// kept so ids stay consecutive. Tweets before `origin` are dropped.
std::vector<StreamWindow> split_windows(const std::vector<Tweet>& tweets, Timestamp origin,
                                        Timestamp length);

/// Tweets with timestamp in [start, end), assuming timestamp order.
std::vector<Tweet> tweets_between(const std::vector<Tweet>& tweets, Timestamp start,
                                  Timestamp end);

}  // namespace geoevent
