#include "geoevent/types.hpp"

#include <algorithm>

namespace geoevent {

SlidingWindows::SlidingWindows(std::size_t capacity) : capacity_(capacity) {
    if (capacity_ == 0) throw ConfigError("sliding window capacity must be positive");
}

void SlidingWindows::advance(StreamWindow window) {
    if (!windows_.empty() && window.window_id != windows_.back().window_id + 1) {
        throw SequenceError("window " + std::to_string(window.window_id) +
                            " does not follow window " +
                            std::to_string(windows_.back().window_id));
    }
    windows_.push_back(std::move(window));
    while (windows_.size() > capacity_) windows_.pop_front();
}

std::vector<Tweet> SlidingWindows::tweets() const {
    std::vector<Tweet> out;
    for (const auto& w : windows_) out.insert(out.end(), w.tweets.begin(), w.tweets.end());
    std::stable_sort(out.begin(), out.end(), [](const Tweet& a, const Tweet& b) {
        return a.timestamp < b.timestamp;
    });
    return out;
}

SlidingWindows advance(SlidingWindows sliding, StreamWindow window) {
    sliding.advance(std::move(window));
    return sliding;
}

}  // namespace geoevent
