#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace circamood {

/// Splits message text into lowercase a-z tokens.
///
/// URLs (http:// or https:// up to the next whitespace) and @-mentions are
/// removed first, hashtags keep their word, and every character outside a-z
/// (after ASCII lowercasing) separates tokens. Apostrophes split words, so
/// "I'm" yields "i" and "m". Non-Latin text yields no tokens.
[[nodiscard]] std::vector<std::string> tokenize(std::string_view text);

/// Calls fn(std::string_view) for each token without allocating a vector.
template <typename Fn>
void for_each_token(std::string_view text, Fn&& fn);

/// Porter (1980) stemmer, matching the reference C implementation's output
/// on the published sample vocabulary. Input must be lowercase a-z; words
/// of one or two letters are returned unchanged.
[[nodiscard]] std::string porter_stem(std::string_view word);

namespace detail {

[[nodiscard]] std::string strip_urls_and_mentions(std::string_view text);

[[nodiscard]] constexpr char ascii_lower(char c) noexcept {
    return (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : c;
}

}  // namespace detail

template <typename Fn>
void for_each_token(std::string_view text, Fn&& fn) {
    const std::string cleaned = detail::strip_urls_and_mentions(text);
    std::string token;
    for (const char raw : cleaned) {
        const char c = detail::ascii_lower(raw);
        if (c >= 'a' && c <= 'z') {
            token.push_back(c);
        } else if (!token.empty()) {
            fn(std::string_view{token});
            token.clear();
        }
    }
    if (!token.empty()) {
        fn(std::string_view{token});
    }
}

}  // namespace circamood
