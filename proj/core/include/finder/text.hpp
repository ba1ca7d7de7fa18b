#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace finder::text {

/// True if the bytes form well-formed UTF-8 (rejects overlong encodings,
/// surrogates and out-of-range code points).
bool utf8_valid(std::string_view bytes);

/// Largest position <= pos that does not fall inside a multi-byte sequence.
std::size_t utf8_floor(std::string_view s, std::size_t pos);

/// Smallest position >= pos that does not fall inside a multi-byte sequence.
std::size_t utf8_ceil(std::string_view s, std::size_t pos);

/// Document body normalization: line endings unified to '\n', control
/// characters dropped (tabs become spaces), whitespace runs inside a line
/// collapsed to a single space, lines trimmed, blank lines removed so a
/// paragraph break is exactly one newline. A trailing newline in the input
/// survives as a trailing newline in the output.
std::string normalize_body(std::string_view raw);

/// Strips tags from HTML, turning block elements into paragraph breaks and
/// decoding common entities. Script/style bodies and comments are dropped.
std::string strip_html(std::string_view html);

/// Heuristic used at ingest time: .html/.htm extension, or an obvious HTML
/// preamble in the first bytes.
bool looks_like_html(std::string_view raw, std::string_view source_path);

std::string lowercase_ascii(std::string_view s);

/// Collapses whitespace runs to single spaces and trims both ends.
std::string collapse_whitespace(std::string_view s);

/// Case-insensitive (ASCII) substring test.
bool contains_ci(std::string_view haystack, std::string_view needle);

/// Lowercased tokens: maximal runs of ASCII alphanumerics or non-ASCII bytes.
std::vector<std::string> tokenize(std::string_view s);

/// lowercase + collapse whitespace + strip ASCII punctuation at both ends.
/// This is the normal form used when comparing predicted and gold answers.
std::string normalize_for_match(std::string_view s);

struct CharRange {
    std::size_t begin = 0;
    std::size_t end = 0;  // exclusive
};

/// Deterministic rule-based sentence segmentation. A sentence ends at
/// '.', '!' or '?' followed by whitespace and an uppercase letter or digit,
/// unless the token ending at the period is on the abbreviation stop-list
/// ("mm.", "e.g.", "i.e.", ...). Newlines always end a sentence. Returned
/// ranges are trimmed of surrounding whitespace, non-overlapping and ordered.
std::vector<CharRange> sentence_ranges(std::string_view body);

/// Start offsets of sentences, used by the chunker to prefer sentence cuts.
std::vector<std::size_t> sentence_starts(std::string_view body);

}  // namespace finder::text
