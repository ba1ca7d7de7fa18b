#include "finder/text.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cstdint>
#include <set>
#include <unordered_map>

namespace finder::text {

namespace {

bool is_space(char c) {
    return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

bool is_upper_or_digit(char c) {
    return (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9');
}

char to_lower(char c) {
    return (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : c;
}

// Abbreviations whose trailing period never ends a sentence. Tokens are
// compared lowercased, including the period.
const std::set<std::string>& abbreviation_stoplist() {
    static const std::set<std::string> stoplist = {
        "mm.", "cm.", "m.", "e.g.", "i.e.", "etc.", "cf.", "vs.", "approx.",
        "fig.", "figs.", "no.", "nos.", "sp.", "spp.", "dr.", "mr.", "mrs.",
        "ms.", "prof.", "st.",
    };
    return stoplist;
}

}  // namespace

bool utf8_valid(std::string_view bytes) {
    std::size_t i = 0;
    const std::size_t n = bytes.size();
    while (i < n) {
        unsigned char c = static_cast<unsigned char>(bytes[i]);
        std::size_t len;
        std::uint32_t cp;
        if (c < 0x80) {
            ++i;
            continue;
        } else if ((c & 0xE0) == 0xC0) {
            len = 2;
            cp = c & 0x1F;
        } else if ((c & 0xF0) == 0xE0) {
            len = 3;
            cp = c & 0x0F;
        } else if ((c & 0xF8) == 0xF0) {
            len = 4;
            cp = c & 0x07;
        } else {
            return false;
        }
        if (i + len > n) return false;
        for (std::size_t k = 1; k < len; ++k) {
            unsigned char cc = static_cast<unsigned char>(bytes[i + k]);
            if ((cc & 0xC0) != 0x80) return false;
            cp = (cp << 6) | (cc & 0x3F);
        }
        // Overlong, surrogate and out-of-range checks.
        if (len == 2 && cp < 0x80) return false;
        if (len == 3 && cp < 0x800) return false;
        if (len == 4 && cp < 0x10000) return false;
        if (cp >= 0xD800 && cp <= 0xDFFF) return false;
        if (cp > 0x10FFFF) return false;
        i += len;
    }
    return true;
}

std::size_t utf8_floor(std::string_view s, std::size_t pos) {
    if (pos >= s.size()) return s.size();
    while (pos > 0 && (static_cast<unsigned char>(s[pos]) & 0xC0) == 0x80) --pos;
    return pos;
}

std::size_t utf8_ceil(std::string_view s, std::size_t pos) {
    while (pos < s.size() && (static_cast<unsigned char>(s[pos]) & 0xC0) == 0x80) ++pos;
    return pos;
}

std::string normalize_body(std::string_view raw) {
    // Pass 1: unify line endings, drop controls, tabs to spaces.
    std::string unified;
    unified.reserve(raw.size());
    for (std::size_t i = 0; i < raw.size(); ++i) {
        char c = raw[i];
        if (c == '\r') {
            if (i + 1 < raw.size() && raw[i + 1] == '\n') ++i;
            unified.push_back('\n');
        } else if (c == '\t') {
            unified.push_back(' ');
        } else if (static_cast<unsigned char>(c) < 0x20 && c != '\n') {
            // dropped
        } else if (static_cast<unsigned char>(c) == 0x7F) {
            // dropped
        } else {
            unified.push_back(c);
        }
    }

    const bool had_trailing_newline = !unified.empty() && unified.back() == '\n';

    // Pass 2: per line, collapse space runs and trim; drop blank lines so a
    // paragraph break is exactly one '\n'.
    std::string out;
    out.reserve(unified.size());
    std::size_t start = 0;
    while (start <= unified.size()) {
        std::size_t nl = unified.find('\n', start);
        std::string_view line = (nl == std::string_view::npos)
                                    ? std::string_view(unified).substr(start)
                                    : std::string_view(unified).substr(start, nl - start);
        std::string collapsed = collapse_whitespace(line);
        if (!collapsed.empty()) {
            if (!out.empty()) out.push_back('\n');
            out += collapsed;
        }
        if (nl == std::string_view::npos) break;
        start = nl + 1;
    }

    if (!out.empty() && had_trailing_newline) out.push_back('\n');
    return out;
}

namespace {

const std::set<std::string>& block_tags() {
    static const std::set<std::string> tags = {
        "p",  "div", "br",  "li", "ul", "ol", "h1", "h2",      "h3",
        "h4", "h5",  "h6",  "tr", "td", "th", "table",         "blockquote",
        "section",   "article",   "header",  "footer", "nav",  "figure",
        "figcaption", "pre", "hr", "dt", "dd", "dl",
    };
    return tags;
}

std::string decode_entities(std::string_view s) {
    static const std::unordered_map<std::string, std::string> named = {
        {"amp", "&"},  {"lt", "<"},    {"gt", ">"},   {"quot", "\""},
        {"apos", "'"}, {"nbsp", " "},  {"ndash", "\xE2\x80\x93"},
        {"mdash", "\xE2\x80\x94"},     {"hellip", "\xE2\x80\xA6"},
    };
    std::string out;
    out.reserve(s.size());
    std::size_t i = 0;
    while (i < s.size()) {
        if (s[i] != '&') {
            out.push_back(s[i++]);
            continue;
        }
        std::size_t semi = s.find(';', i + 1);
        if (semi == std::string_view::npos || semi - i > 10) {
            out.push_back(s[i++]);
            continue;
        }
        std::string_view name = s.substr(i + 1, semi - i - 1);
        if (!name.empty() && name[0] == '#') {
            // numeric reference; decode to UTF-8
            std::uint32_t cp = 0;
            bool ok = name.size() > 1;
            if (ok && (name[1] == 'x' || name[1] == 'X')) {
                for (std::size_t k = 2; k < name.size() && ok; ++k) {
                    char c = to_lower(name[k]);
                    if (c >= '0' && c <= '9') cp = cp * 16 + (c - '0');
                    else if (c >= 'a' && c <= 'f') cp = cp * 16 + (c - 'a' + 10);
                    else ok = false;
                }
                ok = ok && name.size() > 2;
            } else {
                for (std::size_t k = 1; k < name.size() && ok; ++k) {
                    if (name[k] >= '0' && name[k] <= '9') cp = cp * 10 + (name[k] - '0');
                    else ok = false;
                }
            }
            if (ok && cp > 0 && cp <= 0x10FFFF && !(cp >= 0xD800 && cp <= 0xDFFF)) {
                if (cp < 0x80) {
                    out.push_back(static_cast<char>(cp));
                } else if (cp < 0x800) {
                    out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
                    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
                } else if (cp < 0x10000) {
                    out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
                    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
                    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
                } else {
                    out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
                    out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
                    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
                    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
                }
                i = semi + 1;
                continue;
            }
            out.push_back(s[i++]);
            continue;
        }
        auto it = named.find(lowercase_ascii(name));
        if (it != named.end()) {
            out += it->second;
            i = semi + 1;
        } else {
            out.push_back(s[i++]);
        }
    }
    return out;
}

}  // namespace

std::string strip_html(std::string_view html) {
    std::string out;
    out.reserve(html.size());
    std::size_t i = 0;
    const std::size_t n = html.size();
    while (i < n) {
        if (html[i] != '<') {
            out.push_back(html[i++]);
            continue;
        }
        if (html.substr(i, 4) == "<!--") {
            std::size_t end = html.find("-->", i + 4);
            i = (end == std::string_view::npos) ? n : end + 3;
            continue;
        }
        std::size_t close = html.find('>', i + 1);
        if (close == std::string_view::npos) {
            out.push_back(html[i++]);  // stray '<'
            continue;
        }
        std::string_view tag = html.substr(i + 1, close - i - 1);
        bool closing = !tag.empty() && tag[0] == '/';
        if (closing) tag.remove_prefix(1);
        std::size_t name_end = 0;
        while (name_end < tag.size() && (std::isalnum(static_cast<unsigned char>(tag[name_end])) != 0)) {
            ++name_end;
        }
        std::string name = lowercase_ascii(tag.substr(0, name_end));
        if (!closing && (name == "script" || name == "style")) {
            std::string end_tag = "</" + name;
            std::size_t body_end = lowercase_ascii(html.substr(close + 1)).find(end_tag);
            if (body_end == std::string::npos) {
                i = n;
            } else {
                std::size_t after = html.find('>', close + 1 + body_end);
                i = (after == std::string_view::npos) ? n : after + 1;
            }
            continue;
        }
        if (block_tags().count(name) > 0) out.push_back('\n');
        i = close + 1;
    }
    return decode_entities(out);
}

bool looks_like_html(std::string_view raw, std::string_view source_path) {
    auto ends_with = [](std::string_view s, std::string_view suffix) {
        return s.size() >= suffix.size() &&
               lowercase_ascii(s.substr(s.size() - suffix.size())) == suffix;
    };
    if (ends_with(source_path, ".html") || ends_with(source_path, ".htm")) return true;
    std::string head = lowercase_ascii(raw.substr(0, std::min<std::size_t>(raw.size(), 256)));
    return head.find("<!doctype html") != std::string::npos || head.find("<html") != std::string::npos;
}

std::string lowercase_ascii(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(), to_lower);
    return out;
}

std::string collapse_whitespace(std::string_view s) {
    std::string out;
    out.reserve(s.size());
    bool in_space = true;  // trims leading whitespace
    for (char c : s) {
        if (is_space(c)) {
            in_space = true;
        } else {
            if (in_space && !out.empty()) out.push_back(' ');
            out.push_back(c);
            in_space = false;
        }
    }
    return out;
}

bool contains_ci(std::string_view haystack, std::string_view needle) {
    if (needle.empty()) return true;
    if (needle.size() > haystack.size()) return false;
    for (std::size_t i = 0; i + needle.size() <= haystack.size(); ++i) {
        bool match = true;
        for (std::size_t k = 0; k < needle.size(); ++k) {
            if (to_lower(haystack[i + k]) != to_lower(needle[k])) {
                match = false;
                break;
            }
        }
        if (match) return true;
    }
    return false;
}

std::vector<std::string> tokenize(std::string_view s) {
    std::vector<std::string> tokens;
    std::string current;
    auto is_token_char = [](char c) {
        unsigned char u = static_cast<unsigned char>(c);
        return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') ||
               (c >= '0' && c <= '9') || u >= 0x80;
    };
    for (char c : s) {
        if (is_token_char(c)) {
            current.push_back(to_lower(c));
        } else if (!current.empty()) {
            tokens.push_back(std::move(current));
            current.clear();
        }
    }
    if (!current.empty()) tokens.push_back(std::move(current));
    return tokens;
}

std::string normalize_for_match(std::string_view s) {
    std::string collapsed = collapse_whitespace(lowercase_ascii(s));
    std::size_t b = 0;
    std::size_t e = collapsed.size();
    auto is_edge_punct = [](char c) {
        return std::ispunct(static_cast<unsigned char>(c)) != 0;
    };
    while (b < e && is_edge_punct(collapsed[b])) ++b;
    while (e > b && is_edge_punct(collapsed[e - 1])) --e;
    return collapse_whitespace(collapsed.substr(b, e - b));
}

namespace {

// Shared scanner: emits [begin, end) sentence ranges, trimmed.
std::vector<CharRange> scan_sentences(std::string_view body) {
    std::vector<CharRange> ranges;
    const std::size_t n = body.size();
    std::size_t i = 0;
    while (i < n) {
        while (i < n && is_space(body[i])) ++i;
        if (i >= n) break;
        std::size_t start = i;
        std::size_t end = n;
        for (std::size_t j = i; j < n; ++j) {
            char c = body[j];
            if (c == '\n') {
                end = j;
                break;
            }
            if (c != '.' && c != '!' && c != '?') continue;
            // Terminal punctuation must be followed by whitespace and an
            // uppercase letter or digit to end a sentence.
            std::size_t k = j + 1;
            if (k < n && (body[k] == '.' || body[k] == '!' || body[k] == '?')) continue;
            std::size_t ws = k;
            while (ws < n && is_space(body[ws]) && body[ws] != '\n') ++ws;
            if (ws == k) continue;  // no whitespace after punctuation
            if (ws >= n || !is_upper_or_digit(body[ws])) continue;
            if (c == '.') {
                // Token ending at the period, lowercased, checked against the
                // abbreviation stop-list.
                std::size_t tb = j;
                while (tb > start && !is_space(body[tb - 1])) --tb;
                std::string token = lowercase_ascii(body.substr(tb, j - tb + 1));
                if (abbreviation_stoplist().count(token) > 0) continue;
            }
            end = j + 1;
            break;
        }
        // Trim trailing whitespace.
        std::size_t e = std::min(end, n);
        while (e > start && is_space(body[e - 1])) --e;
        if (e > start) ranges.push_back({start, e});
        i = std::max(end + 1, e + 1);
        if (end == n) break;
    }
    return ranges;
}

}  // namespace

std::vector<CharRange> sentence_ranges(std::string_view body) {
    return scan_sentences(body);
}

std::vector<std::size_t> sentence_starts(std::string_view body) {
    std::vector<std::size_t> starts;
    for (const auto& r : scan_sentences(body)) starts.push_back(r.begin);
    return starts;
}

}  // namespace finder::text
