#include <string>
#include <vector>

#include "doctest.h"

#include "finder/text.hpp"

using namespace finder::text;

TEST_CASE("utf8_valid accepts well-formed sequences") {
    CHECK(utf8_valid(""));
    CHECK(utf8_valid("plain ascii"));
    CHECK(utf8_valid("3\xE2\x80\x93"
                     "5 mm"));          // en dash
    CHECK(utf8_valid("\xF0\x9F\x90\x9E"));  // 4-byte emoji
}

TEST_CASE("utf8_valid rejects malformed sequences") {
    CHECK_FALSE(utf8_valid("\x80"));              // stray continuation
    CHECK_FALSE(utf8_valid("\xE2\x80"));          // truncated
    CHECK_FALSE(utf8_valid("\xC0\xAF"));          // overlong '/'
    CHECK_FALSE(utf8_valid("\xED\xA0\x80"));      // surrogate half
    CHECK_FALSE(utf8_valid("\xF4\x90\x80\x80"));  // beyond U+10FFFF
    CHECK_FALSE(utf8_valid("ok\xFF"));
}

TEST_CASE("utf8_floor and utf8_ceil snap to character boundaries") {
    const std::string s = "a\xE2\x80\x93"
                          "b";  // a – b
    CHECK(utf8_floor(s, 2) == 1);
    CHECK(utf8_floor(s, 1) == 1);
    CHECK(utf8_ceil(s, 2) == 4);
    CHECK(utf8_ceil(s, 4) == 4);
    CHECK(utf8_floor(s, 99) == s.size());
    CHECK(utf8_ceil(s, 0) == 0);
}

TEST_CASE("normalize_body unifies newlines and collapses blank lines") {
    CHECK(normalize_body("a\r\nb\rc") == "a\nb\nc");
    CHECK(normalize_body("one\n\n\ntwo") == "one\ntwo");
    CHECK(normalize_body("  spaced\tout  ") == "spaced out");
    CHECK(normalize_body("line \n \n next\n") == "line\nnext\n");
    CHECK(normalize_body("ctrl\x01\x02ok") == "ctrlok");
    CHECK(normalize_body("   \n\t\n") == "");
}

TEST_CASE("normalize_body keeps at most one trailing newline") {
    CHECK(normalize_body("body\n") == "body\n");
    CHECK(normalize_body("body") == "body");
}

TEST_CASE("strip_html drops tags and decodes entities") {
    CHECK(strip_html("<p>Hello <b>world</b></p>") == "\nHello world\n");
    CHECK(strip_html("a<br>b") == "a\nb");
    CHECK(strip_html("x &amp; y") == "x & y");
    CHECK(strip_html("3&ndash;5 &#109;m") == "3\xE2\x80\x93"
                                             "5 mm");
    CHECK(strip_html("<script>var x = '<p>';</script>rest") == "rest");
    CHECK(strip_html("<style>p {}</style>rest") == "rest");
    CHECK(strip_html("a<!-- hidden -->b") == "ab");
    CHECK(strip_html("1 < 2 but x<y") == "1 < 2 but x<y");
}

TEST_CASE("looks_like_html checks extension then preamble") {
    CHECK(looks_like_html("anything", "page.HTML"));
    CHECK(looks_like_html("<!DOCTYPE html><p>x</p>", "file.txt"));
    CHECK(looks_like_html("<html lang=\"en\">", "file.txt"));
    CHECK_FALSE(looks_like_html("plain text with < signs", "file.txt"));
}

TEST_CASE("lowercase, collapse and contains_ci basics") {
    CHECK(lowercase_ascii("MiXeD 123") == "mixed 123");
    CHECK(collapse_whitespace("  a \t b\n c  ") == "a b c");
    CHECK(contains_ci("Metallic Blue-Black", "blue-black"));
    CHECK(contains_ci("abc", ""));
    CHECK_FALSE(contains_ci("short", "longer needle"));
    CHECK_FALSE(contains_ci("haystack", "missing"));
}

TEST_CASE("tokenize lowercases and keeps non-ascii bytes as token characters") {
    CHECK(tokenize("Adults are large!") ==
          std::vector<std::string>{"adults", "are", "large"});
    // The en dash is made of bytes >= 0x80, so "3–5" stays one token.
    CHECK(tokenize("3\xE2\x80\x93"
                   "5 mm") ==
          std::vector<std::string>{"3\xE2\x80\x93"
                                   "5",
                                   "mm"});
    CHECK(tokenize("...") == std::vector<std::string>{});
}

TEST_CASE("normalize_for_match strips case, spacing and edge punctuation") {
    CHECK(normalize_for_match("  Metallic   Blue-Black. ") ==
          "metallic blue-black");
    CHECK(normalize_for_match("\"colour\"") == "colour");
    CHECK(normalize_for_match("(size)") == "size");
    CHECK(normalize_for_match("a.b") == "a.b");
    CHECK(normalize_for_match("") == "");
    CHECK(normalize_for_match("?!") == "");
}

TEST_CASE("sentence_ranges splits on terminators followed by capitals") {
    const std::string body =
        "Adults are 3\xE2\x80\x93"
        "5 mm long, metallic blue-black or light brown. They have long "
        "antennae, large hind legs and jump when disturbed.";
    auto ranges = sentence_ranges(body);
    REQUIRE(ranges.size() == 2);
    CHECK(body.substr(ranges[0].begin, ranges[0].end - ranges[0].begin) ==
          "Adults are 3\xE2\x80\x93"
          "5 mm long, metallic blue-black or light brown.");
    CHECK(body.substr(ranges[1].begin) ==
          "They have long antennae, large hind legs and jump when disturbed.");
}

TEST_CASE("sentence_ranges honors the abbreviation stop-list") {
    auto one = sentence_ranges("They reach 6 mm. When mature they pupate.");
    CHECK(one.size() == 1);
    auto eg = sentence_ranges("Some pests, e.g. Flea beetles, jump.");
    CHECK(eg.size() == 1);
    auto split = sentence_ranges("It is small. It jumps high.");
    CHECK(split.size() == 2);
}

TEST_CASE("sentence_ranges treats newlines as hard breaks") {
    auto ranges = sentence_ranges("Identification\nAdults are small. They jump.");
    REQUIRE(ranges.size() == 3);
    CHECK(ranges[0].end - ranges[0].begin == std::string("Identification").size());
}

TEST_CASE("sentence_ranges needs whitespace then capital after the period") {
    CHECK(sentence_ranges("version 1.2 of the tool").size() == 1);
    CHECK(sentence_ranges("End.next word").size() == 1);
    CHECK(sentence_ranges("Wait... Then go.").size() == 2);
}

TEST_CASE("sentence_starts agrees with sentence_ranges") {
    const std::string body = "One here. Two here. Three.\nFour";
    auto ranges = sentence_ranges(body);
    auto starts = sentence_starts(body);
    REQUIRE(ranges.size() == starts.size());
    for (std::size_t i = 0; i < ranges.size(); ++i) {
        CHECK(ranges[i].begin == starts[i]);
    }
}
