#pragma once

#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "json.hpp"

#include "finder/io.hpp"
#include "finder/prompts.hpp"
#include "finder/text.hpp"

namespace fixtures {

inline std::filesystem::path fixtures_dir() { return FINDER_FIXTURES_DIR; }

inline std::string read_fixture(const std::string& relative) {
    return finder::read_file(fixtures_dir() / relative);
}

// Descriptor phrases the recorded completions return for the beetle text,
// in answer order.
inline const std::vector<std::string>& beetle_descriptors() {
    static const std::vector<std::string> phrases = {
        "metallic blue-black",
        "light brown",
        "white",
        "small dark spots",
        "6 mm in length",
        "jump when disturbed",
        "long antennae",
        "large hind legs",
        "black head and tail",
        "three pairs of dark legs",
    };
    return phrases;
}

// The same phrases in conversion-table order: colour descriptors first, then
// size, the body-part row, and behavior.
inline const std::vector<std::string>& table_descriptors() {
    static const std::vector<std::string> phrases = {
        "metallic blue-black",
        "light brown",
        "white",
        "small dark spots",
        "6 mm in length",
        "long antennae",
        "large hind legs",
        "black head and tail",
        "three pairs of dark legs",
        "jump when disturbed",
    };
    return phrases;
}

// Phrase to attribute mapping the scripted stage-2 completion answers with.
inline const std::vector<std::pair<std::string, std::string>>&
descriptor_attributes() {
    static const std::vector<std::pair<std::string, std::string>> mapping = {
        {"metallic blue-black", "colour"},
        {"light brown", "colour"},
        {"white", "colour"},
        {"small dark spots", "colour"},
        {"6 mm in length", "size"},
        {"jump when disturbed", "behavior"},
        {"long antennae", "antennae"},
        {"large hind legs", "legs"},
        {"black head and tail", "body part"},
        {"three pairs of dark legs", "body part"},
    };
    return mapping;
}

inline const std::vector<std::pair<std::string, std::string>>&
adults_expected_attributes() {
    static const std::vector<std::pair<std::string, std::string>> expected = {
        {"colour", "Metallic blue-black, light brown"},
        {"size", "3\xE2\x80\x93"
                 "5 mm"},
        {"behavior",
         "Emerge and feed on foliage, rest in moist, sheltered places, "
         "migrate into crops to mate and feed on foliage, causing "
         "characteristic shot-holing of the leaves, lay eggs and feed on "
         "leaves until temperatures drop"},
        {"antennae", "Long"},
        {"legs", "Large hind legs"},
    };
    return expected;
}

inline std::string adults_answer_json() {
    nlohmann::ordered_json answer;
    for (const auto& [name, value] : adults_expected_attributes()) {
        std::string key = name;
        key[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(key[0])));
        answer[key] = value;
    }
    return answer.dump(2);
}

inline std::string larvae_answer_json() {
    nlohmann::ordered_json answer = {
        {"Colour", "White, with very small dark spots on the back"},
        {"Size", "Up to 6 mm when mature"},
        {"Body part", "Black head and tail, three pairs of dark legs"},
    };
    return answer.dump(2);
}

inline std::vector<std::string> dash_lines(const std::string& user_text) {
    std::vector<std::string> out;
    std::istringstream in(user_text);
    std::string line;
    while (std::getline(in, line)) {
        if (line.rfind("- ", 0) == 0) out.push_back(line.substr(2));
    }
    return out;
}

// Lines of the form "name: 3" from the dedup prompt listing.
inline std::vector<std::string> listed_names(const std::string& user_text) {
    std::vector<std::string> out;
    std::istringstream in(user_text);
    std::string line;
    while (std::getline(in, line)) {
        std::size_t sep = line.rfind(": ");
        if (sep == std::string::npos || sep == 0) continue;
        std::string_view freq = std::string_view(line).substr(sep + 2);
        if (freq.empty() ||
            freq.find_first_not_of("0123456789") != std::string_view::npos) {
            continue;
        }
        out.push_back(line.substr(0, sep));
    }
    return out;
}

inline bool contains(std::string_view haystack, std::string_view needle) {
    return haystack.find(needle) != std::string_view::npos;
}

// Deterministic stand-in for a chat model over the beetle fixture corpus.
// With group_body_parts the dedup answer folds "antennae" and "legs" into the
// "body part" group; otherwise every attribute name stands alone.
inline std::function<std::string(const finder::llm::RenderedPrompt&)>
beetle_model(bool group_body_parts = false) {
    return [group_body_parts](const finder::llm::RenderedPrompt& prompt) {
        using finder::llm::TemplateId;
        const std::string& user = prompt.user_text;
        switch (prompt.id) {
            case TemplateId::relevance_judge:
                return std::string(
                    contains(user, "flea beetle") || contains(user, "Adults are")
                        ? "YES"
                        : "NO");
            case TemplateId::stage1_descriptors: {
                if (!contains(user, "Adults are")) return std::string("[]");
                nlohmann::json answer = beetle_descriptors();
                return answer.dump();
            }
            case TemplateId::stage2_attributes: {
                nlohmann::ordered_json answer = nlohmann::ordered_json::object();
                for (const auto& phrase : dash_lines(user)) {
                    for (const auto& [known, attribute] : descriptor_attributes()) {
                        if (phrase == known) {
                            answer[phrase] = attribute;
                            break;
                        }
                    }
                }
                return answer.dump(2);
            }
            case TemplateId::attr_dedup: {
                const auto names = listed_names(user);
                nlohmann::json groups = nlohmann::json::array();
                if (group_body_parts) {
                    nlohmann::json body_parts = nlohmann::json::array();
                    for (const auto& name : {"body part", "antennae", "legs"}) {
                        if (std::find(names.begin(), names.end(), name) !=
                            names.end()) {
                            body_parts.push_back(name);
                        }
                    }
                    for (const auto& name : names) {
                        if (name != "body part" && name != "antennae" &&
                            name != "legs") {
                            groups.push_back(nlohmann::json::array({name}));
                        }
                    }
                    if (!body_parts.empty()) groups.push_back(body_parts);
                } else {
                    for (const auto& name : names) {
                        groups.push_back(nlohmann::json::array({name}));
                    }
                }
                return nlohmann::json({{"groups", groups}}).dump(2);
            }
            case TemplateId::stage3_entities:
                return std::string(contains(user, "Adults are")
                                       ? "[\"Adults\", \"Larvae\"]"
                                       : "[]");
            case TemplateId::stage4_bind:
                if (contains(user, "Entity: Adults")) return adults_answer_json();
                if (contains(user, "Entity: Larvae")) return larvae_answer_json();
                return std::string("{}");
        }
        throw std::logic_error("unhandled template id in fixture model");
    };
}

inline std::string normalize_loose(std::string_view s) {
    return finder::text::lowercase_ascii(finder::text::collapse_whitespace(s));
}

class TempDir {
  public:
    TempDir() {
        std::string pattern =
            (std::filesystem::temp_directory_path() / "finder-test-XXXXXX")
                .string();
        std::vector<char> buffer(pattern.begin(), pattern.end());
        buffer.push_back('\0');
        if (::mkdtemp(buffer.data()) == nullptr) {
            throw std::runtime_error("mkdtemp failed");
        }
        path_ = buffer.data();
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }

  private:
    std::filesystem::path path_;
};

}  // namespace fixtures
