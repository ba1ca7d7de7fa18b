#include "finder/prompts.hpp"

#include <array>
#include <regex>

#include "json.hpp"

#include "finder/errors.hpp"
#include "finder/hashing.hpp"
#include "finder/io.hpp"

namespace finder::llm {

using hashing::sha256_hex;

namespace {

const std::array<std::pair<TemplateId, const char*>, 6> kIdNames = {{
    {TemplateId::stage1_descriptors, "stage1_descriptors"},
    {TemplateId::stage2_attributes, "stage2_attributes"},
    {TemplateId::attr_dedup, "attr_dedup"},
    {TemplateId::stage3_entities, "stage3_entities"},
    {TemplateId::stage4_bind, "stage4_bind"},
    {TemplateId::relevance_judge, "relevance_judge"},
}};

PromptTemplate make_default(TemplateId id) {
    switch (id) {
        case TemplateId::stage1_descriptors:
            return {id,
                    "You extract descriptive phrases from text. "
                    "Answer only in the requested format.",
                    "From the text below, list every phrase that describes a "
                    "physical property, appearance, or observable behavior of "
                    "something (for example its colour, size, body parts, or "
                    "what it does). Copy each phrase verbatim from the text. "
                    "Do not paraphrase and do not invent phrases. Reply with a "
                    "JSON array of strings, or [] if there are none.\n\n"
                    "Text:\n{context}"};
        case TemplateId::stage2_attributes:
            return {id,
                    "You name the attribute a descriptive phrase refers to. "
                    "Answer only in the requested format.",
                    "For each descriptive phrase below, give the single "
                    "attribute it describes, as a short lowercase noun phrase "
                    "such as \"colour\", \"size\", \"body part\", or "
                    "\"behavior\". Reply with a JSON object mapping each "
                    "phrase exactly as written to its attribute name.\n\n"
                    "Phrases:\n{descriptors}"};
        case TemplateId::attr_dedup:
            return {id,
                    "You group duplicate attribute names. "
                    "Answer only in the requested format.",
                    "The list below shows attribute names with their "
                    "observed frequencies. Group names that refer to the same "
                    "underlying attribute (synonyms, spelling variants, or a "
                    "more specific form of the same attribute). Reply with a "
                    "JSON object of the form {\"groups\": [[...], [...]]} "
                    "where each inner array holds names from the list that "
                    "belong together. Names that stand alone go in their own "
                    "single-element group.\n\n"
                    "Attributes:\n{attributes}"};
        case TemplateId::stage3_entities:
            return {id,
                    "You identify the subjects a text describes. "
                    "Answer only in the requested format.",
                    "List the entities whose physical properties or behavior "
                    "the text below actually describes. Use the name the text "
                    "uses for each entity. Ignore things that are merely "
                    "mentioned without being described, and ignore body parts "
                    "of a described entity. Sentences already known to carry "
                    "descriptions, as a hint:\n{described_hints}\n\n"
                    "Text:\n{context}\n\n"
                    "Reply with a JSON array of entity names, or [] if none."};
        case TemplateId::stage4_bind:
            return {id,
                    "You fill in attribute values for one entity from source "
                    "sentences. Answer only in the requested format.",
                    "Entity: {entity}\n"
                    "Attributes to fill: {attributes}\n\n"
                    "Using only the sentences below, give the value of each "
                    "attribute for this entity. Reply with a JSON object "
                    "mapping attribute names to values. Omit attributes the "
                    "sentences do not answer for this entity. Keep values "
                    "concise and faithful to the wording of the sentences.\n\n"
                    "Sentences:\n{sentences}"};
        case TemplateId::relevance_judge:
            return {id,
                    "You judge whether a passage is relevant to an "
                    "information need. Answer only in the requested format.",
                    "Information need: {intent}\n\n"
                    "Passage:\n{context}\n\n"
                    "Is the passage relevant to the information need? Reply "
                    "with a single word: YES or NO."};
    }
    throw UnknownTemplate("unhandled template id");
}

}  // namespace

std::string to_string(TemplateId id) {
    for (const auto& [known, name] : kIdNames) {
        if (known == id) return name;
    }
    throw UnknownTemplate("unhandled template id");
}

TemplateId template_id_from_string(std::string_view name) {
    for (const auto& [id, known] : kIdNames) {
        if (name == known) return id;
    }
    throw UnknownTemplate("no template named " + std::string(name));
}

std::vector<TemplateId> all_template_ids() {
    std::vector<TemplateId> ids;
    ids.reserve(kIdNames.size());
    for (const auto& [id, name] : kIdNames) ids.push_back(id);
    return ids;
}

const PromptTemplate& default_template(TemplateId id) {
    static const std::map<TemplateId, PromptTemplate> defaults = [] {
        std::map<TemplateId, PromptTemplate> m;
        for (const auto& [id, name] : kIdNames) m.emplace(id, make_default(id));
        return m;
    }();
    return defaults.at(id);
}

std::string RenderedPrompt::digest() const {
    std::string key = to_string(id);
    key += '\x1f';
    key += system_text;
    key += '\x1f';
    key += user_text;
    return sha256_hex(key);
}

RenderedPrompt render(const PromptTemplate& tmpl,
                      const std::map<std::string, std::string>& slots) {
    static const std::regex slot_re("\\{([a-z0-9_]+)\\}");

    auto fill = [&](const std::string& text) {
        std::string out;
        out.reserve(text.size());
        auto begin = std::sregex_iterator(text.begin(), text.end(), slot_re);
        std::size_t last = 0;
        for (auto it = begin; it != std::sregex_iterator(); ++it) {
            const auto& match = *it;
            const std::string name = match[1].str();
            auto found = slots.find(name);
            if (found == slots.end() || found->second.empty()) {
                throw MissingSlot("template " + to_string(tmpl.id) +
                                  " needs non-empty slot {" + name + "}");
            }
            out.append(text, last, static_cast<std::size_t>(match.position()) - last);
            out.append(found->second);
            last = static_cast<std::size_t>(match.position() + match.length());
        }
        out.append(text, last, text.size() - last);
        return out;
    };

    return {tmpl.id, fill(tmpl.system_text), fill(tmpl.user_text)};
}

TemplateSet::TemplateSet() {
    for (TemplateId id : all_template_ids()) {
        templates_.emplace(id, default_template(id));
    }
}

const PromptTemplate& TemplateSet::get(TemplateId id) const {
    return templates_.at(id);
}

void TemplateSet::set_override(PromptTemplate tmpl) {
    templates_[tmpl.id] = std::move(tmpl);
}

TemplateSet TemplateSet::from_file(const std::string& path) {
    nlohmann::json doc = nlohmann::json::parse(read_file(path), nullptr,
                                               /*allow_exceptions=*/false);
    if (doc.is_discarded() || !doc.is_object()) {
        throw ConfigError("template override file is not a JSON object: " + path);
    }
    TemplateSet set;
    for (const auto& [name, value] : doc.items()) {
        const TemplateId id = template_id_from_string(name);
        if (!value.is_object() || !value.contains("system") ||
            !value.contains("user")) {
            throw ConfigError("template override for " + name +
                              " needs \"system\" and \"user\"");
        }
        set.set_override({id, value["system"].get<std::string>(),
                          value["user"].get<std::string>()});
    }
    return set;
}

}  // namespace finder::llm
