#pragma once

#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace finder::llm {

enum class TemplateId {
    stage1_descriptors,
    stage2_attributes,
    attr_dedup,
    stage3_entities,
    stage4_bind,
    relevance_judge,
};

std::string to_string(TemplateId id);
TemplateId template_id_from_string(std::string_view name);
std::vector<TemplateId> all_template_ids();

/// Bumped whenever any default template text changes, so replay caches
/// recorded against older wording fail loudly instead of silently mixing.
inline constexpr int kPromptAssetsVersion = 1;

struct PromptTemplate {
    TemplateId id;
    std::string system_text;
    std::string user_text;
};

const PromptTemplate& default_template(TemplateId id);

struct RenderedPrompt {
    TemplateId id;
    std::string system_text;
    std::string user_text;

    /// Cache key: sha256 over template id and both rendered texts.
    std::string digest() const;
};

/// Fills {slot} placeholders from `slots`. Every placeholder must be present
/// and non-empty (MissingSlot otherwise); extra slots are ignored. A
/// placeholder may appear multiple times and is replaced everywhere.
RenderedPrompt render(const PromptTemplate& tmpl,
                      const std::map<std::string, std::string>& slots);

/// Default templates plus optional per-id overrides (loaded from a JSON file
/// of {"template_id": {"system": ..., "user": ...}}).
class TemplateSet {
public:
    TemplateSet();

    const PromptTemplate& get(TemplateId id) const;
    void set_override(PromptTemplate tmpl);
    static TemplateSet from_file(const std::string& path);

private:
    std::map<TemplateId, PromptTemplate> templates_;
};

}  // namespace finder::llm
