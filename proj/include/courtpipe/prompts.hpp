#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <string_view>

namespace courtpipe {

/// One versioned prompt template. `version` is a content digest so run
/// metadata can pin exactly which prompt text produced an artifact.
struct PromptTemplate {
    std::string id;
    std::string text;
    std::string version;
};

/// Loads `<id>.tmpl` files from a directory. Rendering substitutes
/// {{name}} placeholders and includes {{#name}}...{{/name}} blocks only when
/// the variable is present and non-empty.
class TemplateRegistry {
public:
    static TemplateRegistry load_dir(const std::filesystem::path& dir);

    bool has(const std::string& id) const { return templates_.count(id) > 0; }
    const PromptTemplate& get(const std::string& id) const;

    std::string render(const std::string& id,
                       const std::map<std::string, std::string>& vars) const;

    /// id -> version for every loaded template, for run metadata.
    std::map<std::string, std::string> versions() const;

    void add(std::string id, std::string text);

private:
    std::map<std::string, PromptTemplate> templates_;
};

/// Placeholder substitution on a bare template string.
std::string render_template(std::string_view text,
                            const std::map<std::string, std::string>& vars);

}  // namespace courtpipe
