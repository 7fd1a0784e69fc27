#include "courtpipe/prompts.hpp"

#include <fstream>
#include <sstream>

#include "courtpipe/errors.hpp"
#include "courtpipe/hash.hpp"

namespace fs = std::filesystem;

namespace courtpipe {

std::string render_template(std::string_view text,
                            const std::map<std::string, std::string>& vars) {
    std::string out;
    out.reserve(text.size());
    std::size_t i = 0;
    while (i < text.size()) {
        auto open = text.find("{{", i);
        if (open == std::string_view::npos) {
            out.append(text.substr(i));
            break;
        }
        out.append(text.substr(i, open - i));
        auto close = text.find("}}", open + 2);
        if (close == std::string_view::npos) {
            throw Error("template has an unterminated '{{'");
        }
        if (open + 2 < text.size() && text[open + 2] == '#') {
            const std::string name(text.substr(open + 3, close - open - 3));
            const std::string end_tag = "{{/" + name + "}}";
            auto end = text.find(end_tag, close + 2);
            if (end == std::string_view::npos) {
                throw Error("template block '" + name + "' is not closed");
            }
            auto it = vars.find(name);
            if (it != vars.end() && !it->second.empty()) {
                out += render_template(text.substr(close + 2, end - close - 2), vars);
            }
            i = end + end_tag.size();
        } else {
            const std::string name(text.substr(open + 2, close - open - 2));
            auto it = vars.find(name);
            if (it == vars.end()) {
                throw Error("template placeholder '" + name + "' has no value");
            }
            out += it->second;
            i = close + 2;
        }
    }
    return out;
}

TemplateRegistry TemplateRegistry::load_dir(const fs::path& dir) {
    if (!fs::exists(dir)) throw IoError("template directory not found: " + dir.string());
    TemplateRegistry reg;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (!entry.is_regular_file() || entry.path().extension() != ".tmpl") continue;
        std::ifstream in(entry.path(), std::ios::binary);
        if (!in) throw IoError("cannot read template " + entry.path().string());
        std::ostringstream ss;
        ss << in.rdbuf();
        reg.add(entry.path().stem().string(), ss.str());
    }
    if (reg.templates_.empty()) {
        throw IoError("no .tmpl files in " + dir.string());
    }
    return reg;
}

void TemplateRegistry::add(std::string id, std::string text) {
    PromptTemplate t;
    t.id = id;
    t.version = content_digest(text).substr(0, 16);
    t.text = std::move(text);
    templates_[std::move(id)] = std::move(t);
}

const PromptTemplate& TemplateRegistry::get(const std::string& id) const {
    auto it = templates_.find(id);
    if (it == templates_.end()) throw Error("unknown prompt template '" + id + "'");
    return it->second;
}

std::string TemplateRegistry::render(const std::string& id,
                                     const std::map<std::string, std::string>& vars) const {
    return render_template(get(id).text, vars);
}

std::map<std::string, std::string> TemplateRegistry::versions() const {
    std::map<std::string, std::string> out;
    for (const auto& [id, t] : templates_) out[id] = t.version;
    return out;
}

}  // namespace courtpipe
