#include "psya/templates.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

namespace psya {

TemplateLibrary::TemplateLibrary() {
    for (const auto& [name, text] : builtin_templates()) templates_.emplace(name, text);
}

void TemplateLibrary::set(std::string name, std::string text) { templates_[std::move(name)] = std::move(text); }

std::size_t TemplateLibrary::load_overrides(const std::filesystem::path& dir) {
    if (!std::filesystem::is_directory(dir)) throw ConfigurationError("template directory not found: " + dir.string());
    std::size_t n = 0;
    std::vector<std::filesystem::path> files;
    for (const auto& e : std::filesystem::directory_iterator(dir))
        if (e.is_regular_file() && e.path().extension() == ".txt") files.push_back(e.path());
    std::sort(files.begin(), files.end());
    for (const auto& f : files) {
        std::ifstream in(f);
        std::ostringstream ss;
        ss << in.rdbuf();
        set(f.stem().string(), ss.str());
        ++n;
    }
    return n;
}

bool TemplateLibrary::has(std::string_view name) const { return templates_.find(name) != templates_.end(); }

const std::string& TemplateLibrary::text(std::string_view name) const {
    auto it = templates_.find(name);
    if (it == templates_.end()) throw ConfigurationError("unknown prompt template: " + std::string(name));
    return it->second;
}

std::string TemplateLibrary::render(std::string_view name, const TemplateVars& vars) const {
    const std::string& src = text(name);
    std::string out;
    out.reserve(src.size() + 256);
    std::size_t i = 0;
    while (i < src.size()) {
        const auto open = src.find("{{", i);
        if (open == std::string::npos) {
            out.append(src, i, std::string::npos);
            break;
        }
        const auto close = src.find("}}", open + 2);
        if (close == std::string::npos) throw ConfigurationError("unterminated placeholder in template " + std::string(name));
        out.append(src, i, open - i);
        const std::string key = src.substr(open + 2, close - open - 2);
        auto it = vars.find(key);
        if (it == vars.end())
            throw ConfigurationError("template " + std::string(name) + " needs a value for {{" + key + "}}");
        out += it->second;
        i = close + 2;
    }
    while (!out.empty() && (out.back() == '\n' || out.back() == ' ')) out.pop_back();
    return out;
}

BackendRequest TemplateLibrary::request(std::string_view name, const TemplateVars& vars, ExpectedFormat format,
                                        std::uint64_t seed) const {
    BackendRequest req;
    req.template_name = std::string(name);
    req.rendered_prompt = render(name, vars);
    const auto instruction = format_instruction(format);
    if (!instruction.empty()) req.rendered_prompt += "\n\n" + instruction;
    req.constraints.seed = seed;
    req.constraints.format = std::move(format);
    return req;
}

}  // namespace psya
