#pragma once

#include "psya/backend.hpp"

#include <filesystem>
#include <map>
#include <string>
#include <string_view>

namespace psya {

using TemplateVars = std::map<std::string, std::string, std::less<>>;

/// Named prompt templates with {{var}} placeholders. Starts with the
/// templates shipped in templates/ (compiled in); a directory of *.txt files
/// can override any of them by file stem.
class TemplateLibrary {
public:
    TemplateLibrary();

    void set(std::string name, std::string text);
    /// Loads every *.txt in `dir`; returns how many were loaded.
    std::size_t load_overrides(const std::filesystem::path& dir);

    bool has(std::string_view name) const;
    const std::string& text(std::string_view name) const;

    /// Throws ConfigurationError on an unknown template or an unbound placeholder.
    std::string render(std::string_view name, const TemplateVars& vars) const;

    /// Rendered prompt plus the output-format instruction.
    BackendRequest request(std::string_view name, const TemplateVars& vars, ExpectedFormat format,
                           std::uint64_t seed = 0) const;

private:
    std::map<std::string, std::string, std::less<>> templates_;
};

/// Built-in template texts keyed by name.
const std::map<std::string, std::string, std::less<>>& builtin_templates();

}  // namespace psya
