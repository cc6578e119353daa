#pragma once

#include <filesystem>
#include <map>
#include <string>

namespace flipeval {

enum class PromptVariant { v1, v2, v3 };

PromptVariant prompt_variant_from_string(const std::string& name);
std::string to_string(PromptVariant variant);

enum class PromptKind { flip_infer, pointwise, listwise, pairwise, lm_similarity };

struct PromptTemplate {
    std::string system;
    std::string user;
};

/// Holds the built-in prompt texts for every method and variant; individual
/// templates can be overridden by dropping files into a directory:
///   <kind>.<variant>.system.txt and <kind>.<variant>.user.txt
/// e.g. flip_infer.v2.system.txt
class PromptLibrary {
public:
    PromptLibrary();

    void load_overrides(const std::filesystem::path& dir);

    const PromptTemplate& get(PromptKind kind, PromptVariant variant) const;

    /// SHA-256 over all resolved templates; embedded in report headers so a
    /// run is reconstructable.
    std::string content_hash() const;

private:
    std::map<std::pair<PromptKind, PromptVariant>, PromptTemplate> templates_;
};

/// Replace each "{name}" placeholder with its value; unknown braces (e.g.
/// the literal JSON in the template text) are left untouched.
std::string render_template(std::string text,
                            const std::map<std::string, std::string>& vars);

}  // namespace flipeval
