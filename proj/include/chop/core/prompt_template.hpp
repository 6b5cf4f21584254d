// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "chop/core/types.hpp"

namespace chop {

// Text with named "{{slot}}" placeholders. Rendering fails if a slot has no
// value; extra values are ignored.
class PromptTemplate {
public:
    PromptTemplate() = default;
    explicit PromptTemplate(std::string source);

    static PromptTemplate load(const std::filesystem::path& path);

    std::string render(const std::map<std::string, std::string>& values) const;
    const std::vector<std::string>& slots() const { return slots_; }
    const std::string& source() const { return source_; }

private:
    std::string source_;
    std::vector<std::string> slots_;
};

// The three prompt templates for one language, read from
// <dir>/<lang>/{plan,action,summarize}.txt.
struct PromptSet {
    Language language = Language::En;
    PromptTemplate plan;
    PromptTemplate action;
    PromptTemplate summarize;

    static PromptSet load(const std::filesystem::path& dir, Language language);
};

}  // namespace chop
