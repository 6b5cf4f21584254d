// SPDX-License-Identifier: Apache-2.0
#include "chop/core/prompt_template.hpp"

#include <algorithm>

#include "chop/core/serialize.hpp"
#include "chop/error.hpp"

namespace chop {

PromptTemplate::PromptTemplate(std::string source) : source_(std::move(source))
{
    std::size_t pos = 0;
    while ((pos = source_.find("{{", pos)) != std::string::npos) {
        auto end = source_.find("}}", pos + 2);
        if (end == std::string::npos)
            throw Error(ErrorCode::SchemaError, "unterminated slot in prompt template");
        auto name = source_.substr(pos + 2, end - pos - 2);
        if (std::find(slots_.begin(), slots_.end(), name) == slots_.end())
            slots_.push_back(name);
        pos = end + 2;
    }
}

PromptTemplate PromptTemplate::load(const std::filesystem::path& path)
{
    return PromptTemplate(io::read_file(path));
}

std::string PromptTemplate::render(const std::map<std::string, std::string>& values) const
{
    std::string out;
    out.reserve(source_.size() * 2);
    std::size_t pos = 0;
    while (true) {
        auto open = source_.find("{{", pos);
        if (open == std::string::npos) {
            out.append(source_, pos, std::string::npos);
            break;
        }
        auto close = source_.find("}}", open + 2);
        auto name = source_.substr(open + 2, close - open - 2);
        auto it = values.find(name);
        if (it == values.end())
            throw Error(ErrorCode::InvalidInput, "no value for prompt slot '" + name + "'");
        out.append(source_, pos, open - pos);
        out.append(it->second);
        pos = close + 2;
    }
    return out;
}

PromptSet PromptSet::load(const std::filesystem::path& dir, Language language)
{
    auto base = dir / std::string(to_string(language));
    PromptSet set;
    set.language = language;
    set.plan = PromptTemplate::load(base / "plan.txt");
    set.action = PromptTemplate::load(base / "action.txt");
    set.summarize = PromptTemplate::load(base / "summarize.txt");
    return set;
}

}  // namespace chop
