// SPDX-License-Identifier: Apache-2.0
#include "chop/core/types.hpp"

#include <set>

#include "chop/core/text.hpp"
#include "chop/error.hpp"

namespace chop {

std::string_view to_string(Language l)
{
    return l == Language::Zh ? "zh" : "en";
}

std::string_view to_string(Difficulty d)
{
    switch (d) {
    case Difficulty::Easy: return "easy";
    case Difficulty::Medium: return "medium";
    case Difficulty::Hard: return "hard";
    }
    return "easy";
}

Language parse_language(std::string_view s)
{
    auto v = text::fold(s);
    if (v == "en")
        return Language::En;
    if (v == "zh")
        return Language::Zh;
    throw Error(ErrorCode::InvalidInput, "unknown language '" + std::string(s) + "'");
}

Difficulty parse_difficulty(std::string_view s)
{
    auto v = text::fold(s);
    if (v == "easy")
        return Difficulty::Easy;
    if (v == "medium")
        return Difficulty::Medium;
    if (v == "hard")
        return Difficulty::Hard;
    throw Error(ErrorCode::InvalidInput, "unknown difficulty '" + std::string(s) + "'");
}

std::string render_subtask_call(const SubtaskCall& call)
{
    if (call.parameters.empty())
        return call.name;
    return call.name + " (" + text::join(call.parameters, ", ") + ")";
}

const BasisSubtask* find_subtask(const Library& library, std::string_view name)
{
    auto key = text::fold(name);
    for (const auto& s : library)
        if (text::fold(s.name) == key)
            return &s;
    return nullptr;
}

void validate_library(const Library& library)
{
    std::set<std::string> names;
    for (const auto& s : library) {
        if (s.name.empty())
            throw Error(ErrorCode::SchemaError, "basis subtask with empty name");
        if (!names.insert(text::fold(s.name)).second)
            throw Error(ErrorCode::SchemaError, "duplicate basis subtask '" + s.name + "'");
        if (s.arity < 0 || static_cast<std::size_t>(s.arity) != s.parameter_roles.size())
            throw Error(ErrorCode::SchemaError, "'" + s.name + "': arity does not match parameter_roles");
        if (s.doc.standardized_process.empty())
            throw Error(ErrorCode::SchemaError, "'" + s.name + "': empty standardized process");
    }
}

void validate_task(const Task& task)
{
    if (task.id.empty())
        throw Error(ErrorCode::SchemaError, "task with empty id");
    if (task.golden_actions.empty())
        throw Error(ErrorCode::SchemaError, "task '" + task.id + "': golden_actions is empty");
    if (!is_exit(task.golden_actions.back()))
        throw Error(ErrorCode::SchemaError, "task '" + task.id + "': last golden action must be EXIT");
    if (task.apps.empty())
        throw Error(ErrorCode::SchemaError, "task '" + task.id + "': no apps");
}

std::string_view to_string(TerminalReason r)
{
    switch (r) {
    case TerminalReason::Exit: return "exit";
    case TerminalReason::MaxRounds: return "max_rounds";
    case TerminalReason::ParseError: return "parse_error";
    case TerminalReason::EnvError: return "env_error";
    case TerminalReason::PlanExhausted: return "plan_exhausted";
    case TerminalReason::BackendError: return "backend_error";
    }
    return "exit";
}

TerminalReason parse_terminal_reason(std::string_view s)
{
    for (auto r : {TerminalReason::Exit, TerminalReason::MaxRounds, TerminalReason::ParseError,
                   TerminalReason::EnvError, TerminalReason::PlanExhausted, TerminalReason::BackendError})
        if (to_string(r) == s)
            return r;
    throw Error(ErrorCode::SchemaError, "unknown terminal_reason '" + std::string(s) + "'");
}

}  // namespace chop
