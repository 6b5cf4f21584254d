// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "chop/core/action.hpp"

namespace chop {

enum class Language { En, Zh };
enum class Difficulty { Easy, Medium, Hard };

std::string_view to_string(Language l);
std::string_view to_string(Difficulty d);
Language parse_language(std::string_view s);
Difficulty parse_difficulty(std::string_view s);

// Textual stand-in for the screenshot at one time step.
struct ScreenState {
    std::string screen_id;
    std::string app_id;
    std::vector<std::string> visible_elements;
    std::string observation_text;

    bool operator==(const ScreenState&) const = default;
};

// Append-only (state, action) log. Each executed action is stored with the
// state it was executed in.
class History {
public:
    struct Entry {
        ScreenState state;
        Action action;
        bool operator==(const Entry&) const = default;
    };

    void append(ScreenState state, Action action) { entries_.push_back({std::move(state), std::move(action)}); }
    const std::vector<Entry>& entries() const { return entries_; }
    std::size_t size() const { return entries_.size(); }
    bool operator==(const History&) const = default;

private:
    std::vector<Entry> entries_;
};

struct SubtaskCall {
    std::string name;
    std::vector<std::string> parameters;
    bool is_custom = false;
    std::string purpose;
    std::string stop_condition;

    bool operator==(const SubtaskCall&) const = default;
};

// "Name (p1, p2)"; a zero-parameter call renders as just the name.
std::string render_subtask_call(const SubtaskCall& call);

// Inverse of render_subtask_call. Parameters are split on commas outside
// quotes; surrounding quotes and a trailing period are dropped. The result
// is not checked against any library.
SubtaskCall parse_subtask_call(std::string_view line);

struct SubtaskDoc {
    std::vector<std::string> standardized_process;
    std::vector<std::string> boundary_conditions;

    bool operator==(const SubtaskDoc&) const = default;
};

struct BasisSubtask {
    std::string name;
    int arity = 1;
    std::vector<std::string> parameter_roles;
    SubtaskDoc doc;
    bool fixed_flow = false;
    int frequency = 0;
    std::string description;
    std::vector<std::string> verbs;  // cluster members the subtask was mined from

    bool operator==(const BasisSubtask&) const = default;
};

using Library = std::vector<BasisSubtask>;

const BasisSubtask* find_subtask(const Library& library, std::string_view name);
void validate_library(const Library& library);

struct MemoryEntry {
    std::string subtask_name;
    std::string summary;

    bool operator==(const MemoryEntry&) const = default;
};

struct Task {
    std::string id;
    std::string instruction;
    Language language = Language::En;
    Difficulty difficulty = Difficulty::Easy;
    std::string app_id;
    std::vector<std::string> apps;  // bundles the task touches; more than one starts from the phone home
    std::vector<Action> golden_actions;
    std::optional<std::vector<SubtaskCall>> golden_plan;

    bool operator==(const Task&) const = default;
};

void validate_task(const Task& task);

struct AnnotatedStep {
    Action action;
    std::string thought;

    bool operator==(const AnnotatedStep&) const = default;
};

// One human demonstration in a mining corpus.
struct TrajectoryRecord {
    std::string id;
    std::string instruction;
    std::string app_id;
    std::vector<AnnotatedStep> steps;

    bool operator==(const TrajectoryRecord&) const = default;
};

enum class TerminalReason { Exit, MaxRounds, ParseError, EnvError, PlanExhausted, BackendError };

std::string_view to_string(TerminalReason r);
TerminalReason parse_terminal_reason(std::string_view s);

struct TranscriptRecord {
    std::string role;
    int subtask_index = -1;  // -1 for the plan call
    int turn = 0;
    std::string request;
    std::string response;
    std::vector<std::string> errors;  // "<ErrorCode>: message" notes raised while handling this call

    bool operator==(const TranscriptRecord&) const = default;
};

struct Episode {
    std::string task_id;
    std::vector<SubtaskCall> plan;
    std::vector<Action> executed_actions;
    History history;
    std::vector<TranscriptRecord> transcripts;
    int action_agent_calls = 0;
    int api_calls_total = 0;
    bool success = false;
    TerminalReason terminal_reason = TerminalReason::Exit;
    std::vector<MemoryEntry> memories;

    bool operator==(const Episode&) const = default;
};

}  // namespace chop
