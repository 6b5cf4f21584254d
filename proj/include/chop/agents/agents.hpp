// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "chop/backends/backend.hpp"
#include "chop/core/prompt_template.hpp"
#include "chop/core/types.hpp"
#include "chop/simenv/device.hpp"

// The plan agent and the action agent, and the episode runner that drives
// them against a simulated device.
namespace chop::agents {

struct PlanResult {
    std::vector<SubtaskCall> subtasks;
    std::string raw_response;
};

struct ActionTurn {
    std::string observation;
    std::string thought;
    std::vector<Action> actions;  // empty only when the turn just reports completion
    std::optional<std::string> summarization;
    bool subtask_done = false;
};

struct RunnerConfig {
    int max_rounds = 20;  // executed actions per episode
    int max_turns_per_subtask = 8;
    int max_parse_failures = 2;  // consecutive unparseable action turns
    int max_env_failures = 3;    // consecutive rejected actions
    bool allow_batching = true;  // false treats every subtask as non-fixed-flow
    Language language = Language::En;
};

std::string render_library_for_prompt(const Library& library);
std::string build_plan_prompt(const Task& task, const Library& library, const PromptSet& prompts);

// Numbered lines "N. Name (p1, p2)", each optionally followed by
// "Purpose: ..." and "Stop: ..." lines. Names are matched against the
// library case-insensitively; anything else becomes a custom call.
PlanResult parse_plan_output(std::string_view text, const Library& library);

PlanResult plan(const Task& task, const Library& library, backends::CompletionBackend& backend,
                const PromptSet& prompts);

// Position of the subtask within the plan; the last one is told to finish
// with EXIT.
struct SubtaskPosition {
    int index = 0;
    int count = 1;
};

std::string build_action_prompt(const Task& task, const SubtaskCall& subtask, const SubtaskDoc& doc,
                                const ScreenState& obs, const std::vector<MemoryEntry>& memories,
                                const PromptSet& prompts, bool fixed_flow = false, SubtaskPosition position = {});

// Sections are introduced by "Observation:", "Thought:", "Action:",
// "Summary:" and "Done:" lines. Each non-empty line of the Action section is
// one action; a bare DONE or FINISH line marks the subtask complete.
ActionTurn parse_action_output(std::string_view text, bool fixed_flow);

// Everything one episode shares across its subtasks.
struct EpisodeContext {
    const sim::Environment& env;
    const Task& task;
    const Library& library;
    const PromptSet& prompts;
    backends::CompletionBackend& backend;
    const RunnerConfig& config;

    sim::DeviceState state;
    History history;
    std::vector<Action> executed_actions;
    std::vector<TranscriptRecord> transcripts;
    std::vector<MemoryEntry> memories;
    int action_agent_calls = 0;
    int api_calls_total = 0;
};

struct SubtaskResult {
    std::vector<Action> actions;  // as executed, clicks grounded to coordinates
    int turns = 0;
    std::optional<MemoryEntry> memory;
    bool done = false;
    bool exited = false;
    std::optional<TerminalReason> abort;  // set when the episode must stop
};

// Runs the action agent on one subtask until it reports completion, the
// device exits, the turn budget is spent or the episode must stop. Updates
// the context's state, history, transcripts and counters.
SubtaskResult execute_subtask(EpisodeContext& ctx, const SubtaskCall& subtask, SubtaskPosition position);

Episode run_episode(const Task& task, const std::vector<sim::AppDefinition>& bundles, const Library& library,
                    backends::CompletionBackend& backend, const PromptSet& prompts, const RunnerConfig& config = {});

// Re-executes an archived episode from reset and reports every executed
// click that did not land on a visible element, every recorded screen that
// differs from the replayed one and any action the device rejects.
std::vector<std::string> audit_episode(const sim::Environment& env, const Episode& episode);

}  // namespace chop::agents
