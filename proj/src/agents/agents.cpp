// SPDX-License-Identifier: Apache-2.0
#include "chop/agents/agents.hpp"

#include <cctype>

#include "chop/core/text.hpp"
#include "chop/error.hpp"

namespace chop::agents {

namespace {

std::string strip_markup(std::string_view line)
{
    std::string s;
    for (char c : line)
        if (c != '*' && c != '#' && c != '`')
            s.push_back(c);
    return std::string(text::trim(s));
}

// "3. text" or "3) text" -> "text".
std::optional<std::string> numbered_item(std::string_view line)
{
    auto t = text::trim(line);
    std::size_t i = 0;
    while (i < t.size() && std::isdigit(static_cast<unsigned char>(t[i])))
        ++i;
    if (i == 0 || i >= t.size() || (t[i] != '.' && t[i] != ')'))
        return std::nullopt;
    auto rest = text::trim(t.substr(i + 1));
    if (rest.empty())
        return std::nullopt;
    return std::string(rest);
}

// Matches "<label>:" or "<label>：" at the start of a line and returns the
// remainder after the colon.
std::optional<std::string> labeled(std::string_view line, const std::vector<std::string_view>& labels)
{
    auto s = strip_markup(line);
    for (auto label : labels) {
        if (!text::starts_with_ci(s, label))
            continue;
        auto rest = text::trim(std::string_view(s).substr(label.size()));
        if (!rest.empty() && rest.front() == ':')
            return std::string(text::trim(rest.substr(1)));
        if (text::starts_with_ci(rest, "："))
            return std::string(text::trim(rest.substr(std::string_view("：").size())));
    }
    return std::nullopt;
}

const std::vector<std::string_view> kPurpose = {"purpose", "目的"};
const std::vector<std::string_view> kStop = {"stop condition", "stopping condition", "stop", "停止条件"};

enum class Section { None, Observation, Thought, Action, Summary, Done };

const std::vector<std::pair<Section, std::vector<std::string_view>>> kSections = {
    {Section::Observation, {"observation", "观察"}},
    {Section::Thought, {"thought", "思考"}},
    {Section::Action, {"actions", "action", "动作", "操作"}},
    {Section::Summary, {"summarization", "summary", "总结"}},
    {Section::Done, {"done", "完成"}},
};

bool affirmative(std::string_view s)
{
    auto f = text::fold(s);
    while (!f.empty() && (f.back() == '.' || f.back() == '!'))
        f.pop_back();
    return f == "yes" || f == "true" || f == "1" || f == "done" || f == "是" || f == "完成";
}

bool completion_token(std::string_view s)
{
    return text::iequals(s, "DONE") || text::iequals(s, "FINISH") || text::iequals(s, "FINISHED");
}

std::string action_line(std::string_view line)
{
    auto s = strip_markup(line);
    if (auto item = numbered_item(s))
        return *item;
    if (s.size() > 1 && s[0] == '-' && s[1] == ' ')
        return std::string(text::trim(std::string_view(s).substr(2)));
    return s;
}

std::string format_placeholder(const BasisSubtask& s)
{
    if (s.arity == 0)
        return s.name;
    static const std::vector<std::string> marks = {"XXX", "YYY", "ZZZ"};
    std::vector<std::string> params;
    for (int i = 0; i < s.arity; ++i)
        params.push_back(i < static_cast<int>(marks.size()) ? marks[i] : "P" + std::to_string(i + 1));
    return s.name + " (" + text::join(params, ", ") + ")";
}

std::string error_note(const std::exception& e)
{
    return e.what();
}

}  // namespace

std::string render_library_for_prompt(const Library& library)
{
    std::string out;
    for (const auto& s : library) {
        out += "- " + s.name;
        if (s.arity > 0)
            out += " (" + text::join(s.parameter_roles, ", ") + ")";
        out += ": ";
        if (!s.description.empty())
            out += s.description;
        else
            out += text::join(s.doc.standardized_process, " ");
        out += " Output format is \"" + format_placeholder(s) + "\".\n";
    }
    return out;
}

std::string build_plan_prompt(const Task& task, const Library& library, const PromptSet& prompts)
{
    if (library.empty())
        throw Error(ErrorCode::InvalidInput, "the plan prompt needs a non-empty basis library");
    return prompts.plan.render({{"instruction", task.instruction}, {"subtasks", render_library_for_prompt(library)}});
}

PlanResult parse_plan_output(std::string_view body, const Library& library)
{
    PlanResult result;
    result.raw_response = std::string(body);
    for (const auto& line : text::split_lines(body)) {
        auto stripped = strip_markup(line);
        if (auto item = numbered_item(stripped)) {
            auto call = parse_subtask_call(*item);
            if (const auto* basis = find_subtask(library, call.name)) {
                call.name = basis->name;
                auto got = static_cast<int>(call.parameters.size());
                if (basis->arity == 1 && got > 1) {
                    // A single free-text parameter may itself contain commas.
                    call.parameters = {text::join(call.parameters, ", ")};
                } else if (got != basis->arity) {
                    throw Error(ErrorCode::ArityMismatch, basis->name + ": expected " +
                                                              std::to_string(basis->arity) + " parameters, got " +
                                                              std::to_string(got));
                }
            } else {
                call.is_custom = true;
            }
            result.subtasks.push_back(std::move(call));
            continue;
        }
        if (result.subtasks.empty())
            continue;
        if (auto p = labeled(stripped, kPurpose))
            result.subtasks.back().purpose = *p;
        else if (auto st = labeled(stripped, kStop))
            result.subtasks.back().stop_condition = *st;
    }
    if (result.subtasks.empty())
        throw Error(ErrorCode::EmptyPlan, "no numbered subtask lines in plan output");
    return result;
}

PlanResult plan(const Task& task, const Library& library, backends::CompletionBackend& backend,
                const PromptSet& prompts)
{
    backends::BackendRequest req;
    req.role = backends::Role::Plan;
    req.prompt = build_plan_prompt(task, library, prompts);
    req.metadata = {{"task_id", task.id}, {"subtask", "plan"}, {"turn", "0"}};
    return parse_plan_output(backend.complete(req), library);
}

std::string build_action_prompt(const Task& task, const SubtaskCall& subtask, const SubtaskDoc& doc,
                                const ScreenState& obs, const std::vector<MemoryEntry>& memories,
                                const PromptSet& prompts, bool fixed_flow, SubtaskPosition position)
{
    const bool zh = prompts.language == Language::Zh;

    std::string doc_text;
    if (doc.standardized_process.empty() && doc.boundary_conditions.empty()) {
        doc_text = zh ? "无（自定义子任务）\n" : "none (custom subtask)\n";
    } else {
        doc_text = zh ? "标准流程：\n" : "Standardized process:\n";
        for (std::size_t i = 0; i < doc.standardized_process.size(); ++i)
            doc_text += std::to_string(i + 1) + ". " + doc.standardized_process[i] + "\n";
        if (!doc.boundary_conditions.empty()) {
            doc_text += zh ? "边界条件：\n" : "Boundary conditions:\n";
            for (std::size_t i = 0; i < doc.boundary_conditions.size(); ++i)
                doc_text += std::to_string(i + 1) + ". " + doc.boundary_conditions[i] + "\n";
        }
    }

    std::string memory_text;
    if (memories.empty())
        memory_text = zh ? "无\n" : "none\n";
    for (const auto& m : memories)
        memory_text += "- " + m.subtask_name + ": " + m.summary + "\n";

    std::string mode;
    if (fixed_flow)
        mode = zh ? "该子任务流程固定：请一次性输出完成它所需的全部动作，每行一个。"
                  : "This subtask has a fixed workflow: output the complete action sequence for it in one response, "
                    "one action per line.";
    else
        mode = zh ? "请只输出一个动作。" : "Output exactly one action.";

    std::string pos = (zh ? "第 " : "Subtask ") + std::to_string(position.index + 1) + (zh ? " 个，共 " : " of ") +
                      std::to_string(position.count) + (zh ? " 个" : "");
    if (position.index + 1 == position.count)
        pos += zh ? "（最后一个：完成后输出 EXIT 结束任务）" : " (the last one: after completing it, finish the task with EXIT)";

    return prompts.action.render({
        {"instruction", task.instruction},
        {"subtask", render_subtask_call(subtask)},
        {"position", pos},
        {"purpose", subtask.purpose.empty() ? (zh ? "未给出" : "not given") : subtask.purpose},
        {"stop_condition", subtask.stop_condition.empty() ? (zh ? "未给出" : "not given") : subtask.stop_condition},
        {"documentation", doc_text},
        {"observation", obs.observation_text},
        {"memory", memory_text},
        {"mode", mode},
    });
}

ActionTurn parse_action_output(std::string_view body, bool fixed_flow)
{
    ActionTurn turn;
    Section section = Section::None;
    std::vector<std::string> action_lines;
    std::string summary;
    auto append = [](std::string& dst, std::string_view s) {
        if (s.empty())
            return;
        if (!dst.empty())
            dst += "\n";
        dst += s;
    };
    auto take = [&](Section s, std::string_view content) {
        switch (s) {
        case Section::Observation: append(turn.observation, content); break;
        case Section::Thought: append(turn.thought, content); break;
        case Section::Action:
            if (!text::trim(content).empty())
                action_lines.push_back(action_line(content));
            break;
        case Section::Summary: append(summary, content); break;
        case Section::Done:
            if (affirmative(content))
                turn.subtask_done = true;
            break;
        case Section::None: break;
        }
    };

    for (const auto& line : text::split_lines(body)) {
        bool heading = false;
        for (const auto& [s, labels] : kSections) {
            if (auto rest = labeled(line, labels)) {
                section = s;
                take(section, *rest);
                heading = true;
                break;
            }
        }
        if (!heading)
            take(section, text::trim(line));
    }

    for (const auto& l : action_lines) {
        if (completion_token(l)) {
            turn.subtask_done = true;
            continue;
        }
        turn.actions.push_back(parse_action(l));
    }
    if (!summary.empty())
        turn.summarization = summary;
    if (turn.actions.empty() && !turn.subtask_done)
        throw Error(ErrorCode::NoActionFound, "no action in response");
    if (turn.actions.size() > 1 && !fixed_flow)
        throw Error(ErrorCode::BatchNotAllowed,
                    std::to_string(turn.actions.size()) + " actions for a subtask without a fixed workflow");
    return turn;
}

SubtaskResult execute_subtask(EpisodeContext& ctx, const SubtaskCall& subtask, SubtaskPosition position)
{
    SubtaskResult result;
    const BasisSubtask* basis = subtask.is_custom ? nullptr : find_subtask(ctx.library, subtask.name);
    const SubtaskDoc doc = basis ? basis->doc : SubtaskDoc{};
    const bool fixed_flow = basis && basis->fixed_flow && ctx.config.allow_batching;

    int parse_failures = 0;
    int env_failures = 0;
    std::vector<std::string> pending_notes;
    std::string last_summary;

    for (int turn = 0; turn < ctx.config.max_turns_per_subtask; ++turn) {
        auto obs = ctx.env.observe(ctx.state);
        if (!pending_notes.empty()) {
            obs.observation_text += "Errors from the previous turn:\n";
            for (const auto& n : pending_notes)
                obs.observation_text += "- " + n + "\n";
            pending_notes.clear();
        }

        backends::BackendRequest req;
        req.role = backends::Role::Action;
        req.prompt = build_action_prompt(ctx.task, subtask, doc, obs, ctx.memories, ctx.prompts, fixed_flow, position);
        req.metadata = {{"task_id", ctx.task.id},
                        {"subtask", std::to_string(position.index)},
                        {"turn", std::to_string(turn)}};

        TranscriptRecord record{"action", position.index, turn, req.prompt, "", {}};
        ++result.turns;
        ++ctx.action_agent_calls;
        ++ctx.api_calls_total;
        try {
            record.response = ctx.backend.complete(req);
        } catch (const std::exception& e) {
            record.errors.push_back(error_note(e));
            ctx.transcripts.push_back(std::move(record));
            result.abort = TerminalReason::BackendError;
            return result;
        }

        ActionTurn parsed;
        try {
            parsed = parse_action_output(record.response, fixed_flow);
        } catch (const Error& e) {
            record.errors.push_back(error_note(e));
            ctx.transcripts.push_back(std::move(record));
            pending_notes.push_back(error_note(e));
            if (++parse_failures >= ctx.config.max_parse_failures) {
                result.abort = TerminalReason::ParseError;
                return result;
            }
            continue;
        }
        parse_failures = 0;

        bool batch_failed = false;
        for (const auto& proposed : parsed.actions) {
            Action action = proposed;
            try {
                if (const auto* target = std::get_if<ClickTarget>(&proposed))
                    action = ctx.env.ground(ctx.state, target->element_name);
                auto before = ctx.env.observe(ctx.state);
                auto [next, outcome] = ctx.env.step(ctx.state, action);
                ctx.state = std::move(next);
                ctx.history.append(std::move(before), action);
                ctx.executed_actions.push_back(action);
                result.actions.push_back(action);
                env_failures = 0;
                if (outcome.terminal()) {
                    result.exited = true;
                    result.done = true;
                    break;
                }
                if (static_cast<int>(ctx.executed_actions.size()) >= ctx.config.max_rounds) {
                    result.abort = TerminalReason::MaxRounds;
                    break;
                }
            } catch (const Error& e) {
                auto note = "turn " + std::to_string(turn) + ": " + render_action(proposed) + ": " + error_note(e);
                record.errors.push_back(error_note(e));
                pending_notes.push_back(note);
                batch_failed = true;
                ++env_failures;
                break;
            }
        }
        ctx.transcripts.push_back(std::move(record));

        if (parsed.summarization)
            last_summary = *parsed.summarization;
        if (result.exited || result.abort)
            break;
        if (batch_failed) {
            if (env_failures >= ctx.config.max_env_failures) {
                result.abort = TerminalReason::EnvError;
                break;
            }
            continue;
        }
        if (parsed.subtask_done) {
            result.done = true;
            break;
        }
    }

    if (!last_summary.empty())
        result.memory = MemoryEntry{render_subtask_call(subtask), last_summary};
    return result;
}

Episode run_episode(const Task& task, const std::vector<sim::AppDefinition>& bundles, const Library& library,
                    backends::CompletionBackend& backend, const PromptSet& prompts, const RunnerConfig& config)
{
    if (config.max_rounds < 1)
        throw Error(ErrorCode::InvalidInput, "max_rounds must be at least 1");
    const auto env = sim::environment_for(task, bundles);
    EpisodeContext ctx{env, task, library, prompts, backend, config, env.reset(), {}, {}, {}, {}, 0, 0};

    Episode ep;
    ep.task_id = task.id;
    auto finish = [&](TerminalReason reason, bool success) {
        ep.executed_actions = std::move(ctx.executed_actions);
        ep.history = std::move(ctx.history);
        ep.transcripts = std::move(ctx.transcripts);
        ep.memories = std::move(ctx.memories);
        ep.action_agent_calls = ctx.action_agent_calls;
        ep.api_calls_total = ctx.api_calls_total;
        ep.terminal_reason = reason;
        ep.success = success;
        return std::move(ep);
    };

    backends::BackendRequest req;
    req.role = backends::Role::Plan;
    req.prompt = build_plan_prompt(task, library, prompts);
    req.metadata = {{"task_id", task.id}, {"subtask", "plan"}, {"turn", "0"}};
    TranscriptRecord record{"plan", -1, 0, req.prompt, "", {}};
    ++ctx.api_calls_total;
    try {
        record.response = backend.complete(req);
    } catch (const std::exception& e) {
        record.errors.push_back(error_note(e));
        ctx.transcripts.push_back(std::move(record));
        return finish(TerminalReason::BackendError, false);
    }
    try {
        ep.plan = parse_plan_output(record.response, library).subtasks;
    } catch (const Error& e) {
        record.errors.push_back(error_note(e));
        ctx.transcripts.push_back(std::move(record));
        return finish(TerminalReason::ParseError, false);
    }
    ctx.transcripts.push_back(std::move(record));

    bool all_done = true;
    const int count = static_cast<int>(ep.plan.size());
    for (int i = 0; i < count; ++i) {
        auto r = execute_subtask(ctx, ep.plan[i], {i, count});
        if (r.memory)
            ctx.memories.push_back(*r.memory);
        all_done = all_done && r.done;
        if (r.abort)
            return finish(*r.abort, false);
        if (r.exited)
            return finish(TerminalReason::Exit, all_done && i + 1 == count);
    }
    return finish(TerminalReason::PlanExhausted, false);
}

std::vector<std::string> audit_episode(const sim::Environment& env, const Episode& episode)
{
    std::vector<std::string> problems;
    const auto& entries = episode.history.entries();
    auto state = env.reset();
    for (std::size_t i = 0; i < episode.executed_actions.size(); ++i) {
        const auto& action = episode.executed_actions[i];
        auto where = "action " + std::to_string(i) + " " + render_action(action);
        auto screen = env.observe(state).screen_id;
        if (i < entries.size() && entries[i].state.screen_id != screen)
            problems.push_back(where + ": recorded on " + entries[i].state.screen_id + " but replayed on " + screen);
        if (const auto* c = std::get_if<Click>(&action))
            if (!env.element_at(state, c->x, c->y))
                problems.push_back(where + ": no visible element at the click point on " + screen);
        try {
            state = env.step(state, action).first;
        } catch (const Error& e) {
            problems.push_back(where + ": " + e.what());
            break;
        }
    }
    if (entries.size() != episode.executed_actions.size())
        problems.push_back("history has " + std::to_string(entries.size()) + " entries for " +
                           std::to_string(episode.executed_actions.size()) + " actions");
    return problems;
}

}  // namespace chop::agents
