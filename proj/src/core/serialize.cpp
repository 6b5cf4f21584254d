// SPDX-License-Identifier: Apache-2.0
#include "chop/core/serialize.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "chop/core/text.hpp"
#include "chop/error.hpp"

namespace chop::io {

namespace fs = std::filesystem;

std::string read_file(const fs::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw Error(ErrorCode::IoError, "cannot open '" + path.string() + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const fs::path& path, std::string_view contents)
{
    if (path.has_parent_path())
        fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out)
        throw Error(ErrorCode::IoError, "cannot write '" + path.string() + "'");
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    if (!out)
        throw Error(ErrorCode::IoError, "short write to '" + path.string() + "'");
}

json parse_json_file(const fs::path& path)
{
    auto contents = read_file(path);
    if (text::trim(contents).empty())
        throw Error(ErrorCode::SchemaError, path.string() + ": empty file");
    try {
        return json::parse(contents);
    } catch (const json::parse_error& e) {
        throw Error(ErrorCode::SchemaError, path.string() + ": " + e.what());
    }
}

std::string dump(const json& j)
{
    return j.dump(2) + "\n";
}

namespace {

std::string at(const std::string& path, std::string_view key)
{
    return path.empty() ? std::string(key) : path + "." + std::string(key);
}

std::string index(const std::string& path, std::size_t i)
{
    return path + "[" + std::to_string(i) + "]";
}

Action action_at(const json& j, const std::string& path)
{
    if (!j.is_string())
        throw Error(ErrorCode::SchemaError, path + ": expected an action string");
    try {
        return parse_action(j.get<std::string>());
    } catch (const Error& e) {
        throw Error(ErrorCode::SchemaError, path + ": " + e.what());
    }
}

std::vector<Action> action_list(const json& j, std::string_view key, const std::string& path)
{
    const auto& arr = require(j, key, path);
    if (!arr.is_array())
        throw Error(ErrorCode::SchemaError, at(path, key) + ": expected an array");
    std::vector<Action> out;
    for (std::size_t i = 0; i < arr.size(); ++i)
        out.push_back(action_at(arr[i], index(at(path, key), i)));
    return out;
}

const json& array_root(const json& root, std::string_view key, const std::string& what)
{
    if (root.is_array())
        return root;
    if (root.is_object() && root.contains(std::string(key)) && root[std::string(key)].is_array())
        return root[std::string(key)];
    throw Error(ErrorCode::SchemaError, what + ": expected an array or an object with '" + std::string(key) + "'");
}

json call_to_json(const SubtaskCall& c)
{
    json j;
    j["name"] = c.name;
    j["parameters"] = c.parameters;
    j["is_custom"] = c.is_custom;
    j["purpose"] = c.purpose;
    j["stop_condition"] = c.stop_condition;
    return j;
}

SubtaskCall call_from_json(const json& j, const std::string& path)
{
    SubtaskCall c;
    c.name = require_string(j, "name", path);
    c.parameters = string_list(j, "parameters", path, false);
    c.is_custom = optional_bool(j, "is_custom", false, path);
    c.purpose = optional_string(j, "purpose", "", path);
    c.stop_condition = optional_string(j, "stop_condition", "", path);
    return c;
}

}  // namespace

const json& require(const json& j, std::string_view key, const std::string& path)
{
    if (!j.is_object())
        throw Error(ErrorCode::SchemaError, (path.empty() ? std::string("<root>") : path) + ": expected an object");
    auto it = j.find(std::string(key));
    if (it == j.end())
        throw Error(ErrorCode::SchemaError, at(path, key) + ": missing field");
    return *it;
}

std::string require_string(const json& j, std::string_view key, const std::string& path)
{
    const auto& v = require(j, key, path);
    if (!v.is_string())
        throw Error(ErrorCode::SchemaError, at(path, key) + ": expected a string");
    return v.get<std::string>();
}

int require_int(const json& j, std::string_view key, const std::string& path)
{
    const auto& v = require(j, key, path);
    if (!v.is_number_integer())
        throw Error(ErrorCode::SchemaError, at(path, key) + ": expected an integer");
    return v.get<int>();
}

bool optional_bool(const json& j, std::string_view key, bool fallback, const std::string& path)
{
    auto it = j.find(std::string(key));
    if (it == j.end())
        return fallback;
    if (!it->is_boolean())
        throw Error(ErrorCode::SchemaError, at(path, key) + ": expected a boolean");
    return it->get<bool>();
}

std::string optional_string(const json& j, std::string_view key, const std::string& fallback, const std::string& path)
{
    auto it = j.find(std::string(key));
    if (it == j.end())
        return fallback;
    if (!it->is_string())
        throw Error(ErrorCode::SchemaError, at(path, key) + ": expected a string");
    return it->get<std::string>();
}

std::vector<std::string> string_list(const json& j, std::string_view key, const std::string& path, bool required)
{
    auto it = j.find(std::string(key));
    if (it == j.end()) {
        if (required)
            throw Error(ErrorCode::SchemaError, at(path, key) + ": missing field");
        return {};
    }
    if (!it->is_array())
        throw Error(ErrorCode::SchemaError, at(path, key) + ": expected an array of strings");
    std::vector<std::string> out;
    for (std::size_t i = 0; i < it->size(); ++i) {
        if (!(*it)[i].is_string())
            throw Error(ErrorCode::SchemaError, index(at(path, key), i) + ": expected a string");
        out.push_back((*it)[i].get<std::string>());
    }
    return out;
}

// --- tasks -----------------------------------------------------------------

json to_json(const Task& task)
{
    json j;
    j["id"] = task.id;
    j["instruction"] = task.instruction;
    j["language"] = to_string(task.language);
    j["difficulty"] = to_string(task.difficulty);
    j["app_id"] = task.app_id;
    j["apps"] = task.apps;
    j["golden_actions"] = render_actions(task.golden_actions);
    if (task.golden_plan) {
        json plan = json::array();
        for (const auto& c : *task.golden_plan)
            plan.push_back(render_subtask_call(c));
        j["golden_plan"] = plan;
    }
    return j;
}

Task task_from_json(const json& j, const std::string& path)
{
    Task t;
    t.id = require_string(j, "id", path);
    t.instruction = require_string(j, "instruction", path);
    try {
        t.language = parse_language(optional_string(j, "language", "en", path));
        t.difficulty = parse_difficulty(require_string(j, "difficulty", path));
    } catch (const Error& e) {
        if (e.code() == ErrorCode::SchemaError)
            throw;
        throw Error(ErrorCode::SchemaError, path + ": " + e.what());
    }
    t.app_id = require_string(j, "app_id", path);
    t.apps = string_list(j, "apps", path, false);
    if (t.apps.empty())
        t.apps.push_back(t.app_id);
    t.golden_actions = action_list(j, "golden_actions", path);
    if (j.contains("golden_plan")) {
        auto lines = string_list(j, "golden_plan", path);
        std::vector<SubtaskCall> plan;
        for (std::size_t i = 0; i < lines.size(); ++i) {
            try {
                plan.push_back(parse_subtask_call(lines[i]));
            } catch (const Error& e) {
                throw Error(ErrorCode::SchemaError, index(at(path, "golden_plan"), i) + ": " + e.what());
            }
        }
        t.golden_plan = std::move(plan);
    }
    try {
        validate_task(t);
    } catch (const Error& e) {
        throw Error(ErrorCode::SchemaError, path + ": " + e.what());
    }
    return t;
}

std::vector<Task> load_tasks(const fs::path& path)
{
    auto root = parse_json_file(path);
    const auto& arr = array_root(root, "tasks", path.string());
    std::vector<Task> tasks;
    for (std::size_t i = 0; i < arr.size(); ++i)
        tasks.push_back(task_from_json(arr[i], index("tasks", i)));
    return tasks;
}

void save_tasks(const fs::path& path, const std::vector<Task>& tasks)
{
    json arr = json::array();
    for (const auto& t : tasks)
        arr.push_back(to_json(t));
    json root;
    root["tasks"] = arr;
    write_file(path, dump(root));
}

// --- mining corpus ----------------------------------------------------------

json to_json(const TrajectoryRecord& record)
{
    json j;
    j["id"] = record.id;
    j["instruction"] = record.instruction;
    j["app_id"] = record.app_id;
    json steps = json::array();
    for (const auto& s : record.steps)
        steps.push_back(json{{"action", render_action(s.action)}, {"thought", s.thought}});
    j["steps"] = steps;
    return j;
}

TrajectoryRecord trajectory_from_json(const json& j, const std::string& path)
{
    TrajectoryRecord r;
    r.id = require_string(j, "id", path);
    r.instruction = require_string(j, "instruction", path);
    r.app_id = optional_string(j, "app_id", "", path);
    const auto& steps = require(j, "steps", path);
    if (!steps.is_array())
        throw Error(ErrorCode::SchemaError, at(path, "steps") + ": expected an array");
    for (std::size_t i = 0; i < steps.size(); ++i) {
        auto p = index(at(path, "steps"), i);
        AnnotatedStep step{action_at(require(steps[i], "action", p), at(p, "action")),
                           optional_string(steps[i], "thought", "", p)};
        r.steps.push_back(std::move(step));
    }
    return r;
}

std::vector<TrajectoryRecord> load_corpus(const fs::path& path)
{
    auto root = parse_json_file(path);
    const auto& arr = array_root(root, "records", path.string());
    std::vector<TrajectoryRecord> out;
    for (std::size_t i = 0; i < arr.size(); ++i)
        out.push_back(trajectory_from_json(arr[i], index("records", i)));
    return out;
}

// --- library ---------------------------------------------------------------

json to_json(const BasisSubtask& s)
{
    json j;
    j["name"] = s.name;
    j["arity"] = s.arity;
    j["parameter_roles"] = s.parameter_roles;
    j["fixed_flow"] = s.fixed_flow;
    j["frequency"] = s.frequency;
    j["description"] = s.description;
    j["verbs"] = s.verbs;
    j["doc"] = json{{"standardized_process", s.doc.standardized_process},
                    {"boundary_conditions", s.doc.boundary_conditions}};
    return j;
}

BasisSubtask subtask_from_json(const json& j, const std::string& path)
{
    BasisSubtask s;
    s.name = require_string(j, "name", path);
    s.arity = require_int(j, "arity", path);
    s.parameter_roles = string_list(j, "parameter_roles", path);
    s.fixed_flow = optional_bool(j, "fixed_flow", false, path);
    s.frequency = j.contains("frequency") ? require_int(j, "frequency", path) : 0;
    s.description = optional_string(j, "description", "", path);
    s.verbs = string_list(j, "verbs", path, false);
    const auto& doc = require(j, "doc", path);
    s.doc.standardized_process = string_list(doc, "standardized_process", at(path, "doc"));
    s.doc.boundary_conditions = string_list(doc, "boundary_conditions", at(path, "doc"), false);
    return s;
}

json library_to_json(const Library& library)
{
    json arr = json::array();
    for (const auto& s : library)
        arr.push_back(to_json(s));
    json root;
    root["version"] = 1;
    root["subtasks"] = arr;
    return root;
}

Library library_from_json(const json& j, const std::string& path)
{
    const auto& arr = array_root(j, "subtasks", path);
    Library lib;
    for (std::size_t i = 0; i < arr.size(); ++i)
        lib.push_back(subtask_from_json(arr[i], index(at(path, "subtasks"), i)));
    try {
        validate_library(lib);
    } catch (const Error& e) {
        throw Error(ErrorCode::SchemaError, path + ": " + e.what());
    }
    return lib;
}

Library load_library(const fs::path& path)
{
    return library_from_json(parse_json_file(path), path.string());
}

void save_library(const fs::path& path, const Library& library)
{
    write_file(path, dump(library_to_json(library)));
}

// --- episodes --------------------------------------------------------------

json to_json(const Episode& e)
{
    json j;
    j["task_id"] = e.task_id;
    j["success"] = e.success;
    j["terminal_reason"] = to_string(e.terminal_reason);
    j["action_agent_calls"] = e.action_agent_calls;
    j["api_calls_total"] = e.api_calls_total;
    json plan = json::array();
    for (const auto& c : e.plan)
        plan.push_back(call_to_json(c));
    j["plan"] = plan;
    j["executed_actions"] = render_actions(e.executed_actions);
    json history = json::array();
    for (const auto& h : e.history.entries()) {
        history.push_back(json{{"app_id", h.state.app_id},
                               {"screen_id", h.state.screen_id},
                               {"visible_elements", h.state.visible_elements},
                               {"observation", h.state.observation_text},
                               {"action", render_action(h.action)}});
    }
    j["history"] = history;
    json memories = json::array();
    for (const auto& m : e.memories)
        memories.push_back(json{{"subtask", m.subtask_name}, {"summary", m.summary}});
    j["memories"] = memories;
    json transcripts = json::array();
    for (const auto& t : e.transcripts) {
        transcripts.push_back(json{{"role", t.role},
                                   {"subtask_index", t.subtask_index},
                                   {"turn", t.turn},
                                   {"request", t.request},
                                   {"response", t.response},
                                   {"errors", t.errors}});
    }
    j["transcripts"] = transcripts;
    return j;
}

Episode episode_from_json(const json& j, const std::string& path)
{
    Episode e;
    e.task_id = require_string(j, "task_id", path);
    e.success = optional_bool(j, "success", false, path);
    try {
        e.terminal_reason = parse_terminal_reason(require_string(j, "terminal_reason", path));
    } catch (const Error& err) {
        throw Error(ErrorCode::SchemaError, path + ": " + err.what());
    }
    e.action_agent_calls = require_int(j, "action_agent_calls", path);
    e.api_calls_total = require_int(j, "api_calls_total", path);
    const auto& plan = require(j, "plan", path);
    for (std::size_t i = 0; i < plan.size(); ++i)
        e.plan.push_back(call_from_json(plan[i], index(at(path, "plan"), i)));
    e.executed_actions = action_list(j, "executed_actions", path);
    if (j.contains("history")) {
        const auto& history = j["history"];
        for (std::size_t i = 0; i < history.size(); ++i) {
            auto p = index(at(path, "history"), i);
            ScreenState s{require_string(history[i], "screen_id", p), require_string(history[i], "app_id", p),
                          string_list(history[i], "visible_elements", p),
                          optional_string(history[i], "observation", "", p)};
            e.history.append(std::move(s), action_at(require(history[i], "action", p), at(p, "action")));
        }
    }
    if (j.contains("memories")) {
        for (std::size_t i = 0; i < j["memories"].size(); ++i) {
            auto p = index(at(path, "memories"), i);
            e.memories.push_back({require_string(j["memories"][i], "subtask", p),
                                  require_string(j["memories"][i], "summary", p)});
        }
    }
    if (j.contains("transcripts")) {
        for (std::size_t i = 0; i < j["transcripts"].size(); ++i) {
            const auto& t = j["transcripts"][i];
            auto p = index(at(path, "transcripts"), i);
            TranscriptRecord r;
            r.role = require_string(t, "role", p);
            r.subtask_index = require_int(t, "subtask_index", p);
            r.turn = require_int(t, "turn", p);
            r.request = require_string(t, "request", p);
            r.response = require_string(t, "response", p);
            r.errors = string_list(t, "errors", p, false);
            e.transcripts.push_back(std::move(r));
        }
    }
    return e;
}

Episode load_episode(const fs::path& path)
{
    return episode_from_json(parse_json_file(path), path.string());
}

void save_episode(const fs::path& path, const Episode& episode)
{
    write_file(path, dump(to_json(episode)));
}

std::vector<Episode> load_episodes(const fs::path& dir)
{
    if (!fs::is_directory(dir))
        throw Error(ErrorCode::IoError, "not a directory: '" + dir.string() + "'");
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(dir))
        if (entry.is_regular_file() && entry.path().extension() == ".json")
            files.push_back(entry.path());
    std::sort(files.begin(), files.end());
    std::vector<Episode> out;
    for (const auto& f : files)
        out.push_back(load_episode(f));
    return out;
}

}  // namespace chop::io
