// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <functional>

#include "chop/agents/agents.hpp"
#include "chop/backends/scripted.hpp"
#include "chop/core/serialize.hpp"
#include "chop/error.hpp"

using namespace chop;
using namespace chop::agents;
using backends::Role;

namespace {

const std::string kData = CHOP_DATA_DIR;

const std::vector<sim::AppDefinition>& bundles()
{
    static const auto b = sim::load_app_bundles(kData + "/apps");
    return b;
}

const Library& mined()
{
    static const auto lib = io::load_library(kData + "/library.json");
    return lib;
}

const PromptSet& prompts_en()
{
    static const auto p = PromptSet::load(kData + "/prompts", Language::En);
    return p;
}

// The ten mined subtasks plus the two navigation subtasks used in the paper's
// custom-subtask examples.
Library paper_library()
{
    Library lib = mined();
    lib.push_back({"Find App", 1, {"app name"}, {{"Open the app drawer", "Click the app icon"}, {}}, false, 0,
                   "Open the named app.", {}});
    lib.push_back({"Back Home", 0, {}, {{"Press BACK until the home screen shows"}, {}}, false, 0,
                   "Return to the home screen.", {}});
    return lib;
}

Task task(const std::string& id, const std::string& app = "mail")
{
    Task t;
    t.id = id;
    t.instruction = "Search mail for Bob";
    t.app_id = app;
    t.apps = {app};
    t.golden_actions = {Exit{}};
    return t;
}

// Records every request before delegating to a scripted backend.
struct Capture : backends::CompletionBackend {
    backends::ScriptedBackend inner;
    std::vector<backends::BackendRequest> requests;
    std::string complete(const backends::BackendRequest& r) override
    {
        requests.push_back(r);
        return inner.complete(r);
    }
    int count(Role role) const
    {
        return static_cast<int>(std::count_if(requests.begin(), requests.end(),
                                              [&](const auto& r) { return r.role == role; }));
    }
};

std::string turn(const std::string& actions, bool done, const std::string& summary = "")
{
    std::string s = "Observation: screen\nThought: next\nAction:\n" + actions + "\n";
    if (!summary.empty())
        s += "Summary: " + summary + "\n";
    return s + "Done: " + (done ? "yes" : "no");
}

ErrorCode code_of(const std::function<void()>& fn)
{
    try {
        fn();
    } catch (const Error& e) {
        return e.code();
    }
    FAIL("expected chop::Error");
    return ErrorCode::IoError;
}

}  // namespace

TEST_SUITE("agents")
{
    TEST_CASE("plan output with custom subtasks")
    {
        auto lib = paper_library();
        auto first = parse_plan_output(
            "1. Find App (Bilibili)\n"
            "2. Search Item (Stephen Curry videos)\n"
            "3. Open Video (Stephen Curry)\n"
            "4. Access Comments (Stephen Curry video)\n"
            "5. Post Comment ('Oh, chef, your basketball spirit has always inspired me.')\n",
            lib);
        REQUIRE(first.subtasks.size() == 5);
        std::vector<bool> custom;
        for (const auto& s : first.subtasks)
            custom.push_back(s.is_custom);
        CHECK(custom == std::vector<bool>{false, false, true, true, true});
        CHECK(first.subtasks[1].parameters == std::vector<std::string>{"Stephen Curry videos"});
        CHECK(first.subtasks[4].parameters
              == std::vector<std::string>{"Oh, chef, your basketball spirit has always inspired me."});

        auto second = parse_plan_output(
            "1. Find App (Calendar)\n"
            "2. Check Date (today's date)\n"
            "3. Back Home\n"
            "4. Find App (Notepad)\n"
            "5. Create New Note (Today is [today's date])\n",
            lib);
        REQUIRE(second.subtasks.size() == 5);
        CHECK(second.subtasks[1].is_custom);
        CHECK(second.subtasks[1].parameters == std::vector<std::string>{"today's date"});
        CHECK_FALSE(second.subtasks[2].is_custom);
        CHECK(second.subtasks[2].parameters.empty());
        CHECK(second.subtasks[4].parameters == std::vector<std::string>{"Today is [today's date]"});
    }

    TEST_CASE("plan parsing details")
    {
        const auto& lib = mined();
        auto p = parse_plan_output("Plan:\n**1. search item (Bob, Alice)**\nPurpose: find Bob\nStop: results shown\n"
                                   "2) Interact (Video, Like)\n目的：点赞\n",
                                   lib);
        REQUIRE(p.subtasks.size() == 2);
        CHECK(p.subtasks[0].name == "Search Item");
        CHECK(p.subtasks[0].parameters == std::vector<std::string>{"Bob, Alice"});
        CHECK(p.subtasks[0].purpose == "find Bob");
        CHECK(p.subtasks[0].stop_condition == "results shown");
        CHECK(p.subtasks[1].purpose == "点赞");
        CHECK(code_of([&] { parse_plan_output("1. Interact (Video)", lib); }) == ErrorCode::ArityMismatch);
        CHECK(code_of([&] { parse_plan_output("I will search.", lib); }) == ErrorCode::EmptyPlan);
    }

    TEST_CASE("plan prompt lists the library in output-format form")
    {
        auto text = render_library_for_prompt(paper_library());
        CHECK(text.find("- Search Item (search term): Click on the search bar") != std::string::npos);
        CHECK(text.find("Output format is \"Interact (XXX, YYY)\".") != std::string::npos);
        CHECK(text.find("Output format is \"Back Home\".") != std::string::npos);
        auto prompt = build_plan_prompt(task("t"), mined(), prompts_en());
        CHECK(prompt.find("Search mail for Bob") != std::string::npos);
        CHECK(code_of([] { build_plan_prompt(task("t"), {}, prompts_en()); }) == ErrorCode::InvalidInput);
    }

    TEST_CASE("action output parsing")
    {
        auto t = parse_action_output(turn("1. CLICK(Search Bar)\n2. TYPE(Bob)\n3. CLICK(Search)", true, "found"), true);
        CHECK(t.actions.size() == 3);
        CHECK(t.subtask_done);
        CHECK(t.summarization == std::optional<std::string>("found"));
        CHECK(t.observation == "screen");
        CHECK(code_of([] { parse_action_output(turn("CLICK(A)\nCLICK(B)", false), false); }) == ErrorCode::BatchNotAllowed);
        CHECK(code_of([] { parse_action_output("Thought: hmm", false); }) == ErrorCode::NoActionFound);
        CHECK(code_of([] { parse_action_output(turn("JUMP(3)", false), false); }) == ErrorCode::UnknownActionName);

        auto done = parse_action_output("Thought: all set\nAction: DONE", false);
        CHECK(done.actions.empty());
        CHECK(done.subtask_done);

        auto zh = parse_action_output("观察：收件箱\n思考：点击\n动作：CLICK(Compose)\n总结：已打开\n完成：是", false);
        CHECK(zh.actions == std::vector<Action>{ClickTarget{"Compose"}});
        CHECK(zh.subtask_done);
        CHECK(zh.summarization == std::optional<std::string>("已打开"));
    }

    TEST_CASE("action prompt fills documentation, memory and position")
    {
        SubtaskCall call = parse_subtask_call("Search Item (Bob)");
        sim::Environment env(bundles()[0]);
        auto obs = env.observe(env.reset());
        auto last = build_action_prompt(task("t"), call, find_subtask(mined(), "Search Item")->doc, obs,
                                        {{"Open Section (Inbox)", "inbox has 2 messages"}}, prompts_en(), true, {1, 2});
        CHECK(last.find("Standardized process:") != std::string::npos);
        CHECK(last.find("inbox has 2 messages") != std::string::npos);
        CHECK(last.find("finish the task with EXIT") != std::string::npos);
        CHECK(last.find("one response") != std::string::npos);
        auto custom = build_action_prompt(task("t"), call, {}, obs, {}, prompts_en(), false, {0, 2});
        CHECK(custom.find("none (custom subtask)") != std::string::npos);
        CHECK(custom.find("finish the task with EXIT") == std::string::npos);
        CHECK(custom.find("{{") == std::string::npos);
    }

    TEST_CASE("successful episode grounds named clicks and keeps memory")
    {
        Capture b;
        b.inner.add(Role::Plan, "t", {"1. Search Item (Bob)\n2. View Content (Bob conversation)"});
        b.inner.add(Role::Action, "t", {turn("CLICK(Search Bar)\nTYPE(Bob)\nCLICK(Search)", true, "results for Bob")});
        b.inner.add(Role::Action, "t", {turn("CLICK(Bob conversation)", false)});
        b.inner.add(Role::Action, "t", {turn("EXIT", true)});
        auto ep = run_episode(task("t"), bundles(), mined(), b, prompts_en());
        CHECK(ep.success);
        CHECK(ep.terminal_reason == TerminalReason::Exit);
        REQUIRE(ep.executed_actions.size() == 5);
        CHECK(std::holds_alternative<Click>(ep.executed_actions[0]));
        CHECK(ep.executed_actions[1] == Action{Type{"Bob"}});
        CHECK(ep.history.size() == 5);
        CHECK(ep.history.entries()[0].state.screen_id == "inbox");
        CHECK(ep.history.entries()[3].state.screen_id == "results?q=Bob");
        CHECK(ep.action_agent_calls == 3);
        CHECK(ep.api_calls_total == 4);
        CHECK(b.count(Role::Plan) == 1);
        REQUIRE(ep.memories.size() == 1);
        CHECK(ep.memories[0].summary == "results for Bob");
        CHECK(b.requests.back().prompt.find("results for Bob") != std::string::npos);

        sim::Environment env(bundles()[0]);
        CHECK(audit_episode(sim::environment_for(task("t"), bundles()), ep).empty());
        auto tampered = ep;
        tampered.executed_actions[2] = Click{5, 2390};
        CHECK_FALSE(audit_episode(sim::environment_for(task("t"), bundles()), tampered).empty());
    }

    TEST_CASE("batching is refused without a fixed workflow or when disabled")
    {
        Capture b;
        b.inner.add(Role::Plan, "t", {"1. Search Item (Bob)"});
        b.inner.add(Role::Action, "t", {turn("CLICK(Search Bar)\nTYPE(Bob)", false), true});
        RunnerConfig cfg;
        cfg.allow_batching = false;
        auto ep = run_episode(task("t"), bundles(), mined(), b, prompts_en(), cfg);
        CHECK(ep.terminal_reason == TerminalReason::ParseError);
        CHECK(ep.executed_actions.empty());
        CHECK(ep.action_agent_calls == 2);
        CHECK(ep.transcripts.back().errors.at(0).rfind("BatchNotAllowed", 0) == 0);
        CHECK(b.requests[2].prompt.find("BatchNotAllowed") != std::string::npos);
    }

    TEST_CASE("consecutive rejected actions end the episode")
    {
        Capture b;
        b.inner.add(Role::Plan, "t", {"1. Open Section (Nowhere)"});
        b.inner.add(Role::Action, "t", {turn("CLICK(Nowhere)", false), true});
        auto ep = run_episode(task("t"), bundles(), mined(), b, prompts_en());
        CHECK(ep.terminal_reason == TerminalReason::EnvError);
        CHECK(ep.action_agent_calls == 3);
        CHECK(ep.executed_actions.empty());
        CHECK(b.requests[2].prompt.find("NoSuchElement") != std::string::npos);
    }

    TEST_CASE("a successful action resets the failure count")
    {
        Capture b;
        b.inner.add(Role::Plan, "t", {"1. Open Section (Compose)"});
        for (int i = 0; i < 2; ++i)
            b.inner.add(Role::Action, "t", {turn("CLICK(Nowhere)", false)});
        b.inner.add(Role::Action, "t", {turn("WAIT(1)", false)});
        for (int i = 0; i < 2; ++i)
            b.inner.add(Role::Action, "t", {turn("CLICK(Nowhere)", false)});
        b.inner.add(Role::Action, "t", {turn("EXIT", true)});
        auto ep = run_episode(task("t"), bundles(), mined(), b, prompts_en());
        CHECK(ep.terminal_reason == TerminalReason::Exit);
        CHECK(ep.success);
        CHECK(ep.executed_actions.size() == 2);
    }

    TEST_CASE("looping agents stop at exactly twenty actions")
    {
        Capture b;
        b.inner.add(Role::Plan, "t", {"1. View Content (Inbox)\n2. View Content (Folders)\n3. View Content (Spam)"});
        b.inner.add(Role::Action, "t", {turn("WAIT(1)", false), true});
        auto ep = run_episode(task("t"), bundles(), mined(), b, prompts_en());
        CHECK(ep.terminal_reason == TerminalReason::MaxRounds);
        CHECK(ep.executed_actions.size() == 20);
        CHECK_FALSE(ep.success);

        RunnerConfig cfg;
        cfg.max_rounds = 5;
        Capture c;
        c.inner.add(Role::Plan, "t", {"1. View Content (Inbox)"});
        c.inner.add(Role::Action, "t", {turn("WAIT(1)", false), true});
        auto short_ep = run_episode(task("t"), bundles(), mined(), c, prompts_en(), cfg);
        CHECK(short_ep.executed_actions.size() == 5);
        CHECK(short_ep.terminal_reason == TerminalReason::MaxRounds);
    }

    TEST_CASE("other terminal reasons")
    {
        SUBCASE("plan exhausted")
        {
            Capture b;
            b.inner.add(Role::Plan, "t", {"1. Open Section (Compose)"});
            b.inner.add(Role::Action, "t", {turn("CLICK(Compose)", true)});
            auto ep = run_episode(task("t"), bundles(), mined(), b, prompts_en());
            CHECK(ep.terminal_reason == TerminalReason::PlanExhausted);
            CHECK_FALSE(ep.success);
        }
        SUBCASE("backend failure")
        {
            Capture b;
            b.inner.add(Role::Plan, "t", {"1. Open Section (Compose)"});
            auto ep = run_episode(task("t"), bundles(), mined(), b, prompts_en());
            CHECK(ep.terminal_reason == TerminalReason::BackendError);
            CHECK(ep.transcripts.back().errors.at(0).rfind("ScriptExhausted", 0) == 0);
        }
        SUBCASE("unparseable plan")
        {
            Capture b;
            b.inner.add(Role::Plan, "t", {"no plan here"});
            auto ep = run_episode(task("t"), bundles(), mined(), b, prompts_en());
            CHECK(ep.terminal_reason == TerminalReason::ParseError);
            CHECK(ep.api_calls_total == 1);
        }
        SUBCASE("exit before the last subtask")
        {
            Capture b;
            b.inner.add(Role::Plan, "t", {"1. Open Section (Compose)\n2. View Content (Sent)"});
            b.inner.add(Role::Action, "t", {turn("EXIT", true)});
            auto ep = run_episode(task("t"), bundles(), mined(), b, prompts_en());
            CHECK(ep.terminal_reason == TerminalReason::Exit);
            CHECK_FALSE(ep.success);
        }
        SUBCASE("a subtask that never reports completion")
        {
            Capture b;
            b.inner.add(Role::Plan, "t", {"1. Open Section (Compose)\n2. View Content (Sent)"});
            RunnerConfig cfg;
            cfg.max_turns_per_subtask = 1;
            b.inner.add(Role::Action, "t", {turn("WAIT(1)", false)});
            b.inner.add(Role::Action, "t", {turn("EXIT", true)});
            auto ep = run_episode(task("t"), bundles(), mined(), b, prompts_en(), cfg);
            CHECK(ep.terminal_reason == TerminalReason::Exit);
            CHECK_FALSE(ep.success);
        }
    }

    TEST_CASE("requests carry routing metadata")
    {
        Capture b;
        b.inner.add(Role::Plan, "t", {"1. Open Section (Compose)"});
        b.inner.add(Role::Action, "t", {turn("CLICK(Compose)", false)});
        b.inner.add(Role::Action, "t", {turn("EXIT", true)});
        run_episode(task("t"), bundles(), mined(), b, prompts_en());
        REQUIRE(b.requests.size() == 3);
        CHECK(b.requests[0].metadata.at("subtask") == "plan");
        CHECK(b.requests[1].metadata.at("subtask") == "0");
        CHECK(b.requests[2].metadata.at("turn") == "1");
        CHECK(b.requests[2].metadata.at("task_id") == "t");
    }
}
