// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <functional>
#include <random>

#include "chop/core/action.hpp"
#include "chop/core/prompt_template.hpp"
#include "chop/core/serialize.hpp"
#include "chop/core/text.hpp"
#include "chop/core/types.hpp"
#include "chop/error.hpp"

using namespace chop;

namespace {

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

std::string random_word(std::mt19937& rng)
{
    static const char* words[] = {"Search", "Bar", "Send", "ok", "Alice", "new", "note", "Dark", "mode", "7a", "x"};
    std::uniform_int_distribution<int> pick(0, 10);
    return words[pick(rng)];
}

Action random_action(std::mt19937& rng)
{
    std::uniform_int_distribution<int> kind(0, 6), coord(-50, 3000), len(1, 3);
    switch (kind(rng)) {
    case 0: return Click{coord(rng), coord(rng)};
    case 1: {
        std::string name = random_word(rng);
        for (int i = 1, n = len(rng); i < n; ++i)
            name += " " + random_word(rng);
        return ClickTarget{name};
    }
    case 2: return Scroll{static_cast<Direction>(kind(rng) % 4)};
    case 3: {
        std::string t = random_word(rng);
        for (int i = 1, n = len(rng); i < n; ++i)
            t += (i % 2 ? ", " : " ") + random_word(rng);
        return Type{t};
    }
    case 4: return Back{};
    case 5: return Exit{};
    default: return Wait{1 + coord(rng) % 30 + 50};
    }
}

}  // namespace

TEST_SUITE("core")
{
    TEST_CASE("action grammar parses every form")
    {
        CHECK(parse_action("CLICK(200, 300)") == Action{Click{200, 300}});
        CHECK(parse_action("click(200,300)") == Action{Click{200, 300}});
        CHECK(parse_action("CLICK(Search Bar)") == Action{ClickTarget{"Search Bar"}});
        CHECK(parse_action("Scroll(DOWN)") == Action{Scroll{Direction::Down}});
        CHECK(parse_action("TYPE(hello, world)") == Action{Type{"hello, world"}});
        CHECK(parse_action(" back ") == Action{Back{}});
        CHECK(parse_action("EXIT()") == Action{Exit{}});
        CHECK(parse_action("WAIT(3)") == Action{Wait{3}});
    }

    TEST_CASE("action grammar rejects malformed input with typed errors")
    {
        CHECK(code_of([] { parse_action("TAP(1,2)"); }) == ErrorCode::UnknownActionName);
        CHECK(code_of([] { parse_action(""); }) == ErrorCode::UnknownActionName);
        CHECK(code_of([] { parse_action("CLICK(1)"); }) == ErrorCode::ArityMismatch);
        CHECK(code_of([] { parse_action("CLICK(1,2,3)"); }) == ErrorCode::ArityMismatch);
        CHECK(code_of([] { parse_action("BACK(now)"); }) == ErrorCode::ArityMismatch);
        CHECK(code_of([] { parse_action("TYPE"); }) == ErrorCode::ArityMismatch);
        CHECK(code_of([] { parse_action("SCROLL(sideways)"); }) == ErrorCode::BadAttribute);
        CHECK(code_of([] { parse_action("WAIT(0)"); }) == ErrorCode::BadAttribute);
        CHECK(code_of([] { parse_action("CLICK(1, y)"); }) == ErrorCode::BadAttribute);
        CHECK(code_of([] { parse_action("CLICK(1, 2"); }) == ErrorCode::BadAttribute);
    }

    TEST_CASE("error text carries the code name")
    {
        Error e(ErrorCode::NoSuchElement, "Send");
        CHECK(std::string(e.what()) == "NoSuchElement: Send");
    }

    TEST_CASE("render then parse is the identity on random actions")
    {
        std::mt19937 rng(7);
        for (int i = 0; i < 2000; ++i) {
            Action a = random_action(rng);
            std::string s = render_action(a);
            CAPTURE(s);
            CHECK(parse_action(s) == a);
            CHECK(render_action(parse_action(s)) == s);
        }
    }

    TEST_CASE("actions_equal is reflexive and symmetric")
    {
        ElementRegistry reg;
        reg.add("Search Bar", {60, 180, 800, 300});
        reg.add("Send", {820, 180, 1020, 300});
        EqualityPolicy policy;
        policy.registry = &reg;
        std::mt19937 rng(11);
        for (int i = 0; i < 1000; ++i) {
            Action a = random_action(rng), b = random_action(rng);
            CHECK(actions_equal(a, a, policy));
            CHECK(actions_equal(a, b, policy) == actions_equal(b, a, policy));
        }
    }

    TEST_CASE("named and coordinate clicks unify through the registry")
    {
        ElementRegistry reg;
        reg.add("Search Bar", {60, 180, 800, 300});
        reg.add("{query} Best Seller", {60, 360, 1020, 490});
        EqualityPolicy policy;
        policy.registry = &reg;
        CHECK(actions_equal(Click{430, 240}, ClickTarget{"search bar"}, policy));
        CHECK(actions_equal(ClickTarget{" Search Bar"}, Click{60, 180}, policy));
        CHECK_FALSE(actions_equal(Click{10, 10}, ClickTarget{"Search Bar"}, policy));
        CHECK(actions_equal(Click{100, 400}, ClickTarget{"Lamp Best Seller"}, policy));
        CHECK(actions_equal(Click{100, 200}, Click{700, 290}, policy));
        CHECK_FALSE(actions_equal(Click{100, 200}, Click{700, 290}, EqualityPolicy{}));
        EqualityPolicy blind = policy;
        blind.ground_aware = false;
        CHECK_FALSE(actions_equal(Click{430, 240}, ClickTarget{"Search Bar"}, blind));
        CHECK(actions_equal(Type{"Hello "}, Type{"hello"}, policy));
        EqualityPolicy strict;
        strict.case_fold = false;
        strict.trim = false;
        CHECK_FALSE(actions_equal(Type{"Hello "}, Type{"hello"}, strict));
    }

    TEST_CASE("rect centre lies inside the rect")
    {
        std::mt19937 rng(3);
        std::uniform_int_distribution<int> d(0, 2000);
        for (int i = 0; i < 500; ++i) {
            int x1 = d(rng), y1 = d(rng);
            Rect r{x1, y1, x1 + d(rng), y1 + d(rng)};
            CHECK(r.contains(r.center_x(), r.center_y()));
            CHECK(r.center_x() * 2 <= r.x1 + r.x2);
            CHECK(r.center_x() * 2 >= r.x1 + r.x2 - 1);
        }
    }

    TEST_CASE("subtask calls round-trip")
    {
        SubtaskCall c = parse_subtask_call("Interact (Video, 'Like, twice').");
        CHECK(c.name == "Interact");
        REQUIRE(c.parameters.size() == 2);
        CHECK(c.parameters[1] == "Like, twice");
        CHECK(parse_subtask_call("Back Home").parameters.empty());
        CHECK(render_subtask_call(parse_subtask_call("Search Item (Bob)")) == "Search Item (Bob)");
        CHECK(code_of([] { parse_subtask_call("Find App (Mail"); }) == ErrorCode::InvalidInput);
        CHECK(code_of([] { parse_subtask_call("(x)"); }) == ErrorCode::InvalidInput);
    }

    TEST_CASE("prompt templates fill every slot")
    {
        PromptTemplate t("Do {{a}} then {{b}} and {{a}}.");
        CHECK(t.slots() == std::vector<std::string>{"a", "b"});
        CHECK(t.render({{"a", "x"}, {"b", "y"}, {"c", "z"}}) == "Do x then y and x.");
        CHECK(code_of([&] { t.render({{"a", "x"}}); }) == ErrorCode::InvalidInput);
        CHECK(code_of([] { PromptTemplate("oops {{a"); }) == ErrorCode::SchemaError);
    }

    TEST_CASE("text helpers")
    {
        CHECK(text::collapse_whitespace("  a \n\t b  ") == "a b");
        CHECK(text::word_tokens("Open the 'Hot List', now!") == std::vector<std::string>{"open", "the", "hot", "list", "now"});
        CHECK(text::iequals("Exit", "EXIT"));
        CHECK_FALSE(text::parse_int("12a").has_value());
    }

    TEST_CASE("tasks, libraries and episodes serialize losslessly")
    {
        auto tasks = io::load_tasks(std::string(CHOP_DATA_DIR) + "/tasks.json");
        REQUIRE(tasks.size() >= 10);
        for (const auto& t : tasks)
            CHECK(io::task_from_json(io::to_json(t), "t") == t);

        auto lib = io::load_library(std::string(CHOP_DATA_DIR) + "/library.json");
        CHECK(io::library_from_json(io::library_to_json(lib)) == lib);

        Episode ep;
        ep.task_id = "x";
        ep.plan = {parse_subtask_call("Search Item (Bob)")};
        ep.executed_actions = {Click{1, 2}, Exit{}};
        ep.history.append(ScreenState{"inbox", "mail", {"Compose"}, "Inbox"}, Click{1, 2});
        ep.transcripts.push_back({"plan", -1, 0, "req", "resp", {"NoSuchElement: x"}});
        ep.terminal_reason = TerminalReason::MaxRounds;
        ep.memories.push_back({"Search Item", "found"});
        ep.api_calls_total = 3;
        CHECK(io::episode_from_json(io::to_json(ep)) == ep);
    }

    TEST_CASE("schema errors name the field path")
    {
        auto j = io::json::parse(R"js({"tasks":[{"id":"a","instruction":"i","difficulty":"easy","app_id":"mail",
            "apps":["mail"],"golden_actions":["CLICK(1,2)","JUMP"]}]})js");
        try {
            io::task_from_json(j["tasks"][0], "tasks[0]");
            FAIL("expected a schema error");
        } catch (const Error& e) {
            CHECK(e.code() == ErrorCode::SchemaError);
            CHECK(std::string(e.what()).find("tasks[0].golden_actions[1]") != std::string::npos);
        }
    }

    TEST_CASE("library validation")
    {
        BasisSubtask s{"Search Item", 1, {"term"}, {{"step"}, {}}, true, 5, "d", {"search"}};
        CHECK_NOTHROW(validate_library({s}));
        CHECK(code_of([&] { validate_library({s, s}); }) == ErrorCode::SchemaError);
        s.arity = 2;
        CHECK(code_of([&] { validate_library({s}); }) == ErrorCode::SchemaError);
    }
}
