// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <random>
#include <set>

#include "chop/core/serialize.hpp"
#include "chop/error.hpp"
#include "chop/simenv/app.hpp"
#include "chop/simenv/device.hpp"

using namespace chop;
using namespace chop::sim;

namespace {

const std::string kData = CHOP_DATA_DIR;

const std::vector<AppDefinition>& bundles()
{
    static const auto b = load_app_bundles(kData + "/apps");
    return b;
}

const AppDefinition& bundle(const std::string& id)
{
    for (const auto& a : bundles())
        if (a.app_id == id)
            return a;
    throw std::runtime_error("no bundle " + id);
}

DeviceState run(const Environment& env, DeviceState s, const std::vector<std::string>& actions)
{
    for (const auto& a : actions)
        s = env.step(s, parse_action(a)).first;
    return s;
}

ErrorCode step_error(const Environment& env, const DeviceState& s, const std::string& action)
{
    try {
        env.step(s, parse_action(action));
    } catch (const Error& e) {
        return e.code();
    }
    FAIL("step did not fail: " << action);
    return ErrorCode::IoError;
}

nlohmann::ordered_json tiny_bundle()
{
    return nlohmann::ordered_json::parse(R"({
      "app_id": "tiny", "title": "Tiny", "device_bounds": [100, 200], "home_screen": "a",
      "screens": [
        {"id": "a", "title": "A", "elements": [{"name": "Go", "bounds": [0, 0, 50, 50], "on_click": {"goto": "b"}}]},
        {"id": "b", "title": "B", "elements": []}
      ]})");
}

}  // namespace

TEST_SUITE("simenv")
{
    TEST_CASE("bundled apps load and every screen is reachable")
    {
        REQUIRE(bundles().size() >= 3);
        for (const auto& app : bundles()) {
            CAPTURE(app.app_id);
            CHECK(unreachable_screens(app).empty());
            CHECK(reachable_screens(app).size() == app.screens.size());
        }
    }

    TEST_CASE("bundle round-trips through JSON")
    {
        for (const auto& app : bundles()) {
            auto again = parse_app_bundle(to_json(app), app.app_id);
            CHECK(to_json(again) == to_json(app));
        }
    }

    TEST_CASE("bundle errors are typed")
    {
        auto j = tiny_bundle();
        CHECK_NOTHROW(parse_app_bundle(j));
        j["screens"][0]["elements"][0]["on_click"]["goto"] = "nowhere";
        CHECK_THROWS_AS(parse_app_bundle(j), Error);
        try {
            parse_app_bundle(j);
        } catch (const Error& e) {
            CHECK(e.code() == ErrorCode::DanglingReference);
        }
        auto k = tiny_bundle();
        k["screens"][0].erase("id");
        try {
            parse_app_bundle(k);
            FAIL("expected schema error");
        } catch (const Error& e) {
            CHECK(e.code() == ErrorCode::SchemaError);
        }
        auto u = tiny_bundle();
        u["screens"][0]["elements"] = nlohmann::ordered_json::array();
        CHECK(unreachable_screens(parse_app_bundle(u)) == std::vector<std::string>{"b"});
    }

    TEST_CASE("search flow instantiates the result template")
    {
        Environment env(bundle("mail"));
        auto s = env.reset();
        CHECK(env.observe(s).screen_id == "inbox");
        s = run(env, s, {"CLICK(Search Bar)", "TYPE(Bob)", "CLICK(Search)"});
        auto obs = env.observe(s);
        CHECK(obs.screen_id == "results?q=Bob");
        CHECK(std::find(obs.visible_elements.begin(), obs.visible_elements.end(), "Bob conversation")
              != obs.visible_elements.end());
        Click c = env.ground(s, "bob conversation");
        CHECK(env.element_at(s, c.x, c.y) == std::optional<std::string>("Bob conversation"));
        s = run(env, s, {"BACK"});
        CHECK(env.observe(s).screen_id == "inbox");
    }

    TEST_CASE("step edge cases")
    {
        Environment env(bundle("mail"));
        auto home = env.reset();
        auto [same, outcome] = env.step(home, Back{});
        CHECK(outcome.kind == StepOutcome::Kind::Stayed);
        CHECK(same.current == home.current);

        auto [blank, o2] = env.step(home, Click{5, 2390});
        CHECK(o2.kind == StepOutcome::Kind::Stayed);
        CHECK(blank.current == home.current);

        CHECK(step_error(env, home, "CLICK(5000, 10)") == ErrorCode::OutOfBounds);
        CHECK(step_error(env, home, "CLICK(-1, 10)") == ErrorCode::OutOfBounds);
        CHECK(step_error(env, home, "CLICK(Dark Mode)") == ErrorCode::NoSuchElement);
        CHECK(step_error(env, home, "TYPE(hello)") == ErrorCode::NoFocusedField);

        auto [done, o3] = env.step(home, Exit{});
        CHECK(o3.terminal());
        CHECK(done.terminated);
        CHECK(step_error(env, done, "BACK") == ErrorCode::Terminated);
    }

    TEST_CASE("step leaves its input state untouched")
    {
        Environment env(bundle("mail"));
        auto s = env.reset();
        auto copy = s;
        env.step(s, parse_action("CLICK(Compose)"));
        CHECK(s == copy);
    }

    TEST_CASE("scrolling reveals paged elements")
    {
        Environment env(bundle("mail"));
        auto s = run(env, env.reset(), {"CLICK(Folders)", "CLICK(Settings)"});
        CHECK(step_error(env, s, "CLICK(Dark Mode)") == ErrorCode::NoSuchElement);
        s = run(env, s, {"SCROLL(down)"});
        auto [after, o] = env.step(s, Scroll{Direction::Down});
        CHECK(o.kind == StepOutcome::Kind::Stayed);
        s = run(env, s, {"CLICK(Dark Mode)"});
        CHECK(env.observe(s).screen_id == "dark_mode");
    }

    TEST_CASE("guarded transitions depend on typed text")
    {
        Environment env(bundle("mail"));
        auto s = run(env, env.reset(), {"CLICK(Compose)", "CLICK(Send)"});
        CHECK(env.observe(s).screen_id == "compose");
        s = run(env, s, {"CLICK(To Field)", "TYPE(Alice)", "CLICK(Send)"});
        CHECK(env.observe(s).screen_id == "sent");
    }

    TEST_CASE("multi-app tasks start on the phone home screen")
    {
        Environment env({bundle("mail"), bundle("notes")}, true);
        auto s = env.reset();
        auto obs = env.observe(s);
        CHECK(obs.app_id == std::string(kPhoneAppId));
        CHECK(obs.visible_elements == std::vector<std::string>{"Mail", "Notes"});
        s = run(env, s, {"CLICK(Notes)"});
        CHECK(env.observe(s).app_id == "notes");
        s = run(env, s, {"BACK"});
        CHECK(env.observe(s).app_id == std::string(kPhoneAppId));
    }

    TEST_CASE("every golden trajectory replays to EXIT")
    {
        auto tasks = io::load_tasks(kData + "/tasks.json");
        for (const auto& t : tasks) {
            CAPTURE(t.id);
            auto env = environment_for(t, bundles());
            auto r = replay(env, t.golden_actions);
            CHECK_FALSE(r.failed_at.has_value());
            CHECK(r.exited);
        }
    }

    TEST_CASE("replay reports the first failing action")
    {
        Environment env(bundle("mail"));
        auto r = replay(env, {parse_action("CLICK(Compose)"), parse_action("CLICK(Nope)"), Exit{}});
        REQUIRE(r.failed_at.has_value());
        CHECK(*r.failed_at == 1);
        CHECK(r.error.find("NoSuchElement") != std::string::npos);
        CHECK_FALSE(r.exited);
    }

    TEST_CASE("random walks stay on declared screens")
    {
        std::mt19937 rng(2024);
        for (const auto& app : bundles()) {
            CAPTURE(app.app_id);
            Environment env(app);
            std::set<std::string> declared;
            for (const auto& s : app.screens)
                declared.insert(s.id);
            auto state = env.reset();
            std::uniform_int_distribution<int> kind(0, 9), px(-20, app.device_bounds.width + 20),
                py(-20, app.device_bounds.height + 20);
            for (int i = 0; i < 500; ++i) {
                auto obs = env.observe(state);
                Action a;
                int k = kind(rng);
                if (k <= 4 && !obs.visible_elements.empty())
                    a = ClickTarget{obs.visible_elements[rng() % obs.visible_elements.size()]};
                else if (k == 5)
                    a = Click{px(rng), py(rng)};
                else if (k == 6)
                    a = Scroll{static_cast<Direction>(rng() % 4)};
                else if (k == 7)
                    a = Type{"walk " + std::to_string(i)};
                else if (k == 8)
                    a = Back{};
                else
                    a = Wait{1};
                try {
                    auto [next, outcome] = env.step(state, a);
                    state = next;
                } catch (const Error& e) {
                    bool expected = e.code() == ErrorCode::OutOfBounds || e.code() == ErrorCode::NoFocusedField;
                    CHECK_MESSAGE(expected, e.what());
                }
                CHECK(declared.count(state.current.screen_id) == 1);
                CHECK(state.current.app_id == app.app_id);
                CHECK(state.current.page < static_cast<int>(app.screen(state.current.screen_id).page_count()));
            }
        }
    }
}
