// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "chop/core/action.hpp"
#include "chop/core/types.hpp"
#include "chop/simenv/app.hpp"

namespace chop::sim {

// Where the device currently is. `query` is set on instantiated search
// result screens; the observable screen id is then "<screen>?q=<query>".
struct Location {
    std::string app_id;
    std::string screen_id;
    std::string query;
    int page = 0;

    std::string qualified_screen_id() const;
    bool operator==(const Location&) const = default;
};

struct DeviceState {
    Location current;
    std::vector<Location> back_stack;
    std::optional<std::string> focused_field;
    std::map<std::string, std::string> typed_values;  // "<app>/<field>" -> text
    std::set<std::string> visited;                    // "<app>/<screen>"
    int clock_seconds = 0;
    bool terminated = false;

    bool operator==(const DeviceState&) const = default;
};

nlohmann::ordered_json to_json(const DeviceState& state);

struct StepOutcome {
    enum class Kind { Moved, Stayed, Focused, Typed, Scrolled, Waited, Exited };
    Kind kind = Kind::Stayed;
    std::string detail;

    bool terminal() const { return kind == Kind::Exited; }
};

std::string_view to_string(StepOutcome::Kind kind);

// The phone-home meta app used by multi-app tasks: one icon per app.
inline constexpr std::string_view kPhoneAppId = "phone";

// An immutable set of apps plus the transition function over them. Cheap to
// share between concurrently running episodes; DeviceState values are owned
// by each episode.
class Environment {
public:
    // Single-app environment: reset lands on the app's home screen.
    explicit Environment(AppDefinition app);
    // Multi-app environment: reset lands on a synthesized phone home screen.
    // With `phone_home` false the first app's home is the start screen.
    Environment(std::vector<AppDefinition> apps, bool phone_home);

    DeviceState reset() const;
    std::pair<DeviceState, StepOutcome> step(const DeviceState& state, const Action& action) const;
    Click ground(const DeviceState& state, std::string_view element_name) const;
    ScreenState observe(const DeviceState& state) const;
    // Name of the visible element under (x, y), if any.
    std::optional<std::string> element_at(const DeviceState& state, int x, int y) const;

    const AppDefinition& app(std::string_view app_id) const;
    const std::vector<AppDefinition>& apps() const { return apps_; }
    DeviceBounds device_bounds() const { return apps_.front().device_bounds; }
    const ElementRegistry& registry() const { return registry_; }

private:
    struct ResolvedElement {
        std::string name;  // with the query substituted
        const Element* element;
    };

    const Screen& screen_of(const Location& loc) const;
    std::vector<ResolvedElement> visible(const DeviceState& state) const;
    void apply_rule(DeviceState& state, const TransitionRule& rule, StepOutcome& outcome) const;
    void navigate(DeviceState& state, Location target) const;
    std::string field_value(const DeviceState& state, const std::string& app_id, const std::string& field) const;

    std::vector<AppDefinition> apps_;
    Location start_;
    ElementRegistry registry_;
};

// Free-function forms over a single app.
DeviceState reset(const Environment& env);
std::pair<DeviceState, StepOutcome> step(const Environment& env, const DeviceState& state, const Action& action);
Click ground(const Environment& env, const DeviceState& state, std::string_view element_name);
ScreenState observe(const Environment& env, const DeviceState& state);

// Builds the environment a task runs in from the loaded bundles.
Environment environment_for(const Task& task, const std::vector<AppDefinition>& bundles);

// Replays `actions` from reset. Returns the index of the first failing
// action, or nullopt when every action executed and the last one was EXIT.
struct ReplayResult {
    DeviceState final_state;
    std::optional<std::size_t> failed_at;
    std::string error;
    bool exited = false;
};
ReplayResult replay(const Environment& env, const std::vector<Action>& actions);

}  // namespace chop::sim
