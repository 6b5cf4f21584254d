// SPDX-License-Identifier: Apache-2.0
#include "chop/simenv/device.hpp"

#include <algorithm>

#include "chop/core/text.hpp"
#include "chop/error.hpp"

namespace chop::sim {

using json = nlohmann::ordered_json;

std::string Location::qualified_screen_id() const
{
    return query.empty() ? screen_id : screen_id + "?q=" + query;
}

json to_json(const DeviceState& s)
{
    auto loc = [](const Location& l) {
        return json{{"app_id", l.app_id}, {"screen_id", l.screen_id}, {"query", l.query}, {"page", l.page}};
    };
    json j;
    j["current"] = loc(s.current);
    json stack = json::array();
    for (const auto& l : s.back_stack)
        stack.push_back(loc(l));
    j["back_stack"] = stack;
    j["focused_field"] = s.focused_field ? json(*s.focused_field) : json(nullptr);
    j["typed_values"] = s.typed_values;
    j["visited"] = s.visited;
    j["clock_seconds"] = s.clock_seconds;
    j["terminated"] = s.terminated;
    return j;
}

std::string_view to_string(StepOutcome::Kind kind)
{
    switch (kind) {
    case StepOutcome::Kind::Moved: return "moved";
    case StepOutcome::Kind::Stayed: return "stayed";
    case StepOutcome::Kind::Focused: return "focused";
    case StepOutcome::Kind::Typed: return "typed";
    case StepOutcome::Kind::Scrolled: return "scrolled";
    case StepOutcome::Kind::Waited: return "waited";
    case StepOutcome::Kind::Exited: return "exited";
    }
    return "stayed";
}

namespace {

constexpr std::string_view kQueryPlaceholder = "{query}";

AppDefinition make_phone_home(const std::vector<AppDefinition>& apps)
{
    AppDefinition phone;
    phone.app_id = std::string(kPhoneAppId);
    phone.title = "Phone";
    phone.device_bounds = apps.front().device_bounds;
    phone.home_screen = "home";

    Screen home;
    home.id = "home";
    home.title = "Home";
    constexpr int columns = 4;
    const int cell_w = phone.device_bounds.width / columns;
    const int cell_h = cell_w;
    const int top = phone.device_bounds.height / 8;
    for (std::size_t i = 0; i < apps.size(); ++i) {
        int col = static_cast<int>(i % columns);
        int row = static_cast<int>(i / columns);
        Rect r{col * cell_w + cell_w / 8, top + row * cell_h + cell_h / 8, (col + 1) * cell_w - cell_w / 8,
               top + (row + 1) * cell_h - cell_h / 8};
        if (r.y2 > phone.device_bounds.height)
            throw Error(ErrorCode::SchemaError, "too many apps for the phone home screen");
        home.elements.push_back(Element{apps[i].title, r, GoToApp{apps[i].app_id}});
    }
    phone.screens.push_back(std::move(home));
    return phone;
}

std::string substitute_query(const std::string& name, const std::string& query)
{
    return text::replace_all(name, kQueryPlaceholder, query);
}

std::string field_key(const std::string& app_id, const std::string& field)
{
    return app_id + "/" + field;
}

}  // namespace

Environment::Environment(AppDefinition app) : Environment(std::vector<AppDefinition>{std::move(app)}, false) {}

Environment::Environment(std::vector<AppDefinition> apps, bool phone_home)
{
    if (apps.empty())
        throw Error(ErrorCode::InvalidInput, "environment needs at least one app");
    for (const auto& a : apps)
        if (a.device_bounds != apps.front().device_bounds)
            throw Error(ErrorCode::SchemaError, "app '" + a.app_id + "' declares different device bounds");
    if (phone_home) {
        auto phone = make_phone_home(apps);
        apps.insert(apps.begin(), std::move(phone));
    }
    apps_ = std::move(apps);
    start_ = Location{apps_.front().app_id, apps_.front().home_screen, "", 0};
    for (const auto& a : apps_)
        registry_.merge(a.registry());
}

const AppDefinition& Environment::app(std::string_view app_id) const
{
    for (const auto& a : apps_)
        if (a.app_id == app_id)
            return a;
    throw Error(ErrorCode::DanglingReference, "no app '" + std::string(app_id) + "' loaded");
}

const Screen& Environment::screen_of(const Location& loc) const
{
    return app(loc.app_id).screen(loc.screen_id);
}

DeviceState Environment::reset() const
{
    DeviceState s;
    s.current = start_;
    s.visited.insert(field_key(start_.app_id, start_.screen_id));
    return s;
}

std::vector<Environment::ResolvedElement> Environment::visible(const DeviceState& state) const
{
    const auto& screen = screen_of(state.current);
    std::vector<ResolvedElement> out;
    for (const auto& name : screen.visible_on_page(static_cast<std::size_t>(state.current.page))) {
        const auto* el = screen.find_element(name);
        out.push_back({substitute_query(el->name, state.current.query), el});
    }
    return out;
}

std::string Environment::field_value(const DeviceState& state, const std::string& app_id, const std::string& field) const
{
    auto it = state.typed_values.find(field_key(app_id, field));
    if (it != state.typed_values.end())
        return it->second;
    for (const auto& s : app(app_id).screens)
        for (const auto& f : s.text_fields)
            if (f.name == field)
                return f.value;
    return {};
}

void Environment::navigate(DeviceState& state, Location target) const
{
    if (target.app_id == state.current.app_id && target.screen_id == state.current.screen_id
        && target.query == state.current.query)
        return;
    state.back_stack.push_back(state.current);
    state.current = std::move(target);
    state.focused_field.reset();
    state.visited.insert(field_key(state.current.app_id, state.current.screen_id));
}

void Environment::apply_rule(DeviceState& state, const TransitionRule& rule, StepOutcome& outcome) const
{
    const auto& app_id = state.current.app_id;
    if (auto* g = std::get_if<GoTo>(&rule)) {
        navigate(state, Location{app_id, g->screen_id, "", 0});
        outcome = {StepOutcome::Kind::Moved, state.current.qualified_screen_id()};
    } else if (auto* a = std::get_if<GoToApp>(&rule)) {
        auto it = std::find_if(apps_.begin(), apps_.end(), [&](const AppDefinition& d) { return d.app_id == a->app_id; });
        if (it == apps_.end()) {
            outcome = {StepOutcome::Kind::Stayed, "app '" + a->app_id + "' is not installed"};
            return;
        }
        navigate(state, Location{it->app_id, it->home_screen, "", 0});
        outcome = {StepOutcome::Kind::Moved, state.current.app_id + ":" + state.current.screen_id};
    } else if (std::holds_alternative<Stay>(rule)) {
        outcome = {StepOutcome::Kind::Stayed, ""};
    } else if (auto* f = std::get_if<SetFocus>(&rule)) {
        state.focused_field = f->field;
        outcome = {StepOutcome::Kind::Focused, f->field};
    } else if (auto* s = std::get_if<SubmitSearch>(&rule)) {
        auto query = std::string(text::trim(field_value(state, app_id, s->query_field)));
        if (query.empty()) {
            outcome = {StepOutcome::Kind::Stayed, "empty query"};
            return;
        }
        navigate(state, Location{app_id, s->result_screen, query, 0});
        outcome = {StepOutcome::Kind::Moved, state.current.qualified_screen_id()};
    } else {
        const auto& c = *std::get<std::shared_ptr<const Conditional>>(rule);
        bool holds = false;
        if (auto* te = std::get_if<TypedEquals>(&c.guard))
            holds = text::fold(field_value(state, app_id, te->field)) == text::fold(te->value);
        else if (auto* tn = std::get_if<TypedNonEmpty>(&c.guard))
            holds = !text::trim(field_value(state, app_id, tn->field)).empty();
        else
            holds = state.visited.count(field_key(app_id, std::get<Visited>(c.guard).screen_id)) > 0;
        apply_rule(state, holds ? c.then_rule : c.else_rule, outcome);
    }
}

std::pair<DeviceState, StepOutcome> Environment::step(const DeviceState& state, const Action& action) const
{
    if (state.terminated)
        throw Error(ErrorCode::Terminated, "episode already exited");

    DeviceState next = state;
    StepOutcome outcome;

    if (auto* c = std::get_if<Click>(&action)) {
        auto bounds = device_bounds();
        if (c->x < 0 || c->y < 0 || c->x > bounds.width || c->y > bounds.height)
            throw Error(ErrorCode::OutOfBounds, "click (" + std::to_string(c->x) + ", " + std::to_string(c->y)
                                                    + ") outside the device");
        const Element* hit = nullptr;
        for (const auto& v : visible(state)) {
            if (v.element->bounds.contains(c->x, c->y)) {
                hit = v.element;
                break;
            }
        }
        if (!hit)
            return {next, StepOutcome{StepOutcome::Kind::Stayed, "no element at point"}};
        apply_rule(next, hit->on_click, outcome);
    } else if (auto* t = std::get_if<ClickTarget>(&action)) {
        auto key = text::fold(t->element_name);
        const Element* hit = nullptr;
        for (const auto& v : visible(state)) {
            if (text::fold(v.name) == key) {
                hit = v.element;
                break;
            }
        }
        if (!hit)
            throw Error(ErrorCode::NoSuchElement, "'" + t->element_name + "' is not visible on "
                                                      + state.current.qualified_screen_id());
        apply_rule(next, hit->on_click, outcome);
    } else if (auto* s = std::get_if<Scroll>(&action)) {
        const int pages = static_cast<int>(screen_of(state.current).page_count());
        int page = state.current.page;
        if (s->direction == Direction::Down || s->direction == Direction::Right)
            page = std::min(page + 1, pages - 1);
        else
            page = std::max(page - 1, 0);
        if (page == state.current.page) {
            outcome = {StepOutcome::Kind::Stayed, "cannot scroll further"};
        } else {
            next.current.page = page;
            outcome = {StepOutcome::Kind::Scrolled, "page " + std::to_string(page + 1) + "/" + std::to_string(pages)};
        }
    } else if (auto* y = std::get_if<Type>(&action)) {
        if (!state.focused_field)
            throw Error(ErrorCode::NoFocusedField, "TYPE without a focused text field");
        next.typed_values[field_key(state.current.app_id, *state.focused_field)] = y->text;
        outcome = {StepOutcome::Kind::Typed, *state.focused_field};
    } else if (std::holds_alternative<Back>(action)) {
        if (next.back_stack.empty()) {
            outcome = {StepOutcome::Kind::Stayed, "already at the bottom of the back stack"};
        } else {
            next.current = next.back_stack.back();
            next.back_stack.pop_back();
            next.focused_field.reset();
            outcome = {StepOutcome::Kind::Moved, next.current.qualified_screen_id()};
        }
    } else if (std::holds_alternative<Exit>(action)) {
        next.terminated = true;
        outcome = {StepOutcome::Kind::Exited, ""};
    } else {
        next.clock_seconds += std::get<Wait>(action).seconds;
        outcome = {StepOutcome::Kind::Waited, std::to_string(next.clock_seconds)};
    }
    return {std::move(next), std::move(outcome)};
}

Click Environment::ground(const DeviceState& state, std::string_view element_name) const
{
    auto key = text::fold(element_name);
    for (const auto& v : visible(state))
        if (text::fold(v.name) == key)
            return Click{v.element->bounds.center_x(), v.element->bounds.center_y()};
    throw Error(ErrorCode::NoSuchElement,
                "'" + std::string(element_name) + "' is not visible on " + state.current.qualified_screen_id());
}

std::optional<std::string> Environment::element_at(const DeviceState& state, int x, int y) const
{
    for (auto& v : visible(state))
        if (v.element->bounds.contains(x, y))
            return std::move(v.name);
    return std::nullopt;
}

ScreenState Environment::observe(const DeviceState& state) const
{
    const auto& app_def = app(state.current.app_id);
    const auto& screen = app_def.screen(state.current.screen_id);

    ScreenState out;
    out.app_id = state.current.app_id;
    out.screen_id = state.current.qualified_screen_id();
    for (auto& v : visible(state))
        out.visible_elements.push_back(std::move(v.name));

    std::string text = "App: " + app_def.title + "\n";
    text += "Screen: " + substitute_query(screen.title, state.current.query) + "\n";
    if (screen.page_count() > 1)
        text += "Page: " + std::to_string(state.current.page + 1) + "/" + std::to_string(screen.page_count()) + "\n";
    text += "Elements:\n";
    for (const auto& name : out.visible_elements)
        text += "- " + name + "\n";
    if (!screen.text_fields.empty()) {
        text += "Text fields:\n";
        for (const auto& f : screen.text_fields) {
            bool focused = state.focused_field && *state.focused_field == f.name;
            text += "- " + f.name + ": \"" + field_value(state, state.current.app_id, f.name) + "\"";
            text += focused ? " [focused]\n" : "\n";
        }
    }
    text += "Focused field: " + (state.focused_field ? *state.focused_field : std::string("none")) + "\n";
    out.observation_text = std::move(text);
    return out;
}

DeviceState reset(const Environment& env)
{
    return env.reset();
}

std::pair<DeviceState, StepOutcome> step(const Environment& env, const DeviceState& state, const Action& action)
{
    return env.step(state, action);
}

Click ground(const Environment& env, const DeviceState& state, std::string_view element_name)
{
    return env.ground(state, element_name);
}

ScreenState observe(const Environment& env, const DeviceState& state)
{
    return env.observe(state);
}

Environment environment_for(const Task& task, const std::vector<AppDefinition>& bundles)
{
    std::vector<AppDefinition> apps;
    for (const auto& id : task.apps) {
        auto it = std::find_if(bundles.begin(), bundles.end(), [&](const AppDefinition& a) { return a.app_id == id; });
        if (it == bundles.end())
            throw Error(ErrorCode::DanglingReference, "task '" + task.id + "' needs app '" + id + "' which is not loaded");
        apps.push_back(*it);
    }
    bool multi = apps.size() > 1;
    return Environment(std::move(apps), multi);
}

ReplayResult replay(const Environment& env, const std::vector<Action>& actions)
{
    ReplayResult result{env.reset(), std::nullopt, {}, false};
    for (std::size_t i = 0; i < actions.size(); ++i) {
        try {
            auto [next, outcome] = env.step(result.final_state, actions[i]);
            result.final_state = std::move(next);
        } catch (const Error& e) {
            result.failed_at = i;
            result.error = e.what();
            return result;
        }
    }
    result.exited = result.final_state.terminated;
    return result;
}

}  // namespace chop::sim
