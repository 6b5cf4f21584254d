// SPDX-License-Identifier: Apache-2.0
#include "chop/simenv/app.hpp"

#include <algorithm>
#include <deque>

#include "chop/core/serialize.hpp"
#include "chop/core/text.hpp"
#include "chop/error.hpp"

namespace chop::sim {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

const Element* Screen::find_element(std::string_view name) const
{
    auto key = text::fold(name);
    for (const auto& e : elements)
        if (text::fold(e.name) == key)
            return &e;
    return nullptr;
}

std::vector<std::string> Screen::visible_on_page(std::size_t page) const
{
    std::vector<std::string> out;
    if (scroll_pages.empty()) {
        for (const auto& e : elements)
            out.push_back(e.name);
        return out;
    }
    const auto& names = scroll_pages.at(std::min(page, scroll_pages.size() - 1));
    for (const auto& e : elements)
        if (std::find(names.begin(), names.end(), e.name) != names.end())
            out.push_back(e.name);
    return out;
}

bool Screen::has_field(std::string_view name) const
{
    return std::any_of(text_fields.begin(), text_fields.end(), [&](const TextField& f) { return f.name == name; });
}

const Screen* AppDefinition::find_screen(std::string_view id) const
{
    for (const auto& s : screens)
        if (s.id == id)
            return &s;
    return nullptr;
}

const Screen& AppDefinition::screen(std::string_view id) const
{
    if (auto* s = find_screen(id))
        return *s;
    throw Error(ErrorCode::DanglingReference, app_id + ": no screen '" + std::string(id) + "'");
}

ElementRegistry AppDefinition::registry() const
{
    ElementRegistry reg;
    for (const auto& s : screens)
        for (const auto& e : s.elements)
            reg.add(e.name, e.bounds);
    return reg;
}

namespace {

void collect_rule_targets(const TransitionRule& rule, std::vector<std::string>& screens, std::set<std::string>* apps)
{
    if (auto* g = std::get_if<GoTo>(&rule)) {
        screens.push_back(g->screen_id);
    } else if (auto* s = std::get_if<SubmitSearch>(&rule)) {
        screens.push_back(s->result_screen);
    } else if (auto* a = std::get_if<GoToApp>(&rule)) {
        if (apps)
            apps->insert(a->app_id);
    } else if (auto* c = std::get_if<std::shared_ptr<const Conditional>>(&rule)) {
        collect_rule_targets((*c)->then_rule, screens, apps);
        collect_rule_targets((*c)->else_rule, screens, apps);
    }
}

}  // namespace

std::set<std::string> AppDefinition::linked_apps() const
{
    std::set<std::string> apps;
    std::vector<std::string> ignored;
    for (const auto& s : screens)
        for (const auto& e : s.elements)
            collect_rule_targets(e.on_click, ignored, &apps);
    return apps;
}

std::set<std::string> reachable_screens(const AppDefinition& app)
{
    std::set<std::string> seen{app.home_screen};
    std::deque<std::string> queue{app.home_screen};
    while (!queue.empty()) {
        auto id = queue.front();
        queue.pop_front();
        const auto& screen = app.screen(id);
        std::vector<std::string> targets;
        for (const auto& e : screen.elements)
            collect_rule_targets(e.on_click, targets, nullptr);
        for (auto& t : targets) {
            if (!app.find_screen(t))
                throw Error(ErrorCode::DanglingReference,
                            app.app_id + ": screen '" + id + "' leads to undeclared screen '" + t + "'");
            if (seen.insert(t).second)
                queue.push_back(t);
        }
    }
    return seen;
}

std::vector<std::string> unreachable_screens(const AppDefinition& app)
{
    auto reached = reachable_screens(app);
    std::vector<std::string> out;
    for (const auto& s : app.screens)
        if (!reached.count(s.id))
            out.push_back(s.id);
    return out;
}

// --- parsing ---------------------------------------------------------------

namespace {

[[noreturn]] void schema(const std::string& path, const std::string& what)
{
    throw Error(ErrorCode::SchemaError, path + ": " + what);
}

std::string field_path(const std::string& path, std::string_view key)
{
    return path + "." + std::string(key);
}

std::string index_path(const std::string& path, std::size_t i)
{
    return path + "[" + std::to_string(i) + "]";
}

Guard parse_guard(const json& j, const std::string& path)
{
    if (!j.is_object() || j.size() != 1)
        schema(path, "guard must be an object with exactly one of typed_equals, typed_nonempty, visited");
    const std::string key = j.begin().key();
    const auto& value = j.begin().value();
    if (key == "typed_equals")
        return TypedEquals{io::require_string(value, "field", field_path(path, key)),
                           io::require_string(value, "value", field_path(path, key))};
    if (key == "typed_nonempty") {
        if (!value.is_string())
            schema(field_path(path, key), "expected a field name");
        return TypedNonEmpty{value.get<std::string>()};
    }
    if (key == "visited") {
        if (!value.is_string())
            schema(field_path(path, key), "expected a screen id");
        return Visited{value.get<std::string>()};
    }
    schema(path, "unknown guard '" + key + "'");
}

TransitionRule parse_rule(const json& j, const std::string& path)
{
    if (j.is_string()) {
        if (j.get<std::string>() == "stay")
            return Stay{};
        schema(path, "unknown rule '" + j.get<std::string>() + "'");
    }
    if (!j.is_object())
        schema(path, "rule must be \"stay\" or an object");
    if (j.contains("if")) {
        auto cond = std::make_shared<Conditional>();
        cond->guard = parse_guard(j["if"], field_path(path, "if"));
        cond->then_rule = parse_rule(io::require(j, "then", path), field_path(path, "then"));
        cond->else_rule = j.contains("else") ? parse_rule(j["else"], field_path(path, "else")) : TransitionRule{Stay{}};
        return std::shared_ptr<const Conditional>(std::move(cond));
    }
    if (j.size() != 1)
        schema(path, "rule object must have exactly one key");
    const std::string key = j.begin().key();
    const auto& value = j.begin().value();
    auto p = field_path(path, key);
    if (key == "goto") {
        if (!value.is_string())
            schema(p, "expected a screen id");
        return GoTo{value.get<std::string>()};
    }
    if (key == "goto_app") {
        if (!value.is_string())
            schema(p, "expected an app id");
        return GoToApp{value.get<std::string>()};
    }
    if (key == "focus") {
        if (!value.is_string())
            schema(p, "expected a field name");
        return SetFocus{value.get<std::string>()};
    }
    if (key == "submit_search")
        return SubmitSearch{io::require_string(value, "field", p), io::require_string(value, "results", p)};
    schema(path, "unknown rule '" + key + "'");
}

Rect parse_bounds(const json& j, const std::string& path, DeviceBounds device)
{
    if (!j.is_array() || j.size() != 4)
        schema(path, "bounds must be [x1, y1, x2, y2]");
    int v[4];
    for (int i = 0; i < 4; ++i) {
        if (!j[i].is_number_integer())
            schema(path, "bounds must be integers");
        v[i] = j[i].get<int>();
    }
    Rect r{v[0], v[1], v[2], v[3]};
    if (r.x1 >= r.x2 || r.y1 >= r.y2)
        schema(path, "degenerate rectangle");
    if (r.x1 < 0 || r.y1 < 0 || r.x2 > device.width || r.y2 > device.height)
        schema(path, "rectangle outside device bounds");
    return r;
}

void check_rule_refs(const AppDefinition& app, const Screen& screen, const TransitionRule& rule, const std::string& path)
{
    auto dangling = [&](const std::string& what) {
        throw Error(ErrorCode::DanglingReference, path + ": " + what);
    };
    auto field_declared = [&](const std::string& f) {
        return std::any_of(app.screens.begin(), app.screens.end(), [&](const Screen& s) { return s.has_field(f); });
    };
    if (auto* g = std::get_if<GoTo>(&rule)) {
        if (!app.find_screen(g->screen_id))
            dangling("missing screen '" + g->screen_id + "'");
    } else if (auto* f = std::get_if<SetFocus>(&rule)) {
        if (!screen.has_field(f->field))
            dangling("missing field '" + f->field + "' on screen '" + screen.id + "'");
    } else if (auto* s = std::get_if<SubmitSearch>(&rule)) {
        if (!field_declared(s->query_field))
            dangling("missing field '" + s->query_field + "'");
        if (!app.find_screen(s->result_screen))
            dangling("missing screen '" + s->result_screen + "'");
    } else if (auto* c = std::get_if<std::shared_ptr<const Conditional>>(&rule)) {
        const auto& guard = (*c)->guard;
        if (auto* te = std::get_if<TypedEquals>(&guard); te && !field_declared(te->field))
            dangling("missing field '" + te->field + "'");
        if (auto* tn = std::get_if<TypedNonEmpty>(&guard); tn && !field_declared(tn->field))
            dangling("missing field '" + tn->field + "'");
        if (auto* v = std::get_if<Visited>(&guard); v && !app.find_screen(v->screen_id))
            dangling("missing screen '" + v->screen_id + "'");
        check_rule_refs(app, screen, (*c)->then_rule, path + ".then");
        check_rule_refs(app, screen, (*c)->else_rule, path + ".else");
    }
}

}  // namespace

AppDefinition parse_app_bundle(const json& j, const std::string& origin)
{
    AppDefinition app;
    const std::string root = origin;
    app.app_id = io::require_string(j, "app_id", root);
    if (app.app_id.empty())
        schema(field_path(root, "app_id"), "must not be empty");
    app.title = io::optional_string(j, "title", app.app_id, root);

    const auto& bounds = io::require(j, "device_bounds", root);
    if (!bounds.is_array() || bounds.size() != 2 || !bounds[0].is_number_integer() || !bounds[1].is_number_integer())
        schema(field_path(root, "device_bounds"), "expected [width, height]");
    app.device_bounds = {bounds[0].get<int>(), bounds[1].get<int>()};
    if (app.device_bounds.width <= 0 || app.device_bounds.height <= 0)
        schema(field_path(root, "device_bounds"), "must be positive");

    app.home_screen = io::require_string(j, "home_screen", root);

    const auto& screens = io::require(j, "screens", root);
    if (!screens.is_array() || screens.empty())
        schema(field_path(root, "screens"), "expected a non-empty array");

    std::set<std::string> ids;
    for (std::size_t i = 0; i < screens.size(); ++i) {
        auto sp = index_path(field_path(root, "screens"), i);
        const auto& sj = screens[i];
        Screen screen;
        screen.id = io::require_string(sj, "id", sp);
        if (screen.id.empty() || screen.id.find('?') != std::string::npos)
            schema(field_path(sp, "id"), "screen ids must be non-empty and must not contain '?'");
        if (!ids.insert(screen.id).second)
            schema(field_path(sp, "id"), "duplicate screen id '" + screen.id + "'");
        screen.title = io::optional_string(sj, "title", screen.id, sp);
        screen.is_template = io::optional_bool(sj, "template", false, sp);

        if (sj.contains("text_fields")) {
            const auto& fields = sj["text_fields"];
            if (!fields.is_array())
                schema(field_path(sp, "text_fields"), "expected an array");
            for (std::size_t f = 0; f < fields.size(); ++f) {
                auto fp = index_path(field_path(sp, "text_fields"), f);
                TextField tf{io::require_string(fields[f], "name", fp), io::optional_string(fields[f], "value", "", fp)};
                if (screen.has_field(tf.name))
                    schema(fp, "duplicate field '" + tf.name + "'");
                screen.text_fields.push_back(std::move(tf));
            }
        }

        const auto& elements = io::require(sj, "elements", sp);
        if (!elements.is_array())
            schema(field_path(sp, "elements"), "expected an array");
        std::set<std::string> names;
        for (std::size_t e = 0; e < elements.size(); ++e) {
            auto ep = index_path(field_path(sp, "elements"), e);
            Element el;
            el.name = io::require_string(elements[e], "name", ep);
            if (text::trim(el.name).empty())
                schema(field_path(ep, "name"), "must not be empty");
            if (!names.insert(text::fold(el.name)).second)
                schema(field_path(ep, "name"), "duplicate element '" + el.name + "' on screen '" + screen.id + "'");
            el.bounds = parse_bounds(io::require(elements[e], "bounds", ep), field_path(ep, "bounds"), app.device_bounds);
            if (elements[e].contains("on_click"))
                el.on_click = parse_rule(elements[e]["on_click"], field_path(ep, "on_click"));
            screen.elements.push_back(std::move(el));
        }

        if (sj.contains("scroll_pages")) {
            const auto& pages = sj["scroll_pages"];
            if (!pages.is_array() || pages.empty())
                schema(field_path(sp, "scroll_pages"), "expected a non-empty array of pages");
            for (std::size_t p = 0; p < pages.size(); ++p) {
                auto pp = index_path(field_path(sp, "scroll_pages"), p);
                if (!pages[p].is_array())
                    schema(pp, "expected an array of element names");
                std::vector<std::string> page;
                for (std::size_t n = 0; n < pages[p].size(); ++n) {
                    if (!pages[p][n].is_string())
                        schema(index_path(pp, n), "expected an element name");
                    auto name = pages[p][n].get<std::string>();
                    auto* el = screen.find_element(name);
                    if (!el)
                        throw Error(ErrorCode::DanglingReference,
                                    index_path(pp, n) + ": missing element '" + name + "'");
                    page.push_back(el->name);
                }
                screen.scroll_pages.push_back(std::move(page));
            }
        }
        app.screens.push_back(std::move(screen));
    }

    if (!app.find_screen(app.home_screen))
        throw Error(ErrorCode::DanglingReference, field_path(root, "home_screen") + ": missing screen '" + app.home_screen + "'");

    for (std::size_t i = 0; i < app.screens.size(); ++i) {
        const auto& screen = app.screens[i];
        for (std::size_t e = 0; e < screen.elements.size(); ++e) {
            auto ep = index_path(field_path(index_path(field_path(root, "screens"), i), "elements"), e) + ".on_click";
            check_rule_refs(app, screen, screen.elements[e].on_click, ep);
        }
    }

    // Model check: everything reachable from home must be declared.
    reachable_screens(app);
    return app;
}

AppDefinition load_app_bundle(const fs::path& path)
{
    return parse_app_bundle(io::parse_json_file(path), path.string());
}

std::vector<AppDefinition> load_app_bundles(const fs::path& dir_or_file)
{
    if (!fs::is_directory(dir_or_file))
        return {load_app_bundle(dir_or_file)};
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(dir_or_file))
        if (entry.is_regular_file() && entry.path().extension() == ".json")
            files.push_back(entry.path());
    std::sort(files.begin(), files.end());
    std::vector<AppDefinition> apps;
    for (const auto& f : files)
        apps.push_back(load_app_bundle(f));
    return apps;
}

// --- serialization ---------------------------------------------------------

namespace {

json guard_to_json(const Guard& g)
{
    if (auto* te = std::get_if<TypedEquals>(&g))
        return json{{"typed_equals", json{{"field", te->field}, {"value", te->value}}}};
    if (auto* tn = std::get_if<TypedNonEmpty>(&g))
        return json{{"typed_nonempty", tn->field}};
    return json{{"visited", std::get<Visited>(g).screen_id}};
}

json rule_to_json(const TransitionRule& rule)
{
    if (auto* g = std::get_if<GoTo>(&rule))
        return json{{"goto", g->screen_id}};
    if (auto* a = std::get_if<GoToApp>(&rule))
        return json{{"goto_app", a->app_id}};
    if (std::holds_alternative<Stay>(rule))
        return "stay";
    if (auto* f = std::get_if<SetFocus>(&rule))
        return json{{"focus", f->field}};
    if (auto* s = std::get_if<SubmitSearch>(&rule))
        return json{{"submit_search", json{{"field", s->query_field}, {"results", s->result_screen}}}};
    const auto& c = std::get<std::shared_ptr<const Conditional>>(rule);
    return json{{"if", guard_to_json(c->guard)}, {"then", rule_to_json(c->then_rule)}, {"else", rule_to_json(c->else_rule)}};
}

}  // namespace

json to_json(const AppDefinition& app)
{
    json j;
    j["app_id"] = app.app_id;
    j["title"] = app.title;
    j["device_bounds"] = json::array({app.device_bounds.width, app.device_bounds.height});
    j["home_screen"] = app.home_screen;
    json screens = json::array();
    for (const auto& s : app.screens) {
        json sj;
        sj["id"] = s.id;
        sj["title"] = s.title;
        if (s.is_template)
            sj["template"] = true;
        if (!s.text_fields.empty()) {
            json fields = json::array();
            for (const auto& f : s.text_fields)
                fields.push_back(json{{"name", f.name}, {"value", f.value}});
            sj["text_fields"] = fields;
        }
        json elements = json::array();
        for (const auto& e : s.elements)
            elements.push_back(json{{"name", e.name},
                                    {"bounds", json::array({e.bounds.x1, e.bounds.y1, e.bounds.x2, e.bounds.y2})},
                                    {"on_click", rule_to_json(e.on_click)}});
        sj["elements"] = elements;
        if (!s.scroll_pages.empty())
            sj["scroll_pages"] = s.scroll_pages;
        screens.push_back(sj);
    }
    j["screens"] = screens;
    return j;
}

}  // namespace chop::sim
