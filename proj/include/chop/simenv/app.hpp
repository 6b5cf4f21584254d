// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <set>
#include <string>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "chop/core/action.hpp"

// Declarative app bundles. An app is a graph of screens; each element's
// on_click rule is one edge of the transition function. Bundles are JSON
// files, documented in docs/app_bundle_schema.md.
namespace chop::sim {

struct GoTo {
    std::string screen_id;
    bool operator==(const GoTo&) const = default;
};

// Jump into another app's home screen (phone home icons, share targets).
struct GoToApp {
    std::string app_id;
    bool operator==(const GoToApp&) const = default;
};

struct Stay {
    bool operator==(const Stay&) const = default;
};

struct SetFocus {
    std::string field;
    bool operator==(const SetFocus&) const = default;
};

// Opens `result_screen` parameterized by the current value of `query_field`.
struct SubmitSearch {
    std::string query_field;
    std::string result_screen;
    bool operator==(const SubmitSearch&) const = default;
};

struct Conditional;
using TransitionRule = std::variant<GoTo, GoToApp, Stay, SetFocus, SubmitSearch, std::shared_ptr<const Conditional>>;

struct TypedEquals {
    std::string field;
    std::string value;  // compared case-folded and trimmed
};
struct TypedNonEmpty {
    std::string field;
};
struct Visited {
    std::string screen_id;
};
using Guard = std::variant<TypedEquals, TypedNonEmpty, Visited>;

struct Conditional {
    Guard guard;
    TransitionRule then_rule;
    TransitionRule else_rule;
};

struct Element {
    std::string name;  // may contain "{query}" on template screens
    Rect bounds;
    TransitionRule on_click = Stay{};
};

struct TextField {
    std::string name;
    std::string value;
};

struct Screen {
    std::string id;
    std::string title;
    bool is_template = false;  // search result screen instantiated per query
    std::vector<Element> elements;
    std::vector<std::vector<std::string>> scroll_pages;
    std::vector<TextField> text_fields;

    const Element* find_element(std::string_view name) const;
    std::size_t page_count() const { return scroll_pages.empty() ? 1 : scroll_pages.size(); }
    // Element names visible on `page`, in declaration order.
    std::vector<std::string> visible_on_page(std::size_t page) const;
    bool has_field(std::string_view name) const;
};

struct DeviceBounds {
    int width = 0;
    int height = 0;
    bool operator==(const DeviceBounds&) const = default;
};

class AppDefinition {
public:
    std::string app_id;
    std::string title;
    DeviceBounds device_bounds;
    std::string home_screen;
    std::vector<Screen> screens;  // declaration order

    const Screen* find_screen(std::string_view id) const;
    const Screen& screen(std::string_view id) const;  // throws DanglingReference

    // Every element rectangle, keyed by element name. Template names keep
    // their "{query}" placeholder.
    ElementRegistry registry() const;

    // App ids referenced by GoToApp rules.
    std::set<std::string> linked_apps() const;
};

// Parses and validates a bundle. Throws Error(SchemaError) with the field
// path on malformed input and Error(DanglingReference) when a rule names a
// screen or field that is not declared.
AppDefinition parse_app_bundle(const nlohmann::ordered_json& j, const std::string& origin = "bundle");
AppDefinition load_app_bundle(const std::filesystem::path& path);
std::vector<AppDefinition> load_app_bundles(const std::filesystem::path& dir_or_file);

nlohmann::ordered_json to_json(const AppDefinition& app);

// Breadth-first walk over every transition rule (both branches of
// conditionals) starting from the home screen.
std::set<std::string> reachable_screens(const AppDefinition& app);
std::vector<std::string> unreachable_screens(const AppDefinition& app);

}  // namespace chop::sim
