// SPDX-License-Identifier: Apache-2.0
#include "chop/core/action.hpp"

#include <algorithm>
#include <climits>

#include "chop/core/text.hpp"
#include "chop/error.hpp"

namespace chop {

std::string_view to_string(Direction d)
{
    switch (d) {
    case Direction::Up: return "up";
    case Direction::Down: return "down";
    case Direction::Left: return "left";
    case Direction::Right: return "right";
    }
    return "down";
}

namespace {

[[noreturn]] void fail(ErrorCode code, std::string_view text, std::string_view why)
{
    throw Error(code, std::string(why) + " in '" + std::string(text) + "'");
}

int to_coordinate(long long v, std::string_view text)
{
    if (v < INT_MIN || v > INT_MAX)
        fail(ErrorCode::BadAttribute, text, "coordinate out of range");
    return static_cast<int>(v);
}

Action parse_click(std::string_view text, std::string_view inner)
{
    auto parts = text::split(inner, ',');
    std::size_t ints = 0;
    for (const auto& p : parts)
        ints += text::parse_int(p).has_value();

    if (parts.size() == 1) {
        auto name = text::trim(inner);
        if (name.empty() || ints == 1)
            fail(ErrorCode::ArityMismatch, text, "CLICK needs two coordinates or one element name");
        return ClickTarget{std::string(name)};
    }
    if (parts.size() == 2 && ints == 2) {
        return Click{to_coordinate(*text::parse_int(parts[0]), text),
                     to_coordinate(*text::parse_int(parts[1]), text)};
    }
    if (ints == parts.size())
        fail(ErrorCode::ArityMismatch, text, "CLICK takes exactly two coordinates");
    if (ints == 0) {
        // Element names may contain commas.
        return ClickTarget{std::string(text::trim(inner))};
    }
    fail(ErrorCode::BadAttribute, text, "non-integer coordinate");
}

}  // namespace

Action parse_action(std::string_view raw)
{
    auto s = text::trim(raw);
    if (s.empty())
        fail(ErrorCode::UnknownActionName, raw, "empty action");
    if (s.find('\n') != std::string_view::npos)
        fail(ErrorCode::BadAttribute, raw, "action spans multiple lines");

    auto open = s.find('(');
    std::string head = text::upper(text::trim(s.substr(0, open)));
    bool has_args = open != std::string_view::npos;
    std::string_view inner;
    if (has_args) {
        if (s.back() != ')')
            fail(ErrorCode::BadAttribute, raw, "missing closing parenthesis");
        inner = s.substr(open + 1, s.size() - open - 2);
    }

    if (head == "BACK" || head == "EXIT") {
        if (has_args && !text::trim(inner).empty())
            fail(ErrorCode::ArityMismatch, raw, head + " takes no attributes");
        if (head == "BACK")
            return Back{};
        return Exit{};
    }
    if (head != "CLICK" && head != "SCROLL" && head != "TYPE" && head != "WAIT")
        fail(ErrorCode::UnknownActionName, raw, "unknown action '" + head + "'");
    if (!has_args)
        fail(ErrorCode::ArityMismatch, raw, head + " requires attributes");

    if (head == "CLICK")
        return parse_click(raw, inner);

    if (head == "TYPE") {
        if (inner.empty())
            fail(ErrorCode::ArityMismatch, raw, "TYPE requires text");
        return Type{std::string(inner)};
    }

    auto arg = text::trim(inner);
    if (arg.empty())
        fail(ErrorCode::ArityMismatch, raw, head + " requires one attribute");
    if (arg.find(',') != std::string_view::npos)
        fail(ErrorCode::ArityMismatch, raw, head + " takes one attribute");

    if (head == "SCROLL") {
        auto dir = text::lower(arg);
        if (dir == "up")
            return Scroll{Direction::Up};
        if (dir == "down")
            return Scroll{Direction::Down};
        if (dir == "left")
            return Scroll{Direction::Left};
        if (dir == "right")
            return Scroll{Direction::Right};
        fail(ErrorCode::BadAttribute, raw, "invalid scroll direction");
    }

    auto seconds = text::parse_int(arg);
    if (!seconds)
        fail(ErrorCode::BadAttribute, raw, "non-integer wait time");
    if (*seconds < 1 || *seconds > INT_MAX)
        fail(ErrorCode::BadAttribute, raw, "wait time must be a positive number of seconds");
    return Wait{static_cast<int>(*seconds)};
}

std::string render_action(const Action& action)
{
    struct Renderer {
        std::string operator()(const Click& a) const
        {
            return "CLICK(" + std::to_string(a.x) + ", " + std::to_string(a.y) + ")";
        }
        std::string operator()(const ClickTarget& a) const { return "CLICK(" + a.element_name + ")"; }
        std::string operator()(const Scroll& a) const { return "SCROLL(" + std::string(to_string(a.direction)) + ")"; }
        std::string operator()(const Type& a) const { return "TYPE(" + a.text + ")"; }
        std::string operator()(const Back&) const { return "BACK"; }
        std::string operator()(const Exit&) const { return "EXIT"; }
        std::string operator()(const Wait& a) const { return "WAIT(" + std::to_string(a.seconds) + ")"; }
    };
    return std::visit(Renderer{}, action);
}

std::vector<Action> parse_actions(const std::vector<std::string>& lines)
{
    std::vector<Action> out;
    out.reserve(lines.size());
    for (const auto& line : lines)
        out.push_back(parse_action(line));
    return out;
}

std::vector<std::string> render_actions(const std::vector<Action>& actions)
{
    std::vector<std::string> out;
    out.reserve(actions.size());
    for (const auto& a : actions)
        out.push_back(render_action(a));
    return out;
}

void ElementRegistry::add(std::string_view element_name, Rect bounds)
{
    auto& rects = rects_[text::fold(element_name)];
    if (std::find(rects.begin(), rects.end(), bounds) == rects.end())
        rects.push_back(bounds);
}

void ElementRegistry::merge(const ElementRegistry& other)
{
    for (const auto& [name, rects] : other.rects_)
        for (const auto& r : rects)
            add(name, r);
}

namespace {

constexpr std::string_view kQueryPlaceholder = "{query}";

// Template element names such as "{query} results" match any concrete name
// with the same prefix and suffix.
bool name_matches(const std::string& key, const std::string& name)
{
    if (key == name)
        return true;
    auto pos = key.find(kQueryPlaceholder);
    if (pos == std::string::npos)
        return false;
    auto prefix = std::string_view(key).substr(0, pos);
    auto suffix = std::string_view(key).substr(pos + kQueryPlaceholder.size());
    return name.size() > prefix.size() + suffix.size() && name.compare(0, prefix.size(), prefix) == 0
           && name.compare(name.size() - suffix.size(), suffix.size(), suffix) == 0;
}

}  // namespace

bool ElementRegistry::hits(std::string_view element_name, int x, int y) const
{
    auto name = text::fold(element_name);
    for (const auto& [key, rects] : rects_) {
        if (!name_matches(key, name))
            continue;
        if (std::any_of(rects.begin(), rects.end(), [&](const Rect& r) { return r.contains(x, y); }))
            return true;
    }
    return false;
}

std::vector<std::string> ElementRegistry::elements_at(int x, int y) const
{
    std::vector<std::string> out;
    for (const auto& [name, rects] : rects_)
        if (std::any_of(rects.begin(), rects.end(), [&](const Rect& r) { return r.contains(x, y); }))
            out.push_back(name);
    return out;
}

namespace {

std::string normalize(std::string_view s, const EqualityPolicy& policy)
{
    if (policy.trim)
        s = text::trim(s);
    return policy.case_fold ? text::lower(s) : std::string(s);
}

bool click_matches_target(const Click& c, const ClickTarget& t, const EqualityPolicy& policy)
{
    return policy.ground_aware && policy.registry && policy.registry->hits(t.element_name, c.x, c.y);
}

bool clicks_share_element(const Click& a, const Click& b, const EqualityPolicy& policy)
{
    if (!policy.ground_aware || !policy.registry)
        return false;
    auto left = policy.registry->elements_at(a.x, a.y);
    auto right = policy.registry->elements_at(b.x, b.y);
    return std::any_of(left.begin(), left.end(), [&](const std::string& n) {
        return std::find(right.begin(), right.end(), n) != right.end();
    });
}

}  // namespace

bool actions_equal(const Action& a, const Action& b, const EqualityPolicy& policy)
{
    if (auto* ca = std::get_if<Click>(&a)) {
        if (auto* cb = std::get_if<Click>(&b))
            return *ca == *cb || clicks_share_element(*ca, *cb, policy);
        if (auto* tb = std::get_if<ClickTarget>(&b))
            return click_matches_target(*ca, *tb, policy);
        return false;
    }
    if (auto* ta = std::get_if<ClickTarget>(&a)) {
        if (auto* cb = std::get_if<Click>(&b))
            return click_matches_target(*cb, *ta, policy);
        if (auto* tb = std::get_if<ClickTarget>(&b))
            return normalize(ta->element_name, policy) == normalize(tb->element_name, policy);
        return false;
    }
    if (a.index() != b.index())
        return false;
    if (auto* ya = std::get_if<Type>(&a))
        return normalize(ya->text, policy) == normalize(std::get<Type>(b).text, policy);
    return a == b;
}

}  // namespace chop
