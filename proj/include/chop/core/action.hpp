// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <map>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace chop {

// The executable action space. Keywords are matched case-insensitively on
// parse and rendered upper-case:
//
//   CLICK(x, y) | CLICK(element name) | SCROLL(up|down|left|right)
//   TYPE(text)  | BACK | EXIT | WAIT(seconds)
//
// The rendered form is the interchange format used in datasets, cassettes
// and transcripts.

enum class Direction { Up, Down, Left, Right };

std::string_view to_string(Direction d);

struct Click {
    int x = 0;
    int y = 0;
    bool operator==(const Click&) const = default;
};

// A click by element name, not yet resolved to coordinates.
struct ClickTarget {
    std::string element_name;
    bool operator==(const ClickTarget&) const = default;
};

struct Scroll {
    Direction direction = Direction::Down;
    bool operator==(const Scroll&) const = default;
};

struct Type {
    std::string text;
    bool operator==(const Type&) const = default;
};

struct Back {
    bool operator==(const Back&) const = default;
};

struct Exit {
    bool operator==(const Exit&) const = default;
};

struct Wait {
    int seconds = 1;
    bool operator==(const Wait&) const = default;
};

using Action = std::variant<Click, ClickTarget, Scroll, Type, Back, Exit, Wait>;

Action parse_action(std::string_view text);
std::string render_action(const Action& action);

std::vector<Action> parse_actions(const std::vector<std::string>& lines);
std::vector<std::string> render_actions(const std::vector<Action>& actions);

inline bool is_exit(const Action& a) { return std::holds_alternative<Exit>(a); }

struct Rect {
    int x1 = 0;
    int y1 = 0;
    int x2 = 0;
    int y2 = 0;

    bool contains(int x, int y) const { return x >= x1 && x <= x2 && y >= y1 && y <= y2; }
    int center_x() const { return (x1 + x2) / 2; }
    int center_y() const { return (y1 + y2) / 2; }
    bool operator==(const Rect&) const = default;
};

// Element name -> every rectangle the name occupies across an app's screens.
// Used to decide whether a coordinate click and a named click refer to the
// same UI element.
class ElementRegistry {
public:
    void add(std::string_view element_name, Rect bounds);
    void merge(const ElementRegistry& other);

    bool hits(std::string_view element_name, int x, int y) const;
    std::vector<std::string> elements_at(int x, int y) const;
    bool empty() const { return rects_.empty(); }

private:
    std::map<std::string, std::vector<Rect>> rects_;  // keyed by folded name
};

struct EqualityPolicy {
    bool case_fold = true;
    bool trim = true;
    bool ground_aware = true;
    const ElementRegistry* registry = nullptr;
};

bool actions_equal(const Action& a, const Action& b, const EqualityPolicy& policy = {});

}  // namespace chop
