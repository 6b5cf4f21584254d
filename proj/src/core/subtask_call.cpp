// SPDX-License-Identifier: Apache-2.0
#include "chop/core/text.hpp"
#include "chop/core/types.hpp"
#include "chop/error.hpp"

namespace chop {

namespace {

bool is_quote(char c)
{
    return c == '\'' || c == '"';
}

std::vector<std::string> split_parameters(std::string_view inner)
{
    std::vector<std::string> params;
    if (text::trim(inner).empty())
        return params;

    std::size_t i = 0;
    while (i <= inner.size()) {
        while (i < inner.size() && (inner[i] == ' ' || inner[i] == '\t'))
            ++i;
        if (i < inner.size() && is_quote(inner[i])) {
            char q = inner[i];
            bool closed = false;
            for (auto j = inner.find(q, i + 1); j != std::string_view::npos; j = inner.find(q, j + 1)) {
                auto rest = text::trim(inner.substr(j + 1));
                if (rest.empty() || rest.front() == ',') {
                    params.emplace_back(inner.substr(i + 1, j - i - 1));
                    auto comma = inner.find(',', j + 1);
                    i = comma == std::string_view::npos ? inner.size() + 1 : comma + 1;
                    closed = true;
                    break;
                }
            }
            if (closed)
                continue;
        }
        auto comma = inner.find(',', i);
        auto end = comma == std::string_view::npos ? inner.size() : comma;
        params.emplace_back(text::trim(inner.substr(i, end - i)));
        i = end + 1;
    }
    return params;
}

}  // namespace

SubtaskCall parse_subtask_call(std::string_view line)
{
    auto s = text::trim(line);
    if (!s.empty() && s.back() == '.')
        s = text::trim(s.substr(0, s.size() - 1));

    SubtaskCall call;
    auto open = s.find('(');
    if (open == std::string_view::npos) {
        call.name = std::string(s);
    } else {
        auto close = s.rfind(')');
        if (close == std::string_view::npos || close < open)
            throw Error(ErrorCode::InvalidInput, "unbalanced parentheses in '" + std::string(line) + "'");
        call.name = std::string(text::trim(s.substr(0, open)));
        call.parameters = split_parameters(s.substr(open + 1, close - open - 1));
    }
    if (call.name.empty())
        throw Error(ErrorCode::InvalidInput, "subtask call without a name: '" + std::string(line) + "'");
    return call;
}

}  // namespace chop
