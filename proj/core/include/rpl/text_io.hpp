#pragma once

#include <string>
#include <string_view>

namespace rpl::text {

// Shortest decimal representation that parses back to the same double.
// Locale independent.
std::string format_double(double value);

// Strict, locale-independent parse of the whole token. Returns false on
// trailing garbage or an empty token. Accepts "nan"/"inf" spellings; callers
// check finiteness themselves.
bool parse_double(std::string_view token, double& value);

std::string_view trim(std::string_view s);

}  // namespace rpl::text
