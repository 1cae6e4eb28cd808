#pragma once

#include <string_view>
#include <vector>

namespace pilot::resources {

/// Body of a bundled resource, keyed by its path under core/resources
/// (e.g. "templates/sbs.txt"). Everything up to and including the first
/// line that reads exactly "---" is header and is dropped, as is a single
/// trailing newline. Throws Error(invalid_input) for an unknown name.
std::string_view body(std::string_view name);

/// Header lines (without the "---" separator) of a bundled resource.
std::string_view header(std::string_view name);

std::vector<std::string_view> names();

}  // namespace pilot::resources
