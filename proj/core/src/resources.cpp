#include "pilot/resources.hpp"

#include <algorithm>
#include <utility>

#include "pilot/error.hpp"

namespace pilot::resources {
namespace detail {
extern const std::pair<std::string_view, std::string_view> kEmbedded[];
extern const std::size_t kEmbeddedCount;
}  // namespace detail

namespace {

std::string_view raw(std::string_view name) {
  for (std::size_t i = 0; i < detail::kEmbeddedCount; ++i) {
    if (detail::kEmbedded[i].first == name) return detail::kEmbedded[i].second;
  }
  throw Error(ErrorKind::invalid_input, "unknown resource: " + std::string(name));
}

// Offset of the first byte after the "---" line, or 0 without a header.
std::size_t body_offset(std::string_view text) {
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t eol = text.find('\n', pos);
    if (eol == std::string_view::npos) eol = text.size();
    if (text.substr(pos, eol - pos) == "---") return eol + 1;
    pos = eol + 1;
  }
  return 0;
}

}  // namespace

std::string_view body(std::string_view name) {
  std::string_view text = raw(name);
  text.remove_prefix(std::min(body_offset(text), text.size()));
  if (!text.empty() && text.back() == '\n') text.remove_suffix(1);
  return text;
}

std::string_view header(std::string_view name) {
  std::string_view text = raw(name);
  std::size_t offset = body_offset(text);
  if (offset < 4) return {};
  return text.substr(0, offset - 4);
}

std::vector<std::string_view> names() {
  std::vector<std::string_view> out;
  out.reserve(detail::kEmbeddedCount);
  for (std::size_t i = 0; i < detail::kEmbeddedCount; ++i) out.push_back(detail::kEmbedded[i].first);
  return out;
}

}  // namespace pilot::resources
