#include "pilot/schema_profile.hpp"

#include <algorithm>
#include <cmath>

#include <nlohmann/json.hpp>

#include "pilot/error.hpp"
#include "pilot/resources.hpp"
#include "text_util.hpp"

namespace pilot {
namespace {

using ordered_json = nlohmann::ordered_json;
using json = nlohmann::json;

constexpr std::string_view kRootKey = "stability_hierarchy";

std::optional<Tier> parse_tier(std::string_view s) noexcept {
  if (s == "stable") return Tier::stable;
  if (s == "semi_stable") return Tier::semi_stable;
  if (s == "variable") return Tier::variable;
  return std::nullopt;
}

bool is_leaf(const ordered_json& node) { return node.is_object() && node.empty(); }

void collect_leaves(const ordered_json& node, std::vector<std::string>& prefix,
                    std::vector<DimensionPath>& out) {
  for (const auto& [key, child] : node.items()) {
    prefix.push_back(key);
    if (is_leaf(child)) {
      out.emplace_back(prefix);
    } else {
      collect_leaves(child, prefix, out);
    }
    prefix.pop_back();
  }
}

const ordered_json& schema_tree() {
  static const ordered_json tree = [] {
    auto doc = ordered_json::parse(resources::body("pilot_schema.json"));
    return doc.at(std::string(kRootKey));
  }();
  return tree;
}

std::string dotted(const std::vector<std::string>& segments) { return detail::join(segments, "."); }

void check_score(const std::string& where, double score) {
  if (!std::isfinite(score) || score < 0.0 || score > 100.0) {
    throw Error(ErrorKind::validation,
                "out of range [0,100]: " + where + " = " + detail::format_fixed(score, 6));
  }
}

// Walks the document subtree against the schema subtree, filling `values`.
void read_subtree(const json& doc, const ordered_json& schema, std::vector<std::string>& prefix,
                  const Schema& index, std::vector<std::optional<double>>& values) {
  for (const auto& [key, child] : doc.items()) {
    prefix.push_back(key);
    const std::string where = dotted(prefix);
    if (!schema.contains(key)) throw Error(ErrorKind::validation, "unknown dimension: " + where);
    const auto& schema_child = schema.at(key);
    if (is_leaf(schema_child)) {
      if (!child.is_number()) throw Error(ErrorKind::validation, "non-numeric score: " + where);
      const double score = child.get<double>();
      check_score(where, score);
      values[index.require_index(DimensionPath(prefix))] = score;
    } else {
      if (!child.is_object()) {
        throw Error(ErrorKind::parse, "malformed document: expected object at " + where);
      }
      read_subtree(child, schema_child, prefix, index, values);
    }
    prefix.pop_back();
  }
}

void write_subtree(std::string& out, const ordered_json& schema, std::vector<std::string>& prefix,
                   const PilotProfile& profile, int depth) {
  const std::string indent(static_cast<std::size_t>(depth) * 2, ' ');
  std::size_t i = 0;
  for (const auto& [key, child] : schema.items()) {
    prefix.push_back(key);
    out += indent;
    out += json(key).dump();
    out += ": ";
    if (is_leaf(child)) {
      out += detail::format_fixed(profile.at(DimensionPath(prefix)), 6);
    } else {
      out += "{\n";
      write_subtree(out, child, prefix, profile, depth + 1);
      out += indent;
      out += "}";
    }
    if (++i < schema.size()) out += ",";
    out += "\n";
    prefix.pop_back();
  }
}

// Mean of `xs` that is exact for replicated inputs, independent of input
// order, and bounded by [min, max].
double stable_mean(std::vector<double>& xs) {
  std::sort(xs.begin(), xs.end());
  const double lo = xs.front();
  double excess = 0.0;
  for (double x : xs) excess += x - lo;
  return std::clamp(lo + excess / static_cast<double>(xs.size()), lo, xs.back());
}

}  // namespace

StabilityTier stability_tier(Tier tier) noexcept {
  switch (tier) {
    case Tier::stable: return {Tier::stable, 5.0};
    case Tier::semi_stable: return {Tier::semi_stable, 15.0};
    case Tier::variable: return {Tier::variable, 30.0};
  }
  return {Tier::variable, 30.0};
}

std::string_view to_string(Tier tier) noexcept {
  switch (tier) {
    case Tier::stable: return "stable";
    case Tier::semi_stable: return "semi_stable";
    case Tier::variable: return "variable";
  }
  return "variable";
}

DimensionPath::DimensionPath(std::vector<std::string> segments) : segments_(std::move(segments)) {
  if (segments_.empty()) throw Error(ErrorKind::invalid_input, "empty dimension path");
  if (!parse_tier(segments_.front())) {
    throw Error(ErrorKind::invalid_input, "unknown dimension: " + str());
  }
  for (const auto& s : segments_) {
    if (s.empty()) throw Error(ErrorKind::invalid_input, "empty segment in dimension path: " + str());
  }
}

DimensionPath DimensionPath::parse(std::string_view text) {
  std::vector<std::string> segments;
  std::size_t pos = 0;
  while (true) {
    const std::size_t dot = text.find('.', pos);
    segments.emplace_back(text.substr(pos, dot == std::string_view::npos ? dot : dot - pos));
    if (dot == std::string_view::npos) break;
    pos = dot + 1;
  }
  return DimensionPath(std::move(segments));
}

std::string DimensionPath::str() const { return dotted(segments_); }

Schema::Schema() {
  std::vector<std::string> prefix;
  collect_leaves(schema_tree(), prefix, leaves_);
  index_.reserve(leaves_.size());
  for (std::size_t i = 0; i < leaves_.size(); ++i) index_.emplace_back(leaves_[i].str(), i);
  std::sort(index_.begin(), index_.end());
  ordered_json wrapped;
  wrapped[std::string(kRootKey)] = schema_tree();
  listing_ = wrapped.dump(2);
}

const Schema& Schema::canonical() {
  static const Schema schema;
  return schema;
}

std::optional<std::size_t> Schema::index_of(const DimensionPath& path) const {
  const std::string key = path.str();
  auto it = std::lower_bound(index_.begin(), index_.end(), key,
                             [](const auto& entry, const std::string& k) { return entry.first < k; });
  if (it == index_.end() || it->first != key) return std::nullopt;
  return it->second;
}

std::size_t Schema::require_index(const DimensionPath& path) const {
  if (auto i = index_of(path)) return *i;
  throw Error(ErrorKind::invalid_input, "unknown dimension: " + path.str());
}

std::string_view to_string(ProfileSource source) noexcept {
  switch (source) {
    case ProfileSource::elicited: return "elicited";
    case ProfileSource::averaged: return "averaged";
    case ProfileSource::manual: return "manual";
  }
  return "manual";
}

std::optional<ProfileSource> parse_profile_source(std::string_view text) noexcept {
  if (text == "elicited") return ProfileSource::elicited;
  if (text == "averaged") return ProfileSource::averaged;
  if (text == "manual") return ProfileSource::manual;
  return std::nullopt;
}

PilotProfile::PilotProfile(std::string persona_id, ProfileSource source, std::vector<double> values)
    : persona_id_(std::move(persona_id)), source_(source), values_(std::move(values)) {
  const auto& schema = Schema::canonical();
  if (values_.size() != schema.leaf_count()) {
    throw Error(ErrorKind::validation, "profile has " + std::to_string(values_.size()) +
                                           " scores, schema has " +
                                           std::to_string(schema.leaf_count()) + " dimensions");
  }
  for (std::size_t i = 0; i < values_.size(); ++i) check_score(schema.leaves()[i].str(), values_[i]);
}

PilotProfile PilotProfile::uniform(std::string persona_id, double score, ProfileSource source) {
  return PilotProfile(std::move(persona_id), source,
                      std::vector<double>(Schema::canonical().leaf_count(), score));
}

double PilotProfile::at(const DimensionPath& path) const {
  return values_[Schema::canonical().require_index(path)];
}

PilotProfile PilotProfile::with_score(const DimensionPath& path, double score) const {
  auto values = values_;
  values[Schema::canonical().require_index(path)] = score;
  return PilotProfile(persona_id_, source_, std::move(values));
}

PilotProfile PilotProfile::with_source(ProfileSource source) const {
  PilotProfile copy = *this;
  copy.source_ = source;
  return copy;
}

PilotProfile PilotProfile::with_persona_id(std::string persona_id) const {
  PilotProfile copy = *this;
  copy.persona_id_ = std::move(persona_id);
  return copy;
}

PilotProfile parse_profile(std::string_view document, std::optional<std::string> fallback_persona_id) {
  json doc;
  try {
    doc = json::parse(document);
  } catch (const json::parse_error& e) {
    throw Error(ErrorKind::parse, std::string("malformed document: ") + e.what());
  }
  if (!doc.is_object()) throw Error(ErrorKind::parse, "malformed document: top level is not an object");

  std::optional<std::string> persona_id = std::move(fallback_persona_id);
  ProfileSource source = ProfileSource::manual;
  const json* tree = nullptr;
  for (const auto& [key, value] : doc.items()) {
    if (key == "persona_id") {
      if (!value.is_string()) throw Error(ErrorKind::validation, "persona_id must be a string");
      persona_id = value.get<std::string>();
    } else if (key == "source") {
      auto parsed = value.is_string() ? parse_profile_source(value.get<std::string>()) : std::nullopt;
      if (!parsed) throw Error(ErrorKind::validation, "unknown profile source: " + value.dump());
      source = *parsed;
    } else if (key == kRootKey) {
      if (!value.is_object()) {
        throw Error(ErrorKind::parse, "malformed document: stability_hierarchy is not an object");
      }
      tree = &value;
    } else {
      throw Error(ErrorKind::validation, "unknown field: " + key);
    }
  }
  if (tree == nullptr) throw Error(ErrorKind::validation, "missing stability_hierarchy");
  if (!persona_id || persona_id->empty()) throw Error(ErrorKind::validation, "missing persona_id");

  const auto& schema = Schema::canonical();
  std::vector<std::optional<double>> slots(schema.leaf_count());
  std::vector<std::string> prefix;
  read_subtree(*tree, schema_tree(), prefix, schema, slots);

  std::vector<double> values;
  values.reserve(slots.size());
  for (std::size_t i = 0; i < slots.size(); ++i) {
    if (!slots[i]) throw Error(ErrorKind::validation, "missing dimension: " + schema.leaves()[i].str());
    values.push_back(*slots[i]);
  }
  return PilotProfile(std::move(*persona_id), source, std::move(values));
}

std::string serialize_profile(const PilotProfile& profile) {
  std::string out = "{\n";
  out += "  \"persona_id\": " + json(profile.persona_id()).dump() + ",\n";
  out += "  \"source\": \"" + std::string(to_string(profile.source())) + "\",\n";
  out += "  \"stability_hierarchy\": {\n";
  std::vector<std::string> prefix;
  write_subtree(out, schema_tree(), prefix, profile, 2);
  out += "  }\n}";
  return out;
}

FlatProfile flatten(const PilotProfile& profile) {
  const auto leaves = Schema::canonical().leaves();
  FlatProfile out;
  out.reserve(leaves.size());
  for (std::size_t i = 0; i < leaves.size(); ++i) out.emplace_back(leaves[i], profile.values()[i]);
  return out;
}

PilotProfile unflatten(std::span<const std::pair<DimensionPath, double>> entries, std::string persona_id,
                       ProfileSource source) {
  const auto& schema = Schema::canonical();
  std::vector<std::optional<double>> slots(schema.leaf_count());
  for (const auto& [path, score] : entries) {
    auto& slot = slots[schema.require_index(path)];
    if (slot) throw Error(ErrorKind::validation, "duplicate dimension: " + path.str());
    slot = score;
  }
  std::vector<double> values;
  values.reserve(slots.size());
  for (std::size_t i = 0; i < slots.size(); ++i) {
    if (!slots[i]) throw Error(ErrorKind::validation, "missing dimension: " + schema.leaves()[i].str());
    values.push_back(*slots[i]);
  }
  return PilotProfile(std::move(persona_id), source, std::move(values));
}

PilotProfile average_profiles(std::span<const PilotProfile> profiles, std::optional<std::string> persona_id) {
  if (profiles.empty()) throw Error(ErrorKind::invalid_input, "average_profiles: empty input");
  const std::size_t n = Schema::canonical().leaf_count();
  for (const auto& p : profiles) {
    if (p.values().size() != n) throw Error(ErrorKind::validation, "average_profiles: schema mismatch");
  }
  std::vector<double> mean(n);
  std::vector<double> column(profiles.size());
  for (std::size_t d = 0; d < n; ++d) {
    for (std::size_t i = 0; i < profiles.size(); ++i) column[i] = profiles[i].values()[d];
    mean[d] = stable_mean(column);
  }
  return PilotProfile(persona_id.value_or(profiles.front().persona_id()), ProfileSource::averaged,
                      std::move(mean));
}

StabilityTier tier_of(const DimensionPath& path) {
  Schema::canonical().require_index(path);
  return stability_tier(*parse_tier(path.segments().front()));
}

VariationReport variation_report(std::span<const PilotProfile> profiles) {
  if (profiles.size() < 2) throw Error(ErrorKind::invalid_input, "variation_report: need at least 2 profiles");
  const auto& schema = Schema::canonical();
  for (const auto& p : profiles) {
    if (p.values().size() != schema.leaf_count()) {
      throw Error(ErrorKind::validation, "variation_report: schema mismatch");
    }
  }
  VariationReport report;
  report.per_path.reserve(schema.leaf_count());
  for (std::size_t d = 0; d < schema.leaf_count(); ++d) {
    auto [lo, hi] = std::minmax_element(profiles.begin(), profiles.end(), [d](const auto& a, const auto& b) {
      return a.values()[d] < b.values()[d];
    });
    const double spread = hi->values()[d] - lo->values()[d];
    const auto& path = schema.leaves()[d];
    report.per_path.emplace_back(path, spread);
    const double allowed = tier_of(path).max_variation;
    if (spread > allowed) report.violations.push_back({path, spread, allowed});
  }
  return report;
}

PilotProfile read_profile_file(const std::filesystem::path& path) {
  return parse_profile(detail::read_file(path));
}

void write_profile_file(const std::filesystem::path& path, const PilotProfile& profile) {
  detail::write_file_atomic(path, serialize_profile(profile) + "\n");
}

}  // namespace pilot
