#pragma once

#include <compare>
#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace pilot {

enum class Tier { stable, semi_stable, variable };

/// A stability tier and the largest spread (max - min, in percentage
/// points) a dimension of that tier may show across profiles of one
/// persona.
struct StabilityTier {
  Tier tier;
  double max_variation;

  bool operator==(const StabilityTier&) const = default;
};

StabilityTier stability_tier(Tier tier) noexcept;
std::string_view to_string(Tier tier) noexcept;

/// Location of a leaf in the profile schema, e.g.
/// `variable.emotional_tone.swear_words`. Construction only checks shape;
/// membership in the canonical schema is checked where a path is used.
class DimensionPath {
 public:
  DimensionPath() = default;
  explicit DimensionPath(std::vector<std::string> segments);

  /// Splits on '.'; throws Error(invalid_input) on empty segments or an
  /// unknown tier prefix.
  static DimensionPath parse(std::string_view dotted);

  const std::vector<std::string>& segments() const noexcept { return segments_; }
  std::string str() const;

  auto operator<=>(const DimensionPath&) const = default;

 private:
  std::vector<std::string> segments_;
};

/// The canonical schema tree, loaded once from the bundled resource.
/// Leaves are listed depth-first in the order they appear in the listing.
class Schema {
 public:
  static const Schema& canonical();

  std::span<const DimensionPath> leaves() const noexcept { return leaves_; }
  std::size_t leaf_count() const noexcept { return leaves_.size(); }
  std::optional<std::size_t> index_of(const DimensionPath& path) const;
  /// Throws Error(invalid_input) "unknown dimension: <path>".
  std::size_t require_index(const DimensionPath& path) const;
  /// The schema as handed to an analyzer model: the nested listing with
  /// empty objects at the leaves, wrapped in `stability_hierarchy`.
  const std::string& listing() const noexcept { return listing_; }

 private:
  Schema();
  std::vector<DimensionPath> leaves_;
  std::vector<std::pair<std::string, std::size_t>> index_;  // sorted by dotted path
  std::string listing_;
};

enum class ProfileSource { elicited, averaged, manual };

std::string_view to_string(ProfileSource source) noexcept;
std::optional<ProfileSource> parse_profile_source(std::string_view text) noexcept;

/// A complete psycholinguistic profile: one score in [0, 100] for every
/// canonical leaf. Scores are held densely in canonical leaf order, so a
/// constructed profile is complete by construction.
class PilotProfile {
 public:
  /// `values` must have one finite score in [0, 100] per canonical leaf.
  PilotProfile(std::string persona_id, ProfileSource source, std::vector<double> values);

  static PilotProfile uniform(std::string persona_id, double score,
                              ProfileSource source = ProfileSource::manual);

  const std::string& persona_id() const noexcept { return persona_id_; }
  ProfileSource source() const noexcept { return source_; }
  std::span<const double> values() const noexcept { return values_; }

  double at(const DimensionPath& path) const;
  PilotProfile with_score(const DimensionPath& path, double score) const;
  PilotProfile with_source(ProfileSource source) const;
  PilotProfile with_persona_id(std::string persona_id) const;

  bool operator==(const PilotProfile&) const = default;

 private:
  std::string persona_id_;
  ProfileSource source_;
  std::vector<double> values_;
};

using FlatProfile = std::vector<std::pair<DimensionPath, double>>;

/// Parses a profile document (JSON whose `stability_hierarchy` object
/// mirrors the schema). `persona_id` is taken from the document; the
/// argument is used only when the document has none. `source` defaults to
/// manual when absent.
PilotProfile parse_profile(std::string_view document,
                           std::optional<std::string> fallback_persona_id = std::nullopt);

/// Canonical document text: fixed key order, two-space indentation,
/// scores rounded to at most six fractional digits, `source` always
/// present. No trailing newline.
std::string serialize_profile(const PilotProfile& profile);

FlatProfile flatten(const PilotProfile& profile);
/// Order-independent inverse of flatten. Rejects missing, duplicate, and
/// unknown paths.
PilotProfile unflatten(std::span<const std::pair<DimensionPath, double>> entries,
                       std::string persona_id, ProfileSource source);

/// Per-path arithmetic mean; result source is `averaged`. The persona id
/// defaults to the first input's.
PilotProfile average_profiles(std::span<const PilotProfile> profiles,
                              std::optional<std::string> persona_id = std::nullopt);

StabilityTier tier_of(const DimensionPath& path);

struct TierViolation {
  DimensionPath path;
  double observed;
  double allowed;
};

struct VariationReport {
  FlatProfile per_path;  // max - min per leaf, canonical order
  std::vector<TierViolation> violations;
};

VariationReport variation_report(std::span<const PilotProfile> profiles);

PilotProfile read_profile_file(const std::filesystem::path& path);
void write_profile_file(const std::filesystem::path& path, const PilotProfile& profile);

}  // namespace pilot
