#pragma once

#include <array>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "pilot/schema_profile.hpp"

namespace pilot {

enum class ContentType {
  personal_writing,
  formal_writing,
  email_correspondence,
  social_media,
  commercial_writing,
  entertainment,
  traditional_book_or_story,
};

inline constexpr std::array<ContentType, 7> kContentTypes = {
    ContentType::personal_writing,   ContentType::formal_writing,     ContentType::email_correspondence,
    ContentType::social_media,       ContentType::commercial_writing, ContentType::entertainment,
    ContentType::traditional_book_or_story,
};

/// Wire names, e.g. "social media", "traditional book or story".
std::string_view to_string(ContentType type) noexcept;
std::optional<ContentType> parse_content_type(std::string_view text) noexcept;

/// Steering condition: natural-language persona (NPS), schema-based (SBS),
/// or hybrid persona + schema (HPS).
enum class Condition { nps, sbs, hps };

inline constexpr std::array<Condition, 3> kConditions = {Condition::nps, Condition::sbs, Condition::hps};

std::string_view to_string(Condition condition) noexcept;  // "NPS" / "SBS" / "HPS"
std::optional<Condition> parse_condition(std::string_view text) noexcept;
constexpr bool uses_profile(Condition c) noexcept { return c != Condition::nps; }

struct Persona {
  std::string id;
  std::string description;
  std::optional<std::string> base_persona;
};

struct ContentRequest {
  std::string id;
  ContentType content_type = ContentType::personal_writing;
  std::string text;
};

struct PromptBundle {
  Condition condition = Condition::nps;
  std::string persona_id;
  std::string request_id;
  std::string model_id;
  std::string rendered_prompt;
  std::optional<std::string> profile_ref;  // set iff condition uses a profile
};

struct TaggedOutput {
  std::string explanation;
  std::string response;
  std::string raw;
};

/// Single-pass `{name}` substitution. Replacement text is never rescanned,
/// and placeholders without a binding are left as-is.
std::string substitute(std::string_view tmpl,
                       std::span<const std::pair<std::string_view, std::string_view>> bindings);

PromptBundle render_nps(const Persona& persona, const ContentRequest& request, std::string model_id = {});
PromptBundle render_sbs(const PilotProfile& profile, const ContentRequest& request, std::string model_id = {});
PromptBundle render_hps(const Persona& persona, const PilotProfile& profile, const ContentRequest& request,
                        std::string model_id = {});
PromptBundle render(Condition condition, const Persona& persona, const PilotProfile* profile,
                    const ContentRequest& request, std::string model_id = {});

/// Analyzer prompt for profile elicitation: the schema listing plus the
/// text samples joined by blank lines.
std::string render_elicitation(std::span<const std::string> texts);

/// Extracts the first <explanation>...</explanation> and the first
/// <response>...</response>, trimmed. Tags are case-sensitive; the first
/// closing tag after an opening tag ends the block. A missing explanation
/// yields an empty one; a missing response throws Error(parse)
/// "missing response tags".
TaggedOutput parse_tagged_output(std::string_view raw);

/// Profiles for the structured conditions, keyed by persona id.
using ProfileCatalog = std::map<std::string, PilotProfile>;

struct MatrixCell {
  const Persona& persona;
  Condition condition;
  const ContentRequest& request;
  const std::string& model_id;
  std::size_t index;  // position in matrix order
};

/// Visits the experiment matrix persona-major, then condition, request,
/// model. Throws before visiting anything if a list is empty or a
/// structured condition lacks a persona's profile.
void for_each_cell(std::span<const Persona> personas, std::span<const Condition> conditions,
                   std::span<const ContentRequest> requests, std::span<const std::string> models,
                   const ProfileCatalog& profiles, const std::function<void(const MatrixCell&)>& visit);

std::vector<PromptBundle> build_matrix(std::span<const Persona> personas, std::span<const Condition> conditions,
                                       std::span<const ContentRequest> requests,
                                       std::span<const std::string> models, const ProfileCatalog& profiles = {});

/// Request catalog: JSONL, one {"id", "content_type", "text"} per line.
std::vector<ContentRequest> read_request_catalog(const std::filesystem::path& path);

struct PersonaEntry {
  Persona persona;
  std::optional<std::filesystem::path> profile_path;  // resolved against the catalog's directory
};

/// Persona catalog: JSONL, one {"id", "description", "base_persona"?, "profile"?} per line.
std::vector<PersonaEntry> read_persona_catalog(const std::filesystem::path& path);

}  // namespace pilot
