#include "pilot/prompt_engine.hpp"

#include <set>
#include <tuple>

#include <nlohmann/json.hpp>

#include "pilot/error.hpp"
#include "pilot/resources.hpp"
#include "text_util.hpp"

namespace pilot {
namespace {

using json = nlohmann::json;
using Binding = std::pair<std::string_view, std::string_view>;

void require_persona(const Persona& persona) {
  if (detail::trim(persona.description).empty()) {
    throw Error(ErrorKind::invalid_input, "persona description must be non-empty (persona '" + persona.id + "')");
  }
}

void require_request(const ContentRequest& request) {
  if (detail::trim(request.text).empty()) {
    throw Error(ErrorKind::invalid_input, "request text must be non-empty (request '" + request.id + "')");
  }
}

std::string require_string(const json& obj, const char* field, std::size_t line) {
  auto it = obj.find(field);
  if (it == obj.end() || !it->is_string()) {
    throw Error(ErrorKind::validation,
                "line " + std::to_string(line) + ": missing string field '" + field + "'");
  }
  return it->get<std::string>();
}

template <typename Fn>
void for_each_jsonl(const std::filesystem::path& path, Fn&& fn) {
  const std::string text = detail::read_file(path);
  std::size_t line_no = 0;
  for (auto line : detail::split_lines(text)) {
    ++line_no;
    if (detail::trim(line).empty()) continue;
    json obj;
    try {
      obj = json::parse(line);
    } catch (const json::parse_error&) {
      throw Error(ErrorKind::parse, "line " + std::to_string(line_no) + ": parse failure");
    }
    if (!obj.is_object()) throw Error(ErrorKind::parse, "line " + std::to_string(line_no) + ": parse failure");
    fn(obj, line_no);
  }
}

}  // namespace

std::string_view to_string(ContentType type) noexcept {
  switch (type) {
    case ContentType::personal_writing: return "personal writing";
    case ContentType::formal_writing: return "formal writing";
    case ContentType::email_correspondence: return "email correspondence";
    case ContentType::social_media: return "social media";
    case ContentType::commercial_writing: return "commercial writing";
    case ContentType::entertainment: return "entertainment";
    case ContentType::traditional_book_or_story: return "traditional book or story";
  }
  return "personal writing";
}

std::optional<ContentType> parse_content_type(std::string_view text) noexcept {
  for (ContentType t : kContentTypes) {
    if (to_string(t) == text) return t;
  }
  return std::nullopt;
}

std::string_view to_string(Condition condition) noexcept {
  switch (condition) {
    case Condition::nps: return "NPS";
    case Condition::sbs: return "SBS";
    case Condition::hps: return "HPS";
  }
  return "NPS";
}

std::optional<Condition> parse_condition(std::string_view text) noexcept {
  for (Condition c : kConditions) {
    if (to_string(c) == text) return c;
  }
  return std::nullopt;
}

std::string substitute(std::string_view tmpl, std::span<const Binding> bindings) {
  std::string out;
  out.reserve(tmpl.size());
  std::size_t pos = 0;
  while (pos < tmpl.size()) {
    const std::size_t open = tmpl.find('{', pos);
    if (open == std::string_view::npos) break;
    out.append(tmpl.substr(pos, open - pos));
    const std::size_t close = tmpl.find('}', open + 1);
    if (close == std::string_view::npos) {
      pos = open;
      break;
    }
    const std::string_view name = tmpl.substr(open + 1, close - open - 1);
    const Binding* match = nullptr;
    for (const auto& b : bindings) {
      if (b.first == name) match = &b;
    }
    if (match) {
      out.append(match->second);
      pos = close + 1;
    } else {
      out.push_back('{');
      pos = open + 1;
    }
  }
  out.append(tmpl.substr(std::min(pos, tmpl.size())));
  return out;
}

PromptBundle render_nps(const Persona& persona, const ContentRequest& request, std::string model_id) {
  require_persona(persona);
  require_request(request);
  const Binding bindings[] = {{"persona", persona.description}, {"request", request.text}};
  PromptBundle bundle;
  bundle.condition = Condition::nps;
  bundle.persona_id = persona.id;
  bundle.request_id = request.id;
  bundle.model_id = std::move(model_id);
  bundle.rendered_prompt = substitute(resources::body("templates/nps.txt"), bindings);
  return bundle;
}

PromptBundle render_sbs(const PilotProfile& profile, const ContentRequest& request, std::string model_id) {
  require_request(request);
  const std::string serialized = serialize_profile(profile);
  const Binding bindings[] = {{"profile", serialized}, {"request", request.text}};
  PromptBundle bundle;
  bundle.condition = Condition::sbs;
  bundle.persona_id = profile.persona_id();
  bundle.request_id = request.id;
  bundle.model_id = std::move(model_id);
  bundle.rendered_prompt = substitute(resources::body("templates/sbs.txt"), bindings);
  bundle.profile_ref = profile.persona_id();
  return bundle;
}

PromptBundle render_hps(const Persona& persona, const PilotProfile& profile, const ContentRequest& request,
                        std::string model_id) {
  require_persona(persona);
  require_request(request);
  const std::string serialized = serialize_profile(profile);
  const Binding bindings[] = {
      {"persona", persona.description}, {"profile", serialized}, {"request", request.text}};
  PromptBundle bundle;
  bundle.condition = Condition::hps;
  bundle.persona_id = persona.id;
  bundle.request_id = request.id;
  bundle.model_id = std::move(model_id);
  bundle.rendered_prompt = substitute(resources::body("templates/hps.txt"), bindings);
  bundle.profile_ref = profile.persona_id();
  return bundle;
}

PromptBundle render(Condition condition, const Persona& persona, const PilotProfile* profile,
                    const ContentRequest& request, std::string model_id) {
  if (uses_profile(condition) && profile == nullptr) {
    throw Error(ErrorKind::invalid_input,
                std::string(to_string(condition)) + " requires a profile for persona '" + persona.id + "'");
  }
  switch (condition) {
    case Condition::nps: return render_nps(persona, request, std::move(model_id));
    case Condition::sbs: {
      auto bundle = render_sbs(*profile, request, std::move(model_id));
      bundle.persona_id = persona.id;
      return bundle;
    }
    case Condition::hps: return render_hps(persona, *profile, request, std::move(model_id));
  }
  throw Error(ErrorKind::invalid_input, "unknown condition");
}

std::string render_elicitation(std::span<const std::string> texts) {
  std::vector<std::string> samples;
  for (const auto& t : texts) {
    if (!detail::trim(t).empty()) samples.emplace_back(detail::trim(t));
  }
  if (samples.empty()) throw Error(ErrorKind::invalid_input, "elicitation needs at least one non-empty text");
  const std::string joined = detail::join(samples, "\n\n");
  const Binding bindings[] = {{"schema", Schema::canonical().listing()}, {"text", joined}};
  return substitute(resources::body("templates/elicit.txt"), bindings);
}

TaggedOutput parse_tagged_output(std::string_view raw) {
  if (raw.empty()) throw Error(ErrorKind::invalid_input, "empty model output");

  auto block = [raw](std::string_view open, std::string_view close) -> std::optional<std::string_view> {
    const std::size_t start = raw.find(open);
    if (start == std::string_view::npos) return std::nullopt;
    const std::size_t inner = start + open.size();
    const std::size_t end = raw.find(close, inner);
    if (end == std::string_view::npos) return std::nullopt;
    return detail::trim(raw.substr(inner, end - inner));
  };

  const auto response = block("<response>", "</response>");
  if (!response) throw Error(ErrorKind::parse, "missing response tags");
  if (response->empty()) throw Error(ErrorKind::parse, "empty response");
  TaggedOutput out;
  out.response = std::string(*response);
  out.explanation = std::string(block("<explanation>", "</explanation>").value_or(std::string_view{}));
  out.raw = std::string(raw);
  return out;
}

void for_each_cell(std::span<const Persona> personas, std::span<const Condition> conditions,
                   std::span<const ContentRequest> requests, std::span<const std::string> models,
                   const ProfileCatalog& profiles, const std::function<void(const MatrixCell&)>& visit) {
  if (personas.empty()) throw Error(ErrorKind::invalid_input, "experiment matrix: empty persona list");
  if (conditions.empty()) throw Error(ErrorKind::invalid_input, "experiment matrix: empty condition list");
  if (requests.empty()) throw Error(ErrorKind::invalid_input, "experiment matrix: empty request list");
  if (models.empty()) throw Error(ErrorKind::invalid_input, "experiment matrix: empty model list");

  std::set<std::tuple<std::string, Condition, std::string, std::string>> seen;
  for (const auto& p : personas) {
    require_persona(p);
    for (Condition c : conditions) {
      if (uses_profile(c) && !profiles.contains(p.id)) {
        throw Error(ErrorKind::invalid_input,
                    std::string(to_string(c)) + " requires a profile for persona '" + p.id + "'");
      }
      for (const auto& r : requests) {
        for (const auto& m : models) {
          if (!seen.emplace(p.id, c, r.id, m).second) {
            throw Error(ErrorKind::invalid_input,
                        "experiment matrix: duplicate coordinate " + p.id + "/" + std::string(to_string(c)) +
                            "/" + r.id + "/" + m);
          }
        }
      }
    }
  }
  for (const auto& r : requests) require_request(r);

  std::size_t index = 0;
  for (const auto& p : personas) {
    for (Condition c : conditions) {
      for (const auto& r : requests) {
        for (const auto& m : models) visit(MatrixCell{p, c, r, m, index++});
      }
    }
  }
}

std::vector<PromptBundle> build_matrix(std::span<const Persona> personas, std::span<const Condition> conditions,
                                       std::span<const ContentRequest> requests,
                                       std::span<const std::string> models, const ProfileCatalog& profiles) {
  std::vector<PromptBundle> out;
  out.reserve(personas.size() * conditions.size() * requests.size() * models.size());
  // Profile serialization dominates rendering; render each (persona,
  // condition, request) once and stamp the model id per copy.
  for_each_cell(personas, conditions, requests, models, profiles, [&](const MatrixCell& cell) {
    if (!out.empty() && &cell.model_id != &models.front()) {
      PromptBundle copy = out.back();
      copy.model_id = cell.model_id;
      out.push_back(std::move(copy));
      return;
    }
    const PilotProfile* profile = nullptr;
    if (uses_profile(cell.condition)) profile = &profiles.at(cell.persona.id);
    out.push_back(render(cell.condition, cell.persona, profile, cell.request, cell.model_id));
  });
  return out;
}

std::vector<ContentRequest> read_request_catalog(const std::filesystem::path& path) {
  std::vector<ContentRequest> out;
  std::set<std::string> ids;
  for_each_jsonl(path, [&](const json& obj, std::size_t line) {
    ContentRequest r;
    r.id = require_string(obj, "id", line);
    const std::string type = require_string(obj, "content_type", line);
    auto parsed = parse_content_type(type);
    if (!parsed) {
      throw Error(ErrorKind::validation, "line " + std::to_string(line) + ": unknown content_type '" + type + "'");
    }
    r.content_type = *parsed;
    r.text = require_string(obj, "text", line);
    if (detail::trim(r.text).empty()) {
      throw Error(ErrorKind::validation, "line " + std::to_string(line) + ": empty request text");
    }
    if (!ids.insert(r.id).second) {
      throw Error(ErrorKind::validation, "line " + std::to_string(line) + ": duplicate id '" + r.id + "'");
    }
    out.push_back(std::move(r));
  });
  return out;
}

std::vector<PersonaEntry> read_persona_catalog(const std::filesystem::path& path) {
  std::vector<PersonaEntry> out;
  std::set<std::string> ids;
  const auto base_dir = path.parent_path();
  for_each_jsonl(path, [&](const json& obj, std::size_t line) {
    PersonaEntry e;
    e.persona.id = require_string(obj, "id", line);
    e.persona.description = require_string(obj, "description", line);
    if (detail::trim(e.persona.description).empty()) {
      throw Error(ErrorKind::validation, "line " + std::to_string(line) + ": empty persona description");
    }
    if (obj.contains("base_persona")) e.persona.base_persona = require_string(obj, "base_persona", line);
    if (obj.contains("profile")) {
      std::filesystem::path p = require_string(obj, "profile", line);
      e.profile_path = p.is_absolute() ? p : base_dir / p;
    }
    if (!ids.insert(e.persona.id).second) {
      throw Error(ErrorKind::validation, "line " + std::to_string(line) + ": duplicate id '" + e.persona.id + "'");
    }
    out.push_back(std::move(e));
  });
  return out;
}

}  // namespace pilot
