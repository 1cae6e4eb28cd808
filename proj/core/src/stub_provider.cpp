#include <algorithm>
#include <cctype>
#include <cmath>
#include <set>

#include <nlohmann/json.hpp>

#include "pilot/provider_gateway.hpp"
#include "pilot/resources.hpp"
#include "pilot/schema_profile.hpp"
#include "rng.hpp"
#include "text_util.hpp"

namespace pilot {
namespace {

using detail::Rng;

struct ModelStyle {
  std::size_t min_words;
  std::size_t max_words;
  std::size_t vocab_begin;  // slice of the bundled word list
  std::size_t vocab_end;
  double persona_intro;     // chance an unstructured reply opens with a role statement
  double placeholder;       // chance of a bracketed placeholder
};

const std::vector<std::string_view>& word_list() {
  static const std::vector<std::string_view> words = [] {
    std::vector<std::string_view> out;
    for (auto line : detail::split_lines(resources::body("stub_words.txt"))) {
      auto w = detail::trim(line);
      if (!w.empty()) out.push_back(w);
    }
    return out;
  }();
  return words;
}

ModelStyle style_for(const std::string& model_id) {
  const std::size_t n = word_list().size();
  if (model_id == "stub-a") return {60, 110, 0, n / 2, 0.45, 0.30};
  if (model_id == "stub-b") return {90, 150, 0, n, 0.40, 0.25};
  if (model_id == "stub-c") return {120, 200, n / 3, n, 0.15, 0.10};
  Rng rng(detail::fnv1a64(model_id));
  const std::size_t lo = 50 + rng.below(80);
  const std::size_t begin = rng.below(n / 3);
  return {lo, lo + 40 + rng.below(80), begin, n, 0.1 + 0.4 * rng.unit(), 0.3 * rng.unit()};
}

bool is_stopword(std::string_view w) {
  static const std::set<std::string_view> stop = {
      "about", "after", "also", "from", "have", "into", "that", "their", "them", "they", "this",
      "what", "when", "which", "with", "your", "words", "write", "focusing", "including", "should"};
  return stop.contains(w);
}

std::vector<std::string> content_words(std::string_view text) {
  std::vector<std::string> out;
  std::string cur;
  auto flush = [&] {
    if (cur.size() >= 4 && !is_stopword(cur) &&
        std::find(out.begin(), out.end(), cur) == out.end())
      out.push_back(cur);
    cur.clear();
  };
  for (char c : text) {
    if (std::isalpha(static_cast<unsigned char>(c))) {
      cur.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    } else {
      flush();
    }
  }
  flush();
  return out;
}

struct PromptParts {
  bool structured = false;
  std::string persona;
  std::string request;
};

PromptParts dissect(std::string_view prompt) {
  PromptParts parts;
  constexpr std::string_view persona_prefix = "Pretend you are a(n) ";
  constexpr std::string_view request_prefix = "Respond to this request: ";
  std::string_view rest = prompt;
  if (rest.starts_with(persona_prefix)) {
    rest.remove_prefix(persona_prefix.size());
    std::size_t end = rest.find(".\n");
    const std::size_t sentence = rest.find(". ");
    if (end == std::string_view::npos || (sentence != std::string_view::npos && sentence < end)) end = sentence;
    if (end == std::string_view::npos) end = rest.size();
    parts.persona = std::string(rest.substr(0, end));
    rest.remove_prefix(std::min(rest.size(), end + 2));
  }
  if (auto at = prompt.find(request_prefix); at != std::string_view::npos) {
    parts.structured = true;
    auto tail = prompt.substr(at + request_prefix.size());
    parts.request = std::string(tail.substr(0, tail.find('\n')));
  } else {
    parts.request = std::string(rest);
  }
  return parts;
}

std::string article_for(std::string_view noun) {
  if (noun.empty()) return "a";
  const char c = static_cast<char>(std::tolower(static_cast<unsigned char>(noun.front())));
  return std::string_view("aeiou").find(c) != std::string_view::npos ? "an" : "a";
}

std::string compose_body(Rng& rng, const ModelStyle& style, const PromptParts& parts) {
  const auto& words = word_list();
  const auto topic = content_words(parts.request);
  const auto persona_words = content_words(parts.persona);
  const double topic_weight = parts.structured ? 0.6 : 0.3;
  const double persona_weight = parts.persona.empty() ? 0.0 : 0.08;

  auto draw = [&]() -> std::string {
    const double u = rng.unit();
    if (!topic.empty() && u < topic_weight) return topic[rng.below(topic.size())];
    if (!persona_words.empty() && u < topic_weight + persona_weight) {
      return persona_words[rng.below(persona_words.size())];
    }
    return std::string(words[style.vocab_begin + rng.below(style.vocab_end - style.vocab_begin)]);
  };

  std::string out;
  if (!parts.structured && !parts.persona.empty() && rng.chance(style.persona_intro)) {
    out += "As " + article_for(parts.persona) + " " + parts.persona + ", I find this worth some thought. ";
  }
  const std::size_t target = rng.between(style.min_words, style.max_words);
  std::size_t emitted = 0;
  while (emitted < target) {
    const std::size_t len = std::min(target - emitted, rng.between(8, 16));
    for (std::size_t i = 0; i < len; ++i) {
      std::string w = draw();
      if (i == 0) w[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(w[0])));
      out += w;
      out += (i + 1 == len) ? ". " : " ";
    }
    emitted += len;
  }
  if (rng.chance(style.placeholder)) out += "Warm regards, [Your Name]. ";
  if (!out.empty() && out.back() == ' ') out.pop_back();
  return out;
}

std::string elicitation_reply(Rng& rng) {
  using ordered_json = nlohmann::ordered_json;
  const auto& schema = Schema::canonical();
  ordered_json root;
  ordered_json& tree = root["stability_hierarchy"];
  for (const auto& path : schema.leaves()) {
    ordered_json* node = &tree;
    for (const auto& seg : path.segments()) node = &(*node)[seg];
    *node = static_cast<int>(rng.below(101));
  }
  return root.dump(2);
}

std::string truncate_chars(std::string text, int max_chars) {
  if (max_chars <= 0 || text.size() <= static_cast<std::size_t>(max_chars)) return text;
  std::size_t cut = static_cast<std::size_t>(max_chars);
  while (cut > 0 && (static_cast<unsigned char>(text[cut]) & 0xC0) == 0x80) --cut;
  text.resize(cut);
  return text;
}

}  // namespace

ProviderReply StubProvider::complete(const GenerationRequest& request) {
  const std::uint64_t seed = detail::fnv1a64(request.prompt, detail::fnv1a64(request.model_id)) ^
                             detail::splitmix64(request.seed.value_or(0));
  Rng rng(seed);
  ProviderReply reply;
  if (request.prompt.find("JSON schema:") != std::string::npos &&
      request.prompt.find("Text to analyze:") != std::string::npos) {
    reply.text = elicitation_reply(rng);
    return reply;
  }
  const ModelStyle style = style_for(request.model_id);
  const PromptParts parts = dissect(request.prompt);
  std::string body = compose_body(rng, style, parts);
  if (parts.structured) {
    const auto leaves = Schema::canonical().leaves();
    std::string explanation = "The most important parameters here are ";
    for (int i = 0; i < 3; ++i) {
      if (i) explanation += i == 2 ? ", and " : ", ";
      explanation += leaves[rng.below(leaves.size())].segments().back();
    }
    explanation += ", so the response keeps a steady register.";
    body = "<explanation> " + explanation + " </explanation>\n\n<response> " + body + " </response>";
  }
  reply.text = truncate_chars(std::move(body), request.max_output_chars);
  return reply;
}

std::vector<std::vector<double>> StubProvider::embed_batch(std::span<const std::string> texts,
                                                           const std::string& model_id) {
  std::vector<std::vector<double>> out;
  out.reserve(texts.size());
  const std::uint64_t basis = detail::fnv1a64(model_id);
  for (const auto& text : texts) {
    std::vector<double> v(kEmbeddingDim, 0.0);
    std::string token;
    auto flush = [&] {
      if (token.empty()) return;
      const std::uint64_t h = detail::fnv1a64(token, basis);
      v[h % kEmbeddingDim] += (h >> 63) ? -1.0 : 1.0;
      token.clear();
    };
    for (char c : text) {
      if (std::isalnum(static_cast<unsigned char>(c))) {
        token.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
      } else {
        flush();
      }
    }
    flush();
    double norm = 0.0;
    for (double x : v) norm += x * x;
    if (norm == 0.0) {
      v[0] = 1.0;
    } else {
      norm = std::sqrt(norm);
      for (double& x : v) x /= norm;
    }
    out.push_back(std::move(v));
  }
  return out;
}

}  // namespace pilot
