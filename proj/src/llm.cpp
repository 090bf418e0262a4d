#include "relaug/llm.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <set>
#include <thread>

#include "httplib.h"
#include "relaug/csv.hpp"

namespace relaug::llm {

using nlohmann::json;

std::string_view to_string(PromptKind kind) {
  switch (kind) {
    case PromptKind::Descriptions:
      return "descriptions";
    case PromptKind::TableScoring:
      return "table_scoring";
    case PromptKind::FeatureRanking:
      return "feature_ranking";
  }
  return "descriptions";
}

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::string current;
  const auto flush = [&] {
    if (!current.empty()) {
      tokens.push_back(std::move(current));
      current.clear();
    }
  };
  char previous = 0;
  for (const char c : text) {
    const auto uc = static_cast<unsigned char>(c);
    if (!std::isalnum(uc)) {
      flush();
    } else {
      if (std::isupper(uc) && std::islower(static_cast<unsigned char>(previous))) {
        flush();
      }
      current += static_cast<char>(std::tolower(uc));
    }
    previous = c;
  }
  flush();
  return tokens;
}

namespace {

double overlap_fraction(const std::set<std::string>& query, std::string_view text) {
  if (query.empty()) {
    return 0.0;
  }
  std::size_t hits = 0;
  const auto words = tokenize(text);
  const std::set<std::string> item(words.begin(), words.end());
  for (const auto& token : query) {
    hits += item.contains(token) ? 1 : 0;
  }
  return static_cast<double>(hits) / static_cast<double>(query.size());
}

std::set<std::string> query_tokens(const json& context) {
  const auto words = tokenize(context.value("target", std::string{}));
  return {words.begin(), words.end()};
}

std::string heuristic_descriptions(const json& context) {
  json out = json::object();
  for (const auto& entry : context.value("features", json::array())) {
    const auto table = entry.at("table").get<std::string>();
    const auto feature = entry.at("feature").get<std::string>();
    std::string words;
    for (const auto& token : tokenize(feature)) {
      words += token + " ";
    }
    out[table + "." + feature] = words + "attribute from " + table + " table";
  }
  return out.dump();
}

std::string heuristic_table_scores(const json& context) {
  const auto query = query_tokens(context);
  json out = json::object();
  for (const auto& entry : context.value("tables", json::array())) {
    const auto fraction = overlap_fraction(query, entry.value("text", std::string{}));
    out[entry.at("name").get<std::string>()] = static_cast<int>(std::lround(20.0 + 80.0 * fraction));
  }
  return out.dump();
}

std::string feature_ranking(const json& context, bool echo) {
  struct Item {
    std::string name;
    double overlap;
  };
  const auto query = query_tokens(context);
  std::vector<Item> items;
  for (const auto& entry : context.value("features", json::array())) {
    const auto name = entry.at("name").get<std::string>();
    const auto text = name + " " + entry.value("desc", std::string{});
    items.push_back({name, echo ? 0.0 : overlap_fraction(query, text)});
  }
  std::stable_sort(items.begin(), items.end(), [](const Item& a, const Item& b) { return a.overlap > b.overlap; });
  json out = json::array();
  for (const auto& item : items) {
    out.push_back(item.name);
  }
  return out.dump();
}

struct ParsedUrl {
  std::string origin;  // scheme://host[:port]
  std::string path;
};

ParsedUrl parse_url(const std::string& url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) {
    throw LlmError(LlmError::Kind::Transport, "endpoint '" + url + "' is not an absolute URL");
  }
  const auto path_start = url.find('/', scheme_end + 3);
  if (path_start == std::string::npos) {
    return {url, "/"};
  }
  return {url.substr(0, path_start), url.substr(path_start)};
}

/// POSTs `body` with one retry on transport failure or 5xx; maps status codes onto LlmError kinds.
json post_json(const RemoteConfig& config, const json& body) {
  const auto url = parse_url(config.endpoint);
  httplib::Headers headers;
  if (!config.api_key.empty()) {
    headers.emplace("Authorization", "Bearer " + config.api_key);
  }
  const auto payload = body.dump();

  for (int attempt = 0; attempt < 2; ++attempt) {
    if (attempt > 0) {
      std::this_thread::sleep_for(config.retry_backoff);
    }
    httplib::Client client(url.origin);
    client.set_connection_timeout(config.timeout);
    client.set_read_timeout(config.timeout);
    client.set_write_timeout(config.timeout);
    const auto result = client.Post(url.path, headers, payload, "application/json");
    if (!result) {
      if (attempt == 0) continue;
      throw LlmError(LlmError::Kind::Transport, "transport failure: " + httplib::to_string(result.error()));
    }
    const int status = result->status;
    if (status == 401 || status == 403) {
      throw LlmError(LlmError::Kind::Authentication, "authentication failed (HTTP " + std::to_string(status) + ")");
    }
    if (status >= 500) {
      if (attempt == 0) continue;
      throw LlmError(LlmError::Kind::Transport, "server error after retry (HTTP " + std::to_string(status) + ")");
    }
    if (status != 200) {
      throw LlmError(LlmError::Kind::Provider, "HTTP " + std::to_string(status) + ": " + result->body);
    }
    json parsed;
    try {
      parsed = json::parse(result->body);
    } catch (const json::exception&) {
      throw LlmError(LlmError::Kind::Provider, "provider returned a non-JSON body");
    }
    if (parsed.is_object() && parsed.contains("error")) {
      throw LlmError(LlmError::Kind::Provider, "provider error: " + parsed["error"].dump());
    }
    return parsed;
  }
  throw LlmError(LlmError::Kind::Transport, "unreachable");
}

}  // namespace

StubProvider StubProvider::from_script(const std::filesystem::path& file) {
  json script;
  try {
    script = json::parse(csv::read_file(file));
  } catch (const json::exception& error) {
    throw LlmError(LlmError::Kind::Provider, "malformed stub script: " + std::string(error.what()));
  }
  std::map<PromptKind, std::string> entries;
  for (const auto kind : {PromptKind::Descriptions, PromptKind::TableScoring, PromptKind::FeatureRanking}) {
    const auto key = std::string(to_string(kind));
    if (!script.contains(key)) continue;
    const auto& value = script[key];
    entries[kind] = value.is_string() ? value.get<std::string>() : value.dump();
  }
  return StubProvider(std::move(entries));
}

LlmResponse StubProvider::complete(const ChatPrompt& prompt) {
  LlmResponse response;
  response.provider = name();
  const auto scripted = script_.find(prompt.kind);
  if (scripted != script_.end() && scripted->second != kEcho) {
    response.raw_text = scripted->second;
    return response;
  }
  switch (prompt.kind) {
    case PromptKind::Descriptions:
      response.raw_text = heuristic_descriptions(prompt.context);
      break;
    case PromptKind::TableScoring:
      response.raw_text = heuristic_table_scores(prompt.context);
      break;
    case PromptKind::FeatureRanking:
      response.raw_text = feature_ranking(prompt.context, scripted != script_.end());
      break;
  }
  return response;
}

RemoteProvider::RemoteProvider(RemoteConfig config) : config_(std::move(config)) {
  if (config_.endpoint.empty()) {
    throw LlmError(LlmError::Kind::Transport, "no LLM endpoint configured (RELAUG_LLM_ENDPOINT)");
  }
}

LlmResponse RemoteProvider::complete(const ChatPrompt& prompt) {
  const json body = {{"model", prompt.model},
                     {"temperature", prompt.temperature},
                     {"max_tokens", prompt.max_tokens},
                     {"messages", json::array({{{"role", "system"}, {"content", prompt.system}},
                                               {{"role", "user"}, {"content", prompt.user}}})}};
  const auto started = std::chrono::steady_clock::now();
  const auto reply = post_json(config_, body);
  LlmResponse response;
  response.provider = name();
  response.latency_ms =
      std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - started).count();
  try {
    response.raw_text = reply.at("choices").at(0).at("message").at("content").get<std::string>();
  } catch (const json::exception&) {
    throw LlmError(LlmError::Kind::Provider, "response has no choices[0].message.content");
  }
  return response;
}

std::vector<float> TrigramEmbedder::embed(std::string_view text) {
  std::string lowered(text);
  for (auto& c : lowered) {
    c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  }
  std::vector<float> out(kDimension, 0.0f);
  const auto bucket = [](std::string_view gram) {
    std::uint32_t hash = 2166136261u;  // FNV-1a
    for (const char c : gram) {
      hash ^= static_cast<unsigned char>(c);
      hash *= 16777619u;
    }
    return hash % kDimension;
  };
  if (lowered.size() < 3) {
    if (!lowered.empty()) out[bucket(lowered)] += 1.0f;
  } else {
    for (std::size_t i = 0; i + 3 <= lowered.size(); ++i) {
      out[bucket(std::string_view(lowered).substr(i, 3))] += 1.0f;
    }
  }
  double norm = 0.0;
  for (const float v : out) norm += static_cast<double>(v) * v;
  if (norm > 0.0) {
    const auto scale = static_cast<float>(1.0 / std::sqrt(norm));
    for (auto& v : out) v *= scale;
  }
  return out;
}

RemoteEmbedder::RemoteEmbedder(RemoteConfig config, std::string model, std::size_t dimension)
    : config_(std::move(config)), model_(std::move(model)), dimension_(dimension) {}

std::vector<float> RemoteEmbedder::embed(std::string_view text) {
  const auto reply = post_json(config_, {{"model", model_}, {"input", std::string(text)}});
  std::vector<float> out;
  try {
    out = reply.at("data").at(0).at("embedding").get<std::vector<float>>();
  } catch (const json::exception&) {
    throw LlmError(LlmError::Kind::Provider, "response has no data[0].embedding");
  }
  if (out.size() != dimension_) {
    throw LlmError(LlmError::Kind::Provider, "embedding dimension " + std::to_string(out.size()) + ", expected " +
                                                 std::to_string(dimension_));
  }
  return out;
}

Gateway::Gateway(std::shared_ptr<ChatProvider> chat, std::shared_ptr<EmbeddingProvider> embedder)
    : chat_(std::move(chat)), embedder_(std::move(embedder)) {}

LlmResponse Gateway::complete(const ChatPrompt& prompt) {
  ++total_calls_;
  ++kind_calls_[static_cast<int>(prompt.kind)];
  auto response = chat_->complete(prompt);
  std::lock_guard lock(audit_mutex_);
  if (audit_) {
    const json entry = {{"kind", to_string(prompt.kind)}, {"model", prompt.model},
                        {"temperature", prompt.temperature}, {"system", prompt.system},
                        {"user", prompt.user}, {"provider", response.provider},
                        {"latency_ms", response.latency_ms}, {"raw_text", response.raw_text}};
    *audit_ << entry.dump() << '\n';
    audit_->flush();
  }
  return response;
}

json Gateway::complete_json(const ChatPrompt& prompt) {
  try {
    return extract_json(complete(prompt).raw_text);
  } catch (const LlmError& error) {
    if (error.kind() != LlmError::Kind::Parse) throw;
  }
  auto retry = prompt;
  retry.user += "\n\n";
  retry.user += kJsonReminder;
  return extract_json(complete(retry).raw_text);
}

std::vector<float> Gateway::embed(std::string_view text) { return embedder_->embed(text); }

std::size_t Gateway::completion_calls(PromptKind kind) const { return kind_calls_[static_cast<int>(kind)].load(); }

void Gateway::enable_audit_log(const std::filesystem::path& file) {
  std::lock_guard lock(audit_mutex_);
  audit_.emplace(file, std::ios::app);
  if (!*audit_) {
    throw LlmError(LlmError::Kind::Transport, "cannot open audit log '" + file.string() + "'");
  }
}

namespace {

/// End offset (exclusive) of the bracketed value starting at `start`, or npos if unbalanced.
std::size_t balanced_end(std::string_view text, std::size_t start) {
  std::vector<char> stack;
  bool in_string = false;
  for (std::size_t i = start; i < text.size(); ++i) {
    const char c = text[i];
    if (in_string) {
      if (c == '\\') {
        ++i;
      } else if (c == '"') {
        in_string = false;
      }
      continue;
    }
    if (c == '"') {
      in_string = true;
    } else if (c == '{' || c == '[') {
      stack.push_back(c == '{' ? '}' : ']');
    } else if (c == '}' || c == ']') {
      if (stack.empty() || stack.back() != c) return std::string_view::npos;
      stack.pop_back();
      if (stack.empty()) return i + 1;
    }
  }
  return std::string_view::npos;
}

}  // namespace

json extract_json(std::string_view raw_text) {
  for (std::size_t i = 0; i < raw_text.size(); ++i) {
    if (raw_text[i] != '{' && raw_text[i] != '[') continue;
    const auto end = balanced_end(raw_text, i);
    if (end == std::string_view::npos) continue;
    auto parsed = json::parse(raw_text.substr(i, end - i), nullptr, false);
    if (!parsed.is_discarded()) {
      return parsed;
    }
  }
  throw LlmError(LlmError::Kind::Parse, "no parseable JSON in LLM response");
}

std::size_t estimate_tokens(std::string_view text) { return (text.size() + 3) / 4; }

double cosine(std::span<const float> lhs, std::span<const float> rhs) {
  const auto n = std::min(lhs.size(), rhs.size());
  double dot = 0.0;
  double left = 0.0;
  double right = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    dot += static_cast<double>(lhs[i]) * rhs[i];
    left += static_cast<double>(lhs[i]) * lhs[i];
    right += static_cast<double>(rhs[i]) * rhs[i];
  }
  if (left == 0.0 || right == 0.0) return 0.0;
  return dot / std::sqrt(left * right);
}

}  // namespace relaug::llm
