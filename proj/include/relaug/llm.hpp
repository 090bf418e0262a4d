#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace relaug::llm {

inline constexpr double kDefaultTemperature = 0.1;
inline constexpr std::string_view kDefaultModel = "gpt-4o-mini";
inline constexpr int kDefaultMaxTokens = 4096;
inline constexpr std::string_view kJsonReminder = "Return only valid JSON.";

/// Which pipeline stage a prompt belongs to. Stub scripts are keyed by it.
enum class PromptKind { Descriptions, TableScoring, FeatureRanking };

std::string_view to_string(PromptKind kind);

struct ChatPrompt {
  PromptKind kind = PromptKind::Descriptions;
  std::string system;
  std::string user;
  double temperature = kDefaultTemperature;
  std::string model = std::string(kDefaultModel);
  int max_tokens = kDefaultMaxTokens;
  /// Structured copy of what the prompt enumerates. Never sent to a remote provider; the stub's heuristic
  /// mode reads it instead of re-parsing the rendered text.
  nlohmann::json context;
};

struct LlmResponse {
  std::string raw_text;
  std::string provider;
  std::int64_t latency_ms = 0;
};

class LlmError : public std::runtime_error {
 public:
  enum class Kind { Transport, Authentication, Provider, Parse };

  LlmError(Kind kind, const std::string& message) : std::runtime_error(message), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

class ChatProvider {
 public:
  virtual ~ChatProvider() = default;
  virtual std::string name() const = 0;
  virtual LlmResponse complete(const ChatPrompt& prompt) = 0;
};

class EmbeddingProvider {
 public:
  virtual ~EmbeddingProvider() = default;
  virtual std::size_t dimension() const = 0;
  virtual std::vector<float> embed(std::string_view text) = 0;
};

/// Offline provider. A scripted kind returns its canned text verbatim (the literal `@echo` for feature
/// ranking returns the candidate features in prompt order); unscripted kinds fall back to a heuristic that
/// scores by token overlap with the target name. Same prompt, same text.
class StubProvider : public ChatProvider {
 public:
  static constexpr std::string_view kEcho = "@echo";

  StubProvider() = default;
  explicit StubProvider(std::map<PromptKind, std::string> script) : script_(std::move(script)) {}

  /// Reads `{"table_scoring": <text>, "feature_ranking": <text>, "descriptions": <text>}`; any key may be absent.
  static StubProvider from_script(const std::filesystem::path& file);

  std::string name() const override { return "stub"; }
  LlmResponse complete(const ChatPrompt& prompt) override;

 private:
  std::map<PromptKind, std::string> script_;
};

struct RemoteConfig {
  std::string endpoint;  ///< full chat-completions URL, e.g. https://host/v1/chat/completions
  std::string api_key;
  std::chrono::milliseconds retry_backoff{500};
  std::chrono::seconds timeout{120};
};

/// OpenAI-compatible chat-completions client. One retry after `retry_backoff` on transport failure or 5xx.
class RemoteProvider : public ChatProvider {
 public:
  explicit RemoteProvider(RemoteConfig config);
  std::string name() const override { return "remote"; }
  LlmResponse complete(const ChatPrompt& prompt) override;

 private:
  RemoteConfig config_;
};

/// Character-trigram feature hashing into 256 buckets, L2-normalized. Empty text embeds to the zero vector.
class TrigramEmbedder : public EmbeddingProvider {
 public:
  static constexpr std::size_t kDimension = 256;
  std::size_t dimension() const override { return kDimension; }
  std::vector<float> embed(std::string_view text) override;
};

/// OpenAI-compatible embeddings endpoint (`{model, input}` -> `data[0].embedding`).
class RemoteEmbedder : public EmbeddingProvider {
 public:
  RemoteEmbedder(RemoteConfig config, std::string model, std::size_t dimension);
  std::size_t dimension() const override { return dimension_; }
  std::vector<float> embed(std::string_view text) override;

 private:
  RemoteConfig config_;
  std::string model_;
  std::size_t dimension_;
};

/// Single entry point for every stage: counts calls per prompt kind and optionally appends each exchange to
/// a JSON-lines audit log.
class Gateway {
 public:
  explicit Gateway(std::shared_ptr<ChatProvider> chat,
                   std::shared_ptr<EmbeddingProvider> embedder = std::make_shared<TrigramEmbedder>());

  LlmResponse complete(const ChatPrompt& prompt);

  /// complete + extract_json. On a parse failure re-asks once with kJsonReminder appended, then throws
  /// LlmError(Parse); the caller owns the fallback.
  nlohmann::json complete_json(const ChatPrompt& prompt);

  std::vector<float> embed(std::string_view text);

  std::size_t completion_calls() const { return total_calls_.load(); }
  std::size_t completion_calls(PromptKind kind) const;

  void enable_audit_log(const std::filesystem::path& file);

 private:
  std::shared_ptr<ChatProvider> chat_;
  std::shared_ptr<EmbeddingProvider> embedder_;
  std::atomic<std::size_t> total_calls_{0};
  std::atomic<std::size_t> kind_calls_[3] = {0, 0, 0};
  std::mutex audit_mutex_;
  std::optional<std::ofstream> audit_;
};

/// Strips prose and code fences and returns the first well-formed JSON object or array.
/// Throws LlmError(Parse) when none is found.
nlohmann::json extract_json(std::string_view raw_text);

/// ceil(chars / 4).
std::size_t estimate_tokens(std::string_view text);

double cosine(std::span<const float> lhs, std::span<const float> rhs);

/// Lowercased alphanumeric words, also split at camelCase boundaries.
std::vector<std::string> tokenize(std::string_view text);

}  // namespace relaug::llm
