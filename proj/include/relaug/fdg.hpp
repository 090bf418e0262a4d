#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "relaug/corpus.hpp"
#include "relaug/llm.hpp"

namespace relaug {

enum class DescriptorSource { Llm, Cache, Absent };

struct FeatureDescriptor {
  std::string table;
  std::string feature;
  std::string description;  ///< empty iff source == Absent
  DescriptorSource source = DescriptorSource::Absent;
};

/// One descriptor per (table, feature). Display metadata only; never used to resolve columns.
class DescriptorSet {
 public:
  void insert(FeatureDescriptor descriptor);
  const FeatureDescriptor* find(std::string_view table, std::string_view feature) const;
  /// Empty when absent.
  std::string_view description(std::string_view table, std::string_view feature) const;

  const std::map<std::pair<std::string, std::string>, FeatureDescriptor, std::less<>>& entries() const {
    return entries_;
  }
  std::size_t size() const { return entries_.size(); }
  std::size_t count(DescriptorSource source) const;

 private:
  std::map<std::pair<std::string, std::string>, FeatureDescriptor, std::less<>> entries_;
};

/// Renders the description prompt for `tables` (all tables, manifest order, when empty).
llm::ChatPrompt build_fdg_prompt(const Corpus& corpus, const std::vector<std::string>& tables = {});

/// Hex digest of table names, feature names and the dataset description; keys the cache.
std::string schema_hash(const Corpus& corpus);

struct FdgOptions {
  std::optional<std::filesystem::path> cache_file;
  std::size_t token_budget = 100000;
  std::string model = std::string(llm::kDefaultModel);
};

/// One completion call per corpus (more only when the prompt exceeds the token budget). A fresh cache
/// short-circuits the LLM entirely. Parse failure after the re-ask leaves every descriptor absent.
DescriptorSet generate_descriptions(const Corpus& corpus, llm::Gateway& gateway, const FdgOptions& options = {},
                                    std::vector<std::string>* warnings = nullptr);

/// Descriptors from a cache file whose hash matches the corpus; nullopt if missing or stale.
std::optional<DescriptorSet> read_description_cache(const Corpus& corpus, const std::filesystem::path& file);

/// Every (table, feature) of the corpus with source Absent.
DescriptorSet absent_descriptors(const Corpus& corpus);

}  // namespace relaug
