#include "relaug/fdg.hpp"

#include <cstdio>

#include "relaug/csv.hpp"

namespace relaug {

using nlohmann::json;

namespace {

constexpr std::string_view kFdgSystem =
    "You are a data science expert analyzing database schemas. Given table names, feature names, and optional "
    "dataset descriptions, generate concise, semantically-rich descriptions for each feature.\n"
    "\n"
    "Requirements:\n"
    "(1) Generate descriptions for all features provided;\n"
    "(2) Each description should be 3-10 words;\n"
    "(3) Focus on semantic meaning, not technical data types;\n"
    "(4) Transform abbreviations and codes into clear, domain-relevant descriptions;\n"
    "(5) Return a JSON object:\n"
    "{table_1.feature_1: description_1, table_1.feature_2: description_2,...}.";

std::vector<std::string> all_tables(const Corpus& corpus) {
  std::vector<std::string> names;
  for (const auto& table : corpus.tables()) names.push_back(table.name());
  return names;
}

void write_cache(const Corpus& corpus, const DescriptorSet& descriptors, const std::filesystem::path& file) {
  json mapping = json::object();
  for (const auto& [key, descriptor] : descriptors.entries()) {
    if (descriptor.source != DescriptorSource::Absent) {
      mapping[key.first + "." + key.second] = descriptor.description;
    }
  }
  const json document = {{"hash", schema_hash(corpus)}, {"descriptions", mapping}};
  if (file.has_parent_path()) std::filesystem::create_directories(file.parent_path());
  csv::write_file_atomic(file, document.dump(2) + "\n");
}

}  // namespace

void DescriptorSet::insert(FeatureDescriptor descriptor) {
  auto key = std::pair{descriptor.table, descriptor.feature};
  entries_.insert_or_assign(std::move(key), std::move(descriptor));
}

const FeatureDescriptor* DescriptorSet::find(std::string_view table, std::string_view feature) const {
  const auto it = entries_.find(std::pair{std::string(table), std::string(feature)});
  return it == entries_.end() ? nullptr : &it->second;
}

std::string_view DescriptorSet::description(std::string_view table, std::string_view feature) const {
  const auto* descriptor = find(table, feature);
  return descriptor ? std::string_view(descriptor->description) : std::string_view{};
}

std::size_t DescriptorSet::count(DescriptorSource source) const {
  std::size_t n = 0;
  for (const auto& [key, descriptor] : entries_) n += descriptor.source == source ? 1 : 0;
  return n;
}

llm::ChatPrompt build_fdg_prompt(const Corpus& corpus, const std::vector<std::string>& tables) {
  const auto names = tables.empty() ? all_tables(corpus) : tables;
  llm::ChatPrompt prompt;
  prompt.kind = llm::PromptKind::Descriptions;
  prompt.system = std::string(kFdgSystem);

  std::string user;
  if (corpus.dataset_description()) {
    user += "Dataset context: " + *corpus.dataset_description() + "\n";
  }
  user += "Tables and features:\n";
  json features = json::array();
  for (std::size_t t = 0; t < names.size(); ++t) {
    const auto& table = corpus.table(names[t]);
    user += table.name() + ": [";
    for (std::size_t c = 0; c < table.columns().size(); ++c) {
      const auto& column = table.columns()[c];
      if (c > 0) user += ", ";
      user += column.name + " (" + std::string(to_string(column.type)) + ")";
      features.push_back({{"table", table.name()}, {"feature", column.name}});
    }
    user += t + 1 < names.size() ? "],\n" : "]\n";
  }
  prompt.user = std::move(user);
  prompt.context = {{"features", std::move(features)}};
  return prompt;
}

std::string schema_hash(const Corpus& corpus) {
  std::uint64_t hash = 14695981039346656037ULL;  // FNV-1a 64
  const auto feed = [&hash](std::string_view bytes) {
    for (const char c : bytes) {
      hash ^= static_cast<unsigned char>(c);
      hash *= 1099511628211ULL;
    }
    hash ^= 0xff;
    hash *= 1099511628211ULL;
  };
  for (const auto& table : corpus.tables()) {
    feed(table.name());
    for (const auto& column : table.columns()) feed(column.name);
    feed("\x1e");
  }
  feed(corpus.dataset_description().value_or(""));
  char buffer[17];
  std::snprintf(buffer, sizeof(buffer), "%016llx", static_cast<unsigned long long>(hash));
  return buffer;
}

DescriptorSet absent_descriptors(const Corpus& corpus) {
  DescriptorSet descriptors;
  for (const auto& table : corpus.tables()) {
    for (const auto& column : table.columns()) {
      descriptors.insert({table.name(), column.name, {}, DescriptorSource::Absent});
    }
  }
  return descriptors;
}

std::optional<DescriptorSet> read_description_cache(const Corpus& corpus, const std::filesystem::path& file) {
  if (!std::filesystem::exists(file)) return std::nullopt;
  const auto document = json::parse(csv::read_file(file), nullptr, false);
  if (document.is_discarded() || !document.is_object() || document.value("hash", std::string{}) != schema_hash(corpus)) {
    return std::nullopt;
  }
  const auto mapping = document.value("descriptions", json::object());
  auto descriptors = absent_descriptors(corpus);
  for (const auto& table : corpus.tables()) {
    for (const auto& column : table.columns()) {
      const auto it = mapping.find(table.name() + "." + column.name);
      if (it != mapping.end() && it->is_string() && !it->get<std::string>().empty()) {
        descriptors.insert({table.name(), column.name, it->get<std::string>(), DescriptorSource::Cache});
      }
    }
  }
  return descriptors;
}

DescriptorSet generate_descriptions(const Corpus& corpus, llm::Gateway& gateway, const FdgOptions& options,
                                    std::vector<std::string>* warnings) {
  if (options.cache_file) {
    if (auto cached = read_description_cache(corpus, *options.cache_file)) {
      return std::move(*cached);
    }
  }

  const auto fits = [&](const std::vector<std::string>& group) {
    const auto prompt = build_fdg_prompt(corpus, group);
    return llm::estimate_tokens(prompt.system) + llm::estimate_tokens(prompt.user) <= options.token_budget;
  };
  std::vector<std::vector<std::string>> batches;
  std::vector<std::string> current;
  for (const auto& name : all_tables(corpus)) {
    current.push_back(name);
    if (current.size() > 1 && !fits(current)) {
      current.pop_back();
      batches.push_back(std::move(current));
      current = {name};
    }
  }
  if (!current.empty()) batches.push_back(std::move(current));

  auto descriptors = absent_descriptors(corpus);
  bool any_failure = false;
  for (const auto& batch : batches) {
    auto prompt = build_fdg_prompt(corpus, batch);
    prompt.model = options.model;
    json mapping;
    try {
      mapping = gateway.complete_json(prompt);
    } catch (const llm::LlmError& error) {
      if (error.kind() != llm::LlmError::Kind::Parse) throw;
      any_failure = true;
      if (warnings) warnings->push_back("feature descriptions unavailable: " + std::string(error.what()));
      continue;
    }
    if (!mapping.is_object()) {
      any_failure = true;
      if (warnings) warnings->push_back("feature descriptions unavailable: response is not a JSON object");
      continue;
    }
    for (const auto& name : batch) {
      for (const auto& column : corpus.table(name).columns()) {
        const auto it = mapping.find(name + "." + column.name);
        if (it != mapping.end() && it->is_string() && !it->get<std::string>().empty()) {
          descriptors.insert({name, column.name, it->get<std::string>(), DescriptorSource::Llm});
        }
      }
    }
  }
  if (options.cache_file && !any_failure) {
    write_cache(corpus, descriptors, *options.cache_file);
  }
  return descriptors;
}

}  // namespace relaug
