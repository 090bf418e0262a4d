#include <gtest/gtest.h>

#include <regex>

#include "relaug/fdg.hpp"
#include "test_support.hpp"

namespace relaug {
namespace {

Corpus plates_corpus(std::optional<std::string> description) {
  const auto column = [](std::string name, ColumnType type) {
    Column c{std::move(name), type, {}};
    for (int i = 0; i < 4; ++i) {
      if (type == ColumnType::Float) {
        c.values.emplace_back(0.5 * i);
      } else {
        c.values.emplace_back(static_cast<std::int64_t>(i % 2));
      }
    }
    return c;
  };
  CorpusSpec spec;
  spec.base_table = "steel";
  spec.target_column = "fault";
  spec.dataset_description = std::move(description);
  spec.tables.emplace_back("steel", std::vector<Column>{column("plate_id", ColumnType::Integer),
                                                        column("thickness", ColumnType::Float),
                                                        column("fault", ColumnType::Integer)});
  spec.tables.emplace_back("plates", std::vector<Column>{column("id", ColumnType::Integer),
                                                         column("V9", ColumnType::Float),
                                                         column("V10", ColumnType::Float)});
  spec.edges.push_back({"steel", "plate_id", "plates", "id"});
  return Corpus(std::move(spec));
}

TEST(FdgPrompt, DatasetContextLeadsWhenPresent) {
  const auto prompt = build_fdg_prompt(plates_corpus("Steel plate faults"));
  EXPECT_EQ(prompt.user.rfind("Dataset context: Steel plate faults", 0), 0u);
  const auto without = build_fdg_prompt(plates_corpus(std::nullopt));
  EXPECT_EQ(without.user.find("Dataset context"), std::string::npos);
  EXPECT_EQ(without.user.rfind("Tables and features:", 0), 0u);
}

TEST(FdgPrompt, EnumeratesEveryFeatureOnce) {
  const auto prompt = build_fdg_prompt(plates_corpus(std::nullopt));
  const std::regex entry(R"([A-Za-z0-9_]+ \((integer|float|boolean|text)\))");
  const auto count = std::distance(std::sregex_iterator(prompt.user.begin(), prompt.user.end(), entry),
                                   std::sregex_iterator());
  EXPECT_EQ(count, 6);
  EXPECT_EQ(prompt.context.at("features").size(), 6u);
}

TEST(Fdg, ParsesResponseAndMarksOmissionsAbsent) {
  auto stub = std::make_shared<llm::StubProvider>(
      std::map<llm::PromptKind, std::string>{{llm::PromptKind::Descriptions, R"({"plates.V9": "Minimum luminosity value"})"}});
  llm::Gateway gateway(stub);
  const auto corpus = plates_corpus(std::nullopt);
  const auto descriptors = generate_descriptions(corpus, gateway);
  const auto* v9 = descriptors.find("plates", "V9");
  ASSERT_NE(v9, nullptr);
  EXPECT_EQ(v9->description, "Minimum luminosity value");
  EXPECT_EQ(v9->source, DescriptorSource::Llm);
  EXPECT_EQ(descriptors.find("plates", "V10")->source, DescriptorSource::Absent);
  EXPECT_EQ(descriptors.description("plates", "V10"), "");
  EXPECT_EQ(gateway.completion_calls(llm::PromptKind::Descriptions), 1u);
}

TEST(Fdg, FreshCacheSkipsTheLlm) {
  const auto dir = testing::scratch_dir("fdg_cache");
  const auto corpus = plates_corpus("Steel plate faults");
  FdgOptions options;
  options.cache_file = dir / "descriptions.json";

  llm::Gateway first(std::make_shared<llm::StubProvider>());
  const auto generated = generate_descriptions(corpus, first, options);
  EXPECT_EQ(first.completion_calls(), 1u);

  llm::Gateway second(std::make_shared<llm::StubProvider>());
  const auto cached = generate_descriptions(corpus, second, options);
  EXPECT_EQ(second.completion_calls(), 0u);
  EXPECT_EQ(cached.count(DescriptorSource::Cache), generated.count(DescriptorSource::Llm));
  EXPECT_EQ(cached.count(DescriptorSource::Llm), 0u);
  EXPECT_EQ(cached.size(), 6u);
}

TEST(Fdg, StaleCacheIsIgnored) {
  const auto dir = testing::scratch_dir("fdg_stale");
  FdgOptions options;
  options.cache_file = dir / "descriptions.json";
  llm::Gateway gateway(std::make_shared<llm::StubProvider>());
  generate_descriptions(plates_corpus("one"), gateway, options);
  generate_descriptions(plates_corpus("two"), gateway, options);
  EXPECT_EQ(gateway.completion_calls(), 2u);
}

TEST(Fdg, UnparseableAnswerLeavesAllAbsentAndNoCache) {
  const auto dir = testing::scratch_dir("fdg_garbage");
  auto stub = std::make_shared<llm::StubProvider>(
      std::map<llm::PromptKind, std::string>{{llm::PromptKind::Descriptions, "I cannot help with that"}});
  llm::Gateway gateway(stub);
  FdgOptions options;
  options.cache_file = dir / "descriptions.json";
  std::vector<std::string> warnings;
  const auto descriptors = generate_descriptions(plates_corpus(std::nullopt), gateway, options, &warnings);
  EXPECT_EQ(descriptors.count(DescriptorSource::Absent), 6u);
  EXPECT_FALSE(warnings.empty());
  EXPECT_FALSE(std::filesystem::exists(dir / "descriptions.json"));
  EXPECT_EQ(gateway.completion_calls(), 2u);
}

TEST(Fdg, TightBudgetSplitsIntoBatches) {
  llm::Gateway gateway(std::make_shared<llm::StubProvider>());
  FdgOptions options;
  options.token_budget = 1;
  const auto descriptors = generate_descriptions(plates_corpus(std::nullopt), gateway, options);
  EXPECT_EQ(gateway.completion_calls(), 2u);
  EXPECT_EQ(descriptors.count(DescriptorSource::Llm), 6u);
}

}  // namespace
}  // namespace relaug
