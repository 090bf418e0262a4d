#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string_view>
#include <vector>

#include "relaug/corpus.hpp"
#include "relaug/pex.hpp"

namespace relaug {

enum class SyntheticKind { Chain, Star };

std::string_view to_string(SyntheticKind kind);
SyntheticKind synthetic_kind_from_string(std::string_view name);

/// Generation model. `tables` counts the base table, so N = tables - 1.
///
/// Chain: `base(id, t1_id, x0, y)` -> `t1(id, t2_id, a1, b1)` -> ... -> `tN(id, aN, bN)`; every table has
/// `rows` rows and `id` equal to the row index. Star: `base(id, t1_id, ..., tN_id, x0, y)` and leaf tables
/// `ti(id, ai, bi)`.
///
/// Every foreign key references an existing row with probability `selectivity` and otherwise dangles past
/// the key range. `a*`/`x0` are N(0,1) noise and `b*`
/// uniform categories 0..9.
///
/// Table `t<planted_hop>` (chain) or `t1` (star) also carries `signal` ~ N(0,1). For each base row whose
/// foreign keys reach a signal value, y = [signal > 0] flipped with probability 0.1; otherwise y is a fair coin.
struct SyntheticOptions {
  SyntheticKind kind = SyntheticKind::Chain;
  std::size_t tables = 6;
  std::size_t rows = 1000;
  double selectivity = 1.0;
  std::uint64_t seed = 0;
  std::size_t planted_hop = 2;
};

/// Throws std::invalid_argument unless tables >= 2, rows >= 2, selectivity in [0,1] and, for a chain,
/// 1 <= planted_hop < tables.
Corpus make_synthetic_corpus(const SyntheticOptions& options);

void generate_synthetic(const SyntheticOptions& options, const std::filesystem::path& directory);

/// The prefixes base -> t1 -> ... -> tk of a synthetic chain, k = 1..N (lengths 2..N+1).
std::vector<JoinPath> chain_prefix_paths(const Corpus& corpus);

}  // namespace relaug
