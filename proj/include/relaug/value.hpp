#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>

namespace relaug {

/// Raised for malformed datasets, manifests and user input.
class DatasetError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised when an internal invariant (row alignment, row preservation, ...) is broken.
class InvariantViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

enum class ColumnType { Integer, Float, Boolean, Text };

std::string_view to_string(ColumnType type);
ColumnType column_type_from_string(std::string_view name);

using Null = std::monostate;

/// One cell. A column's non-null cells all hold the alternative matching its ColumnType.
using Value = std::variant<Null, std::int64_t, double, bool, std::string>;

inline bool is_null(const Value& value) { return std::holds_alternative<Null>(value); }

bool is_null_literal(std::string_view cell);

std::optional<std::int64_t> parse_integer(std::string_view cell);
std::optional<double> parse_float(std::string_view cell);
std::optional<bool> parse_boolean(std::string_view cell);

/// Parses a raw CSV cell as `type`; null literals become Null. Throws DatasetError if the cell does not fit.
Value parse_cell(std::string_view cell, ColumnType type);

/// Serializes a cell the way the CSV writer emits it. Null becomes the empty string; floats keep a
/// decimal point so they re-infer as Float.
std::string format_cell(const Value& value);

/// Numeric view of a cell (integers, floats, booleans as 0/1); nullopt for null and text.
std::optional<double> numeric_value(const Value& value);

/// Canonical join-key view of a cell.
///
/// Numbers compare numerically (an integral float equals the same integer), text compares byte-exact after
/// trimming surrounding whitespace. The text view borrows from the cell, so a JoinKey must not outlive the
/// table it was taken from.
struct JoinKey {
  enum class Kind : std::uint8_t { Integer, Real, Boolean, Text };

  Kind kind = Kind::Integer;
  std::int64_t integer = 0;
  double real = 0.0;
  std::string_view text;

  friend bool operator==(const JoinKey& lhs, const JoinKey& rhs);
};

std::optional<JoinKey> join_key(const Value& value);

struct JoinKeyHash {
  std::size_t operator()(const JoinKey& key) const noexcept;
};

}  // namespace relaug
