#include "relaug/value.hpp"

#include <bit>
#include <cctype>
#include <charconv>
#include <cmath>
#include <limits>

namespace relaug {

namespace {

std::string_view trim(std::string_view text) {
  const auto first = text.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) {
    return {};
  }
  const auto last = text.find_last_not_of(" \t\r\n");
  return text.substr(first, last - first + 1);
}

bool iequals(std::string_view lhs, std::string_view rhs) {
  if (lhs.size() != rhs.size()) {
    return false;
  }
  for (std::size_t i = 0; i < lhs.size(); ++i) {
    const auto a = static_cast<unsigned char>(lhs[i]);
    const auto b = static_cast<unsigned char>(rhs[i]);
    if (std::tolower(a) != std::tolower(b)) {
      return false;
    }
  }
  return true;
}

}  // namespace

std::string_view to_string(ColumnType type) {
  switch (type) {
    case ColumnType::Integer:
      return "integer";
    case ColumnType::Float:
      return "float";
    case ColumnType::Boolean:
      return "boolean";
    case ColumnType::Text:
      return "text";
  }
  return "text";
}

ColumnType column_type_from_string(std::string_view name) {
  if (name == "integer") return ColumnType::Integer;
  if (name == "float") return ColumnType::Float;
  if (name == "boolean") return ColumnType::Boolean;
  if (name == "text") return ColumnType::Text;
  throw DatasetError("unknown column type '" + std::string(name) + "'");
}

bool is_null_literal(std::string_view cell) {
  return cell.empty() || cell == "NULL" || cell == "null" || cell == "NA";
}

std::optional<std::int64_t> parse_integer(std::string_view cell) {
  cell = trim(cell);
  if (cell.empty()) {
    return std::nullopt;
  }
  std::int64_t out = 0;
  const auto* end = cell.data() + cell.size();
  const auto [ptr, ec] = std::from_chars(cell.data(), end, out);
  if (ec != std::errc{} || ptr != end) {
    return std::nullopt;
  }
  return out;
}

std::optional<double> parse_float(std::string_view cell) {
  cell = trim(cell);
  if (cell.empty()) {
    return std::nullopt;
  }
  double out = 0.0;
  const auto* end = cell.data() + cell.size();
  const auto [ptr, ec] = std::from_chars(cell.data(), end, out, std::chars_format::general);
  if (ec != std::errc{} || ptr != end || !std::isfinite(out)) {
    return std::nullopt;
  }
  return out;
}

std::optional<bool> parse_boolean(std::string_view cell) {
  cell = trim(cell);
  if (iequals(cell, "true")) return true;
  if (iequals(cell, "false")) return false;
  return std::nullopt;
}

Value parse_cell(std::string_view cell, ColumnType type) {
  if (is_null_literal(cell)) {
    return Null{};
  }
  switch (type) {
    case ColumnType::Integer:
      if (const auto parsed = parse_integer(cell)) return *parsed;
      break;
    case ColumnType::Float:
      if (const auto parsed = parse_float(cell)) return *parsed;
      break;
    case ColumnType::Boolean:
      if (const auto parsed = parse_boolean(cell)) return *parsed;
      break;
    case ColumnType::Text:
      return std::string(cell);
  }
  throw DatasetError("cell '" + std::string(cell) + "' is not a valid " + std::string(to_string(type)));
}

std::string format_cell(const Value& value) {
  return std::visit(
      [](const auto& cell) -> std::string {
        using T = std::decay_t<decltype(cell)>;
        if constexpr (std::is_same_v<T, Null>) {
          return {};
        } else if constexpr (std::is_same_v<T, std::int64_t>) {
          return std::to_string(cell);
        } else if constexpr (std::is_same_v<T, double>) {
          char buffer[64];
          const auto [ptr, ec] = std::to_chars(buffer, buffer + sizeof(buffer), cell);
          std::string out(buffer, ptr);
          if (out.find_first_of(".eEn") == std::string::npos) {
            out += ".0";
          }
          return out;
        } else if constexpr (std::is_same_v<T, bool>) {
          return cell ? "true" : "false";
        } else {
          return cell;
        }
      },
      value);
}

std::optional<double> numeric_value(const Value& value) {
  if (const auto* integer = std::get_if<std::int64_t>(&value)) return static_cast<double>(*integer);
  if (const auto* real = std::get_if<double>(&value)) return *real;
  if (const auto* boolean = std::get_if<bool>(&value)) return *boolean ? 1.0 : 0.0;
  return std::nullopt;
}

bool operator==(const JoinKey& lhs, const JoinKey& rhs) {
  if (lhs.kind != rhs.kind) {
    return false;
  }
  switch (lhs.kind) {
    case JoinKey::Kind::Integer:
    case JoinKey::Kind::Boolean:
      return lhs.integer == rhs.integer;
    case JoinKey::Kind::Real:
      return lhs.real == rhs.real;
    case JoinKey::Kind::Text:
      return lhs.text == rhs.text;
  }
  return false;
}

std::optional<JoinKey> join_key(const Value& value) {
  JoinKey key;
  if (const auto* integer = std::get_if<std::int64_t>(&value)) {
    key.kind = JoinKey::Kind::Integer;
    key.integer = *integer;
  } else if (const auto* real = std::get_if<double>(&value)) {
    // 2^63 is exactly representable, so the bound check is exact.
    constexpr double kLimit = 9223372036854775808.0;
    if (std::trunc(*real) == *real && *real >= -kLimit && *real < kLimit) {
      key.kind = JoinKey::Kind::Integer;
      key.integer = static_cast<std::int64_t>(*real);
    } else {
      key.kind = JoinKey::Kind::Real;
      key.real = *real;
    }
  } else if (const auto* boolean = std::get_if<bool>(&value)) {
    key.kind = JoinKey::Kind::Boolean;
    key.integer = *boolean ? 1 : 0;
  } else if (const auto* text = std::get_if<std::string>(&value)) {
    key.kind = JoinKey::Kind::Text;
    key.text = trim(*text);
  } else {
    return std::nullopt;
  }
  return key;
}

std::size_t JoinKeyHash::operator()(const JoinKey& key) const noexcept {
  std::size_t payload = 0;
  switch (key.kind) {
    case JoinKey::Kind::Integer:
    case JoinKey::Kind::Boolean:
      payload = std::hash<std::int64_t>{}(key.integer);
      break;
    case JoinKey::Kind::Real:
      payload = std::hash<std::uint64_t>{}(std::bit_cast<std::uint64_t>(key.real));
      break;
    case JoinKey::Kind::Text:
      payload = std::hash<std::string_view>{}(key.text);
      break;
  }
  // splitmix64 finalizer; std::hash<int64_t> is the identity on libstdc++.
  std::uint64_t mixed = payload + 0x9e3779b97f4a7c15ULL * (static_cast<std::uint64_t>(key.kind) + 1);
  mixed = (mixed ^ (mixed >> 30)) * 0xbf58476d1ce4e5b9ULL;
  mixed = (mixed ^ (mixed >> 27)) * 0x94d049bb133111ebULL;
  return static_cast<std::size_t>(mixed ^ (mixed >> 31));
}

}  // namespace relaug
