#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "relaug/value.hpp"

namespace relaug {

struct Column {
  std::string name;
  ColumnType type = ColumnType::Text;
  std::vector<Value> values;
};

/// Columnar table. Row i of every column is the i-th physical row of the source file (its row_order).
class Table {
 public:
  Table() = default;
  /// Throws DatasetError on ragged columns or duplicate column names.
  Table(std::string name, std::vector<Column> columns);

  const std::string& name() const { return name_; }
  const std::vector<Column>& columns() const { return columns_; }
  std::size_t row_count() const { return columns_.empty() ? 0 : columns_.front().values.size(); }
  std::size_t column_count() const { return columns_.size(); }

  std::optional<std::size_t> find_column(std::string_view column) const;
  /// Throws DatasetError("unknown column ...") if absent.
  const Column& column(std::string_view column) const;
  const Value& cell(std::size_t row, std::size_t column) const { return columns_[column].values[row]; }

  friend bool operator==(const Table& lhs, const Table& rhs);

 private:
  std::string name_;
  std::vector<Column> columns_;
};

bool operator==(const Column& lhs, const Column& rhs);

/// Fraction of null cells; 0 for an empty column.
double null_ratio(const Column& column);

}  // namespace relaug
