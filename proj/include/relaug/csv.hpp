#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "relaug/table.hpp"

namespace relaug::csv {

using Record = std::vector<std::string>;

/// RFC-4180 reader: comma separator, double-quote quoting with "" escapes, CRLF or LF line ends.
std::vector<Record> parse(std::string_view text);

/// Column type chosen by whole-column agreement, trying integer, float, boolean, then text.
/// A column with no non-null cells is text.
ColumnType infer_type(const std::vector<std::string_view>& cells);

/// Reads a table, inferring each column's type unless `declared_types` is given.
Table read_table(const std::filesystem::path& file, std::string table_name,
                 const std::optional<std::vector<ColumnType>>& declared_types = std::nullopt);

Table table_from_records(std::string table_name, const std::vector<Record>& records,
                         const std::optional<std::vector<ColumnType>>& declared_types = std::nullopt);

std::string to_csv(const Table& table);
void write_table(const Table& table, const std::filesystem::path& file);

/// Writes via a temporary sibling file and renames it into place.
void write_file_atomic(const std::filesystem::path& file, std::string_view contents);
std::string read_file(const std::filesystem::path& file);

}  // namespace relaug::csv
