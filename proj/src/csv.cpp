#include "relaug/csv.hpp"

#include <fstream>
#include <sstream>
#include <unordered_set>

namespace relaug {

Table::Table(std::string name, std::vector<Column> columns) : name_(std::move(name)), columns_(std::move(columns)) {
  std::unordered_set<std::string_view> seen;
  for (const auto& column : columns_) {
    if (!seen.insert(column.name).second) {
      throw DatasetError("table '" + name_ + "': duplicate column '" + column.name + "'");
    }
    if (column.values.size() != columns_.front().values.size()) {
      throw DatasetError("table '" + name_ + "': column '" + column.name + "' has " +
                         std::to_string(column.values.size()) + " rows, expected " +
                         std::to_string(columns_.front().values.size()));
    }
  }
}

std::optional<std::size_t> Table::find_column(std::string_view column) const {
  for (std::size_t i = 0; i < columns_.size(); ++i) {
    if (columns_[i].name == column) {
      return i;
    }
  }
  return std::nullopt;
}

const Column& Table::column(std::string_view column) const {
  if (const auto index = find_column(column)) {
    return columns_[*index];
  }
  throw DatasetError("unknown column '" + std::string(column) + "' in table '" + name_ + "'");
}

bool operator==(const Column& lhs, const Column& rhs) {
  return lhs.name == rhs.name && lhs.type == rhs.type && lhs.values == rhs.values;
}

bool operator==(const Table& lhs, const Table& rhs) {
  return lhs.name_ == rhs.name_ && lhs.columns_ == rhs.columns_;
}

double null_ratio(const Column& column) {
  if (column.values.empty()) {
    return 0.0;
  }
  std::size_t nulls = 0;
  for (const auto& value : column.values) {
    nulls += is_null(value) ? 1 : 0;
  }
  return static_cast<double>(nulls) / static_cast<double>(column.values.size());
}

namespace csv {

std::vector<Record> parse(std::string_view text) {
  std::vector<Record> records;
  Record record;
  std::string field;
  bool in_quotes = false;
  bool field_started = false;
  bool record_started = false;

  const auto end_field = [&] {
    record.push_back(std::move(field));
    field.clear();
    field_started = false;
  };
  const auto end_record = [&] {
    end_field();
    records.push_back(std::move(record));
    record.clear();
    record_started = false;
  };

  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (in_quotes) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          in_quotes = false;
        }
      } else {
        field += c;
      }
      continue;
    }
    switch (c) {
      case '"':
        if (field_started) {
          throw DatasetError("malformed CSV: stray quote inside unquoted field");
        }
        in_quotes = true;
        field_started = true;
        record_started = true;
        break;
      case ',':
        end_field();
        record_started = true;
        break;
      case '\r':
        if (i + 1 < text.size() && text[i + 1] == '\n') {
          ++i;
        }
        [[fallthrough]];
      case '\n':
        end_record();
        break;
      default:
        field += c;
        field_started = true;
        record_started = true;
        break;
    }
  }
  if (in_quotes) {
    throw DatasetError("malformed CSV: unterminated quoted field");
  }
  if (record_started || !record.empty()) {
    end_record();
  }
  return records;
}

ColumnType infer_type(const std::vector<std::string_view>& cells) {
  bool integer = true;
  bool real = true;
  bool boolean = true;
  bool any = false;
  for (const auto cell : cells) {
    if (is_null_literal(cell)) {
      continue;
    }
    any = true;
    integer = integer && parse_integer(cell).has_value();
    real = real && parse_float(cell).has_value();
    boolean = boolean && parse_boolean(cell).has_value();
    if (!integer && !real && !boolean) {
      break;
    }
  }
  if (!any) return ColumnType::Text;
  if (integer) return ColumnType::Integer;
  if (real) return ColumnType::Float;
  if (boolean) return ColumnType::Boolean;
  return ColumnType::Text;
}

Table table_from_records(std::string table_name, const std::vector<Record>& records,
                         const std::optional<std::vector<ColumnType>>& declared_types) {
  if (records.empty()) {
    throw DatasetError("table '" + table_name + "': missing header row");
  }
  const auto& header = records.front();
  const std::size_t width = header.size();
  if (declared_types && declared_types->size() != width) {
    throw DatasetError("table '" + table_name + "': declared types do not match header width");
  }
  for (std::size_t r = 1; r < records.size(); ++r) {
    if (records[r].size() != width) {
      throw DatasetError("table '" + table_name + "': row " + std::to_string(r - 1) + " has " +
                         std::to_string(records[r].size()) + " fields, expected " + std::to_string(width));
    }
  }

  std::vector<Column> columns(width);
  std::vector<std::string_view> cells(records.size() - 1);
  for (std::size_t c = 0; c < width; ++c) {
    for (std::size_t r = 1; r < records.size(); ++r) {
      cells[r - 1] = records[r][c];
    }
    columns[c].name = header[c];
    columns[c].type = declared_types ? (*declared_types)[c] : infer_type(cells);
    columns[c].values.reserve(cells.size());
    for (const auto cell : cells) {
      columns[c].values.push_back(parse_cell(cell, columns[c].type));
    }
  }
  return Table(std::move(table_name), std::move(columns));
}

std::string read_file(const std::filesystem::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) {
    throw DatasetError("cannot read '" + file.string() + "'");
  }
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

Table read_table(const std::filesystem::path& file, std::string table_name,
                 const std::optional<std::vector<ColumnType>>& declared_types) {
  return table_from_records(std::move(table_name), parse(read_file(file)), declared_types);
}

namespace {

void append_field(std::string& out, std::string_view field) {
  const bool quote = field.find_first_of(",\"\r\n") != std::string_view::npos ||
                     (!field.empty() && (field.front() == ' ' || field.back() == ' '));
  if (!quote) {
    out += field;
    return;
  }
  out += '"';
  for (const char c : field) {
    if (c == '"') {
      out += '"';
    }
    out += c;
  }
  out += '"';
}

}  // namespace

std::string to_csv(const Table& table) {
  std::string out;
  const auto& columns = table.columns();
  for (std::size_t c = 0; c < columns.size(); ++c) {
    if (c > 0) out += ',';
    append_field(out, columns[c].name);
  }
  out += '\n';
  for (std::size_t r = 0; r < table.row_count(); ++r) {
    for (std::size_t c = 0; c < columns.size(); ++c) {
      if (c > 0) out += ',';
      append_field(out, format_cell(columns[c].values[r]));
    }
    out += '\n';
  }
  return out;
}

void write_file_atomic(const std::filesystem::path& file, std::string_view contents) {
  auto temp = file;
  temp += ".tmp";
  {
    std::ofstream out(temp, std::ios::binary | std::ios::trunc);
    if (!out) {
      throw DatasetError("cannot write '" + temp.string() + "'");
    }
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    if (!out) {
      throw DatasetError("short write to '" + temp.string() + "'");
    }
  }
  std::filesystem::rename(temp, file);
}

void write_table(const Table& table, const std::filesystem::path& file) { write_file_atomic(file, to_csv(table)); }

}  // namespace csv
}  // namespace relaug
