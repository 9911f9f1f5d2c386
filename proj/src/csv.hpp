#pragma once

#include <string>
#include <vector>

namespace comorec::csv {

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

// RFC-4180: quoted fields may contain commas, quotes ("" escape) and
// newlines. First record is the header. Throws DataError on a missing file
// or malformed quoting.
Table read_file(const std::string& path);
Table parse(const std::string& text, const std::string& origin = "<string>");

// Case-insensitive header lookup; throws DataError naming the column.
size_t column_index(const Table& table, const std::string& name,
                    const std::string& origin);

// Writer quotes a field only when it needs it, so emission is canonical:
// parse(write(rows)) == rows and write(parse(text)) is byte-stable.
std::string format_field(const std::string& field);
std::string format_row(const std::vector<std::string>& fields);

}  // namespace comorec::csv
