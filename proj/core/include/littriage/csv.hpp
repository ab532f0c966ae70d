#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace littriage::csv {

using Row = std::vector<std::string>;

/// RFC 4180 field quoting: only fields containing a comma, quote, CR or LF
/// are wrapped, embedded quotes are doubled.
std::string escape(std::string_view field);

/// One line including the trailing '\n'.
std::string format_row(const Row& fields);

/// Parses a whole document. Quoted fields may span lines. Throws DataError
/// on an unterminated quote.
std::vector<Row> parse(std::string_view document);

}  // namespace littriage::csv
