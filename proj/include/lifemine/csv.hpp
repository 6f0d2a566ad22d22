#pragma once

#include <charconv>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace lifemine::csv {

// Splits one CSV record. Handles double-quoted fields with "" escapes;
// trailing empty fields are preserved.
std::vector<std::string> split_record(std::string_view line);

// Quotes a field only when it contains a comma, quote or newline.
std::string escape_field(std::string_view field);

std::string join_record(const std::vector<std::string>& fields);

// Shortest round-trip formatting via std::to_chars; locale-free and
// deterministic, which the byte-identical report outputs rely on.
std::string format_double(double v);

std::optional<double> parse_double(std::string_view s);
std::optional<long long> parse_int(std::string_view s);

// Reads lines from a stream, tolerating a trailing \r and a missing final
// newline. Returns false at EOF.
bool getline_norm(std::istream& in, std::string& line);

}  // namespace lifemine::csv
