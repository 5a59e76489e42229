#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace affect {

// Raised for malformed user input (files, flags, datasets). The CLI maps it
// to exit code 1; anything else is an internal failure (exit code 2).
struct UserError : std::runtime_error {
  explicit UserError(const std::string& what) : std::runtime_error(what) {}
};

std::vector<std::string> split_fields(const std::string& line, char sep);

// Reads a whole UTF-8 text file into lines. Accepts \n and \r\n endings and
// rejects invalid UTF-8 with the offending line number.
std::vector<std::string> read_lines(const std::string& path);

bool valid_utf8(const std::string& s);

// Decodes one UTF-8 code point starting at s[i]; advances i. Invalid input
// must have been rejected beforehand.
char32_t decode_utf8(const std::string& s, size_t& i);
void append_utf8(std::string& out, char32_t cp);

double parse_double(const std::string& s, const std::string& context);
long long parse_int(const std::string& s, const std::string& context);

// Fixed float formatting used by all text artifacts (8 significant digits).
std::string format_float(double v);

// Shortest decimal form that parses back to the same double bit pattern;
// used where values must survive a save/load round trip exactly.
std::string format_exact(double v);

}  // namespace affect
