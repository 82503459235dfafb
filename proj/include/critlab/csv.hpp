#pragma once

#include <cstdint>
#include <string>

namespace critlab {

// Shortest round-trip decimal for a double ("0.1", not "0.10000000000000001").
// All CSV output goes through this so reruns compare byte for byte.
std::string format_double(double x);

void append_double(std::string& out, double x);
void append_u64(std::string& out, std::uint64_t x);
void append_i64(std::string& out, std::int64_t x);

// Write with a trailing newline, creating parent directories as needed.
void write_text_file(const std::string& path, const std::string& content);

}  // namespace critlab
