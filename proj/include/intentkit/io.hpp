#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace intentkit {

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::string read_file(const std::filesystem::path& path);

// Writes to a sibling temp file and renames it over `path`, so readers never
// observe a partially written destination.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

// Data directory lookup: INTENTKIT_DATA_DIR, then the compiled-in default.
std::filesystem::path default_data_dir();

// FNV-1a 64-bit, rendered as 16 lowercase hex digits.
std::uint64_t fnv1a64(std::string_view bytes);
std::string fingerprint(std::string_view bytes);

// Shortest decimal text that parses back to the same double.
std::string format_double(double v);
// Fixed-point with `decimals` digits after the point.
std::string format_fixed(double v, int decimals);

namespace csv {
std::string escape(std::string_view field);
std::string join(const std::vector<std::string>& fields);
// RFC 4180 record splitting; handles quoted fields containing commas, quotes
// and newlines. Lines starting with '#' outside quotes are skipped.
std::vector<std::vector<std::string>> parse(std::string_view document);
}  // namespace csv

}  // namespace intentkit
