#pragma once

// GGUF (v2/v3) container reader and fixture writer, plus per-quantization
// byte footprints. Only metadata and the tensor table are decoded.

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

namespace intentkit::gguf {

class GgufError : public std::runtime_error {
 public:
  enum class Kind {
    BadMagic,
    UnsupportedVersion,
    TruncatedFile,
    MalformedKv,
    MalformedTensor,
    UnsupportedKvType,
    NotBlockAligned,
    UnknownType,
    Io,
  };

  GgufError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  Kind kind() const noexcept { return kind_; }

 private:
  Kind kind_;
};

std::string_view to_string(GgufError::Kind k);

inline constexpr std::uint32_t kMagic = 0x46554747;  // "GGUF" read little-endian
inline constexpr std::uint32_t kDefaultAlignment = 32;
inline constexpr int kMaxArrayDepth = 8;
inline constexpr std::uint32_t kMaxDims = 4;

enum class ValueType : std::uint32_t {
  Uint8 = 0,
  Int8 = 1,
  Uint16 = 2,
  Int16 = 3,
  Uint32 = 4,
  Int32 = 5,
  Float32 = 6,
  Bool = 7,
  String = 8,
  Array = 9,
  Uint64 = 10,
  Int64 = 11,
  Float64 = 12,
};
std::string_view to_string(ValueType t);

struct Value;

struct Array {
  ValueType elem_type = ValueType::Uint8;
  std::vector<Value> items;
  friend bool operator==(const Array&, const Array&);
};

// Alternative index equals the ValueType code.
using ValueVariant = std::variant<std::uint8_t, std::int8_t, std::uint16_t, std::int16_t, std::uint32_t,
                                  std::int32_t, float, bool, std::string, Array, std::uint64_t,
                                  std::int64_t, double>;

struct Value {
  ValueVariant v;
  ValueType type() const { return static_cast<ValueType>(v.index()); }
  friend bool operator==(const Value&, const Value&) = default;
};

inline bool operator==(const Array& a, const Array& b) {
  return a.elem_type == b.elem_type && a.items == b.items;
}

struct Header {
  std::uint32_t version = 3;
  std::uint64_t tensor_count = 0;
  std::uint64_t kv_count = 0;
  friend bool operator==(const Header&, const Header&) = default;
};

struct TensorInfo {
  std::string name;
  std::vector<std::uint64_t> dims;
  std::uint32_t type = 0;  // ggml type id
  std::uint64_t offset = 0;  // relative to the aligned start of the data section
  friend bool operator==(const TensorInfo&, const TensorInfo&) = default;
};

struct File {
  Header header;
  std::vector<std::pair<std::string, Value>> kvs;
  std::vector<TensorInfo> tensors;
  std::uint32_t alignment = kDefaultAlignment;
  std::uint64_t data_offset = 0;  // absolute start of tensor data
  std::uint64_t file_size = 0;
};

// Throws GgufError. Never reads past the end of the input.
File parse(std::span<const std::uint8_t> bytes);
File parse_file(const std::filesystem::path& path);

// ggml block layout for one tensor type.
struct TypeTraits {
  std::uint32_t id;
  std::string_view name;
  std::uint64_t block_elements;
  std::uint64_t block_bytes;
};

std::optional<TypeTraits> type_traits(std::uint32_t type_id);
std::optional<std::uint32_t> type_id(std::string_view name);
std::span<const TypeTraits> known_types();
std::string type_name(std::uint32_t type_id);

std::uint64_t element_count(const TensorInfo& t);
// Throws UnknownType or NotBlockAligned (also for n_elements == 0).
std::uint64_t tensor_byte_size(std::uint32_t type_id, std::uint64_t n_elements);

struct TypeFootprint {
  std::size_t tensor_count = 0;
  std::uint64_t elements = 0;
  std::uint64_t bytes = 0;
};

struct FootprintReport {
  std::map<std::uint32_t, TypeFootprint> per_type;
  std::uint64_t total_elements = 0;
  std::uint64_t total_bytes = 0;
  double bits_per_weight = 0.0;  // 0 for an empty list
  double total_gib() const { return static_cast<double>(total_bytes) / (1024.0 * 1024.0 * 1024.0); }
};

FootprintReport footprint_report(std::span<const TensorInfo> tensors);

// GiB with two decimals, e.g. "2.30".
std::string format_gib(std::uint64_t bytes);

// Assigns aligned, back-to-back offsets in declaration order.
void layout_tensors(std::vector<TensorInfo>& tensors, std::uint32_t alignment);

// Serialises metadata and tensor table, then zero padding and `data_fill`
// bytes for each tensor (pseudo-random if seed given). Offsets must already
// be aligned. Throws MalformedKv (bad alignment) / UnsupportedKvType /
// MalformedTensor / UnknownType.
std::vector<std::uint8_t> encode(const File& file, std::optional<std::uint64_t> data_seed = 0);

// Lays out `tensors`, encodes and writes atomically. Returns the parsed-back
// structure's expected value.
File write_fixture_gguf(const std::filesystem::path& path, std::uint32_t version,
                        std::vector<std::pair<std::string, Value>> kvs,
                        std::vector<TensorInfo> tensors, std::uint64_t data_seed = 0);

// Builds a File in memory with offsets laid out and counts filled.
File make_file(std::uint32_t version, std::vector<std::pair<std::string, Value>> kvs,
               std::vector<TensorInfo> tensors);

nlohmann::json to_json(const File& file, const FootprintReport& footprint);
std::string format_table(const File& file, const FootprintReport& footprint);
// Short text form of a metadata value; long arrays are summarised.
std::string value_summary(const Value& v);

}  // namespace intentkit::gguf
