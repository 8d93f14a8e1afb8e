#include "intentkit/gguf.hpp"

#include <algorithm>
#include <array>
#include <cstring>
#include <fstream>
#include <limits>
#include <set>

#include "intentkit/io.hpp"
#include "intentkit/rng.hpp"

namespace intentkit::gguf {

using nlohmann::json;

std::string_view to_string(GgufError::Kind k) {
  switch (k) {
    case GgufError::Kind::BadMagic: return "BadMagic";
    case GgufError::Kind::UnsupportedVersion: return "UnsupportedVersion";
    case GgufError::Kind::TruncatedFile: return "TruncatedFile";
    case GgufError::Kind::MalformedKv: return "MalformedKv";
    case GgufError::Kind::MalformedTensor: return "MalformedTensor";
    case GgufError::Kind::UnsupportedKvType: return "UnsupportedKvType";
    case GgufError::Kind::NotBlockAligned: return "NotBlockAligned";
    case GgufError::Kind::UnknownType: return "UnknownType";
    case GgufError::Kind::Io: return "Io";
  }
  return "Unknown";
}

std::string_view to_string(ValueType t) {
  static constexpr std::array<std::string_view, 13> names = {
      "UINT8", "INT8", "UINT16", "INT16", "UINT32", "INT32", "FLOAT32",
      "BOOL",  "STRING", "ARRAY", "UINT64", "INT64", "FLOAT64"};
  const auto i = static_cast<std::uint32_t>(t);
  return i < names.size() ? names[i] : "INVALID";
}

// ggml_type ids with their block layouts, as published in ggml's type traits
// table. Retired ids (4, 5, 31-33, 36-38) are absent.
namespace {
constexpr std::array<TypeTraits, 31> kTypes = {{
    {0, "F32", 1, 4},           {1, "F16", 1, 2},          {2, "Q4_0", 32, 18},
    {3, "Q4_1", 32, 20},        {6, "Q5_0", 32, 22},       {7, "Q5_1", 32, 24},
    {8, "Q8_0", 32, 34},        {9, "Q8_1", 32, 36},       {10, "Q2_K", 256, 84},
    {11, "Q3_K", 256, 110},     {12, "Q4_K", 256, 144},    {13, "Q5_K", 256, 176},
    {14, "Q6_K", 256, 210},     {15, "Q8_K", 256, 292},    {16, "IQ2_XXS", 256, 66},
    {17, "IQ2_XS", 256, 74},    {18, "IQ3_XXS", 256, 98},  {19, "IQ1_S", 256, 50},
    {20, "IQ4_NL", 32, 18},     {21, "IQ3_S", 256, 110},   {22, "IQ2_S", 256, 82},
    {23, "IQ4_XS", 256, 136},   {24, "I8", 1, 1},          {25, "I16", 1, 2},
    {26, "I32", 1, 4},          {27, "I64", 1, 8},         {28, "F64", 1, 8},
    {29, "IQ1_M", 256, 56},     {30, "BF16", 1, 2},        {34, "TQ1_0", 256, 54},
    {35, "TQ2_0", 256, 66},
}};
constexpr TypeTraits kMxfp4{39, "MXFP4", 32, 17};
}  // namespace

std::span<const TypeTraits> known_types() {
  static const std::vector<TypeTraits> all = [] {
    std::vector<TypeTraits> v(kTypes.begin(), kTypes.end());
    v.push_back(kMxfp4);
    return v;
  }();
  return all;
}

std::optional<TypeTraits> type_traits(std::uint32_t id) {
  for (const auto& t : known_types()) {
    if (t.id == id) return t;
  }
  return std::nullopt;
}

std::optional<std::uint32_t> type_id(std::string_view name) {
  for (const auto& t : known_types()) {
    if (t.name == name) return t.id;
  }
  return std::nullopt;
}

std::string type_name(std::uint32_t id) {
  if (const auto t = type_traits(id)) return std::string(t->name);
  return "type" + std::to_string(id);
}

std::uint64_t element_count(const TensorInfo& t) {
  std::uint64_t n = 1;
  for (std::uint64_t d : t.dims) {
    if (d != 0 && n > std::numeric_limits<std::uint64_t>::max() / d) {
      throw GgufError(GgufError::Kind::MalformedTensor, "element count of '" + t.name + "' overflows");
    }
    n *= d;
  }
  return n;
}

std::uint64_t tensor_byte_size(std::uint32_t id, std::uint64_t n_elements) {
  const auto t = type_traits(id);
  if (!t) throw GgufError(GgufError::Kind::UnknownType, "unknown ggml type " + std::to_string(id));
  if (n_elements == 0 || n_elements % t->block_elements != 0) {
    throw GgufError(GgufError::Kind::NotBlockAligned,
                    std::to_string(n_elements) + " elements is not a positive multiple of the " +
                        std::string(t->name) + " block (" + std::to_string(t->block_elements) + ")");
  }
  return n_elements / t->block_elements * t->block_bytes;
}

FootprintReport footprint_report(std::span<const TensorInfo> tensors) {
  FootprintReport r;
  for (const TensorInfo& t : tensors) {
    const std::uint64_t n = element_count(t);
    const std::uint64_t bytes = tensor_byte_size(t.type, n);
    TypeFootprint& f = r.per_type[t.type];
    ++f.tensor_count;
    f.elements += n;
    f.bytes += bytes;
    r.total_elements += n;
    r.total_bytes += bytes;
  }
  if (r.total_elements > 0) {
    r.bits_per_weight = 8.0 * static_cast<double>(r.total_bytes) / static_cast<double>(r.total_elements);
  }
  return r;
}

std::string format_gib(std::uint64_t bytes) {
  return format_fixed(static_cast<double>(bytes) / (1024.0 * 1024.0 * 1024.0), 2);
}

// ---------------------------------------------------------------------------
// Reading

namespace {

class Source {
 public:
  virtual ~Source() = default;
  virtual void read_raw(void* dst, std::uint64_t n) = 0;
  std::uint64_t size = 0;
  std::uint64_t pos = 0;
  std::uint64_t remaining() const { return size - pos; }
};

class SpanSource final : public Source {
 public:
  explicit SpanSource(std::span<const std::uint8_t> b) : bytes_(b) { size = b.size(); }
  void read_raw(void* dst, std::uint64_t n) override { std::memcpy(dst, bytes_.data() + pos, n); }

 private:
  std::span<const std::uint8_t> bytes_;
};

class FileSource final : public Source {
 public:
  explicit FileSource(const std::filesystem::path& p) : in_(p, std::ios::binary) {
    if (!in_) throw GgufError(GgufError::Kind::Io, "cannot open '" + p.string() + "'");
    std::error_code ec;
    size = std::filesystem::file_size(p, ec);
    if (ec) throw GgufError(GgufError::Kind::Io, "cannot stat '" + p.string() + "': " + ec.message());
  }
  void read_raw(void* dst, std::uint64_t n) override {
    in_.read(static_cast<char*>(dst), static_cast<std::streamsize>(n));
    if (static_cast<std::uint64_t>(in_.gcount()) != n) {
      throw GgufError(GgufError::Kind::Io, "short read");
    }
  }

 private:
  std::ifstream in_;
};

class Reader {
 public:
  explicit Reader(Source& s) : s_(s) {}

  void need(std::uint64_t n, const char* what) {
    if (n > s_.remaining()) {
      throw GgufError(GgufError::Kind::TruncatedFile,
                      std::string("file ends inside ") + what + " at byte " + std::to_string(s_.pos));
    }
  }

  void bytes(void* dst, std::uint64_t n, const char* what) {
    need(n, what);
    if (n > 0) s_.read_raw(dst, n);
    s_.pos += n;
  }

  template <typename T>
  T scalar(const char* what) {
    std::array<std::uint8_t, sizeof(T)> raw;
    bytes(raw.data(), raw.size(), what);
    std::uint64_t v = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) v |= static_cast<std::uint64_t>(raw[i]) << (8 * i);
    if constexpr (std::is_same_v<T, float>) {
      const auto u = static_cast<std::uint32_t>(v);
      float f;
      std::memcpy(&f, &u, sizeof f);
      return f;
    } else if constexpr (std::is_same_v<T, double>) {
      double d;
      std::memcpy(&d, &v, sizeof d);
      return d;
    } else {
      return static_cast<T>(v);
    }
  }

  std::string string(const char* what) {
    const auto len = scalar<std::uint64_t>(what);
    need(len, what);
    std::string s(len, '\0');
    bytes(s.data(), len, what);
    return s;
  }

  std::uint64_t pos() const { return s_.pos; }
  std::uint64_t remaining() const { return s_.remaining(); }
  std::uint64_t size() const { return s_.size; }

 private:
  Source& s_;
};

// Smallest encoding of one value of `t`, used to bound declared counts
// before allocating.
std::uint64_t min_encoded_size(ValueType t) {
  switch (t) {
    case ValueType::Uint8:
    case ValueType::Int8:
    case ValueType::Bool: return 1;
    case ValueType::Uint16:
    case ValueType::Int16: return 2;
    case ValueType::Uint32:
    case ValueType::Int32:
    case ValueType::Float32: return 4;
    case ValueType::String:
    case ValueType::Uint64:
    case ValueType::Int64:
    case ValueType::Float64: return 8;
    case ValueType::Array: return 12;
  }
  return 1;
}

bool valid_value_type(std::uint32_t t) { return t <= static_cast<std::uint32_t>(ValueType::Float64); }

Value read_value(Reader& r, ValueType t, int depth) {
  switch (t) {
    case ValueType::Uint8: return {r.scalar<std::uint8_t>("UINT8 value")};
    case ValueType::Int8: return {r.scalar<std::int8_t>("INT8 value")};
    case ValueType::Uint16: return {r.scalar<std::uint16_t>("UINT16 value")};
    case ValueType::Int16: return {r.scalar<std::int16_t>("INT16 value")};
    case ValueType::Uint32: return {r.scalar<std::uint32_t>("UINT32 value")};
    case ValueType::Int32: return {r.scalar<std::int32_t>("INT32 value")};
    case ValueType::Float32: return {r.scalar<float>("FLOAT32 value")};
    case ValueType::Bool: {
      const auto b = r.scalar<std::uint8_t>("BOOL value");
      if (b > 1) throw GgufError(GgufError::Kind::MalformedKv, "BOOL value " + std::to_string(b));
      return {b == 1};
    }
    case ValueType::String: return {r.string("STRING value")};
    case ValueType::Uint64: return {r.scalar<std::uint64_t>("UINT64 value")};
    case ValueType::Int64: return {r.scalar<std::int64_t>("INT64 value")};
    case ValueType::Float64: return {r.scalar<double>("FLOAT64 value")};
    case ValueType::Array: {
      if (depth >= kMaxArrayDepth) {
        throw GgufError(GgufError::Kind::MalformedKv, "arrays nested deeper than " + std::to_string(kMaxArrayDepth));
      }
      const auto elem = r.scalar<std::uint32_t>("array type");
      if (!valid_value_type(elem)) {
        throw GgufError(GgufError::Kind::MalformedKv, "array element type " + std::to_string(elem));
      }
      const auto count = r.scalar<std::uint64_t>("array length");
      const auto et = static_cast<ValueType>(elem);
      if (count > r.remaining() / min_encoded_size(et)) {
        throw GgufError(GgufError::Kind::TruncatedFile,
                        "array of " + std::to_string(count) + " elements exceeds the file");
      }
      Array a{et, {}};
      a.items.reserve(count);
      for (std::uint64_t i = 0; i < count; ++i) a.items.push_back(read_value(r, et, depth + 1));
      return {std::move(a)};
    }
  }
  throw GgufError(GgufError::Kind::MalformedKv, "value type " + std::to_string(static_cast<std::uint32_t>(t)));
}

std::uint64_t align_up(std::uint64_t v, std::uint64_t a) {
  const std::uint64_t rem = v % a;
  return rem == 0 ? v : v + (a - rem);
}

File parse_source(Source& src) {
  Reader r(src);
  File f;
  f.file_size = r.size();
  const auto magic = r.scalar<std::uint32_t>("magic");
  if (magic != kMagic) throw GgufError(GgufError::Kind::BadMagic, "not a GGUF file (bad magic)");
  f.header.version = r.scalar<std::uint32_t>("version");
  if (f.header.version != 2 && f.header.version != 3) {
    throw GgufError(GgufError::Kind::UnsupportedVersion,
                    "GGUF version " + std::to_string(f.header.version) + " (supported: 2, 3)");
  }
  f.header.tensor_count = r.scalar<std::uint64_t>("tensor count");
  f.header.kv_count = r.scalar<std::uint64_t>("kv count");
  // Every kv takes >= 13 bytes and every tensor record >= 28.
  if (f.header.kv_count > r.remaining() / 13 ||
      f.header.tensor_count > r.remaining() / 28) {
    throw GgufError(GgufError::Kind::TruncatedFile, "declared counts exceed the file size");
  }

  std::set<std::string> keys;
  f.kvs.reserve(f.header.kv_count);
  for (std::uint64_t i = 0; i < f.header.kv_count; ++i) {
    std::string key = r.string("kv key");
    if (key.empty()) throw GgufError(GgufError::Kind::MalformedKv, "empty kv key");
    if (!keys.insert(key).second) throw GgufError(GgufError::Kind::MalformedKv, "duplicate key '" + key + "'");
    const auto t = r.scalar<std::uint32_t>("kv type");
    if (!valid_value_type(t)) {
      throw GgufError(GgufError::Kind::MalformedKv, "key '" + key + "' has type " + std::to_string(t));
    }
    Value v = read_value(r, static_cast<ValueType>(t), 0);
    if (key == "general.alignment") {
      const auto* a = std::get_if<std::uint32_t>(&v.v);
      if (!a || *a == 0 || (*a & (*a - 1)) != 0) {
        throw GgufError(GgufError::Kind::MalformedKv, "general.alignment must be a UINT32 power of two");
      }
      f.alignment = *a;
    }
    f.kvs.emplace_back(std::move(key), std::move(v));
  }

  std::set<std::string> names;
  f.tensors.reserve(f.header.tensor_count);
  for (std::uint64_t i = 0; i < f.header.tensor_count; ++i) {
    TensorInfo t;
    t.name = r.string("tensor name");
    if (!names.insert(t.name).second) {
      throw GgufError(GgufError::Kind::MalformedTensor, "duplicate tensor '" + t.name + "'");
    }
    const auto n_dims = r.scalar<std::uint32_t>("tensor n_dims");
    if (n_dims == 0 || n_dims > kMaxDims) {
      throw GgufError(GgufError::Kind::MalformedTensor,
                      "tensor '" + t.name + "' has " + std::to_string(n_dims) + " dims");
    }
    for (std::uint32_t d = 0; d < n_dims; ++d) {
      const auto extent = r.scalar<std::uint64_t>("tensor dims");
      if (extent == 0) throw GgufError(GgufError::Kind::MalformedTensor, "tensor '" + t.name + "' has a zero extent");
      t.dims.push_back(extent);
    }
    element_count(t);
    t.type = r.scalar<std::uint32_t>("tensor type");
    t.offset = r.scalar<std::uint64_t>("tensor offset");
    if (t.offset % f.alignment != 0) {
      throw GgufError(GgufError::Kind::MalformedTensor,
                      "tensor '" + t.name + "' offset " + std::to_string(t.offset) + " is not aligned");
    }
    f.tensors.push_back(std::move(t));
  }

  f.data_offset = align_up(r.pos(), f.alignment);
  for (const TensorInfo& t : f.tensors) {
    if (!type_traits(t.type)) continue;
    std::uint64_t bytes = 0;
    try {
      bytes = tensor_byte_size(t.type, element_count(t));
    } catch (const GgufError& e) {
      throw GgufError(GgufError::Kind::MalformedTensor, "tensor '" + t.name + "': " + e.what());
    }
    if (f.data_offset > f.file_size || t.offset > f.file_size - f.data_offset ||
        bytes > f.file_size - f.data_offset - t.offset) {
      throw GgufError(GgufError::Kind::TruncatedFile, "data of tensor '" + t.name + "' extends past the file");
    }
  }
  return f;
}

}  // namespace

File parse(std::span<const std::uint8_t> bytes) {
  SpanSource src(bytes);
  return parse_source(src);
}

File parse_file(const std::filesystem::path& path) {
  FileSource src(path);
  return parse_source(src);
}

// ---------------------------------------------------------------------------
// Writing

namespace {

class Writer {
 public:
  template <typename T>
  void scalar(T v) {
    std::uint64_t bits = 0;
    if constexpr (std::is_same_v<T, float>) {
      std::uint32_t u;
      std::memcpy(&u, &v, sizeof u);
      bits = u;
    } else if constexpr (std::is_same_v<T, double>) {
      std::memcpy(&bits, &v, sizeof bits);
    } else {
      bits = static_cast<std::uint64_t>(v);
    }
    for (std::size_t i = 0; i < sizeof(T); ++i) out.push_back(static_cast<std::uint8_t>(bits >> (8 * i)));
  }
  void string(const std::string& s) {
    scalar<std::uint64_t>(s.size());
    out.insert(out.end(), s.begin(), s.end());
  }
  std::vector<std::uint8_t> out;
};

void write_value(Writer& w, const Value& v, int depth) {
  std::visit(
      [&](const auto& x) {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, std::string>) {
          w.string(x);
        } else if constexpr (std::is_same_v<T, Array>) {
          if (depth >= kMaxArrayDepth) {
            throw GgufError(GgufError::Kind::UnsupportedKvType, "arrays nested too deeply");
          }
          w.scalar(static_cast<std::uint32_t>(x.elem_type));
          w.scalar<std::uint64_t>(x.items.size());
          for (const Value& item : x.items) {
            if (item.type() != x.elem_type) {
              throw GgufError(GgufError::Kind::UnsupportedKvType,
                              std::string("array of ") + std::string(to_string(x.elem_type)) + " holds a " +
                                  std::string(to_string(item.type())));
            }
            write_value(w, item, depth + 1);
          }
        } else if constexpr (std::is_same_v<T, bool>) {
          w.scalar<std::uint8_t>(x ? 1 : 0);
        } else {
          w.scalar(x);
        }
      },
      v.v);
}

std::uint32_t declared_alignment(const std::vector<std::pair<std::string, Value>>& kvs) {
  for (const auto& [k, v] : kvs) {
    if (k != "general.alignment") continue;
    const auto* a = std::get_if<std::uint32_t>(&v.v);
    if (!a || *a == 0 || (*a & (*a - 1)) != 0) {
      throw GgufError(GgufError::Kind::MalformedKv, "general.alignment must be a UINT32 power of two");
    }
    return *a;
  }
  return kDefaultAlignment;
}

}  // namespace

void layout_tensors(std::vector<TensorInfo>& tensors, std::uint32_t alignment) {
  std::uint64_t offset = 0;
  for (TensorInfo& t : tensors) {
    t.offset = offset;
    offset = align_up(offset + tensor_byte_size(t.type, element_count(t)), alignment);
  }
}

std::vector<std::uint8_t> encode(const File& file, std::optional<std::uint64_t> data_seed) {
  const std::uint32_t alignment = declared_alignment(file.kvs);
  Writer w;
  w.scalar(kMagic);
  if (file.header.version != 2 && file.header.version != 3) {
    throw GgufError(GgufError::Kind::UnsupportedVersion, "cannot write version " + std::to_string(file.header.version));
  }
  w.scalar(file.header.version);
  w.scalar<std::uint64_t>(file.tensors.size());
  w.scalar<std::uint64_t>(file.kvs.size());
  for (const auto& [k, v] : file.kvs) {
    w.string(k);
    w.scalar(static_cast<std::uint32_t>(v.type()));
    write_value(w, v, 0);
  }
  std::uint64_t data_end = 0;
  for (const TensorInfo& t : file.tensors) {
    if (t.dims.empty() || t.dims.size() > kMaxDims ||
        std::find(t.dims.begin(), t.dims.end(), 0) != t.dims.end() || t.offset % alignment != 0) {
      throw GgufError(GgufError::Kind::MalformedTensor, "cannot write tensor '" + t.name + "'");
    }
    w.string(t.name);
    w.scalar<std::uint32_t>(static_cast<std::uint32_t>(t.dims.size()));
    for (std::uint64_t d : t.dims) w.scalar(d);
    w.scalar(t.type);
    w.scalar(t.offset);
    data_end = std::max(data_end, t.offset + tensor_byte_size(t.type, element_count(t)));
  }
  if (!file.tensors.empty()) {
    w.out.resize(align_up(w.out.size(), alignment), 0);
    const std::size_t base = w.out.size();
    w.out.resize(base + data_end, 0);
    if (data_seed) {
      Rng rng(*data_seed);
      for (std::size_t i = base; i < w.out.size(); ++i) w.out[i] = static_cast<std::uint8_t>(rng.next());
    }
  }
  return w.out;
}

File make_file(std::uint32_t version, std::vector<std::pair<std::string, Value>> kvs,
               std::vector<TensorInfo> tensors) {
  File f;
  f.alignment = declared_alignment(kvs);
  layout_tensors(tensors, f.alignment);
  f.header = {version, tensors.size(), kvs.size()};
  f.kvs = std::move(kvs);
  f.tensors = std::move(tensors);
  return f;
}

File write_fixture_gguf(const std::filesystem::path& path, std::uint32_t version,
                        std::vector<std::pair<std::string, Value>> kvs, std::vector<TensorInfo> tensors,
                        std::uint64_t data_seed) {
  File f = make_file(version, std::move(kvs), std::move(tensors));
  const auto bytes = encode(f, data_seed);
  write_file_atomic(path, std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()));
  return parse(bytes);
}

// ---------------------------------------------------------------------------
// Reporting

std::string value_summary(const Value& v) {
  return std::visit(
      [&](const auto& x) -> std::string {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, std::string>) {
          return x.size() > 60 ? x.substr(0, 57) + "..." : x;
        } else if constexpr (std::is_same_v<T, Array>) {
          if (x.items.size() <= 8 && x.elem_type != ValueType::Array) {
            std::string s = "[";
            for (std::size_t i = 0; i < x.items.size(); ++i) {
              if (i) s += ", ";
              s += value_summary(x.items[i]);
            }
            return s + "]";
          }
          return "[" + std::string(to_string(x.elem_type)) + " x " + std::to_string(x.items.size()) + "]";
        } else if constexpr (std::is_same_v<T, bool>) {
          return x ? "true" : "false";
        } else if constexpr (std::is_floating_point_v<T>) {
          return format_double(static_cast<double>(x));
        } else {
          return std::to_string(static_cast<std::int64_t>(x));
        }
      },
      v.v);
}

json to_json(const File& file, const FootprintReport& fp) {
  json kvs = json::array();
  for (const auto& [k, v] : file.kvs) {
    kvs.push_back({{"key", k}, {"type", to_string(v.type())}, {"value", value_summary(v)}});
  }
  json per_type = json::object();
  for (const auto& [id, t] : fp.per_type) {
    per_type[type_name(id)] = {{"tensor_count", t.tensor_count},
                               {"elements", t.elements},
                               {"bytes", t.bytes},
                               {"gib", std::stod(format_gib(t.bytes))}};
  }
  return {
      {"header",
       {{"version", file.header.version},
        {"tensor_count", file.header.tensor_count},
        {"kv_count", file.header.kv_count},
        {"alignment", file.alignment},
        {"data_offset", file.data_offset},
        {"file_size", file.file_size}}},
      {"metadata", kvs},
      {"footprint",
       {{"per_type", per_type},
        {"total_elements", fp.total_elements},
        {"total_bytes", fp.total_bytes},
        {"total_gib", std::stod(format_gib(fp.total_bytes))},
        {"bits_per_weight", fp.bits_per_weight},
        {"note", "parameter bytes only; runtime buffers are not included"}}},
  };
}

std::string format_table(const File& file, const FootprintReport& fp) {
  std::string out;
  char line[256];
  std::snprintf(line, sizeof line, "GGUF v%u  tensors %llu  kvs %llu  alignment %u\n", file.header.version,
                static_cast<unsigned long long>(file.header.tensor_count),
                static_cast<unsigned long long>(file.header.kv_count), file.alignment);
  out += line;
  out += "\nmetadata\n";
  for (const auto& [k, v] : file.kvs) {
    std::snprintf(line, sizeof line, "  %-40s %-8s %s\n", k.c_str(), std::string(to_string(v.type())).c_str(),
                  value_summary(v).c_str());
    out += line;
  }
  out += "\ntype       tensors         elements            bytes      GiB\n";
  for (const auto& [id, t] : fp.per_type) {
    std::snprintf(line, sizeof line, "%-8s %9zu %16llu %16llu %8s\n", type_name(id).c_str(), t.tensor_count,
                  static_cast<unsigned long long>(t.elements), static_cast<unsigned long long>(t.bytes),
                  format_gib(t.bytes).c_str());
    out += line;
  }
  std::snprintf(line, sizeof line, "%-8s %9zu %16llu %16llu %8s\n", "total", file.tensors.size(),
                static_cast<unsigned long long>(fp.total_elements),
                static_cast<unsigned long long>(fp.total_bytes), format_gib(fp.total_bytes).c_str());
  out += line;
  std::snprintf(line, sizeof line, "bits per weight %.4f\n", fp.bits_per_weight);
  out += line;
  return out;
}

}  // namespace intentkit::gguf
