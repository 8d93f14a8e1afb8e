#include <gtest/gtest.h>

#include <chrono>
#include <cstring>

#include "intentkit/gguf.hpp"
#include "intentkit/rng.hpp"
#include "test_support.hpp"

namespace intentkit::gguf {
namespace {

GgufError::Kind kind_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const GgufError& e) {
    return e.kind();
  }
  ADD_FAILURE() << "no GgufError thrown";
  return GgufError::Kind::Io;
}

// Little-endian byte assembler, independent of the library writer.
struct Bytes {
  std::vector<std::uint8_t> b;
  template <typename T>
  Bytes& put(T v) {
    std::uint8_t raw[sizeof(T)];
    std::memcpy(raw, &v, sizeof(T));
    b.insert(b.end(), raw, raw + sizeof(T));
    return *this;
  }
  Bytes& str(std::string_view s) {
    put<std::uint64_t>(s.size());
    b.insert(b.end(), s.begin(), s.end());
    return *this;
  }
  Bytes& pad_to(std::size_t align) {
    while (b.size() % align) b.push_back(0);
    return *this;
  }
};

std::vector<std::uint8_t> hand_built() {
  Bytes x;
  x.put<std::uint32_t>(0x46554747).put<std::uint32_t>(3).put<std::uint64_t>(2).put<std::uint64_t>(2);
  x.str("general.architecture").put<std::uint32_t>(8).str("llama");
  x.str("tokenizer.ggml.scores").put<std::uint32_t>(9).put<std::uint32_t>(6).put<std::uint64_t>(2);
  x.put<float>(0.5f).put<float>(-1.0f);
  x.str("tok_embd.weight").put<std::uint32_t>(2).put<std::uint64_t>(256).put<std::uint64_t>(4);
  x.put<std::uint32_t>(12).put<std::uint64_t>(0);
  x.str("output_norm.weight").put<std::uint32_t>(1).put<std::uint64_t>(256).put<std::uint32_t>(1);
  x.put<std::uint64_t>(4 * 144);
  x.pad_to(32);
  x.b.resize(x.b.size() + 4 * 144 + 256 * 2, 0);
  return x.b;
}

// ---------------------------------------------------------------- parsing

TEST(Parse, HandBuiltFile) {
  const auto bytes = hand_built();
  const File f = parse(bytes);
  EXPECT_EQ(f.header.version, 3u);
  ASSERT_EQ(f.kvs.size(), 2u);
  EXPECT_EQ(f.kvs[0].first, "general.architecture");
  EXPECT_EQ(std::get<std::string>(f.kvs[0].second.v), "llama");
  const auto& arr = std::get<Array>(f.kvs[1].second.v);
  EXPECT_EQ(arr.elem_type, ValueType::Float32);
  EXPECT_EQ(std::get<float>(arr.items[1].v), -1.0f);
  ASSERT_EQ(f.tensors.size(), 2u);
  EXPECT_EQ(f.tensors[0].dims, (std::vector<std::uint64_t>{256, 4}));
  EXPECT_EQ(type_name(f.tensors[0].type), "Q4_K");
  EXPECT_EQ(f.data_offset % 32, 0u);
  EXPECT_EQ(f.file_size, bytes.size());

  const FootprintReport fp = footprint_report(f.tensors);
  EXPECT_EQ(fp.total_elements, 1024u + 256u);
  EXPECT_EQ(fp.total_bytes, 576u + 512u);
}

TEST(Parse, HeaderErrors) {
  auto bytes = hand_built();
  auto bad = bytes;
  bad[0] = 'X';
  EXPECT_EQ(kind_of([&] { parse(bad); }), GgufError::Kind::BadMagic);
  bad = bytes;
  bad[4] = 1;
  EXPECT_EQ(kind_of([&] { parse(bad); }), GgufError::Kind::UnsupportedVersion);
  bad = bytes;
  bad[4] = 2;
  EXPECT_NO_THROW(parse(bad));
  for (std::size_t n : {0u, 3u, 10u, 30u, 100u}) {
    const std::span<const std::uint8_t> cut(bytes.data(), n);
    EXPECT_EQ(kind_of([&] { parse(cut); }), GgufError::Kind::TruncatedFile) << n;
  }
  const std::span<const std::uint8_t> short_data(bytes.data(), bytes.size() - 1);
  EXPECT_EQ(kind_of([&] { parse(short_data); }), GgufError::Kind::TruncatedFile);
}

TEST(Parse, MissingFileIsIo) {
  EXPECT_EQ(kind_of([] { parse_file("/nonexistent/model.gguf"); }), GgufError::Kind::Io);
}

// ---------------------------------------------------------------- footprints

TEST(Footprint, BlockSizes) {
  EXPECT_EQ(tensor_byte_size(*type_id("F16"), 1024), 2048u);
  EXPECT_EQ(tensor_byte_size(*type_id("Q4_K"), 256), 144u);
  EXPECT_EQ(tensor_byte_size(*type_id("Q8_0"), 64), 68u);
  EXPECT_EQ(kind_of([] { tensor_byte_size(*type_id("Q4_K"), 100); }), GgufError::Kind::NotBlockAligned);
  EXPECT_EQ(kind_of([] { tensor_byte_size(4, 256); }), GgufError::Kind::UnknownType);
}

TEST(Footprint, AllF16OneBillionParameterModel) {
  const std::vector<TensorInfo> t = {{"w", {1'235'814'400}, *type_id("F16"), 0}};
  const auto fp = footprint_report(t);
  EXPECT_NEAR(fp.total_gib(), 2.30, 0.01);
  EXPECT_EQ(format_gib(fp.total_bytes), "2.30");
  EXPECT_DOUBLE_EQ(fp.bits_per_weight, 16.0);
}

TEST(Footprint, QuantOrdering) {
  const std::uint64_t n = 256ull * 4096;
  std::vector<std::uint64_t> sizes;
  for (const char* name : {"Q3_K", "Q4_K", "Q5_K", "F16"}) sizes.push_back(tensor_byte_size(*type_id(name), n));
  EXPECT_TRUE(std::is_sorted(sizes.begin(), sizes.end()));
  EXPECT_EQ(std::adjacent_find(sizes.begin(), sizes.end()), sizes.end());
  const std::vector<TensorInfo> q4 = {{"w", {n}, *type_id("Q4_K"), 0}};
  EXPECT_DOUBLE_EQ(footprint_report(q4).bits_per_weight, 4.5);
}

TEST(Footprint, EveryKnownTypeIsSelfConsistent) {
  for (const auto& t : known_types()) {
    EXPECT_EQ(type_id(t.name), t.id);
    EXPECT_EQ(tensor_byte_size(t.id, t.block_elements * 3), t.block_bytes * 3);
  }
}

// ---------------------------------------------------------------- round trip

Value random_value(Rng& rng, int depth) {
  const auto t = static_cast<ValueType>(rng.below(depth < 2 ? 13 : 9));
  switch (t) {
    case ValueType::Uint8: return {static_cast<std::uint8_t>(rng.next())};
    case ValueType::Int8: return {static_cast<std::int8_t>(rng.next())};
    case ValueType::Uint16: return {static_cast<std::uint16_t>(rng.next())};
    case ValueType::Int16: return {static_cast<std::int16_t>(rng.next())};
    case ValueType::Uint32: return {static_cast<std::uint32_t>(rng.next())};
    case ValueType::Int32: return {static_cast<std::int32_t>(rng.next())};
    case ValueType::Float32: return {static_cast<float>(rng.uniform01() * 100 - 50)};
    case ValueType::Bool: return {rng.below(2) == 1};
    case ValueType::String: return {std::string("s") + std::to_string(rng.next() % 100000) + "ñ"};
    case ValueType::Array: {
      Array a;
      const Value proto = random_value(rng, depth + 1);
      a.elem_type = proto.type();
      const auto n = rng.below(5);
      for (std::uint64_t i = 0; i < n; ++i) {
        Value v = random_value(rng, depth + 1);
        while (v.type() != a.elem_type) v = random_value(rng, depth + 1);
        a.items.push_back(std::move(v));
      }
      return {std::move(a)};
    }
    case ValueType::Uint64: return {rng.next()};
    case ValueType::Int64: return {static_cast<std::int64_t>(rng.next())};
    case ValueType::Float64: return {rng.uniform01()};
  }
  return {std::uint8_t{0}};
}

File random_file(Rng& rng) {
  std::vector<std::pair<std::string, Value>> kvs;
  const auto n_kv = rng.below(12);
  for (std::uint64_t i = 0; i < n_kv; ++i) kvs.emplace_back("key." + std::to_string(i), random_value(rng, 0));
  std::vector<TensorInfo> tensors;
  const auto types = known_types();
  const auto n_t = rng.below(8);
  for (std::uint64_t i = 0; i < n_t; ++i) {
    const auto& tt = types[rng.below(types.size())];
    TensorInfo t;
    t.name = "blk." + std::to_string(i) + ".weight";
    t.type = tt.id;
    t.dims.push_back(tt.block_elements * (1 + rng.below(4)));
    const auto extra = rng.below(3);
    for (std::uint64_t d = 0; d < extra; ++d) t.dims.push_back(1 + rng.below(3));
    tensors.push_back(t);
  }
  return make_file(rng.below(2) ? 3 : 2, std::move(kvs), std::move(tensors));
}

TEST(RoundTrip, RandomFixtures) {
  Rng rng(321);
  for (int i = 0; i < 40; ++i) {
    const File f = random_file(rng);
    const auto bytes = encode(f, rng.next());
    const File g = parse(bytes);
    EXPECT_EQ(g.header, f.header);
    EXPECT_EQ(g.kvs, f.kvs);
    EXPECT_EQ(g.tensors, f.tensors);
    EXPECT_EQ(g.file_size, bytes.size());
    EXPECT_EQ(encode(g, std::nullopt), encode(f, std::nullopt));
  }
}

TEST(RoundTrip, CustomAlignmentAndFileWriter) {
  testing::TempDir dir;
  const File f = write_fixture_gguf(dir / "m.gguf", 3, {{"general.alignment", Value{std::uint32_t{64}}}},
                                    {{"a", {32}, *type_id("Q8_0"), 0}, {"b", {7}, *type_id("F32"), 0}});
  const File g = parse_file(dir / "m.gguf");
  EXPECT_EQ(g.alignment, 64u);
  EXPECT_EQ(g.data_offset % 64, 0u);
  EXPECT_EQ(g.tensors, f.tensors);
  EXPECT_EQ(g.tensors[1].offset % 64, 0u);
}

TEST(Validation, StructuralErrors) {
  auto encoded = [](std::vector<std::pair<std::string, Value>> kvs, std::vector<TensorInfo> ts) {
    File f;
    f.header = {3, ts.size(), kvs.size()};
    f.kvs = std::move(kvs);
    f.tensors = std::move(ts);
    return f;
  };
  const auto f16 = *type_id("F16");
  // Duplicate key.
  File dup = encoded({{"a", Value{std::uint8_t{1}}}, {"a", Value{std::uint8_t{2}}}}, {});
  EXPECT_EQ(kind_of([&] { parse(encode(dup)); }), GgufError::Kind::MalformedKv);
  // Alignment must be a power of two.
  File align = encoded({{"general.alignment", Value{std::uint32_t{48}}}}, {});
  EXPECT_EQ(kind_of([&] { parse(encode(align)); }), GgufError::Kind::MalformedKv);
  // Unaligned tensor offset.
  File off = encoded({}, {{"t", {16}, f16, 0}, {"u", {16}, f16, 33}});
  off.file_size = 0;
  EXPECT_EQ(kind_of([&] { parse(encode(off)); }), GgufError::Kind::MalformedTensor);
  // Zero extent.
  File zero = encoded({}, {{"t", {0}, f16, 0}});
  EXPECT_THROW(encode(zero), GgufError);
}

// ---------------------------------------------------------------- fuzzing

TEST(Fuzz, MutatedFixturesFailCleanly) {
  Rng rng(2718);
  std::vector<std::vector<std::uint8_t>> seeds;
  for (int i = 0; i < 10; ++i) seeds.push_back(encode(random_file(rng), std::nullopt));
  seeds.push_back(hand_built());

  int structured = 0;
  for (int i = 0; i < 10'000; ++i) {
    std::vector<std::uint8_t> b = seeds[rng.below(seeds.size())];
    const auto n_mut = 1 + rng.below(4);
    for (std::uint64_t m = 0; m < n_mut && !b.empty(); ++m) {
      const std::size_t at = rng.below(b.size());
      switch (rng.below(4)) {
        case 0: b[at] ^= static_cast<std::uint8_t>(1u << rng.below(8)); break;
        case 1: b[at] = static_cast<std::uint8_t>(rng.next()); break;
        case 2: b.resize(at); break;
        default: b.insert(b.begin() + static_cast<std::ptrdiff_t>(at), static_cast<std::uint8_t>(rng.next())); break;
      }
    }
    const auto t0 = std::chrono::steady_clock::now();
    try {
      parse(b);
    } catch (const GgufError&) {
      ++structured;
    }
    ASSERT_LT(std::chrono::steady_clock::now() - t0, std::chrono::seconds(5));
  }
  EXPECT_GT(structured, 5000);
}

TEST(Output, JsonAndTable) {
  const auto bytes = hand_built();
  const File f = parse(bytes);
  const auto fp = footprint_report(f.tensors);
  const auto j = to_json(f, fp);
  EXPECT_EQ(j["header"]["tensor_count"], 2);
  EXPECT_NE(format_table(f, fp).find("Q4_K"), std::string::npos);
  Array big{ValueType::Uint8, std::vector<Value>(1000, Value{std::uint8_t{1}})};
  EXPECT_LT(value_summary(Value{big}).size(), 200u);
}

}  // namespace
}  // namespace intentkit::gguf
