#include <cmath>
#include <cstring>
#include <limits>

#include "anoco/tensor_io.hpp"
#include "doctest.h"
#include "fixtures.hpp"

using namespace anoco;

namespace {

std::vector<std::byte> bytes_of(std::initializer_list<int> v) {
  std::vector<std::byte> out;
  for (int b : v) out.push_back(static_cast<std::byte>(b));
  return out;
}

ErrorCode decode_error(std::span<const std::byte> bytes) {
  try {
    decode_tensor(bytes);
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("decode succeeded");
  return ErrorCode::InvalidArgument;
}

}  // namespace

TEST_SUITE("tensor_io") {
  TEST_CASE("byte layout of a small f32 tensor") {
    Tensor t{{2}, std::vector<float>{1.0f, -2.0f}};
    const auto expected = bytes_of({'A', 'N', 'O', 'F', 1, 0, 0, 0, 0, 1, 2, 0, 0, 0, 0, 0, 0, 0,  //
                                    0x00, 0x00, 0x80, 0x3f, 0x00, 0x00, 0x00, 0xc0});
    CHECK(encode_tensor(t) == expected);
    CHECK(decode_tensor(expected) == t);
  }

  TEST_CASE("1x1 zero tensor round-trips") {
    const Tensor t{{1, 1}, std::vector<float>{0.0f}};
    CHECK(decode_tensor(encode_tensor(t)) == t);
  }

  TEST_CASE("random tensors round-trip bit-exactly through files") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<float> u(-1e6f, 1e6f);
    const auto dir = fixtures::scratch_dir("tensor_io");
    for (int trial = 0; trial < 20; ++trial) {
      const std::uint64_t a = 1 + rng() % 5, b = 1 + rng() % 7, c = 1 + rng() % 9;
      std::vector<float> v(a * b * c);
      for (auto& x : v) x = u(rng);
      v[0] = -0.0f;
      if (v.size() > 1) v[1] = std::numeric_limits<float>::denorm_min();
      const Tensor t{{a, b, c}, v};
      write_tensor(dir / "t.anof", t);
      const Tensor back = read_tensor(dir / "t.anof");
      REQUIRE(back.dims == t.dims);
      CHECK(std::memcmp(back.f32().data(), v.data(), v.size() * sizeof(float)) == 0);
    }
    const Tensor mask{{2, 3}, std::vector<std::uint8_t>{0, 1, 1, 0, 0, 1}};
    write_tensor(dir / "m.anof", mask);
    CHECK(read_tensor(dir / "m.anof") == mask);
    CHECK_FALSE(std::filesystem::exists(dir / "m.anof.tmp"));
  }

  TEST_CASE("non-finite scalars are rejected on write and read") {
    const Tensor t{{1}, std::vector<float>{std::numeric_limits<float>::quiet_NaN()}};
    CHECK_THROWS_AS(encode_tensor(t), Error);
    try {
      encode_tensor(t);
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::NonFiniteScalar);
    }
    auto bytes = encode_tensor(Tensor{{1}, std::vector<float>{1.0f}});
    const float inf = std::numeric_limits<float>::infinity();
    std::memcpy(bytes.data() + bytes.size() - 4, &inf, 4);
    CHECK(decode_error(bytes) == ErrorCode::NonFiniteScalar);
  }

  TEST_CASE("malformed containers map to their error codes") {
    const auto good = encode_tensor(Tensor{{2}, std::vector<float>{1.0f, 2.0f}});
    auto bad_magic = good;
    bad_magic[0] = std::byte{'X'};
    CHECK(decode_error(bad_magic) == ErrorCode::BadMagic);

    auto bad_version = good;
    bad_version[4] = std::byte{2};
    CHECK(decode_error(bad_version) == ErrorCode::VersionUnsupported);

    auto bad_dtype = good;
    bad_dtype[8] = std::byte{7};
    CHECK(decode_error(bad_dtype) == ErrorCode::UnsupportedDtype);

    CHECK(decode_error(std::span(good).first(6)) == ErrorCode::TruncatedPayload);
    CHECK(decode_error(std::span(good).first(good.size() - 1)) == ErrorCode::TruncatedPayload);

    auto trailing = good;
    trailing.push_back(std::byte{0});
    CHECK(decode_error(trailing) == ErrorCode::PayloadSizeMismatch);
  }

  TEST_CASE("unwritable destination reports IoFailure") {
    try {
      write_tensor("/nonexistent-dir/x.anof", Tensor{{1}, std::vector<float>{1.0f}});
      FAIL("write succeeded");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::IoFailure);
    }
  }

  TEST_CASE("domain conversions") {
    FeatureGrid<float> grid;
    grid.height = 2;
    grid.width = 3;
    grid.data = FeatureMatrix<float>::Random(6, 4);
    grid.image_id = "g";
    const Tensor t = tensor_from_feature_grid(grid);
    CHECK(t.dims == std::vector<std::uint64_t>{2, 3, 4});
    const auto back = feature_grid_from_tensor<float>(t, "g");
    CHECK(back.height == 2);
    CHECK(back.width == 3);
    CHECK(back.data == grid.data);

    const auto pool3 = reference_pool_from_tensor<float>(t, "r");
    CHECK(pool3.size() == 6);
    const auto pool2 = reference_pool_from_tensor<float>(Tensor{{6, 4}, t.f32()}, "r2");
    CHECK(pool2.data == pool3.data);
    const std::vector<ReferencePool<float>> both{pool3, pool2};
    const auto joined = concatenate_pools<float>(both);
    CHECK(joined.size() == 12);
    CHECK(joined.source_ids[7] == "r2");

    const std::vector<ReferencePool<float>> mismatched{pool3, reference_pool_from_tensor<float>(Tensor{{1, 3}, std::vector<float>{1, 2, 3}}, "x")};
    CHECK_THROWS_AS(concatenate_pools<float>(mismatched), Error);
    CHECK_THROWS_AS(feature_grid_from_tensor<float>(Tensor{{6, 4}, t.f32()}, "flat"), Error);

    CHECK_THROWS_AS(mask_from_tensor(Tensor{{1, 2}, std::vector<std::uint8_t>{0, 2}}), Error);
    ImageMap map(2, 2);
    map << 0.5, 1.5, 2.5, 3.5;
    CHECK(map_from_tensor(tensor_from_map(map)) == map);
  }
}
