#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "hartgeom/rng.hpp"
#include "hartgeom/tensor.hpp"

using namespace hartgeom;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir() {
  auto dir = fs::temp_directory_path() / "hartgeom_tensor_tests";
  fs::create_directories(dir);
  return dir;
}

std::vector<std::uint8_t> slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace

TEST_CASE("round-trip identity on a 2x3 f32 zero tensor") {
  auto path = (temp_dir() / "zeros.htf").string();
  Tensor t = Tensor::zeros(Dtype::f32, {2, 3});
  write_tensor(path, t);
  Tensor back = read_tensor(path);
  CHECK(back == t);
}

TEST_CASE("10-byte file raises TruncatedFile") {
  auto path = (temp_dir() / "short.htf").string();
  std::ofstream out(path, std::ios::binary);
  out.write("HTF1\x00\x01\x00\x00\x00\x00", 10);
  out.close();
  CHECK_THROWS_AS(read_tensor(path), TruncatedFile);
}

TEST_CASE("bad magic raises BadMagic with offset 0") {
  auto path = (temp_dir() / "badmagic.htf").string();
  std::ofstream(path, std::ios::binary) << "NOPE0000000000000000000000000000";
  try {
    read_tensor(path);
    FAIL("expected BadMagic");
  } catch (const BadMagic& e) {
    CHECK(std::string(e.what()).find("offset 0") != std::string::npos);
  }
}

TEST_CASE("unsupported dtype code raises UnsupportedDtype at offset 4") {
  auto path = (temp_dir() / "baddtype.htf").string();
  std::ofstream out(path, std::ios::binary);
  out << "HTF1";
  char rest[] = {9, 1, 0, 0, 0, 0, 0, 0};
  out.write(rest, sizeof rest);
  out.close();
  try {
    read_tensor(path);
    FAIL("expected UnsupportedDtype");
  } catch (const UnsupportedDtype& e) {
    CHECK(std::string(e.what()).find("offset 4") != std::string::npos);
  }
}

TEST_CASE("scalar-shaped f32 1.0 writes a 24-byte file ending in IEEE-754 bits") {
  auto path = (temp_dir() / "one.htf").string();
  write_tensor(path, Tensor::from_f32({1}, {1.0f}));
  auto bytes = slurp(path);
  REQUIRE(bytes.size() == 24);
  CHECK(bytes[20] == 0x00);
  CHECK(bytes[21] == 0x00);
  CHECK(bytes[22] == 0x80);
  CHECK(bytes[23] == 0x3F);
  // header layout: magic, dtype, ndim, 6 pad bytes, u64 dim
  CHECK(bytes[4] == 0);  // f32
  CHECK(bytes[5] == 1);  // ndim
  for (int i = 6; i < 12; ++i) CHECK(bytes[i] == 0);
  CHECK(bytes[12] == 1);
}

TEST_CASE("empty shape list is rejected") {
  CHECK_THROWS_AS(Tensor::zeros(Dtype::f32, {}), Error);
}

TEST_CASE("u8 payload is byte passthrough") {
  auto path = (temp_dir() / "u8.htf").string();
  write_tensor(path, Tensor::from_u8({2}, {0, 255}));
  auto bytes = slurp(path);
  REQUIRE(bytes.size() == 22);
  CHECK(bytes[20] == 0x00);
  CHECK(bytes[21] == 0xFF);
}

TEST_CASE("518x518x3 header as written by the pipeline") {
  auto path = (temp_dir() / "pointmap.htf").string();
  Tensor t = Tensor::zeros(Dtype::f32, {518, 518, 3});
  write_tensor(path, t);
  Tensor back = read_tensor(path);
  REQUIRE(back.ndim() == 3);
  CHECK(back.dim(0) == 518);
  CHECK(back.dim(1) == 518);
  CHECK(back.dim(2) == 3);
}

TEST_CASE("property: random tensors round-trip bit-exactly") {
  Pcg32 rng(7);
  for (int trial = 0; trial < 50; ++trial) {
    int ndim = 1 + int(rng.next_below(4));
    std::vector<std::uint64_t> shape;
    std::size_t count = 1;
    for (int d = 0; d < ndim; ++d) {
      shape.push_back(1 + rng.next_below(8));
      count *= shape.back();
    }
    Tensor t;
    switch (rng.next_below(3)) {
      case 0: {
        std::vector<float> v(count);
        for (auto& x : v) x = static_cast<float>(rng.uniform(-10, 10));
        t = Tensor::from_f32(shape, std::move(v));
        break;
      }
      case 1: {
        std::vector<std::uint8_t> v(count);
        for (auto& x : v) x = static_cast<std::uint8_t>(rng.next_below(256));
        t = Tensor::from_u8(shape, std::move(v));
        break;
      }
      default: {
        std::vector<std::uint32_t> v(count);
        for (auto& x : v) x = rng.next();
        t = Tensor::from_u32(shape, std::move(v));
        break;
      }
    }
    auto path = (temp_dir() / ("rt" + std::to_string(trial) + ".htf")).string();
    write_tensor(path, t);
    CHECK(read_tensor(path) == t);
  }
}
