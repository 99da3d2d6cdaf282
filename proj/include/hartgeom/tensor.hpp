#pragma once

#include <array>
#include <bit>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <string>
#include <vector>

#include "hartgeom/error.hpp"

namespace hartgeom {

enum class Dtype : std::uint8_t { f32 = 0, u8 = 1, u32 = 2 };

inline std::size_t dtype_size(Dtype d) {
  switch (d) {
    case Dtype::f32: return 4;
    case Dtype::u8: return 1;
    case Dtype::u32: return 4;
  }
  return 0;
}

inline const char* dtype_name(Dtype d) {
  switch (d) {
    case Dtype::f32: return "f32";
    case Dtype::u8: return "u8";
    case Dtype::u32: return "u32";
  }
  return "?";
}

/// Dense row-major tensor, 1 to 6 dimensions. One of the payload vectors is
/// populated according to dtype; the others stay empty.
class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(Dtype dtype, std::vector<std::uint64_t> shape) {
    Tensor t;
    t.dtype_ = dtype;
    t.shape_ = std::move(shape);
    t.validate_shape();
    switch (dtype) {
      case Dtype::f32: t.f32_.assign(t.element_count(), 0.0f); break;
      case Dtype::u8: t.u8_.assign(t.element_count(), 0); break;
      case Dtype::u32: t.u32_.assign(t.element_count(), 0); break;
    }
    return t;
  }

  static Tensor from_f32(std::vector<std::uint64_t> shape,
                         std::vector<float> data) {
    Tensor t;
    t.dtype_ = Dtype::f32;
    t.shape_ = std::move(shape);
    t.f32_ = std::move(data);
    t.validate_shape();
    t.validate_count(t.f32_.size());
    return t;
  }

  static Tensor from_u8(std::vector<std::uint64_t> shape,
                        std::vector<std::uint8_t> data) {
    Tensor t;
    t.dtype_ = Dtype::u8;
    t.shape_ = std::move(shape);
    t.u8_ = std::move(data);
    t.validate_shape();
    t.validate_count(t.u8_.size());
    return t;
  }

  static Tensor from_u32(std::vector<std::uint64_t> shape,
                         std::vector<std::uint32_t> data) {
    Tensor t;
    t.dtype_ = Dtype::u32;
    t.shape_ = std::move(shape);
    t.u32_ = std::move(data);
    t.validate_shape();
    t.validate_count(t.u32_.size());
    return t;
  }

  Dtype dtype() const { return dtype_; }
  const std::vector<std::uint64_t>& shape() const { return shape_; }
  std::size_t ndim() const { return shape_.size(); }
  std::uint64_t dim(std::size_t i) const { return shape_.at(i); }

  std::size_t element_count() const {
    std::size_t n = 1;
    for (auto d : shape_) n *= static_cast<std::size_t>(d);
    return n;
  }

  std::vector<float>& f32() { check_dtype(Dtype::f32); return f32_; }
  const std::vector<float>& f32() const { check_dtype(Dtype::f32); return f32_; }
  std::vector<std::uint8_t>& u8() { check_dtype(Dtype::u8); return u8_; }
  const std::vector<std::uint8_t>& u8() const { check_dtype(Dtype::u8); return u8_; }
  std::vector<std::uint32_t>& u32() { check_dtype(Dtype::u32); return u32_; }
  const std::vector<std::uint32_t>& u32() const { check_dtype(Dtype::u32); return u32_; }

  bool operator==(const Tensor& o) const {
    return dtype_ == o.dtype_ && shape_ == o.shape_ && f32_ == o.f32_ &&
           u8_ == o.u8_ && u32_ == o.u32_;
  }

 private:
  void validate_shape() const {
    if (shape_.empty() || shape_.size() > 6)
      throw Error("tensor shape must have 1..6 dimensions, got " +
                  std::to_string(shape_.size()));
  }
  void validate_count(std::size_t n) const {
    if (n != element_count())
      throw Error("tensor payload has " + std::to_string(n) +
                  " elements, shape expects " +
                  std::to_string(element_count()));
  }
  void check_dtype(Dtype want) const {
    if (dtype_ != want)
      throw Error(std::string("tensor dtype is ") + dtype_name(dtype_) +
                  ", accessed as " + dtype_name(want));
  }

  Dtype dtype_ = Dtype::f32;
  std::vector<std::uint64_t> shape_;
  std::vector<float> f32_;
  std::vector<std::uint8_t> u8_;
  std::vector<std::uint32_t> u32_;
};

namespace detail {

class FileReader {
 public:
  explicit FileReader(const std::string& path) : path_(path) {
    f_ = std::fopen(path.c_str(), "rb");
    if (!f_) throw IoError("cannot open " + path + " for reading");
  }
  ~FileReader() { if (f_) std::fclose(f_); }
  FileReader(const FileReader&) = delete;
  FileReader& operator=(const FileReader&) = delete;

  void read(void* dst, std::size_t n) {
    if (std::fread(dst, 1, n, f_) != n)
      throw TruncatedFile(path_ + ": truncated at byte offset " +
                          std::to_string(offset_) + " (wanted " +
                          std::to_string(n) + " more bytes)");
    offset_ += n;
  }
  std::size_t offset() const { return offset_; }
  const std::string& path() const { return path_; }

 private:
  std::FILE* f_ = nullptr;
  std::string path_;
  std::size_t offset_ = 0;
};

class FileWriter {
 public:
  explicit FileWriter(const std::string& path) : path_(path) {
    f_ = std::fopen(path.c_str(), "wb");
    if (!f_) throw IoError("cannot open " + path + " for writing");
  }
  ~FileWriter() { if (f_) std::fclose(f_); }
  FileWriter(const FileWriter&) = delete;
  FileWriter& operator=(const FileWriter&) = delete;

  void write(const void* src, std::size_t n) {
    if (std::fwrite(src, 1, n, f_) != n)
      throw IoError("short write to " + path_);
  }
  void close() {
    if (f_ && std::fclose(f_) != 0) { f_ = nullptr; throw IoError("close failed for " + path_); }
    f_ = nullptr;
  }

 private:
  std::FILE* f_ = nullptr;
  std::string path_;
};

inline void put_u64_le(std::uint64_t v, std::uint8_t out[8]) {
  for (int i = 0; i < 8; ++i) out[i] = static_cast<std::uint8_t>(v >> (8 * i));
}
inline std::uint64_t get_u64_le(const std::uint8_t in[8]) {
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= std::uint64_t(in[i]) << (8 * i);
  return v;
}

}  // namespace detail

// HTF container layout:
//   "HTF1" | dtype u8 | ndim u8 | 6 zero bytes | ndim x u64 LE dims | payload
// Payload is row-major, little-endian. f32 elements are IEEE-754 binary32.

/// HTF blob in memory; used by composite containers that embed tensors.
inline std::string serialize_tensor(const Tensor& t) {
  std::string out;
  out.reserve(12 + 8 * t.ndim() + t.element_count() * dtype_size(t.dtype()));
  out.append("HTF1", 4);
  out.push_back(static_cast<char>(t.dtype()));
  out.push_back(static_cast<char>(t.ndim()));
  out.append(6, '\0');
  for (auto d : t.shape()) {
    std::uint8_t b[8];
    detail::put_u64_le(d, b);
    out.append(reinterpret_cast<const char*>(b), 8);
  }
  static_assert(std::endian::native == std::endian::little,
                "HTF serializer requires a little-endian host");
  switch (t.dtype()) {
    case Dtype::f32:
      out.append(reinterpret_cast<const char*>(t.f32().data()), t.element_count() * 4);
      break;
    case Dtype::u8:
      out.append(reinterpret_cast<const char*>(t.u8().data()), t.element_count());
      break;
    case Dtype::u32:
      out.append(reinterpret_cast<const char*>(t.u32().data()), t.element_count() * 4);
      break;
  }
  return out;
}

inline Tensor parse_tensor(const std::string& blob, const std::string& context) {
  std::size_t off = 0;
  auto need = [&](std::size_t n) {
    if (off + n > blob.size())
      throw TruncatedFile(context + ": truncated at byte offset " + std::to_string(off));
  };
  need(4);
  if (blob.compare(0, 4, "HTF1") != 0)
    throw BadMagic(context + ": bad magic at byte offset 0 (expected \"HTF1\")");
  off = 4;
  need(2);
  std::uint8_t dtype_code = static_cast<std::uint8_t>(blob[off]);
  if (dtype_code > 2)
    throw UnsupportedDtype(context + ": unsupported dtype code " +
                           std::to_string(int(dtype_code)) + " at byte offset 4");
  std::uint8_t ndim = static_cast<std::uint8_t>(blob[off + 1]);
  if (ndim < 1 || ndim > 6)
    throw Error(context + ": ndim out of range [1,6] at byte offset 5");
  off += 2;
  need(6);
  off += 6;
  std::vector<std::uint64_t> shape(ndim);
  for (auto& d : shape) {
    need(8);
    d = detail::get_u64_le(reinterpret_cast<const std::uint8_t*>(blob.data() + off));
    off += 8;
  }
  Tensor t = Tensor::zeros(static_cast<Dtype>(dtype_code), std::move(shape));
  std::size_t payload = t.element_count() * dtype_size(t.dtype());
  need(payload);
  switch (t.dtype()) {
    case Dtype::f32: std::memcpy(t.f32().data(), blob.data() + off, payload); break;
    case Dtype::u8: std::memcpy(t.u8().data(), blob.data() + off, payload); break;
    case Dtype::u32: std::memcpy(t.u32().data(), blob.data() + off, payload); break;
  }
  return t;
}

inline void write_tensor(const std::string& path, const Tensor& t) {
  detail::FileWriter w(path);
  w.write("HTF1", 4);
  std::uint8_t dtype_code = static_cast<std::uint8_t>(t.dtype());
  std::uint8_t ndim = static_cast<std::uint8_t>(t.ndim());
  w.write(&dtype_code, 1);
  w.write(&ndim, 1);
  std::uint8_t pad[6] = {0, 0, 0, 0, 0, 0};
  w.write(pad, 6);
  for (auto d : t.shape()) {
    std::uint8_t b[8];
    detail::put_u64_le(d, b);
    w.write(b, 8);
  }
  // Little-endian host assumed for the bulk payload; static_assert guards it.
  static_assert(std::endian::native == std::endian::little,
                "HTF writer requires a little-endian host");
  switch (t.dtype()) {
    case Dtype::f32:
      w.write(t.f32().data(), t.element_count() * 4);
      break;
    case Dtype::u8:
      w.write(t.u8().data(), t.element_count());
      break;
    case Dtype::u32:
      w.write(t.u32().data(), t.element_count() * 4);
      break;
  }
  w.close();
}

inline Tensor read_tensor(const std::string& path) {
  detail::FileReader r(path);
  char magic[4];
  r.read(magic, 4);
  if (std::memcmp(magic, "HTF1", 4) != 0)
    throw BadMagic(path + ": bad magic at byte offset 0 (expected \"HTF1\")");
  std::uint8_t dtype_code = 0, ndim = 0;
  r.read(&dtype_code, 1);
  if (dtype_code > 2)
    throw UnsupportedDtype(path + ": unsupported dtype code " +
                           std::to_string(int(dtype_code)) +
                           " at byte offset 4");
  r.read(&ndim, 1);
  if (ndim < 1 || ndim > 6)
    throw Error(path + ": ndim " + std::to_string(int(ndim)) +
                " out of range [1,6] at byte offset 5");
  std::uint8_t pad[6];
  r.read(pad, 6);
  std::vector<std::uint64_t> shape(ndim);
  for (auto& d : shape) {
    std::uint8_t b[8];
    r.read(b, 8);
    d = detail::get_u64_le(b);
  }
  Tensor t = Tensor::zeros(static_cast<Dtype>(dtype_code), std::move(shape));
  static_assert(std::endian::native == std::endian::little,
                "HTF reader requires a little-endian host");
  switch (t.dtype()) {
    case Dtype::f32: r.read(t.f32().data(), t.element_count() * 4); break;
    case Dtype::u8: r.read(t.u8().data(), t.element_count()); break;
    case Dtype::u32: r.read(t.u32().data(), t.element_count() * 4); break;
  }
  return t;
}

}  // namespace hartgeom
