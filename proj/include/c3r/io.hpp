#pragma once

#include <cstdint>
#include <cstdio>
#include <string>
#include <vector>

namespace c3r {

// Little-endian binary writer over an in-memory buffer. All project file
// formats are written through this so layouts are platform independent.
class ByteWriter {
 public:
  void u8(uint8_t v) { buf_.push_back(v); }
  void i8(int8_t v) { buf_.push_back(static_cast<uint8_t>(v)); }
  void u16(uint16_t v) { put(&v, 2); }
  void u32(uint32_t v) { put(&v, 4); }
  void u64(uint64_t v) { put(&v, 8); }
  void f32(float v) { put(&v, 4); }
  void f64(double v) { put(&v, 8); }
  void bytes(const void* p, size_t n) { put(p, n); }
  void magic(const char tag[5]) { put(tag, 4); }

  const std::vector<uint8_t>& data() const { return buf_; }

 private:
  void put(const void* p, size_t n) {
    const auto* b = static_cast<const uint8_t*>(p);
    buf_.insert(buf_.end(), b, b + n);
  }
  std::vector<uint8_t> buf_;
};

// Little-endian binary reader; read errors carry the byte offset.
class ByteReader {
 public:
  ByteReader(const uint8_t* data, size_t size, std::string origin)
      : data_(data), size_(size), origin_(std::move(origin)) {}

  uint8_t u8() { return take<uint8_t>(); }
  int8_t i8() { return static_cast<int8_t>(take<uint8_t>()); }
  uint16_t u16() { return take<uint16_t>(); }
  uint32_t u32() { return take<uint32_t>(); }
  uint64_t u64() { return take<uint64_t>(); }
  float f32() { return take<float>(); }
  double f64() { return take<double>(); }
  void bytes(void* out, size_t n);
  void expect_magic(const char tag[5]);

  size_t offset() const { return off_; }
  size_t remaining() const { return size_ - off_; }
  const std::string& origin() const { return origin_; }

  [[noreturn]] void fail(const std::string& what) const;

 private:
  template <typename T>
  T take() {
    T v{};
    bytes(&v, sizeof(T));
    return v;
  }
  const uint8_t* data_;
  size_t size_;
  size_t off_ = 0;
  std::string origin_;
};

std::vector<uint8_t> read_file(const std::string& path);
void write_file(const std::string& path, const std::vector<uint8_t>& data);
void write_text_file(const std::string& path, const std::string& text);
std::string read_text_file(const std::string& path);

// 8-bit binary PGM (P5). Values are clamped to [0,1] and quantized.
void write_pgm(const std::string& path, const std::vector<float>& gray, int h, int w);
std::vector<float> read_pgm(const std::string& path, int* h, int* w);

// Deterministic float formatting for text reports.
std::string format_double(double v);

}  // namespace c3r
