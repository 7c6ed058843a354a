#include "c3r/io.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>

#include "c3r/errors.hpp"

namespace c3r {

void ByteReader::bytes(void* out, size_t n) {
  if (off_ + n > size_) fail("truncated read of " + std::to_string(n) + " bytes");
  std::memcpy(out, data_ + off_, n);
  off_ += n;
}

void ByteReader::expect_magic(const char tag[5]) {
  char got[5] = {0, 0, 0, 0, 0};
  bytes(got, 4);
  if (std::memcmp(got, tag, 4) != 0) {
    off_ -= 4;
    fail(std::string("bad magic, expected '") + tag + "' got '" + got + "'");
  }
}

void ByteReader::fail(const std::string& what) const {
  throw DataError(origin_ + ": " + what + " at byte offset " + std::to_string(off_));
}

std::vector<uint8_t> read_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw DataError("cannot open file: " + path);
  f.seekg(0, std::ios::end);
  std::vector<uint8_t> buf(static_cast<size_t>(f.tellg()));
  f.seekg(0);
  f.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
  if (!f) throw DataError("short read: " + path);
  return buf;
}

void write_file(const std::string& path, const std::vector<uint8_t>& data) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw DataError("cannot open file for writing: " + path);
  f.write(reinterpret_cast<const char*>(data.data()), static_cast<std::streamsize>(data.size()));
  if (!f) throw DataError("short write: " + path);
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw DataError("cannot open file for writing: " + path);
  f << text;
  if (!f) throw DataError("short write: " + path);
}

std::string read_text_file(const std::string& path) {
  auto raw = read_file(path);
  return std::string(raw.begin(), raw.end());
}

void write_pgm(const std::string& path, const std::vector<float>& gray, int h, int w) {
  if (static_cast<int64_t>(gray.size()) != static_cast<int64_t>(h) * w)
    throw ShapeError("write_pgm: buffer size does not match " + std::to_string(h) + "x" + std::to_string(w));
  std::string header = "P5\n" + std::to_string(w) + " " + std::to_string(h) + "\n255\n";
  std::vector<uint8_t> out(header.begin(), header.end());
  out.reserve(out.size() + gray.size());
  for (float v : gray) {
    float c = std::clamp(v, 0.0f, 1.0f);
    out.push_back(static_cast<uint8_t>(std::lround(c * 255.0f)));
  }
  write_file(path, out);
}

std::vector<float> read_pgm(const std::string& path, int* h, int* w) {
  auto raw = read_file(path);
  size_t pos = 0;
  auto token = [&]() -> std::string {
    while (pos < raw.size() && std::isspace(raw[pos])) ++pos;
    if (pos < raw.size() && raw[pos] == '#') {
      while (pos < raw.size() && raw[pos] != '\n') ++pos;
      while (pos < raw.size() && std::isspace(raw[pos])) ++pos;
    }
    size_t start = pos;
    while (pos < raw.size() && !std::isspace(raw[pos])) ++pos;
    return std::string(raw.begin() + start, raw.begin() + pos);
  };
  if (token() != "P5") throw DataError(path + ": not a binary PGM");
  int width = std::stoi(token());
  int height = std::stoi(token());
  int maxval = std::stoi(token());
  if (maxval != 255) throw DataError(path + ": unsupported PGM maxval " + std::to_string(maxval));
  ++pos;  // single whitespace after maxval
  size_t need = static_cast<size_t>(width) * height;
  if (raw.size() - pos < need) throw DataError(path + ": truncated PGM payload");
  std::vector<float> gray(need);
  for (size_t i = 0; i < need; ++i) gray[i] = static_cast<float>(raw[pos + i]) / 255.0f;
  *h = height;
  *w = width;
  return gray;
}

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

}  // namespace c3r
