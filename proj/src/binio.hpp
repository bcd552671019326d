#pragma once

// Internal little-endian binary file helpers shared by the VCK1 checkpoint
// and VBF1 dataset codecs. Read errors carry the byte offset of the problem.

#include <bit>
#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include "vibcnn/errors.hpp"

namespace vibcnn::binio {

class Writer {
 public:
  explicit Writer(const std::string& path) : path_(path), out_(path, std::ios::binary) {
    if (!out_) throw IoError("cannot open '" + path + "' for writing");
  }
  void u8(std::uint8_t v) { out_.put(static_cast<char>(v)); }
  void u16(std::uint16_t v) {
    u8(static_cast<std::uint8_t>(v & 0xff));
    u8(static_cast<std::uint8_t>(v >> 8));
  }
  void u32(std::uint32_t v) {
    u16(static_cast<std::uint16_t>(v & 0xffff));
    u16(static_cast<std::uint16_t>(v >> 16));
  }
  void f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }
  void bytes(const char* p, std::size_t n) {
    out_.write(p, static_cast<std::streamsize>(n));
  }
  void close() {
    out_.flush();
    if (!out_) throw IoError("write to '" + path_ + "' failed");
  }

 private:
  std::string path_;
  std::ofstream out_;
};

class Reader {
 public:
  explicit Reader(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path + "' for reading");
    buf_.assign(std::istreambuf_iterator<char>(in),
                std::istreambuf_iterator<char>());
  }
  std::uint64_t offset() const { return pos_; }
  std::uint64_t remaining() const { return buf_.size() - pos_; }
  bool at_end() const { return pos_ == buf_.size(); }
  std::uint8_t u8() {
    need(1, "value");
    return static_cast<std::uint8_t>(buf_[pos_++]);
  }
  std::uint16_t u16() {
    need(2, "value");
    const std::uint16_t v =
        static_cast<std::uint8_t>(buf_[pos_]) |
        (static_cast<std::uint16_t>(static_cast<std::uint8_t>(buf_[pos_ + 1]))
         << 8);
    pos_ += 2;
    return v;
  }
  std::uint32_t u32() {
    const std::uint32_t lo = u16();
    return lo | (static_cast<std::uint32_t>(u16()) << 16);
  }
  float f32() { return std::bit_cast<float>(u32()); }
  std::string str(std::size_t n) {
    need(n, "name");
    std::string s(buf_.data() + pos_, n);
    pos_ += n;
    return s;
  }
  void need(std::size_t n, const char* what) const {
    if (pos_ + n > buf_.size())
      throw FormatError(std::string("truncated file while reading ") + what, pos_);
  }

 private:
  std::vector<char> buf_;
  std::uint64_t pos_ = 0;
};

}  // namespace vibcnn::binio
