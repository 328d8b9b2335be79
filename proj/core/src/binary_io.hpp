#pragma once

#include <bit>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "risnet/tensor.hpp"

namespace risnet::io {

// Little-endian encoder into an in-memory buffer.
class ByteWriter {
 public:
  void bytes(std::string_view s);
  void u8(std::uint8_t v) { buf_.push_back(static_cast<char>(v)); }
  void u32(std::uint32_t v);
  void u64(std::uint64_t v);
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  void real_mat(const RealMat& m);
  void complex_mat(const ComplexMat& m);

  const std::string& buffer() const { return buf_; }

 private:
  std::string buf_;
};

// Little-endian decoder that reports byte offsets on failure.
class ByteReader {
 public:
  explicit ByteReader(std::string data) : data_(std::move(data)) {}

  std::size_t offset() const { return pos_; }
  std::size_t remaining() const { return data_.size() - pos_; }

  std::string bytes(std::size_t n);
  std::uint8_t u8();
  std::uint32_t u32();
  std::uint64_t u64();
  double f64() { return std::bit_cast<double>(u64()); }
  void real_mat(RealMat& m);
  void complex_mat(ComplexMat& m);

 private:
  void need(std::size_t n) const;

  std::string data_;
  std::size_t pos_ = 0;
};

std::string read_file(const std::filesystem::path& path);
std::string read_prefix(const std::filesystem::path& path, std::size_t n);
void write_file(const std::filesystem::path& path, const std::string& data);

}  // namespace risnet::io
