#include "binary_io.hpp"

#include <fstream>
#include <iterator>

#include "risnet/errors.hpp"

namespace risnet::io {

void ByteWriter::bytes(std::string_view s) { buf_.append(s); }

void ByteWriter::u32(std::uint32_t v) {
  for (int i = 0; i < 4; ++i) u8(static_cast<std::uint8_t>(v >> (8 * i)));
}

void ByteWriter::u64(std::uint64_t v) {
  for (int i = 0; i < 8; ++i) u8(static_cast<std::uint8_t>(v >> (8 * i)));
}

void ByteWriter::real_mat(const RealMat& m) {
  for (Eigen::Index i = 0; i < m.size(); ++i) f64(m.data()[i]);
}

void ByteWriter::complex_mat(const ComplexMat& m) {
  for (Eigen::Index i = 0; i < m.size(); ++i) {
    f64(m.data()[i].real());
    f64(m.data()[i].imag());
  }
}

void ByteReader::need(std::size_t n) const {
  if (remaining() < n) {
    throw TruncationError("unexpected end of file: need " + std::to_string(n) +
                              " bytes, " + std::to_string(remaining()) + " left",
                          pos_);
  }
}

std::string ByteReader::bytes(std::size_t n) {
  need(n);
  std::string out = data_.substr(pos_, n);
  pos_ += n;
  return out;
}

std::uint8_t ByteReader::u8() {
  need(1);
  return static_cast<std::uint8_t>(data_[pos_++]);
}

std::uint32_t ByteReader::u32() {
  need(4);
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) {
    v |= static_cast<std::uint32_t>(static_cast<unsigned char>(data_[pos_++]))
         << (8 * i);
  }
  return v;
}

std::uint64_t ByteReader::u64() {
  need(8);
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) {
    v |= static_cast<std::uint64_t>(static_cast<unsigned char>(data_[pos_++]))
         << (8 * i);
  }
  return v;
}

void ByteReader::real_mat(RealMat& m) {
  need(static_cast<std::size_t>(m.size()) * 8);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = f64();
}

void ByteReader::complex_mat(ComplexMat& m) {
  need(static_cast<std::size_t>(m.size()) * 16);
  for (Eigen::Index i = 0; i < m.size(); ++i) {
    const double re = f64();
    const double im = f64();
    m.data()[i] = Complex(re, im);
  }
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string() + " for reading");
  std::string data((std::istreambuf_iterator<char>(in)),
                   std::istreambuf_iterator<char>());
  if (in.bad()) throw IoError("read failed: " + path.string());
  return data;
}

std::string read_prefix(const std::filesystem::path& path, std::size_t n) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string() + " for reading");
  std::string data(n, '\0');
  in.read(data.data(), static_cast<std::streamsize>(n));
  data.resize(static_cast<std::size_t>(in.gcount()));
  return data;
}

void write_file(const std::filesystem::path& path, const std::string& data) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out.write(data.data(), static_cast<std::streamsize>(data.size()));
  out.flush();
  if (!out) throw IoError("write failed: " + path.string());
}

}  // namespace risnet::io
