#include <limits>

#include "binary_io.hpp"
#include "risnet/channel.hpp"
#include "risnet/errors.hpp"

namespace risnet {

namespace {

constexpr std::string_view kMagic = "RISD";

struct Header {
  Dimensions dims;
  std::uint32_t samples = 0;
};

Header parse_header(io::ByteReader& in) {
  if (in.remaining() < kDatasetHeaderBytes) {
    throw TruncationError("dataset header needs " +
                              std::to_string(kDatasetHeaderBytes) + " bytes",
                          in.remaining());
  }
  if (in.bytes(4) != kMagic) throw FormatError("bad dataset magic", 0);
  const std::size_t version_at = in.offset();
  if (in.u8() != kDatasetVersion) {
    throw FormatError("unsupported dataset version", version_at);
  }
  Header h;
  const std::size_t m_at = in.offset();
  h.dims.bs_antennas = in.u32();
  h.dims.ris_antennas = in.u32();
  h.dims.users = in.u32();
  h.samples = in.u32();
  if (h.dims.bs_antennas == 0) throw FormatError("M is zero", m_at);
  if (h.dims.ris_antennas == 0) throw FormatError("N is zero", m_at + 4);
  if (h.dims.users == 0) throw FormatError("U is zero", m_at + 8);
  return h;
}

}  // namespace

std::size_t dataset_file_size(const Dimensions& dims, std::size_t samples) {
  const std::size_t m = dims.bs_antennas;
  const std::size_t n = dims.ris_antennas;
  const std::size_t u = dims.users;
  return kDatasetHeaderBytes + 16 * (n * m + samples * (u * n + u * m));
}

void write_dataset(const Dataset& ds, const std::filesystem::path& path) {
  if (ds.size() > std::numeric_limits<std::uint32_t>::max()) {
    throw ContractError("dataset: too many samples for the file format");
  }
  io::ByteWriter out;
  out.bytes(kMagic);
  out.u8(kDatasetVersion);
  out.u32(ds.dims().bs_antennas);
  out.u32(ds.dims().ris_antennas);
  out.u32(ds.dims().users);
  out.u32(static_cast<std::uint32_t>(ds.size()));
  out.complex_mat(ds.h());
  for (std::size_t i = 0; i < ds.size(); ++i) {
    out.complex_mat(ds.g(i));
    out.complex_mat(ds.d(i));
  }
  io::write_file(path, out.buffer());
}

Dataset read_dataset(const std::filesystem::path& path) {
  io::ByteReader in(io::read_file(path));
  const Header header = parse_header(in);
  const Dimensions dims = header.dims;
  const std::size_t expected = dataset_file_size(dims, header.samples);
  if (in.remaining() + kDatasetHeaderBytes < expected) {
    throw TruncationError("dataset payload truncated: expected " +
                              std::to_string(expected) + " bytes",
                          in.remaining() + kDatasetHeaderBytes);
  }
  if (in.remaining() + kDatasetHeaderBytes > expected) {
    throw FormatError("trailing bytes after dataset payload", expected);
  }
  ComplexMat h(dims.ris_antennas, dims.bs_antennas);
  in.complex_mat(h);
  std::vector<ComplexMat> g(header.samples);
  std::vector<ComplexMat> d(header.samples);
  for (std::size_t i = 0; i < header.samples; ++i) {
    g[i].resize(dims.users, dims.ris_antennas);
    d[i].resize(dims.users, dims.bs_antennas);
    in.complex_mat(g[i]);
    in.complex_mat(d[i]);
  }
  return Dataset(dims, std::move(h), std::move(g), std::move(d));
}

Dimensions read_dataset_dims(const std::filesystem::path& path,
                             std::size_t* samples) {
  io::ByteReader in(io::read_prefix(path, kDatasetHeaderBytes));
  const Header header = parse_header(in);
  if (samples != nullptr) *samples = header.samples;
  return header.dims;
}

}  // namespace risnet
