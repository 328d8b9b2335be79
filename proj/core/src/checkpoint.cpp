#include "binary_io.hpp"
#include "risnet/errors.hpp"
#include "risnet/network.hpp"

namespace risnet {

namespace {

constexpr std::string_view kMagic = "RISP";

RisnetConfig parse_header(io::ByteReader& in) {
  if (in.remaining() < kCheckpointHeaderBytes) {
    throw TruncationError("checkpoint header needs " +
                              std::to_string(kCheckpointHeaderBytes) + " bytes",
                          in.remaining());
  }
  if (in.bytes(4) != kMagic) throw FormatError("bad checkpoint magic", 0);
  if (in.u8() != kCheckpointVersion) {
    throw FormatError("unsupported checkpoint version", 4);
  }
  RisnetConfig cfg;
  const std::uint8_t variant = in.u8();
  if (variant > 1) throw FormatError("unknown RISNet variant", 5);
  cfg.variant = static_cast<Variant>(variant);
  cfg.layers = in.u32();
  cfg.users = in.u32();
  cfg.branch_dim = in.u32();
  try {
    cfg.validate();
  } catch (const ConfigError& e) {
    throw FormatError(std::string("invalid checkpoint header: ") + e.what(), 6);
  }
  return cfg;
}

}  // namespace

std::size_t checkpoint_file_size(const RisnetConfig& cfg) {
  return kCheckpointHeaderBytes + 8 * parameter_count(cfg);
}

void save_params(const RisnetParams& params, const std::filesystem::path& path) {
  const auto layout = parameter_layout(params.config);
  if (layout.size() != params.blocks.size()) {
    throw DimensionError("checkpoint: parameter block count does not match config");
  }
  io::ByteWriter out;
  out.bytes(kMagic);
  out.u8(kCheckpointVersion);
  out.u8(static_cast<std::uint8_t>(params.config.variant));
  out.u32(params.config.layers);
  out.u32(params.config.users);
  out.u32(params.config.branch_dim);
  for (std::size_t i = 0; i < layout.size(); ++i) {
    const RealMat& b = params.blocks[i];
    if (b.rows() != layout[i].rows || b.cols() != layout[i].cols) {
      throw DimensionError("checkpoint: block " + layout[i].name + " is " +
                           shape_string(b.rows(), b.cols()));
    }
    out.real_mat(b);
  }
  io::write_file(path, out.buffer());
}

RisnetParams load_params(const std::filesystem::path& path,
                         const std::optional<RisnetConfig>& expected) {
  io::ByteReader in(io::read_file(path));
  RisnetParams params;
  params.config = parse_header(in);
  if (expected) {
    const RisnetConfig& e = *expected;
    if (e.variant != params.config.variant) {
      throw FormatError(std::string("checkpoint variant is ") +
                            variant_name(params.config.variant) + ", expected " +
                            variant_name(e.variant),
                        5);
    }
    if (e.layers != params.config.layers) {
      throw FormatError("checkpoint layer count mismatch", 6);
    }
    if (e.users != params.config.users) {
      throw FormatError("checkpoint user count mismatch", 10);
    }
    if (e.branch_dim != params.config.branch_dim) {
      throw FormatError("checkpoint branch_dim mismatch", 14);
    }
    params.config.init_seed = e.init_seed;
  }
  const std::size_t expected_size = checkpoint_file_size(params.config);
  if (in.remaining() + kCheckpointHeaderBytes < expected_size) {
    throw TruncationError("checkpoint payload truncated: expected " +
                              std::to_string(expected_size) + " bytes",
                          in.remaining() + kCheckpointHeaderBytes);
  }
  if (in.remaining() + kCheckpointHeaderBytes > expected_size) {
    throw FormatError("trailing bytes after checkpoint payload", expected_size);
  }
  for (const BlockShape& shape : parameter_layout(params.config)) {
    RealMat m(shape.rows, shape.cols);
    in.real_mat(m);
    params.blocks.push_back(std::move(m));
  }
  return params;
}

RisnetConfig read_checkpoint_config(const std::filesystem::path& path) {
  io::ByteReader in(io::read_prefix(path, kCheckpointHeaderBytes));
  return parse_header(in);
}

}  // namespace risnet
