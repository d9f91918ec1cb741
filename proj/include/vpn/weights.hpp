#pragma once

// Dense f32 weight matrices ("VPNW"): magic, u32 version, u32 rows,
// u32 cols, rows*cols f32 row-major.

#include <filesystem>
#include <vector>

#include "vpn/detail/binary_io.hpp"
#include "vpn/linalg.hpp"

namespace vpn {

inline constexpr std::uint32_t kWeightsVersion = 1;

inline void write_weights(const RowMatrixF& m, const std::filesystem::path& path) {
  detail::ByteWriter w;
  w.put_bytes("VPNW");
  w.put(kWeightsVersion);
  w.put(static_cast<std::uint32_t>(m.rows()));
  w.put(static_cast<std::uint32_t>(m.cols()));
  w.put_span<float>(std::span<const float>(m.data(), static_cast<std::size_t>(m.size())));
  w.write_file(path);
}

inline RowMatrixF read_weights(const std::filesystem::path& path) {
  auto r = detail::ByteReader::from_file(path);
  r.expect_magic("VPNW", kWeightsVersion);
  const auto rows = r.get<std::uint32_t>();
  const auto cols = r.get<std::uint32_t>();
  if (std::uint64_t{rows} * cols * sizeof(float) != r.remaining())
    fail(ErrorCode::corruption, "weight payload does not match rows x cols: " + path.string());
  RowMatrixF m(rows, cols);
  r.get_into<float>(std::span<float>(m.data(), static_cast<std::size_t>(m.size())));
  return m;
}

}  // namespace vpn
