// SPDX-License-Identifier: Apache-2.0
//
// Binary containers. All multi-byte fields are little-endian.
//
// FPT1 dense tensor (26-byte header):
//   0  char[4]  "FPT1"
//   4  u32      version = 1
//   8  u8       dtype: 0 = float32, 1 = float16
//   9  u8       rank = 2
//  10  u64      n
//  18  u64      d
//  26  payload  n*d elements, row-major
//
// PTQ1 quantized layer (44-byte header), m = n * ceil(d/G):
//   0  char[4]  "PTQ1"
//   4  u32      version = 1
//   8  u8       scale dtype: 1 = float16 (other codes reserved)
//   9  u8[3]    reserved, zero
//  12  u64      n
//  20  u64      d
//  28  u32      G
//  32  u32      iterations used
//  36  f64      final Frobenius error
//  44  plane1   ceil(m*G/4) bytes, 2-bit trit packing
//      plane2   ceil(m*G/4) bytes
//      scale1   m float16
//      scale2   m float16
#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "ptqtp/linalg.hpp"
#include "ptqtp/trit.hpp"

namespace ptqtp {

/// IEEE binary16 from double, round-to-nearest-even; overflow goes to inf.
std::uint16_t half_from_double(double v) noexcept;
double half_to_double(std::uint16_t h) noexcept;
/// v rounded through binary16.
double round_to_half(double v) noexcept;

enum class TensorDType : std::uint8_t { Float32 = 0, Float16 = 1 };

inline constexpr std::size_t kFptHeaderSize = 26;
inline constexpr std::size_t kPtqHeaderSize = 44;

std::vector<std::uint8_t> write_tensor(const WeightMatrix& w,
                                       TensorDType dtype = TensorDType::Float32);
/// Throws CorruptDataError (bad magic, version, dtype, rank, non-finite
/// value, trailing bytes) or TruncatedDataError.
WeightMatrix read_tensor(std::span<const std::uint8_t> bytes);

std::vector<std::uint8_t> write_quantized(const QuantizedLayer& q);
/// Scales come back rounded through float16. Only iterations and final_error
/// of the metadata are restored.
QuantizedLayer read_quantized(std::span<const std::uint8_t> bytes);

/// Copy of q with both scale vectors rounded through float16, i.e. the layer
/// exactly as read_quantized(write_quantized(q)) returns it.
QuantizedLayer with_half_scales(QuantizedLayer q);

std::vector<std::uint8_t> read_file(const std::filesystem::path& path);
/// Writes to a temporary sibling and renames it over `path`.
void write_file_atomic(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);

}  // namespace ptqtp
