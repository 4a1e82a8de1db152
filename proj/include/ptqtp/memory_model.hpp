// SPDX-License-Identifier: Apache-2.0
//
// Bit-exact storage accounting for an n x d weight matrix with group size k.
// [d/k] in the formulas is taken as ceil(d/k). c is the salient-column count
// used by the binarization baselines.
#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace ptqtp {

using Bits = std::uint64_t;

/// n*d*bits + ceil(d/k) * n * 16: uniform quantization with FP16 row scales.
Bits standard_memory_bits(std::uint64_t n, std::uint64_t d, std::uint64_t k, std::uint64_t bits);

/// 2 planes at 2 bits per trit plus two FP16 scales per group.
Bits ptqtp_memory_bits(std::uint64_t n, std::uint64_t d, std::uint64_t k);

/// Two trit-planes only, no scales.
Bits ptqtp_plane_bits(std::uint64_t n, std::uint64_t d);

Bits fp16_memory_bits(std::uint64_t n, std::uint64_t d);

Bits billm_memory_bits(std::uint64_t n, std::uint64_t d, std::uint64_t k, std::uint64_t c);
Bits arbrc_memory_bits(std::uint64_t n, std::uint64_t d, std::uint64_t k, std::uint64_t c);
Bits arbrc_cgb_memory_bits(std::uint64_t n, std::uint64_t d, std::uint64_t k, std::uint64_t c);

/// One matrix of a model. Unquantized entries (embeddings, heads kept in
/// half precision) are always counted at 16 bits per element.
struct LayerShape {
    std::string name;
    std::uint64_t n = 0;
    std::uint64_t d = 0;
    bool quantized = true;
    std::uint64_t count = 1;  // identical copies, e.g. per transformer block
};

enum class MemoryMethod { Fp16, Ptqtp, PtqtpGrouped };

/// "fp16", "ptqtp", "ptqtp-grouped"; throws ArgumentError otherwise.
MemoryMethod parse_memory_method(std::string_view name);
std::string_view to_string(MemoryMethod method);

struct MemoryReport {
    Bits total_bits = 0;

    double bytes() const noexcept { return static_cast<double>(total_bits) / 8.0; }
    /// 10^9 bytes.
    double gigabytes() const noexcept { return bytes() / 1e9; }
    /// 2^30 bytes.
    double gibibytes() const noexcept { return bytes() / 1073741824.0; }
};

/// Sums per-layer formulas. "ptqtp" keeps one scale pair per row (k = d),
/// "ptqtp-grouped" uses `group_size`.
MemoryReport model_memory_report(const std::vector<LayerShape>& shapes, MemoryMethod method,
                                 std::uint64_t group_size = 128);

/// Linear layers of a LLaMA-style decoder (q,k,v,o + gate,up,down per block)
/// plus input embedding and output head kept in FP16.
std::vector<LayerShape> llama_shapes(std::uint64_t hidden, std::uint64_t intermediate,
                                     std::uint64_t blocks, std::uint64_t vocab);

}  // namespace ptqtp
