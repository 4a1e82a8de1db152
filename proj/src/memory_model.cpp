// SPDX-License-Identifier: Apache-2.0
#include "ptqtp/memory_model.hpp"

#include "ptqtp/errors.hpp"

namespace ptqtp {

namespace {

std::uint64_t groups(std::uint64_t d, std::uint64_t k) {
    if (k == 0) throw ArgumentError("group size must be >= 1");
    return (d + k - 1) / k;
}

void require_positive(std::uint64_t n, std::uint64_t d) {
    if (n == 0 || d == 0) throw ArgumentError("matrix extents must be >= 1");
}

void require_salient(std::uint64_t d, std::uint64_t c) {
    if (c > d) throw ArgumentError("salient column count exceeds d");
}

}  // namespace

Bits standard_memory_bits(std::uint64_t n, std::uint64_t d, std::uint64_t k, std::uint64_t bits) {
    require_positive(n, d);
    return n * d * bits + groups(d, k) * n * 16;
}

Bits ptqtp_memory_bits(std::uint64_t n, std::uint64_t d, std::uint64_t k) {
    require_positive(n, d);
    return ptqtp_plane_bits(n, d) + groups(d, k) * 2 * n * 16;
}

Bits ptqtp_plane_bits(std::uint64_t n, std::uint64_t d) {
    require_positive(n, d);
    return 2 * n * d * 2;
}

Bits fp16_memory_bits(std::uint64_t n, std::uint64_t d) {
    require_positive(n, d);
    return 16 * n * d;
}

Bits billm_memory_bits(std::uint64_t n, std::uint64_t d, std::uint64_t k, std::uint64_t c) {
    require_positive(n, d);
    require_salient(d, c);
    const std::uint64_t g = groups(d, k);
    const Bits second_order = 2 * n * c + g * 3 * n * 16;
    const Bits first_order = n * (d - c) + g * 2 * n * 16 * 2;
    return second_order + first_order + n * d + d;
}

Bits arbrc_memory_bits(std::uint64_t n, std::uint64_t d, std::uint64_t k, std::uint64_t c) {
    require_positive(n, d);
    require_salient(d, c);
    const std::uint64_t g = groups(d, k);
    const Bits second_order = 2 * n * c + (g * 2 * n + 2 * c) * 16;
    const Bits first_order = n * (d - c) + (g * n + (d - c)) * 16 * 2;
    return second_order + first_order + n * d + d;
}

Bits arbrc_cgb_memory_bits(std::uint64_t n, std::uint64_t d, std::uint64_t k, std::uint64_t c) {
    require_positive(n, d);
    require_salient(d, c);
    const std::uint64_t g = groups(d, k);
    const Bits second_order = 2 * n * c + (g * 2 * n + 2 * c) * 16 * 2;
    const Bits first_order = n * (d - c) + (g * n + (d - c)) * 16 * 2;
    return second_order + first_order + n * d + d;
}

MemoryMethod parse_memory_method(std::string_view name) {
    if (name == "fp16") return MemoryMethod::Fp16;
    if (name == "ptqtp") return MemoryMethod::Ptqtp;
    if (name == "ptqtp-grouped") return MemoryMethod::PtqtpGrouped;
    throw ArgumentError("unknown memory method '" + std::string(name) +
                        "' (expected fp16, ptqtp or ptqtp-grouped)");
}

std::string_view to_string(MemoryMethod method) {
    switch (method) {
        case MemoryMethod::Fp16:
            return "fp16";
        case MemoryMethod::Ptqtp:
            return "ptqtp";
        case MemoryMethod::PtqtpGrouped:
            return "ptqtp-grouped";
    }
    return "?";
}

MemoryReport model_memory_report(const std::vector<LayerShape>& shapes, MemoryMethod method,
                                 std::uint64_t group_size) {
    MemoryReport report;
    for (const auto& s : shapes) {
        Bits bits = 0;
        if (!s.quantized || method == MemoryMethod::Fp16) {
            bits = fp16_memory_bits(s.n, s.d);
        } else if (method == MemoryMethod::Ptqtp) {
            bits = ptqtp_memory_bits(s.n, s.d, s.d);
        } else {
            bits = ptqtp_memory_bits(s.n, s.d, group_size);
        }
        report.total_bits += bits * s.count;
    }
    return report;
}

std::vector<LayerShape> llama_shapes(std::uint64_t hidden, std::uint64_t intermediate,
                                     std::uint64_t blocks, std::uint64_t vocab) {
    return {
        {"attn.q_proj", hidden, hidden, true, blocks},
        {"attn.k_proj", hidden, hidden, true, blocks},
        {"attn.v_proj", hidden, hidden, true, blocks},
        {"attn.o_proj", hidden, hidden, true, blocks},
        {"mlp.gate_proj", intermediate, hidden, true, blocks},
        {"mlp.up_proj", intermediate, hidden, true, blocks},
        {"mlp.down_proj", hidden, intermediate, true, blocks},
        {"embed_tokens", vocab, hidden, false, 1},
        {"lm_head", vocab, hidden, false, 1},
    };
}

}  // namespace ptqtp
