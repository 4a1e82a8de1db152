// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include "ptqtp/errors.hpp"
#include "ptqtp/memory_model.hpp"

namespace ptqtp {
namespace {

// Expected values below were computed independently of this code.

TEST(MemoryFormulas, Ptqtp) {
    EXPECT_EQ(ptqtp_memory_bits(1024, 4096, 128), 17825792u);
    EXPECT_EQ(ptqtp_memory_bits(1, 128, 128), 544u);
    EXPECT_EQ(ptqtp_memory_bits(5, 300, 128), 6480u);
}

TEST(MemoryFormulas, Billm) {
    EXPECT_EQ(billm_memory_bits(1, 1, 1, 0), 115u);
    EXPECT_EQ(billm_memory_bits(4096, 4096, 128, 410), 49917952u);
    EXPECT_EQ(billm_memory_bits(4, 8, 3, 8), 1448u);
}

TEST(MemoryFormulas, ArbRc) {
    EXPECT_EQ(arbrc_memory_bits(1, 1, 1, 0), 99u);
    EXPECT_EQ(arbrc_memory_bits(4096, 4096, 128, 410), 43757568u);
    EXPECT_EQ(arbrc_memory_bits(4, 8, 3, 8), 1128u);
}

TEST(MemoryFormulas, ArbRcCgb) {
    EXPECT_EQ(arbrc_cgb_memory_bits(1, 1, 1, 0), 131u);
    EXPECT_EQ(arbrc_cgb_memory_bits(4096, 4096, 128, 410), 47964992u);
    EXPECT_EQ(arbrc_cgb_memory_bits(4, 8, 3, 8), 1768u);
}

TEST(MemoryFormulas, AllColumnsSalient) {
    // c = d: the non-salient column terms vanish.
    EXPECT_EQ(billm_memory_bits(1, 1, 1, 1), 116u);
    EXPECT_EQ(arbrc_memory_bits(1, 1, 1, 1), 100u);
    EXPECT_EQ(arbrc_cgb_memory_bits(1, 1, 1, 1), 164u);
}

TEST(MemoryFormulas, InvalidArguments) {
    EXPECT_THROW(billm_memory_bits(4, 8, 3, 9), ArgumentError);
    EXPECT_THROW(arbrc_memory_bits(4, 8, 3, 9), ArgumentError);
    EXPECT_THROW(arbrc_cgb_memory_bits(4, 8, 3, 9), ArgumentError);
    EXPECT_THROW(ptqtp_memory_bits(4, 8, 0), ArgumentError);
    EXPECT_THROW(ptqtp_memory_bits(0, 8, 4), ArgumentError);
}

TEST(MemoryFormulas, StandardAndFp16) {
    EXPECT_EQ(standard_memory_bits(2, 10, 4, 3), 2u * 10 * 3 + 3u * 2 * 16);
    EXPECT_EQ(fp16_memory_bits(3, 7), 336u);
}

TEST(MemoryFormulas, PlanesAreAQuarterOfFp16) {
    for (std::uint64_t n : {1u, 7u, 4096u}) {
        for (std::uint64_t d : {1u, 300u, 11008u}) {
            EXPECT_EQ(fp16_memory_bits(n, d), 4 * ptqtp_plane_bits(n, d));
        }
    }
    EXPECT_LT(ptqtp_memory_bits(4096, 4096, 128), fp16_memory_bits(4096, 4096));
}

TEST(ModelMemory, LlamaSevenB) {
    const auto shapes = llama_shapes(4096, 11008, 32, 32000);
    EXPECT_EQ(model_memory_report(shapes, MemoryMethod::Fp16).total_bits, 107810390016u);
    EXPECT_EQ(model_memory_report(shapes, MemoryMethod::Ptqtp).total_bits, 30141841408u);
    EXPECT_EQ(model_memory_report(shapes, MemoryMethod::PtqtpGrouped, 128).total_bits,
              31717326848u);
    EXPECT_NEAR(model_memory_report(shapes, MemoryMethod::Fp16).gigabytes(), 13.476, 1e-3);
    EXPECT_NEAR(model_memory_report(shapes, MemoryMethod::PtqtpGrouped).gibibytes(), 3.692, 1e-3);
}

TEST(ModelMemory, LlamaThirteenB) {
    const auto shapes = llama_shapes(5120, 13824, 40, 32000);
    EXPECT_EQ(model_memory_report(shapes, MemoryMethod::Fp16).total_bits, 208247193600u);
    EXPECT_EQ(model_memory_report(shapes, MemoryMethod::Ptqtp).total_bits, 56062115840u);
    EXPECT_EQ(model_memory_report(shapes, MemoryMethod::PtqtpGrouped, 128).total_bits,
              59165900800u);
}

TEST(ModelMemory, UnquantizedLayersCountAtSixteenBits) {
    const std::vector<LayerShape> shapes{{"a", 2, 8, false, 3}};
    EXPECT_EQ(model_memory_report(shapes, MemoryMethod::PtqtpGrouped).total_bits, 3u * 16 * 2 * 8);
}

TEST(ModelMemory, MethodNames) {
    EXPECT_EQ(parse_memory_method("ptqtp-grouped"), MemoryMethod::PtqtpGrouped);
    EXPECT_EQ(to_string(MemoryMethod::Fp16), "fp16");
    EXPECT_THROW(parse_memory_method("int4"), ArgumentError);
}

}  // namespace
}  // namespace ptqtp
