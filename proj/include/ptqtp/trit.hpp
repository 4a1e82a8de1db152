// SPDX-License-Identifier: Apache-2.0
//
// Quantized data model: trit-planes, per-group scales, the group layout that
// maps an n x d matrix onto m = n * ceil(d / G) grouped rows of width G, and
// the 2-bit packing used on disk.
//
// Packing: 4 trits per byte, trit j in bits [2*(j%4), 2*(j%4)+1] of byte j/4.
// Codes: 0 -> 00, +1 -> 01, -1 -> 10. Code 11 is reserved and rejected.
#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "ptqtp/config.hpp"
#include "ptqtp/linalg.hpp"

namespace ptqtp {

/// Row-major matrix of trits.
class TritPlane {
public:
    TritPlane() = default;
    TritPlane(std::size_t rows, std::size_t cols);
    /// Throws ArgumentError if a value is outside {-1,0,1}, DimensionError on a
    /// size mismatch.
    TritPlane(std::size_t rows, std::size_t cols, std::vector<Trit> values);

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    Trit operator()(std::size_t r, std::size_t c) const { return values_[r * cols_ + c]; }
    Trit& operator()(std::size_t r, std::size_t c) { return values_[r * cols_ + c]; }
    std::span<const Trit> row(std::size_t r) const { return {values_.data() + r * cols_, cols_}; }
    std::span<Trit> row(std::size_t r) { return {values_.data() + r * cols_, cols_}; }
    std::span<const Trit> values() const noexcept { return values_; }

    bool operator==(const TritPlane&) const = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<Trit> values_;
};

/// One scale per grouped row, paired with plane 1 or plane 2.
struct ScaleVector {
    std::vector<double> values;
    int plane_index = 1;

    bool operator==(const ScaleVector&) const = default;
};

class GroupLayout {
public:
    GroupLayout() = default;
    /// Throws ArgumentError when any extent is zero.
    GroupLayout(std::size_t n, std::size_t d, std::size_t group_size);

    std::size_t n() const noexcept { return n_; }
    std::size_t d() const noexcept { return d_; }
    std::size_t group_size() const noexcept { return group_size_; }
    std::size_t groups_per_row() const noexcept { return groups_per_row_; }
    std::size_t grouped_rows() const noexcept { return n_ * groups_per_row_; }
    std::size_t last_group_len() const noexcept { return last_group_len_; }

    /// Original row owning grouped row g.
    std::size_t source_row(std::size_t g) const noexcept { return g / groups_per_row_; }
    /// First original column covered by grouped row g.
    std::size_t source_col(std::size_t g) const noexcept {
        return (g % groups_per_row_) * group_size_;
    }
    /// Number of non-padding positions in grouped row g.
    std::size_t width(std::size_t g) const noexcept {
        return (g % groups_per_row_) + 1 == groups_per_row_ ? last_group_len_ : group_size_;
    }
    bool is_padding(std::size_t g, std::size_t c) const noexcept { return c >= width(g); }

    bool operator==(const GroupLayout&) const = default;

private:
    std::size_t n_ = 0;
    std::size_t d_ = 0;
    std::size_t group_size_ = 0;
    std::size_t groups_per_row_ = 0;
    std::size_t last_group_len_ = 0;
};

struct LayerMeta {
    std::size_t iterations = 0;
    bool converged = false;
    double final_delta_alpha = 0.0;
    double final_error = 0.0;  // ||W - W_hat||_F
    DecomposeConfig config;
    // Regularization strength each grouped row ended with.
    std::vector<double> lambdas;
};

/// W ~= diag(scale1) plane1 + diag(scale2) plane2 over the grouped shape.
struct QuantizedLayer {
    GroupLayout layout;
    TritPlane plane1;
    TritPlane plane2;
    ScaleVector scale1;
    ScaleVector scale2;
    LayerMeta meta;

    /// Throws DimensionError / CorruptDataError when shapes disagree with the
    /// layout, scales are non-finite, or a padding position holds a nonzero trit.
    void validate() const;
};

std::uint8_t encode_trit(Trit t);
/// Throws CorruptDataError on the reserved code 0b11.
Trit decode_trit(std::uint8_t code);

std::vector<std::uint8_t> pack_trits(std::span<const Trit> trits);
/// Throws TruncatedDataError if `bytes` is shorter than ceil(count/4),
/// CorruptDataError on code 11.
std::vector<Trit> unpack_trits(std::span<const std::uint8_t> bytes, std::size_t count);

std::size_t packed_size(std::size_t trit_count) noexcept;

/// Chops each row into ceil(d/G) segments of width G, zero-padding the last.
std::pair<WeightMatrix, GroupLayout> group_reshape(const WeightMatrix& w, std::size_t group_size);
/// Inverse of group_reshape; padding columns are dropped.
WeightMatrix ungroup(const WeightMatrix& grouped, const GroupLayout& layout);

/// Fraction of zero trits over non-padding positions.
double sparsity(const TritPlane& plane, const GroupLayout& layout);
/// Fraction of zero trits over all positions.
double sparsity(const TritPlane& plane);

}  // namespace ptqtp
