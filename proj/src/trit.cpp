// SPDX-License-Identifier: Apache-2.0
#include "ptqtp/trit.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace ptqtp {

namespace {

bool is_trit(Trit t) noexcept { return t >= -1 && t <= 1; }

}  // namespace

TritPlane::TritPlane(std::size_t rows, std::size_t cols)
    : rows_(rows), cols_(cols), values_(rows * cols, 0) {}

TritPlane::TritPlane(std::size_t rows, std::size_t cols, std::vector<Trit> values)
    : rows_(rows), cols_(cols), values_(std::move(values)) {
    if (values_.size() != rows * cols) {
        throw DimensionError("TritPlane: value count does not match shape");
    }
    for (std::size_t i = 0; i < values_.size(); ++i) {
        if (!is_trit(values_[i])) {
            throw ArgumentError("TritPlane: value outside {-1,0,1} at index " + std::to_string(i));
        }
    }
}

GroupLayout::GroupLayout(std::size_t n, std::size_t d, std::size_t group_size)
    : n_(n), d_(d), group_size_(group_size) {
    if (n == 0 || d == 0 || group_size == 0) {
        throw ArgumentError("GroupLayout: n, d and group size must be >= 1");
    }
    groups_per_row_ = (d + group_size - 1) / group_size;
    last_group_len_ = d - (groups_per_row_ - 1) * group_size;
}

void QuantizedLayer::validate() const {
    const std::size_t m = layout.grouped_rows();
    const std::size_t g = layout.group_size();
    if (m == 0) throw DimensionError("QuantizedLayer: empty layout");
    if (plane1.rows() != m || plane1.cols() != g || plane2.rows() != m || plane2.cols() != g) {
        throw DimensionError("QuantizedLayer: plane shape does not match layout");
    }
    if (scale1.values.size() != m || scale2.values.size() != m) {
        throw DimensionError("QuantizedLayer: scale length does not match grouped rows");
    }
    require_finite(scale1.values, "QuantizedLayer scale1");
    require_finite(scale2.values, "QuantizedLayer scale2");
    for (std::size_t r = 0; r < m; ++r) {
        for (std::size_t c = layout.width(r); c < g; ++c) {
            if (plane1(r, c) != 0 || plane2(r, c) != 0) {
                throw CorruptDataError("QuantizedLayer: nonzero trit in padding of grouped row " +
                                       std::to_string(r));
            }
        }
    }
}

std::uint8_t encode_trit(Trit t) {
    switch (t) {
        case 0:
            return 0b00;
        case 1:
            return 0b01;
        case -1:
            return 0b10;
        default:
            throw ArgumentError("encode_trit: value " + std::to_string(int{t}) +
                                " outside {-1,0,1}");
    }
}

Trit decode_trit(std::uint8_t code) {
    switch (code & 0b11) {
        case 0b00:
            return 0;
        case 0b01:
            return 1;
        case 0b10:
            return -1;
        default:
            throw CorruptDataError("decode_trit: reserved code 0b11");
    }
}

std::size_t packed_size(std::size_t trit_count) noexcept { return (trit_count + 3) / 4; }

std::vector<std::uint8_t> pack_trits(std::span<const Trit> trits) {
    std::vector<std::uint8_t> out(packed_size(trits.size()), 0);
    for (std::size_t j = 0; j < trits.size(); ++j) {
        out[j / 4] |= static_cast<std::uint8_t>(encode_trit(trits[j]) << (2 * (j % 4)));
    }
    return out;
}

std::vector<Trit> unpack_trits(std::span<const std::uint8_t> bytes, std::size_t count) {
    if (bytes.size() < packed_size(count)) {
        throw TruncatedDataError("unpack_trits: need " + std::to_string(packed_size(count)) +
                                 " bytes, have " + std::to_string(bytes.size()));
    }
    std::vector<Trit> out(count);
    for (std::size_t j = 0; j < count; ++j) {
        out[j] = decode_trit(static_cast<std::uint8_t>(bytes[j / 4] >> (2 * (j % 4))));
    }
    return out;
}

std::pair<WeightMatrix, GroupLayout> group_reshape(const WeightMatrix& w, std::size_t group_size) {
    GroupLayout layout(w.rows(), w.cols(), group_size);
    WeightMatrix grouped(layout.grouped_rows(), group_size);
    for (std::size_t g = 0; g < layout.grouped_rows(); ++g) {
        const auto src = w.row(layout.source_row(g)).subspan(layout.source_col(g), layout.width(g));
        auto dst = grouped.row(g);
        std::copy(src.begin(), src.end(), dst.begin());
    }
    return {std::move(grouped), layout};
}

WeightMatrix ungroup(const WeightMatrix& grouped, const GroupLayout& layout) {
    if (grouped.rows() != layout.grouped_rows() || grouped.cols() != layout.group_size()) {
        throw DimensionError("ungroup: grouped shape does not match layout");
    }
    WeightMatrix w(layout.n(), layout.d());
    for (std::size_t g = 0; g < layout.grouped_rows(); ++g) {
        const auto src = grouped.row(g).first(layout.width(g));
        auto dst = w.row(layout.source_row(g)).subspan(layout.source_col(g));
        std::copy(src.begin(), src.end(), dst.begin());
    }
    return w;
}

double sparsity(const TritPlane& plane, const GroupLayout& layout) {
    if (plane.rows() != layout.grouped_rows() || plane.cols() != layout.group_size()) {
        throw DimensionError("sparsity: plane shape does not match layout");
    }
    std::size_t zeros = 0;
    std::size_t total = 0;
    for (std::size_t g = 0; g < plane.rows(); ++g) {
        const auto row = plane.row(g).first(layout.width(g));
        for (Trit t : row) zeros += t == 0;
        total += row.size();
    }
    return total == 0 ? 1.0 : static_cast<double>(zeros) / static_cast<double>(total);
}

double sparsity(const TritPlane& plane) {
    const auto v = plane.values();
    if (v.empty()) return 1.0;
    std::size_t zeros = 0;
    for (Trit t : v) zeros += t == 0;
    return static_cast<double>(zeros) / static_cast<double>(v.size());
}

}  // namespace ptqtp
