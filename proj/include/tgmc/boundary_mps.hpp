#pragma once

#include <cmath>
#include <optional>
#include <vector>

#include "tgmc/error.hpp"
#include "tgmc/mps.hpp"
#include "tgmc/tensor.hpp"

namespace tgmc {

/// A 2D network stored bottom row first. Each tensor carries a subset of the axes
/// left/right/down/up plus at most one `sampling` axis in the whole grid.
using TensorGrid = std::vector<std::vector<DenseTensor>>;

struct ContractionResult {
    DenseTensor value;               // scalar, or length-2 vector over the sampling index
    double truncation_error = 0.0;   // summed in quadrature over all row absorptions
    std::size_t max_bond = 1;
};

namespace detail {

/// Brings a grid tensor to (left, right, down, up), inserting extent-1 legs.
inline DenseTensor as_mpo_site(const DenseTensor& t) {
    static const Axis order[4] = {Axis::left, Axis::right, Axis::down, Axis::up};
    std::vector<std::size_t> present, shape;
    for (Axis a : order) {
        if (t.has(a)) {
            present.push_back(t.axis(a));
            shape.push_back(t.extent(t.axis(a)));
        } else {
            shape.push_back(1);
        }
    }
    if (present.size() != t.rank()) throw InvalidArgument("grid tensor has unexpected axes");
    DenseTensor p = t.permuted(present);
    return p.reshaped(shape, {Axis::left, Axis::right, Axis::down, Axis::up});
}

/// Absorbs one row (as an MPO) into the boundary MPS coming from below.
inline void absorb_row(Mps& mps, const std::vector<DenseTensor>& row) {
    for (std::size_t c = 0; c < row.size(); ++c) {
        const DenseTensor& w = row[c];
        DenseTensor& a = mps.sites[c];
        const std::size_t al = a.extent(0), ad = a.extent(1), ar = a.extent(2);
        const std::size_t wl = w.extent(0), wr = w.extent(1), wd = w.extent(2), wu = w.extent(3);
        if (ad != wd) throw InvalidArgument("vertical bond extents do not match");
        DenseTensor n({al * wl, wu, ar * wr}, {Axis::left, Axis::physical, Axis::right});
        for (std::size_t l = 0; l < al; ++l)
            for (std::size_t x = 0; x < wl; ++x)
                for (std::size_t u = 0; u < wu; ++u)
                    for (std::size_t r = 0; r < ar; ++r)
                        for (std::size_t y = 0; y < wr; ++y) {
                            double s = 0.0;
                            for (std::size_t d = 0; d < ad; ++d)
                                s += a[(l * ad + d) * ar + r] * w[((x * wr + y) * wd + d) * wu + u];
                            n[((l * wl + x) * wu + u) * (ar * wr) + r * wr + y] = s;
                        }
        n.set_log_scale(0.0);
        a = std::move(n);
    }
}

inline ContractionResult contract_grid(const std::vector<std::vector<DenseTensor>>& rows, std::size_t chi) {
    ContractionResult res;
    const std::size_t width = rows.front().size();
    Mps mps = Mps::ones(width, 1);
    double discarded2 = 0.0;
    for (const auto& row : rows) {
        absorb_row(mps, row);
        auto st = compress(mps, chi);
        discarded2 += st.truncation_error * st.truncation_error;
        res.max_bond = std::max(res.max_bond, st.max_bond);
    }
    RowMatrix acc = RowMatrix::Ones(1, 1);
    for (auto& a : mps.sites) {
        if (a.extent(1) != 1) throw InvalidArgument("top row has dangling up legs");
        acc = acc * detail::as_matrix(a, a.extent(0));
    }
    double log_scale = mps.log_scale;
    for (const auto& row : rows)
        for (const auto& t : row) log_scale += t.log_scale();
    res.value = DenseTensor::scalar(acc(0, 0));
    res.value.set_log_scale(log_scale);
    res.truncation_error = std::sqrt(discarded2);
    return res;
}

}  // namespace detail

/// Contracts a 2D grid bottom-to-top with a boundary MPS compressed to bond dimension
/// `chi` after each row (chi == 0 keeps every non-negligible singular value).
inline ContractionResult boundary_mps_contract(const TensorGrid& grid, std::size_t chi) {
    if (grid.empty() || grid.front().empty()) throw InvalidArgument("empty tensor grid");
    const std::size_t width = grid.front().size();
    std::optional<std::pair<std::size_t, std::size_t>> sampling;
    std::vector<std::vector<DenseTensor>> rows(grid.size());
    for (std::size_t r = 0; r < grid.size(); ++r) {
        if (grid[r].size() != width) throw InvalidArgument("ragged tensor grid");
        for (std::size_t c = 0; c < width; ++c) {
            const DenseTensor& t = grid[r][c];
            if (t.has(Axis::sampling)) {
                if (sampling) throw InvalidArgument("more than one sampling index in grid");
                sampling = {r, c};
            }
        }
    }
    auto to_rows = [&](std::optional<std::size_t> u) {
        for (std::size_t r = 0; r < grid.size(); ++r) {
            rows[r].clear();
            for (std::size_t c = 0; c < width; ++c) {
                const DenseTensor& t = grid[r][c];
                if (t.has(Axis::sampling)) {
                    rows[r].push_back(detail::as_mpo_site(t.slice(t.axis(Axis::sampling), *u)));
                } else {
                    rows[r].push_back(detail::as_mpo_site(t));
                }
            }
        }
        for (std::size_t r = 0; r < rows.size(); ++r)
            for (std::size_t c = 0; c < width; ++c) {
                const auto& t = rows[r][c];
                if (c == 0 && t.extent(0) != 1) throw InvalidArgument("leftmost tensor has a left leg");
                if (c + 1 == width && t.extent(1) != 1) throw InvalidArgument("rightmost tensor has a right leg");
                if (c + 1 < width && t.extent(1) != rows[r][c + 1].extent(0))
                    throw InvalidArgument("horizontal bond extents do not match");
                if (r + 1 < rows.size() && t.extent(3) != rows[r + 1][c].extent(2))
                    throw InvalidArgument("vertical bond extents do not match");
                if (r == 0 && t.extent(2) != 1) throw InvalidArgument("bottom row has dangling down legs");
            }
        return detail::contract_grid(rows, chi);
    };
    if (!sampling) return to_rows(std::nullopt);

    const auto& st = grid[sampling->first][sampling->second];
    const std::size_t du = st.extent(st.axis(Axis::sampling));
    std::vector<ContractionResult> parts;
    for (std::size_t u = 0; u < du; ++u) parts.push_back(to_rows(u));
    double common = -std::numeric_limits<double>::infinity();
    for (const auto& p : parts)
        if (p.value[0] != 0.0) common = std::max(common, p.value.log_scale());
    if (!std::isfinite(common)) common = 0.0;
    ContractionResult res;
    res.value = DenseTensor({du}, {Axis::sampling});
    double discarded2 = 0.0;
    for (std::size_t u = 0; u < du; ++u) {
        res.value[u] = parts[u].value[0] * std::exp(parts[u].value.log_scale() - common);
        discarded2 += parts[u].truncation_error * parts[u].truncation_error;
        res.max_bond = std::max(res.max_bond, parts[u].max_bond);
    }
    res.value.set_log_scale(common);
    res.truncation_error = std::sqrt(discarded2);
    return res;
}

}  // namespace tgmc
