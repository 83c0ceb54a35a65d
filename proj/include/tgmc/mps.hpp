#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "tgmc/error.hpp"
#include "tgmc/tensor.hpp"

namespace tgmc {

struct SvdTruncation {
    RowMatrix U;
    Eigen::VectorXd S;
    RowMatrix V;  // columns are right singular vectors
    double truncation_error = 0.0;
};

/// Keeps the `chi` largest singular values (chi == 0: no cap). Singular values at or below
/// `cutoff` times the largest one are dropped as well. The error is the discarded fraction
/// of the Frobenius norm.
inline SvdTruncation svd_truncate(const RowMatrix& m, std::size_t chi, double cutoff = 0.0) {
    SvdTruncation out;
    if (m.rows() == 0 || m.cols() == 0) return out;
    Eigen::BDCSVD<Eigen::MatrixXd> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Eigen::VectorXd& s = svd.singularValues();
    const long full = s.size();
    long keep = full;
    if (chi > 0) keep = std::min<long>(keep, static_cast<long>(chi));
    if (cutoff > 0.0 && full > 0) {
        const double floor = cutoff * s(0);
        while (keep > 1 && s(keep - 1) <= floor) --keep;
    }
    keep = std::max<long>(keep, 1);
    const double total = s.squaredNorm();
    const double discarded = s.tail(full - keep).squaredNorm();
    out.truncation_error = total > 0.0 ? std::sqrt(discarded / total) : 0.0;
    out.U = svd.matrixU().leftCols(keep);
    out.S = s.head(keep);
    out.V = svd.matrixV().leftCols(keep);
    return out;
}

/// Open-boundary MPS; site tensors have axes (left bond, physical, right bond).
struct Mps {
    std::vector<DenseTensor> sites;
    double log_scale = 0.0;

    std::size_t length() const { return sites.size(); }
    std::size_t bond(std::size_t c) const { return sites[c].extent(2); }

    std::size_t max_bond() const {
        std::size_t b = 1;
        for (const auto& t : sites) b = std::max(b, t.extent(2));
        return b;
    }

    /// Product state with every physical vector all-ones.
    static Mps ones(std::size_t length, std::size_t phys) {
        Mps m;
        for (std::size_t c = 0; c < length; ++c)
            m.sites.emplace_back(std::vector<std::size_t>{1, phys, 1}, std::vector<Axis>{Axis::left, Axis::physical, Axis::right},
                                 1.0);
        return m;
    }

    void check() const {
        if (sites.empty()) return;
        if (sites.front().extent(0) != 1 || sites.back().extent(2) != 1)
            throw InvalidArgument("MPS end bonds must have extent 1");
        for (std::size_t c = 0; c + 1 < sites.size(); ++c)
            if (sites[c].extent(2) != sites[c + 1].extent(0)) throw InvalidArgument("MPS bond extents do not match");
    }
};

namespace detail {

inline Eigen::Map<RowMatrix> as_matrix(DenseTensor& t, std::size_t rows) {
    return {t.data().data(), static_cast<long>(rows), static_cast<long>(t.size() / rows)};
}

}  // namespace detail

struct CompressionStats {
    double truncation_error = 0.0;
    std::size_t max_bond = 1;
};

/// Left-to-right QR sweep followed by a right-to-left truncating SVD sweep.
/// The overall norm is moved into log_scale.
inline CompressionStats compress(Mps& mps, std::size_t chi, double cutoff = 1e-14) {
    CompressionStats stats;
    const std::size_t n = mps.length();
    if (n == 0) return stats;
    for (std::size_t c = 0; c + 1 < n; ++c) {
        auto& a = mps.sites[c];
        const std::size_t dl = a.extent(0), d = a.extent(1), dr = a.extent(2);
        RowMatrix m = detail::as_matrix(a, dl * d);
        const long k = std::min<long>(m.rows(), m.cols());
        Eigen::HouseholderQR<Eigen::MatrixXd> qr(m);
        RowMatrix q = qr.householderQ() * Eigen::MatrixXd::Identity(m.rows(), k);
        RowMatrix r = qr.matrixQR().topRows(k).triangularView<Eigen::Upper>();
        a = DenseTensor({dl, d, static_cast<std::size_t>(k)}, a.axes(), std::vector<double>(q.data(), q.data() + q.size()));
        auto& b = mps.sites[c + 1];
        const std::size_t bd = b.extent(1), br = b.extent(2);
        RowMatrix bm = r * detail::as_matrix(b, dr);
        b = DenseTensor({static_cast<std::size_t>(k), bd, br}, b.axes(), std::vector<double>(bm.data(), bm.data() + bm.size()));
    }
    double discarded2 = 0.0;
    for (std::size_t c = n; c-- > 1;) {
        auto& a = mps.sites[c];
        const std::size_t dl = a.extent(0), d = a.extent(1), dr = a.extent(2);
        RowMatrix m = detail::as_matrix(a, dl);
        SvdTruncation svd = svd_truncate(m, chi, cutoff);
        discarded2 += svd.truncation_error * svd.truncation_error;
        const auto keep = static_cast<std::size_t>(svd.S.size());
        RowMatrix vt = svd.V.transpose();
        a = DenseTensor({keep, d, dr}, a.axes(), std::vector<double>(vt.data(), vt.data() + vt.size()));
        RowMatrix us = svd.U * svd.S.asDiagonal();
        auto& b = mps.sites[c - 1];
        const std::size_t bl = b.extent(0), bd = b.extent(1);
        RowMatrix bm = detail::as_matrix(b, bl * bd) * us;
        b = DenseTensor({bl, bd, keep}, b.axes(), std::vector<double>(bm.data(), bm.data() + bm.size()));
        stats.max_bond = std::max(stats.max_bond, keep);
    }
    auto& first = mps.sites[0];
    double norm = 0.0;
    for (double v : first.data()) norm += v * v;
    norm = std::sqrt(norm);
    if (norm > 0.0) {
        for (double& v : first.data()) v /= norm;
        mps.log_scale += std::log(norm);
    }
    stats.truncation_error = std::sqrt(discarded2);
    return stats;
}

}  // namespace tgmc
