#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <string>
#include <vector>

#include "tgmc/error.hpp"

namespace tgmc {

enum class Axis { left, right, down, up, sampling, physical, bond, other };

inline const char* to_string(Axis a) {
    switch (a) {
        case Axis::left: return "left";
        case Axis::right: return "right";
        case Axis::down: return "down";
        case Axis::up: return "up";
        case Axis::sampling: return "sampling";
        case Axis::physical: return "physical";
        case Axis::bond: return "bond";
        default: return "other";
    }
}

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Row-major real tensor with named axes. The represented value is data * exp(log_scale).
class DenseTensor {
public:
    DenseTensor() = default;

    DenseTensor(std::vector<std::size_t> shape, std::vector<Axis> axes, double fill = 0.0)
        : shape_(std::move(shape)), axes_(std::move(axes)) {
        if (axes_.empty()) axes_.assign(shape_.size(), Axis::other);
        if (axes_.size() != shape_.size()) throw InvalidArgument("axis labels must match rank");
        data_.assign(product(shape_), fill);
    }

    explicit DenseTensor(std::vector<std::size_t> shape, double fill = 0.0) : DenseTensor(std::move(shape), {}, fill) {}

    DenseTensor(std::vector<std::size_t> shape, std::vector<Axis> axes, std::vector<double> data)
        : shape_(std::move(shape)), axes_(std::move(axes)), data_(std::move(data)) {
        if (axes_.empty()) axes_.assign(shape_.size(), Axis::other);
        if (axes_.size() != shape_.size()) throw InvalidArgument("axis labels must match rank");
        if (data_.size() != product(shape_)) throw InvalidArgument("tensor data size does not match shape");
    }

    static DenseTensor scalar(double v) { return DenseTensor({}, {}, std::vector<double>{v}); }

    std::size_t rank() const { return shape_.size(); }
    const std::vector<std::size_t>& shape() const { return shape_; }
    std::size_t extent(std::size_t axis) const { return shape_.at(axis); }
    const std::vector<Axis>& axes() const { return axes_; }
    std::size_t size() const { return data_.size(); }
    const std::vector<double>& data() const { return data_; }
    std::vector<double>& data() { return data_; }
    double log_scale() const { return log_scale_; }
    void set_log_scale(double s) { log_scale_ = s; }
    void add_log_scale(double s) { log_scale_ += s; }

    double& operator[](std::size_t flat) { return data_[flat]; }
    double operator[](std::size_t flat) const { return data_[flat]; }

    std::size_t flat_index(const std::vector<std::size_t>& idx) const {
        std::size_t f = 0;
        for (std::size_t a = 0; a < shape_.size(); ++a) f = f * shape_[a] + idx[a];
        return f;
    }

    double& at(const std::vector<std::size_t>& idx) { return data_[flat_index(idx)]; }
    double at(const std::vector<std::size_t>& idx) const { return data_[flat_index(idx)]; }

    /// Position of the first axis carrying the given label, or rank() if absent.
    std::size_t find(Axis a) const {
        return static_cast<std::size_t>(std::find(axes_.begin(), axes_.end(), a) - axes_.begin());
    }

    bool has(Axis a) const { return find(a) < rank(); }

    std::size_t axis(Axis a) const {
        auto p = find(a);
        if (p >= rank()) throw InvalidArgument(std::string("tensor has no axis ") + to_string(a));
        return p;
    }

    void relabel(std::vector<Axis> axes) {
        if (axes.size() != rank()) throw InvalidArgument("axis labels must match rank");
        axes_ = std::move(axes);
    }

    double max_abs() const {
        double m = 0.0;
        for (double v : data_) m = std::max(m, std::abs(v));
        return m;
    }

    /// Pulls the largest magnitude into log_scale. Zero tensors are left alone.
    void normalize() {
        const double m = max_abs();
        if (m > 0.0 && std::isfinite(m)) {
            for (double& v : data_) v /= m;
            log_scale_ += std::log(m);
        }
    }

    /// Value including the scale factor (may overflow for large log_scale).
    double value(std::size_t flat = 0) const { return data_[flat] * std::exp(log_scale_); }

    DenseTensor permuted(const std::vector<std::size_t>& perm) const {
        if (perm.size() != rank()) throw InvalidArgument("permutation must match rank");
        std::vector<std::size_t> new_shape(rank());
        std::vector<Axis> new_axes(rank());
        for (std::size_t a = 0; a < rank(); ++a) {
            new_shape[a] = shape_[perm[a]];
            new_axes[a] = axes_[perm[a]];
        }
        DenseTensor out(new_shape, new_axes);
        out.log_scale_ = log_scale_;
        std::vector<std::size_t> old_strides = strides(shape_);
        std::vector<std::size_t> idx(rank(), 0);
        for (std::size_t f = 0; f < out.data_.size(); ++f) {
            std::size_t src = 0;
            for (std::size_t a = 0; a < rank(); ++a) src += idx[a] * old_strides[perm[a]];
            out.data_[f] = data_[src];
            for (std::size_t a = rank(); a-- > 0;) {
                if (++idx[a] < new_shape[a]) break;
                idx[a] = 0;
            }
        }
        return out;
    }

    DenseTensor reshaped(std::vector<std::size_t> shape, std::vector<Axis> axes = {}) const {
        if (product(shape) != data_.size()) throw InvalidArgument("reshape changes element count");
        DenseTensor out(std::move(shape), std::move(axes), data_);
        out.log_scale_ = log_scale_;
        return out;
    }

    /// Fixes one axis to a value, dropping it.
    DenseTensor slice(std::size_t axis, std::size_t value) const {
        std::vector<std::size_t> perm(rank());
        std::iota(perm.begin(), perm.end(), 0);
        std::rotate(perm.begin(), perm.begin() + static_cast<long>(axis), perm.begin() + static_cast<long>(axis) + 1);
        DenseTensor front = permuted(perm);
        std::vector<std::size_t> shape(front.shape_.begin() + 1, front.shape_.end());
        std::vector<Axis> axes(front.axes_.begin() + 1, front.axes_.end());
        const std::size_t block = product(shape);
        std::vector<double> d(front.data_.begin() + static_cast<long>(value * block),
                              front.data_.begin() + static_cast<long>((value + 1) * block));
        DenseTensor out(shape, axes, std::move(d));
        out.log_scale_ = log_scale_;
        return out;
    }

    static std::size_t product(const std::vector<std::size_t>& s) {
        return std::accumulate(s.begin(), s.end(), std::size_t{1}, std::multiplies<>());
    }

    static std::vector<std::size_t> strides(const std::vector<std::size_t>& s) {
        std::vector<std::size_t> st(s.size(), 1);
        for (std::size_t a = s.size(); a-- > 1;) st[a - 1] = st[a] * s[a];
        return st;
    }

private:
    std::vector<std::size_t> shape_;
    std::vector<Axis> axes_;
    std::vector<double> data_;
    double log_scale_ = 0.0;
};

/// Sums over paired axes. Result axes: free axes of a (in order) then free axes of b.
inline DenseTensor contract(const DenseTensor& a, const std::vector<std::size_t>& a_axes, const DenseTensor& b,
                            const std::vector<std::size_t>& b_axes) {
    if (a_axes.size() != b_axes.size()) throw InvalidArgument("contract: axis lists differ in length");
    std::vector<bool> a_used(a.rank(), false), b_used(b.rank(), false);
    std::size_t inner = 1;
    for (std::size_t i = 0; i < a_axes.size(); ++i) {
        if (a_axes[i] >= a.rank() || b_axes[i] >= b.rank()) throw InvalidArgument("contract: axis out of range");
        if (a.extent(a_axes[i]) != b.extent(b_axes[i])) throw InvalidArgument("contract: extent mismatch");
        if (a_used[a_axes[i]] || b_used[b_axes[i]]) throw InvalidArgument("contract: repeated axis");
        a_used[a_axes[i]] = b_used[b_axes[i]] = true;
        inner *= a.extent(a_axes[i]);
    }
    std::vector<std::size_t> a_perm, b_perm, out_shape;
    std::vector<Axis> out_axes;
    for (std::size_t i = 0; i < a.rank(); ++i)
        if (!a_used[i]) {
            a_perm.push_back(i);
            out_shape.push_back(a.extent(i));
            out_axes.push_back(a.axes()[i]);
        }
    a_perm.insert(a_perm.end(), a_axes.begin(), a_axes.end());
    b_perm.assign(b_axes.begin(), b_axes.end());
    for (std::size_t i = 0; i < b.rank(); ++i)
        if (!b_used[i]) {
            b_perm.push_back(i);
            out_shape.push_back(b.extent(i));
            out_axes.push_back(b.axes()[i]);
        }
    const DenseTensor ap = a.permuted(a_perm);
    const DenseTensor bp = b.permuted(b_perm);
    const std::size_t rows = ap.size() / inner, cols = bp.size() / inner;
    Eigen::Map<const RowMatrix> am(ap.data().data(), static_cast<long>(rows), static_cast<long>(inner));
    Eigen::Map<const RowMatrix> bm(bp.data().data(), static_cast<long>(inner), static_cast<long>(cols));
    DenseTensor out(out_shape, out_axes);
    Eigen::Map<RowMatrix> om(out.data().data(), static_cast<long>(rows), static_cast<long>(cols));
    om.noalias() = am * bm;
    out.set_log_scale(a.log_scale() + b.log_scale());
    return out;
}

/// Contracts the first axis labelled a_label in a with the first axis labelled b_label in b.
inline DenseTensor contract_labels(const DenseTensor& a, Axis a_label, const DenseTensor& b, Axis b_label) {
    return contract(a, {a.axis(a_label)}, b, {b.axis(b_label)});
}

inline DenseTensor outer(const DenseTensor& a, const DenseTensor& b) { return contract(a, {}, b, {}); }

}  // namespace tgmc
