// Uniform B-spline bases for learnable edge activations.
//
// A grid of G intervals over [lo, hi] with order-k bases carries G + k basis
// functions. Knots are uniform and extended k spacings beyond each end, so
// the bases form a partition of unity on [lo, hi] and every denominator in
// the Cox-de Boor recursion is a fixed multiple of the spacing.
#pragma once

#include <cmath>
#include <vector>

#include "kantherm/errors.hpp"

namespace kantherm {

class SplineGrid {
public:
    SplineGrid(int order, int intervals, double lo, double hi)
        : order_(order), intervals_(intervals), lo_(lo), hi_(hi) {
        if (order_ < 1) throw config_error("spline order must be >= 1");
        if (intervals_ < 1) throw config_error("spline grid needs >= 1 interval");
        if (!(lo_ < hi_)) throw config_error("spline grid needs lo < hi");
        h_ = (hi_ - lo_) / intervals_;
        inv_h_ = 1.0 / h_;
        for (int j = 1; j <= order_ && j <= kMaxOrder; ++j) inv_level_[j] = inv_h_ / j;
        knots_.resize(static_cast<std::size_t>(intervals_ + 2 * order_ + 1));
        for (int j = 0; j < static_cast<int>(knots_.size()); ++j)
            knots_[static_cast<std::size_t>(j)] = lo_ + (j - order_) * h_;
    }

    [[nodiscard]] int order() const { return order_; }
    [[nodiscard]] int intervals() const { return intervals_; }
    [[nodiscard]] int basis_count() const { return intervals_ + order_; }
    [[nodiscard]] double lo() const { return lo_; }
    [[nodiscard]] double hi() const { return hi_; }
    [[nodiscard]] double spacing() const { return h_; }
    [[nodiscard]] const std::vector<double>& knots() const { return knots_; }
    [[nodiscard]] bool in_range(double x) const { return x >= lo_ && x <= hi_; }

    /// All basis_count() values at x via the Cox-de Boor recursion over the
    /// extended knots. Outside the extended knot range everything is zero.
    void basis(double x, double* out) const {
        std::vector<double> work(knots_.size() - 1);
        degree_zero(x, work.data());
        for (int p = 1; p <= order_; ++p) raise_degree(x, p, work.data());
        for (int i = 0; i < basis_count(); ++i) out[i] = work[static_cast<std::size_t>(i)];
    }

    [[nodiscard]] std::vector<double> basis(double x) const {
        std::vector<double> out(static_cast<std::size_t>(basis_count()));
        basis(x, out.data());
        return out;
    }

    /// d/dx of every basis at x.
    void basis_derivative(double x, double* out) const {
        std::vector<double> work(knots_.size() - 1);
        degree_zero(x, work.data());
        for (int p = 1; p < order_; ++p) raise_degree(x, p, work.data());
        // B'_{i,k} = (B_{i,k-1} - B_{i+1,k-1}) / h for uniform knots.
        for (int i = 0; i < basis_count(); ++i)
            out[i] = (work[static_cast<std::size_t>(i)] - work[static_cast<std::size_t>(i + 1)]) *
                     inv_h_;
    }

    [[nodiscard]] std::vector<double> basis_derivative(double x) const {
        std::vector<double> out(static_cast<std::size_t>(basis_count()));
        basis_derivative(x, out.data());
        return out;
    }

    /// Index of the knot span containing x, clamped to the valid range
    /// [order, order + intervals - 1]. Only meaningful when in_range(x).
    [[nodiscard]] int span(double x) const {
        int s = order_ + static_cast<int>(std::floor((x - lo_) * inv_h_));
        if (s < order_) s = order_;
        const int top = order_ + intervals_ - 1;
        if (s > top) s = top;
        return s;
    }

    /// The order+1 possibly non-zero basis values at x, for basis indices
    /// span-order .. span. Requires in_range(x). nz must hold order+1 values.
    int local_basis(double x, double* nz) const {
        const int s = span(x);
        double left[kMaxOrder + 1];
        double right[kMaxOrder + 1];
        nz[0] = 1.0;
        for (int j = 1; j <= order_; ++j) {
            left[j] = x - knots_[static_cast<std::size_t>(s + 1 - j)];
            right[j] = knots_[static_cast<std::size_t>(s + j)] - x;
            const double inv_den = inv_level_[j];
            double saved = 0.0;
            for (int r = 0; r < j; ++r) {
                const double temp = nz[r] * inv_den;
                nz[r] = saved + right[r + 1] * temp;
                saved = left[j - r] * temp;
            }
            nz[j] = saved;
        }
        return s;
    }

    /// Fused local evaluation: dot of the non-zero bases with the matching
    /// coefficient slice. Requires in_range(x); coeffs points at the full
    /// coefficient array of basis_count() values.
    [[nodiscard]] double local_value(double x, const double* coeffs) const {
        double nz[kMaxOrder + 1];
        const int s = local_basis(x, nz);
        const double* c = coeffs + (s - order_);
        double acc = 0.0;
        for (int r = 0; r <= order_; ++r) acc += c[r] * nz[r];
        return acc;
    }

    /// Local bases plus their derivatives; each array holds order+1 values.
    int local_basis_and_derivative(double x, double* nz, double* dnz) const {
        const int s = span(x);
        double left[kMaxOrder + 1];
        double right[kMaxOrder + 1];
        double lower[kMaxOrder + 1]; // order-1 bases, filled before the last level
        nz[0] = 1.0;
        for (int j = 1; j <= order_; ++j) {
            if (j == order_)
                for (int r = 0; r < order_; ++r) lower[r] = nz[r];
            left[j] = x - knots_[static_cast<std::size_t>(s + 1 - j)];
            right[j] = knots_[static_cast<std::size_t>(s + j)] - x;
            const double inv_den = inv_level_[j];
            double saved = 0.0;
            for (int r = 0; r < j; ++r) {
                const double temp = nz[r] * inv_den;
                nz[r] = saved + right[r + 1] * temp;
                saved = left[j - r] * temp;
            }
            nz[j] = saved;
        }
        for (int i = 0; i <= order_; ++i) {
            const double a = (i > 0) ? lower[i - 1] : 0.0;
            const double b = (i < order_) ? lower[i] : 0.0;
            dnz[i] = (a - b) * inv_h_;
        }
        return s;
    }

    static constexpr int kMaxOrder = 15;

private:
    void degree_zero(double x, double* work) const {
        const std::size_t nspan = knots_.size() - 1;
        for (std::size_t j = 0; j < nspan; ++j)
            work[j] = (x >= knots_[j] && x < knots_[j + 1]) ? 1.0 : 0.0;
    }

    void raise_degree(double x, int p, double* work) const {
        const std::size_t n = knots_.size() - static_cast<std::size_t>(p) - 1;
        const double inv_den = inv_level_[p];
        for (std::size_t j = 0; j < n; ++j) {
            const double a = (x - knots_[j]) * inv_den * work[j];
            const double b = (knots_[j + static_cast<std::size_t>(p) + 1] - x) * inv_den *
                             work[j + 1];
            work[j] = a + b;
        }
    }

    int order_;
    int intervals_;
    double lo_, hi_, h_, inv_h_;
    double inv_level_[kMaxOrder + 1] = {};
    std::vector<double> knots_;
};

} // namespace kantherm
