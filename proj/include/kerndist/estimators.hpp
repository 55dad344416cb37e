#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <utility>

#include "kerndist/kernels.hpp"
#include "kerndist/linalg.hpp"
#include "kerndist/matrix.hpp"
#include "kerndist/stats.hpp"

namespace kerndist {

// Row i of x and row i of y form one joint observation.
struct PairedSample {
    Matrix x;
    Matrix y;

    PairedSample(Matrix x_, Matrix y_) : x(std::move(x_)), y(std::move(y_)) {
        if (x.rows() != y.rows())
            throw std::invalid_argument("PairedSample: row counts differ");
        if (x.rows() == 0) throw std::invalid_argument("PairedSample: empty sample");
    }
};

namespace detail {

// Sum of a rectangular block of a pooled square Gram matrix, row-major.
inline double block_sum(const SymMatrix& g, std::size_t r0, std::size_t r1, std::size_t c0,
                        std::size_t c1) {
    NeumaierSum s;
    for (std::size_t i = r0; i < r1; ++i)
        for (std::size_t j = c0; j < c1; ++j) s.add(g(i, j));
    return s.value();
}

}  // namespace detail

// Biased V-statistic of the squared MMD read off a pooled (m+n) x (m+n)
// Gram matrix whose first m rows belong to the first sample.
inline double mmd_from_pooled_gram(const SymMatrix& g, std::size_t m, std::size_t n) {
    if (m + n != g.size())
        throw std::invalid_argument("mmd_from_pooled_gram: block sizes do not match gram");
    const double szz = detail::block_sum(g, 0, m, 0, m);
    const double sww = detail::block_sum(g, m, m + n, m, m + n);
    const double szw = detail::block_sum(g, 0, m, m, m + n);
    return szz / (double(m) * m) + sww / (double(n) * n) - 2.0 * szw / (double(m) * n);
}

inline double mmd_vstat(const KernelSpec& k, const Matrix& z, const Matrix& w) {
    if (z.rows() == 0 || w.rows() == 0)
        throw std::invalid_argument("mmd_vstat: empty sample");
    const Matrix pooled = Matrix::vstack(z, w);
    return mmd_from_pooled_gram(gram_matrix(k, pooled), z.rows(), w.rows());
}

// 2 * mean cross-distance - mean within-z - mean within-w, diagonal terms
// included.
inline double energy_distance_vstat(const SemimetricSpec& rho, const Matrix& z,
                                    const Matrix& w) {
    if (z.rows() == 0 || w.rows() == 0)
        throw std::invalid_argument("energy_distance_vstat: empty sample");
    require_negative_type(rho);
    const std::size_t m = z.rows(), n = w.rows();
    const Matrix pooled = Matrix::vstack(z, w);
    const SymMatrix g = gram_matrix(rho, pooled);
    const double szz = detail::block_sum(g, 0, m, 0, m);
    const double sww = detail::block_sum(g, m, m + n, m, m + n);
    const double szw = detail::block_sum(g, 0, m, m, m + n);
    return 2.0 * szw / (double(m) * n) - szz / (double(m) * m) - sww / (double(n) * n);
}

// (1/m^2) Tr(Kx H Ky H); since H is idempotent this equals the Frobenius
// inner product of the two centred grams, which keeps the statistic exactly
// zero when either sample is constant.
inline double hsic_from_grams(const SymMatrix& kx, const SymMatrix& ky) {
    if (kx.size() != ky.size())
        throw std::invalid_argument("hsic_from_grams: gram sizes differ");
    const std::size_t m = kx.size();
    const SymMatrix cx = center_gram(kx);
    const SymMatrix cy = center_gram(ky);
    NeumaierSum s;
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < m; ++j) s.add(cx(i, j) * cy(i, j));
    return s.value() / (double(m) * m);
}

inline double hsic_vstat(const KernelSpec& kx, const KernelSpec& ky, const PairedSample& s) {
    return hsic_from_grams(gram_matrix(kx, s.x), gram_matrix(ky, s.y));
}

// Three-term plug-in of the generalized distance covariance.
inline double dcov_vstat(const SemimetricSpec& rho_x, const SemimetricSpec& rho_y,
                         const PairedSample& s) {
    require_negative_type(rho_x);
    require_negative_type(rho_y);
    const std::size_t m = s.x.rows();
    const SymMatrix a = gram_matrix(rho_x, s.x);
    const SymMatrix b = gram_matrix(rho_y, s.y);

    NeumaierSum t1;
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < m; ++j) t1.add(a(i, j) * b(i, j));

    std::vector<double> row_a(m, 0.0), row_b(m, 0.0);
    for (std::size_t i = 0; i < m; ++i) {
        NeumaierSum ra, rb;
        for (std::size_t j = 0; j < m; ++j) {
            ra.add(a(i, j));
            rb.add(b(i, j));
        }
        row_a[i] = ra.value();
        row_b[i] = rb.value();
    }
    const double sum_a = compensated_sum(row_a);
    const double sum_b = compensated_sum(row_b);

    NeumaierSum t3;
    for (std::size_t i = 0; i < m; ++i) t3.add(row_a[i] * row_b[i]);

    const double m2 = double(m) * m;
    return t1.value() / m2 + (sum_a / m2) * (sum_b / m2) - 2.0 * t3.value() / (m2 * double(m));
}

// Distance correlation through the kernel route; 0 when either empirical
// distance variance vanishes.
inline double dcor_vstat(const KernelSpec& kx, const KernelSpec& ky, const PairedSample& s) {
    const KernelSpec kxr =
        has_unresolved_bandwidth(kx) ? resolve_bandwidth(kx, s.x) : kx;
    const KernelSpec kyr =
        has_unresolved_bandwidth(ky) ? resolve_bandwidth(ky, s.y) : ky;
    const SymMatrix gx = gram_matrix(kxr, s.x);
    const SymMatrix gy = gram_matrix(kyr, s.y);
    const double vxy = hsic_from_grams(gx, gy);
    const double vxx = hsic_from_grams(gx, gx);
    const double vyy = hsic_from_grams(gy, gy);
    if (vxx <= 1e-14 || vyy <= 1e-14) return 0.0;
    return vxy / std::sqrt(vxx * vyy);
}

}  // namespace kerndist
