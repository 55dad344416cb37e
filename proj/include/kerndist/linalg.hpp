#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "kerndist/matrix.hpp"

namespace kerndist {

struct EigenResult {
    std::vector<double> eigenvalues;  // non-increasing
    Matrix eigenvectors;              // column i pairs with eigenvalue i
};

namespace detail {

// Cyclic Jacobi sweeps on a full row-major working copy w. If vt is
// non-null it accumulates the rotations with eigenvectors as rows.
// Converges when the off-diagonal Frobenius norm drops below
// 1e-12 * ||A||_F, with a hard cap of 100 sweeps.
inline void jacobi_sweeps(std::vector<double>& w, std::vector<double>* vt, std::size_t n) {
    double norm_a = 0.0;
    for (double v : w) norm_a += v * v;
    norm_a = std::sqrt(norm_a);
    const double off_tol = 1e-12 * norm_a;

    auto off_norm = [&] {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = i + 1; j < n; ++j) s += w[i * n + j] * w[i * n + j];
        return std::sqrt(2.0 * s);
    };

    for (int sweep = 0; sweep < 100; ++sweep) {
        if (off_norm() <= off_tol) break;
        for (std::size_t p = 0; p < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                const double apq = w[p * n + q];
                if (apq == 0.0) continue;
                const double app = w[p * n + p];
                const double aqq = w[q * n + q];
                const double g = 100.0 * std::abs(apq);
                // Entry already negligible against the diagonal: zero it out.
                if (sweep > 4 && std::abs(app) + g == std::abs(app) &&
                    std::abs(aqq) + g == std::abs(aqq)) {
                    w[p * n + q] = w[q * n + p] = 0.0;
                    continue;
                }
                const double theta = 0.5 * (aqq - app) / apq;
                double t = 1.0 / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                if (theta < 0.0) t = -t;
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                const double tau = s / (1.0 + c);
                const double h = t * apq;

                w[p * n + p] = app - h;
                w[q * n + q] = aqq + h;
                w[p * n + q] = w[q * n + p] = 0.0;

                double* rp = &w[p * n];
                double* rq = &w[q * n];
                for (std::size_t k = 0; k < n; ++k) {
                    if (k == p || k == q) continue;
                    const double akp = rp[k];
                    const double akq = rq[k];
                    const double np_ = akp - s * (akq + tau * akp);
                    const double nq_ = akq + s * (akp - tau * akq);
                    rp[k] = np_;
                    w[k * n + p] = np_;
                    rq[k] = nq_;
                    w[k * n + q] = nq_;
                }
                if (vt != nullptr) {
                    double* vp = &(*vt)[p * n];
                    double* vq = &(*vt)[q * n];
                    for (std::size_t k = 0; k < n; ++k) {
                        const double gp = vp[k];
                        const double gq = vq[k];
                        vp[k] = gp - s * (gq + tau * gp);
                        vq[k] = gq + s * (gp - tau * gq);
                    }
                }
            }
        }
    }
}

inline std::vector<std::size_t> eigen_order(const std::vector<double>& w, std::size_t n) {
    // Non-increasing; ties keep original index order.
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) {
        return w[i * n + i] > w[j * n + j];
    });
    return order;
}

}  // namespace detail

// Full symmetric eigendecomposition by cyclic Jacobi rotations;
// deterministic for fixed input.
inline EigenResult sym_eigendecompose(const SymMatrix& a) {
    if (!a.all_finite())
        throw std::invalid_argument("sym_eigendecompose: matrix has non-finite entries");

    const std::size_t n = a.size();
    std::vector<double> w(a.data());
    std::vector<double> vt(n * n, 0.0);  // rows are eigenvectors during iteration
    for (std::size_t i = 0; i < n; ++i) vt[i * n + i] = 1.0;

    detail::jacobi_sweeps(w, &vt, n);
    const auto order = detail::eigen_order(w, n);

    EigenResult out;
    out.eigenvalues.resize(n);
    out.eigenvectors = Matrix(n, n);
    for (std::size_t c = 0; c < n; ++c) {
        const std::size_t src = order[c];
        out.eigenvalues[c] = w[src * n + src];
        for (std::size_t r = 0; r < n; ++r) out.eigenvectors(r, c) = vt[src * n + r];
    }
    return out;
}

// Eigenvalues only; same rotations, no eigenvector accumulation.
inline std::vector<double> sym_eigenvalues(const SymMatrix& a) {
    if (!a.all_finite())
        throw std::invalid_argument("sym_eigenvalues: matrix has non-finite entries");
    const std::size_t n = a.size();
    std::vector<double> w(a.data());
    detail::jacobi_sweeps(w, nullptr, n);
    const auto order = detail::eigen_order(w, n);
    std::vector<double> out(n);
    for (std::size_t c = 0; c < n; ++c) out[c] = w[order[c] * n + order[c]];
    return out;
}

// K~ = H K H with H = I - (1/n) 11^T; entrywise this subtracts row and
// column means and adds back the grand mean. Output is exactly symmetric.
// Means are accumulated as compensated sums of deviations from an anchor
// entry, so a constant matrix centers to exact zeros.
inline SymMatrix center_gram(const SymMatrix& k) {
    const std::size_t n = k.size();
    std::vector<double> row_mean(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        const double anchor = k(i, 0);
        double s = 0.0, comp = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            const double x = k(i, j) - anchor;
            const double t = s + x;
            comp += std::abs(s) >= std::abs(x) ? (s - t) + x : (x - t) + s;
            s = t;
        }
        row_mean[i] = anchor + (s + comp) / double(n);
    }
    const double ganchor = row_mean[0];
    double gs = 0.0, gcomp = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double x = row_mean[i] - ganchor;
        const double t = gs + x;
        gcomp += std::abs(gs) >= std::abs(x) ? (gs - t) + x : (x - t) + gs;
        gs = t;
    }
    const double grand = ganchor + (gs + gcomp) / double(n);

    SymMatrix out(n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i; j < n; ++j)
            out.set(i, j, (k(i, j) - row_mean[i]) - (row_mean[j] - grand));
    return out;
}

// Median of the m(m-1)/2 pairwise Euclidean distances; an even count
// averages the two middle order statistics.
inline double median_pairwise_distance(const Matrix& x) {
    const std::size_t m = x.rows();
    if (m < 2)
        throw std::invalid_argument("median_pairwise_distance: need at least 2 points");
    std::vector<double> dists;
    dists.reserve(m * (m - 1) / 2);
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = i + 1; j < m; ++j) {
            double d2 = 0.0;
            for (std::size_t c = 0; c < x.cols(); ++c) {
                const double d = x(i, c) - x(j, c);
                d2 += d * d;
            }
            dists.push_back(std::sqrt(d2));
        }
    }
    std::sort(dists.begin(), dists.end());
    const std::size_t c = dists.size();
    if (c % 2 == 1) return dists[c / 2];
    return 0.5 * (dists[c / 2 - 1] + dists[c / 2]);
}

}  // namespace kerndist
