#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <utility>
#include <variant>
#include <vector>

#include "kerndist/estimators.hpp"
#include "kerndist/matrix.hpp"
#include "kerndist/rng.hpp"

namespace kerndist {

// Two multivariate gaussians whose means differ in the first coordinate.
struct MeanShift {
    std::size_t dim = 1;
    double delta = 0.0;
};

// Two multivariate gaussians whose variances differ in the first coordinate.
struct VarShift {
    std::size_t dim = 1;
    double var_ratio = 1.0;
};

// N(0,1) against the density proportional to phi(x) (1 + sin(freq x)).
struct SinePerturb {
    double freq = 1.0;
};

enum class RotMarginal { Uniform, ExpSymmetric };

// Two i.i.d. non-gaussian sources rotated by `angle` in their product
// plane, padded with gaussian noise dimensions, and each block passed
// through an independent random orthogonal transform. Dependent but
// uncorrelated for angle > 0.
struct RotatedPair {
    double angle = 0.0;
    std::size_t extra_dims = 0;
    RotMarginal marginal = RotMarginal::Uniform;
};

// Pairs on [-pi, pi]^2 with density proportional to 1 + sin(l x) sin(l y).
struct SineDependence {
    unsigned freq = 1;
};

struct ScenarioSpec {
    std::variant<MeanShift, VarShift, SinePerturb, RotatedPair, SineDependence> family;
    std::size_t m = 100;
};

struct RejectionStats {
    std::size_t proposals = 0;
    std::size_t accepted = 0;
};

namespace detail {

inline void validate_scenario(const ScenarioSpec& spec) {
    if (spec.m < 2) throw std::invalid_argument("scenario: sample size must be >= 2");
    if (const auto* ms = std::get_if<MeanShift>(&spec.family)) {
        if (ms->dim < 1) throw std::invalid_argument("scenario: dimension must be >= 1");
    } else if (const auto* vs = std::get_if<VarShift>(&spec.family)) {
        if (vs->dim < 1) throw std::invalid_argument("scenario: dimension must be >= 1");
        if (!(vs->var_ratio > 0.0))
            throw std::invalid_argument("scenario: variance ratio must be positive");
    } else if (const auto* rp = std::get_if<RotatedPair>(&spec.family)) {
        if (!(rp->angle >= 0.0 && rp->angle <= M_PI / 4.0 + 1e-12))
            throw std::invalid_argument("scenario: angle must lie in [0, pi/4]");
    } else if (const auto* sd = std::get_if<SineDependence>(&spec.family)) {
        if (sd->freq < 1) throw std::invalid_argument("scenario: frequency must be >= 1");
    }
}

inline Matrix gaussian_matrix(std::size_t m, std::size_t d, Rng& rng) {
    Matrix x(m, d);
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < d; ++j) x(i, j) = rng.normal();
    return x;
}

// Uniform on [-sqrt(3), sqrt(3)] or symmetric exponential with scale
// 1/sqrt(2); both have unit variance.
inline double marginal_draw(RotMarginal marginal, Rng& rng) {
    if (marginal == RotMarginal::Uniform) {
        const double s = std::sqrt(3.0);
        return s * (2.0 * rng.uniform() - 1.0);
    }
    const double u = rng.uniform();
    const double b = 1.0 / std::sqrt(2.0);
    if (u < 0.5) return b * std::log(2.0 * u + 1e-300);
    return -b * std::log(2.0 * (1.0 - u) + 1e-300);
}

}  // namespace detail

// Haar-distributed orthogonal matrix: QR of a gaussian matrix with the
// diagonal signs of R folded into Q.
inline Matrix random_orthogonal(std::size_t d, Rng& rng) {
    if (d < 1) throw std::invalid_argument("random_orthogonal: dimension must be >= 1");
    Matrix a = detail::gaussian_matrix(d, d, rng);
    Matrix q(d, d);
    for (std::size_t i = 0; i < d; ++i) q(i, i) = 1.0;

    // Householder QR; reflectors applied to both A and the accumulating Q.
    std::vector<double> v(d);
    for (std::size_t k = 0; k < d; ++k) {
        double norm = 0.0;
        for (std::size_t i = k; i < d; ++i) norm += a(i, k) * a(i, k);
        norm = std::sqrt(norm);
        if (norm == 0.0) continue;
        const double alpha = a(k, k) > 0.0 ? -norm : norm;
        v[k] = a(k, k) - alpha;
        for (std::size_t i = k + 1; i < d; ++i) v[i] = a(i, k);
        double vnorm2 = 0.0;
        for (std::size_t i = k; i < d; ++i) vnorm2 += v[i] * v[i];
        if (vnorm2 == 0.0) continue;

        for (std::size_t j = k; j < d; ++j) {
            double dot = 0.0;
            for (std::size_t i = k; i < d; ++i) dot += v[i] * a(i, j);
            const double f = 2.0 * dot / vnorm2;
            for (std::size_t i = k; i < d; ++i) a(i, j) -= f * v[i];
        }
        for (std::size_t r = 0; r < d; ++r) {
            double dot = 0.0;
            for (std::size_t i = k; i < d; ++i) dot += q(r, i) * v[i];
            const double f = 2.0 * dot / vnorm2;
            for (std::size_t i = k; i < d; ++i) q(r, i) -= f * v[i];
        }
    }
    for (std::size_t k = 0; k < d; ++k)
        if (a(k, k) < 0.0)
            for (std::size_t r = 0; r < d; ++r) q(r, k) = -q(r, k);
    return q;
}

inline Matrix random_orthogonal(std::size_t d, const RngSpec& rng_spec) {
    Rng rng(rng_spec);
    return random_orthogonal(d, rng);
}

// One draw from the density proportional to phi(x) (1 + sin(freq x)):
// propose from phi and accept with probability (1 + sin(freq x)) / 2.
inline double sample_sine_perturbed(double freq, Rng& rng, RejectionStats* stats = nullptr) {
    while (true) {
        const double x = rng.normal();
        const double u = rng.uniform();
        if (stats != nullptr) ++stats->proposals;
        if (u < 0.5 * (1.0 + std::sin(freq * x))) {
            if (stats != nullptr) ++stats->accepted;
            return x;
        }
    }
}

// One draw from the density on [-pi, pi]^2 proportional to
// 1 + sin(l x) sin(l y): uniform proposal, acceptance
// (1 + sin(l x) sin(l y)) / 2.
inline std::pair<double, double> sample_sine_dependent(unsigned freq, Rng& rng,
                                                       RejectionStats* stats = nullptr) {
    while (true) {
        const double x = M_PI * (2.0 * rng.uniform() - 1.0);
        const double y = M_PI * (2.0 * rng.uniform() - 1.0);
        const double u = rng.uniform();
        if (stats != nullptr) ++stats->proposals;
        if (u < 0.5 * (1.0 + std::sin(freq * x) * std::sin(freq * y))) {
            if (stats != nullptr) ++stats->accepted;
            return {x, y};
        }
    }
}

inline std::pair<Matrix, Matrix> gen_two_sample(const ScenarioSpec& spec,
                                                const RngSpec& rng_spec,
                                                RejectionStats* stats = nullptr) {
    detail::validate_scenario(spec);
    Rng rng(rng_spec);
    const std::size_t m = spec.m;

    if (const auto* ms = std::get_if<MeanShift>(&spec.family)) {
        Matrix z = detail::gaussian_matrix(m, ms->dim, rng);
        Matrix w = detail::gaussian_matrix(m, ms->dim, rng);
        for (std::size_t i = 0; i < m; ++i) w(i, 0) += ms->delta;
        return {std::move(z), std::move(w)};
    }
    if (const auto* vs = std::get_if<VarShift>(&spec.family)) {
        Matrix z = detail::gaussian_matrix(m, vs->dim, rng);
        Matrix w = detail::gaussian_matrix(m, vs->dim, rng);
        const double sd = std::sqrt(vs->var_ratio);
        for (std::size_t i = 0; i < m; ++i) w(i, 0) *= sd;
        return {std::move(z), std::move(w)};
    }
    if (const auto* sp = std::get_if<SinePerturb>(&spec.family)) {
        Matrix z(m, 1), w(m, 1);
        for (std::size_t i = 0; i < m; ++i) z(i, 0) = rng.normal();
        for (std::size_t i = 0; i < m; ++i)
            w(i, 0) = sample_sine_perturbed(sp->freq, rng, stats);
        return {std::move(z), std::move(w)};
    }
    throw std::invalid_argument("gen_two_sample: scenario is not a two-sample family");
}

inline PairedSample gen_dependence(const ScenarioSpec& spec, const RngSpec& rng_spec,
                                   RejectionStats* stats = nullptr) {
    detail::validate_scenario(spec);
    Rng rng(rng_spec);
    const std::size_t m = spec.m;

    if (const auto* rp = std::get_if<RotatedPair>(&spec.family)) {
        const std::size_t d = 1 + rp->extra_dims;
        const Matrix qx = random_orthogonal(d, rng);
        const Matrix qy = random_orthogonal(d, rng);
        const double c = std::cos(rp->angle), s = std::sin(rp->angle);

        Matrix x(m, d), y(m, d);
        std::vector<double> bx(d), by(d);
        for (std::size_t i = 0; i < m; ++i) {
            const double s1 = detail::marginal_draw(rp->marginal, rng);
            const double s2 = detail::marginal_draw(rp->marginal, rng);
            bx[0] = c * s1 - s * s2;
            by[0] = s * s1 + c * s2;
            for (std::size_t j = 1; j < d; ++j) bx[j] = rng.normal();
            for (std::size_t j = 1; j < d; ++j) by[j] = rng.normal();
            for (std::size_t r = 0; r < d; ++r) {
                double ax = 0.0, ay = 0.0;
                for (std::size_t cidx = 0; cidx < d; ++cidx) {
                    ax += qx(r, cidx) * bx[cidx];
                    ay += qy(r, cidx) * by[cidx];
                }
                x(i, r) = ax;
                y(i, r) = ay;
            }
        }
        return {std::move(x), std::move(y)};
    }
    if (const auto* sd = std::get_if<SineDependence>(&spec.family)) {
        Matrix x(m, 1), y(m, 1);
        for (std::size_t i = 0; i < m; ++i) {
            const auto [px, py] = sample_sine_dependent(sd->freq, rng, stats);
            x(i, 0) = px;
            y(i, 0) = py;
        }
        return {std::move(x), std::move(y)};
    }
    throw std::invalid_argument("gen_dependence: scenario is not a dependence family");
}

}  // namespace kerndist
