#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "kerndist/estimators.hpp"
#include "kerndist/kernels.hpp"
#include "kerndist/linalg.hpp"
#include "kerndist/matrix.hpp"
#include "kerndist/rng.hpp"
#include "kerndist/stats.hpp"

namespace kerndist {

struct SpectralSpec {
    std::size_t num_draws = 10000;
    double eig_rel_tol = 1e-10;
    std::size_t max_products = 2500;
};

struct PermutationSpec {
    std::size_t num_perms = 1000;
};

struct QFormBoundSpec {};

struct NullSpec {
    std::variant<SpectralSpec, PermutationSpec, QFormBoundSpec> method;
    double alpha = 0.05;
};

inline NullSpec spectral_null_spec(double alpha = 0.05, std::size_t num_draws = 10000,
                                   double eig_rel_tol = 1e-10,
                                   std::size_t max_products = 2500) {
    return {SpectralSpec{num_draws, eig_rel_tol, max_products}, alpha};
}

inline NullSpec permutation_null_spec(double alpha = 0.05, std::size_t num_perms = 1000) {
    return {PermutationSpec{num_perms}, alpha};
}

inline NullSpec qform_null_spec(double alpha = 0.05) { return {QFormBoundSpec{}, alpha}; }

inline void validate_null_spec(const NullSpec& spec) {
    if (!(spec.alpha > 0.0 && spec.alpha < 1.0))
        throw std::invalid_argument("null spec: alpha must lie in (0, 1)");
    if (const auto* s = std::get_if<SpectralSpec>(&spec.method)) {
        if (s->num_draws < 1000)
            throw std::invalid_argument("null spec: spectral draws must be >= 1000");
        if (!(s->eig_rel_tol > 0.0 && s->eig_rel_tol < 1.0))
            throw std::invalid_argument("null spec: eig_rel_tol must lie in (0, 1)");
        if (s->max_products < 1)
            throw std::invalid_argument("null spec: max_products must be >= 1");
    } else if (const auto* p = std::get_if<PermutationSpec>(&spec.method)) {
        if (p->num_perms < 100)
            throw std::invalid_argument("null spec: permutation count must be >= 100");
    } else {
        if (spec.alpha > 0.215)
            throw std::invalid_argument(
                "null spec: quadratic-form bound is valid only for 0 < alpha <= 0.215");
    }
}

struct MethodDetails {
    std::size_t eigenvalues_x = 0;  // pooled spectrum for the two-sample test
    std::size_t eigenvalues_y = 0;
    std::size_t products_used = 0;
    double discarded_product_mass = 0.0;  // fraction of sum(lambda_i * eta_j) truncated
    std::size_t permutations = 0;
    std::size_t null_draws = 0;
};

struct TestResult {
    double statistic = 0.0;
    double threshold = 0.0;
    std::optional<double> p_value;
    bool reject = false;
    MethodDetails details;
    RngSpec seed;
};

struct NullEstimate {
    double threshold = 0.0;
    std::vector<double> samples;  // sorted ascending
    MethodDetails details;
};

// Threshold for a mean-one quadratic form of Gaussians, rescaled by a
// plug-in estimate of the statistic's null mean.
inline double qform_threshold(const NullSpec& spec, double mean_estimate) {
    if (!std::holds_alternative<QFormBoundSpec>(spec.method))
        throw std::invalid_argument("qform_threshold: spec does not request the bound");
    validate_null_spec(spec);
    if (!(mean_estimate > 0.0))
        throw std::invalid_argument("qform_threshold: mean estimate must be positive");
    const double z = normal_quantile(1.0 - spec.alpha / 2.0);
    return mean_estimate * z * z;
}

namespace detail {

// Eigenvalues of the centred gram, clamped at zero, divided by scale_div,
// then filtered to those above eig_rel_tol relative to the largest.
inline std::vector<double> spectral_coefficients(const SymMatrix& gram, double scale_div,
                                                 double eig_rel_tol) {
    auto eig = sym_eigenvalues(center_gram(gram));
    std::vector<double> coeffs;
    coeffs.reserve(eig.size());
    for (double v : eig) coeffs.push_back(std::max(v, 0.0) / scale_div);
    const double top = coeffs.empty() ? 0.0 : coeffs.front();
    std::vector<double> kept;
    for (double v : coeffs)
        if (v > eig_rel_tol * top && v > 0.0) kept.push_back(v);
    return kept;
}

inline std::vector<double> chi_square_mixture_draws(const std::vector<double>& coeffs,
                                                    std::size_t num_draws, Rng& rng) {
    std::vector<double> draws(num_draws, 0.0);
    for (std::size_t t = 0; t < num_draws; ++t) {
        double s = 0.0;
        for (double c : coeffs) {
            const double z = rng.normal();
            s += c * z * z;
        }
        draws[t] = s;
    }
    return draws;
}

inline double count_at_least(const std::vector<double>& sorted_ascending, double value) {
    const auto it =
        std::lower_bound(sorted_ascending.begin(), sorted_ascending.end(), value);
    return double(sorted_ascending.end() - it);
}

}  // namespace detail

// Null law of (m/2) * mmd-vstat on the pooled two-sample gram: a weighted
// chi-square mixture with weights eig(HKH) / (2m).
inline NullEstimate spectral_null_two_sample_from_gram(const SymMatrix& pooled_gram,
                                                       std::size_t m, const NullSpec& spec,
                                                       const RngSpec& rng_spec) {
    validate_null_spec(spec);
    const auto& cfg = std::get<SpectralSpec>(spec.method);
    if (pooled_gram.size() != 2 * m)
        throw std::invalid_argument(
            "spectral two-sample null: pooled gram must have 2m rows (requires m == n)");
    const auto coeffs =
        detail::spectral_coefficients(pooled_gram, 2.0 * double(m), cfg.eig_rel_tol);
    Rng rng(rng_spec);
    NullEstimate out;
    out.samples = detail::chi_square_mixture_draws(coeffs, cfg.num_draws, rng);
    std::sort(out.samples.begin(), out.samples.end());
    out.threshold = empirical_quantile(out.samples, 1.0 - spec.alpha);
    out.details.eigenvalues_x = coeffs.size();
    out.details.null_draws = cfg.num_draws;
    return out;
}

inline NullEstimate spectral_null_two_sample(const KernelSpec& k, const Matrix& pooled,
                                             std::size_t m, const NullSpec& spec,
                                             const RngSpec& rng_spec) {
    if (pooled.rows() != 2 * m)
        throw std::invalid_argument(
            "spectral two-sample null: pooled sample must have 2m rows (requires m == n)");
    return spectral_null_two_sample_from_gram(gram_matrix(k, pooled), m, spec, rng_spec);
}

// Null law of m * HSIC: coefficients are products of the two marginal
// spectra eig(HKxH)/m and eig(HKyH)/m, truncated to the largest
// max_products terms.
inline NullEstimate spectral_null_independence_from_grams(const SymMatrix& gx,
                                                          const SymMatrix& gy,
                                                          const NullSpec& spec,
                                                          const RngSpec& rng_spec) {
    validate_null_spec(spec);
    const auto& cfg = std::get<SpectralSpec>(spec.method);
    if (gx.size() != gy.size())
        throw std::invalid_argument("spectral independence null: gram sizes differ");
    const double m = double(gx.size());
    const auto lambda = detail::spectral_coefficients(gx, m, cfg.eig_rel_tol);
    const auto eta = detail::spectral_coefficients(gy, m, cfg.eig_rel_tol);

    std::vector<double> products;
    products.reserve(lambda.size() * eta.size());
    for (double l : lambda)
        for (double e : eta) products.push_back(l * e);
    std::sort(products.begin(), products.end(), std::greater<>());

    double total_mass = 0.0;
    for (double p : products) total_mass += p;
    if (products.size() > cfg.max_products) products.resize(cfg.max_products);
    double kept_mass = 0.0;
    for (double p : products) kept_mass += p;

    Rng rng(rng_spec);
    NullEstimate out;
    out.samples = detail::chi_square_mixture_draws(products, cfg.num_draws, rng);
    std::sort(out.samples.begin(), out.samples.end());
    out.threshold = empirical_quantile(out.samples, 1.0 - spec.alpha);
    out.details.eigenvalues_x = lambda.size();
    out.details.eigenvalues_y = eta.size();
    out.details.products_used = products.size();
    out.details.discarded_product_mass =
        total_mass > 0.0 ? 1.0 - kept_mass / total_mass : 0.0;
    out.details.null_draws = cfg.num_draws;
    return out;
}

inline NullEstimate spectral_null_independence(const KernelSpec& kx, const KernelSpec& ky,
                                               const PairedSample& s, const NullSpec& spec,
                                               const RngSpec& rng_spec) {
    if (s.x.rows() < 2)
        throw std::invalid_argument("spectral independence null: need m >= 2");
    return spectral_null_independence_from_grams(gram_matrix(kx, s.x), gram_matrix(ky, s.y),
                                                 spec, rng_spec);
}

// Monte Carlo null from relabelled data. The callable draws one statistic
// under a random relabelling using the supplied generator.
template <typename StatFn>
NullEstimate permutation_null(StatFn&& permuted_statistic, const NullSpec& spec, Rng& rng) {
    validate_null_spec(spec);
    const auto& cfg = std::get<PermutationSpec>(spec.method);
    NullEstimate out;
    out.samples.reserve(cfg.num_perms);
    for (std::size_t b = 0; b < cfg.num_perms; ++b)
        out.samples.push_back(permuted_statistic(rng));
    std::sort(out.samples.begin(), out.samples.end());
    out.threshold = empirical_quantile(out.samples, 1.0 - spec.alpha);
    out.details.permutations = cfg.num_perms;
    return out;
}

// (1 + #{null >= observed}) / (B + 1); never zero.
inline double permutation_p_value(const std::vector<double>& sorted_null, double observed) {
    return (1.0 + detail::count_at_least(sorted_null, observed)) /
           (double(sorted_null.size()) + 1.0);
}

namespace detail {

// m*n/(m+n) * mmd: reduces to (m/2) * mmd when the sizes agree.
inline double two_sample_scale(std::size_t m, std::size_t n) {
    return double(m) * double(n) / double(m + n);
}

// Squared-norm V-statistics are nonnegative for PSD kernels; clip the
// floating-point noise so degenerate data yields exact zeros.
inline double clip_stat(double v) { return v > 0.0 ? v : 0.0; }

// Scaled two-sample statistic for an index-relabelled pooled gram; the
// first m entries of idx form the first sample.
inline double two_sample_stat_from_partition(const SymMatrix& g,
                                             const std::vector<std::size_t>& idx,
                                             std::size_t m) {
    const std::size_t total = idx.size();
    const std::size_t n = total - m;
    double szz = 0.0, sww = 0.0, sall = 0.0;
    for (std::size_t a = 0; a < m; ++a) {
        const double* row = &g.data()[idx[a] * total];
        for (std::size_t b = 0; b < m; ++b) szz += row[idx[b]];
    }
    for (std::size_t a = m; a < total; ++a) {
        const double* row = &g.data()[idx[a] * total];
        for (std::size_t b = m; b < total; ++b) sww += row[idx[b]];
    }
    for (const double v : g.data()) sall += v;
    const double szw = 0.5 * (sall - szz - sww);
    const double mmd = szz / (double(m) * m) + sww / (double(n) * n) -
                       2.0 * szw / (double(m) * n);
    return clip_stat(two_sample_scale(m, n) * mmd);
}

inline double hsic_stat_from_centered(const SymMatrix& cx, const SymMatrix& cy,
                                      const std::vector<std::size_t>& perm) {
    const std::size_t m = cx.size();
    double s = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        const double* row = &cx.data()[i * m];
        const double* prow = &cy.data()[perm[i] * m];
        for (std::size_t j = 0; j < m; ++j) s += row[j] * prow[perm[j]];
    }
    return clip_stat(s / double(m));  // m * (1/m^2) * sum
}

}  // namespace detail

// Two-sample test of H0: P = Q with the scaled statistic
// m*n/(m+n) * mmd-vstat and the calibration chosen by `spec`.
inline TestResult two_sample_test(const KernelSpec& k, const Matrix& z, const Matrix& w,
                                  const NullSpec& spec, const RngSpec& rng_spec) {
    validate_null_spec(spec);
    if (z.rows() == 0 || w.rows() == 0)
        throw std::invalid_argument("two_sample_test: empty sample");
    const std::size_t m = z.rows(), n = w.rows();
    const Matrix pooled = Matrix::vstack(z, w);
    const SymMatrix g = gram_matrix(k, pooled);
    const double statistic =
        detail::clip_stat(detail::two_sample_scale(m, n) * mmd_from_pooled_gram(g, m, n));

    TestResult result;
    result.statistic = statistic;
    result.seed = rng_spec;

    if (std::holds_alternative<SpectralSpec>(spec.method)) {
        if (m != n)
            throw std::invalid_argument(
                "two_sample_test: the spectral null requires m == n");
        auto null = spectral_null_two_sample_from_gram(g, m, spec, rng_spec);
        result.threshold = null.threshold;
        result.p_value = detail::count_at_least(null.samples, statistic) /
                         double(null.samples.size());
        result.details = null.details;
    } else if (std::holds_alternative<PermutationSpec>(spec.method)) {
        std::vector<std::size_t> idx(m + n);
        std::iota(idx.begin(), idx.end(), std::size_t{0});
        Rng rng(rng_spec);
        auto null = permutation_null(
            [&](Rng& r) {
                r.shuffle(std::span(idx));
                return detail::two_sample_stat_from_partition(g, idx, m);
            },
            spec, rng);
        result.threshold = null.threshold;
        result.p_value = permutation_p_value(null.samples, statistic);
        result.details = null.details;
    } else {
        const double mean_estimate = center_gram(g).trace() / double(m + n);
        result.threshold = mean_estimate > 0.0 ? qform_threshold(spec, mean_estimate) : 0.0;
    }

    result.reject = result.statistic > result.threshold;
    return result;
}

// Independence test of H0: X independent of Y with the scaled statistic
// m * HSIC and the calibration chosen by `spec`.
inline TestResult independence_test(const KernelSpec& kx, const KernelSpec& ky,
                                    const PairedSample& s, const NullSpec& spec,
                                    const RngSpec& rng_spec) {
    validate_null_spec(spec);
    const std::size_t m = s.x.rows();
    if (m < 2 && !std::holds_alternative<QFormBoundSpec>(spec.method))
        throw std::invalid_argument("independence_test: need m >= 2");

    const SymMatrix gx = gram_matrix(kx, s.x);
    const SymMatrix gy = gram_matrix(ky, s.y);
    const SymMatrix cx = center_gram(gx);
    const SymMatrix cy = center_gram(gy);

    NeumaierSum dot;
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < m; ++j) dot.add(cx(i, j) * cy(i, j));
    const double statistic = detail::clip_stat(dot.value() / double(m));  // m * hsic

    TestResult result;
    result.statistic = statistic;
    result.seed = rng_spec;

    if (std::holds_alternative<SpectralSpec>(spec.method)) {
        auto null = spectral_null_independence_from_grams(gx, gy, spec, rng_spec);
        result.threshold = null.threshold;
        result.p_value = detail::count_at_least(null.samples, statistic) /
                         double(null.samples.size());
        result.details = null.details;
    } else if (std::holds_alternative<PermutationSpec>(spec.method)) {
        std::vector<std::size_t> perm(m);
        std::iota(perm.begin(), perm.end(), std::size_t{0});
        Rng rng(rng_spec);
        auto null = permutation_null(
            [&](Rng& r) {
                r.shuffle(std::span(perm));
                return detail::hsic_stat_from_centered(cx, cy, perm);
            },
            spec, rng);
        result.threshold = null.threshold;
        result.p_value = permutation_p_value(null.samples, statistic);
        result.details = null.details;
    } else {
        const double mean_estimate = (cx.trace() / double(m)) * (cy.trace() / double(m));
        result.threshold = mean_estimate > 0.0 ? qform_threshold(spec, mean_estimate) : 0.0;
    }

    result.reject = result.statistic > result.threshold;
    return result;
}

}  // namespace kerndist
