#pragma once

#include <charconv>
#include <cmath>
#include <cstddef>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "kerndist/linalg.hpp"
#include "kerndist/matrix.hpp"
#include "kerndist/stats.hpp"

namespace kerndist {

struct KernelSpec;

// rho_q(z, z') = ||z - z'||^q. Negative type holds for 0 < q <= 2; larger
// exponents are representable so negative_type_form can exhibit violations,
// but every estimator rejects them.
struct EuclideanPower {
    double exponent;
};

// rho(z, z') = k(z,z) + k(z',z') - 2 k(z,z') for a fixed kernel k.
struct KernelGenerated {
    std::shared_ptr<const KernelSpec> kernel;
};

struct SemimetricSpec {
    std::variant<EuclideanPower, KernelGenerated> form;
};

// k(z, z') = [rho(z, z0) + rho(z', z0) - rho(z, z')] / 2. An empty center
// means the origin of whatever dimension the points have.
struct DistanceInduced {
    SemimetricSpec rho;
    std::vector<double> center;
};

struct MedianBandwidth {};

// exp(-||z - z'||^2 / (2 sigma^2)); the bandwidth may be deferred to the
// median pairwise distance of the data it will run on.
struct Gaussian {
    std::variant<double, MedianBandwidth> bandwidth;
};

// k((x,y), (x',y')) = kx(x,x') * ky(y,y') on concatenated rows; columns
// [0, split) belong to x.
struct ProductKernel {
    std::shared_ptr<const KernelSpec> kx;
    std::shared_ptr<const KernelSpec> ky;
    std::size_t split;
};

// k~(z,z') = k(z,z') + mean_ij k(w_i,w_j) - mean_i k(z,w_i) - mean_i k(z',w_i)
// over the reference points w: the base kernel centred at their empirical
// measure.
struct CenteredAtEmpirical {
    std::shared_ptr<const KernelSpec> base;
    std::shared_ptr<const Matrix> reference;
    double reference_mean;  // mean_ij base(w_i, w_j), fixed at construction
};

struct KernelSpec {
    std::variant<DistanceInduced, Gaussian, ProductKernel, CenteredAtEmpirical> form;
};

inline SemimetricSpec euclidean_power(double q) {
    if (!(q > 0.0) || !std::isfinite(q))
        throw std::invalid_argument("euclidean_power: exponent must be positive and finite");
    return {EuclideanPower{q}};
}

inline SemimetricSpec semimetric_from_kernel(KernelSpec k) {
    return {KernelGenerated{std::make_shared<const KernelSpec>(std::move(k))}};
}

inline KernelSpec distance_induced(SemimetricSpec rho, std::vector<double> center = {}) {
    return {DistanceInduced{std::move(rho), std::move(center)}};
}

inline KernelSpec gaussian(double sigma) {
    if (!(sigma > 0.0) || !std::isfinite(sigma))
        throw std::invalid_argument("gaussian: bandwidth must be positive and finite");
    return {Gaussian{sigma}};
}

inline KernelSpec gaussian_median() { return {Gaussian{MedianBandwidth{}}}; }

inline KernelSpec product_kernel(KernelSpec kx, KernelSpec ky, std::size_t split) {
    return {ProductKernel{std::make_shared<const KernelSpec>(std::move(kx)),
                          std::make_shared<const KernelSpec>(std::move(ky)), split}};
}

inline double kernel_eval(const KernelSpec& k, std::span<const double> a,
                          std::span<const double> b);

inline KernelSpec centered_at_empirical(KernelSpec base, Matrix reference) {
    if (reference.rows() == 0)
        throw std::invalid_argument("centered_at_empirical: reference sample is empty");
    auto base_ptr = std::make_shared<const KernelSpec>(std::move(base));
    auto ref_ptr = std::make_shared<const Matrix>(std::move(reference));
    const std::size_t r = ref_ptr->rows();
    NeumaierSum total;
    for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < r; ++j)
            total.add(kernel_eval(*base_ptr, ref_ptr->row(i), ref_ptr->row(j)));
    const double mean = total.value() / (double(r) * double(r));
    return {CenteredAtEmpirical{std::move(base_ptr), std::move(ref_ptr), mean}};
}

namespace detail {

inline void require_same_dim(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size())
        throw std::invalid_argument("points have mismatched dimensions");
}

inline double sq_dist(std::span<const double> a, std::span<const double> b) {
    require_same_dim(a, b);
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        s += d * d;
    }
    return s;
}

inline double euclidean_power_eval(double q, std::span<const double> a,
                                   std::span<const double> b) {
    const double d2 = sq_dist(a, b);
    if (q == 2.0) return d2;
    if (q == 1.0) return std::sqrt(d2);
    return std::pow(d2, 0.5 * q);
}

inline double euclidean_power_to_origin(double q, std::span<const double> a) {
    double s = 0.0;
    for (double v : a) s += v * v;
    if (q == 2.0) return s;
    if (q == 1.0) return std::sqrt(s);
    return std::pow(s, 0.5 * q);
}

}  // namespace detail

inline double semimetric_eval(const SemimetricSpec& rho, std::span<const double> a,
                              std::span<const double> b) {
    if (const auto* ep = std::get_if<EuclideanPower>(&rho.form))
        return detail::euclidean_power_eval(ep->exponent, a, b);
    const auto& gen = std::get<KernelGenerated>(rho.form);
    return kernel_eval(*gen.kernel, a, a) + kernel_eval(*gen.kernel, b, b) -
           2.0 * kernel_eval(*gen.kernel, a, b);
}

namespace detail {

inline double semimetric_to_center(const SemimetricSpec& rho, std::span<const double> z,
                                   const std::vector<double>& center) {
    if (center.empty()) {
        if (const auto* ep = std::get_if<EuclideanPower>(&rho.form))
            return euclidean_power_to_origin(ep->exponent, z);
        const std::vector<double> origin(z.size(), 0.0);
        return semimetric_eval(rho, z, origin);
    }
    if (center.size() != z.size())
        throw std::invalid_argument("distance-induced kernel: center dimension mismatch");
    return semimetric_eval(rho, z, center);
}

}  // namespace detail

inline double kernel_eval(const KernelSpec& k, std::span<const double> a,
                          std::span<const double> b) {
    struct Visitor {
        std::span<const double> a, b;

        double operator()(const DistanceInduced& di) const {
            const double ra = detail::semimetric_to_center(di.rho, a, di.center);
            const double rb = detail::semimetric_to_center(di.rho, b, di.center);
            return 0.5 * (ra + rb - semimetric_eval(di.rho, a, b));
        }

        double operator()(const Gaussian& g) const {
            const double* sigma = std::get_if<double>(&g.bandwidth);
            if (sigma == nullptr)
                throw std::logic_error(
                    "gaussian kernel: median bandwidth not resolved against data");
            return std::exp(-detail::sq_dist(a, b) / (2.0 * *sigma * *sigma));
        }

        double operator()(const ProductKernel& p) const {
            detail::require_same_dim(a, b);
            if (p.split == 0 || p.split >= a.size())
                throw std::invalid_argument("product kernel: split outside point dimension");
            return kernel_eval(*p.kx, a.first(p.split), b.first(p.split)) *
                   kernel_eval(*p.ky, a.subspan(p.split), b.subspan(p.split));
        }

        double operator()(const CenteredAtEmpirical& c) const {
            const Matrix& w = *c.reference;
            NeumaierSum ma, mb;
            for (std::size_t i = 0; i < w.rows(); ++i) {
                ma.add(kernel_eval(*c.base, a, w.row(i)));
                mb.add(kernel_eval(*c.base, b, w.row(i)));
            }
            const double r = double(w.rows());
            return kernel_eval(*c.base, a, b) + c.reference_mean - ma.value() / r -
                   mb.value() / r;
        }
    };
    return std::visit(Visitor{a, b}, k.form);
}

// Double sum over all pairs with zero-sum weights; for a semimetric of
// negative type the value can never be significantly positive.
inline double negative_type_form(const SemimetricSpec& rho, const Matrix& points,
                                 std::span<const double> weights) {
    if (weights.size() != points.rows())
        throw std::invalid_argument("negative_type_form: one weight per point required");
    NeumaierSum wsum;
    for (double w : weights) wsum.add(w);
    if (std::abs(wsum.value()) > 1e-12)
        throw std::invalid_argument("negative_type_form: weights must sum to zero");
    NeumaierSum total;
    for (std::size_t i = 0; i < points.rows(); ++i)
        for (std::size_t j = 0; j < points.rows(); ++j)
            total.add(weights[i] * weights[j] *
                      semimetric_eval(rho, points.row(i), points.row(j)));
    return total.value();
}

inline bool has_unresolved_bandwidth(const KernelSpec& k);

inline bool has_unresolved_bandwidth(const SemimetricSpec& rho) {
    if (const auto* gen = std::get_if<KernelGenerated>(&rho.form))
        return has_unresolved_bandwidth(*gen->kernel);
    return false;
}

inline bool has_unresolved_bandwidth(const KernelSpec& k) {
    struct Visitor {
        bool operator()(const DistanceInduced& di) const {
            return has_unresolved_bandwidth(di.rho);
        }
        bool operator()(const Gaussian& g) const {
            return std::holds_alternative<MedianBandwidth>(g.bandwidth);
        }
        bool operator()(const ProductKernel& p) const {
            return has_unresolved_bandwidth(*p.kx) || has_unresolved_bandwidth(*p.ky);
        }
        bool operator()(const CenteredAtEmpirical& c) const {
            return has_unresolved_bandwidth(*c.base);
        }
    };
    return std::visit(Visitor{}, k.form);
}

inline KernelSpec resolve_bandwidth(const KernelSpec& k, const Matrix& pooled);

inline SemimetricSpec resolve_bandwidth(const SemimetricSpec& rho, const Matrix& pooled) {
    if (const auto* gen = std::get_if<KernelGenerated>(&rho.form))
        return semimetric_from_kernel(resolve_bandwidth(*gen->kernel, pooled));
    return rho;
}

// Replace every median-heuristic bandwidth by the median pairwise distance
// of the pooled data (with fallback 1 when that median is zero). Product
// kernels resolve each block against its own column slice.
inline KernelSpec resolve_bandwidth(const KernelSpec& k, const Matrix& pooled) {
    struct Visitor {
        const Matrix& pooled;

        KernelSpec operator()(const DistanceInduced& di) const {
            return distance_induced(resolve_bandwidth(di.rho, pooled), di.center);
        }
        KernelSpec operator()(const Gaussian& g) const {
            if (const double* sigma = std::get_if<double>(&g.bandwidth))
                return gaussian(*sigma);
            const double med = median_pairwise_distance(pooled);
            return gaussian(med > 0.0 ? med : 1.0);
        }
        KernelSpec operator()(const ProductKernel& p) const {
            if (p.split == 0 || p.split >= pooled.cols())
                throw std::invalid_argument("product kernel: split outside point dimension");
            return product_kernel(
                resolve_bandwidth(*p.kx, pooled.slice_cols(0, p.split)),
                resolve_bandwidth(*p.ky, pooled.slice_cols(p.split, pooled.cols())), p.split);
        }
        KernelSpec operator()(const CenteredAtEmpirical& c) const {
            return centered_at_empirical(resolve_bandwidth(*c.base, pooled), *c.reference);
        }
    };
    return std::visit(Visitor{pooled}, k.form);
}

namespace detail {

inline void require_finite_sample(const Matrix& x) {
    if (!x.all_finite())
        throw std::invalid_argument("gram_matrix: sample contains non-finite values");
}

template <typename Eval>
SymMatrix square_gram(const Matrix& x, Eval&& eval) {
    if (x.rows() == 0) throw std::invalid_argument("gram_matrix: empty sample");
    require_finite_sample(x);
    SymMatrix g(x.rows());
    for (std::size_t i = 0; i < x.rows(); ++i)
        for (std::size_t j = i; j < x.rows(); ++j) g.set(i, j, eval(x.row(i), x.row(j)));
    return g;
}

template <typename Eval>
Matrix rect_gram(const Matrix& x, const Matrix& y, Eval&& eval) {
    if (x.rows() == 0 || y.rows() == 0)
        throw std::invalid_argument("gram_matrix: empty sample");
    require_finite_sample(x);
    require_finite_sample(y);
    Matrix g(x.rows(), y.rows());
    for (std::size_t i = 0; i < x.rows(); ++i)
        for (std::size_t j = 0; j < y.rows(); ++j) g(i, j) = eval(x.row(i), y.row(j));
    return g;
}

}  // namespace detail

inline SymMatrix gram_matrix(const KernelSpec& k, const Matrix& x) {
    if (x.rows() == 0) throw std::invalid_argument("gram_matrix: empty sample");
    const KernelSpec kr = has_unresolved_bandwidth(k) ? resolve_bandwidth(k, x) : k;
    return detail::square_gram(x, [&](auto a, auto b) { return kernel_eval(kr, a, b); });
}

inline Matrix gram_matrix(const KernelSpec& k, const Matrix& x, const Matrix& y) {
    if (x.rows() == 0 || y.rows() == 0)
        throw std::invalid_argument("gram_matrix: empty sample");
    const KernelSpec kr =
        has_unresolved_bandwidth(k) ? resolve_bandwidth(k, Matrix::vstack(x, y)) : k;
    return detail::rect_gram(x, y, [&](auto a, auto b) { return kernel_eval(kr, a, b); });
}

inline SymMatrix gram_matrix(const SemimetricSpec& rho, const Matrix& x) {
    if (x.rows() == 0) throw std::invalid_argument("gram_matrix: empty sample");
    const SemimetricSpec rr = has_unresolved_bandwidth(rho) ? resolve_bandwidth(rho, x) : rho;
    return detail::square_gram(x, [&](auto a, auto b) { return semimetric_eval(rr, a, b); });
}

inline Matrix gram_matrix(const SemimetricSpec& rho, const Matrix& x, const Matrix& y) {
    if (x.rows() == 0 || y.rows() == 0)
        throw std::invalid_argument("gram_matrix: empty sample");
    const SemimetricSpec rr =
        has_unresolved_bandwidth(rho) ? resolve_bandwidth(rho, Matrix::vstack(x, y)) : rho;
    return detail::rect_gram(x, y, [&](auto a, auto b) { return semimetric_eval(rr, a, b); });
}

// Estimators only accept exponents with the negative-type guarantee.
inline void require_negative_type(const SemimetricSpec& rho) {
    if (const auto* ep = std::get_if<EuclideanPower>(&rho.form)) {
        if (!(ep->exponent > 0.0 && ep->exponent <= 2.0))
            throw std::invalid_argument(
                "semimetric exponent must lie in (0, 2] for negative type");
    }
}

// ---------------------------------------------------------------------------
// Spec-string grammar: dist:q=1.0[:center=origin], gauss:median,
// gauss:sigma=2.5

namespace detail {

inline double parse_real(std::string_view text, std::string_view what) {
    double value = 0.0;
    const char* first = text.data();
    const char* last = text.data() + text.size();
    auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc{} || ptr != last)
        throw std::invalid_argument("kernel spec: bad value for " + std::string(what) + ": '" +
                                    std::string(text) + "'");
    return value;
}

inline std::vector<std::string_view> split(std::string_view s, char sep) {
    std::vector<std::string_view> parts;
    std::size_t start = 0;
    while (true) {
        const std::size_t pos = s.find(sep, start);
        if (pos == std::string_view::npos) {
            parts.push_back(s.substr(start));
            return parts;
        }
        parts.push_back(s.substr(start, pos - start));
        start = pos + 1;
    }
}

}  // namespace detail

inline KernelSpec parse_kernel_spec(std::string_view text) {
    const auto parts = detail::split(text, ':');
    const std::string_view head = parts.front();
    if (head == "dist") {
        double q = 0.0;
        bool have_q = false;
        for (std::size_t i = 1; i < parts.size(); ++i) {
            const auto kv = detail::split(parts[i], '=');
            if (kv.size() == 2 && kv[0] == "q") {
                q = detail::parse_real(kv[1], "q");
                have_q = true;
            } else if (kv.size() == 2 && kv[0] == "center") {
                if (kv[1] != "origin")
                    throw std::invalid_argument(
                        "kernel spec: only center=origin is supported: '" +
                        std::string(text) + "'");
            } else {
                throw std::invalid_argument("kernel spec: unknown option '" +
                                            std::string(parts[i]) + "'");
            }
        }
        if (!have_q)
            throw std::invalid_argument("kernel spec: dist requires q=<exponent>: '" +
                                        std::string(text) + "'");
        return distance_induced(euclidean_power(q));
    }
    if (head == "gauss") {
        if (parts.size() != 2)
            throw std::invalid_argument(
                "kernel spec: gauss requires 'median' or sigma=<value>: '" +
                std::string(text) + "'");
        if (parts[1] == "median") return gaussian_median();
        const auto kv = detail::split(parts[1], '=');
        if (kv.size() == 2 && kv[0] == "sigma") return gaussian(detail::parse_real(kv[1], "sigma"));
        throw std::invalid_argument("kernel spec: unknown option '" + std::string(parts[1]) +
                                    "'");
    }
    throw std::invalid_argument("kernel spec: unknown kernel family '" + std::string(head) +
                                "'");
}

}  // namespace kerndist
