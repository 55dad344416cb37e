// Acceptance suite: end-to-end checks of the statistical guarantees this
// library is built around, printed one line per criterion. Exit status is
// the number of failed criteria.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

#include "kerndist/cli.hpp"
#include "kerndist/datagen.hpp"
#include "kerndist/testing.hpp"
#include "oracles.hpp"

using namespace kerndist;

namespace {

Matrix random_sample(std::size_t m, std::size_t d, Rng& rng, double scale = 1.5) {
    Matrix x(m, d);
    for (auto& v : x.data()) v = scale * rng.normal();
    return x;
}

std::vector<double> random_point(std::size_t d, Rng& rng) {
    std::vector<double> p(d);
    for (auto& v : p) v = rng.normal();
    return p;
}

struct RateResult {
    double rate = 0.0;
    std::size_t rejections = 0;
};

template <typename MakeResult>
RateResult rejection_rate(std::size_t trials, MakeResult&& run_trial) {
    std::vector<std::uint8_t> rejected(trials, 0);
    detail::parallel_for(trials, 0, [&](std::size_t t) { rejected[t] = run_trial(t) ? 1 : 0; });
    RateResult out;
    for (auto r : rejected) out.rejections += r;
    out.rate = double(out.rejections) / double(trials);
    return out;
}

bool criterion_energy_mmd_equivalence(std::string& note) {
    Rng rng(1001);
    const double qs[] = {0.5, 1.0, 1.5, 2.0};
    double worst_rel = 0.0, worst_center = 0.0;
    for (int rep = 0; rep < 100; ++rep) {
        const double q = qs[rep % 4];
        const std::size_t m = 2 + rng.below(19);
        const std::size_t n = 2 + rng.below(19);
        const std::size_t d = 1 + rng.below(5);
        auto z = random_sample(m, d, rng);
        auto w = random_sample(n, d, rng);
        auto rho = euclidean_power(q);

        const double energy = energy_distance_vstat(rho, z, w);
        const double mmd_origin = mmd_vstat(distance_induced(rho), z, w);
        const double mmd_center = mmd_vstat(distance_induced(rho, random_point(d, rng)), z, w);

        worst_rel = std::max(worst_rel, std::abs(energy - 2.0 * mmd_origin) /
                                            (1.0 + std::abs(energy)));
        worst_center = std::max(worst_center, std::abs(mmd_origin - mmd_center));
    }
    char buf[160];
    std::snprintf(buf, sizeof buf, "max rel gap %.2e (<=1e-9), max center gap %.2e (<=1e-10)",
                  worst_rel, worst_center);
    note = buf;
    return worst_rel <= 1e-9 && worst_center <= 1e-10;
}

bool criterion_dcov_hsic_equivalence(std::string& note) {
    Rng rng(1002);
    const double qs[] = {0.5, 1.0, 1.5, 2.0};
    double worst_rel = 0.0;
    for (int rep = 0; rep < 100; ++rep) {
        const double qx = qs[rep % 4];
        const double qy = qs[(rep + 1) % 4];
        const std::size_t m = 2 + rng.below(19);
        const std::size_t dx = 1 + rng.below(5);
        const std::size_t dy = 1 + rng.below(5);
        PairedSample s(random_sample(m, dx, rng), random_sample(m, dy, rng));
        auto rx = euclidean_power(qx);
        auto ry = euclidean_power(qy);

        const double dcov = dcov_vstat(rx, ry, s);
        const double hsic = hsic_vstat(distance_induced(rx, random_point(dx, rng)),
                                       distance_induced(ry, random_point(dy, rng)), s);
        worst_rel = std::max(worst_rel,
                             std::abs(dcov - 4.0 * hsic) / (1.0 + std::abs(dcov)));
    }

    // corollary cross-check: dcov equals the energy distance between the
    // empirical joint and product measures w.r.t. the semimetric whose half
    // is generated by the product kernel
    double worst_corollary = 0.0;
    for (int rep = 0; rep < 10; ++rep) {
        const std::size_t m = 3 + rng.below(5);
        PairedSample s(random_sample(m, 2, rng), random_sample(m, 1, rng));
        auto rx = euclidean_power(qs[rep % 4]);
        auto ry = euclidean_power(1.0);
        const double dcov = dcov_vstat(rx, ry, s);
        const double energy = oracle::naive_energy_joint_vs_product(
            distance_induced(rx), distance_induced(ry), s);
        worst_corollary = std::max(worst_corollary,
                                   std::abs(dcov - energy) / (1.0 + std::abs(dcov)));
    }
    char buf[160];
    std::snprintf(buf, sizeof buf, "max rel gap %.2e, corollary gap %.2e (<=1e-9)",
                  worst_rel, worst_corollary);
    note = buf;
    return worst_rel <= 1e-9 && worst_corollary <= 1e-9;
}

bool criterion_brute_force_oracles(std::string& note) {
    Rng rng(1003);
    double worst = 0.0;
    for (int rep = 0; rep < 50; ++rep) {
        const std::size_t m = 2 + rng.below(9);
        const std::size_t n = 2 + rng.below(9);
        const std::size_t d = 1 + rng.below(3);
        auto z = random_sample(m, d, rng);
        auto w = random_sample(n, d, rng);
        const KernelSpec k = rep % 2 == 0
                                 ? gaussian(0.5 + 2.0 * rng.uniform())
                                 : distance_induced(euclidean_power(0.5 + rng.uniform()));
        worst = std::max(worst, std::abs(mmd_vstat(k, z, w) - oracle::naive_mmd(k, z, w)));

        PairedSample s(random_sample(m, d, rng), random_sample(m, 1 + rng.below(3), rng));
        worst = std::max(worst,
                         std::abs(hsic_vstat(k, k, s) - oracle::naive_hsic(k, k, s)));
    }
    char buf[120];
    std::snprintf(buf, sizeof buf, "max abs gap vs naive loops %.2e (<=1e-12)", worst);
    note = buf;
    return worst <= 1e-12;
}

bool criterion_type_one_error(std::string& note) {
    const std::uint64_t seed = 42;
    auto k = distance_induced(euclidean_power(1.0));
    const std::size_t trials = 300;

    ScenarioSpec null_two{MeanShift{5, 0.0}, 100};
    auto two_sample_rate = [&](const NullSpec& spec, std::uint64_t role) {
        return rejection_rate(trials, [&](std::size_t t) {
            auto [z, w] = gen_two_sample(null_two, detail::derive_stream(seed, 1, 0, t));
            return two_sample_test(k, z, w, spec, detail::derive_stream(seed, role, 0, t))
                .reject;
        });
    };
    const auto spectral = two_sample_rate(spectral_null_spec(0.05, 2000), 2);
    const auto permutation = two_sample_rate(permutation_null_spec(0.05, 500), 3);
    const auto qform = two_sample_rate(qform_null_spec(0.05), 4);

    ScenarioSpec null_indep{RotatedPair{0.0, 1, RotMarginal::Uniform}, 100};
    auto indep_rate = [&](const NullSpec& spec, std::uint64_t role) {
        return rejection_rate(trials, [&](std::size_t t) {
            auto s = gen_dependence(null_indep, detail::derive_stream(seed, 5, 0, t));
            return independence_test(k, k, s, spec, detail::derive_stream(seed, role, 0, t))
                .reject;
        });
    };
    const auto ispec = indep_rate(spectral_null_spec(0.05, 2000), 6);
    const auto iperm = indep_rate(permutation_null_spec(0.05, 500), 7);

    char buf[240];
    std::snprintf(buf, sizeof buf,
                  "two-sample spec %.3f perm %.3f (in [0.02,0.09]) qform %.3f (<=0.02); "
                  "independence spec %.3f perm %.3f (in [0.02,0.09])",
                  spectral.rate, permutation.rate, qform.rate, ispec.rate, iperm.rate);
    note = buf;
    auto in_band = [](double r) { return r >= 0.02 && r <= 0.09; };
    return in_band(spectral.rate) && in_band(permutation.rate) && qform.rate <= 0.02 &&
           in_band(ispec.rate) && in_band(iperm.rate);
}

bool criterion_power(std::string& note) {
    const std::uint64_t seed = 7;
    auto k = distance_induced(euclidean_power(1.0));
    ScenarioSpec shifted{MeanShift{1, 1.0}, 100};
    const auto power = rejection_rate(200, [&](std::size_t t) {
        auto [z, w] = gen_two_sample(shifted, detail::derive_stream(seed, 1, 0, t));
        return two_sample_test(k, z, w, spectral_null_spec(0.05, 2000),
                               detail::derive_stream(seed, 2, 0, t))
            .reject;
    });
    char buf[120];
    std::snprintf(buf, sizeof buf, "spectral power at delta=1, m=100: %.3f (>=0.9)",
                  power.rate);
    note = buf;
    return power.rate >= 0.9;
}

bool criterion_exponent_ordering(std::string& note) {
    const std::uint64_t seed = 11;
    ScenarioSpec scenario{SineDependence{2}, 128};
    auto power_for = [&](double q, std::uint64_t role) {
        auto k = distance_induced(euclidean_power(q));
        return rejection_rate(200, [&](std::size_t t) {
            auto s = gen_dependence(scenario, detail::derive_stream(seed, 1, 0, t));
            return independence_test(k, k, s, spectral_null_spec(0.05, 2000),
                                     detail::derive_stream(seed, role, 0, t))
                .reject;
        });
    };
    const auto small_q = power_for(1.0 / 3.0, 2);
    const auto unit_q = power_for(1.0, 3);
    char buf[160];
    std::snprintf(buf, sizeof buf, "power q=1/3: %.3f vs q=1: %.3f (small >= large - 0.05)",
                  small_q.rate, unit_q.rate);
    note = buf;
    return small_q.rate >= unit_q.rate - 0.05;
}

bool criterion_spectral_vs_permutation(std::string& note) {
    auto k = distance_induced(euclidean_power(1.0));
    double worst = 0.0;
    for (std::uint64_t i = 0; i < 20; ++i) {
        Rng rng(RngSpec{500 + i, 0});
        auto z = random_sample(100, 5, rng, 1.0);
        auto w = random_sample(100, 5, rng, 1.0);
        auto spectral = two_sample_test(k, z, w, spectral_null_spec(0.05), {600 + i, 0});
        auto perm =
            two_sample_test(k, z, w, permutation_null_spec(0.05, 1000), {600 + i, 1});
        const double rel = std::abs(spectral.threshold - perm.threshold) /
                           std::max(spectral.threshold, perm.threshold);
        worst = std::max(worst, rel);
    }
    char buf[120];
    std::snprintf(buf, sizeof buf, "max threshold disagreement %.1f%% (<=15%%)",
                  100.0 * worst);
    note = buf;
    return worst <= 0.15;
}

bool criterion_property_suites(std::string& note) {
    Rng rng(1008);

    // negative-type form never positive for q in (0, 2]
    double worst_form = -1e300;
    for (int rep = 0; rep < 1000; ++rep) {
        const std::size_t n = 2 + rng.below(15);
        const std::size_t d = 1 + rng.below(4);
        const double q = 0.05 + 1.95 * rng.uniform();
        auto pts = random_sample(n, d, rng, 3.0);
        std::vector<double> wts(n);
        double mean = 0.0;
        for (auto& v : wts) {
            v = rng.normal();
            mean += v;
        }
        mean /= double(n);
        double acc = 0.0;
        for (std::size_t i = 0; i + 1 < n; ++i) {
            wts[i] -= mean;
            acc += wts[i];
        }
        wts[n - 1] = -acc;
        worst_form = std::max(worst_form, negative_type_form(euclidean_power(q), pts, wts));
    }
    const bool form_ok = worst_form <= 1e-10;

    // the q=3 witness must surface as a clear violation
    const double witness = negative_type_form(
        euclidean_power(3.0), Matrix::column({0.0, 1.0, 2.0}), std::vector<double>{1.0, -2.0, 1.0});
    const bool witness_ok = std::abs(witness - 8.0) <= 1e-9 && witness > 1e-10;

    // empirically centred kernels embed their reference to zero
    double worst_center = 0.0;
    for (int rep = 0; rep < 20; ++rep) {
        auto ref = random_sample(3 + rng.below(10), 2, rng);
        auto base = rep % 2 == 0 ? gaussian(0.5 + rng.uniform())
                                 : distance_induced(euclidean_power(0.5 + 1.4 * rng.uniform()));
        auto g = gram_matrix(centered_at_empirical(base, ref), ref);
        NeumaierSum total;
        for (std::size_t i = 0; i < g.size(); ++i)
            for (std::size_t j = 0; j < g.size(); ++j) total.add(g(i, j));
        worst_center = std::max(
            worst_center, std::abs(total.value() / (double(g.size()) * double(g.size()))));
    }
    const bool center_ok = worst_center <= 1e-10;

    // eigensolver reconstruction over 200 random matrices up to n=100
    double worst_recon = 0.0;
    for (int rep = 0; rep < 200; ++rep) {
        const std::size_t n = 1 + rng.below(100);
        SymMatrix a(n);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = i; j < n; ++j) a.set(i, j, 2.0 * rng.normal());
        auto e = sym_eigendecompose(a);
        double num = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < n; ++j) {
                double recon = 0.0;
                for (std::size_t c = 0; c < n; ++c)
                    recon += e.eigenvectors(i, c) * e.eigenvalues[c] * e.eigenvectors(j, c);
                const double diff = a(i, j) - recon;
                num += diff * diff;
            }
        }
        worst_recon = std::max(worst_recon,
                               std::sqrt(num) / std::max(1.0, a.frobenius_norm()));
    }
    const bool recon_ok = worst_recon <= 1e-8;

    char buf[240];
    std::snprintf(buf, sizeof buf,
                  "neg-type max %.2e (<=1e-10), witness %.3f (~8), centred mean %.2e "
                  "(<=1e-10), recon %.2e (<=1e-8)",
                  worst_form, witness, worst_center, worst_recon);
    note = buf;
    return form_ok && witness_ok && center_ok && recon_ok;
}

bool criterion_dcor_bounds(std::string& note) {
    Rng rng(1009);
    double lo = 1e300, hi = -1e300;
    for (int rep = 0; rep < 200; ++rep) {
        const std::size_t m = 2 + rng.below(11);
        PairedSample s(random_sample(m, 1 + rng.below(3), rng),
                       random_sample(m, 1 + rng.below(3), rng));
        const KernelSpec kx = rep % 3 == 0 ? gaussian(1.0)
                                           : distance_induced(euclidean_power(
                                                 0.5 + 1.5 * rng.uniform()));
        const KernelSpec ky = rep % 2 == 0 ? distance_induced(euclidean_power(1.0))
                                           : gaussian(0.5 + rng.uniform());
        const double r = dcor_vstat(kx, ky, s);
        lo = std::min(lo, r);
        hi = std::max(hi, r);
    }

    Rng rng2(1010);
    double worst_one = 0.0;
    for (int rep = 0; rep < 10; ++rep) {
        auto x = random_sample(4 + rng2.below(12), 2, rng2);
        PairedSample s(x, x);
        auto k = distance_induced(euclidean_power(1.0));
        worst_one = std::max(worst_one, std::abs(dcor_vstat(k, k, s) - 1.0));
    }

    char buf[160];
    std::snprintf(buf, sizeof buf,
                  "range [%.2e, 1%+.2e] (within [0, 1+1e-10]), |dcor(x,x)-1| %.2e",
                  lo, hi - 1.0, worst_one);
    note = buf;
    return lo >= 0.0 && hi <= 1.0 + 1e-10 && worst_one <= 1e-10;
}

struct Criterion {
    const char* summary;
    double budget_seconds;
    std::function<bool(std::string&)> fn;
};

}  // namespace

int main() {
    const std::vector<Criterion> criteria{
        {"energy distance equals twice the mmd across kernels and centers", 5.0,
         criterion_energy_mmd_equivalence},
        {"distance covariance equals four times hsic, plus product-kernel corollary", 5.0,
         criterion_dcov_hsic_equivalence},
        {"mmd and hsic match naive brute-force summation", 60.0,
         criterion_brute_force_oracles},
        {"type I error at alpha=0.05 over 300 null trials", 600.0,
         criterion_type_one_error},
        {"spectral power at mean shift delta=1", 600.0, criterion_power},
        {"smaller exponents keep power on high-frequency dependence", 600.0,
         criterion_exponent_ordering},
        {"spectral and permutation thresholds agree on null data", 120.0,
         criterion_spectral_vs_permutation},
        {"negative-type, centred-kernel and eigensolver property suites", 120.0,
         criterion_property_suites},
        {"distance correlation stays within [0, 1] and is 1 under identity", 60.0,
         criterion_dcor_bounds},
    };

    int failures = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        const auto start = std::chrono::steady_clock::now();
        std::string detail;
        bool ok = false;
        try {
            ok = criteria[i].fn(detail);
        } catch (const std::exception& e) {
            detail = std::string("exception: ") + e.what();
        }
        const double elapsed =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        if (elapsed > criteria[i].budget_seconds) {
            ok = false;
            detail += " [over time budget]";
        }
        std::printf("criterion %zu/9: %s — %s — %s (%.1fs)\n", i + 1,
                    ok ? "PASS" : "FAIL", criteria[i].summary, detail.c_str(), elapsed);
        std::fflush(stdout);
        if (!ok) ++failures;
    }
    return failures;
}
