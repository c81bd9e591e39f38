#include "pm/kernels.hpp"

#include "support/oracles.hpp"

#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

using pm::kernels::KernelTable;

namespace {

std::vector<double> random_inventory(std::mt19937_64& rng, std::size_t n, double spread) {
    std::uniform_real_distribution<double> u(-spread, spread);
    std::vector<double> q(n);
    for (double& v : q) v = std::round(u(rng));
    return q;
}

void check_equivalent(const KernelTable& a, const KernelTable& b, std::span<const double> q, double liquidity) {
    const double la = a.log_sum_exp(q, liquidity);
    const double lb = b.log_sum_exp(q, liquidity);
    REQUIRE(std::isfinite(la));
    CHECK(std::fabs(la - lb) <= 4e-15 * std::max(1.0, std::fabs(la)));

    std::vector<double> pa(q.size()), pb(q.size());
    a.softmax(q, liquidity, pa);
    b.softmax(q, liquidity, pb);
    for (std::size_t i = 0; i < q.size(); ++i) {
        CHECK(std::fabs(pa[i] - pb[i]) <= 1e-15 + 4e-15 * pa[i]);
    }
}

}  // namespace

TEST_CASE("scalar kernel matches a long-double oracle on moderate inventories") {
    const auto& scalar = pm::kernels::scalar_table();
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 2000; ++trial) {
        const std::size_t n = 2 + trial % 30;
        const double b = 50.0 + trial;
        const auto q = random_inventory(rng, n, 5.0 * b);
        const long double expected = oracle::naive_cost(q, b);
        CHECK(std::fabs(b * scalar.log_sum_exp(q, b) - static_cast<double>(expected)) <= 1e-12 * std::fabs(static_cast<double>(expected)) + 1e-12);
        std::vector<double> p(n);
        scalar.softmax(q, b, p);
        const auto ref = oracle::naive_prices(q, b);
        for (std::size_t i = 0; i < n; ++i) CHECK(std::fabs(p[i] - static_cast<double>(ref[i])) <= 1e-15);
    }
}

TEST_CASE("avx2 kernel is equivalent to the scalar reference") {
    const KernelTable* avx2 = pm::kernels::avx2_table();
    if (avx2 == nullptr) {
        MESSAGE("AVX2/FMA not available; equivalence test skipped");
        return;
    }
    const auto& scalar = pm::kernels::scalar_table();
    std::mt19937_64 rng(29);

    SUBCASE("random lengths and spreads") {
        for (int trial = 0; trial < 20000; ++trial) {
            const std::size_t n = 2 + static_cast<std::size_t>(trial % 67);
            const double b = std::uniform_real_distribution<double>(1.0, 1e4)(rng);
            const auto q = random_inventory(rng, n, std::uniform_real_distribution<double>(0.0, 50.0)(rng) * b);
            check_equivalent(scalar, *avx2, q, b);
        }
    }
    SUBCASE("extreme exponent ranges stay finite and normalized") {
        for (double spread : {100.0, 500.0, 700.0, 750.0, 2000.0}) {
            std::vector<double> q(24);
            for (std::size_t i = 0; i < q.size(); ++i) q[i] = (static_cast<double>(i) / 23.0 * 2.0 - 1.0) * spread;
            check_equivalent(scalar, *avx2, q, 1.0);
            std::vector<double> p(q.size());
            avx2->softmax(q, 1.0, p);
            double sum = 0.0;
            for (double v : p) {
                CHECK(std::isfinite(v));
                sum += v;
            }
            CHECK(std::fabs(sum - 1.0) <= 1e-12);
        }
    }
    SUBCASE("all-equal inventories are exactly uniform") {
        for (std::size_t n : {2u, 3u, 4u, 5u, 8u, 24u}) {
            std::vector<double> q(n, 42.0), p(n);
            avx2->softmax(q, 548.0, p);
            for (double v : p) CHECK(v == doctest::Approx(1.0 / static_cast<double>(n)).epsilon(1e-15));
            CHECK(avx2->log_sum_exp(q, 548.0) ==
                  doctest::Approx(42.0 / 548.0 + std::log(static_cast<double>(n))).epsilon(1e-15));
        }
    }
}

TEST_CASE("kernel selection") {
    const auto& before = pm::kernels::active();
    pm::kernels::select(pm::kernels::Isa::Scalar);
    CHECK(pm::kernels::active().isa == pm::kernels::Isa::Scalar);
    if (pm::kernels::avx2_table()) {
        pm::kernels::select(pm::kernels::Isa::Avx2);
        CHECK(pm::kernels::active().isa == pm::kernels::Isa::Avx2);
    } else {
        CHECK_THROWS(pm::kernels::select(pm::kernels::Isa::Avx2));
    }
    pm::kernels::select(before.isa);
}
