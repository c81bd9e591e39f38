// AVX2 + FMA kernels. This translation unit is the only one compiled with
// -mavx2 -mfma; callers reach it through kernels::active() after a CPUID check.

#include "pm/kernels.hpp"

#include <immintrin.h>

#include <algorithm>
#include <cmath>

namespace pm::kernels {
namespace {

constexpr std::size_t kLanes = 4;
// Below this the result is flushed to zero; exp(-708) is still a normal double.
constexpr double kUnderflow = -708.0;

// exp(x) for x <= 0: Cody-Waite reduction x = k ln2 + r, |r| <= ln2/2, then a
// degree-13 Taylor polynomial (truncation error < 1e-17 relative on that range).
inline __m256d exp_nonpositive(__m256d x) {
    const __m256d log2e = _mm256_set1_pd(1.4426950408889634074);
    const __m256d ln2_hi = _mm256_set1_pd(6.93147180369123816490e-01);
    const __m256d ln2_lo = _mm256_set1_pd(1.90821492927058770002e-10);
    const __m256d floor_x = _mm256_set1_pd(kUnderflow);

    const __m256d live = _mm256_cmp_pd(x, floor_x, _CMP_GE_OQ);
    const __m256d xc = _mm256_max_pd(x, floor_x);
    const __m256d k = _mm256_round_pd(_mm256_mul_pd(xc, log2e), _MM_FROUND_TO_NEAREST_INT | _MM_FROUND_NO_EXC);
    __m256d r = _mm256_fnmadd_pd(k, ln2_hi, xc);
    r = _mm256_fnmadd_pd(k, ln2_lo, r);

    static constexpr double kInvFact[] = {
        1.0 / 6227020800.0,  // 1/13!
        1.0 / 479001600.0,   // 1/12!
        1.0 / 39916800.0,
        1.0 / 3628800.0,
        1.0 / 362880.0,
        1.0 / 40320.0,
        1.0 / 5040.0,
        1.0 / 720.0,
        1.0 / 120.0,
        1.0 / 24.0,
        1.0 / 6.0,
        1.0 / 2.0,
        1.0,
        1.0,
    };
    __m256d poly = _mm256_set1_pd(kInvFact[0]);
    for (std::size_t i = 1; i < std::size(kInvFact); ++i) {
        poly = _mm256_fmadd_pd(poly, r, _mm256_set1_pd(kInvFact[i]));
    }

    __m256i biased = _mm256_cvtepi32_epi64(_mm256_cvtpd_epi32(k));
    biased = _mm256_add_epi64(biased, _mm256_set1_epi64x(1023));
    const __m256d scale = _mm256_castsi256_pd(_mm256_slli_epi64(biased, 52));
    return _mm256_and_pd(_mm256_mul_pd(poly, scale), live);
}

inline double hsum(__m256d v) {
    const __m128d lo = _mm256_castpd256_pd128(v);
    const __m128d hi = _mm256_extractf128_pd(v, 1);
    const __m128d pair = _mm_add_pd(lo, hi);
    return _mm_cvtsd_f64(_mm_add_sd(pair, _mm_unpackhi_pd(pair, pair)));
}

inline double hmax(__m256d v) {
    const __m128d lo = _mm256_castpd256_pd128(v);
    const __m128d hi = _mm256_extractf128_pd(v, 1);
    const __m128d pair = _mm_max_pd(lo, hi);
    return _mm_cvtsd_f64(_mm_max_sd(pair, _mm_unpackhi_pd(pair, pair)));
}

double max_raw(std::span<const double> q) noexcept {
    const std::size_t n = q.size();
    const std::size_t body = n - n % kLanes;
    if (body == 0) return *std::max_element(q.begin(), q.end());
    __m256d acc = _mm256_loadu_pd(q.data());
    for (std::size_t i = kLanes; i < body; i += kLanes) {
        acc = _mm256_max_pd(acc, _mm256_loadu_pd(q.data() + i));
    }
    double m = hmax(acc);
    for (std::size_t i = body; i < n; ++i) m = std::max(m, q[i]);
    return m;
}

// Loads lanes [i, i + count) of q scaled and shifted; missing lanes read as
// far below the underflow floor so they exponentiate to exactly zero.
inline __m256d load_shifted(const double* q, std::size_t count, __m256d b, __m256d shift) {
    if (count == kLanes) return _mm256_sub_pd(_mm256_div_pd(_mm256_loadu_pd(q), b), shift);
    alignas(32) double tmp[kLanes] = {-1e300, -1e300, -1e300, -1e300};
    alignas(32) double bs[kLanes];
    _mm256_store_pd(bs, b);
    alignas(32) double ss[kLanes];
    _mm256_store_pd(ss, shift);
    for (std::size_t j = 0; j < count; ++j) tmp[j] = q[j] / bs[j] - ss[j];
    return _mm256_load_pd(tmp);
}

double log_sum_exp_avx2(std::span<const double> q, double b) noexcept {
    const double shift = max_raw(q) / b;
    const __m256d vb = _mm256_set1_pd(b);
    const __m256d vshift = _mm256_set1_pd(shift);
    __m256d acc = _mm256_setzero_pd();
    for (std::size_t i = 0; i < q.size(); i += kLanes) {
        const std::size_t count = std::min(kLanes, q.size() - i);
        acc = _mm256_add_pd(acc, exp_nonpositive(load_shifted(q.data() + i, count, vb, vshift)));
    }
    return shift + std::log(hsum(acc));
}

void softmax_avx2(std::span<const double> q, double b, std::span<double> out) noexcept {
    const double shift = max_raw(q) / b;
    const __m256d vb = _mm256_set1_pd(b);
    const __m256d vshift = _mm256_set1_pd(shift);
    const std::size_t n = q.size();
    const std::size_t body = n - n % kLanes;
    __m256d acc = _mm256_setzero_pd();
    for (std::size_t i = 0; i < body; i += kLanes) {
        const __m256d e = exp_nonpositive(load_shifted(q.data() + i, kLanes, vb, vshift));
        _mm256_storeu_pd(out.data() + i, e);
        acc = _mm256_add_pd(acc, e);
    }
    if (body < n) {
        alignas(32) double tail[kLanes];
        const __m256d e = exp_nonpositive(load_shifted(q.data() + body, n - body, vb, vshift));
        _mm256_store_pd(tail, e);
        acc = _mm256_add_pd(acc, e);
        std::copy_n(tail, n - body, out.data() + body);
    }
    const __m256d vsum = _mm256_set1_pd(hsum(acc));
    for (std::size_t i = 0; i < body; i += kLanes) {
        _mm256_storeu_pd(out.data() + i, _mm256_div_pd(_mm256_loadu_pd(out.data() + i), vsum));
    }
    const double sum = hsum(acc);
    for (std::size_t i = body; i < n; ++i) out[i] /= sum;
}

}  // namespace

const KernelTable& avx2_kernel_table() noexcept {
    static const KernelTable table{Isa::Avx2, "avx2", &log_sum_exp_avx2, &softmax_avx2};
    return table;
}

}  // namespace pm::kernels
