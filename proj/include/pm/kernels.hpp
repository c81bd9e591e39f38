#pragma once

// Log-sum-exp and softmax over an LMSR share inventory.
//
// Every kernel takes the raw inventory q and the liquidity b and works on
// x_i = q_i / b, shifted by max_i x_i before exponentiation. The scalar
// kernel is the reference; the AVX2 kernel must agree with it to a few ulp
// and is selected at runtime when the CPU supports AVX2 and FMA.

#include <cstddef>
#include <span>
#include <string_view>

namespace pm::kernels {

enum class Isa { Scalar, Avx2 };

struct KernelTable {
    Isa isa;
    std::string_view name;
    /// ln(sum_i exp(q_i / b)).
    double (*log_sum_exp)(std::span<const double> q, double b) noexcept;
    /// out_i = exp(q_i / b) / sum_j exp(q_j / b); out.size() == q.size().
    void (*softmax)(std::span<const double> q, double b, std::span<double> out) noexcept;
};

const KernelTable& scalar_table() noexcept;
/// Null when the AVX2 kernel was not compiled in or the CPU lacks AVX2/FMA.
const KernelTable* avx2_table() noexcept;

/// Kernel used by the pricing core. Chosen once: AVX2 when available unless
/// the environment variable PM_KERNEL=scalar forces the reference path.
const KernelTable& active() noexcept;

/// Overrides the active kernel (tests and benchmarks). Not thread-safe with
/// concurrent pricing; call before any venue is opened.
void select(Isa isa);

bool cpu_supports_avx2() noexcept;

}  // namespace pm::kernels
