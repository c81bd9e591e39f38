#include "pm/kernels.hpp"

#include <algorithm>
#include <cmath>

namespace pm::kernels {
namespace {

double max_scaled(std::span<const double> q, double b) noexcept {
    // Division by b > 0 is monotone, so max(q)/b == max(q/b).
    return *std::max_element(q.begin(), q.end()) / b;
}

double log_sum_exp_scalar(std::span<const double> q, double b) noexcept {
    const double shift = max_scaled(q, b);
    double sum = 0.0;
    for (double qi : q) sum += std::exp(qi / b - shift);
    return shift + std::log(sum);
}

void softmax_scalar(std::span<const double> q, double b, std::span<double> out) noexcept {
    const double shift = max_scaled(q, b);
    double sum = 0.0;
    for (std::size_t i = 0; i < q.size(); ++i) {
        out[i] = std::exp(q[i] / b - shift);
        sum += out[i];
    }
    for (double& p : out) p /= sum;
}

}  // namespace

const KernelTable& scalar_table() noexcept {
    static const KernelTable table{Isa::Scalar, "scalar", &log_sum_exp_scalar, &softmax_scalar};
    return table;
}

}  // namespace pm::kernels
