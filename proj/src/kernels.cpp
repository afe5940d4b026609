#include "poc/kernels.hpp"

namespace poc::kernels {

namespace scalar {

double dot(const double* a, const double* b, std::size_t n) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += a[i] * b[i];
    return acc;
}

double sum(const double* x, std::size_t n) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += x[i];
    return acc;
}

void axpy(double a, const double* x, double* y, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) y[i] += a * x[i];
}

void scale(double* x, double a, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) x[i] *= a;
}

}  // namespace scalar

namespace {

constexpr Ops kScalarOps{scalar::dot, scalar::sum, scalar::axpy, scalar::scale,
                         "scalar"};

#if defined(__x86_64__) || defined(_M_X64)
constexpr Ops kAvx2Ops{avx2::dot, avx2::sum, avx2::axpy, avx2::scale, "avx2"};
#endif
#if defined(__aarch64__)
constexpr Ops kNeonOps{neon::dot, neon::sum, neon::axpy, neon::scale, "neon"};
#endif

const Ops& resolve() {
#if defined(__x86_64__) || defined(_M_X64)
    if (__builtin_cpu_supports("avx2")) return kAvx2Ops;
#endif
#if defined(__aarch64__)
    return kNeonOps;
#endif
    return kScalarOps;
}

}  // namespace

const Ops& active() {
    static const Ops& ops = resolve();
    return ops;
}

}  // namespace poc::kernels
