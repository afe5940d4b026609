#pragma once

#include <cstddef>
#include <string_view>

// Dense double-precision kernels used by the optimizer and loss reductions.
// Scalar reference implementations always exist; on x86-64 an AVX2 variant
// is selected once at startup when the CPU supports it. SIMD reductions use
// a fixed lane/tail order, so results are deterministic per build+machine.

namespace poc::kernels {

struct Ops {
    double (*dot)(const double*, const double*, std::size_t);
    double (*sum)(const double*, std::size_t);
    void (*axpy)(double, const double*, double*, std::size_t);  // y += a*x
    void (*scale)(double*, double, std::size_t);                // x *= a
    std::string_view name;
};

// Scalar reference kernels (always available, used as equivalence oracle).
namespace scalar {
double dot(const double* a, const double* b, std::size_t n);
double sum(const double* x, std::size_t n);
void axpy(double a, const double* x, double* y, std::size_t n);
void scale(double* x, double a, std::size_t n);
}  // namespace scalar

#if defined(__x86_64__) || defined(_M_X64)
namespace avx2 {
double dot(const double* a, const double* b, std::size_t n);
double sum(const double* x, std::size_t n);
void axpy(double a, const double* x, double* y, std::size_t n);
void scale(double* x, double a, std::size_t n);
}  // namespace avx2
#endif

#if defined(__aarch64__)
namespace neon {
double dot(const double* a, const double* b, std::size_t n);
double sum(const double* x, std::size_t n);
void axpy(double a, const double* x, double* y, std::size_t n);
void scale(double* x, double a, std::size_t n);
}  // namespace neon
#endif

// Best variant for this machine, resolved once.
const Ops& active();

inline double dot(const double* a, const double* b, std::size_t n) {
    return active().dot(a, b, n);
}
inline double sum(const double* x, std::size_t n) { return active().sum(x, n); }
inline void axpy(double a, const double* x, double* y, std::size_t n) {
    active().axpy(a, x, y, n);
}
inline void scale(double* x, double a, std::size_t n) { active().scale(x, a, n); }

}  // namespace poc::kernels
