#pragma once

#include <cstddef>

namespace axdg::kernels {

// Worker count for the parallel kernel variants. Initialized from the
// AXDG_THREADS environment variable (falling back to the OpenMP default)
// the first time it is queried.
int thread_count();
void set_thread_count(int n);

// Every kernel exists twice: a plain serial reference in `serial` and an
// OpenMP version in `par`. Both compute each output element with the same
// serial accumulation order, so results are bit-identical regardless of
// thread count. The free functions at namespace scope dispatch to `par`
// when more than one thread is configured and the problem is big enough
// to be worth forking.

namespace serial {

// c[m x n] = a[m x k] * b[k x n]
void matmul(const double* a, const double* b, double* c, std::size_t m, std::size_t k,
            std::size_t n);
// c[m x k2] = a[m x n] * b[k2 x n]^T
void matmul_nt(const double* a, const double* b, double* c, std::size_t m, std::size_t n,
               std::size_t k2);
// c[k x n] += a[m x k]^T * g[m x n]   (accumulating; used for weight gradients)
void matmul_tn_acc(const double* a, const double* g, double* c, std::size_t m, std::size_t k,
                   std::size_t n);

void row_sum(const double* x, double* y, std::size_t m, std::size_t n);    // y[i] = sum_j x[i,j]
void col_sum(const double* x, double* y, std::size_t m, std::size_t n);    // y[j] = sum_i x[i,j]
void lse_rows(const double* x, double* y, std::size_t m, std::size_t n);   // y[i] = log sum exp row i

template <class F>
inline void map(const double* x, double* y, std::size_t n, F f) {
    for (std::size_t i = 0; i < n; ++i) y[i] = f(x[i]);
}

template <class F>
inline void zip(const double* x, const double* y, double* z, std::size_t n, F f) {
    for (std::size_t i = 0; i < n; ++i) z[i] = f(x[i], y[i]);
}

// z[i,j] = f(x[i,j], b[j]) with a row-vector second operand
template <class F>
inline void zip_rowbcast(const double* x, const double* b, double* z, std::size_t m,
                         std::size_t n, F f) {
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) z[i * n + j] = f(x[i * n + j], b[j]);
}

}  // namespace serial

namespace par {

void matmul(const double* a, const double* b, double* c, std::size_t m, std::size_t k,
            std::size_t n);
void matmul_nt(const double* a, const double* b, double* c, std::size_t m, std::size_t n,
               std::size_t k2);
void matmul_tn_acc(const double* a, const double* g, double* c, std::size_t m, std::size_t k,
                   std::size_t n);

void row_sum(const double* x, double* y, std::size_t m, std::size_t n);
void col_sum(const double* x, double* y, std::size_t m, std::size_t n);
void lse_rows(const double* x, double* y, std::size_t m, std::size_t n);

template <class F>
void map(const double* x, double* y, std::size_t n, F f) {
#pragma omp parallel for schedule(static)
    for (long long i = 0; i < (long long)n; ++i) y[i] = f(x[i]);
}

template <class F>
void zip(const double* x, const double* y, double* z, std::size_t n, F f) {
#pragma omp parallel for schedule(static)
    for (long long i = 0; i < (long long)n; ++i) z[i] = f(x[i], y[i]);
}

template <class F>
void zip_rowbcast(const double* x, const double* b, double* z, std::size_t m, std::size_t n,
                  F f) {
#pragma omp parallel for schedule(static)
    for (long long i = 0; i < (long long)m; ++i)
        for (std::size_t j = 0; j < n; ++j) z[i * n + j] = f(x[i * n + j], b[j]);
}

}  // namespace par

// Dispatching entry points.

inline constexpr std::size_t kElemwiseParThreshold = 1u << 15;
inline constexpr std::size_t kMatmulParThreshold = 1u << 16;  // on m*k*n

void matmul(const double* a, const double* b, double* c, std::size_t m, std::size_t k,
            std::size_t n);
void matmul_nt(const double* a, const double* b, double* c, std::size_t m, std::size_t n,
               std::size_t k2);
void matmul_tn_acc(const double* a, const double* g, double* c, std::size_t m, std::size_t k,
                   std::size_t n);
void row_sum(const double* x, double* y, std::size_t m, std::size_t n);
void col_sum(const double* x, double* y, std::size_t m, std::size_t n);
void lse_rows(const double* x, double* y, std::size_t m, std::size_t n);

template <class F>
inline void map(const double* x, double* y, std::size_t n, F f) {
    if (thread_count() > 1 && n >= kElemwiseParThreshold)
        par::map(x, y, n, f);
    else
        serial::map(x, y, n, f);
}

template <class F>
inline void zip(const double* x, const double* y, double* z, std::size_t n, F f) {
    if (thread_count() > 1 && n >= kElemwiseParThreshold)
        par::zip(x, y, z, n, f);
    else
        serial::zip(x, y, z, n, f);
}

template <class F>
inline void zip_rowbcast(const double* x, const double* b, double* z, std::size_t m,
                         std::size_t n, F f) {
    if (thread_count() > 1 && m * n >= kElemwiseParThreshold)
        par::zip_rowbcast(x, b, z, m, n, f);
    else
        serial::zip_rowbcast(x, b, z, m, n, f);
}

}  // namespace axdg::kernels
