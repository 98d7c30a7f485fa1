#include "axdg/kernels.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <cstring>

#if defined(_OPENMP)
#include <omp.h>
#endif

namespace axdg::kernels {

namespace {

int default_threads() {
    if (const char* env = std::getenv("AXDG_THREADS")) {
        int n = std::atoi(env);
        if (n >= 1) return n;
    }
#if defined(_OPENMP)
    return omp_get_max_threads();
#else
    return 1;
#endif
}

std::atomic<int> g_threads{0};  // 0 = not initialized yet

}  // namespace

int thread_count() {
    int n = g_threads.load(std::memory_order_relaxed);
    if (n == 0) {
        n = default_threads();
        g_threads.store(n, std::memory_order_relaxed);
    }
    return n;
}

void set_thread_count(int n) { g_threads.store(std::max(1, n), std::memory_order_relaxed); }

namespace serial {

void matmul(const double* a, const double* b, double* c, std::size_t m, std::size_t k,
            std::size_t n) {
    // (i,k,j) ordering streams B rows and vectorizes the inner loop.
    std::memset(c, 0, m * n * sizeof(double));
    for (std::size_t i = 0; i < m; ++i) {
        const double* ai = a + i * k;
        double* ci = c + i * n;
        for (std::size_t p = 0; p < k; ++p) {
            const double aip = ai[p];
            const double* bp = b + p * n;
            for (std::size_t j = 0; j < n; ++j) ci[j] += aip * bp[j];
        }
    }
}

void matmul_nt(const double* a, const double* b, double* c, std::size_t m, std::size_t n,
               std::size_t k2) {
    for (std::size_t i = 0; i < m; ++i) {
        const double* ai = a + i * n;
        double* ci = c + i * k2;
        for (std::size_t j = 0; j < k2; ++j) {
            const double* bj = b + j * n;
            double s = 0.0;
            for (std::size_t t = 0; t < n; ++t) s += ai[t] * bj[t];
            ci[j] = s;
        }
    }
}

void matmul_tn_acc(const double* a, const double* g, double* c, std::size_t m, std::size_t k,
                   std::size_t n) {
    // c[p,j] += sum_i a[i,p] * g[i,j]; row p of c is owned by one pass.
    for (std::size_t p = 0; p < k; ++p) {
        double* cp = c + p * n;
        for (std::size_t i = 0; i < m; ++i) {
            const double aip = a[i * k + p];
            const double* gi = g + i * n;
            for (std::size_t j = 0; j < n; ++j) cp[j] += aip * gi[j];
        }
    }
}

void row_sum(const double* x, double* y, std::size_t m, std::size_t n) {
    for (std::size_t i = 0; i < m; ++i) {
        const double* xi = x + i * n;
        double s = 0.0;
        for (std::size_t j = 0; j < n; ++j) s += xi[j];
        y[i] = s;
    }
}

void col_sum(const double* x, double* y, std::size_t m, std::size_t n) {
    for (std::size_t j = 0; j < n; ++j) y[j] = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        const double* xi = x + i * n;
        for (std::size_t j = 0; j < n; ++j) y[j] += xi[j];
    }
}

void lse_rows(const double* x, double* y, std::size_t m, std::size_t n) {
    for (std::size_t i = 0; i < m; ++i) {
        const double* xi = x + i * n;
        double mx = xi[0];
        for (std::size_t j = 1; j < n; ++j) mx = std::max(mx, xi[j]);
        double s = 0.0;
        for (std::size_t j = 0; j < n; ++j) s += std::exp(xi[j] - mx);
        y[i] = mx + std::log(s);
    }
}

}  // namespace serial

namespace par {

void matmul(const double* a, const double* b, double* c, std::size_t m, std::size_t k,
            std::size_t n) {
#pragma omp parallel for schedule(static)
    for (long long i = 0; i < (long long)m; ++i) {
        const double* ai = a + i * k;
        double* ci = c + i * n;
        for (std::size_t j = 0; j < n; ++j) ci[j] = 0.0;
        for (std::size_t p = 0; p < k; ++p) {
            const double aip = ai[p];
            const double* bp = b + p * n;
            for (std::size_t j = 0; j < n; ++j) ci[j] += aip * bp[j];
        }
    }
}

void matmul_nt(const double* a, const double* b, double* c, std::size_t m, std::size_t n,
               std::size_t k2) {
#pragma omp parallel for schedule(static)
    for (long long i = 0; i < (long long)m; ++i) {
        const double* ai = a + i * n;
        double* ci = c + i * k2;
        for (std::size_t j = 0; j < k2; ++j) {
            const double* bj = b + j * n;
            double s = 0.0;
            for (std::size_t t = 0; t < n; ++t) s += ai[t] * bj[t];
            ci[j] = s;
        }
    }
}

void matmul_tn_acc(const double* a, const double* g, double* c, std::size_t m, std::size_t k,
                   std::size_t n) {
#pragma omp parallel for schedule(static)
    for (long long p = 0; p < (long long)k; ++p) {
        double* cp = c + p * n;
        for (std::size_t i = 0; i < m; ++i) {
            const double aip = a[i * k + p];
            const double* gi = g + i * n;
            for (std::size_t j = 0; j < n; ++j) cp[j] += aip * gi[j];
        }
    }
}

void row_sum(const double* x, double* y, std::size_t m, std::size_t n) {
#pragma omp parallel for schedule(static)
    for (long long i = 0; i < (long long)m; ++i) {
        const double* xi = x + i * n;
        double s = 0.0;
        for (std::size_t j = 0; j < n; ++j) s += xi[j];
        y[i] = s;
    }
}

void col_sum(const double* x, double* y, std::size_t m, std::size_t n) {
#pragma omp parallel for schedule(static)
    for (long long j = 0; j < (long long)n; ++j) {
        double s = 0.0;
        for (std::size_t i = 0; i < m; ++i) s += x[i * n + j];
        y[j] = s;
    }
}

void lse_rows(const double* x, double* y, std::size_t m, std::size_t n) {
#pragma omp parallel for schedule(static)
    for (long long i = 0; i < (long long)m; ++i) {
        const double* xi = x + i * n;
        double mx = xi[0];
        for (std::size_t j = 1; j < n; ++j) mx = std::max(mx, xi[j]);
        double s = 0.0;
        for (std::size_t j = 0; j < n; ++j) s += std::exp(xi[j] - mx);
        y[i] = mx + std::log(s);
    }
}

}  // namespace par

void matmul(const double* a, const double* b, double* c, std::size_t m, std::size_t k,
            std::size_t n) {
    if (thread_count() > 1 && m * k * n >= kMatmulParThreshold)
        par::matmul(a, b, c, m, k, n);
    else
        serial::matmul(a, b, c, m, k, n);
}

void matmul_nt(const double* a, const double* b, double* c, std::size_t m, std::size_t n,
               std::size_t k2) {
    if (thread_count() > 1 && m * n * k2 >= kMatmulParThreshold)
        par::matmul_nt(a, b, c, m, n, k2);
    else
        serial::matmul_nt(a, b, c, m, n, k2);
}

void matmul_tn_acc(const double* a, const double* g, double* c, std::size_t m, std::size_t k,
                   std::size_t n) {
    if (thread_count() > 1 && m * k * n >= kMatmulParThreshold)
        par::matmul_tn_acc(a, g, c, m, k, n);
    else
        serial::matmul_tn_acc(a, g, c, m, k, n);
}

void row_sum(const double* x, double* y, std::size_t m, std::size_t n) {
    if (thread_count() > 1 && m * n >= kElemwiseParThreshold)
        par::row_sum(x, y, m, n);
    else
        serial::row_sum(x, y, m, n);
}

void col_sum(const double* x, double* y, std::size_t m, std::size_t n) {
    if (thread_count() > 1 && m * n >= kElemwiseParThreshold)
        par::col_sum(x, y, m, n);
    else
        serial::col_sum(x, y, m, n);
}

void lse_rows(const double* x, double* y, std::size_t m, std::size_t n) {
    if (thread_count() > 1 && m * n >= kElemwiseParThreshold)
        par::lse_rows(x, y, m, n);
    else
        serial::lse_rows(x, y, m, n);
}

}  // namespace axdg::kernels
