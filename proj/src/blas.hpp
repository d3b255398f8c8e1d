#pragma once

#include <cblas.h>

#include <algorithm>
#include <cstddef>
#include <vector>

namespace jcnp::detail {

// Row-major C = alpha * op(A) * op(B) + beta * C.
inline void gemm(bool trans_a, bool trans_b, int m, int n, int k, float alpha, const float* a,
                 int lda, const float* b, int ldb, float beta, float* c, int ldc) {
    cblas_sgemm(CblasRowMajor, trans_a ? CblasTrans : CblasNoTrans,
                trans_b ? CblasTrans : CblasNoTrans, m, n, k, alpha, a, lda, b, ldb, beta, c, ldc);
}

// Double precision only serves gradient checking on small inputs. It uses a
// plain loop kernel: the AVX-512 dgemm in some OpenBLAS 0.3.x builds returns
// wrong results once n exceeds a few hundred.
inline void gemm(bool trans_a, bool trans_b, int m, int n, int k, double alpha, const double* a,
                 int lda, const double* b, int ldb, double beta, double* c, int ldc) {
    const auto M = static_cast<std::size_t>(m), N = static_cast<std::size_t>(n),
               K = static_cast<std::size_t>(k);
    // Bring B to k x n row-major so the inner loop is unit stride.
    std::vector<double> bt;
    const double* bp = b;
    std::size_t ldbp = static_cast<std::size_t>(ldb);
    if (trans_b) {
        bt.resize(K * N);
        for (std::size_t j = 0; j < N; ++j)
            for (std::size_t p = 0; p < K; ++p) bt[p * N + j] = b[j * ldbp + p];
        bp = bt.data();
        ldbp = N;
    }
    std::vector<double> row(N);
    for (std::size_t i = 0; i < M; ++i) {
        std::fill(row.begin(), row.end(), 0.0);
        for (std::size_t p = 0; p < K; ++p) {
            const double av = trans_a ? a[p * static_cast<std::size_t>(lda) + i]
                                      : a[i * static_cast<std::size_t>(lda) + p];
            if (av == 0.0) continue;
            const double* brow = bp + p * ldbp;
            for (std::size_t j = 0; j < N; ++j) row[j] += av * brow[j];
        }
        double* crow = c + i * static_cast<std::size_t>(ldc);
        for (std::size_t j = 0; j < N; ++j) {
            crow[j] = alpha * row[j] + (beta == 0.0 ? 0.0 : beta * crow[j]);
        }
    }
}

}  // namespace jcnp::detail
