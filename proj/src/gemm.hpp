#pragma once

namespace stcae {

// Row-major single-precision matrix products used by the conv/dense kernels.
// All variants accumulate each output element as one ordered dot product, so
// results do not depend on how callers split work across threads.

// C[M x N] = A[M x K] * B[K x N]; accumulate adds into C instead.
void sgemm(int M, int N, int K, const float* A, int lda, const float* B, int ldb, float* C,
           int ldc, bool accumulate);

// C[M x N] += A[M x K] * B[N x K]^T  (dot products of A rows with B rows).
void sgemm_abt(int M, int N, int K, const float* A, int lda, const float* B, int ldb, float* C,
               int ldc, bool accumulate);

// C[M x N] += A[K x M]^T * B[K x N]  (rank-K update, K outermost).
void sgemm_atb_acc(int M, int N, int K, const float* A, int lda, const float* B, int ldb,
                   float* C, int ldc);

}  // namespace stcae
