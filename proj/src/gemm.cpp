#include "gemm.hpp"

#include <cstring>

namespace stcae {

namespace {

constexpr int kMR = 4;   // rows per micro-tile
constexpr int kNR = 16;  // columns per micro-tile

// 4 x 16 register tile, K streamed. Plain loops; the compiler turns the
// inner j-loop into two vector FMAs per row.
void tile_4x16(int K, const float* a0, const float* a1, const float* a2, const float* a3,
               const float* B, int ldb, float* c0, float* c1, float* c2, float* c3,
               bool accumulate) {
    float acc0[kNR], acc1[kNR], acc2[kNR], acc3[kNR];
    if (accumulate) {
        std::memcpy(acc0, c0, sizeof acc0);
        std::memcpy(acc1, c1, sizeof acc1);
        std::memcpy(acc2, c2, sizeof acc2);
        std::memcpy(acc3, c3, sizeof acc3);
    } else {
        std::memset(acc0, 0, sizeof acc0);
        std::memset(acc1, 0, sizeof acc1);
        std::memset(acc2, 0, sizeof acc2);
        std::memset(acc3, 0, sizeof acc3);
    }
    for (int k = 0; k < K; ++k) {
        const float* b = B + static_cast<long>(k) * ldb;
        const float v0 = a0[k], v1 = a1[k], v2 = a2[k], v3 = a3[k];
        for (int j = 0; j < kNR; ++j) {
            const float bj = b[j];
            acc0[j] += v0 * bj;
            acc1[j] += v1 * bj;
            acc2[j] += v2 * bj;
            acc3[j] += v3 * bj;
        }
    }
    std::memcpy(c0, acc0, sizeof acc0);
    std::memcpy(c1, acc1, sizeof acc1);
    std::memcpy(c2, acc2, sizeof acc2);
    std::memcpy(c3, acc3, sizeof acc3);
}

void tile_generic(int mr, int nr, int K, const float* A, int lda, const float* B, int ldb,
                  float* C, int ldc, bool accumulate) {
    for (int i = 0; i < mr; ++i) {
        const float* a = A + static_cast<long>(i) * lda;
        float* c = C + static_cast<long>(i) * ldc;
        float acc[kNR];
        for (int j = 0; j < nr; ++j) acc[j] = accumulate ? c[j] : 0.0f;
        for (int k = 0; k < K; ++k) {
            const float v = a[k];
            const float* b = B + static_cast<long>(k) * ldb;
            for (int j = 0; j < nr; ++j) acc[j] += v * b[j];
        }
        for (int j = 0; j < nr; ++j) c[j] = acc[j];
    }
}

}  // namespace

void sgemm(int M, int N, int K, const float* A, int lda, const float* B, int ldb, float* C,
           int ldc, bool accumulate) {
    if (N == 1) {
        // Column vector: per-row dot product (B is contiguous when ldb == 1).
        for (int i = 0; i < M; ++i) {
            const float* a = A + static_cast<long>(i) * lda;
            float acc = accumulate ? C[static_cast<long>(i) * ldc] : 0.0f;
            if (ldb == 1) {
                for (int k = 0; k < K; ++k) acc += a[k] * B[k];
            } else {
                for (int k = 0; k < K; ++k) acc += a[k] * B[static_cast<long>(k) * ldb];
            }
            C[static_cast<long>(i) * ldc] = acc;
        }
        return;
    }
    int i = 0;
    for (; i + kMR <= M; i += kMR) {
        const float* a0 = A + static_cast<long>(i) * lda;
        const float* a1 = a0 + lda;
        const float* a2 = a1 + lda;
        const float* a3 = a2 + lda;
        float* c0 = C + static_cast<long>(i) * ldc;
        int j = 0;
        for (; j + kNR <= N; j += kNR) {
            tile_4x16(K, a0, a1, a2, a3, B + j, ldb, c0 + j, c0 + ldc + j, c0 + 2 * ldc + j,
                      c0 + 3 * ldc + j, accumulate);
        }
        if (j < N) tile_generic(kMR, N - j, K, a0, lda, B + j, ldb, c0 + j, ldc, accumulate);
    }
    if (i < M) {
        int j = 0;
        for (; j + kNR <= N; j += kNR) {
            tile_generic(M - i, kNR, K, A + static_cast<long>(i) * lda, lda, B + j, ldb,
                         C + static_cast<long>(i) * ldc + j, ldc, accumulate);
        }
        if (j < N) {
            tile_generic(M - i, N - j, K, A + static_cast<long>(i) * lda, lda, B + j, ldb,
                         C + static_cast<long>(i) * ldc + j, ldc, accumulate);
        }
    }
}

void sgemm_abt(int M, int N, int K, const float* A, int lda, const float* B, int ldb, float* C,
               int ldc, bool accumulate) {
    for (int i = 0; i < M; ++i) {
        const float* a = A + static_cast<long>(i) * lda;
        float* c = C + static_cast<long>(i) * ldc;
        for (int j = 0; j < N; ++j) {
            const float* b = B + static_cast<long>(j) * ldb;
            float acc = 0.0f;
            for (int k = 0; k < K; ++k) acc += a[k] * b[k];
            c[j] = accumulate ? c[j] + acc : acc;
        }
    }
}

void sgemm_atb_acc(int M, int N, int K, const float* A, int lda, const float* B, int ldb,
                   float* C, int ldc) {
    // K outermost in fixed ascending order; blocks of 4 keep C rows hot.
    int k = 0;
    for (; k + 4 <= K; k += 4) {
        const float* a0 = A + static_cast<long>(k) * lda;
        const float* a1 = a0 + lda;
        const float* a2 = a1 + lda;
        const float* a3 = a2 + lda;
        const float* b0 = B + static_cast<long>(k) * ldb;
        const float* b1 = b0 + ldb;
        const float* b2 = b1 + ldb;
        const float* b3 = b2 + ldb;
        for (int i = 0; i < M; ++i) {
            float* c = C + static_cast<long>(i) * ldc;
            const float v0 = a0[i], v1 = a1[i], v2 = a2[i], v3 = a3[i];
            for (int j = 0; j < N; ++j) {
                c[j] += v0 * b0[j] + v1 * b1[j] + v2 * b2[j] + v3 * b3[j];
            }
        }
    }
    for (; k < K; ++k) {
        const float* a = A + static_cast<long>(k) * lda;
        const float* b = B + static_cast<long>(k) * ldb;
        for (int i = 0; i < M; ++i) {
            float* c = C + static_cast<long>(i) * ldc;
            const float v = a[i];
            for (int j = 0; j < N; ++j) c[j] += v * b[j];
        }
    }
}

}  // namespace stcae
