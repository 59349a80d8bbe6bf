// AVX2 variants of the raycast and mask-counting kernels. Each one mirrors
// the scalar reference in kernels.cpp operation for operation; with
// -ffp-contract=off both backends produce bit-identical results, which the
// equivalence tests assert.

#if defined(PRINTSEG_HAVE_AVX2)

#include <immintrin.h>

#include <bit>
#include <cstring>
#include <limits>

#include "printseg/kernels.hpp"

namespace printseg::kernels {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

inline void merge_hit(RayHit& best, double t, std::int32_t index) {
    if (t < best.t || (t == best.t && index < best.index)) {
        best.t = t;
        best.index = index;
    }
}

// valid ? t : +inf
inline __m256d select_or_inf(__m256d mask, __m256d t) {
    return _mm256_blendv_pd(_mm256_set1_pd(kInf), t, mask);
}

RayHit raycast_avx2(const CapsuleSoA& caps, const std::uint32_t* indices, std::size_t count,
                    const Vec3& o, const Vec3& d, double t_min, double t_max) {
    RayHit best{kInf, -1};

    const __m256d vdx = _mm256_set1_pd(d.x);
    const __m256d vdy = _mm256_set1_pd(d.y);
    const __m256d vdz = _mm256_set1_pd(d.z);
    const __m256d vox = _mm256_set1_pd(o.x);
    const __m256d voy = _mm256_set1_pd(o.y);
    const __m256d voz = _mm256_set1_pd(o.z);
    const __m256d vtmin = _mm256_set1_pd(t_min);
    const __m256d vtmax = _mm256_set1_pd(t_max);
    const __m256d zero = _mm256_setzero_pd();

    std::size_t i = 0;
    for (; i + 4 <= count; i += 4) {
        __m128i idx;
        std::memcpy(&idx, indices + i, sizeof(idx));

        const __m256d ax = _mm256_i32gather_pd(caps.ax.data(), idx, 8);
        const __m256d ay = _mm256_i32gather_pd(caps.ay.data(), idx, 8);
        const __m256d az = _mm256_i32gather_pd(caps.az.data(), idx, 8);
        const __m256d bx = _mm256_i32gather_pd(caps.bx.data(), idx, 8);
        const __m256d by = _mm256_i32gather_pd(caps.by.data(), idx, 8);
        const __m256d bz = _mm256_i32gather_pd(caps.bz.data(), idx, 8);
        const __m256d r = _mm256_i32gather_pd(caps.radius.data(), idx, 8);
        const __m256d inv_s = _mm256_i32gather_pd(caps.inv_scale.data(), idx, 8);

        const __m256d dzs = _mm256_mul_pd(vdz, inv_s);
        const __m256d oaz = _mm256_mul_pd(_mm256_sub_pd(voz, az), inv_s);
        const __m256d bax = _mm256_sub_pd(bx, ax);
        const __m256d bay = _mm256_sub_pd(by, ay);
        const __m256d baz = _mm256_mul_pd(_mm256_sub_pd(bz, az), inv_s);
        const __m256d oax = _mm256_sub_pd(vox, ax);
        const __m256d oay = _mm256_sub_pd(voy, ay);

        // dot products in the same summation order as the scalar kernel
        const __m256d dd = _mm256_add_pd(
            _mm256_add_pd(_mm256_mul_pd(vdx, vdx), _mm256_mul_pd(vdy, vdy)),
            _mm256_mul_pd(dzs, dzs));
        const __m256d m = _mm256_add_pd(
            _mm256_add_pd(_mm256_mul_pd(bax, bax), _mm256_mul_pd(bay, bay)),
            _mm256_mul_pd(baz, baz));
        const __m256d card = _mm256_add_pd(
            _mm256_add_pd(_mm256_mul_pd(bax, vdx), _mm256_mul_pd(bay, vdy)),
            _mm256_mul_pd(baz, dzs));
        const __m256d caoa = _mm256_add_pd(
            _mm256_add_pd(_mm256_mul_pd(bax, oax), _mm256_mul_pd(bay, oay)),
            _mm256_mul_pd(baz, oaz));
        const __m256d doa = _mm256_add_pd(
            _mm256_add_pd(_mm256_mul_pd(vdx, oax), _mm256_mul_pd(vdy, oay)),
            _mm256_mul_pd(dzs, oaz));
        const __m256d oaoa = _mm256_add_pd(
            _mm256_add_pd(_mm256_mul_pd(oax, oax), _mm256_mul_pd(oay, oay)),
            _mm256_mul_pd(oaz, oaz));
        const __m256d r2 = _mm256_mul_pd(r, r);

        __m256d best_t = _mm256_set1_pd(kInf);

        // cylinder body
        {
            const __m256d qa = _mm256_sub_pd(_mm256_mul_pd(m, dd), _mm256_mul_pd(card, card));
            const __m256d qb = _mm256_sub_pd(_mm256_mul_pd(m, doa), _mm256_mul_pd(caoa, card));
            const __m256d qc = _mm256_sub_pd(_mm256_mul_pd(m, _mm256_sub_pd(oaoa, r2)),
                                             _mm256_mul_pd(caoa, caoa));
            const __m256d disc = _mm256_sub_pd(_mm256_mul_pd(qb, qb), _mm256_mul_pd(qa, qc));
            const __m256d gate = _mm256_and_pd(_mm256_cmp_pd(disc, zero, _CMP_GE_OQ),
                                               _mm256_cmp_pd(qa, zero, _CMP_GT_OQ));
            const __m256d sq = _mm256_sqrt_pd(disc);
            const __m256d neg_qb = _mm256_sub_pd(zero, qb);
            for (int root = 0; root < 2; ++root) {
                const __m256d numer =
                    root == 0 ? _mm256_sub_pd(neg_qb, sq) : _mm256_add_pd(neg_qb, sq);
                const __m256d t = _mm256_div_pd(numer, qa);
                const __m256d y = _mm256_add_pd(caoa, _mm256_mul_pd(t, card));
                __m256d valid = _mm256_and_pd(gate, _mm256_cmp_pd(y, zero, _CMP_GE_OQ));
                valid = _mm256_and_pd(valid, _mm256_cmp_pd(y, m, _CMP_LE_OQ));
                valid = _mm256_and_pd(valid, _mm256_cmp_pd(t, vtmin, _CMP_GT_OQ));
                valid = _mm256_and_pd(valid, _mm256_cmp_pd(t, vtmax, _CMP_LE_OQ));
                best_t = _mm256_min_pd(best_t, select_or_inf(valid, t));
            }
        }

        // end spheres; sphere at A uses band y <= 0, sphere at B y >= m
        {
            const __m256d disc =
                _mm256_sub_pd(_mm256_mul_pd(doa, doa), _mm256_mul_pd(dd, _mm256_sub_pd(oaoa, r2)));
            const __m256d gate = _mm256_cmp_pd(disc, zero, _CMP_GE_OQ);
            const __m256d sq = _mm256_sqrt_pd(disc);
            const __m256d neg = _mm256_sub_pd(zero, doa);
            for (int root = 0; root < 2; ++root) {
                const __m256d numer = root == 0 ? _mm256_sub_pd(neg, sq) : _mm256_add_pd(neg, sq);
                const __m256d t = _mm256_div_pd(numer, dd);
                const __m256d y = _mm256_add_pd(caoa, _mm256_mul_pd(t, card));
                __m256d valid = _mm256_and_pd(gate, _mm256_cmp_pd(y, zero, _CMP_LE_OQ));
                valid = _mm256_and_pd(valid, _mm256_cmp_pd(t, vtmin, _CMP_GT_OQ));
                valid = _mm256_and_pd(valid, _mm256_cmp_pd(t, vtmax, _CMP_LE_OQ));
                best_t = _mm256_min_pd(best_t, select_or_inf(valid, t));
            }
        }
        {
            const __m256d obx = _mm256_sub_pd(oax, bax);
            const __m256d oby = _mm256_sub_pd(oay, bay);
            const __m256d obz = _mm256_sub_pd(oaz, baz);
            const __m256d dob = _mm256_add_pd(
                _mm256_add_pd(_mm256_mul_pd(vdx, obx), _mm256_mul_pd(vdy, oby)),
                _mm256_mul_pd(dzs, obz));
            const __m256d obob = _mm256_add_pd(
                _mm256_add_pd(_mm256_mul_pd(obx, obx), _mm256_mul_pd(oby, oby)),
                _mm256_mul_pd(obz, obz));
            const __m256d disc =
                _mm256_sub_pd(_mm256_mul_pd(dob, dob), _mm256_mul_pd(dd, _mm256_sub_pd(obob, r2)));
            const __m256d gate = _mm256_cmp_pd(disc, zero, _CMP_GE_OQ);
            const __m256d sq = _mm256_sqrt_pd(disc);
            const __m256d neg = _mm256_sub_pd(zero, dob);
            for (int root = 0; root < 2; ++root) {
                const __m256d numer = root == 0 ? _mm256_sub_pd(neg, sq) : _mm256_add_pd(neg, sq);
                const __m256d t = _mm256_div_pd(numer, dd);
                const __m256d y = _mm256_add_pd(caoa, _mm256_mul_pd(t, card));
                __m256d valid = _mm256_and_pd(gate, _mm256_cmp_pd(y, m, _CMP_GE_OQ));
                valid = _mm256_and_pd(valid, _mm256_cmp_pd(t, vtmin, _CMP_GT_OQ));
                valid = _mm256_and_pd(valid, _mm256_cmp_pd(t, vtmax, _CMP_LE_OQ));
                best_t = _mm256_min_pd(best_t, select_or_inf(valid, t));
            }
        }

        alignas(32) double lane_t[4];
        _mm256_store_pd(lane_t, best_t);
        for (int lane = 0; lane < 4; ++lane) {
            if (lane_t[lane] < kInf) {
                merge_hit(best, lane_t[lane], static_cast<std::int32_t>(indices[i + lane]));
            }
        }
    }

    for (; i < count; ++i) {
        const RayHit hit = capsule_hit(caps, indices[i], o, d, t_min, t_max);
        if (hit.hit()) merge_hit(best, hit.t, hit.index);
    }
    return best;
}

inline std::uint64_t popcount32(int mask) {
    return std::popcount(static_cast<std::uint32_t>(mask));
}

std::uint64_t count_levels_avx2(const std::uint8_t* data, std::size_t n,
                                const std::uint8_t* levels, std::size_t k,
                                std::uint64_t* counts) {
    std::uint64_t matched = 0;
    const std::size_t vec_end = n - n % 32;
    for (std::size_t level = 0; level < k; ++level) {
        const __m256i needle = _mm256_set1_epi8(static_cast<char>(levels[level]));
        std::uint64_t total = 0;
        for (std::size_t i = 0; i < vec_end; i += 32) {
            __m256i chunk;
            std::memcpy(&chunk, data + i, sizeof(chunk));
            total += popcount32(_mm256_movemask_epi8(_mm256_cmpeq_epi8(chunk, needle)));
        }
        for (std::size_t i = vec_end; i < n; ++i) {
            total += data[i] == levels[level] ? 1 : 0;
        }
        counts[level] = total;
        matched += total;
    }
    return matched;
}

std::uint64_t confusion_avx2(const std::uint8_t* gt, const std::uint8_t* pred, std::size_t n,
                             const std::uint8_t* levels, std::size_t k, std::uint64_t* counts) {
    std::uint64_t matched = 0;
    const std::size_t vec_end = n - n % 32;
    for (std::size_t row = 0; row < k; ++row) {
        const __m256i needle_gt = _mm256_set1_epi8(static_cast<char>(levels[row]));
        for (std::size_t col = 0; col < k; ++col) {
            const __m256i needle_pred = _mm256_set1_epi8(static_cast<char>(levels[col]));
            std::uint64_t total = 0;
            for (std::size_t i = 0; i < vec_end; i += 32) {
                __m256i chunk_gt;
                __m256i chunk_pred;
                std::memcpy(&chunk_gt, gt + i, sizeof(chunk_gt));
                std::memcpy(&chunk_pred, pred + i, sizeof(chunk_pred));
                const __m256i both = _mm256_and_si256(_mm256_cmpeq_epi8(chunk_gt, needle_gt),
                                                      _mm256_cmpeq_epi8(chunk_pred, needle_pred));
                total += popcount32(_mm256_movemask_epi8(both));
            }
            for (std::size_t i = vec_end; i < n; ++i) {
                total += (gt[i] == levels[row] && pred[i] == levels[col]) ? 1 : 0;
            }
            counts[row * k + col] += total;
            matched += total;
        }
    }
    return matched;
}

const Backend kAvx2Backend{"avx2", raycast_avx2, count_levels_avx2, confusion_avx2};

}  // namespace

const Backend* avx2_backend() {
    static const Backend* backend =
        __builtin_cpu_supports("avx2") ? &kAvx2Backend : nullptr;
    return backend;
}

}  // namespace printseg::kernels

#endif  // PRINTSEG_HAVE_AVX2
