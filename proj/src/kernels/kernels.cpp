#include "printseg/kernels.hpp"

#include <array>
#include <cmath>
#include <cstdlib>
#include <cstring>
#include <limits>
#include <mutex>

#include "printseg/util.hpp"

namespace printseg::kernels {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

inline void merge_hit(RayHit& best, double t, std::int32_t index) {
    if (t < best.t || (t == best.t && index < best.index)) {
        best.t = t;
        best.index = index;
    }
}

}  // namespace

// The capsule solid in "stretched" space (z scaled by inv_scale about the
// z = az plane) is a plain sphere-swept segment. Each boundary component
// (cylinder body, end sphere at A, end sphere at B) yields a quadratic; a
// root counts when its axis coordinate y = dot(p - A, B - A) falls in that
// component's band. The smallest valid root over all six candidates is the
// hit, which also covers rays that start inside the solid (they pick up the
// exit root). The AVX2 variant in kernels_avx2.cpp mirrors this operation
// order exactly; with contraction disabled both produce identical bits.
RayHit capsule_hit(const CapsuleSoA& caps, std::uint32_t i, const Vec3& o, const Vec3& d,
                   double t_min, double t_max) {
    const double inv_s = caps.inv_scale[i];
    const double az = caps.az[i];

    const double dzs = d.z * inv_s;
    const double oaz = (o.z - az) * inv_s;
    const double bax = caps.bx[i] - caps.ax[i];
    const double bay = caps.by[i] - caps.ay[i];
    const double baz = (caps.bz[i] - az) * inv_s;
    const double oax = o.x - caps.ax[i];
    const double oay = o.y - caps.ay[i];

    const double dd = d.x * d.x + d.y * d.y + dzs * dzs;
    const double m = bax * bax + bay * bay + baz * baz;
    const double card = bax * d.x + bay * d.y + baz * dzs;
    const double caoa = bax * oax + bay * oay + baz * oaz;
    const double doa = d.x * oax + d.y * oay + dzs * oaz;
    const double oaoa = oax * oax + oay * oay + oaz * oaz;
    const double r2 = caps.radius[i] * caps.radius[i];

    RayHit best{kInf, -1};
    const std::int32_t index = static_cast<std::int32_t>(i);

    // Cylinder body (quadratic scaled by m to avoid a normalization divide).
    const double qa = m * dd - card * card;
    const double qb = m * doa - caoa * card;
    const double qc = m * (oaoa - r2) - caoa * caoa;
    const double disc_cyl = qb * qb - qa * qc;
    if (disc_cyl >= 0.0 && qa > 0.0) {
        const double sq = std::sqrt(disc_cyl);
        const double t1 = (-qb - sq) / qa;
        const double y1 = caoa + t1 * card;
        if (y1 >= 0.0 && y1 <= m && t1 > t_min && t1 <= t_max) merge_hit(best, t1, index);
        const double t2 = (-qb + sq) / qa;
        const double y2 = caoa + t2 * card;
        if (y2 >= 0.0 && y2 <= m && t2 > t_min && t2 <= t_max) merge_hit(best, t2, index);
    }

    // End sphere at A (valid when the hit projects before the segment start).
    const double disc_a = doa * doa - dd * (oaoa - r2);
    if (disc_a >= 0.0) {
        const double sq = std::sqrt(disc_a);
        const double t1 = (-doa - sq) / dd;
        const double y1 = caoa + t1 * card;
        if (y1 <= 0.0 && t1 > t_min && t1 <= t_max) merge_hit(best, t1, index);
        const double t2 = (-doa + sq) / dd;
        const double y2 = caoa + t2 * card;
        if (y2 <= 0.0 && t2 > t_min && t2 <= t_max) merge_hit(best, t2, index);
    }

    // End sphere at B.
    const double obx = oax - bax;
    const double oby = oay - bay;
    const double obz = oaz - baz;
    const double dob = d.x * obx + d.y * oby + dzs * obz;
    const double obob = obx * obx + oby * oby + obz * obz;
    const double disc_b = dob * dob - dd * (obob - r2);
    if (disc_b >= 0.0) {
        const double sq = std::sqrt(disc_b);
        const double t1 = (-dob - sq) / dd;
        const double y1 = caoa + t1 * card;
        if (y1 >= m && t1 > t_min && t1 <= t_max) merge_hit(best, t1, index);
        const double t2 = (-dob + sq) / dd;
        const double y2 = caoa + t2 * card;
        if (y2 >= m && t2 > t_min && t2 <= t_max) merge_hit(best, t2, index);
    }

    return best;
}

namespace {

RayHit raycast_scalar(const CapsuleSoA& caps, const std::uint32_t* indices, std::size_t count,
                      const Vec3& o, const Vec3& d, double t_min, double t_max) {
    RayHit best{kInf, -1};
    for (std::size_t i = 0; i < count; ++i) {
        const RayHit hit = capsule_hit(caps, indices[i], o, d, t_min, t_max);
        if (hit.hit()) merge_hit(best, hit.t, hit.index);
    }
    return best;
}

std::uint64_t count_levels_scalar(const std::uint8_t* data, std::size_t n,
                                  const std::uint8_t* levels, std::size_t k,
                                  std::uint64_t* counts) {
    std::array<std::uint8_t, 256> slot{};
    slot.fill(0xff);
    for (std::size_t i = 0; i < k; ++i) {
        slot[levels[i]] = static_cast<std::uint8_t>(i);
        counts[i] = 0;
    }
    std::uint64_t matched = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const std::uint8_t s = slot[data[i]];
        if (s != 0xff) {
            ++counts[s];
            ++matched;
        }
    }
    return matched;
}

std::uint64_t confusion_scalar(const std::uint8_t* gt, const std::uint8_t* pred, std::size_t n,
                               const std::uint8_t* levels, std::size_t k, std::uint64_t* counts) {
    std::array<std::uint8_t, 256> slot{};
    slot.fill(0xff);
    for (std::size_t i = 0; i < k; ++i) {
        slot[levels[i]] = static_cast<std::uint8_t>(i);
    }
    std::uint64_t matched = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const std::uint8_t sg = slot[gt[i]];
        const std::uint8_t sp = slot[pred[i]];
        if (sg != 0xff && sp != 0xff) {
            ++counts[sg * k + sp];
            ++matched;
        }
    }
    return matched;
}

const Backend kScalarBackend{"scalar", raycast_scalar, count_levels_scalar, confusion_scalar};

}  // namespace

const Backend& scalar_backend() { return kScalarBackend; }

#if !defined(PRINTSEG_HAVE_AVX2)
const Backend* avx2_backend() { return nullptr; }
#endif

const Backend& active_backend() {
    static const Backend* selected = [] {
        const Backend* choice = avx2_backend() ? avx2_backend() : &kScalarBackend;
        if (const char* env = std::getenv("PRINTSEG_SIMD")) {
            const std::string value = lowercase(trim(env));
            if (value == "scalar") {
                choice = &kScalarBackend;
            } else if (value == "avx2") {
                if (const Backend* avx2 = avx2_backend()) {
                    choice = avx2;
                } else {
                    log_warn("PRINTSEG_SIMD=avx2 requested but AVX2 is unavailable; "
                             "using scalar kernels");
                }
            } else if (!value.empty()) {
                log_warn("unknown PRINTSEG_SIMD value '" + value + "'; using " +
                         std::string(choice->name) + " kernels");
            }
        }
        log_debug(std::string("kernel backend: ") + choice->name);
        return choice;
    }();
    return *selected;
}

}  // namespace printseg::kernels
