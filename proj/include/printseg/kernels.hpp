#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "printseg/geom.hpp"

namespace printseg::kernels {

// Structure-of-arrays capsule store feeding the raycast kernels. Beads are
// vertically scaled capsules: a sphere-swept segment squashed along world z
// about the plane z = az (inv_scale = width/height >= 1 stretches rays into
// the space where the solid is a plain capsule).
struct CapsuleSoA {
    std::vector<double> ax, ay, az;
    std::vector<double> bx, by, bz;
    std::vector<double> radius;
    std::vector<double> inv_scale;

    std::size_t size() const { return ax.size(); }

    void push(const Vec3& a, const Vec3& b, double r, double vertical_scale) {
        ax.push_back(a.x);
        ay.push_back(a.y);
        az.push_back(a.z);
        bx.push_back(b.x);
        by.push_back(b.y);
        bz.push_back(b.z);
        radius.push_back(r);
        inv_scale.push_back(1.0 / vertical_scale);
    }
};

struct RayHit {
    double t = 0.0;        // +inf on miss
    std::int32_t index = -1;

    bool hit() const { return index >= 0; }
};

// Nearest hit among capsules[indices[0..count)]. Candidates must satisfy
// t_min < t <= t_max; ties on t resolve to the smallest capsule index so the
// result is independent of traversal order.
using RaycastFn = RayHit (*)(const CapsuleSoA& capsules, const std::uint32_t* indices,
                             std::size_t count, const Vec3& origin, const Vec3& dir,
                             double t_min, double t_max);

// Counts occurrences of each of the k byte levels in data; counts[k] values
// are written, and the return value is the number of bytes matching any
// level (== n exactly when data stays inside the palette).
using CountLevelsFn = std::uint64_t (*)(const std::uint8_t* data, std::size_t n,
                                        const std::uint8_t* levels, std::size_t k,
                                        std::uint64_t* counts);

// Accumulates counts[i*k + j] += #pixels with gt == levels[i] && pred ==
// levels[j]; returns the number of pixels tallied.
using ConfusionFn = std::uint64_t (*)(const std::uint8_t* gt, const std::uint8_t* pred,
                                      std::size_t n, const std::uint8_t* levels, std::size_t k,
                                      std::uint64_t* counts);

struct Backend {
    const char* name;
    RaycastFn raycast;
    CountLevelsFn count_levels;
    ConfusionFn confusion;
};

const Backend& scalar_backend();
// Null when the build or the running CPU lacks AVX2.
const Backend* avx2_backend();

// Best available backend, honoring a PRINTSEG_SIMD=scalar|avx2 override read
// once on first use.
const Backend& active_backend();

// Single-capsule hit used by the scalar backend and the AVX2 remainder loop;
// exposed for the geometry oracle tests.
RayHit capsule_hit(const CapsuleSoA& capsules, std::uint32_t index, const Vec3& origin,
                   const Vec3& dir, double t_min, double t_max);

}  // namespace printseg::kernels
