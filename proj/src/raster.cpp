#include "printseg/raster.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <limits>
#include <thread>

#include "printseg/kernels.hpp"
#include "printseg/util.hpp"

namespace printseg {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kDegToRad = 3.14159265358979323846 / 180.0;
constexpr double kRayEpsilon = 1e-9;

struct CameraBasis {
    Vec3 fwd;
    Vec3 right;
    Vec3 up;
    double focal_px = 0.0;
};

CameraBasis make_basis(const Camera& camera) {
    if (camera.position == camera.look_at) {
        throw Error(ErrorCategory::Validation, "camera position equals its look-at point");
    }
    CameraBasis basis;
    basis.fwd = normalized(camera.look_at - camera.position);
    Vec3 right = cross(basis.fwd, camera.up);
    if (length_squared(right) < 1e-18) {
        right = cross(basis.fwd, Vec3{0.0, 1.0, 0.0});
        if (length_squared(right) < 1e-18) right = cross(basis.fwd, Vec3{1.0, 0.0, 0.0});
    }
    basis.right = normalized(right);
    basis.up = cross(basis.right, basis.fwd);
    basis.focal_px =
        (camera.height * 0.5) / std::tan(camera.vertical_fov_deg * 0.5 * kDegToRad);
    return basis;
}

inline std::uint8_t to_byte(double channel) {
    return static_cast<std::uint8_t>(std::lround(std::clamp(channel, 0.0, 1.0) * 255.0));
}

// Flat-ID palette: one saturated color per mask level so a decoded render
// can be compared against the label buffer pixel for pixel.
constexpr std::array<std::uint8_t, 3> kFlatColors[] = {
    {0, 0, 0},       // background (0)
    {230, 25, 75},   // shell (85)
    {60, 180, 75},   // support (170)
    {0, 130, 200},   // part / top layer / infill (255)
};
constexpr std::uint8_t kFlatLevels[] = {0, 85, 170, 255};

Vec3 capsule_normal(const kernels::CapsuleSoA& caps, std::uint32_t i, const Vec3& o,
                    const Vec3& d, double t) {
    const double inv_s = caps.inv_scale[i];
    const double az = caps.az[i];
    const Vec3 p = o + d * t;
    const Vec3 ps{p.x, p.y, az + (p.z - az) * inv_s};
    const Vec3 a{caps.ax[i], caps.ay[i], az};
    const Vec3 bs{caps.bx[i], caps.by[i], az + (caps.bz[i] - az) * inv_s};
    const Vec3 ba = bs - a;
    const double m = length_squared(ba);
    const double u = m > 0.0 ? std::clamp(dot(ps - a, ba) / m, 0.0, 1.0) : 0.0;
    const Vec3 q = a + ba * u;
    const Vec3 ns = ps - q;
    return normalized({ns.x, ns.y, ns.z * inv_s});
}

// Uniform grid over capsule bounding boxes. Cell edge is four times the
// widest bead; total cell count is capped by coarsening the grid, which only
// costs speed, never correctness.
class CapsuleGrid {
  public:
    CapsuleGrid(const ClassifiedToolpath& ct, const std::vector<std::uint8_t>& labels) {
        const std::vector<ExtrusionSegment>& segments = ct.toolpath.segments;
        labels_ = labels;
        double max_width = 0.0;
        for (const ExtrusionSegment& segment : segments) {
            max_width = std::max(max_width, segment.width);
        }
        for (const ExtrusionSegment& segment : segments) {
            const double scale =
                std::clamp(segment.height / segment.width, 1e-6, 1.0);
            soa_.push(segment.start, segment.end, segment.width * 0.5, scale);
        }
        if (segments.empty()) return;

        for (std::size_t i = 0; i < segments.size(); ++i) {
            bounds_.extend(capsule_box(i));
        }
        cell_ = std::max(4.0 * max_width, 1e-3);
        auto axis_cells = [&](double extent) {
            return std::max(1, static_cast<int>(std::ceil(extent / cell_)));
        };
        const Vec3 size = bounds_.size();
        nx_ = axis_cells(size.x);
        ny_ = axis_cells(size.y);
        nz_ = axis_cells(size.z);
        while (static_cast<long long>(nx_) * ny_ * nz_ > (1 << 21)) {
            cell_ *= 2.0;
            nx_ = axis_cells(size.x);
            ny_ = axis_cells(size.y);
            nz_ = axis_cells(size.z);
        }

        std::vector<std::vector<std::uint32_t>> buckets(
            static_cast<std::size_t>(nx_) * ny_ * nz_);
        for (std::size_t i = 0; i < segments.size(); ++i) {
            const Aabb box = capsule_box(i);
            int lo[3];
            int hi[3];
            cell_of(box.lo, lo);
            cell_of(box.hi, hi);
            for (int z = lo[2]; z <= hi[2]; ++z) {
                for (int y = lo[1]; y <= hi[1]; ++y) {
                    for (int x = lo[0]; x <= hi[0]; ++x) {
                        buckets[cell_index(x, y, z)].push_back(static_cast<std::uint32_t>(i));
                    }
                }
            }
        }
        cell_start_.resize(buckets.size() + 1, 0);
        for (std::size_t i = 0; i < buckets.size(); ++i) {
            cell_start_[i + 1] = cell_start_[i] + static_cast<std::uint32_t>(buckets[i].size());
        }
        cell_items_.resize(cell_start_.back());
        for (std::size_t i = 0; i < buckets.size(); ++i) {
            std::copy(buckets[i].begin(), buckets[i].end(),
                      cell_items_.begin() + cell_start_[i]);
        }
    }

    bool empty() const { return soa_.size() == 0; }
    const kernels::CapsuleSoA& capsules() const { return soa_; }
    std::uint8_t label_of(std::uint32_t index) const { return labels_[index]; }

    // Nearest capsule hit with t in (kRayEpsilon, t_limit]; ties resolve to
    // the smallest capsule index independent of traversal order.
    kernels::RayHit trace(const Vec3& o, const Vec3& d, double t_limit,
                          const kernels::Backend& backend) const {
        kernels::RayHit best{kInf, -1};
        if (empty()) return best;

        double tin = 0.0;
        double tout = t_limit;
        for (int axis = 0; axis < 3; ++axis) {
            const double origin = axis == 0 ? o.x : axis == 1 ? o.y : o.z;
            const double dir = axis == 0 ? d.x : axis == 1 ? d.y : d.z;
            const double lo = axis == 0 ? bounds_.lo.x : axis == 1 ? bounds_.lo.y : bounds_.lo.z;
            const double hi = axis == 0 ? bounds_.hi.x : axis == 1 ? bounds_.hi.y : bounds_.hi.z;
            if (std::abs(dir) < 1e-300) {
                if (origin < lo || origin > hi) return best;
            } else {
                double t0 = (lo - origin) / dir;
                double t1 = (hi - origin) / dir;
                if (t0 > t1) std::swap(t0, t1);
                tin = std::max(tin, t0);
                tout = std::min(tout, t1);
            }
        }
        if (tin > tout) return best;

        const Vec3 entry = o + d * tin;
        int idx[3];
        cell_of(entry, idx);
        int step[3];
        double t_max[3];
        double t_delta[3];
        const double dirs[3] = {d.x, d.y, d.z};
        const double los[3] = {bounds_.lo.x, bounds_.lo.y, bounds_.lo.z};
        const double origins[3] = {o.x, o.y, o.z};
        const int counts[3] = {nx_, ny_, nz_};
        for (int axis = 0; axis < 3; ++axis) {
            if (std::abs(dirs[axis]) < 1e-300) {
                step[axis] = 0;
                t_max[axis] = kInf;
                t_delta[axis] = kInf;
            } else if (dirs[axis] > 0.0) {
                step[axis] = 1;
                const double boundary = los[axis] + (idx[axis] + 1) * cell_;
                t_max[axis] = (boundary - origins[axis]) / dirs[axis];
                t_delta[axis] = cell_ / dirs[axis];
            } else {
                step[axis] = -1;
                const double boundary = los[axis] + idx[axis] * cell_;
                t_max[axis] = (boundary - origins[axis]) / dirs[axis];
                t_delta[axis] = -cell_ / dirs[axis];
            }
        }

        while (true) {
            const std::size_t cell = cell_index(idx[0], idx[1], idx[2]);
            const std::uint32_t begin = cell_start_[cell];
            const std::uint32_t end = cell_start_[cell + 1];
            if (end > begin) {
                const kernels::RayHit hit =
                    backend.raycast(soa_, cell_items_.data() + begin, end - begin, o, d,
                                    kRayEpsilon, std::min(best.t, t_limit));
                if (hit.index >= 0 &&
                    (hit.t < best.t || (hit.t == best.t && hit.index < best.index))) {
                    best = hit;
                }
            }
            const int axis = t_max[0] <= t_max[1]
                                 ? (t_max[0] <= t_max[2] ? 0 : 2)
                                 : (t_max[1] <= t_max[2] ? 1 : 2);
            const double t_next = t_max[axis];
            if (best.t <= t_next || t_next > tout) break;
            idx[axis] += step[axis];
            if (idx[axis] < 0 || idx[axis] >= counts[axis]) break;
            t_max[axis] += t_delta[axis];
        }
        return best;
    }

  private:
    Aabb capsule_box(std::size_t i) const {
        Aabb box;
        const double r = soa_.radius[i];
        box.extend(Vec3{soa_.ax[i] - r, soa_.ay[i] - r, soa_.az[i] - r});
        box.extend(Vec3{soa_.ax[i] + r, soa_.ay[i] + r, soa_.az[i] + r});
        box.extend(Vec3{soa_.bx[i] - r, soa_.by[i] - r, soa_.bz[i] - r});
        box.extend(Vec3{soa_.bx[i] + r, soa_.by[i] + r, soa_.bz[i] + r});
        return box;
    }

    void cell_of(const Vec3& p, int out[3]) const {
        out[0] = std::clamp(static_cast<int>(std::floor((p.x - bounds_.lo.x) / cell_)), 0, nx_ - 1);
        out[1] = std::clamp(static_cast<int>(std::floor((p.y - bounds_.lo.y) / cell_)), 0, ny_ - 1);
        out[2] = std::clamp(static_cast<int>(std::floor((p.z - bounds_.lo.z) / cell_)), 0, nz_ - 1);
    }

    std::size_t cell_index(int x, int y, int z) const {
        return (static_cast<std::size_t>(z) * ny_ + y) * nx_ + x;
    }

    kernels::CapsuleSoA soa_;
    std::vector<std::uint8_t> labels_;
    Aabb bounds_;
    double cell_ = 1.0;
    int nx_ = 1;
    int ny_ = 1;
    int nz_ = 1;
    std::vector<std::uint32_t> cell_start_;
    std::vector<std::uint32_t> cell_items_;
};

std::array<std::uint8_t, 3> flat_bytes(std::uint8_t label) {
    for (std::size_t i = 0; i < std::size(kFlatLevels); ++i) {
        if (kFlatLevels[i] == label) return kFlatColors[i];
    }
    return {255, 0, 255};  // out-of-palette marker; never produced by relabeling
}

struct BedHit {
    double t = kInf;
    bool valid = false;
};

BedHit intersect_bed(const Vec3& o, const Vec3& d) {
    BedHit hit;
    if (std::abs(d.z) < 1e-12) return hit;
    const double t = -o.z / d.z;
    if (t > kRayEpsilon) {
        hit.t = t;
        hit.valid = true;
    }
    return hit;
}

bool occluded(const CapsuleGrid& grid, const kernels::Backend& backend, const Vec3& from,
              const Vec3& toward, double max_distance) {
    return grid.trace(from, toward, max_distance, backend).index >= 0;
}

}  // namespace

std::optional<Projected> project(const Camera& camera, const Vec3& p) {
    const CameraBasis basis = make_basis(camera);
    const Vec3 v = p - camera.position;
    const double z = dot(v, basis.fwd);
    if (z <= 1e-12) return std::nullopt;
    Projected out;
    out.u = camera.width * 0.5 + basis.focal_px * dot(v, basis.right) / z;
    out.v = camera.height * 0.5 - basis.focal_px * dot(v, basis.up) / z;
    out.depth = z;
    return out;
}

Vec3 pixel_ray_direction(const Camera& camera, int px, int py) {
    const CameraBasis basis = make_basis(camera);
    const double a = (px + 0.5 - camera.width * 0.5) / basis.focal_px;
    const double b = (camera.height * 0.5 - (py + 0.5)) / basis.focal_px;
    return normalized(basis.right * a + basis.up * b + basis.fwd);
}

CapsulePrimitive capsule_from_segment(const ExtrusionSegment& segment, std::uint8_t label,
                                      const Rgb& color) {
    CapsulePrimitive capsule;
    capsule.a = segment.start;
    capsule.b = segment.end;
    capsule.radius = segment.width * 0.5;
    capsule.vertical_scale = std::clamp(segment.height / segment.width, 1e-6, 1.0);
    capsule.class_label = label;
    capsule.color = color;
    return capsule;
}

std::optional<CapsuleHit> raycast_capsule(const Vec3& origin, const Vec3& dir,
                                          const CapsulePrimitive& capsule) {
    kernels::CapsuleSoA soa;
    soa.push(capsule.a, capsule.b, capsule.radius, capsule.vertical_scale);
    const kernels::RayHit hit = kernels::capsule_hit(soa, 0, origin, dir, kRayEpsilon, kInf);
    if (!hit.hit()) return std::nullopt;
    return CapsuleHit{hit.t, capsule_normal(soa, 0, origin, dir, hit.t)};
}

Rgb shade(const Vec3& normal, const Vec3& point, const Vec3& view_dir, const SunLight& sun,
          const std::vector<PointLight>& points, const Material& material) {
    const double shininess = std::exp2(1.0 + (1.0 - material.roughness) * 7.0);
    Rgb total{0.0, 0.0, 0.0};

    auto add_light = [&](const Vec3& light_dir, const Rgb& light_color, double irradiance) {
        const double ndotl = dot(normal, light_dir);
        if (ndotl <= 0.0) return;
        Rgb contribution = material.base_color * ndotl;
        const Vec3 half = normalized(light_dir + view_dir);
        const double ndoth = dot(normal, half);
        if (ndoth > 0.0 && material.specular > 0.0) {
            const double spec = material.specular * std::pow(ndoth, shininess);
            contribution = contribution + Rgb{spec, spec, spec};
        }
        total = total + contribution * light_color * irradiance;
    };

    add_light(sun.direction, sun.color, sun.intensity);
    for (const PointLight& light : points) {
        const Vec3 delta = light.position - point;
        const double dist2 = length_squared(delta);
        if (dist2 <= 0.0) continue;
        add_light(delta / std::sqrt(dist2), light.color, light.intensity / dist2);
    }
    return clamp01(total);
}

Rgb flat_id_color(std::uint8_t label) {
    const std::array<std::uint8_t, 3> bytes = flat_bytes(label);
    return {bytes[0] / 255.0, bytes[1] / 255.0, bytes[2] / 255.0};
}

std::optional<std::uint8_t> flat_id_decode(std::uint8_t r, std::uint8_t g, std::uint8_t b) {
    for (std::size_t i = 0; i < std::size(kFlatLevels); ++i) {
        if (kFlatColors[i][0] == r && kFlatColors[i][1] == g && kFlatColors[i][2] == b) {
            return kFlatLevels[i];
        }
    }
    return std::nullopt;
}

FrameBuffers render_frame_buffers(const SceneInstance& scene, const ClassifiedToolpath& ct,
                                  DatasetKind kind, const RenderOptions& options) {
    const Camera& camera = scene.camera;
    if (camera.width <= 0 || camera.height <= 0) {
        throw Error(ErrorCategory::Validation, "render resolution must be positive");
    }
    const CameraBasis basis = make_basis(camera);
    const std::vector<std::uint8_t> labels = relabel_for_dataset(ct, kind);
    const CapsuleGrid grid(ct, labels);
    const kernels::Backend& backend = kernels::active_backend();

    const int width = camera.width;
    const int height = camera.height;
    FrameBuffers buffers;
    buffers.width = width;
    buffers.height = height;
    buffers.color.assign(static_cast<std::size_t>(width) * height * 3, 0);
    buffers.label.assign(static_cast<std::size_t>(width) * height, 0);
    buffers.depth.assign(static_cast<std::size_t>(width) * height, kInf);

    const TextureSpec* bed_texture = nullptr;
    const TextureSpec* background_texture = nullptr;
    // Texture specs live in the ranges config; the scene stores indices. The
    // renderer falls back to built-in defaults when indices run past the
    // default lists (custom configs pass their lists through RenderContext
    // below).
    static const SceneRanges kDefaultRanges;
    const auto& bed_list = options.bed_textures ? *options.bed_textures : kDefaultRanges.bed_textures;
    const auto& bg_list =
        options.background_textures ? *options.background_textures : kDefaultRanges.background_textures;
    bed_texture = &bed_list[std::min<std::size_t>(scene.bed.texture_index, bed_list.size() - 1)];
    background_texture = &bg_list[std::min<std::size_t>(scene.background_texture_index,
                                                        bg_list.size() - 1)];

    const Material bed_material{Rgb{1.0, 1.0, 1.0}, 0.7, 0.15};
    const double bed_angle = scene.bed.rotation_deg * kDegToRad;
    const double bed_cos = std::cos(bed_angle);
    const double bed_sin = std::sin(bed_angle);

    // Drops occluded lights for a surface point when hard shadows are on.
    auto shadowed_lights = [&](const Vec3& point, const Vec3& normal, SunLight& sun,
                               std::vector<PointLight>& points) {
        if (!options.shadows) return;
        const Vec3 offset = point + normal * 1e-6;
        if (occluded(grid, backend, offset, sun.direction, kInf)) {
            sun.intensity = 0.0;
        }
        std::vector<PointLight> visible;
        for (const PointLight& light : points) {
            const Vec3 delta = light.position - offset;
            const double dist = length(delta);
            if (dist <= 0.0 || !occluded(grid, backend, offset, delta / dist, dist)) {
                visible.push_back(light);
            }
        }
        points = std::move(visible);
    };

    auto render_row = [&](int py) {
        for (int px = 0; px < width; ++px) {
            const double a = (px + 0.5 - width * 0.5) / basis.focal_px;
            const double b = (height * 0.5 - (py + 0.5)) / basis.focal_px;
            const Vec3 dir = normalized(basis.right * a + basis.up * b + basis.fwd);

            const kernels::RayHit cap_hit = grid.trace(camera.position, dir, kInf, backend);
            const BedHit bed_hit = intersect_bed(camera.position, dir);

            const std::size_t at = static_cast<std::size_t>(py) * width + px;
            Rgb color;
            std::uint8_t label = 0;
            double depth = kInf;

            if (cap_hit.index >= 0 && (!bed_hit.valid || cap_hit.t <= bed_hit.t)) {
                const auto index = static_cast<std::uint32_t>(cap_hit.index);
                label = grid.label_of(index);
                depth = cap_hit.t * dot(dir, basis.fwd);
                if (options.mode == RenderMode::FlatId) {
                    color = flat_id_color(label);
                } else {
                    const Vec3 point = camera.position + dir * cap_hit.t;
                    const Vec3 normal = capsule_normal(grid.capsules(), index, camera.position,
                                                       dir, cap_hit.t);
                    SunLight sun = scene.sun;
                    std::vector<PointLight> points = scene.points;
                    shadowed_lights(point, normal, sun, points);
                    color = shade(normal, point, dir * -1.0, sun, points, scene.material);
                }
            } else if (bed_hit.valid) {
                depth = bed_hit.t * dot(dir, basis.fwd);
                if (options.mode == RenderMode::FlatId) {
                    color = flat_id_color(0);
                } else {
                    const Vec3 point = camera.position + dir * bed_hit.t;
                    const double tu = (bed_cos * point.x - bed_sin * point.y) / scene.bed.scale +
                                      scene.bed.offset_u;
                    const double tv = (bed_sin * point.x + bed_cos * point.y) / scene.bed.scale +
                                      scene.bed.offset_v;
                    Material material = bed_material;
                    material.base_color = sample_texture(*bed_texture, tu, tv);
                    const Vec3 normal{0.0, 0.0, dir.z < 0.0 ? 1.0 : -1.0};
                    SunLight sun = scene.sun;
                    std::vector<PointLight> points = scene.points;
                    shadowed_lights(point, normal, sun, points);
                    color = shade(normal, point, dir * -1.0, sun, points, material);
                }
            } else {
                if (options.mode == RenderMode::FlatId) {
                    color = flat_id_color(0);
                } else {
                    color = sample_texture(*background_texture,
                                           (px + 0.5) / width, (py + 0.5) / height);
                }
            }

            buffers.label[at] = label;
            buffers.depth[at] = depth;
            buffers.color[at * 3] = to_byte(color.r);
            buffers.color[at * 3 + 1] = to_byte(color.g);
            buffers.color[at * 3 + 2] = to_byte(color.b);
        }
    };

    const int jobs = std::max(1, options.jobs);
    if (jobs == 1) {
        for (int py = 0; py < height; ++py) render_row(py);
    } else {
        std::vector<std::thread> workers;
        std::atomic<int> next_row{0};
        for (int t = 0; t < jobs; ++t) {
            workers.emplace_back([&] {
                for (int py = next_row.fetch_add(1); py < height; py = next_row.fetch_add(1)) {
                    render_row(py);
                }
            });
        }
        for (std::thread& worker : workers) worker.join();
    }
    return buffers;
}

ImagePair render_frame(const SceneInstance& scene, const ClassifiedToolpath& ct,
                       DatasetKind kind, const RenderOptions& options,
                       std::uint64_t frame_index) {
    FrameBuffers buffers = render_frame_buffers(scene, ct, kind, options);
    ImagePair pair;
    pair.width = buffers.width;
    pair.height = buffers.height;
    pair.image = std::move(buffers.color);
    pair.mask = std::move(buffers.label);
    pair.meta.source_digest = to_hex(ct.toolpath.source_digest);
    pair.meta.kind = kind;
    pair.meta.completion_layer = ct.completion_layer;
    pair.meta.frame_index = frame_index;
    pair.meta.seed = scene.rng_seed;
    return pair;
}

}  // namespace printseg
