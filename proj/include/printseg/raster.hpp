#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "printseg/geom.hpp"
#include "printseg/scene.hpp"
#include "printseg/semantics.hpp"

namespace printseg {

struct Projected {
    double u = 0.0;      // pixel x
    double v = 0.0;      // pixel y
    double depth = 0.0;  // camera-space distance along the view axis
};

// Pinhole projection; nullopt when p lies at or behind the camera plane.
std::optional<Projected> project(const Camera& camera, const Vec3& p);

// Primary ray through the center of pixel (px, py).
Vec3 pixel_ray_direction(const Camera& camera, int px, int py);

// Bead solid: sphere-swept segment, squashed vertically so the cross section
// is width wide and height tall.
struct CapsulePrimitive {
    Vec3 a;
    Vec3 b;
    double radius = 0.0;          // width / 2
    double vertical_scale = 1.0;  // height / width, clamped to (0, 1]
    std::uint8_t class_label = 0;
    Rgb color{0.8, 0.8, 0.8};
};

CapsulePrimitive capsule_from_segment(const ExtrusionSegment& segment, std::uint8_t label,
                                      const Rgb& color);

struct CapsuleHit {
    double t = 0.0;  // distance along the unit ray direction, mm
    Vec3 normal;     // unit outward surface normal
};

// Nearest positive intersection of a unit-direction ray with one capsule.
std::optional<CapsuleHit> raycast_capsule(const Vec3& origin, const Vec3& dir,
                                          const CapsulePrimitive& capsule);

// Lambertian diffuse plus Blinn-Phong specular, summed over the sun and the
// point lights (inverse-square falloff), clamped to [0,1] at the end.
Rgb shade(const Vec3& normal, const Vec3& point, const Vec3& view_dir, const SunLight& sun,
          const std::vector<PointLight>& points, const Material& material);

struct FrameBuffers {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> color;  // rgb8
    std::vector<std::uint8_t> label;  // grayscale mask levels
    std::vector<double> depth;        // +inf where nothing was hit
};

struct ImagePairMeta {
    std::string source_digest;
    DatasetKind kind = DatasetKind::WholePart;
    std::size_t completion_layer = 0;
    std::uint64_t frame_index = 0;
    std::uint64_t seed = 0;
};

struct ImagePair {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> image;  // rgb8
    std::vector<std::uint8_t> mask;   // grayscale
    ImagePairMeta meta;
};

enum class RenderMode {
    Shaded,
    // Shading disabled; every mask level renders as a unique flat color so
    // the color image can be decoded back into the label buffer exactly.
    FlatId,
};

struct RenderOptions {
    RenderMode mode = RenderMode::Shaded;
    int jobs = 1;
    bool shadows = false;
    // Texture tables from the SceneRanges the scene was sampled with; the
    // built-in defaults are used when left null.
    const std::vector<TextureSpec>* bed_textures = nullptr;
    const std::vector<TextureSpec>* background_textures = nullptr;
};

// Flat-ID palette helpers (one saturated color per mask level).
Rgb flat_id_color(std::uint8_t label);
std::optional<std::uint8_t> flat_id_decode(std::uint8_t r, std::uint8_t g, std::uint8_t b);

FrameBuffers render_frame_buffers(const SceneInstance& scene, const ClassifiedToolpath& ct,
                                  DatasetKind kind, const RenderOptions& options = {});

ImagePair render_frame(const SceneInstance& scene, const ClassifiedToolpath& ct,
                       DatasetKind kind, const RenderOptions& options = {},
                       std::uint64_t frame_index = 0);

}  // namespace printseg
