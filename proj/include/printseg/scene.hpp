#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "printseg/geom.hpp"

namespace printseg {

struct Camera {
    Vec3 position;
    Vec3 look_at;
    Vec3 up{0.0, 0.0, 1.0};
    double vertical_fov_deg = 45.0;
    int width = 512;
    int height = 512;
};

struct SunLight {
    Vec3 direction{0.0, 0.0, 1.0};  // unit vector pointing from the scene toward the light
    double intensity = 1.0;
    Rgb color{1.0, 1.0, 1.0};
};

struct PointLight {
    Vec3 position;
    double intensity = 1.0;  // radiance scale before inverse-square falloff
    Rgb color{1.0, 1.0, 1.0};
};

enum class TextureKind { Checker, Noise, Gradient, Image };

struct ImageRgb {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> pixels;  // rgb, row major
};

struct TextureSpec {
    TextureKind kind = TextureKind::Checker;
    Rgb color_a{0.85, 0.85, 0.85};
    Rgb color_b{0.35, 0.35, 0.35};
    double scale = 10.0;  // feature size in uv units
    std::uint64_t noise_seed = 0;
    std::shared_ptr<const ImageRgb> image;  // for TextureKind::Image
};

// Evaluates a procedural (or image) texture at a uv coordinate.
Rgb sample_texture(const TextureSpec& texture, double u, double v);

struct BedPlacement {
    int texture_index = 0;
    double rotation_deg = 0.0;
    double scale = 1.0;
    double offset_u = 0.0;
    double offset_v = 0.0;
};

struct Material {
    Rgb base_color{0.8, 0.2, 0.2};
    double roughness = 0.5;
    double specular = 0.5;
};

struct SceneInstance {
    Camera camera;
    SunLight sun;
    std::vector<PointLight> points;  // 1..4 sampled point lights
    BedPlacement bed;
    int background_texture_index = 0;
    Material material;
    std::uint64_t rng_seed = 0;
};

struct Keyframe {
    std::uint64_t frame_index = 0;
    SceneInstance scene;
};

struct ValueRange {
    double min = 0.0;
    double max = 0.0;
};

struct CountRange {
    int min = 1;
    int max = 1;
};

// Sampling ranges and fixed render parameters; loadable from JSON with every
// key optional on top of these defaults (documented in the README).
struct SceneRanges {
    ValueRange camera_radius{120.0, 260.0};
    ValueRange camera_elevation_deg{15.0, 70.0};
    ValueRange camera_azimuth_deg{0.0, 360.0};
    ValueRange camera_fov_deg{35.0, 60.0};
    int width = 512;
    int height = 512;

    CountRange point_light_count{1, 4};
    ValueRange sun_elevation_deg{30.0, 80.0};
    ValueRange sun_intensity{0.4, 0.9};
    double sun_color_min = 0.9;
    ValueRange point_radius{100.0, 350.0};
    ValueRange point_elevation_deg{15.0, 75.0};
    ValueRange point_intensity{10000.0, 60000.0};
    double point_color_min = 0.7;

    std::vector<Rgb> material_palette{{0.75, 0.12, 0.12}, {0.12, 0.35, 0.75},
                                      {0.95, 0.55, 0.08}, {0.15, 0.6, 0.25},
                                      {0.9, 0.9, 0.9},    {0.15, 0.15, 0.15}};
    ValueRange material_roughness{0.2, 0.8};
    ValueRange material_specular{0.1, 0.9};

    std::vector<TextureSpec> bed_textures;
    ValueRange bed_rotation_deg{0.0, 360.0};
    ValueRange bed_scale{0.5, 2.0};
    ValueRange bed_offset{0.0, 50.0};
    std::vector<TextureSpec> background_textures;

    bool shadows = false;

    SceneRanges();  // fills default texture lists

    void validate() const;  // throws Error(Config) on min > max and friends
};

SceneRanges load_scene_ranges(const std::filesystem::path& path);
SceneRanges parse_scene_ranges(const std::string& json_text,
                               const std::filesystem::path& base_dir = {});

// Draws a fully resolved scene from the seeded generator; the camera sits on
// a spherical shell around the part centroid and looks at a point inside the
// part bounding box. Resamples (bounded retries) until the box projects at
// least partially into the viewport.
SceneInstance sample_scene(std::uint64_t rng_seed, const SceneRanges& ranges,
                           const Aabb& part_box);

// Componentwise linear interpolation of the continuous fields; discrete
// fields (texture indices, resolution, extra lights) are held from a.
SceneInstance interpolate(const Keyframe& a, const Keyframe& b, double t);

}  // namespace printseg
