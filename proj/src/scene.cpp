#include "printseg/scene.hpp"

#include <cmath>

#include <nlohmann/json.hpp>

#include "printseg/png_io.hpp"
#include "printseg/raster.hpp"
#include "printseg/rng.hpp"
#include "printseg/util.hpp"

namespace printseg {

namespace {

constexpr double kDegToRad = 3.14159265358979323846 / 180.0;
constexpr int kFrustumRetries = 16;

using nlohmann::json;

Vec3 spherical(double radius, double elevation_deg, double azimuth_deg) {
    const double el = elevation_deg * kDegToRad;
    const double az = azimuth_deg * kDegToRad;
    return {radius * std::cos(el) * std::cos(az), radius * std::cos(el) * std::sin(az),
            radius * std::sin(el)};
}

double sample_range(Rng& rng, const ValueRange& range, const char* name) {
    if (range.min > range.max) {
        throw Error(ErrorCategory::Config,
                    std::string(name) + " range is empty (min > max)");
    }
    return rng.uniform(range.min, range.max);
}

// Lattice value noise: FNV-hashed lattice corners, smoothstep-blended.
// Self-contained so noise textures render identically everywhere.
double value_noise(std::uint64_t seed, double u, double v) {
    const double fu = std::floor(u);
    const double fv = std::floor(v);
    const auto corner = [&](long long cu, long long cv) {
        std::uint64_t h = hash_combine({seed, static_cast<std::uint64_t>(cu) * 0x9e3779b97f4a7c15ull,
                                        static_cast<std::uint64_t>(cv)});
        return static_cast<double>(h >> 11) * 0x1.0p-53;
    };
    const long long iu = static_cast<long long>(fu);
    const long long iv = static_cast<long long>(fv);
    const double tu = u - fu;
    const double tv = v - fv;
    const double su = tu * tu * (3.0 - 2.0 * tu);
    const double sv = tv * tv * (3.0 - 2.0 * tv);
    const double top = corner(iu, iv) * (1.0 - su) + corner(iu + 1, iv) * su;
    const double bottom = corner(iu, iv + 1) * (1.0 - su) + corner(iu + 1, iv + 1) * su;
    return top * (1.0 - sv) + bottom * sv;
}

bool bbox_visible(const Camera& camera, const Aabb& box) {
    const Vec3 size = box.size();
    for (int corner = 0; corner < 8; ++corner) {
        const Vec3 p{box.lo.x + ((corner & 1) ? size.x : 0.0),
                     box.lo.y + ((corner & 2) ? size.y : 0.0),
                     box.lo.z + ((corner & 4) ? size.z : 0.0)};
        if (const auto projected = project(camera, p)) {
            if (projected->u >= 0.0 && projected->u < camera.width && projected->v >= 0.0 &&
                projected->v < camera.height) {
                return true;
            }
        }
    }
    if (const auto projected = project(camera, box.center())) {
        if (projected->u >= 0.0 && projected->u < camera.width && projected->v >= 0.0 &&
            projected->v < camera.height) {
            return true;
        }
    }
    return false;
}

SceneInstance sample_scene_once(std::uint64_t rng_seed, const SceneRanges& ranges,
                                const Aabb& part_box) {
    Rng rng(rng_seed);
    SceneInstance scene;
    scene.rng_seed = rng_seed;

    const Vec3 centroid = part_box.center();
    const double radius = sample_range(rng, ranges.camera_radius, "camera.radius");
    const double elevation =
        sample_range(rng, ranges.camera_elevation_deg, "camera.elevation_deg");
    const double azimuth = sample_range(rng, ranges.camera_azimuth_deg, "camera.azimuth_deg");
    scene.camera.position = centroid + spherical(radius, elevation, azimuth);
    scene.camera.look_at = {rng.uniform(part_box.lo.x, part_box.hi.x),
                            rng.uniform(part_box.lo.y, part_box.hi.y),
                            rng.uniform(part_box.lo.z, part_box.hi.z)};
    scene.camera.up = {0.0, 0.0, 1.0};
    scene.camera.vertical_fov_deg = sample_range(rng, ranges.camera_fov_deg, "camera.fov_deg");
    scene.camera.width = ranges.width;
    scene.camera.height = ranges.height;

    const double sun_azimuth = rng.uniform(0.0, 360.0);
    const double sun_elevation =
        sample_range(rng, ranges.sun_elevation_deg, "lights.sun.elevation_deg");
    scene.sun.direction = normalized(spherical(1.0, sun_elevation, sun_azimuth));
    scene.sun.intensity = sample_range(rng, ranges.sun_intensity, "lights.sun.intensity");
    scene.sun.color = {rng.uniform(ranges.sun_color_min, 1.0),
                       rng.uniform(ranges.sun_color_min, 1.0),
                       rng.uniform(ranges.sun_color_min, 1.0)};

    if (ranges.point_light_count.min > ranges.point_light_count.max) {
        throw Error(ErrorCategory::Config, "lights.count range is empty (min > max)");
    }
    const int point_count = static_cast<int>(
        rng.uniform_int(ranges.point_light_count.min, ranges.point_light_count.max));
    for (int i = 0; i < point_count; ++i) {
        PointLight light;
        const double az = rng.uniform(0.0, 360.0);
        const double el = sample_range(rng, ranges.point_elevation_deg, "lights.point.elevation_deg");
        const double r = sample_range(rng, ranges.point_radius, "lights.point.radius");
        light.position = centroid + spherical(r, el, az);
        light.intensity = sample_range(rng, ranges.point_intensity, "lights.point.intensity");
        light.color = {rng.uniform(ranges.point_color_min, 1.0),
                       rng.uniform(ranges.point_color_min, 1.0),
                       rng.uniform(ranges.point_color_min, 1.0)};
        scene.points.push_back(light);
    }

    if (ranges.material_palette.empty()) {
        throw Error(ErrorCategory::Config, "material.palette must not be empty");
    }
    scene.material.base_color = ranges.material_palette[static_cast<std::size_t>(
        rng.uniform_int(0, static_cast<std::int64_t>(ranges.material_palette.size()) - 1))];
    scene.material.roughness =
        sample_range(rng, ranges.material_roughness, "material.roughness");
    scene.material.specular = sample_range(rng, ranges.material_specular, "material.specular");

    if (ranges.bed_textures.empty() || ranges.background_textures.empty()) {
        throw Error(ErrorCategory::Config, "bed/background texture lists must not be empty");
    }
    scene.bed.texture_index = static_cast<int>(
        rng.uniform_int(0, static_cast<std::int64_t>(ranges.bed_textures.size()) - 1));
    scene.bed.rotation_deg = sample_range(rng, ranges.bed_rotation_deg, "bed.rotation_deg");
    scene.bed.scale = sample_range(rng, ranges.bed_scale, "bed.scale");
    scene.bed.offset_u = sample_range(rng, ranges.bed_offset, "bed.offset");
    scene.bed.offset_v = sample_range(rng, ranges.bed_offset, "bed.offset");
    scene.background_texture_index = static_cast<int>(
        rng.uniform_int(0, static_cast<std::int64_t>(ranges.background_textures.size()) - 1));

    return scene;
}

void parse_value_range(const json& node, const char* key, ValueRange& out) {
    if (!node.contains(key)) return;
    const json& range = node.at(key);
    if (range.contains("min")) out.min = range.at("min").get<double>();
    if (range.contains("max")) out.max = range.at("max").get<double>();
}

Rgb parse_rgb(const json& node) {
    if (!node.is_array() || node.size() != 3) {
        throw Error(ErrorCategory::Config, "colors must be [r,g,b] arrays");
    }
    return {node[0].get<double>(), node[1].get<double>(), node[2].get<double>()};
}

TextureSpec parse_texture(const json& node, const std::filesystem::path& base_dir) {
    TextureSpec texture;
    const std::string kind = lowercase(node.value("kind", "checker"));
    if (kind == "checker") texture.kind = TextureKind::Checker;
    else if (kind == "noise") texture.kind = TextureKind::Noise;
    else if (kind == "gradient") texture.kind = TextureKind::Gradient;
    else if (kind == "image") texture.kind = TextureKind::Image;
    else throw Error(ErrorCategory::Config, "unknown texture kind '" + kind + "'");

    if (node.contains("color_a")) texture.color_a = parse_rgb(node.at("color_a"));
    if (node.contains("color_b")) texture.color_b = parse_rgb(node.at("color_b"));
    texture.scale = node.value("scale", texture.scale);
    texture.noise_seed = node.value("noise_seed", texture.noise_seed);
    if (texture.kind == TextureKind::Image) {
        if (!node.contains("path")) {
            throw Error(ErrorCategory::Config, "image texture requires a 'path'");
        }
        std::filesystem::path path = node.at("path").get<std::string>();
        if (path.is_relative() && !base_dir.empty()) path = base_dir / path;
        auto image = std::make_shared<ImageRgb>(read_png_rgb8(path));
        texture.image = std::move(image);
    }
    return texture;
}

}  // namespace

SceneRanges::SceneRanges() {
    TextureSpec checker;
    checker.kind = TextureKind::Checker;
    checker.color_a = {0.82, 0.82, 0.84};
    checker.color_b = {0.42, 0.42, 0.46};
    checker.scale = 12.0;

    TextureSpec noise;
    noise.kind = TextureKind::Noise;
    noise.color_a = {0.55, 0.45, 0.38};
    noise.color_b = {0.25, 0.2, 0.17};
    noise.scale = 25.0;
    noise.noise_seed = 7;

    bed_textures = {checker, noise};

    TextureSpec gradient;
    gradient.kind = TextureKind::Gradient;
    gradient.color_a = {0.65, 0.7, 0.78};
    gradient.color_b = {0.2, 0.22, 0.28};

    TextureSpec bg_noise;
    bg_noise.kind = TextureKind::Noise;
    bg_noise.color_a = {0.5, 0.52, 0.55};
    bg_noise.color_b = {0.28, 0.28, 0.3};
    bg_noise.scale = 6.0;
    bg_noise.noise_seed = 23;

    background_textures = {gradient, bg_noise};
}

void SceneRanges::validate() const {
    const std::pair<const ValueRange*, const char*> ranges_to_check[] = {
        {&camera_radius, "camera.radius"},
        {&camera_elevation_deg, "camera.elevation_deg"},
        {&camera_azimuth_deg, "camera.azimuth_deg"},
        {&camera_fov_deg, "camera.fov_deg"},
        {&sun_elevation_deg, "lights.sun.elevation_deg"},
        {&sun_intensity, "lights.sun.intensity"},
        {&point_radius, "lights.point.radius"},
        {&point_elevation_deg, "lights.point.elevation_deg"},
        {&point_intensity, "lights.point.intensity"},
        {&material_roughness, "material.roughness"},
        {&material_specular, "material.specular"},
        {&bed_rotation_deg, "bed.rotation_deg"},
        {&bed_scale, "bed.scale"},
        {&bed_offset, "bed.offset"},
    };
    for (const auto& [range, name] : ranges_to_check) {
        if (range->min > range->max) {
            throw Error(ErrorCategory::Config,
                        std::string(name) + " range is empty (min > max)");
        }
    }
    if (point_light_count.min > point_light_count.max || point_light_count.min < 0) {
        throw Error(ErrorCategory::Config, "lights.count range is invalid");
    }
    if (camera_fov_deg.min <= 10.0 || camera_fov_deg.max >= 120.0) {
        throw Error(ErrorCategory::Config, "camera.fov_deg must stay within (10, 120)");
    }
    if (width < 16 || height < 16) {
        throw Error(ErrorCategory::Config, "resolution must be at least 16x16");
    }
    if (material_palette.empty()) {
        throw Error(ErrorCategory::Config, "material.palette must not be empty");
    }
    if (bed_textures.empty() || background_textures.empty()) {
        throw Error(ErrorCategory::Config, "bed/background texture lists must not be empty");
    }
}

SceneRanges parse_scene_ranges(const std::string& json_text,
                               const std::filesystem::path& base_dir) {
    json root;
    try {
        root = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw Error(ErrorCategory::Config, std::string("scene config is not valid JSON: ") + e.what());
    }

    SceneRanges ranges;
    try {
        if (root.contains("camera")) {
            const json& camera = root.at("camera");
            parse_value_range(camera, "radius", ranges.camera_radius);
            parse_value_range(camera, "elevation_deg", ranges.camera_elevation_deg);
            parse_value_range(camera, "azimuth_deg", ranges.camera_azimuth_deg);
            parse_value_range(camera, "fov_deg", ranges.camera_fov_deg);
        }
        if (root.contains("resolution")) {
            const json& resolution = root.at("resolution");
            ranges.width = resolution.value("width", ranges.width);
            ranges.height = resolution.value("height", ranges.height);
        }
        if (root.contains("lights")) {
            const json& lights = root.at("lights");
            if (lights.contains("count")) {
                const json& count = lights.at("count");
                ranges.point_light_count.min = count.value("min", ranges.point_light_count.min);
                ranges.point_light_count.max = count.value("max", ranges.point_light_count.max);
            }
            if (lights.contains("sun")) {
                const json& sun = lights.at("sun");
                parse_value_range(sun, "elevation_deg", ranges.sun_elevation_deg);
                parse_value_range(sun, "intensity", ranges.sun_intensity);
                ranges.sun_color_min = sun.value("color_min", ranges.sun_color_min);
            }
            if (lights.contains("point")) {
                const json& point = lights.at("point");
                parse_value_range(point, "radius", ranges.point_radius);
                parse_value_range(point, "elevation_deg", ranges.point_elevation_deg);
                parse_value_range(point, "intensity", ranges.point_intensity);
                ranges.point_color_min = point.value("color_min", ranges.point_color_min);
            }
        }
        if (root.contains("material")) {
            const json& material = root.at("material");
            if (material.contains("palette")) {
                ranges.material_palette.clear();
                for (const json& entry : material.at("palette")) {
                    ranges.material_palette.push_back(parse_rgb(entry));
                }
            }
            parse_value_range(material, "roughness", ranges.material_roughness);
            parse_value_range(material, "specular", ranges.material_specular);
        }
        if (root.contains("bed")) {
            const json& bed = root.at("bed");
            if (bed.contains("textures")) {
                ranges.bed_textures.clear();
                for (const json& entry : bed.at("textures")) {
                    ranges.bed_textures.push_back(parse_texture(entry, base_dir));
                }
            }
            parse_value_range(bed, "rotation_deg", ranges.bed_rotation_deg);
            parse_value_range(bed, "scale", ranges.bed_scale);
            parse_value_range(bed, "offset", ranges.bed_offset);
        }
        if (root.contains("background")) {
            const json& background = root.at("background");
            if (background.contains("textures")) {
                ranges.background_textures.clear();
                for (const json& entry : background.at("textures")) {
                    ranges.background_textures.push_back(parse_texture(entry, base_dir));
                }
            }
        }
        if (root.contains("render")) {
            ranges.shadows = root.at("render").value("shadows", ranges.shadows);
        }
    } catch (const json::exception& e) {
        throw Error(ErrorCategory::Config, std::string("bad scene config value: ") + e.what());
    }

    ranges.validate();
    return ranges;
}

SceneRanges load_scene_ranges(const std::filesystem::path& path) {
    return parse_scene_ranges(read_text_file(path), path.parent_path());
}

Rgb sample_texture(const TextureSpec& texture, double u, double v) {
    switch (texture.kind) {
        case TextureKind::Checker: {
            const double su = std::floor(u / texture.scale);
            const double sv = std::floor(v / texture.scale);
            const bool odd = (static_cast<long long>(su) + static_cast<long long>(sv)) & 1;
            return odd ? texture.color_b : texture.color_a;
        }
        case TextureKind::Noise: {
            const double n = value_noise(texture.noise_seed, u / texture.scale, v / texture.scale);
            return lerp(texture.color_a, texture.color_b, n);
        }
        case TextureKind::Gradient: {
            const double t = v - std::floor(v);
            return lerp(texture.color_a, texture.color_b, t);
        }
        case TextureKind::Image: {
            const ImageRgb& image = *texture.image;
            if (image.width <= 0 || image.height <= 0) return texture.color_a;
            const double fu = (u / texture.scale) - std::floor(u / texture.scale);
            const double fv = (v / texture.scale) - std::floor(v / texture.scale);
            const int px = std::min(image.width - 1, static_cast<int>(fu * image.width));
            const int py = std::min(image.height - 1, static_cast<int>(fv * image.height));
            const std::size_t at = (static_cast<std::size_t>(py) * image.width + px) * 3;
            return {image.pixels[at] / 255.0, image.pixels[at + 1] / 255.0,
                    image.pixels[at + 2] / 255.0};
        }
    }
    return texture.color_a;
}

SceneInstance sample_scene(std::uint64_t rng_seed, const SceneRanges& ranges,
                           const Aabb& part_box) {
    Aabb box = part_box;
    if (box.empty()) {
        box.extend({-1.0, -1.0, 0.0});
        box.extend({1.0, 1.0, 1.0});
    }
    SceneInstance scene = sample_scene_once(rng_seed, ranges, box);
    for (int attempt = 1; attempt <= kFrustumRetries; ++attempt) {
        if (bbox_visible(scene.camera, box)) return scene;
        scene = sample_scene_once(hash_combine({rng_seed, static_cast<std::uint64_t>(attempt)}),
                                  ranges, box);
    }
    if (!bbox_visible(scene.camera, box)) {
        throw Error(ErrorCategory::Config,
                    "could not sample a camera that sees the part; check camera ranges");
    }
    return scene;
}

SceneInstance interpolate(const Keyframe& a, const Keyframe& b, double t) {
    if (a.frame_index >= b.frame_index) {
        throw Error(ErrorCategory::Validation,
                    "keyframe interpolation requires a.frame_index < b.frame_index");
    }
    if (!(t >= 0.0 && t <= 1.0)) {
        throw Error(ErrorCategory::Validation, "interpolation parameter must lie in [0,1]");
    }
    SceneInstance out = a.scene;  // discrete fields held from a
    const SceneInstance& sb = b.scene;

    out.camera.position = lerp(a.scene.camera.position, sb.camera.position, t);
    out.camera.look_at = lerp(a.scene.camera.look_at, sb.camera.look_at, t);
    out.camera.up = normalized(lerp(a.scene.camera.up, sb.camera.up, t));
    out.camera.vertical_fov_deg =
        lerp(a.scene.camera.vertical_fov_deg, sb.camera.vertical_fov_deg, t);

    out.sun.direction = normalized(lerp(a.scene.sun.direction, sb.sun.direction, t));
    out.sun.intensity = lerp(a.scene.sun.intensity, sb.sun.intensity, t);
    out.sun.color = lerp(a.scene.sun.color, sb.sun.color, t);

    const std::size_t shared = std::min(out.points.size(), sb.points.size());
    for (std::size_t i = 0; i < shared; ++i) {
        out.points[i].position = lerp(a.scene.points[i].position, sb.points[i].position, t);
        out.points[i].intensity = lerp(a.scene.points[i].intensity, sb.points[i].intensity, t);
        out.points[i].color = lerp(a.scene.points[i].color, sb.points[i].color, t);
    }

    out.bed.rotation_deg = lerp(a.scene.bed.rotation_deg, sb.bed.rotation_deg, t);
    out.bed.scale = lerp(a.scene.bed.scale, sb.bed.scale, t);
    out.bed.offset_u = lerp(a.scene.bed.offset_u, sb.bed.offset_u, t);
    out.bed.offset_v = lerp(a.scene.bed.offset_v, sb.bed.offset_v, t);

    out.material.base_color = lerp(a.scene.material.base_color, sb.material.base_color, t);
    out.material.roughness = lerp(a.scene.material.roughness, sb.material.roughness, t);
    out.material.specular = lerp(a.scene.material.specular, sb.material.specular, t);

    return out;
}

}  // namespace printseg
