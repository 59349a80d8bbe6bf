#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "printseg/geom.hpp"

namespace printseg {

enum class CommandKind {
    Move,         // G0 / G1
    SetPosition,  // G92
    Home,         // G28
    AbsExtrude,   // M82
    RelExtrude,   // M83
    Comment,
    Other,
};

enum class FeatureHintValue { WallOuter, WallInner, Infill, Support, Skin, Unknown };

// Slicer path-type annotation attached to a comment (";TYPE:WALL-OUTER" and
// friends). value is Unknown exactly when the comment carried a TYPE token
// that matched no dictionary entry.
struct FeatureHint {
    FeatureHintValue value = FeatureHintValue::Unknown;
    int source_line = 0;
};

const char* feature_hint_name(FeatureHintValue value);

struct Command {
    CommandKind kind = CommandKind::Other;
    // Axis letter -> value in mm (mm of filament for E). Only axes present in
    // the source line appear; value-less axis flags (G28 X) are stored as NaN.
    std::map<char, double> params;
    int line_no = 0;
    std::string word;                      // command word as written, e.g. "G1", "M107"
    std::string comment;                   // text after ';' for Comment lines
    std::optional<FeatureHint> hint;       // parsed ";TYPE:..." annotation
    std::optional<int> layer_marker;       // parsed ";LAYER:n" annotation
};

struct ExtrusionSegment {
    Vec3 start;
    Vec3 end;
    double width = 0.0;   // mm
    double height = 0.0;  // mm, layer height
    FeatureHint hint;
    int layer_index = -1;                  // assigned by split_layers
    std::optional<int> layer_marker;       // slicer layer comment in effect at emission

    double len() const { return length(end - start); }
};

struct LayerSpan {
    double z = 0.0;
    std::size_t begin = 0;  // segment index range [begin,end)
    std::size_t end = 0;
};

struct Toolpath {
    std::vector<ExtrusionSegment> segments;
    std::vector<LayerSpan> layers;  // ordered by strictly increasing z
    std::uint64_t source_digest = 0;

    Aabb bounding_box() const;
};

struct SlicingConfig {
    double filament_diameter_mm = 1.75;
    double layer_height_mm = 0.3;
    double default_width_mm = 0.4;  // used when geometry gives no usable width estimate

    double filament_cross_section_area() const;
};

// Segment widths outside this range are clamped after the volume-conservation
// computation.
inline constexpr double kMinBeadWidth = 0.05;
inline constexpr double kMaxBeadWidth = 2.0;

// Layer grouping tolerance in mm.
inline constexpr double kLayerEpsilonZ = 0.01;

// One Command per non-empty line; comment-only lines become Comment, unknown
// words become Other. Malformed numeric parameters raise Error(Parse) with
// the offending line number.
std::vector<Command> parse_gcode(std::string_view text);

// Replays the command stream and emits one ExtrusionSegment per Move with a
// positive effective extrusion delta. Tracks M82/M83 extrusion mode, G92
// resets and G28 homing; travel moves emit nothing.
std::vector<ExtrusionSegment> extract_toolpath(const std::vector<Command>& commands,
                                               const SlicingConfig& config);

// Groups segments into layers, honoring ";LAYER:" markers when every segment
// carries one and falling back to geometric grouping on z otherwise.
Toolpath split_layers(std::vector<ExtrusionSegment> segments);

// parse + extract + split, with source_digest set from the raw text.
Toolpath build_toolpath(std::string_view gcode_text, const SlicingConfig& config = {});

// Line-delimited toolpath interchange: a versioned header line followed by
// one tab-separated record per segment.
std::string write_toolpath(const Toolpath& toolpath);
Toolpath read_toolpath(std::string_view text);

}  // namespace printseg
