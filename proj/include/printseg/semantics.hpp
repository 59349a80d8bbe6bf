#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

#include "printseg/gcode.hpp"

namespace printseg {

enum class SemanticClass : std::uint8_t { Background, Part, TopLayer, Shell, Infill, Support };

const char* semantic_class_name(SemanticClass value);

enum class DatasetKind { WholePart, TopLayer, InternalStructure };

const char* dataset_kind_name(DatasetKind kind);
DatasetKind parse_dataset_kind(std::string_view token);

// Mask grayscale levels, fixed per dataset kind. Background is always 0.
inline constexpr std::uint8_t kLevelBackground = 0;
inline constexpr std::uint8_t kLevelShell = 85;
inline constexpr std::uint8_t kLevelSupport = 170;
inline constexpr std::uint8_t kLevelFull = 255;  // part / top layer / infill

struct ClassifiedToolpath {
    Toolpath toolpath;
    // Visible class per segment; label_top_layer rewrites the topmost
    // included layer to TopLayer here.
    std::vector<SemanticClass> classes;
    // Structural class per segment (Shell/Infill/Support), unaffected by
    // top-layer labeling; the internal-structure relabeling reads this.
    std::vector<SemanticClass> structural;
    std::size_t completion_layer = 0;  // number of layers included
};

// Maps slicer hints to classes; segments with Unknown hints fall back to a
// per-layer geometric rule: the outermost closed polyline chains become
// Shell, everything else Infill.
ClassifiedToolpath classify_segments(const Toolpath& toolpath);

// Keeps only segments with layer_index < k and sets completion_layer = k.
ClassifiedToolpath truncate_to_layer(const ClassifiedToolpath& ct, std::size_t k);

// Reclassifies every segment of layer completion_layer-1 as TopLayer.
ClassifiedToolpath label_top_layer(ClassifiedToolpath ct);

// Grayscale mask level for each segment under the given dataset kind. Beads
// mapping to 0 are still rendered; they just read as background in the mask.
std::vector<std::uint8_t> relabel_for_dataset(const ClassifiedToolpath& ct, DatasetKind kind);

// Mask levels that may appear for the kind, background included, ascending.
std::vector<std::uint8_t> dataset_palette(DatasetKind kind);

// Classified toolpath interchange: the toolpath schema plus a class column.
std::string write_classified_toolpath(const ClassifiedToolpath& ct);
ClassifiedToolpath read_classified_toolpath(std::string_view text);

}  // namespace printseg
