#include "printseg/semantics.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

#include "printseg/util.hpp"

namespace printseg {

namespace {

// Endpoint quantization for chain building; slicer loops close to well under
// a micron, so 1e-3 mm buckets join intended joints without gluing
// neighboring infill lines together.
constexpr double kJoinTolerance = 1e-3;

struct PointKey {
    long long x;
    long long y;
    bool operator<(const PointKey& other) const {
        return x != other.x ? x < other.x : y < other.y;
    }
    bool operator==(const PointKey& other) const { return x == other.x && y == other.y; }
};

PointKey quantize(const Vec3& p) {
    return {static_cast<long long>(std::llround(p.x / kJoinTolerance)),
            static_cast<long long>(std::llround(p.y / kJoinTolerance))};
}

struct Loop {
    std::vector<std::size_t> segment_indices;  // into the layer's local list
    std::vector<Vec3> polygon;                 // ordered vertices
};

// Even-odd point-in-polygon test in the XY plane.
bool point_in_polygon(const Vec3& p, const std::vector<Vec3>& polygon) {
    bool inside = false;
    const std::size_t n = polygon.size();
    for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
        const Vec3& a = polygon[i];
        const Vec3& b = polygon[j];
        if ((a.y > p.y) != (b.y > p.y)) {
            const double x_cross = (b.x - a.x) * (p.y - a.y) / (b.y - a.y) + a.x;
            if (p.x < x_cross) inside = !inside;
        }
    }
    return inside;
}

// Extracts closed polyline chains from a set of segments. A chain is closed
// when following shared endpoints returns to the start and every visited
// endpoint joins exactly two segment ends.
std::vector<Loop> find_closed_loops(const std::vector<ExtrusionSegment>& segments,
                                    const std::vector<std::size_t>& indices) {
    std::map<PointKey, std::vector<std::size_t>> ends;  // endpoint -> local segment ids
    for (std::size_t local = 0; local < indices.size(); ++local) {
        const ExtrusionSegment& segment = segments[indices[local]];
        ends[quantize(segment.start)].push_back(local);
        ends[quantize(segment.end)].push_back(local);
    }

    std::vector<Loop> loops;
    std::vector<bool> used(indices.size(), false);
    for (std::size_t seed = 0; seed < indices.size(); ++seed) {
        if (used[seed]) continue;
        Loop loop;
        const PointKey start_key = quantize(segments[indices[seed]].start);
        if (auto it = ends.find(start_key); it == ends.end() || it->second.size() != 2) {
            continue;  // start vertex is open or branching; cannot be part of a clean loop
        }
        PointKey cursor = start_key;
        std::size_t current = seed;
        bool closed = false;
        while (true) {
            used[current] = true;
            loop.segment_indices.push_back(current);
            const ExtrusionSegment& segment = segments[indices[current]];
            const PointKey a = quantize(segment.start);
            const PointKey b = quantize(segment.end);
            loop.polygon.push_back(cursor == a ? segment.start : segment.end);
            const PointKey next_key = (cursor == a) ? b : a;
            if (next_key == start_key) {
                closed = loop.segment_indices.size() >= 3;
                break;
            }
            const auto it = ends.find(next_key);
            if (it == ends.end() || it->second.size() != 2) break;  // open or branching
            const std::size_t other =
                it->second[0] == current ? it->second[1] : it->second[0];
            if (used[other]) break;
            cursor = next_key;
            current = other;
        }
        if (closed) loops.push_back(std::move(loop));
    }
    return loops;
}

SemanticClass class_from_hint(FeatureHintValue hint) {
    switch (hint) {
        case FeatureHintValue::WallOuter:
        case FeatureHintValue::WallInner:
            // Outer and inner walls collapse into one shell class.
            return SemanticClass::Shell;
        case FeatureHintValue::Infill:
        case FeatureHintValue::Skin:
            return SemanticClass::Infill;
        case FeatureHintValue::Support:
            return SemanticClass::Support;
        case FeatureHintValue::Unknown:
            break;
    }
    return SemanticClass::Background;  // sentinel: resolved by the fallback rule
}

}  // namespace

const char* semantic_class_name(SemanticClass value) {
    switch (value) {
        case SemanticClass::Background: return "background";
        case SemanticClass::Part: return "part";
        case SemanticClass::TopLayer: return "top_layer";
        case SemanticClass::Shell: return "shell";
        case SemanticClass::Infill: return "infill";
        case SemanticClass::Support: return "support";
    }
    return "background";
}

const char* dataset_kind_name(DatasetKind kind) {
    switch (kind) {
        case DatasetKind::WholePart: return "wholepart";
        case DatasetKind::TopLayer: return "toplayer";
        case DatasetKind::InternalStructure: return "internal";
    }
    return "wholepart";
}

DatasetKind parse_dataset_kind(std::string_view token) {
    const std::string value = lowercase(token);
    if (value == "wholepart" || value == "whole-part" || value == "whole_part") {
        return DatasetKind::WholePart;
    }
    if (value == "toplayer" || value == "top-layer" || value == "top_layer") {
        return DatasetKind::TopLayer;
    }
    if (value == "internal" || value == "internalstructure" || value == "internal-structure") {
        return DatasetKind::InternalStructure;
    }
    throw Error(ErrorCategory::Config,
                "unknown dataset kind '" + std::string(token) +
                    "' (expected wholepart|toplayer|internal)");
}

ClassifiedToolpath classify_segments(const Toolpath& toolpath) {
    ClassifiedToolpath ct;
    ct.toolpath = toolpath;
    ct.completion_layer = toolpath.layers.size();
    ct.classes.resize(toolpath.segments.size(), SemanticClass::Infill);
    for (std::size_t i = 0; i < toolpath.segments.size(); ++i) {
        ct.classes[i] = class_from_hint(toolpath.segments[i].hint.value);
    }

    // Resolve Unknown-hint segments layer by layer: the outermost closed
    // chains become Shell, the rest Infill. Support never comes from the
    // fallback.
    for (const LayerSpan& layer : toolpath.layers) {
        std::vector<std::size_t> unknown;
        for (std::size_t i = layer.begin; i < layer.end; ++i) {
            if (ct.classes[i] == SemanticClass::Background) unknown.push_back(i);
        }
        if (unknown.empty()) continue;
        for (std::size_t i : unknown) ct.classes[i] = SemanticClass::Infill;

        const std::vector<Loop> loops = find_closed_loops(toolpath.segments, unknown);
        for (std::size_t a = 0; a < loops.size(); ++a) {
            const Vec3 probe =
                (loops[a].polygon[0] + loops[a].polygon[1]) * 0.5;
            bool enclosed = false;
            for (std::size_t b = 0; b < loops.size() && !enclosed; ++b) {
                if (a != b && point_in_polygon(probe, loops[b].polygon)) enclosed = true;
            }
            if (!enclosed) {
                for (std::size_t local : loops[a].segment_indices) {
                    ct.classes[unknown[local]] = SemanticClass::Shell;
                }
            }
        }
    }

    ct.structural = ct.classes;
    return ct;
}

ClassifiedToolpath truncate_to_layer(const ClassifiedToolpath& ct, std::size_t k) {
    if (k > ct.toolpath.layers.size()) {
        throw Error(ErrorCategory::Validation,
                    "completion layer " + std::to_string(k) + " exceeds layer count " +
                        std::to_string(ct.toolpath.layers.size()));
    }
    ClassifiedToolpath out;
    out.completion_layer = k;
    out.toolpath.source_digest = ct.toolpath.source_digest;
    const std::size_t segment_end = k == 0 ? 0 : ct.toolpath.layers[k - 1].end;
    out.toolpath.segments.assign(ct.toolpath.segments.begin(),
                                 ct.toolpath.segments.begin() + segment_end);
    out.toolpath.layers.assign(ct.toolpath.layers.begin(), ct.toolpath.layers.begin() + k);
    out.classes.assign(ct.classes.begin(), ct.classes.begin() + segment_end);
    out.structural.assign(ct.structural.begin(), ct.structural.begin() + segment_end);
    return out;
}

ClassifiedToolpath label_top_layer(ClassifiedToolpath ct) {
    if (ct.completion_layer == 0 || ct.toolpath.layers.empty()) {
        throw Error(ErrorCategory::Validation, "cannot label the top layer of an empty toolpath");
    }
    const int top = static_cast<int>(ct.completion_layer) - 1;
    for (std::size_t i = 0; i < ct.classes.size(); ++i) {
        if (ct.toolpath.segments[i].layer_index == top) {
            ct.classes[i] = SemanticClass::TopLayer;
        }
    }
    return ct;
}

std::vector<std::uint8_t> relabel_for_dataset(const ClassifiedToolpath& ct, DatasetKind kind) {
    std::vector<std::uint8_t> levels(ct.classes.size(), kLevelBackground);
    for (std::size_t i = 0; i < ct.classes.size(); ++i) {
        switch (kind) {
            case DatasetKind::WholePart:
                levels[i] = kLevelFull;
                break;
            case DatasetKind::TopLayer:
                levels[i] =
                    ct.classes[i] == SemanticClass::TopLayer ? kLevelFull : kLevelBackground;
                break;
            case DatasetKind::InternalStructure:
                switch (ct.structural[i]) {
                    case SemanticClass::Shell: levels[i] = kLevelShell; break;
                    case SemanticClass::Support: levels[i] = kLevelSupport; break;
                    default: levels[i] = kLevelFull; break;
                }
                break;
        }
    }
    return levels;
}

std::vector<std::uint8_t> dataset_palette(DatasetKind kind) {
    switch (kind) {
        case DatasetKind::WholePart:
        case DatasetKind::TopLayer:
            return {kLevelBackground, kLevelFull};
        case DatasetKind::InternalStructure:
            return {kLevelBackground, kLevelShell, kLevelSupport, kLevelFull};
    }
    return {kLevelBackground};
}

std::string write_classified_toolpath(const ClassifiedToolpath& ct) {
    std::string body = write_toolpath(ct.toolpath);
    std::string out = "#printseg-classified v1 completion=" +
                      std::to_string(ct.completion_layer) + "\n";
    std::istringstream lines(body);
    std::string line;
    std::size_t segment = 0;
    while (std::getline(lines, line)) {
        if (!line.empty() && line[0] == '#') {
            out += line + "\n";
            continue;
        }
        out += line;
        out += '\t';
        out += semantic_class_name(ct.classes[segment++]);
        out += '\n';
    }
    return out;
}

ClassifiedToolpath read_classified_toolpath(std::string_view text) {
    std::istringstream stream{std::string(text)};
    std::string line;
    if (!std::getline(stream, line) || line.rfind("#printseg-classified v1 completion=", 0) != 0) {
        throw Error(ErrorCategory::Parse, "missing classified toolpath header line");
    }
    const std::size_t completion = std::stoull(line.substr(line.find('=') + 1));

    // Split the class column off each record and feed the rest to the
    // toolpath reader.
    std::string toolpath_text;
    std::vector<std::string> class_tokens;
    while (std::getline(stream, line)) {
        if (line.empty() || line[0] == '#') {
            toolpath_text += line + "\n";
            continue;
        }
        const std::size_t tab = line.rfind('\t');
        if (tab == std::string::npos) {
            throw Error(ErrorCategory::Parse, "malformed classified record");
        }
        class_tokens.push_back(line.substr(tab + 1));
        toolpath_text += line.substr(0, tab) + "\n";
    }

    ClassifiedToolpath ct;
    ct.toolpath = read_toolpath(toolpath_text);
    ct.completion_layer = completion;
    ct.classes.reserve(class_tokens.size());
    for (const std::string& token : class_tokens) {
        bool matched = false;
        for (SemanticClass value : {SemanticClass::Background, SemanticClass::Part,
                                    SemanticClass::TopLayer, SemanticClass::Shell,
                                    SemanticClass::Infill, SemanticClass::Support}) {
            if (token == semantic_class_name(value)) {
                ct.classes.push_back(value);
                matched = true;
                break;
            }
        }
        if (!matched) throw Error(ErrorCategory::Parse, "unknown class token '" + token + "'");
    }
    if (ct.classes.size() != ct.toolpath.segments.size()) {
        throw Error(ErrorCategory::Parse, "class column count does not match segment count");
    }
    if (ct.completion_layer != ct.toolpath.layers.size()) {
        throw Error(ErrorCategory::Parse,
                    "completion layer header does not match layer count in records");
    }
    // Structural classes: TopLayer has no structural meaning of its own in
    // the interchange, so fall back to Infill for those rows.
    ct.structural = ct.classes;
    for (SemanticClass& value : ct.structural) {
        if (value == SemanticClass::TopLayer) value = SemanticClass::Infill;
    }
    return ct;
}

}  // namespace printseg
