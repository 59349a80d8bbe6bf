#include "printseg/gcode.hpp"

#include <array>
#include <cctype>
#include <cerrno>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <limits>
#include <sstream>

#include "printseg/util.hpp"

namespace printseg {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kTinyLength = 1e-9;

[[noreturn]] void parse_fail(int line_no, const std::string& message) {
    throw Error(ErrorCategory::Parse, "line " + std::to_string(line_no) + ": " + message);
}

// Path-type spellings seen in MatterControl/MatterSlice, Cura and
// PrusaSlicer output, keyed on the uppercased token after "TYPE:".
const std::pair<const char*, FeatureHintValue> kHintDictionary[] = {
    {"WALL-OUTER", FeatureHintValue::WallOuter},
    {"OUTER PERIMETER", FeatureHintValue::WallOuter},
    {"EXTERNAL PERIMETER", FeatureHintValue::WallOuter},
    {"WALL-INNER", FeatureHintValue::WallInner},
    {"INNER PERIMETER", FeatureHintValue::WallInner},
    {"PERIMETER", FeatureHintValue::WallInner},
    {"FILL", FeatureHintValue::Infill},
    {"INFILL", FeatureHintValue::Infill},
    {"INTERNAL INFILL", FeatureHintValue::Infill},
    {"SOLID INFILL", FeatureHintValue::Infill},
    {"TOP SOLID INFILL", FeatureHintValue::Skin},
    {"SKIN", FeatureHintValue::Skin},
    {"BRIDGE", FeatureHintValue::Skin},
    {"BRIDGE INFILL", FeatureHintValue::Skin},
    {"SUPPORT", FeatureHintValue::Support},
    {"SUPPORT MATERIAL", FeatureHintValue::Support},
    {"SUPPORT MATERIAL INTERFACE", FeatureHintValue::Support},
    {"SUPPORT-INTERFACE", FeatureHintValue::Support},
};

std::string uppercase(std::string_view text) {
    std::string out(text);
    for (char& c : out) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    return out;
}

// Parses annotations out of a comment body. Recognizes "TYPE:<token>" and
// "LAYER:<n>" with optional surrounding whitespace.
void parse_comment_annotations(const std::string& body, int line_no, Command& cmd) {
    const std::string trimmed = trim(body);
    const std::string upper = uppercase(trimmed);
    if (upper.rfind("TYPE:", 0) == 0) {
        const std::string token = trim(upper.substr(5));
        FeatureHint hint;
        hint.source_line = line_no;
        hint.value = FeatureHintValue::Unknown;
        for (const auto& [key, value] : kHintDictionary) {
            if (token == key) {
                hint.value = value;
                break;
            }
        }
        cmd.hint = hint;
    } else if (upper.rfind("LAYER:", 0) == 0) {
        const std::string token = trim(trimmed.substr(6));
        int value = 0;
        auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
        if (ec == std::errc() && ptr == token.data() + token.size()) {
            cmd.layer_marker = value;
        }
    }
}

double parse_number(std::string_view token, int line_no) {
    std::string buffer(token);
    char* end = nullptr;
    errno = 0;
    const double value = std::strtod(buffer.c_str(), &end);
    if (end != buffer.c_str() + buffer.size() || buffer.empty() || errno == ERANGE ||
        !std::isfinite(value)) {
        parse_fail(line_no, "malformed numeric parameter '" + buffer + "'");
    }
    return value;
}

CommandKind classify_word(const std::string& word) {
    if (word == "G0" || word == "G1") return CommandKind::Move;
    if (word == "G92") return CommandKind::SetPosition;
    if (word == "G28") return CommandKind::Home;
    if (word == "M82") return CommandKind::AbsExtrude;
    if (word == "M83") return CommandKind::RelExtrude;
    return CommandKind::Other;
}

// Strips a leading RepRap line number ("N123") and a trailing "*checksum".
std::string_view strip_framing(std::string_view code) {
    if (!code.empty() && (code[0] == 'N' || code[0] == 'n')) {
        std::size_t i = 1;
        while (i < code.size() && std::isdigit(static_cast<unsigned char>(code[i]))) ++i;
        if (i > 1 && i < code.size() && std::isspace(static_cast<unsigned char>(code[i]))) {
            code.remove_prefix(i);
        }
    }
    if (auto star = code.find('*'); star != std::string_view::npos) {
        code = code.substr(0, star);
    }
    return code;
}

struct Word {
    char letter;
    std::string_view number;  // may be empty for bare axis flags
};

std::vector<Word> tokenize_words(std::string_view code, int line_no) {
    std::vector<Word> words;
    std::size_t i = 0;
    while (i < code.size()) {
        const char c = code[i];
        if (std::isspace(static_cast<unsigned char>(c))) {
            ++i;
            continue;
        }
        if (!std::isalpha(static_cast<unsigned char>(c))) {
            parse_fail(line_no, std::string("unexpected character '") + c + "'");
        }
        const char letter = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
        ++i;
        const std::size_t start = i;
        while (i < code.size() && !std::isspace(static_cast<unsigned char>(code[i])) &&
               !std::isalpha(static_cast<unsigned char>(code[i]))) {
            ++i;
        }
        words.push_back({letter, code.substr(start, i - start)});
    }
    return words;
}

}  // namespace

const char* feature_hint_name(FeatureHintValue value) {
    switch (value) {
        case FeatureHintValue::WallOuter: return "wall_outer";
        case FeatureHintValue::WallInner: return "wall_inner";
        case FeatureHintValue::Infill: return "infill";
        case FeatureHintValue::Support: return "support";
        case FeatureHintValue::Skin: return "skin";
        case FeatureHintValue::Unknown: return "unknown";
    }
    return "unknown";
}

double SlicingConfig::filament_cross_section_area() const {
    const double radius = filament_diameter_mm * 0.5;
    return kPi * radius * radius;
}

std::vector<Command> parse_gcode(std::string_view text) {
    std::vector<Command> commands;
    int line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const std::size_t eol = text.find('\n', pos);
        std::string_view line = text.substr(pos, eol == std::string_view::npos ? text.size() - pos
                                                                               : eol - pos);
        pos = eol == std::string_view::npos ? text.size() + 1 : eol + 1;
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        if (trim(line).empty()) continue;

        Command cmd;
        cmd.line_no = line_no;

        std::string_view code = line;
        std::string comment;
        if (auto semi = line.find(';'); semi != std::string_view::npos) {
            code = line.substr(0, semi);
            comment = std::string(line.substr(semi + 1));
        }

        if (trim(code).empty()) {
            cmd.kind = CommandKind::Comment;
            cmd.comment = comment;
            parse_comment_annotations(comment, line_no, cmd);
            commands.push_back(std::move(cmd));
            continue;
        }

        code = strip_framing(code);
        const auto words = tokenize_words(code, line_no);
        if (words.empty()) {
            cmd.kind = CommandKind::Other;
            cmd.word = trim(code);
            commands.push_back(std::move(cmd));
            continue;
        }

        const Word& head = words.front();
        if (head.number.empty()) {
            parse_fail(line_no, std::string("command letter '") + head.letter + "' without a code");
        }
        // Normalize "G01" -> "G1" so dialect checks are by value, not spelling.
        cmd.word = std::string(1, head.letter);
        {
            const double code_value = parse_number(head.number, line_no);
            if (code_value == std::floor(code_value)) {
                cmd.word += std::to_string(static_cast<long long>(code_value));
            } else {
                cmd.word += std::string(head.number);
            }
        }
        cmd.kind = classify_word(cmd.word);

        for (std::size_t w = 1; w < words.size(); ++w) {
            const Word& word = words[w];
            if (word.number.empty()) {
                // Bare axis flag; meaningful for G28, malformed for moves.
                if (cmd.kind == CommandKind::Move || cmd.kind == CommandKind::SetPosition) {
                    parse_fail(line_no, std::string("axis '") + word.letter + "' missing a value");
                }
                cmd.params[word.letter] = std::numeric_limits<double>::quiet_NaN();
            } else {
                cmd.params[word.letter] = parse_number(word.number, line_no);
            }
        }
        commands.push_back(std::move(cmd));
    }
    return commands;
}

std::vector<ExtrusionSegment> extract_toolpath(const std::vector<Command>& commands,
                                               const SlicingConfig& config) {
    std::vector<ExtrusionSegment> segments;
    const double area = config.filament_cross_section_area();
    const double layer_height = config.layer_height_mm;
    if (layer_height <= 0.0) {
        throw Error(ErrorCategory::Config, "layer height must be positive");
    }

    Vec3 position;
    std::array<bool, 3> known = {false, false, false};
    bool absolute_e = true;  // Marlin convention: M82 until stated otherwise
    double e_position = 0.0;
    FeatureHint current_hint;  // Unknown until the first TYPE comment
    std::optional<int> current_marker;

    for (const Command& cmd : commands) {
        switch (cmd.kind) {
            case CommandKind::Comment:
                if (cmd.hint) current_hint = *cmd.hint;
                if (cmd.layer_marker) current_marker = *cmd.layer_marker;
                break;
            case CommandKind::AbsExtrude:
                absolute_e = true;
                break;
            case CommandKind::RelExtrude:
                absolute_e = false;
                break;
            case CommandKind::Home: {
                bool any_axis = false;
                for (const auto& [axis, value] : cmd.params) {
                    (void)value;
                    if (axis == 'X') { position.x = 0.0; known[0] = true; any_axis = true; }
                    if (axis == 'Y') { position.y = 0.0; known[1] = true; any_axis = true; }
                    if (axis == 'Z') { position.z = 0.0; known[2] = true; any_axis = true; }
                }
                if (!any_axis) {
                    position = {0.0, 0.0, 0.0};
                    known = {true, true, true};
                }
                break;
            }
            case CommandKind::SetPosition:
                for (const auto& [axis, value] : cmd.params) {
                    switch (axis) {
                        case 'X': position.x = value; known[0] = true; break;
                        case 'Y': position.y = value; known[1] = true; break;
                        case 'Z': position.z = value; known[2] = true; break;
                        case 'E': e_position = value; break;
                        default: break;
                    }
                }
                break;
            case CommandKind::Other:
                if (cmd.word == "G2" || cmd.word == "G3") {
                    parse_fail(cmd.line_no, "arc commands (G2/G3) are not supported");
                }
                break;
            case CommandKind::Move: {
                Vec3 target = position;
                std::array<bool, 3> target_known = known;
                if (auto it = cmd.params.find('X'); it != cmd.params.end()) {
                    target.x = it->second;
                    target_known[0] = true;
                }
                if (auto it = cmd.params.find('Y'); it != cmd.params.end()) {
                    target.y = it->second;
                    target_known[1] = true;
                }
                if (auto it = cmd.params.find('Z'); it != cmd.params.end()) {
                    target.z = it->second;
                    target_known[2] = true;
                }

                double delta_e = 0.0;
                if (auto it = cmd.params.find('E'); it != cmd.params.end()) {
                    delta_e = absolute_e ? it->second - e_position : it->second;
                    e_position = absolute_e ? it->second : e_position + it->second;
                }

                if (delta_e > 0.0) {
                    if (!known[0] || !known[1] || !known[2]) {
                        parse_fail(cmd.line_no,
                                   "extruding move before any position is established");
                    }
                    if (std::abs(target.z - position.z) > kTinyLength) {
                        parse_fail(cmd.line_no,
                                   "extrusion with changing Z (spiral/non-planar moves are not "
                                   "supported)");
                    }
                    const double seg_length = length(target - position);
                    if (seg_length > kTinyLength) {
                        double width = delta_e * area / (seg_length * layer_height);
                        if (width <= 0.0) {
                            parse_fail(cmd.line_no, "computed bead width is not positive");
                        }
                        width = std::clamp(width, kMinBeadWidth, kMaxBeadWidth);
                        ExtrusionSegment segment;
                        segment.start = position;
                        segment.end = target;
                        segment.width = width;
                        segment.height = layer_height;
                        segment.hint = current_hint;
                        segment.layer_marker = current_marker;
                        segments.push_back(segment);
                    }
                    // In-place extrusions (primes) move no material across the
                    // bed and produce no bead.
                }
                position = target;
                known = target_known;
                break;
            }
        }
    }
    return segments;
}

Toolpath split_layers(std::vector<ExtrusionSegment> segments) {
    Toolpath toolpath;
    if (segments.empty()) {
        toolpath.segments = std::move(segments);
        return toolpath;
    }

    bool all_marked = true;
    for (const ExtrusionSegment& segment : segments) {
        if (!segment.layer_marker) {
            all_marked = false;
            break;
        }
    }

    std::vector<LayerSpan> layers;
    auto open_layer = [&](double z, std::size_t index) {
        layers.push_back({z, index, index + 1});
    };

    if (all_marked) {
        int current_marker = *segments.front().layer_marker;
        open_layer(segments.front().start.z, 0);
        for (std::size_t i = 1; i < segments.size(); ++i) {
            const ExtrusionSegment& segment = segments[i];
            const int marker = *segment.layer_marker;
            if (marker == current_marker) {
                if (std::abs(segment.start.z - layers.back().z) > kLayerEpsilonZ) {
                    throw Error(ErrorCategory::Parse,
                                "segments within layer marker " + std::to_string(marker) +
                                    " span a z range wider than the layer tolerance");
                }
                layers.back().end = i + 1;
            } else if (marker > current_marker) {
                current_marker = marker;
                open_layer(segment.start.z, i);
            } else {
                throw Error(ErrorCategory::Parse,
                            "layer markers decrease at marker " + std::to_string(marker));
            }
        }
    } else {
        open_layer(segments.front().start.z, 0);
        for (std::size_t i = 1; i < segments.size(); ++i) {
            const double z = segments[i].start.z;
            const double current_z = layers.back().z;
            if (std::abs(z - current_z) <= kLayerEpsilonZ) {
                layers.back().end = i + 1;
            } else if (z > current_z) {
                open_layer(z, i);
            } else {
                throw Error(ErrorCategory::Parse,
                            "extrusion z decreases across layers (out-of-order layers)");
            }
        }
    }

    for (std::size_t layer = 1; layer < layers.size(); ++layer) {
        if (!(layers[layer].z > layers[layer - 1].z)) {
            throw Error(ErrorCategory::Parse, "layer z values are not strictly increasing");
        }
    }
    for (std::size_t layer = 0; layer < layers.size(); ++layer) {
        for (std::size_t i = layers[layer].begin; i < layers[layer].end; ++i) {
            segments[i].layer_index = static_cast<int>(layer);
        }
    }
    toolpath.segments = std::move(segments);
    toolpath.layers = std::move(layers);
    return toolpath;
}

Toolpath build_toolpath(std::string_view gcode_text, const SlicingConfig& config) {
    const std::vector<Command> commands = parse_gcode(gcode_text);
    Toolpath toolpath = split_layers(extract_toolpath(commands, config));
    toolpath.source_digest = fnv1a64(gcode_text);
    return toolpath;
}

Aabb Toolpath::bounding_box() const {
    Aabb box;
    for (const ExtrusionSegment& segment : segments) {
        const double r = segment.width * 0.5;
        box.extend(segment.start - Vec3{r, r, segment.height * 0.5});
        box.extend(segment.start + Vec3{r, r, segment.height * 0.5});
        box.extend(segment.end - Vec3{r, r, segment.height * 0.5});
        box.extend(segment.end + Vec3{r, r, segment.height * 0.5});
    }
    return box;
}

namespace {

constexpr char kToolpathHeaderPrefix[] = "#printseg-toolpath v1 source=";

void append_double(std::string& out, double value) {
    char buffer[32];
    std::snprintf(buffer, sizeof(buffer), "%.17g", value);
    out += buffer;
}

}  // namespace

std::string write_toolpath(const Toolpath& toolpath) {
    std::string out = kToolpathHeaderPrefix + to_hex(toolpath.source_digest) + "\n";
    out += "#layer\tsx\tsy\tsz\tex\tey\tez\twidth\theight\thint\n";
    for (const ExtrusionSegment& segment : toolpath.segments) {
        out += std::to_string(segment.layer_index);
        for (double value : {segment.start.x, segment.start.y, segment.start.z, segment.end.x,
                             segment.end.y, segment.end.z, segment.width, segment.height}) {
            out += '\t';
            append_double(out, value);
        }
        out += '\t';
        out += feature_hint_name(segment.hint.value);
        out += '\n';
    }
    return out;
}

Toolpath read_toolpath(std::string_view text) {
    std::istringstream stream{std::string(text)};
    std::string line;
    if (!std::getline(stream, line) || line.rfind(kToolpathHeaderPrefix, 0) != 0) {
        throw Error(ErrorCategory::Parse, "missing toolpath header line");
    }
    const std::uint64_t digest = parse_hex64(line.substr(sizeof(kToolpathHeaderPrefix) - 1));

    std::vector<ExtrusionSegment> segments;
    std::vector<int> layer_indices;
    int line_no = 1;
    while (std::getline(stream, line)) {
        ++line_no;
        if (line.empty() || line[0] == '#') continue;
        std::istringstream fields(line);
        ExtrusionSegment segment;
        int layer = -1;
        std::string hint;
        if (!(fields >> layer >> segment.start.x >> segment.start.y >> segment.start.z >>
              segment.end.x >> segment.end.y >> segment.end.z >> segment.width >>
              segment.height >> hint)) {
            parse_fail(line_no, "malformed toolpath record");
        }
        segment.layer_index = layer;
        bool matched = false;
        for (FeatureHintValue value :
             {FeatureHintValue::WallOuter, FeatureHintValue::WallInner, FeatureHintValue::Infill,
              FeatureHintValue::Support, FeatureHintValue::Skin, FeatureHintValue::Unknown}) {
            if (hint == feature_hint_name(value)) {
                segment.hint.value = value;
                matched = true;
                break;
            }
        }
        if (!matched) parse_fail(line_no, "unknown hint token '" + hint + "'");
        layer_indices.push_back(layer);
        segments.push_back(segment);
    }

    Toolpath toolpath;
    for (std::size_t i = 0; i < segments.size(); ++i) {
        const int layer = layer_indices[i];
        if (layer < 0 || (i > 0 && layer < layer_indices[i - 1]) ||
            (i > 0 && layer > layer_indices[i - 1] + 1) || (i == 0 && layer != 0)) {
            throw Error(ErrorCategory::Parse, "toolpath layer indices are not contiguous");
        }
        if (toolpath.layers.empty() || layer == static_cast<int>(toolpath.layers.size())) {
            toolpath.layers.push_back({segments[i].start.z, i, i + 1});
        } else {
            toolpath.layers.back().end = i + 1;
        }
    }
    toolpath.segments = std::move(segments);
    toolpath.source_digest = digest;
    return toolpath;
}

}  // namespace printseg
