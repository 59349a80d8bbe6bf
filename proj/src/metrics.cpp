#include "printseg/metrics.hpp"

#include <algorithm>
#include <cstdio>
#include <set>

#include <nlohmann/json.hpp>

#include "printseg/kernels.hpp"
#include "printseg/png_io.hpp"
#include "printseg/util.hpp"

namespace printseg {

namespace {

// Finds and names the first out-of-palette byte for the error message.
[[noreturn]] void out_of_palette(const std::vector<std::uint8_t>& data,
                                 const std::vector<std::uint8_t>& palette, const char* which) {
    for (std::uint8_t value : data) {
        if (std::find(palette.begin(), palette.end(), value) == palette.end()) {
            throw Error(ErrorCategory::Validation,
                        std::string(which) + " mask contains value " + std::to_string(value) +
                            " outside the palette");
        }
    }
    throw Error(ErrorCategory::Validation, "mask palette mismatch");
}

const char* class_display_name(std::uint8_t level, DatasetKind kind) {
    switch (level) {
        case kLevelBackground: return "background";
        case kLevelShell: return "shell";
        case kLevelSupport: return "support";
        case kLevelFull:
            return kind == DatasetKind::WholePart
                       ? "part"
                       : (kind == DatasetKind::TopLayer ? "top_layer" : "infill");
    }
    return "?";
}

}  // namespace

ConfusionMatrix::ConfusionMatrix(std::vector<std::uint8_t> palette)
    : classes(std::move(palette)), counts(classes.size() * classes.size(), 0) {}

std::uint64_t ConfusionMatrix::total() const {
    std::uint64_t sum = 0;
    for (std::uint64_t count : counts) sum += count;
    return sum;
}

void ConfusionMatrix::merge(const ConfusionMatrix& other) {
    if (other.classes != classes) {
        throw Error(ErrorCategory::Validation, "cannot merge confusion matrices over different palettes");
    }
    for (std::size_t i = 0; i < counts.size(); ++i) counts[i] += other.counts[i];
}

ConfusionMatrix confusion(const ImageGray& pred, const ImageGray& gt,
                          const std::vector<std::uint8_t>& palette) {
    if (gt.width != pred.width || gt.height != pred.height) {
        throw Error(ErrorCategory::Validation,
                    "mask dimensions differ: ground truth " + std::to_string(gt.width) + "x" +
                        std::to_string(gt.height) + " vs prediction " +
                        std::to_string(pred.width) + "x" + std::to_string(pred.height));
    }
    const std::size_t expected =
        static_cast<std::size_t>(gt.width) * static_cast<std::size_t>(gt.height);
    if (gt.pixels.size() != expected || pred.pixels.size() != expected) {
        throw Error(ErrorCategory::Validation, "mask buffer sizes do not match dimensions");
    }

    ConfusionMatrix cm(palette);
    const std::uint64_t matched =
        kernels::active_backend().confusion(gt.pixels.data(), pred.pixels.data(),
                                            gt.pixels.size(), palette.data(), palette.size(),
                                            cm.counts.data());
    if (matched != gt.pixels.size()) {
        // At least one byte fell outside the palette; identify it.
        std::vector<std::uint64_t> per_level(palette.size(), 0);
        const std::uint64_t gt_total = kernels::active_backend().count_levels(
            gt.pixels.data(), gt.pixels.size(), palette.data(), palette.size(), per_level.data());
        if (gt_total != gt.pixels.size()) out_of_palette(gt.pixels, palette, "ground-truth");
        out_of_palette(pred.pixels, palette, "prediction");
    }
    return cm;
}

std::optional<double> iou_from_confusion(const ConfusionMatrix& cm, std::uint8_t cls) {
    const auto it = std::find(cm.classes.begin(), cm.classes.end(), cls);
    if (it == cm.classes.end()) {
        throw Error(ErrorCategory::Validation,
                    "class " + std::to_string(cls) + " is not part of the confusion matrix");
    }
    const std::size_t k = cm.classes.size();
    const std::size_t i = static_cast<std::size_t>(it - cm.classes.begin());
    const std::uint64_t tp = cm.at(i, i);
    std::uint64_t fp = 0;
    std::uint64_t fn = 0;
    for (std::size_t row = 0; row < k; ++row) {
        if (row != i) fp += cm.at(row, i);
    }
    for (std::size_t col = 0; col < k; ++col) {
        if (col != i) fn += cm.at(i, col);
    }
    const std::uint64_t denominator = tp + fp + fn;
    if (denominator == 0) return std::nullopt;
    return static_cast<double>(tp) / static_cast<double>(denominator);
}

IoUReport evaluate_dataset(const std::filesystem::path& pred_dir,
                           const std::filesystem::path& gt_dir, DatasetKind kind) {
    namespace fs = std::filesystem;
    const std::vector<std::uint8_t> palette = dataset_palette(kind);

    auto list_pngs = [](const fs::path& dir) {
        if (!fs::is_directory(dir)) {
            throw Error(ErrorCategory::FileNotFound, "not a directory: " + dir.string());
        }
        std::set<std::string> names;
        for (const auto& entry : fs::directory_iterator(dir)) {
            if (entry.is_regular_file() && lowercase(entry.path().extension().string()) == ".png") {
                names.insert(entry.path().filename().string());
            }
        }
        return names;
    };

    const std::set<std::string> pred_names = list_pngs(pred_dir);
    const std::set<std::string> gt_names = list_pngs(gt_dir);

    IoUReport report;
    report.matrix = ConfusionMatrix(palette);
    for (const std::string& name : pred_names) {
        if (!gt_names.count(name)) report.unmatched.push_back("pred-only: " + name);
    }
    for (const std::string& name : gt_names) {
        if (!pred_names.count(name)) report.unmatched.push_back("gt-only: " + name);
    }

    for (const std::string& name : gt_names) {
        if (!pred_names.count(name)) continue;
        try {
            const ImageGray gt = read_png_gray8(gt_dir / name);
            const ImageGray pred = read_png_gray8(pred_dir / name);
            report.matrix.merge(confusion(pred, gt, palette));
            ++report.pairs_evaluated;
        } catch (const Error& e) {
            report.failures.push_back(name + ": " + e.what());
        }
    }

    double sum = 0.0;
    std::size_t present = 0;
    for (std::uint8_t cls : palette) {
        if (const auto iou = iou_from_confusion(report.matrix, cls)) {
            report.per_class[cls] = *iou;
            sum += *iou;
            ++present;
        }
    }
    report.miou = present > 0 ? sum / static_cast<double>(present) : 0.0;
    return report;
}

std::string iou_report_table(const IoUReport& report, DatasetKind kind) {
    // Columns follow the usual reporting order for these datasets:
    // background, top layer, shell, support, infill; absent classes print as
    // dashes.
    const std::pair<const char*, std::optional<std::uint8_t>> columns[] = {
        {"Background", kLevelBackground},
        {"Top layer", kind == DatasetKind::TopLayer ? std::optional<std::uint8_t>(kLevelFull)
                                                    : std::nullopt},
        {"Shell", kind == DatasetKind::InternalStructure
                      ? std::optional<std::uint8_t>(kLevelShell)
                      : std::nullopt},
        {"Support", kind == DatasetKind::InternalStructure
                        ? std::optional<std::uint8_t>(kLevelSupport)
                        : std::nullopt},
        {"Infill", kind == DatasetKind::InternalStructure
                       ? std::optional<std::uint8_t>(kLevelFull)
                       : std::nullopt},
        {"Part", kind == DatasetKind::WholePart ? std::optional<std::uint8_t>(kLevelFull)
                                                : std::nullopt},
    };

    std::string out;
    char line[160];
    std::snprintf(line, sizeof(line), "pairs evaluated: %zu\n", report.pairs_evaluated);
    out += line;
    std::string header = "| ";
    std::string values = "| ";
    for (const auto& [name, cls] : columns) {
        if (!cls) continue;
        header += std::string(name) + " | ";
        const auto it = report.per_class.find(*cls);
        if (it != report.per_class.end()) {
            std::snprintf(line, sizeof(line), "%.2f | ", it->second * 100.0);
            values += line;
        } else {
            values += "--- | ";
        }
    }
    header += "mIoU |";
    std::snprintf(line, sizeof(line), "%.2f |", report.miou * 100.0);
    values += line;
    out += header + "\n" + values + "\n";
    if (!report.unmatched.empty()) {
        out += "unmatched files: " + std::to_string(report.unmatched.size()) + "\n";
        for (const std::string& name : report.unmatched) out += "  " + name + "\n";
    }
    if (!report.failures.empty()) {
        out += "failed pairs: " + std::to_string(report.failures.size()) + "\n";
        for (const std::string& name : report.failures) out += "  " + name + "\n";
    }
    return out;
}

std::string iou_report_json(const IoUReport& report, DatasetKind kind) {
    nlohmann::json root;
    root["kind"] = dataset_kind_name(kind);
    root["pairs_evaluated"] = report.pairs_evaluated;
    root["miou"] = report.miou;
    nlohmann::json per_class = nlohmann::json::object();
    for (const auto& [cls, iou] : report.per_class) {
        per_class[class_display_name(cls, kind)] = iou;
    }
    root["per_class"] = per_class;
    root["unmatched"] = report.unmatched;
    root["failures"] = report.failures;
    nlohmann::json matrix = nlohmann::json::object();
    matrix["classes"] = report.matrix.classes;
    matrix["counts"] = report.matrix.counts;
    root["confusion"] = matrix;
    return root.dump(2) + "\n";
}

}  // namespace printseg
