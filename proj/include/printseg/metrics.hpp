#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "printseg/png_io.hpp"
#include "printseg/semantics.hpp"

namespace printseg {

// Pixel tallies; counts[row * k + col] with row = ground-truth class index,
// col = predicted class index in `classes` order.
struct ConfusionMatrix {
    std::vector<std::uint8_t> classes;
    std::vector<std::uint64_t> counts;

    explicit ConfusionMatrix(std::vector<std::uint8_t> palette);
    ConfusionMatrix() = default;

    std::uint64_t at(std::size_t gt_index, std::size_t pred_index) const {
        return counts[gt_index * classes.size() + pred_index];
    }
    std::uint64_t total() const;
    void merge(const ConfusionMatrix& other);
};

// Tallies one mask pair into a fresh matrix. Throws on dimension mismatch
// and on any value outside the palette (naming the value).
ConfusionMatrix confusion(const ImageGray& pred, const ImageGray& gt,
                          const std::vector<std::uint8_t>& palette);

// IoU = TP / (TP + FP + FN); empty optional when the class appears in
// neither masks' tallies (denominator zero).
std::optional<double> iou_from_confusion(const ConfusionMatrix& cm, std::uint8_t cls);

struct IoUReport {
    std::map<std::uint8_t, double> per_class;  // only classes present in gt or pred
    double miou = 0.0;
    std::size_t pairs_evaluated = 0;
    std::vector<std::string> unmatched;        // files present on one side only
    std::vector<std::string> failures;         // pairs that could not be evaluated
    ConfusionMatrix matrix;
};

// Pairs *.png files by filename across the two directories, accumulates one
// global confusion matrix, and averages IoU over the classes present.
IoUReport evaluate_dataset(const std::filesystem::path& pred_dir,
                           const std::filesystem::path& gt_dir, DatasetKind kind);

std::string iou_report_table(const IoUReport& report, DatasetKind kind);
std::string iou_report_json(const IoUReport& report, DatasetKind kind);

}  // namespace printseg
