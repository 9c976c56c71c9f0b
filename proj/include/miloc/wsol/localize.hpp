#pragma once

#include "miloc/infocam/maps.hpp"
#include "miloc/nn/network.hpp"

#include <Eigen/Core>

#include <iosfwd>
#include <string>
#include <vector>

namespace miloc::wsol {

using Eigen::Index;
using BinaryMask = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>;

// Inclusive pixel coordinates; x is the column, y the row.
struct BoundingBox {
    int x_min = 0;
    int y_min = 0;
    int x_max = 0;
    int y_max = 0;

    int width() const { return x_max - x_min + 1; }
    int height() const { return y_max - y_min + 1; }
    long long area() const { return static_cast<long long>(width()) * height(); }
    bool contains(int x, int y) const { return x >= x_min && x <= x_max && y >= y_min && y <= y_max; }
    bool operator==(const BoundingBox&) const = default;
};

std::string to_string(const BoundingBox& box);

// Min-max normalize, keep cells strictly above `ratio`. A constant map keeps
// every cell.
BinaryMask threshold_mask(const Eigen::MatrixXd& grid, double ratio = 0.2);

// Largest 4-connected component; ties go to the component whose first cell
// comes first in row-major order.
BinaryMask largest_connected_component(const BinaryMask& mask);

BoundingBox tight_box(const BinaryMask& component);

BoundingBox upsample_box(const BoundingBox& box, Index feat_h, Index feat_w, Index img_h, Index img_w);

double iou(const BoundingBox& a, const BoundingBox& b);

enum class LabelMode { gt, top1 };

std::string to_string(LabelMode mode);
LabelMode parse_label_mode(const std::string& name);

struct LocalizeOptions {
    infocam::MapOptions map;
    double ratio = 0.2;
    LabelMode label_mode = LabelMode::gt;
    bool multi_label = false; // top-1 correctness = the target's logit is positive
};

struct LocalizationResult {
    BoundingBox predicted_box;
    BoundingBox gt_box;
    double iou = 0.0;
    bool gt_loc_correct = false;
    bool top1_loc_correct = false;
    int predicted_label = -1;
    int true_label = -1;
    bool fallback = false; // empty mask, full-image box used
};

// Map -> threshold -> largest component -> box -> image coordinates.
BoundingBox box_from_map(const Eigen::MatrixXd& grid, Index img_h, Index img_w, double ratio, bool* fallback = nullptr);

// Localization of `true_label` from an already computed forward pass.
LocalizationResult localize_forward(const nn::ForwardResult& forward, const Eigen::Ref<const Eigen::MatrixXd>& weights,
                                    Index img_h, Index img_w, int true_label, const BoundingBox& gt_box,
                                    const LocalizeOptions& options);

LocalizationResult localize(nn::Network& net, const nn::Tensor& image, int true_label, const BoundingBox& gt_box,
                            const LocalizeOptions& options);

struct SuiteScores {
    double gt_loc = 0.0;
    double top1_loc = 0.0;
    double mean_iou = 0.0;
    long long n = 0;
    long long fallbacks = 0;
};

SuiteScores score_suite(const std::vector<LocalizationResult>& results);

// One JSON object per line.
void write_record(std::ostream& out, long long image_id, const std::string& map_kind, const LocalizationResult& r);

} // namespace miloc::wsol
