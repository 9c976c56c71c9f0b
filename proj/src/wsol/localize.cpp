#include "miloc/wsol/localize.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <deque>
#include <ostream>
#include <stdexcept>

namespace miloc::wsol {

std::string to_string(const BoundingBox& box)
{
    return "(" + std::to_string(box.x_min) + "," + std::to_string(box.y_min) + "," + std::to_string(box.x_max) + ","
           + std::to_string(box.y_max) + ")";
}

BinaryMask threshold_mask(const Eigen::MatrixXd& grid, double ratio)
{
    if (!(ratio >= 0.0 && ratio < 1.0))
        throw std::invalid_argument("threshold ratio must lie in [0, 1)");
    const double lo = grid.minCoeff(), hi = grid.maxCoeff();
    if (!(hi > lo))
        return BinaryMask::Constant(grid.rows(), grid.cols(), true);
    return ((grid.array() - lo) / (hi - lo)) > ratio;
}

BinaryMask largest_connected_component(const BinaryMask& mask)
{
    const Index h = mask.rows(), w = mask.cols();
    Eigen::ArrayXXi label = Eigen::ArrayXXi::Constant(h, w, -1);
    int best = -1;
    long long best_size = 0;
    int next = 0;
    std::deque<std::pair<Index, Index>> queue;
    for (Index r = 0; r < h; ++r)
        for (Index c = 0; c < w; ++c) {
            if (!mask(r, c) || label(r, c) >= 0)
                continue;
            long long size = 0;
            label(r, c) = next;
            queue.emplace_back(r, c);
            while (!queue.empty()) {
                const auto [i, j] = queue.front();
                queue.pop_front();
                ++size;
                const Index di[] = {-1, 1, 0, 0}, dj[] = {0, 0, -1, 1};
                for (int k = 0; k < 4; ++k) {
                    const Index ni = i + di[k], nj = j + dj[k];
                    if (ni >= 0 && ni < h && nj >= 0 && nj < w && mask(ni, nj) && label(ni, nj) < 0) {
                        label(ni, nj) = next;
                        queue.emplace_back(ni, nj);
                    }
                }
            }
            if (size > best_size) {
                best_size = size;
                best = next;
            }
            ++next;
        }
    if (best < 0)
        return BinaryMask::Constant(h, w, false);
    return label == best;
}

BoundingBox tight_box(const BinaryMask& component)
{
    BoundingBox box{static_cast<int>(component.cols()), static_cast<int>(component.rows()), -1, -1};
    for (Index r = 0; r < component.rows(); ++r)
        for (Index c = 0; c < component.cols(); ++c)
            if (component(r, c)) {
                box.x_min = std::min(box.x_min, static_cast<int>(c));
                box.x_max = std::max(box.x_max, static_cast<int>(c));
                box.y_min = std::min(box.y_min, static_cast<int>(r));
                box.y_max = std::max(box.y_max, static_cast<int>(r));
            }
    if (box.x_max < 0)
        throw std::invalid_argument("tight_box of an empty component");
    return box;
}

BoundingBox upsample_box(const BoundingBox& box, Index feat_h, Index feat_w, Index img_h, Index img_w)
{
    if (feat_h > img_h || feat_w > img_w || feat_h <= 0 || feat_w <= 0)
        throw std::invalid_argument("feature grid must be non-empty and no larger than the image");
    const double sx = static_cast<double>(img_w) / static_cast<double>(feat_w);
    const double sy = static_cast<double>(img_h) / static_cast<double>(feat_h);
    auto clamp = [](double v, Index hi) { return static_cast<int>(std::clamp<double>(v, 0.0, static_cast<double>(hi - 1))); };
    return {clamp(std::floor(box.x_min * sx), img_w), clamp(std::floor(box.y_min * sy), img_h),
            clamp(std::ceil((box.x_max + 1) * sx) - 1.0, img_w), clamp(std::ceil((box.y_max + 1) * sy) - 1.0, img_h)};
}

double iou(const BoundingBox& a, const BoundingBox& b)
{
    const long long iw = std::max(0, std::min(a.x_max, b.x_max) - std::max(a.x_min, b.x_min) + 1);
    const long long ih = std::max(0, std::min(a.y_max, b.y_max) - std::max(a.y_min, b.y_min) + 1);
    const long long inter = iw * ih;
    return static_cast<double>(inter) / static_cast<double>(a.area() + b.area() - inter);
}

std::string to_string(LabelMode mode) { return mode == LabelMode::gt ? "gt" : "top1"; }

LabelMode parse_label_mode(const std::string& name)
{
    if (name == "gt")
        return LabelMode::gt;
    if (name == "top1")
        return LabelMode::top1;
    throw std::invalid_argument("unknown label mode '" + name + "'");
}

BoundingBox box_from_map(const Eigen::MatrixXd& grid, Index img_h, Index img_w, double ratio, bool* fallback)
{
    const BinaryMask component = largest_connected_component(threshold_mask(grid, ratio));
    if (fallback)
        *fallback = !component.any();
    if (!component.any())
        return {0, 0, static_cast<int>(img_w - 1), static_cast<int>(img_h - 1)};
    return upsample_box(tight_box(component), grid.rows(), grid.cols(), img_h, img_w);
}

LocalizationResult localize_forward(const nn::ForwardResult& forward, const Eigen::Ref<const Eigen::MatrixXd>& weights,
                                    Index img_h, Index img_w, int true_label, const BoundingBox& gt_box,
                                    const LocalizeOptions& options)
{
    if (forward.features.maps.size() == 0)
        throw std::invalid_argument("localization needs GAP feature maps");
    LocalizationResult result;
    result.true_label = true_label;
    result.gt_box = gt_box;
    if (options.multi_label)
        result.predicted_label = forward.logits[true_label] > 0.0 ? true_label : -1;
    else
        result.predicted_label = static_cast<int>(nn::argmax(forward.logits));
    const bool classified = result.predicted_label == true_label;

    auto box_for = [&](int label, bool* fallback) {
        const auto map = infocam::localization_map(forward.features, weights, label, options.map);
        return box_from_map(map.grid, img_h, img_w, options.ratio, fallback);
    };
    const BoundingBox gt_label_box = box_for(true_label, &result.fallback);
    const double gt_iou = iou(gt_label_box, gt_box);
    result.gt_loc_correct = gt_iou > 0.5;
    // With a correct prediction the top-1 map is the ground-truth label's map.
    result.top1_loc_correct = classified && result.gt_loc_correct;

    if (options.label_mode == LabelMode::top1 && !classified && result.predicted_label >= 0) {
        result.predicted_box = box_for(result.predicted_label, &result.fallback);
        result.iou = iou(result.predicted_box, gt_box);
    } else {
        result.predicted_box = gt_label_box;
        result.iou = gt_iou;
    }
    return result;
}

LocalizationResult localize(nn::Network& net, const nn::Tensor& image, int true_label, const BoundingBox& gt_box,
                            const LocalizeOptions& options)
{
    if (!net.has_gap_head())
        throw std::invalid_argument("localization needs a network ending in GAP and a bias-free dense layer");
    const auto forward = net.forward(image);
    const Eigen::MatrixXd weights = net.final_weights();
    return localize_forward(forward, weights, net.input_shape().height, net.input_shape().width, true_label, gt_box,
                            options);
}

SuiteScores score_suite(const std::vector<LocalizationResult>& results)
{
    if (results.empty())
        throw std::invalid_argument("cannot score an empty localization suite");
    SuiteScores s;
    s.n = static_cast<long long>(results.size());
    long long gt = 0, top1 = 0;
    double iou_sum = 0.0;
    for (const auto& r : results) {
        gt += r.gt_loc_correct;
        top1 += r.top1_loc_correct;
        s.fallbacks += r.fallback;
        iou_sum += r.iou;
    }
    s.gt_loc = static_cast<double>(gt) / static_cast<double>(s.n);
    s.top1_loc = static_cast<double>(top1) / static_cast<double>(s.n);
    s.mean_iou = iou_sum / static_cast<double>(s.n);
    return s;
}

void write_record(std::ostream& out, long long image_id, const std::string& map_kind, const LocalizationResult& r)
{
    auto box = [](const BoundingBox& b) { return nlohmann::json::array({b.x_min, b.y_min, b.x_max, b.y_max}); };
    nlohmann::json j = {{"image", image_id},
                        {"map", map_kind},
                        {"true_label", r.true_label},
                        {"predicted_label", r.predicted_label},
                        {"predicted_box", box(r.predicted_box)},
                        {"gt_box", box(r.gt_box)},
                        {"iou", r.iou},
                        {"gt_loc", r.gt_loc_correct},
                        {"top1_loc", r.top1_loc_correct},
                        {"fallback", r.fallback}};
    out << j.dump() << '\n';
}

} // namespace miloc::wsol
