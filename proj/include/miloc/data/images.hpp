#pragma once

#include "miloc/nn/prior.hpp"
#include "miloc/nn/trainer.hpp"
#include "miloc/wsol/localize.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

namespace miloc::data {

using Eigen::Index;

struct LabeledBox {
    int label = 0;
    wsol::BoundingBox box;
};

// Grayscale images in [0, 1], one flattened image (pixel r*W + c) per
// column. Single-label sets fill `labels`; multi-label sets fill `presence`
// (num_classes x N, 0/1) and usually `gt_boxes`.
struct ImageDataset {
    Index height = 28;
    Index width = 28;
    Eigen::MatrixXd images;
    std::vector<int> labels;
    Eigen::MatrixXd presence;
    std::vector<std::vector<LabeledBox>> gt_boxes;
    int num_classes = 10;

    Index size() const { return images.cols(); }
    bool multi_label() const { return presence.size() > 0; }
    nn::Tensor image(Index i) const;
    nn::Targets targets() const;
    std::vector<long long> class_counts() const;
    void validate() const;
};

ImageDataset subset(const ImageDataset& ds, const std::vector<std::size_t>& indices);

// Seeded split into (first, second) with round(fraction * N) samples in the
// second part.
std::pair<ImageDataset, ImageDataset> split_holdout(const ImageDataset& ds, double fraction, std::uint64_t seed);

class IdxError : public std::runtime_error {
public:
    enum class Kind { io, bad_magic, truncated, count_mismatch };
    IdxError(Kind kind, const std::string& message) : std::runtime_error(message), kind_(kind) {}
    Kind kind() const { return kind_; }

private:
    Kind kind_;
};

// Big-endian IDX: magic 0x00000803 (u8 images N x H x W) and 0x00000801
// (u8 labels N).
ImageDataset read_idx(std::istream& images, std::istream& labels);
ImageDataset load_idx(const std::filesystem::path& images_path, const std::filesystem::path& labels_path);
void write_idx(std::ostream& images, std::ostream& labels, const ImageDataset& ds);
void save_idx(const std::filesystem::path& images_path, const std::filesystem::path& labels_path,
              const ImageDataset& ds);

// <MILOC_DATA_ROOT>/mnist when the variable is set, otherwise the directory
// configured at build time.
std::filesystem::path mnist_dir();
ImageDataset load_mnist(bool train);

// Keeps ceil(keep_fraction * count) randomly chosen instances of each
// minority class; original order is preserved.
ImageDataset make_unbalanced(const ImageDataset& ds, const std::vector<int>& minority = {0, 2, 4, 6, 8},
                             double keep_fraction = 0.1, std::uint64_t seed = 0);

struct DoubleDigitOptions {
    double presence = 0.7; // P(a half holds a digit)
    int jitter = 0;        // max shift in pixels of a digit inside its half
};

// 28 x 56 canvases: each half independently holds a uniformly drawn digit
// class with probability `presence`; empty canvases are redrawn.
ImageDataset make_double_digit(const ImageDataset& source, Index n_images, std::uint64_t seed,
                               const DoubleDigitOptions& options = {});

nn::PriorDistribution empirical_priors(const ImageDataset& ds);
// Per-label P(present) of a multi-label set.
Eigen::VectorXd label_priors(const ImageDataset& ds);

// "MLID" | u32 version | u32 H | u32 W | u32 num_classes | u32 multi | u64 N
// | N*H*W u8 pixels (value * 255) | labels: N u8, or presence N*C u8 then
// per image u8 count and (u8 label, 4 x i16 box) entries
void write_images(std::ostream& out, const ImageDataset& ds);
ImageDataset read_images(std::istream& in);
void save_images(const std::filesystem::path& path, const ImageDataset& ds);
ImageDataset load_images(const std::filesystem::path& path);

// Image i as an 8-bit PGM (0 -> black, 1 -> white).
void save_image_pgm(const std::filesystem::path& path, const ImageDataset& ds, Index i);

} // namespace miloc::data
