#pragma once

#include "miloc/nn/tensor.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace miloc {

enum class Split : std::uint32_t { train = 0, valid = 1, test = 2, all = 3 };

std::string to_string(Split split);

// Vector-valued samples with class labels; one sample per column of
// `inputs`.
struct LabeledDataset {
    Eigen::MatrixXd inputs;
    std::vector<int> labels;
    int num_classes = 0;
    Split split = Split::all;

    Eigen::Index size() const { return inputs.cols(); }
    Eigen::Index dim() const { return inputs.rows(); }
    nn::Tensor sample(Eigen::Index i) const;
    std::vector<long long> class_counts() const;
    void validate() const;
};

// Same inputs, labels permuted by a seeded shuffle (breaks any X-Y dependence).
LabeledDataset permute_labels(const LabeledDataset& data, std::uint64_t seed);

// Binary layout, little-endian:
//   "MLDS" | u32 version (1) | u32 split | u32 dim | u32 num_classes | u64 N
//   N * dim f64 (sample-major) | N u8 labels
void write_dataset(std::ostream& out, const LabeledDataset& data);
LabeledDataset read_dataset(std::istream& in);
void save_dataset(const std::filesystem::path& path, const LabeledDataset& data);
LabeledDataset load_dataset(const std::filesystem::path& path);

// "label,x0,x1,..." with a header row; 17 significant digits.
void write_csv(std::ostream& out, const LabeledDataset& data);

} // namespace miloc
