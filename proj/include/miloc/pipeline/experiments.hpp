#pragma once

#include "miloc/data/images.hpp"
#include "miloc/estimate.hpp"
#include "miloc/gaussmix/mixture.hpp"
#include "miloc/infocam/maps.hpp"
#include "miloc/miest/pmi.hpp"
#include "miloc/nn/trainer.hpp"
#include "miloc/wsol/localize.hpp"

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace miloc::pipeline {

using Eigen::Index;

struct TrainSettings {
    int epochs = 20;
    Index batch_size = 64;
    nn::OptimizerConfig optimizer;
    double lr_decay = 1.0;
    std::function<void(const nn::EpochStats&)> on_epoch;

    nn::TrainOptions options(std::uint64_t seed) const;
};

// Synthetic mixture: sample, train a classifier, compare the model-based MI
// estimate with the Monte-Carlo value. The kept epoch is the one with the
// lowest validation loss, which is the highest validation MI estimate.
struct MixtureRun {
    bool balanced = true;
    Index dim = 1;
    nn::Head head = nn::Head::softmax;
    std::vector<Index> hidden{64, 64, 64};
    std::uint64_t seed = 0;
    bool shuffle_labels = false; // train and evaluate on label-permuted splits
    TrainSettings train;
};

struct MixtureReport {
    std::vector<long long> counts;
    nn::PriorDistribution train_prior = nn::PriorDistribution::uniform(1);
    MiEstimate mc_test;       // known-density estimate on the test split
    MiEstimate model_test;    // the head's own estimator (pmi or pc_pmi)
    MiEstimate model_train;
    std::map<std::string, MiEstimate> variants_test; // every PMI kind, by name
    miest::ClassifierScores test_scores;
    nn::TrainLog log;
};

MixtureReport run_mixture(const MixtureRun& run);

// Single-label MNIST classification, balanced or with the minority digits
// subsampled to one tenth.
struct MnistRun {
    bool unbalanced = false;
    nn::Head head = nn::Head::softmax;
    Index train_limit = 0; // 0 = all training images
    double valid_fraction = 0.1;
    Index conv1 = 8, conv2 = 16, hidden = 64;
    std::uint64_t seed = 0;
    TrainSettings train;
};

struct MnistReport {
    std::vector<long long> train_counts;
    miest::ClassifierScores test_scores;
    MiEstimate mi_test;
    nn::TrainLog log;
};

MnistReport run_mnist(const MnistRun& run);

// Per-label decision quality of a multi-label classifier (present iff
// logit > 0).
struct MultiLabelScores {
    std::vector<double> recall;        // over images containing the label
    std::vector<double> specificity;   // over images without it
    std::vector<double> balanced;      // (recall + specificity) / 2
    std::vector<double> accuracy;      // over all images
    double mean_recall = 0.0;
    double mean_balanced = 0.0;
    double mean_accuracy = 0.0;
    double exact_match = 0.0;
};

MultiLabelScores score_multi_label(const Eigen::MatrixXd& logits, const Eigen::MatrixXd& presence);

struct WsolRun {
    Index n_train = 10000;
    Index n_valid = 1000;
    Index n_test = 2000;
    nn::Head head = nn::Head::pc_sigmoid;
    std::vector<nn::ConvBlock> blocks{{16, true}, {32, true}, {64, false}};
    std::uint64_t seed = 0;
    TrainSettings train;
    std::vector<infocam::MapKind> map_kinds{infocam::MapKind::cam, infocam::MapKind::infocam,
                                            infocam::MapKind::infocam_plus};
    infocam::RegionSpec region{3};
    infocam::ContrastMode contrast = infocam::ContrastMode::per_image;
    bool region_summed = true;
    double ratio = 0.2;
    data::DoubleDigitOptions digits;
    // Optional per-image record sink: (image id, map kind, result).
    std::function<void(long long, infocam::MapKind, const wsol::LocalizationResult&)> on_record;
};

struct WsolReport {
    Eigen::VectorXd label_priors;
    MultiLabelScores test_scores;
    std::map<std::string, wsol::SuiteScores> localization; // by map kind
    nn::TrainLog log;
};

// Double-digit data for a run: train/valid canvases from MNIST training
// digits, test canvases from the MNIST test digits.
struct DoubleDigitSplits {
    data::ImageDataset train, valid, test;
};
DoubleDigitSplits make_double_digit_splits(const WsolRun& run);

WsolReport run_wsol(const WsolRun& run, const DoubleDigitSplits& splits);
WsolReport run_wsol(const WsolRun& run);

// Localizes every present label of every test image with the given map.
std::vector<wsol::LocalizationResult> localize_suite(nn::Network& net, const data::ImageDataset& test,
                                                     const wsol::LocalizeOptions& options);

} // namespace miloc::pipeline
