#include "cli/commands.hpp"

#include "miloc/data/images.hpp"
#include "miloc/gaussmix/mixture.hpp"
#include "miloc/infocam/maps.hpp"
#include "miloc/miest/pmi.hpp"
#include "miloc/nn/checkpoint.hpp"
#include "miloc/pipeline/experiments.hpp"
#include "miloc/rng.hpp"
#include "miloc/wsol/localize.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iostream>
#include <stdexcept>

namespace miloc::cli {

namespace fs = std::filesystem;
using Eigen::Index;

namespace {

enum class Task { mixture, mnist, wsol };

Task task_of(const Config& config)
{
    const auto& name = config.get("task");
    if (name == "mixture-mi")
        return Task::mixture;
    if (name == "mnist-cls")
        return Task::mnist;
    if (name == "multi-mnist-wsol")
        return Task::wsol;
    throw std::invalid_argument("unknown task '" + name + "' (mixture-mi, mnist-cls, multi-mnist-wsol)");
}

nn::Head head_of(const Config& config)
{
    const char* fallback = task_of(config) == Task::wsol ? "pc_sigmoid" : "softmax";
    return nn::parse_head(config.get_or("head", fallback));
}

std::vector<Index> index_list(const Config& config, const std::string& key, const std::string& fallback)
{
    std::vector<Index> out;
    for (const auto& item : split_list(config.get_or(key, fallback)))
        out.push_back(std::stoll(item));
    return out;
}

// "16p,32p,64": channel counts, 'p' marks a 2x2 max-pool after the block.
std::vector<nn::ConvBlock> blocks_of(const Config& config)
{
    std::vector<nn::ConvBlock> blocks;
    for (auto item : split_list(config.get_or("blocks", "16p,32p,64"))) {
        const bool pool = !item.empty() && item.back() == 'p';
        if (pool)
            item.pop_back();
        blocks.push_back({std::stoll(item), pool});
    }
    return blocks;
}

nn::TrainOptions train_options(const Config& config, int default_epochs)
{
    nn::TrainOptions o;
    o.epochs = static_cast<int>(config.get_int("epochs", default_epochs));
    o.batch_size = config.get_int("batch", 64);
    o.optimizer.kind = nn::parse_optimizer_kind(config.get_or("optimizer", "adam"));
    o.optimizer.learning_rate = config.get_double("lr", 1e-3);
    o.lr_decay = config.get_double("lr_decay", 1.0);
    o.seed = config.seed();
    return o;
}

void ensure_dir(const fs::path& dir)
{
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec || !fs::is_directory(dir))
        throw std::runtime_error("cannot create output directory " + dir.string());
    const auto probe = dir / ".write-test";
    std::ofstream out(probe);
    if (!out)
        throw std::runtime_error("output directory " + dir.string() + " is not writable");
    out.close();
    fs::remove(probe, ec);
}

const char* split_file(Task task, const std::string& split)
{
    if (task == Task::mixture)
        return split == "train" ? "train.mlds" : split == "valid" ? "valid.mlds" : "test.mlds";
    return split == "train" ? "train.mlid" : split == "valid" ? "valid.mlid" : "test.mlid";
}

LabeledDataset load_vectors(const Config& config, const std::string& split)
{
    return load_dataset(data_dir(config) / split_file(Task::mixture, split));
}

data::ImageDataset load_images(const Config& config, const std::string& split)
{
    return data::load_images(data_dir(config) / split_file(task_of(config), split));
}

fs::path checkpoint_path(const Config& config)
{
    return config.has("checkpoint") ? fs::path(config.get("checkpoint")) : out_dir(config) / "model.ckpt";
}

gaussmix::MixtureDesign mixture_design(const Config& config)
{
    return gaussmix::standard_design(config.get_bool("balanced", true), config.get_int("dim", 1));
}

std::optional<nn::PriorDistribution> single_label_prior(nn::Head head, const std::vector<long long>& train_counts)
{
    if (head == nn::Head::pc_softmax)
        return nn::PriorDistribution::from_counts(train_counts);
    return std::nullopt;
}

void add_estimate(ReportRecord& r, const std::string& name, const std::string& split, const MiEstimate& e)
{
    r.add(name, split, e.value, e.std_error);
}

LabeledDataset as_labeled(const data::ImageDataset& ds)
{
    LabeledDataset out;
    out.inputs = ds.images;
    out.labels = ds.labels;
    out.num_classes = ds.num_classes;
    return out;
}

} // namespace

fs::path out_dir(const Config& config)
{
    if (config.has("out"))
        return config.get("out");
    return fs::path("runs") / (config.get("task") + "-seed" + std::to_string(config.seed()));
}

fs::path data_dir(const Config& config)
{
    return config.has("data") ? fs::path(config.get("data")) : out_dir(config);
}

ReportRecord cmd_gen(const Config& config)
{
    const auto task = task_of(config);
    const auto seed = config.seed();
    const auto dir = out_dir(config);
    ensure_dir(dir);
    auto record = make_record("gen", config);
    nlohmann::json manifest = {{"task", config.get("task")}, {"seed", seed}, {"config_digest", record.config_digest}};

    std::vector<std::pair<std::string, fs::path>> files;
    if (task == Task::mixture) {
        const auto design = mixture_design(config);
        auto splits = gaussmix::sample(design.spec, design.counts, seed);
        if (config.get_bool("shuffle_labels", false)) {
            splits.train = permute_labels(splits.train, seed + 1);
            splits.valid = permute_labels(splits.valid, seed + 2);
            splits.test = permute_labels(splits.test, seed + 3);
        }
        manifest["counts"] = design.counts;
        manifest["dim"] = design.spec.dim;
        manifest["priors"] = std::vector<double>(design.spec.priors.probs().data(),
                                                 design.spec.priors.probs().data() + design.spec.priors.size());
        for (const auto* split : {"train", "valid", "test"}) {
            const auto& ds = std::string(split) == "train" ? splits.train
                             : std::string(split) == "valid" ? splits.valid
                                                             : splits.test;
            const auto path = dir / split_file(task, split);
            save_dataset(path, ds);
            files.emplace_back(split, path);
            record.add("samples", split, static_cast<double>(ds.size()));
        }
    } else {
        data::ImageDataset train, valid, test;
        if (task == Task::wsol) {
            pipeline::WsolRun run;
            run.n_train = config.get_int("n_train", 10000);
            run.n_valid = config.get_int("n_valid", 1000);
            run.n_test = config.get_int("n_test", 2000);
            run.seed = seed;
            run.digits.presence = config.get_double("presence", 0.7);
            run.digits.jitter = static_cast<int>(config.get_int("jitter", 0));
            auto splits = pipeline::make_double_digit_splits(run);
            train = std::move(splits.train);
            valid = std::move(splits.valid);
            test = std::move(splits.test);
            const auto priors = data::label_priors(train);
            manifest["label_priors"] = std::vector<double>(priors.data(), priors.data() + priors.size());
        } else {
            auto all = data::load_mnist(true);
            test = data::load_mnist(false);
            if (config.get_bool("unbalanced", false)) {
                all = data::make_unbalanced(all, {0, 2, 4, 6, 8}, config.get_double("keep_fraction", 0.1), seed);
                test = data::make_unbalanced(test, {0, 2, 4, 6, 8}, config.get_double("keep_fraction", 0.1), seed + 1);
            }
            if (const auto limit = config.get_int("train_limit", 0); limit > 0 && limit < all.size()) {
                Rng rng(seed ^ 0x4C494D4954ull);
                auto order = permutation(static_cast<std::size_t>(all.size()), rng);
                order.resize(static_cast<std::size_t>(limit));
                std::sort(order.begin(), order.end());
                all = data::subset(all, order);
            }
            std::tie(train, valid) = data::split_holdout(all, config.get_double("valid_fraction", 0.1), seed);
            manifest["train_counts"] = train.class_counts();
        }
        for (const auto* split : {"train", "valid", "test"}) {
            const auto& ds = std::string(split) == "train" ? train : std::string(split) == "valid" ? valid : test;
            const auto path = dir / split_file(task, split);
            data::save_images(path, ds);
            files.emplace_back(split, path);
            record.add("samples", split, static_cast<double>(ds.size()));
        }
        const auto previews = std::min<Index>(config.get_int("pgm", 0), test.size());
        for (Index i = 0; i < previews; ++i)
            data::save_image_pgm(dir / ("test-" + std::to_string(i) + ".pgm"), test, i);
    }
    for (const auto& [split, path] : files) {
        manifest["files"][path.filename().string()] = sha256_file(path);
        record.artifacts[split] = path.string();
    }
    const auto manifest_path = dir / "manifest.json";
    std::ofstream(manifest_path) << manifest.dump(2) << '\n';
    record.artifacts["manifest"] = manifest_path.string();
    return record;
}

ReportRecord cmd_train(const Config& config)
{
    const auto task = task_of(config);
    const auto head = head_of(config);
    const auto dir = out_dir(config);
    ensure_dir(dir);
    auto record = make_record("train", config);

    Eigen::MatrixXd train_x, valid_x;
    nn::Targets train_t, valid_t;
    nn::HeadSpec spec;
    spec.head = head;
    std::optional<nn::Network> net;
    int default_epochs = 20;
    if (task == Task::mixture) {
        if (nn::is_multi_label(head))
            throw std::invalid_argument("mixture-mi needs a single-label head");
        const auto train = load_vectors(config, "train"), valid = load_vectors(config, "valid");
        train_x = train.inputs;
        valid_x = valid.inputs;
        train_t.labels = train.labels;
        valid_t.labels = valid.labels;
        spec.prior = single_label_prior(head, train.class_counts());
        net = nn::make_mlp(train.dim(), index_list(config, "hidden", "64,64,64"), train.num_classes);
    } else {
        const auto train = load_images(config, "train"), valid = load_images(config, "valid");
        if (train.multi_label() != nn::is_multi_label(head))
            throw std::invalid_argument("head " + nn::to_string(head) + " does not fit the dataset's labels");
        train_x = train.images;
        valid_x = valid.images;
        train_t = train.targets();
        valid_t = valid.targets();
        if (task == Task::wsol) {
            default_epochs = 20;
            spec.label_priors = data::label_priors(train);
            net = nn::make_gap_cnn({1, train.height, train.width}, blocks_of(config), train.num_classes);
        } else {
            default_epochs = 5;
            spec.prior = single_label_prior(head, train.class_counts());
            net = nn::make_pool_cnn({1, train.height, train.width}, config.get_int("conv1", 8),
                                    config.get_int("conv2", 16), config.get_int("hidden", 64), train.num_classes);
        }
    }
    net->initialize(Rng::stream(config.seed(), 0x4E4554).next());
    auto options = train_options(config, default_epochs);
    const auto select = config.get_or("select", task == Task::mixture ? "loss" : "accuracy");
    if (select != "accuracy" && select != "loss")
        throw std::invalid_argument("select must be accuracy or loss, got " + select);
    options.selection = select == "loss" ? nn::Selection::loss : nn::Selection::accuracy;
    const auto log_path = dir / "train_log.jsonl";
    std::ofstream log_out(log_path);
    options.on_epoch = [&](const nn::EpochStats& s) {
        log_out << nlohmann::json{{"epoch", s.epoch}, {"train_loss", s.train_loss}, {"valid_accuracy", s.valid_accuracy},
                                 {"valid_loss", s.valid_loss}}
                       .dump()
                << '\n';
        log_out.flush();
        if (!config.get_bool("quiet", false))
            std::cerr << "epoch " << s.epoch << " loss " << s.train_loss << " valid " << s.valid_accuracy << '\n';
    };
    const auto log = nn::fit(*net, train_x, train_t, valid_x, valid_t, spec, options);
    nn::save_checkpoint(checkpoint_path(config), *net);

    record.add("best_epoch", "valid", log.best_epoch);
    record.add("accuracy", "valid", log.best_valid_accuracy);
    record.add("loss", "valid", log.best_valid_loss);
    if (!log.epochs.empty())
        record.add("loss", "train", log.epochs.back().train_loss);
    record.artifacts["checkpoint"] = checkpoint_path(config).string();
    record.artifacts["train_log"] = log_path.string();
    return record;
}

ReportRecord cmd_eval_mi(const Config& config)
{
    const auto task = task_of(config);
    if (task == Task::wsol)
        throw std::invalid_argument("eval-mi handles mixture-mi and mnist-cls tasks, not multi-mnist-wsol");
    const auto head = head_of(config);
    if (nn::is_multi_label(head))
        throw std::invalid_argument("eval-mi needs a single-label head");
    auto net = nn::load_checkpoint(checkpoint_path(config));
    auto record = make_record("eval-mi", config);

    LabeledDataset train, test;
    if (task == Task::mixture) {
        train = load_vectors(config, "train");
        test = load_vectors(config, "test");
        const auto design = mixture_design(config);
        add_estimate(record, "mi_mc", "test", gaussmix::mc_mutual_information(design.spec, test));
        record.add("label_entropy", "population", design.spec.priors.entropy());
    } else {
        train = as_labeled(load_images(config, "train"));
        test = as_labeled(load_images(config, "test"));
    }
    const auto prior = nn::PriorDistribution::from_counts(train.class_counts());
    const auto own = single_label_prior(head, train.class_counts());
    add_estimate(record, "mi_model", "test", miest::estimate_mi(net, test, own));
    add_estimate(record, "mi_model", "train", miest::estimate_mi(net, train, own));
    const Eigen::MatrixXd logits = net.predict_logits(test.inputs);
    for (auto kind : {miest::PmiKind::softmax, miest::PmiKind::pc_softmax, miest::PmiKind::posterior})
        add_estimate(record, "mi_" + miest::to_string(kind), "test",
                     miest::estimate_from_logits(logits, test.labels, kind, prior));
    return record;
}

ReportRecord cmd_eval_cls(const Config& config)
{
    const auto task = task_of(config);
    const auto head = head_of(config);
    auto net = nn::load_checkpoint(checkpoint_path(config));
    auto record = make_record("eval-cls", config);
    if (task == Task::wsol) {
        const auto test = load_images(config, "test");
        const auto s = pipeline::score_multi_label(net.predict_logits(test.images), test.presence);
        for (std::size_t c = 0; c < s.recall.size(); ++c) {
            record.add("recall_" + std::to_string(c), "test", s.recall[c]);
            record.add("balanced_" + std::to_string(c), "test", s.balanced[c]);
            record.add("accuracy_" + std::to_string(c), "test", s.accuracy[c]);
        }
        record.add("mean_accuracy", "test", s.mean_accuracy);
        record.add("mean_recall", "test", s.mean_recall);
        record.add("mean_balanced", "test", s.mean_balanced);
        record.add("exact_match", "test", s.exact_match);
        return record;
    }
    LabeledDataset train, test;
    if (task == Task::mixture) {
        train = load_vectors(config, "train");
        test = load_vectors(config, "test");
    } else {
        train = as_labeled(load_images(config, "train"));
        test = as_labeled(load_images(config, "test"));
    }
    const auto scores = miest::evaluate_classifier(net, test, head, single_label_prior(head, train.class_counts()));
    record.add("accuracy_micro", "test", scores.micro);
    record.add("accuracy_per_class", "test", scores.per_class);
    for (std::size_t c = 0; c < scores.recall.size(); ++c)
        if (!std::isnan(scores.recall[c]))
            record.add("recall_" + std::to_string(c), "test", scores.recall[c]);
    return record;
}

ReportRecord cmd_localize(const Config& config)
{
    if (task_of(config) != Task::wsol)
        throw std::invalid_argument("localize needs the multi-mnist-wsol task");
    auto net = nn::load_checkpoint(checkpoint_path(config));
    if (!net.has_gap_head())
        throw std::invalid_argument("localize needs a model ending in global average pooling and a bias-free dense layer");
    const auto test = load_images(config, "test");
    const auto dir = out_dir(config);
    ensure_dir(dir);
    auto record = make_record("localize", config);

    wsol::LocalizeOptions base;
    base.map.region = {static_cast<int>(config.get_int("region", 3))};
    base.map.region_summed = config.get_bool("region_summed", true);
    const auto contrast = config.get_or("contrast", "per_image");
    if (contrast != "per_image" && contrast != "per_region")
        throw std::invalid_argument("contrast must be per_image or per_region");
    base.map.contrast = contrast == "per_image" ? infocam::ContrastMode::per_image : infocam::ContrastMode::per_region;
    base.ratio = config.get_double("ratio", 0.2);
    base.multi_label = true;

    const auto records_path = dir / "localize_records.jsonl";
    std::ofstream records(records_path);
    const auto overlays = std::min<Index>(config.get_int("pgm", 0), test.size());
    const Eigen::MatrixXd weights = net.final_weights();
    for (const auto& name : config.get_list("maps", {"cam", "infocam", "infocam_plus"})) {
        auto options = base;
        options.map.kind = infocam::parse_map_kind(name);
        const auto results = pipeline::localize_suite(net, test, options);
        std::size_t k = 0;
        for (Index i = 0; i < test.size(); ++i)
            for (std::size_t t = 0; t < test.gt_boxes[static_cast<std::size_t>(i)].size(); ++t)
                wsol::write_record(records, i, name, results[k++]);
        for (Index i = 0; i < overlays; ++i) {
            const auto forward = net.forward(test.image(i));
            for (const auto& target : test.gt_boxes[static_cast<std::size_t>(i)]) {
                const auto map = infocam::localization_map(forward.features, weights, target.label, options.map);
                infocam::save_pgm(dir / ("map-" + std::to_string(i) + "-digit" + std::to_string(target.label) + "-"
                                         + name + ".pgm"),
                                  map.grid);
            }
        }
        const auto s = wsol::score_suite(results);
        record.add("loc_gt_" + name, "test", s.gt_loc);
        record.add("loc_top1_" + name, "test", s.top1_loc);
        record.add("mean_iou_" + name, "test", s.mean_iou);
        record.add("records_" + name, "test", static_cast<double>(s.n));
        record.add("fallbacks_" + name, "test", static_cast<double>(s.fallbacks));
    }
    record.artifacts["records"] = records_path.string();
    return record;
}

ReportRecord run_verb(const std::string& verb, const Config& config)
{
    const auto start = std::chrono::steady_clock::now();
    ReportRecord record;
    if (verb == "gen")
        record = cmd_gen(config);
    else if (verb == "train")
        record = cmd_train(config);
    else if (verb == "eval-mi")
        record = cmd_eval_mi(config);
    else if (verb == "eval-cls")
        record = cmd_eval_cls(config);
    else if (verb == "localize")
        record = cmd_localize(config);
    else
        throw std::invalid_argument("unknown verb '" + verb + "'");
    record.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const auto path = out_dir(config) / (verb + ".json");
    save_record(path, record);
    return record;
}

} // namespace miloc::cli
