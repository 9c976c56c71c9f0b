#include "miloc/data/images.hpp"

#include "miloc/binary_io.hpp"
#include "miloc/rng.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdlib>
#include <fstream>

#ifndef MILOC_DEFAULT_MNIST_DIR
#define MILOC_DEFAULT_MNIST_DIR "data/mnist"
#endif

namespace miloc::data {

namespace {

constexpr std::uint32_t kImageMagic = 0x00000803;
constexpr std::uint32_t kLabelMagic = 0x00000801;

std::uint32_t read_be32(std::istream& in, const char* what)
{
    unsigned char b[4];
    in.read(reinterpret_cast<char*>(b), 4);
    if (!in)
        throw IdxError(IdxError::Kind::truncated, std::string("truncated IDX header (") + what + ")");
    return (std::uint32_t{b[0]} << 24) | (std::uint32_t{b[1]} << 16) | (std::uint32_t{b[2]} << 8) | b[3];
}

void write_be32(std::ostream& out, std::uint32_t v)
{
    const char b[4] = {static_cast<char>(v >> 24), static_cast<char>(v >> 16), static_cast<char>(v >> 8),
                       static_cast<char>(v)};
    out.write(b, 4);
}

std::string hex(std::uint32_t v)
{
    char buf[11];
    std::snprintf(buf, sizeof buf, "0x%08X", v);
    return buf;
}

std::uint8_t to_byte(double v)
{
    return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
}

std::ifstream open_in(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw IdxError(IdxError::Kind::io, "cannot open " + path.string());
    return in;
}

std::ofstream open_out(const std::filesystem::path& path)
{
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw std::runtime_error("cannot write " + path.string());
    return out;
}

// Pastes a 28x28 digit into `canvas` at column offset `x0`, shifted by
// (dx, dy); returns the tight box of the pasted nonzero pixels.
wsol::BoundingBox paste(Eigen::Ref<Eigen::VectorXd> canvas, Index canvas_w, const ImageDataset& src, Index idx,
                        int x0, int dx, int dy)
{
    wsol::BoundingBox box{std::numeric_limits<int>::max(), std::numeric_limits<int>::max(), -1, -1};
    for (Index r = 0; r < src.height; ++r)
        for (Index c = 0; c < src.width; ++c) {
            const double v = src.images(r * src.width + c, idx);
            const int y = static_cast<int>(r) + dy, xl = static_cast<int>(c) + dx;
            if (v == 0.0 || y < 0 || y >= src.height || xl < 0 || xl >= src.width)
                continue;
            const int x = x0 + xl;
            canvas[y * canvas_w + x] = v;
            box.x_min = std::min(box.x_min, x);
            box.y_min = std::min(box.y_min, y);
            box.x_max = std::max(box.x_max, x);
            box.y_max = std::max(box.y_max, y);
        }
    if (box.x_max < 0)
        throw std::runtime_error("source digit " + std::to_string(idx) + " has no visible pixels");
    return box;
}

wsol::BoundingBox digit_extent(const ImageDataset& src, Index idx)
{
    wsol::BinaryMask mask(src.height, src.width);
    for (Index r = 0; r < src.height; ++r)
        for (Index c = 0; c < src.width; ++c)
            mask(r, c) = src.images(r * src.width + c, idx) != 0.0;
    return wsol::tight_box(mask);
}

int jitter_in(Rng& rng, int lo, int hi)
{
    return lo + static_cast<int>(rng.below(static_cast<std::uint64_t>(hi - lo + 1)));
}

} // namespace

nn::Tensor ImageDataset::image(Index i) const
{
    return nn::Tensor({1, height, width}, images.col(i));
}

nn::Targets ImageDataset::targets() const
{
    nn::Targets t;
    if (multi_label())
        t.presence = presence;
    else
        t.labels = labels;
    return t;
}

std::vector<long long> ImageDataset::class_counts() const
{
    std::vector<long long> counts(static_cast<std::size_t>(num_classes), 0);
    if (multi_label()) {
        for (int c = 0; c < num_classes; ++c)
            counts[static_cast<std::size_t>(c)] = static_cast<long long>(presence.row(c).sum());
    } else {
        for (int y : labels)
            ++counts.at(static_cast<std::size_t>(y));
    }
    return counts;
}

void ImageDataset::validate() const
{
    if (images.rows() != height * width)
        throw std::invalid_argument("image rows do not match " + std::to_string(height) + "x" + std::to_string(width));
    if (multi_label()) {
        if (presence.rows() != num_classes || presence.cols() != size())
            throw std::invalid_argument("presence matrix has the wrong shape");
        if (!gt_boxes.empty() && static_cast<Index>(gt_boxes.size()) != size())
            throw std::invalid_argument("one box list per image expected");
    } else {
        if (static_cast<Index>(labels.size()) != size())
            throw std::invalid_argument("one label per image expected");
        for (int y : labels)
            if (y < 0 || y >= num_classes)
                throw std::invalid_argument("label " + std::to_string(y) + " out of range");
    }
}

ImageDataset subset(const ImageDataset& ds, const std::vector<std::size_t>& indices)
{
    ImageDataset out;
    out.height = ds.height;
    out.width = ds.width;
    out.num_classes = ds.num_classes;
    out.images.resize(ds.images.rows(), static_cast<Index>(indices.size()));
    if (ds.multi_label())
        out.presence.resize(ds.presence.rows(), static_cast<Index>(indices.size()));
    for (std::size_t k = 0; k < indices.size(); ++k) {
        const auto i = static_cast<Index>(indices[k]);
        out.images.col(static_cast<Index>(k)) = ds.images.col(i);
        if (ds.multi_label())
            out.presence.col(static_cast<Index>(k)) = ds.presence.col(i);
        else
            out.labels.push_back(ds.labels[indices[k]]);
        if (!ds.gt_boxes.empty())
            out.gt_boxes.push_back(ds.gt_boxes[indices[k]]);
    }
    return out;
}

std::pair<ImageDataset, ImageDataset> split_holdout(const ImageDataset& ds, double fraction, std::uint64_t seed)
{
    Rng rng(seed);
    auto order = permutation(static_cast<std::size_t>(ds.size()), rng);
    const auto n_second = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(ds.size())));
    std::vector<std::size_t> first(order.begin(), order.end() - static_cast<std::ptrdiff_t>(n_second));
    std::vector<std::size_t> second(order.end() - static_cast<std::ptrdiff_t>(n_second), order.end());
    std::sort(first.begin(), first.end());
    std::sort(second.begin(), second.end());
    return {subset(ds, first), subset(ds, second)};
}

ImageDataset read_idx(std::istream& images, std::istream& labels)
{
    if (const auto magic = read_be32(images, "image magic"); magic != kImageMagic)
        throw IdxError(IdxError::Kind::bad_magic,
                       "image file magic " + hex(magic) + ", expected " + hex(kImageMagic));
    const auto n = read_be32(images, "image count");
    const auto h = read_be32(images, "rows");
    const auto w = read_be32(images, "columns");
    if (const auto magic = read_be32(labels, "label magic"); magic != kLabelMagic)
        throw IdxError(IdxError::Kind::bad_magic,
                       "label file magic " + hex(magic) + ", expected " + hex(kLabelMagic));
    const auto n_labels = read_be32(labels, "label count");
    if (n != n_labels)
        throw IdxError(IdxError::Kind::count_mismatch,
                       std::to_string(n) + " images but " + std::to_string(n_labels) + " labels");

    ImageDataset ds;
    ds.height = h;
    ds.width = w;
    const std::size_t pixels = std::size_t{h} * w;
    std::vector<unsigned char> buffer(pixels * n);
    images.read(reinterpret_cast<char*>(buffer.data()), static_cast<std::streamsize>(buffer.size()));
    if (static_cast<std::size_t>(images.gcount()) != buffer.size())
        throw IdxError(IdxError::Kind::truncated, "image data truncated after " + std::to_string(images.gcount())
                                                      + " of " + std::to_string(buffer.size()) + " bytes");
    ds.images.resize(static_cast<Index>(pixels), n);
    for (std::size_t i = 0; i < buffer.size(); ++i)
        ds.images.data()[i] = buffer[i] / 255.0;

    std::vector<unsigned char> raw(n);
    labels.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
    if (static_cast<std::size_t>(labels.gcount()) != raw.size())
        throw IdxError(IdxError::Kind::truncated, "label data truncated after " + std::to_string(labels.gcount())
                                                      + " of " + std::to_string(n) + " labels");
    ds.labels.assign(raw.begin(), raw.end());
    const int top = raw.empty() ? 0 : *std::max_element(raw.begin(), raw.end());
    ds.num_classes = std::max(10, top + 1);
    return ds;
}

ImageDataset load_idx(const std::filesystem::path& images_path, const std::filesystem::path& labels_path)
{
    auto images = open_in(images_path);
    auto labels = open_in(labels_path);
    return read_idx(images, labels);
}

void write_idx(std::ostream& images, std::ostream& labels, const ImageDataset& ds)
{
    if (ds.multi_label())
        throw std::invalid_argument("IDX export holds single-label datasets only");
    write_be32(images, kImageMagic);
    write_be32(images, static_cast<std::uint32_t>(ds.size()));
    write_be32(images, static_cast<std::uint32_t>(ds.height));
    write_be32(images, static_cast<std::uint32_t>(ds.width));
    for (Index i = 0; i < ds.images.size(); ++i)
        images.put(static_cast<char>(to_byte(ds.images.data()[i])));
    write_be32(labels, kLabelMagic);
    write_be32(labels, static_cast<std::uint32_t>(ds.size()));
    for (int y : ds.labels)
        labels.put(static_cast<char>(y));
}

void save_idx(const std::filesystem::path& images_path, const std::filesystem::path& labels_path,
              const ImageDataset& ds)
{
    auto images = open_out(images_path);
    auto labels = open_out(labels_path);
    write_idx(images, labels, ds);
}

std::filesystem::path mnist_dir()
{
    if (const char* root = std::getenv("MILOC_DATA_ROOT"); root && *root)
        return std::filesystem::path(root) / "mnist";
    return MILOC_DEFAULT_MNIST_DIR;
}

ImageDataset load_mnist(bool train)
{
    const auto dir = mnist_dir();
    const std::string prefix = train ? "train" : "t10k";
    return load_idx(dir / (prefix + "-images-idx3-ubyte"), dir / (prefix + "-labels-idx1-ubyte"));
}

ImageDataset make_unbalanced(const ImageDataset& ds, const std::vector<int>& minority, double keep_fraction,
                             std::uint64_t seed)
{
    if (ds.multi_label())
        throw std::invalid_argument("make_unbalanced needs a single-label dataset");
    if (!(keep_fraction > 0.0 && keep_fraction <= 1.0))
        throw std::invalid_argument("keep fraction must lie in (0, 1]");
    std::vector<char> keep(static_cast<std::size_t>(ds.size()), 1);
    for (int c : minority) {
        std::vector<std::size_t> members;
        for (std::size_t i = 0; i < ds.labels.size(); ++i)
            if (ds.labels[i] == c)
                members.push_back(i);
        // The epsilon keeps products such as 0.1 * 5920 from rounding up.
        const auto kept = static_cast<std::size_t>(std::ceil(keep_fraction * static_cast<double>(members.size()) - 1e-9));
        Rng rng = Rng::stream(seed, static_cast<std::uint64_t>(c));
        shuffle(members, rng);
        for (std::size_t k = kept; k < members.size(); ++k)
            keep[members[k]] = 0;
    }
    std::vector<std::size_t> indices;
    for (std::size_t i = 0; i < keep.size(); ++i)
        if (keep[i])
            indices.push_back(i);
    return subset(ds, indices);
}

ImageDataset make_double_digit(const ImageDataset& source, Index n_images, std::uint64_t seed,
                               const DoubleDigitOptions& options)
{
    if (n_images <= 0)
        throw std::invalid_argument("double-digit set needs a positive image count");
    if (source.multi_label())
        throw std::invalid_argument("double-digit source must be single-label");
    std::array<std::vector<Index>, 10> by_class;
    for (std::size_t i = 0; i < source.labels.size(); ++i)
        if (source.labels[i] >= 0 && source.labels[i] < 10)
            by_class[static_cast<std::size_t>(source.labels[i])].push_back(static_cast<Index>(i));
    for (std::size_t c = 0; c < 10; ++c)
        if (by_class[c].empty())
            throw std::invalid_argument("source has no instance of digit " + std::to_string(c));

    ImageDataset out;
    out.height = source.height;
    out.width = 2 * source.width;
    out.num_classes = 10;
    out.images = Eigen::MatrixXd::Zero(out.height * out.width, n_images);
    out.presence = Eigen::MatrixXd::Zero(10, n_images);
    out.gt_boxes.resize(static_cast<std::size_t>(n_images));
    Rng rng(seed);
    for (Index i = 0; i < n_images; ++i) {
        bool present[2];
        do {
            present[0] = rng.bernoulli(options.presence);
            present[1] = rng.bernoulli(options.presence);
        } while (!present[0] && !present[1]);
        auto& boxes = out.gt_boxes[static_cast<std::size_t>(i)];
        for (int half = 0; half < 2; ++half) {
            if (!present[half])
                continue;
            const int digit = static_cast<int>(rng.below(10));
            const auto& pool = by_class[static_cast<std::size_t>(digit)];
            const Index idx = pool[rng.below(pool.size())];
            int dx = 0, dy = 0;
            if (options.jitter > 0) {
                // Shifts never move any stroke pixel out of the half.
                const auto extent = digit_extent(source, idx);
                const int j = options.jitter;
                dx = jitter_in(rng, std::max(-j, -extent.x_min), std::min(j, static_cast<int>(source.width) - 1 - extent.x_max));
                dy = jitter_in(rng, std::max(-j, -extent.y_min), std::min(j, static_cast<int>(source.height) - 1 - extent.y_max));
            }
            const auto box = paste(out.images.col(i), out.width, source, idx,
                                   half * static_cast<int>(source.width), dx, dy);
            out.presence(digit, i) = 1.0;
            auto same = std::find_if(boxes.begin(), boxes.end(), [&](const LabeledBox& b) { return b.label == digit; });
            if (same == boxes.end()) {
                boxes.push_back({digit, box});
            } else {
                same->box = {std::min(same->box.x_min, box.x_min), std::min(same->box.y_min, box.y_min),
                             std::max(same->box.x_max, box.x_max), std::max(same->box.y_max, box.y_max)};
            }
        }
    }
    return out;
}

nn::PriorDistribution empirical_priors(const ImageDataset& ds)
{
    if (ds.size() == 0)
        throw std::invalid_argument("cannot estimate priors from an empty dataset");
    if (ds.multi_label())
        throw std::invalid_argument("multi-label datasets have per-label priors; use label_priors");
    return nn::PriorDistribution::from_counts(ds.class_counts());
}

Eigen::VectorXd label_priors(const ImageDataset& ds)
{
    if (ds.size() == 0)
        throw std::invalid_argument("cannot estimate priors from an empty dataset");
    if (!ds.multi_label())
        throw std::invalid_argument("label_priors needs a multi-label dataset");
    return ds.presence.rowwise().mean();
}

void write_images(std::ostream& out, const ImageDataset& ds)
{
    ds.validate();
    io::write_magic(out, "MLID");
    io::write<std::uint32_t>(out, 1);
    io::write<std::uint32_t>(out, static_cast<std::uint32_t>(ds.height));
    io::write<std::uint32_t>(out, static_cast<std::uint32_t>(ds.width));
    io::write<std::uint32_t>(out, static_cast<std::uint32_t>(ds.num_classes));
    io::write<std::uint32_t>(out, ds.multi_label() ? 1u : 0u);
    io::write<std::uint64_t>(out, static_cast<std::uint64_t>(ds.size()));
    std::vector<char> bytes(static_cast<std::size_t>(ds.images.size()));
    for (std::size_t i = 0; i < bytes.size(); ++i)
        bytes[i] = static_cast<char>(to_byte(ds.images.data()[i]));
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!ds.multi_label()) {
        for (int y : ds.labels)
            io::write<std::uint8_t>(out, static_cast<std::uint8_t>(y));
        return;
    }
    for (Index i = 0; i < ds.size(); ++i)
        for (Index c = 0; c < ds.num_classes; ++c)
            io::write<std::uint8_t>(out, ds.presence(c, i) > 0.5 ? 1 : 0);
    for (Index i = 0; i < ds.size(); ++i) {
        const auto& boxes = ds.gt_boxes.empty() ? std::vector<LabeledBox>{} : ds.gt_boxes[static_cast<std::size_t>(i)];
        io::write<std::uint8_t>(out, static_cast<std::uint8_t>(boxes.size()));
        for (const auto& b : boxes) {
            io::write<std::uint8_t>(out, static_cast<std::uint8_t>(b.label));
            for (int v : {b.box.x_min, b.box.y_min, b.box.x_max, b.box.y_max})
                io::write<std::int16_t>(out, static_cast<std::int16_t>(v));
        }
    }
}

ImageDataset read_images(std::istream& in)
{
    io::expect_magic(in, "MLID");
    if (const auto version = io::read<std::uint32_t>(in, "version"); version != 1)
        throw std::runtime_error("unsupported image dataset version " + std::to_string(version));
    ImageDataset ds;
    ds.height = io::read<std::uint32_t>(in, "height");
    ds.width = io::read<std::uint32_t>(in, "width");
    ds.num_classes = static_cast<int>(io::read<std::uint32_t>(in, "class count"));
    const bool multi = io::read<std::uint32_t>(in, "label kind") != 0;
    const auto n = static_cast<Index>(io::read<std::uint64_t>(in, "image count"));
    std::vector<unsigned char> bytes(static_cast<std::size_t>(ds.height * ds.width * n));
    in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (static_cast<std::size_t>(in.gcount()) != bytes.size())
        throw std::runtime_error("truncated input while reading pixels");
    ds.images.resize(ds.height * ds.width, n);
    for (std::size_t i = 0; i < bytes.size(); ++i)
        ds.images.data()[i] = bytes[i] / 255.0;
    if (!multi) {
        for (Index i = 0; i < n; ++i)
            ds.labels.push_back(io::read<std::uint8_t>(in, "labels"));
    } else {
        ds.presence.resize(ds.num_classes, n);
        for (Index i = 0; i < n; ++i)
            for (Index c = 0; c < ds.num_classes; ++c)
                ds.presence(c, i) = io::read<std::uint8_t>(in, "presence");
        ds.gt_boxes.resize(static_cast<std::size_t>(n));
        for (auto& boxes : ds.gt_boxes) {
            const auto count = io::read<std::uint8_t>(in, "box count");
            for (unsigned k = 0; k < count; ++k) {
                LabeledBox b;
                b.label = io::read<std::uint8_t>(in, "box label");
                b.box.x_min = io::read<std::int16_t>(in, "box");
                b.box.y_min = io::read<std::int16_t>(in, "box");
                b.box.x_max = io::read<std::int16_t>(in, "box");
                b.box.y_max = io::read<std::int16_t>(in, "box");
                boxes.push_back(b);
            }
        }
    }
    ds.validate();
    return ds;
}

void save_images(const std::filesystem::path& path, const ImageDataset& ds)
{
    auto out = open_out(path);
    write_images(out, ds);
}

ImageDataset load_images(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw std::runtime_error("cannot open " + path.string());
    return read_images(in);
}

void save_image_pgm(const std::filesystem::path& path, const ImageDataset& ds, Index i)
{
    auto out = open_out(path);
    out << "P5\n" << ds.width << ' ' << ds.height << "\n255\n";
    for (Index p = 0; p < ds.height * ds.width; ++p)
        out.put(static_cast<char>(to_byte(ds.images(p, i))));
}

} // namespace miloc::data
