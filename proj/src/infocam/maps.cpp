#include "miloc/infocam/maps.hpp"

#include "miloc/binary_io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

namespace miloc::infocam {

namespace {

using RowGrid = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

void check_inputs(const nn::FeatureMaps& fm, const Eigen::Ref<const Eigen::MatrixXd>& weights, int y)
{
    if (weights.cols() != fm.channels())
        throw std::invalid_argument("classifier weights have " + std::to_string(weights.cols())
                                    + " columns, feature maps have " + std::to_string(fm.channels())
                                    + " channels");
    if (fm.maps.cols() != fm.height * fm.width)
        throw std::invalid_argument("feature maps do not match their spatial size");
    if (y < 0 || y >= weights.rows())
        throw std::out_of_range("label " + std::to_string(y) + " outside [0, " + std::to_string(weights.rows())
                                + ")");
}

void check_contrastive(const Eigen::Ref<const Eigen::MatrixXd>& weights)
{
    if (weights.rows() < 2)
        throw std::invalid_argument("contrastive maps need at least two classes");
}

// Map of a class-weight combination v (length K).
Eigen::MatrixXd weighted_grid(const nn::FeatureMaps& fm, const Eigen::VectorXd& v)
{
    const Eigen::RowVectorXd flat = v.transpose() * fm.maps / static_cast<double>(fm.maps.cols());
    return Eigen::Map<const RowGrid>(flat.data(), fm.height, fm.width);
}

IntensityMap make(Eigen::MatrixXd grid, MapKind kind, int y, int contrast = -1)
{
    IntensityMap map;
    map.grid = std::move(grid);
    map.kind = kind;
    map.target_label = y;
    map.contrast_label = contrast;
    return map;
}

int argmin_class(const nn::FeatureMaps& fm, const Eigen::Ref<const Eigen::MatrixXd>& weights, int y)
{
    Eigen::VectorXd totals = weights * fm.maps.rowwise().sum();
    totals[y] = INFINITY;
    Index best = 0;
    totals.minCoeff(&best);
    return static_cast<int>(best);
}

Eigen::MatrixXd window_sum(const Eigen::MatrixXd& grid, int size)
{
    const Index h = grid.rows(), w = grid.cols();
    const Index lo = (size - 1) / 2, hi = size / 2;
    Eigen::MatrixXd out(h, w);
    for (Index r = 0; r < h; ++r)
        for (Index c = 0; c < w; ++c) {
            double total = 0.0;
            for (Index i = std::max<Index>(r - lo, 0); i <= std::min(r + hi, h - 1); ++i)
                for (Index j = std::max<Index>(c - lo, 0); j <= std::min(c + hi, w - 1); ++j)
                    total += grid(i, j);
            out(r, c) = total;
        }
    return out;
}

void check_region(RegionSpec region, Index h, Index w)
{
    if (region.size < 1 || region.size > std::min(h, w))
        throw std::invalid_argument("region size " + std::to_string(region.size) + " outside [1, "
                                    + std::to_string(std::min(h, w)) + "]");
}

} // namespace

std::string to_string(MapKind kind)
{
    switch (kind) {
    case MapKind::cam: return "cam";
    case MapKind::infocam: return "infocam";
    case MapKind::infocam_plus: return "infocam_plus";
    }
    return "?";
}

MapKind parse_map_kind(const std::string& name)
{
    if (name == "cam")
        return MapKind::cam;
    if (name == "infocam")
        return MapKind::infocam;
    if (name == "infocam_plus" || name == "infocam+")
        return MapKind::infocam_plus;
    throw std::invalid_argument("unknown map kind '" + name + "'");
}

IntensityMap cam_map(const nn::FeatureMaps& fm, const Eigen::Ref<const Eigen::MatrixXd>& weights, int y)
{
    check_inputs(fm, weights, y);
    return make(weighted_grid(fm, weights.row(y).transpose()), MapKind::cam, y);
}

IntensityMap infocam_point_map(const nn::FeatureMaps& fm, const Eigen::Ref<const Eigen::MatrixXd>& weights, int y)
{
    check_inputs(fm, weights, y);
    check_contrastive(weights);
    const double others = static_cast<double>(weights.rows() - 1);
    const Eigen::VectorXd rest = (weights.colwise().sum() - weights.row(y)).transpose() / others;
    return make(weighted_grid(fm, weights.row(y).transpose() - rest), MapKind::infocam, y);
}

IntensityMap infocam_plus_point_map(const nn::FeatureMaps& fm, const Eigen::Ref<const Eigen::MatrixXd>& weights,
                                    int y)
{
    check_inputs(fm, weights, y);
    check_contrastive(weights);
    const int contrast = argmin_class(fm, weights, y);
    return make(weighted_grid(fm, (weights.row(y) - weights.row(contrast)).transpose()), MapKind::infocam_plus, y,
                contrast);
}

IntensityMap region_sum(const IntensityMap& map, RegionSpec region)
{
    check_region(region, map.height(), map.width());
    IntensityMap out = map;
    if (region.size > 1)
        out.grid = window_sum(map.grid, region.size);
    return out;
}

IntensityMap infocam_plus_region_map(const nn::FeatureMaps& fm, const Eigen::Ref<const Eigen::MatrixXd>& weights,
                                     int y, RegionSpec region)
{
    check_inputs(fm, weights, y);
    check_contrastive(weights);
    check_region(region, fm.height, fm.width);
    const Eigen::MatrixXd target = window_sum(weighted_grid(fm, weights.row(y).transpose()), region.size);
    Eigen::MatrixXd best = Eigen::MatrixXd::Constant(fm.height, fm.width, -INFINITY);
    for (Index m = 0; m < weights.rows(); ++m) {
        if (m == y)
            continue;
        best = best.cwiseMax(target - window_sum(weighted_grid(fm, weights.row(m).transpose()), region.size));
    }
    return make(std::move(best), MapKind::infocam_plus, y);
}

IntensityMap localization_map(const nn::FeatureMaps& fm, const Eigen::Ref<const Eigen::MatrixXd>& weights, int y,
                              const MapOptions& options)
{
    const RegionSpec region = options.region_summed ? options.region : RegionSpec{1};
    switch (options.kind) {
    case MapKind::cam: return cam_map(fm, weights, y);
    case MapKind::infocam: return region_sum(infocam_point_map(fm, weights, y), region);
    case MapKind::infocam_plus:
        if (options.contrast == ContrastMode::per_region)
            return infocam_plus_region_map(fm, weights, y, region);
        return region_sum(infocam_plus_point_map(fm, weights, y), region);
    }
    throw std::invalid_argument("unknown map kind");
}

void write_pgm(std::ostream& out, const Eigen::MatrixXd& grid)
{
    out << "P5\n" << grid.cols() << ' ' << grid.rows() << "\n255\n";
    const double lo = grid.minCoeff(), hi = grid.maxCoeff();
    const double scale = hi > lo ? 255.0 / (hi - lo) : 0.0;
    for (Index r = 0; r < grid.rows(); ++r)
        for (Index c = 0; c < grid.cols(); ++c)
            out.put(static_cast<char>(static_cast<unsigned char>(std::lround((grid(r, c) - lo) * scale))));
}

void save_pgm(const std::filesystem::path& path, const Eigen::MatrixXd& grid)
{
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw std::runtime_error("cannot write " + path.string());
    write_pgm(out, grid);
}

void write_raw(std::ostream& out, const IntensityMap& map)
{
    io::write_magic(out, "MLIM");
    io::write<std::uint32_t>(out, 1);
    io::write<std::uint32_t>(out, static_cast<std::uint32_t>(map.kind));
    io::write<std::int32_t>(out, map.target_label);
    io::write<std::int32_t>(out, map.contrast_label);
    io::write<std::uint32_t>(out, static_cast<std::uint32_t>(map.height()));
    io::write<std::uint32_t>(out, static_cast<std::uint32_t>(map.width()));
    for (Index r = 0; r < map.height(); ++r)
        for (Index c = 0; c < map.width(); ++c)
            io::write<double>(out, map.grid(r, c));
}

IntensityMap read_raw(std::istream& in)
{
    io::expect_magic(in, "MLIM");
    if (const auto version = io::read<std::uint32_t>(in, "version"); version != 1)
        throw std::runtime_error("unsupported intensity map version " + std::to_string(version));
    const auto kind = io::read<std::uint32_t>(in, "kind");
    if (kind > static_cast<std::uint32_t>(MapKind::infocam_plus))
        throw std::runtime_error("unknown map kind " + std::to_string(kind));
    IntensityMap map;
    map.kind = static_cast<MapKind>(kind);
    map.target_label = io::read<std::int32_t>(in, "target label");
    map.contrast_label = io::read<std::int32_t>(in, "contrast label");
    const auto h = io::read<std::uint32_t>(in, "height");
    const auto w = io::read<std::uint32_t>(in, "width");
    map.grid.resize(h, w);
    for (Index r = 0; r < h; ++r)
        for (Index c = 0; c < w; ++c)
            map.grid(r, c) = io::read<double>(in, "map values");
    return map;
}

} // namespace miloc::infocam
