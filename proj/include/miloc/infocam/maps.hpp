#pragma once

#include "miloc/nn/network.hpp"

#include <Eigen/Core>

#include <filesystem>
#include <iosfwd>
#include <string>

namespace miloc::infocam {

using Eigen::Index;

enum class MapKind { cam, infocam, infocam_plus };

std::string to_string(MapKind kind);
MapKind parse_map_kind(const std::string& name);

struct IntensityMap {
    Eigen::MatrixXd grid; // H x W
    MapKind kind = MapKind::cam;
    int target_label = 0;
    int contrast_label = -1; // infoCAM+ only: the argmin class

    Index height() const { return grid.rows(); }
    Index width() const { return grid.cols(); }
};

// Square window with side `size`; even sizes extend one cell further to the
// bottom/right of the center than to the top/left.
struct RegionSpec {
    int size = 1;
};

// How infoCAM+ picks its contrast class.
enum class ContrastMode { per_image, per_region };

// W is M x K (row y = w^y). Every map carries the 1/(H*W) pooling factor,
// so the full-grid sum of cam_map(y) is the logit n_y.
IntensityMap cam_map(const nn::FeatureMaps& fm, const Eigen::Ref<const Eigen::MatrixXd>& weights, int y);

// cam_y - mean of cam_y' over y' != y.
IntensityMap infocam_point_map(const nn::FeatureMaps& fm, const Eigen::Ref<const Eigen::MatrixXd>& weights, int y);

// cam_y - cam_y' with y' != y the class with the smallest full-grid sum
// (lowest index on ties).
IntensityMap infocam_plus_point_map(const nn::FeatureMaps& fm, const Eigen::Ref<const Eigen::MatrixXd>& weights,
                                    int y);

// Zero-padded window sums; output has the input's dimensions.
IntensityMap region_sum(const IntensityMap& map, RegionSpec region);

// infoCAM+ with the contrast class chosen inside every window:
// out(a,b) = max over m of sum_R (cam_y - cam_m).
IntensityMap infocam_plus_region_map(const nn::FeatureMaps& fm, const Eigen::Ref<const Eigen::MatrixXd>& weights,
                                     int y, RegionSpec region);

struct MapOptions {
    MapKind kind = MapKind::infocam;
    RegionSpec region{};
    ContrastMode contrast = ContrastMode::per_image;
    bool region_summed = true; // infoCAM kinds: score windows rather than points
};

// The map the localizer thresholds: the CAM point map, or a (region-summed)
// infoCAM / infoCAM+ map.
IntensityMap localization_map(const nn::FeatureMaps& fm, const Eigen::Ref<const Eigen::MatrixXd>& weights, int y,
                              const MapOptions& options);

// 8-bit binary PGM (P5) after min-max scaling to 0..255; a constant map is
// written as zeros.
void write_pgm(std::ostream& out, const Eigen::MatrixXd& grid);
void save_pgm(const std::filesystem::path& path, const Eigen::MatrixXd& grid);

// "MLIM" | u32 version | u32 kind | i32 target | i32 contrast | u32 H | u32 W
// | H*W f64 row-major
void write_raw(std::ostream& out, const IntensityMap& map);
IntensityMap read_raw(std::istream& in);

} // namespace miloc::infocam
