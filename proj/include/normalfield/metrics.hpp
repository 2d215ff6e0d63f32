#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "normalfield/image_io.hpp"
#include "normalfield/render.hpp"

namespace nf {

/// Returned for identical images.
inline constexpr double kPsnrCap = 99.0;

/// -10 log10(MSE) over all pixels and channels. Throws InvalidInput on a size mismatch.
double psnr(const Image& pred, const Image& gt);

/// Mean angle in degrees between predicted and reference normals over pixels
/// with reference alpha > 0.5. A zero predicted vector marks a missing
/// normal and counts as 90 degrees. Throws InvalidInput on a size mismatch or
/// when no pixel is foreground.
double mae_degrees(const Image& pred, const Image& gt, const Image& gt_alpha);

enum class RenderMode { color, normal_trans, normal_density, normal_pred, depth };

RenderMode parse_render_mode(const std::string& name);

/// One channel of a rendered image as a float image: sRGB color, unit
/// normals (zero where missing), or depth.
Image to_image(const RenderedImage& img, RenderMode mode);

/// Maps unit normals from [-1, 1] to [0, 1] for viewing; missing normals stay black.
Image normal_preview(const Image& normals);
/// Depth scaled by its maximum into a gray RGB image.
Image depth_preview(const Image& depth);

struct MetricRow {
    std::string view;
    double psnr = 0.0;
    double mae_deg = 0.0;
    long foreground_pixels = 0;
    std::vector<double> extra;  // further MAE columns
};

struct MetricReport {
    std::vector<std::string> extra_columns;
    std::vector<MetricRow> rows;

    double mean_psnr() const;
    double mean_mae() const;
    std::vector<double> mean_extra() const;
    /// Header, one line per view, then a "mean" line.
    void write_csv(const std::filesystem::path& path) const;
};

}  // namespace nf
