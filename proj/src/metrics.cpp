#include "normalfield/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "normalfield/error.hpp"

namespace nf {

double psnr(const Image& pred, const Image& gt) {
    if (pred.width != gt.width || pred.height != gt.height || pred.channels != gt.channels)
        throw InvalidInput("psnr: image dimensions differ");
    if (pred.data.empty()) throw InvalidInput("psnr: empty image");
    double sum = 0.0;
    for (std::size_t i = 0; i < pred.data.size(); ++i) {
        const double d = static_cast<double>(pred.data[i]) - gt.data[i];
        sum += d * d;
    }
    const double mse = sum / pred.data.size();
    if (mse == 0.0) return kPsnrCap;
    return std::min(kPsnrCap, -10.0 * std::log10(mse));
}

double mae_degrees(const Image& pred, const Image& gt, const Image& gt_alpha) {
    if (pred.width != gt.width || pred.height != gt.height || pred.channels != 3 || gt.channels != 3 ||
        gt_alpha.width != gt.width || gt_alpha.height != gt.height || gt_alpha.channels != 1)
        throw InvalidInput("mae_degrees: map dimensions differ");
    double sum = 0.0;
    long count = 0;
    for (int y = 0; y < gt.height; ++y)
        for (int x = 0; x < gt.width; ++x) {
            if (!(gt_alpha.at(x, y, 0) > 0.5f)) continue;
            ++count;
            const Vec3 p{pred.at(x, y, 0), pred.at(x, y, 1), pred.at(x, y, 2)};
            const Vec3 g{gt.at(x, y, 0), gt.at(x, y, 1), gt.at(x, y, 2)};
            const double np = norm(p), ng = norm(g);
            if (np == 0.0 || ng == 0.0) {
                sum += 90.0;
                continue;
            }
            const double c = std::clamp(dot(p, g) / (np * ng), -1.0, 1.0);
            sum += std::acos(c) * 180.0 / kPi;
        }
    if (count == 0) throw InvalidInput("mae_degrees: no foreground pixels");
    return sum / count;
}

RenderMode parse_render_mode(const std::string& name) {
    if (name == "color") return RenderMode::color;
    if (name == "normal-trans") return RenderMode::normal_trans;
    if (name == "normal-density") return RenderMode::normal_density;
    if (name == "normal-pred") return RenderMode::normal_pred;
    if (name == "depth") return RenderMode::depth;
    throw InvalidInput("unknown render mode '" + name + "'");
}

Image to_image(const RenderedImage& img, RenderMode mode) {
    Image out(img.width, img.height, mode == RenderMode::depth ? 1 : 3);
    for (std::size_t i = 0; i < img.pixels.size(); ++i) {
        const RenderOutput& px = img.pixels[i];
        const MaybeNormal* n = nullptr;
        switch (mode) {
            case RenderMode::color:
                for (int c = 0; c < 3; ++c) out.data[i * 3 + c] = static_cast<float>(px.color[c]);
                continue;
            case RenderMode::depth: out.data[i] = static_cast<float>(px.depth); continue;
            case RenderMode::normal_trans: n = &px.normal_trans; break;
            case RenderMode::normal_density: n = &px.normal_density; break;
            case RenderMode::normal_pred: n = &px.normal_pred; break;
        }
        if (*n)
            for (int c = 0; c < 3; ++c) out.data[i * 3 + c] = static_cast<float>((**n)[c]);
    }
    return out;
}

Image normal_preview(const Image& normals) {
    Image out(normals.width, normals.height, 3);
    for (std::size_t p = 0; p < out.data.size() / 3; ++p) {
        const float* n = &normals.data[p * 3];
        if (n[0] == 0.0f && n[1] == 0.0f && n[2] == 0.0f) continue;
        for (int c = 0; c < 3; ++c) out.data[p * 3 + c] = 0.5f * (n[c] + 1.0f);
    }
    return out;
}

Image depth_preview(const Image& depth) {
    Image out(depth.width, depth.height, 3);
    float hi = 0.0f;
    for (float d : depth.data) hi = std::max(hi, d);
    if (hi <= 0.0f) return out;
    for (std::size_t p = 0; p < depth.data.size(); ++p)
        for (int c = 0; c < 3; ++c) out.data[p * 3 + c] = depth.data[p] / hi;
    return out;
}

double MetricReport::mean_psnr() const {
    double s = 0.0;
    for (const auto& r : rows) s += r.psnr;
    return rows.empty() ? 0.0 : s / rows.size();
}

double MetricReport::mean_mae() const {
    double s = 0.0;
    for (const auto& r : rows) s += r.mae_deg;
    return rows.empty() ? 0.0 : s / rows.size();
}

std::vector<double> MetricReport::mean_extra() const {
    std::vector<double> m(extra_columns.size(), 0.0);
    for (const auto& r : rows)
        for (std::size_t i = 0; i < m.size() && i < r.extra.size(); ++i) m[i] += r.extra[i];
    for (double& v : m) v = rows.empty() ? 0.0 : v / rows.size();
    return m;
}

void MetricReport::write_csv(const std::filesystem::path& path) const {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write " + path.string());
    out << "view,psnr,mae_deg,foreground_pixels";
    for (const auto& c : extra_columns) out << "," << c;
    out << "\n";
    char buf[64];
    auto num = [&](double v) {
        std::snprintf(buf, sizeof buf, "%.6f", v);
        return std::string(buf);
    };
    long fg = 0;
    for (const auto& r : rows) {
        out << r.view << "," << num(r.psnr) << "," << num(r.mae_deg) << "," << r.foreground_pixels;
        for (double e : r.extra) out << "," << num(e);
        out << "\n";
        fg += r.foreground_pixels;
    }
    out << "mean," << num(mean_psnr()) << "," << num(mean_mae()) << "," << fg;
    for (double e : mean_extra()) out << "," << num(e);
    out << "\n";
}

}  // namespace nf
