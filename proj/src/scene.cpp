#include "normalfield/scene.hpp"

#include <boost/math/quadrature/gauss.hpp>
#include <nlohmann/json.hpp>

#include <cmath>
#include <limits>
#include <cstdio>
#include <fstream>
#include <random>

#include "normalfield/error.hpp"
#include "normalfield/parallel.hpp"

namespace nf {

using nlohmann::json;

SceneKind parse_scene_kind(const std::string& name) {
    if (name == "gaussian_slab") return SceneKind::gaussian_slab;
    if (name == "matte_sphere") return SceneKind::matte_sphere;
    if (name == "shiny_sphere") return SceneKind::shiny_sphere;
    if (name == "two_spheres") return SceneKind::two_spheres;
    throw InvalidInput("unknown scene kind '" + name + "'");
}

std::string to_string(SceneKind kind) {
    switch (kind) {
        case SceneKind::gaussian_slab: return "gaussian_slab";
        case SceneKind::matte_sphere: return "matte_sphere";
        case SceneKind::shiny_sphere: return "shiny_sphere";
        case SceneKind::two_spheres: return "two_spheres";
    }
    return "unknown";
}

SceneParams SceneParams::defaults(SceneKind kind) {
    SceneParams p;
    p.kind = kind;
    switch (kind) {
        case SceneKind::shiny_sphere:
            p.spheres = {{{0, 0, 0}, 1.0}};
            p.diffuse = {0.06, 0.05, 0.04};
            p.tint = {0.75, 0.75, 0.75};
            break;
        case SceneKind::matte_sphere:
            p.spheres = {{{0, 0, 0}, 1.0}};
            p.diffuse = {0.7, 0.3, 0.2};
            p.tint = {0, 0, 0};
            break;
        case SceneKind::two_spheres:
            p.spheres = {{{-0.5, 0, 0}, 0.45}, {{0.5, 0, 0}, 0.45}};
            p.diffuse = {0.2, 0.45, 0.6};
            p.tint = {0.3, 0.3, 0.3};
            p.bounding_radius = 0.95;
            break;
        case SceneKind::gaussian_slab:
            p.bounding_radius = 1.0;
            break;
    }
    return p;
}

// ---------------------------------------------------------------------------
// Environment
// ---------------------------------------------------------------------------

namespace {

const Vec3 kEnvBase{-2.0, -1.9, -1.8};
const Vec3 kEnvSky{0.8, 0.9, 1.2};
const Vec3 kEnvLobe{2.0, 1.8, 1.5};

Vec3 lobe_axis() { return normalized(Vec3{0.4, 0.3, 0.866}); }

// Cubic in the direction, so it lies in the span of degree-3 SH.
Vec3 env_logit_gt(const Vec3& d) {
    const double s = 0.5 * (1.0 + dot(lobe_axis(), d));
    return kEnvBase + kEnvSky * d.z + kEnvLobe * (s * s * s);
}

Vec3 vmul(const Vec3& a, const Vec3& b) { return mul(a, b); }

}  // namespace

EnvMapSH ground_truth_environment() {
    EnvMapSH env(3);
    using Rule = boost::math::quadrature::gauss<double, 8>;
    const auto& xs = Rule::abscissa();
    const auto& ws = Rule::weights();
    std::vector<std::pair<double, double>> nodes;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        nodes.emplace_back(xs[i], ws[i]);
        if (xs[i] != 0.0) nodes.emplace_back(-xs[i], ws[i]);
    }
    const int n_phi = 16;
    for (const auto& [z, wz] : nodes) {
        const double r = std::sqrt(1.0 - z * z);
        for (int k = 0; k < n_phi; ++k) {
            const double phi = 2.0 * kPi * k / n_phi;
            const Vec3 d{r * std::cos(phi), r * std::sin(phi), z};
            const Vec3 f = env_logit_gt(d);
            const ShBasis basis = sh_basis(3, d);
            const double w = wz * 2.0 * kPi / n_phi;
            for (int c = 0; c < env.coeff_count(); ++c)
                for (int ch = 0; ch < 3; ++ch) env.coeffs[c * 3 + ch] += w * basis.value[c] * f[ch];
        }
    }
    return env;
}

// ---------------------------------------------------------------------------
// Cameras
// ---------------------------------------------------------------------------

double default_fov_y() { return 2.0 * std::asin(1.0 / 3.0) / 0.6; }

namespace {

// Fibonacci lattice on the upper hemisphere (z > 0), rotated by `phase` about z.
std::vector<Vec3> hemisphere_lattice(int n, double phase) {
    const double golden = kPi * (3.0 - std::sqrt(5.0));
    std::vector<Vec3> dirs;
    for (int i = 0; i < n; ++i) {
        // Keep away from the horizon and the pole.
        const double z = 0.1 + 0.8 * (i + 0.5) / n;
        const double r = std::sqrt(1.0 - z * z);
        const double phi = phase + golden * i;
        dirs.push_back({r * std::cos(phi), r * std::sin(phi), z});
    }
    return dirs;
}

std::vector<Camera> lattice_cameras(int n, double phase, double distance, double fov, int res) {
    std::vector<Camera> cams;
    for (const Vec3& d : hemisphere_lattice(n, phase))
        cams.push_back(Camera::look_at(d * distance, {0, 0, 0}, {0, 0, 1}, fov, res, res));
    return cams;
}

}  // namespace

SyntheticScene make_scene(SceneKind kind, const SceneParams& params, int n_views, int n_test_views,
                          int resolution, std::uint64_t seed) {
    if (n_views < 2) throw InvalidInput("make_scene: need at least two views");
    if (n_test_views < 0) throw InvalidInput("make_scene: negative test view count");
    if (resolution < 1) throw InvalidInput("make_scene: resolution must be positive");
    SyntheticScene s;
    s.params = params;
    s.params.kind = kind;
    if (s.params.fov_y <= 0.0) s.params.fov_y = default_fov_y();
    s.env_gt = ground_truth_environment();

    std::mt19937_64 rng(seed);
    const double phase = std::uniform_real_distribution<double>(0.0, 2.0 * kPi)(rng);
    const double distance = s.params.bounding_radius / std::sin(0.3 * s.params.fov_y);
    s.cameras = lattice_cameras(n_views, phase, distance, s.params.fov_y, resolution);
    // Held-out views sit on a second lattice offset by half a golden turn.
    if (n_test_views > 0)
        s.test_cameras = lattice_cameras(n_test_views, phase + 0.5 * kPi * (3.0 - std::sqrt(5.0)) + 0.7, distance,
                                         s.params.fov_y, resolution);
    return s;
}

SyntheticScene make_scene(SceneKind kind, int n_views, int n_test_views, int resolution, std::uint64_t seed) {
    return make_scene(kind, SceneParams::defaults(kind), n_views, n_test_views, resolution, seed);
}

// ---------------------------------------------------------------------------
// Ground truth
// ---------------------------------------------------------------------------

namespace {

struct Hit {
    double t = 0.0;
    Vec3 normal;
};

std::optional<Hit> intersect_spheres(const std::vector<Sphere>& spheres, const Ray& ray) {
    std::optional<Hit> best;
    for (const Sphere& s : spheres) {
        const Vec3 oc = ray.origin - s.center;
        const double b = dot(oc, ray.direction);
        const double c = dot(oc, oc) - s.radius * s.radius;
        const double disc = b * b - c;
        if (disc < 0.0) continue;
        const double sq = std::sqrt(disc);
        double t = -b - sq;
        if (t <= 0.0) t = -b + sq;
        if (t <= 0.0) continue;
        if (!best || t < best->t) best = Hit{t, (oc + ray.direction * t) / s.radius};
    }
    return best;
}

struct PixelGT {
    Vec3 color;  // linear
    Vec3 normal;
    double alpha = 0.0;
    double depth = 0.0;
};

PixelGT sphere_pixel(const SyntheticScene& scene, const Ray& ray) {
    PixelGT px;
    const auto hit = intersect_spheres(scene.params.spheres, ray);
    if (!hit) {
        px.color = scene.params.background;
        return px;
    }
    const Vec3 n = normalized(hit->normal);
    const Vec3 env = env_radiance(scene.env_gt, reflect(-ray.direction, n));
    px.color = scene.params.diffuse + vmul(scene.params.tint, env);
    px.normal = n;
    px.alpha = 1.0;
    px.depth = hit->t;
    return px;
}

constexpr int kSlabSamples = 4096;

PixelGT slab_pixel(const SyntheticScene& scene, const Ray& ray) {
    PixelGT px;
    const SceneParams& p = scene.params;
    const auto box = intersect_box(ray, p.box_lo, p.box_hi);
    if (!box) {
        px.color = p.background;
        return px;
    }
    const SlabResult r = slab_quadrature(p, ray, kSlabSamples);
    px.color = r.color;
    px.alpha = r.alpha;
    const Vec3 n = normalized(p.slab_normal);
    const double facing = -dot(ray.direction, n);
    if (r.alpha > 0.5 && facing != 0.0) {
        px.normal = facing > 0.0 ? n : -n;
        px.depth = -dot(ray.origin, n) / dot(ray.direction, n);
    }
    return px;
}

}  // namespace

SlabResult slab_quadrature(const SceneParams& params, const Ray& ray, int samples) {
    SlabResult r;
    const auto box = intersect_box(ray, params.box_lo, params.box_hi);
    if (!box) {
        r.color = params.background;
        return r;
    }
    const AnalyticField field =
        AnalyticField::gaussian_slab({0, 0, 0}, normalized(params.slab_normal), params.slab_amplitude, params.slab_width);
    const Samples s = sample_stratified(box->first, box->second, samples);
    std::vector<double> sigma(s.t.size());
    std::vector<Vec3> colors(s.t.size(), params.slab_color);
    for (std::size_t i = 0; i < s.t.size(); ++i) sigma[i] = field.query_ray(ray.origin, ray.direction, s.t[i]).sigma;
    const CompositeResult c = composite(sigma, s.delta, colors, params.background);
    r.color = c.color;
    r.alpha = c.alpha;
    return r;
}

GroundTruthView render_ground_truth(const SyntheticScene& scene, const Camera& camera) {
    camera.validate();
    const int w = camera.width, h = camera.height;
    GroundTruthView v{Image(w, h, 3), Image(w, h, 3), Image(w, h, 1), Image(w, h, 1)};
    const bool slab = scene.params.kind == SceneKind::gaussian_slab;
    parallel_for(static_cast<std::size_t>(w) * h, [&](std::size_t i) {
        const int x = static_cast<int>(i % w), y = static_cast<int>(i / w);
        const Ray ray = generate_ray(camera, x, y);
        const PixelGT px = slab ? slab_pixel(scene, ray) : sphere_pixel(scene, ray);
        const Vec3 c = tone_map(px.color);
        for (int ch = 0; ch < 3; ++ch) {
            v.rgb.at(x, y, ch) = static_cast<float>(c[ch]);
            v.normal.at(x, y, ch) = static_cast<float>(px.normal[ch]);
        }
        v.alpha.at(x, y, 0) = static_cast<float>(px.alpha);
        v.depth.at(x, y, 0) = static_cast<float>(px.depth);
    });
    return v;
}

// ---------------------------------------------------------------------------
// Oracle parameters
// ---------------------------------------------------------------------------

namespace {

double logit(double p) { return std::log(p / (1.0 - p)); }

double raw_for(double v) {
    // Exactly zero or one cannot be reached by a sigmoid; saturate instead.
    return logit(std::clamp(v, 1e-9, 1.0 - 1e-9));
}

}  // namespace

SceneFields oracle_fields(const SyntheticScene& scene, const GridShape& shape, double sharpness_per_cell) {
    if (scene.params.spheres.empty()) throw InvalidInput("oracle_fields: scene has no spheres");
    shape.validate();
    SceneFields f = SceneFields::zeros(shape, 3);
    const Vec3 cell = shape.cell_size();
    const double k = sharpness_per_cell / std::min({cell.x, cell.y, cell.z});
    for (int kz = 0; kz < shape.res[2]; ++kz)
        for (int j = 0; j < shape.res[1]; ++j)
            for (int i = 0; i < shape.res[0]; ++i) {
                const Vec3 x = shape.vertex_position(i, j, kz);
                double best = -std::numeric_limits<double>::infinity();
                Vec3 n{1, 0, 0};
                for (const Sphere& s : scene.params.spheres) {
                    const Vec3 rel = x - s.center;
                    const double r = norm(rel);
                    const double inside = s.radius - r;
                    if (inside > best) {
                        best = inside;
                        n = r > 0.0 ? rel / r : Vec3{1, 0, 0};
                    }
                }
                f.density.at(i, j, kz, 0) = std::clamp(k * best + std::log(k), -10.0, 10.0);
                for (int c = 0; c < 3; ++c) {
                    f.normal.at(i, j, kz, c) = n[c];
                    f.diffuse.at(i, j, kz, c) = raw_for(scene.params.diffuse[c]);
                    f.tint.at(i, j, kz, c) = raw_for(scene.params.tint[c]);
                }
            }
    f.env = scene.env_gt;
    return f;
}

// ---------------------------------------------------------------------------
// Dataset I/O
// ---------------------------------------------------------------------------

namespace {

json vec_json(const Vec3& v) { return json::array({v.x, v.y, v.z}); }

Vec3 vec_from(const json& j) {
    if (!j.is_array() || j.size() != 3) throw DataError("expected a 3-vector in transforms.json");
    return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

std::string numbered(const char* dir, int i, const char* ext) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%s/%04d.%s", dir, i, ext);
    return buf;
}

json params_json(const SceneParams& p) {
    json spheres = json::array();
    for (const Sphere& s : p.spheres) spheres.push_back({{"center", vec_json(s.center)}, {"radius", s.radius}});
    return {{"kind", to_string(p.kind)},
            {"spheres", spheres},
            {"diffuse", vec_json(p.diffuse)},
            {"tint", vec_json(p.tint)},
            {"background", vec_json(p.background)},
            {"slab_normal", vec_json(p.slab_normal)},
            {"slab_amplitude", p.slab_amplitude},
            {"slab_width", p.slab_width},
            {"slab_color", vec_json(p.slab_color)},
            {"bbox", {vec_json(p.box_lo), vec_json(p.box_hi)}},
            {"bounding_radius", p.bounding_radius}};
}

SceneParams params_from(const json& j, double fov) {
    SceneParams p = SceneParams::defaults(parse_scene_kind(j.at("kind").get<std::string>()));
    p.spheres.clear();
    for (const json& s : j.at("spheres")) p.spheres.push_back({vec_from(s.at("center")), s.at("radius").get<double>()});
    p.diffuse = vec_from(j.at("diffuse"));
    p.tint = vec_from(j.at("tint"));
    p.background = vec_from(j.at("background"));
    p.slab_normal = vec_from(j.at("slab_normal"));
    p.slab_amplitude = j.at("slab_amplitude").get<double>();
    p.slab_width = j.at("slab_width").get<double>();
    p.slab_color = vec_from(j.at("slab_color"));
    p.box_lo = vec_from(j.at("bbox").at(0));
    p.box_hi = vec_from(j.at("bbox").at(1));
    p.bounding_radius = j.at("bounding_radius").get<double>();
    p.fov_y = fov;
    return p;
}

}  // namespace

std::vector<const Frame*> Dataset::split(bool test) const {
    std::vector<const Frame*> out;
    for (const Frame& f : frames)
        if (f.test == test) out.push_back(&f);
    return out;
}

void write_dataset(const SyntheticScene& scene, const std::filesystem::path& dir) {
    namespace fs = std::filesystem;
    std::error_code ec;
    for (const char* sub : {"rgb", "normal", "alpha"}) {
        fs::create_directories(dir / sub, ec);
        if (ec) throw DataError("cannot create " + (dir / sub).string() + ": " + ec.message());
    }
    const int w = scene.cameras.front().width, h = scene.cameras.front().height;
    json frames = json::array();
    int index = 0;
    auto emit = [&](const Camera& cam, bool test) {
        const GroundTruthView gt = render_ground_truth(scene, cam);
        const std::string rgb = numbered("rgb", index, "png");
        const std::string normal = numbered("normal", index, "pfm");
        const std::string alpha = numbered("alpha", index, "pfm");
        write_png(dir / rgb, quantize(gt.rgb));
        write_pfm(dir / normal, gt.normal);
        write_pfm(dir / alpha, gt.alpha);
        json m = json::array();
        for (int r = 0; r < 3; ++r)
            m.push_back({cam.rotation(r, 0), cam.rotation(r, 1), cam.rotation(r, 2), cam.position[r]});
        frames.push_back({{"file_path", rgb},
                          {"normal_path", normal},
                          {"alpha_path", alpha},
                          {"split", test ? "test" : "train"},
                          {"transform_matrix", m}});
        ++index;
    };
    for (const Camera& c : scene.cameras) emit(c, false);
    for (const Camera& c : scene.test_cameras) emit(c, true);

    const json doc = {{"scene", params_json(scene.params)},
                      {"camera_angle_y", scene.params.fov_y},
                      {"width", w},
                      {"height", h},
                      {"frames", frames}};
    std::ofstream out(dir / "transforms.json");
    if (!out) throw DataError("cannot write " + (dir / "transforms.json").string());
    out << doc.dump(2) << "\n";
}

Dataset read_dataset(const std::filesystem::path& dir) {
    const auto path = dir / "transforms.json";
    std::ifstream in(path);
    if (!in) throw DataError("cannot open " + path.string());
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::exception& e) {
        throw DataError(path.string() + ": " + e.what());
    }
    Dataset ds;
    try {
        const double fov = doc.at("camera_angle_y").get<double>();
        const int w = doc.at("width").get<int>(), h = doc.at("height").get<int>();
        ds.params = params_from(doc.at("scene"), fov);
        for (const json& fj : doc.at("frames")) {
            Frame f;
            const json& m = fj.at("transform_matrix");
            for (int r = 0; r < 3; ++r) {
                for (int c = 0; c < 3; ++c) f.camera.rotation(r, c) = m.at(r).at(c).get<double>();
                f.camera.position[r] = m.at(r).at(3).get<double>();
            }
            f.camera.fov_y = fov;
            f.camera.width = w;
            f.camera.height = h;
            f.test = fj.at("split").get<std::string>() == "test";
            f.rgb_path = fj.at("file_path").get<std::string>();
            f.normal_path = fj.at("normal_path").get<std::string>();
            f.alpha_path = fj.at("alpha_path").get<std::string>();
            ds.frames.push_back(std::move(f));
        }
    } catch (const json::exception& e) {
        throw DataError(path.string() + ": " + e.what());
    }
    for (Frame& f : ds.frames) {
        try {
            f.camera.validate();
        } catch (const Error& e) {
            throw DataError(path.string() + ": " + e.what());
        }
        f.rgb = read_png(dir / f.rgb_path);
        f.normal = read_pfm(dir / f.normal_path);
        f.alpha = read_pfm(dir / f.alpha_path);
        const auto check = [&](int iw, int ih, int ch, int want, const std::string& p) {
            if (iw != f.camera.width || ih != f.camera.height || ch != want)
                throw DataError((dir / p).string() + " does not match the declared image size");
        };
        check(f.rgb.width, f.rgb.height, f.rgb.channels, 3, f.rgb_path);
        check(f.normal.width, f.normal.height, f.normal.channels, 3, f.normal_path);
        check(f.alpha.width, f.alpha.height, f.alpha.channels, 1, f.alpha_path);
    }
    return ds;
}

MetricReport evaluate_split(const SceneFields& fields, const Dataset& dataset, bool test, int samples) {
    if (samples < 2) throw InvalidInput("evaluate_split: samples must be at least 2");
    const auto frames = dataset.split(test);
    if (frames.empty()) throw DataError(std::string("dataset has no ") + (test ? "test" : "train") + " frames");
    RenderConfig rc;
    rc.samples = samples;
    rc.deterministic = true;
    rc.background = dataset.params.background;

    MetricReport report;
    report.extra_columns = {"mae_density", "mae_pred"};
    for (const Frame* f : frames) {
        const RenderedImage img = render_image(fields, f->camera, rc);
        MetricRow row;
        row.view = std::filesystem::path(f->rgb_path).stem().string();
        row.psnr = psnr(to_image(img, RenderMode::color), dequantize(f->rgb));
        row.mae_deg = mae_degrees(to_image(img, RenderMode::normal_trans), f->normal, f->alpha);
        row.extra = {mae_degrees(to_image(img, RenderMode::normal_density), f->normal, f->alpha),
                     mae_degrees(to_image(img, RenderMode::normal_pred), f->normal, f->alpha)};
        for (float v : f->alpha.data) row.foreground_pixels += v > 0.5f;
        report.rows.push_back(row);
    }
    return report;
}

}  // namespace nf
