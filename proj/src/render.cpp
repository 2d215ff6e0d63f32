#include "normalfield/render.hpp"

#include <cmath>
#include <string>

#include "normalfield/error.hpp"
#include "normalfield/parallel.hpp"
#include "normalfield/pipeline.hpp"

namespace nf {

void Camera::validate() const {
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) {
            const double d = dot(rotation.col(i), rotation.col(j));
            if (std::abs(d - (i == j ? 1.0 : 0.0)) > 1e-8)
                throw InvalidInput("camera rotation is not orthonormal");
        }
    if (!(fov_y > 0.0 && fov_y < kPi)) throw InvalidInput("camera fov_y must lie in (0, pi)");
    if (width < 1 || height < 1) throw InvalidInput("camera resolution must be positive");
}

double Camera::focal() const { return 0.5 * height / std::tan(0.5 * fov_y); }

Camera Camera::look_at(const Vec3& position, const Vec3& target, const Vec3& up, double fov_y, int width,
                       int height) {
    const Vec3 back = normalized(position - target);
    Vec3 right = cross(up, back);
    if (norm(right) < 1e-12) right = cross(Vec3{0, 1, 0}, back);
    right = normalized(right);
    const Vec3 cam_up = cross(back, right);
    Camera c;
    c.rotation.set_col(0, right);
    c.rotation.set_col(1, cam_up);
    c.rotation.set_col(2, back);
    c.position = position;
    c.fov_y = fov_y;
    c.width = width;
    c.height = height;
    return c;
}

Ray generate_ray(const Camera& camera, int px, int py, double jitter_x, double jitter_y) {
    const double f = camera.focal();
    const Vec3 local{(px + jitter_x - 0.5 * camera.width) / f, -(py + jitter_y - 0.5 * camera.height) / f, -1.0};
    return Ray{camera.position, normalized(camera.rotation * local)};
}

std::optional<std::pair<double, double>> intersect_box(const Ray& ray, const Vec3& lo, const Vec3& hi) {
    double t0 = 0.0, t1 = std::numeric_limits<double>::infinity();
    for (int a = 0; a < 3; ++a) {
        const double o = ray.origin[a], d = ray.direction[a];
        if (d == 0.0) {
            if (o < lo[a] || o > hi[a]) return std::nullopt;
            continue;
        }
        double ta = (lo[a] - o) / d, tb = (hi[a] - o) / d;
        if (ta > tb) std::swap(ta, tb);
        t0 = std::max(t0, ta);
        t1 = std::min(t1, tb);
    }
    if (!(t1 > t0)) return std::nullopt;
    return std::make_pair(t0, t1);
}

Samples sample_stratified(double near, double far, int n, std::mt19937_64* rng) {
    if (!(near >= 0.0) || !(far > near)) throw InvalidInput("sample_stratified: need 0 <= near < far");
    if (n < 2) throw InvalidInput("sample_stratified: need at least two samples");
    Samples s;
    s.t.resize(n);
    s.delta.resize(n);
    const double width = (far - near) / n;
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (int i = 0; i < n; ++i) {
        const double u = rng ? unit(*rng) : 0.5;
        s.t[i] = near + (i + u) * width;
    }
    for (int i = 0; i + 1 < n; ++i) s.delta[i] = s.t[i + 1] - s.t[i];
    s.delta[n - 1] = width;
    return s;
}

CompositeResult composite(std::span<const double> sigma, std::span<const double> delta,
                          std::span<const Vec3> colors, const Vec3& background) {
    if (sigma.size() != delta.size() || sigma.size() != colors.size())
        throw InvalidInput("composite: sample arrays differ in length");
    CompositeResult r;
    r.transmittance.resize(sigma.size());
    r.weights.resize(sigma.size());
    double t = 1.0;
    for (std::size_t i = 0; i < sigma.size(); ++i) {
        if (!std::isfinite(sigma[i])) throw NumericalError("composite: non-finite density at sample " + std::to_string(i));
        if (sigma[i] < 0.0) throw InvalidInput("composite: negative density at sample " + std::to_string(i));
        const double od = sigma[i] * delta[i];
        r.transmittance[i] = t;
        r.weights[i] = t * -std::expm1(-od);
        r.color += colors[i] * r.weights[i];
        t *= std::exp(-od);
    }
    r.final_transmittance = t;
    r.alpha = 1.0 - t;
    r.color += background * t;
    return r;
}

double srgb_gamma(double u) {
    if (u <= 0.0031308) return 12.92 * u;
    return 1.055 * std::pow(u, 1.0 / 2.4) - 0.055;
}

Vec3 tone_map(const Vec3& linear) {
    Vec3 out;
    for (int c = 0; c < 3; ++c) out[c] = srgb_gamma(std::clamp(linear[c], 0.0, 1.0));
    return out;
}

RaySampleTrack trace_track(const SceneFields& fields, const Ray& ray, const Samples& samples) {
    RaySampleTrack tr;
    tr.t = samples.t;
    tr.delta = samples.delta;
    const std::size_t n = samples.t.size();
    double trans = 1.0;
    for (std::size_t i = 0; i < n; ++i) {
        const Vec3 x = ray.origin + ray.direction * samples.t[i];
        const CellLookup lk = locate(fields.shape(), x);
        const double b = fields.density.interpolate(lk, 0);
        const Vec3 gb = fields.density.interpolate_gradient(lk, 0);
        const DualDensity dd = dual_activate(b);
        tr.position.push_back(x);
        tr.b.push_back(b);
        tr.grad_b.push_back(gb);
        tr.sigma_sharp.push_back(dd.sigma_sharp);
        tr.sigma_smooth.push_back(dd.sigma_smooth);
        tr.grad_sigma_smooth.push_back(gb * dd.d_smooth_db);
        tr.transmittance.push_back(trans);
        const double od = dd.sigma_sharp * samples.delta[i];
        tr.weights.push_back(trans * -std::expm1(-od));
        trans *= std::exp(-od);
    }
    tr.final_transmittance = trans;
    return tr;
}

RaySampleTrack trace_analytic(const AnalyticField& field, const Ray& ray, const Samples& samples) {
    RaySampleTrack tr;
    tr.t = samples.t;
    tr.delta = samples.delta;
    double trans = 1.0;
    for (std::size_t i = 0; i < samples.t.size(); ++i) {
        const DensityProbe p = field.query_ray(ray.origin, ray.direction, samples.t[i]);
        const Preactivation pre = preactivation_of(p);
        const DualDensity dd = dual_activate(pre.b);
        tr.position.push_back(ray.origin + ray.direction * samples.t[i]);
        tr.b.push_back(pre.b);
        tr.grad_b.push_back(pre.grad_b);
        tr.sigma_sharp.push_back(p.sigma);
        tr.sigma_smooth.push_back(dd.sigma_smooth);
        tr.grad_sigma_smooth.push_back(pre.grad_b * dd.d_smooth_db);
        tr.transmittance.push_back(trans);
        const double od = p.sigma * samples.delta[i];
        tr.weights.push_back(trans * -std::expm1(-od));
        trans *= std::exp(-od);
    }
    tr.final_transmittance = trans;
    return tr;
}

NormalTrack estimate_normals(const RaySampleTrack& track) {
    NormalTrack nt;
    nt.density.reserve(track.size());
    for (std::size_t i = 0; i < track.size(); ++i)
        nt.density.push_back(density_gradient_normal(track.grad_b[i] * track.sigma_sharp[i]));
    nt.transmittance = transmittance_gradient_normals(track.grad_sigma_smooth, track.delta);
    return nt;
}

std::uint64_t ray_seed(std::uint64_t seed, std::uint64_t pixel, std::uint64_t iteration) {
    return mix_seed(seed, pixel, iteration);
}

std::optional<Samples> samples_for_ray(const GridShape& shape, const Ray& ray, const RenderConfig& config,
                                       std::uint64_t pixel_index) {
    const auto hit = intersect_box(ray, shape.lo, shape.hi);
    if (!hit) return std::nullopt;
    if (config.deterministic) return sample_stratified(hit->first, hit->second, config.samples);
    std::mt19937_64 rng(ray_seed(config.seed, pixel_index, config.iteration));
    return sample_stratified(hit->first, hit->second, config.samples, &rng);
}

RenderOutput render_ray(const SceneFields& fields, const Ray& ray, const RenderConfig& config,
                        std::uint64_t pixel_index) {
    RenderOutput out;
    const auto samples = samples_for_ray(fields.shape(), ray, config, pixel_index);
    if (!samples) {
        out.color = tone_map(config.background);
        return out;
    }
    PlainOps ops;
    const FieldViews views = make_views(fields);
    const TraceRequest request{true, true, true};
    const TracedRay<PlainOps> tr = trace_ray(ops, views, ray, *samples, config.background, request);

    out.color = {tr.color[0], tr.color[1], tr.color[2]};
    out.alpha = 1.0 - tr.final_transmittance;
    double wsum = 0.0, wt = 0.0;
    for (std::size_t i = 0; i < tr.weights.size(); ++i) {
        wsum += tr.weights[i];
        wt += tr.weights[i] * samples->t[i];
    }
    out.depth = wt / std::max(wsum, 1e-8);

    auto to_maybe = [](const std::optional<std::array<double, 3>>& v) -> MaybeNormal {
        if (!v) return std::nullopt;
        return Vec3{(*v)[0], (*v)[1], (*v)[2]};
    };
    std::vector<MaybeNormal> nd, nt;
    std::vector<Vec3> np;
    for (std::size_t i = 0; i < tr.weights.size(); ++i) {
        nd.push_back(to_maybe(tr.n_density[i]));
        nt.push_back(to_maybe(tr.n_trans[i]));
        np.push_back({tr.n_pred[i][0], tr.n_pred[i][1], tr.n_pred[i][2]});
    }
    out.normal_density = composite_normal_map(tr.weights, nd);
    out.normal_trans = composite_normal_map(tr.weights, nt);
    out.normal_pred = composite_normal_map(tr.weights, np);
    return out;
}

RenderOutput render_pixel(const SceneFields& fields, const Camera& camera, int px, int py,
                          const RenderConfig& config) {
    if (px < 0 || py < 0 || px >= camera.width || py >= camera.height)
        throw InvalidInput("render_pixel: pixel outside the image");
    const Ray ray = generate_ray(camera, px, py);
    return render_ray(fields, ray, config, static_cast<std::uint64_t>(py) * camera.width + px);
}

RenderedImage render_image(const SceneFields& fields, const Camera& camera, const RenderConfig& config) {
    camera.validate();
    RenderedImage img;
    img.width = camera.width;
    img.height = camera.height;
    img.pixels.resize(static_cast<std::size_t>(camera.width) * camera.height);
    parallel_for(img.pixels.size(), [&](std::size_t i) {
        const int px = static_cast<int>(i % camera.width), py = static_cast<int>(i / camera.width);
        img.pixels[i] = render_pixel(fields, camera, px, py, config);
    });
    return img;
}

}  // namespace nf
