#include "normalfield/gradcheck.hpp"

#include <cstdio>
#include <functional>
#include <random>

#include "normalfield/appearance.hpp"
#include "normalfield/autodiff.hpp"
#include "normalfield/model.hpp"
#include "normalfield/pipeline.hpp"
#include "normalfield/train.hpp"

namespace nf {

namespace {

using Builder = std::function<Var(Tape&, std::span<const Var>)>;

FdOptions options_for(std::uint64_t seed) {
    FdOptions o;
    o.seed = seed;
    o.min_abs_grad = 1e-7;
    return o;
}

// Gradient of a tape expression with respect to its constant inputs.
GradcheckRow check_inputs(const std::string& name, std::vector<double> x, const Builder& build, double tol,
                          std::uint64_t seed) {
    Tape tape;
    std::vector<Var> in;
    for (double v : x) in.push_back(tape.constant(v));
    const Var out = build(tape, in);
    std::vector<ParamContribution> none;
    tape.backward(out, 1.0, none);
    std::vector<double> analytic;
    for (Var v : in) analytic.push_back(tape.adjoint(v));

    Tape scratch;
    auto f = [&] {
        scratch.clear();
        std::vector<Var> vars;
        for (double v : x) vars.push_back(scratch.constant(v));
        return scratch.value(build(scratch, vars));
    };
    const FdResult r = fd_check(f, x, analytic, options_for(seed));
    return {name, r.max_rel_err, r.checked, tol};
}

// Gradient of a tape expression with respect to a parameter vector.
using ParamBuilder = std::function<Var(Tape&, const ParamView&)>;

GradcheckRow check_params(const std::string& name, std::vector<double> params, int channels,
                          const ParamBuilder& build, double tol, std::uint64_t seed) {
    Tape tape;
    ParamView view{params, 0, channels};
    std::vector<double> analytic(params.size(), 0.0);
    tape.backward(build(tape, view), analytic);
    Tape scratch;
    auto f = [&] {
        scratch.clear();
        return scratch.value(build(scratch, ParamView{params, 0, channels}));
    };
    const FdResult r = fd_check(f, params, analytic, options_for(seed));
    return {name, r.max_rel_err, r.checked, tol};
}

Var weighted3(Tape& t, const Var3& v, const Vec3& w) {
    return t.add(t.add(t.mul(v[0], w.x), t.mul(v[1], w.y)), t.mul(v[2], w.z));
}

Var3 take3(std::span<const Var> in, std::size_t at) { return {in[at], in[at + 1], in[at + 2]}; }

// A small scene whose colors stay inside (0, 1), away from the clamp.
struct SmallScene {
    SceneFields fields;
    std::vector<RayTarget> rays;
};

SmallScene small_scene(std::uint64_t seed) {
    GridShape shape;
    shape.res = {8, 8, 8};
    shape.lo = {-1, -1, -1};
    shape.hi = {1, 1, 1};
    SmallScene s{SceneFields::random_init(shape, 3, seed), {}};
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    // A dense blob in the middle so weights and normals are far from trivial.
    for (int k = 0; k < 8; ++k)
        for (int j = 0; j < 8; ++j)
            for (int i = 0; i < 8; ++i) {
                const Vec3 x = shape.vertex_position(i, j, k);
                s.fields.density.at(i, j, k, 0) = 1.5 - 3.0 * dot(x, x) + 0.3 * u(rng);
                for (int c = 0; c < 3; ++c) s.fields.normal.at(i, j, k, c) = x[c] + 0.2 * u(rng);
            }
    for (double& c : s.fields.env.coeffs) c = 0.15 * u(rng);
    s.fields.env.coeffs[0] -= 1.0;
    s.fields.env.coeffs[1] -= 1.0;
    s.fields.env.coeffs[2] -= 1.0;
    for (int r = 0; r < 6; ++r) {
        const Vec3 origin = normalized(Vec3{u(rng), u(rng), u(rng)}) * 3.0;
        const Vec3 target{0.3 * u(rng), 0.3 * u(rng), 0.3 * u(rng)};
        RayTarget t;
        t.ray = Ray{origin, normalized(target - origin)};
        t.color = {0.3 + 0.1 * r / 6.0, 0.5, 0.4};
        t.pixel = static_cast<std::uint64_t>(r);
        s.rays.push_back(t);
    }
    return s;
}

LossSettings small_settings(double lambda_n, Supervision sup) {
    LossSettings s;
    s.lambda_n = lambda_n;
    s.normal_weight = 0.5;
    s.supervision = sup;
    s.render.samples = 24;
    s.render.background = {0.3, 0.3, 0.3};
    s.render.seed = 11;
    s.chunk_rays = 4;
    s.min_transmittance = 0.0;
    return s;
}

struct FrozenRay {
    std::vector<double> weights;
    std::vector<std::optional<std::array<double, 3>>> targets;
};

TraceRequest request_for(Supervision sup) {
    TraceRequest req;
    req.transmittance = sup == Supervision::transmittance;
    req.density = sup == Supervision::density;
    req.predicted = true;
    return req;
}

std::vector<FrozenRay> freeze(const SceneFields& fields, const std::vector<RayTarget>& rays, const LossSettings& s) {
    PlainOps ops;
    const FieldViews views = make_views(fields);
    std::vector<FrozenRay> out;
    for (const RayTarget& r : rays) {
        FrozenRay fr;
        if (const auto samples = samples_for_ray(fields.shape(), r.ray, s.render, r.pixel)) {
            const auto tr = trace_ray(ops, views, r.ray, *samples, s.render.background, request_for(s.supervision));
            fr.weights = tr.weights;
            fr.targets = s.supervision == Supervision::transmittance ? tr.n_trans : tr.n_density;
        }
        out.push_back(std::move(fr));
    }
    return out;
}

// Mean over rays of the normal loss with weights and targets held at `frozen`.
double frozen_normal_loss(const SceneFields& fields, const std::vector<RayTarget>& rays, const LossSettings& s,
                          const std::vector<FrozenRay>& frozen) {
    PlainOps ops;
    const FieldViews views = make_views(fields);
    double sum = 0.0;
    for (std::size_t i = 0; i < rays.size(); ++i) {
        const auto samples = samples_for_ray(fields.shape(), rays[i].ray, s.render, rays[i].pixel);
        if (!samples) continue;
        const auto tr = trace_ray(ops, views, rays[i].ray, *samples, s.render.background, request_for(s.supervision));
        const auto l = predicted_normal_loss<PlainOps>(ops, frozen[i].weights, tr.n_pred, frozen[i].targets, 1.0);
        sum += l.value_or(0.0);
    }
    return sum / static_cast<double>(rays.size());
}

std::vector<GradcheckRow> check_total_loss(const std::string& label, double lambda_n, Supervision sup,
                                           std::uint64_t seed, double tol) {
    SmallScene scene = small_scene(seed);
    ParamSet params = scene.fields.make_params();
    const LossSettings s = small_settings(lambda_n, sup);
    std::vector<double> analytic(params.size(), 0.0);
    evaluate_batch(scene.fields, params, scene.rays, s, analytic);

    LossSettings full = s;
    full.lambda_n = 1.0;
    const std::vector<FrozenRay> frozen = freeze(scene.fields, scene.rays, s);
    auto f = [&] {
        const BatchLoss l = evaluate_batch(scene.fields, params, scene.rays, full, {});
        double normal = l.normal;
        if (lambda_n < 1.0)
            normal = lambda_n * l.normal + (1.0 - lambda_n) * frozen_normal_loss(scene.fields, scene.rays, s, frozen);
        return l.color + s.normal_weight * normal;
    };
    std::vector<GradcheckRow> rows;
    for (ParamBlock& b : params.blocks()) {
        const std::span<const double> a(analytic.data() + b.offset, b.values.size());
        FdOptions o = options_for(seed);
        o.max_coords = 96;
        const FdResult r = fd_check(f, b.values, a, o);
        rows.push_back({label + "/" + b.name, r.max_rel_err, r.checked, tol});
    }
    return rows;
}

}  // namespace

std::vector<GradcheckRow> run_gradcheck(std::uint64_t seed, double tol) {
    std::vector<GradcheckRow> rows;
    auto add = [&](GradcheckRow r) { rows.push_back(std::move(r)); };
    const Vec3 w{0.7, -0.4, 0.9};

    add(check_inputs("add", {0.3, -1.2}, [](Tape& t, auto in) { return t.mul(t.add(in[0], in[1]), in[0]); }, tol, seed));
    add(check_inputs("sub", {0.3, -1.2}, [](Tape& t, auto in) { return t.mul(t.sub(in[0], in[1]), in[1]); }, tol, seed));
    add(check_inputs("mul", {0.7, -1.3}, [](Tape& t, auto in) { return t.mul(in[0], in[1]); }, tol, seed));
    add(check_inputs("div", {0.7, -1.3}, [](Tape& t, auto in) { return t.div(in[0], in[1]); }, tol, seed));
    add(check_inputs("exp", {0.4}, [](Tape& t, auto in) { return t.exp(in[0]); }, tol, seed));
    add(check_inputs("softplus", {-0.8}, [](Tape& t, auto in) { return t.softplus(in[0]); }, tol, seed));
    add(check_inputs("sigmoid", {1.1}, [](Tape& t, auto in) { return t.sigmoid(in[0]); }, tol, seed));
    add(check_inputs("power", {0.6}, [](Tape& t, auto in) { return t.pow(in[0], 1.0 / 2.4); }, tol, seed));
    add(check_inputs("clamp", {0.35}, [](Tape& t, auto in) { return t.mul(t.clamp(in[0], 0.0, 1.0), in[0]); }, tol,
                     seed));
    add(check_inputs("dot", {0.2, -0.5, 0.9, 1.1, 0.3, -0.7},
                     [](Tape& t, auto in) { return t.dot(take3(in, 0), take3(in, 3)); }, tol, seed));
    add(check_inputs("normalize", {0.2, -0.5, 0.9},
                     [w](Tape& t, auto in) {
                         return weighted3(t, t.normalize(take3(in, 0), kPredictedNormalEpsilon), w);
                     },
                     tol, seed));
    add(check_inputs("composite_step", {0.8, 2.5},
                     [](Tape& t, auto in) {
                         auto [wt, next] = t.composite_step(in[0], in[1], 0.07);
                         return t.add(t.mul(wt, 0.6), t.mul(next, -1.3));
                     },
                     tol, seed));
    add(check_inputs("srgb_gamma", {0.3}, [](Tape& t, auto in) { return srgb_gamma(t, in[0]); }, tol, seed));
    add(check_inputs("srgb_gamma_linear", {0.002}, [](Tape& t, auto in) { return srgb_gamma(t, in[0]); }, tol, seed));
    add(check_inputs("reflect", {0.3, 0.5, 0.81},
                     [w](Tape& t, auto in) {
                         const Vec3 view = normalized(Vec3{0.1, -0.4, 1.0});
                         return weighted3(t, reflect_about(t, view, take3(in, 0)), w);
                     },
                     tol, seed));

    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::vector<double> env(16 * 3);
    for (double& c : env) c = 0.3 * u(rng);
    add(check_inputs("sh_eval/direction", {0.36, -0.48, 0.8},
                     [&](Tape& t, auto in) {
                         return weighted3(t, t.sh_eval(ParamView{env, 0, 3}, 3, take3(in, 0)), w);
                     },
                     tol, seed));
    add(check_params("sh_eval/coefficients", env, 3,
                     [w](Tape& t, const ParamView& v) {
                         const Var3 d{t.constant(0.36), t.constant(-0.48), t.constant(0.8)};
                         return weighted3(t, t.sh_eval(v, 3, d), w);
                     },
                     tol, seed));
    add(check_inputs("shade",
                     {0.3, 0.5, 0.81, 0.2, -0.4, 0.9, -0.3, 0.6, 0.1},
                     [&](Tape& t, auto in) {
                         const ParamView ev{env, 0, 3};
                         const ShadeInputs si{&ev, 3};
                         const Vec3 view = normalized(Vec3{0.1, -0.4, 1.0});
                         const Var3 n = t.normalize(take3(in, 0), kPredictedNormalEpsilon);
                         return weighted3(t, shade_raw(t, si, n, take3(in, 3), take3(in, 6), view), w);
                     },
                     tol, seed));

    GridShape shape;
    shape.res = {4, 4, 4};
    shape.lo = {-1, -1, -1};
    shape.hi = {1, 1, 1};
    std::vector<double> grid(shape.vertex_count());
    for (double& g : grid) g = u(rng);
    const CellLookup lk = locate(shape, {0.13, -0.41, 0.27});
    add(check_params("trilinear_gather", grid, 1,
                     [&](Tape& t, const ParamView& v) { return t.mul(t.gather(v, lk, 0), t.gather(v, lk, 0)); }, tol,
                     seed));
    add(check_params("trilinear_gradient", grid, 1,
                     [&](Tape& t, const ParamView& v) { return weighted3(t, t.gather_gradient(v, lk, 0), w); }, tol,
                     seed));

    // Losses on their own inputs: weights (2), predicted normals (2 x 3), target normals (2 x 3).
    const std::vector<double> loss_in = {0.3, 0.55, 0.2, 0.9, -0.3, -0.6, 0.1, 0.7, 0.5, 0.8, 0.3, -0.2, 0.4, 0.85};
    add(check_inputs("color_loss", {0.3, 0.8, 0.55},
                     [](Tape& t, auto in) { return color_loss(t, take3(in, 0), Vec3{0.5, 0.6, 0.1}); }, tol, seed));
    for (double lambda : {0.0, 0.5, 1.0}) {
        // Reference: lambda * L(w, n_p, n_t) + (1 - lambda) * L(w0, n_p, n_t0).
        auto loss = [&](Tape& t, std::span<const Var> in, std::span<const Var> frozen_w,
                        std::span<const Var> frozen_t, double lam) {
            const std::vector<Var> wts{frozen_w[0], frozen_w[1]};
            const std::vector<Triple<Tape>> np{take3(in, 2), take3(in, 5)};
            const std::vector<std::optional<Triple<Tape>>> nt{take3(frozen_t, 0), take3(frozen_t, 3)};
            return *predicted_normal_loss<Tape>(t, wts, np, nt, lam);
        };
        std::vector<double> x = loss_in;
        Tape tape;
        std::vector<Var> in;
        for (double v : x) in.push_back(tape.constant(v));
        const Var out = loss(tape, in, std::span<const Var>(in).subspan(0, 2), std::span<const Var>(in).subspan(8, 6),
                             lambda);
        std::vector<ParamContribution> none;
        tape.backward(out, 1.0, none);
        std::vector<double> analytic;
        for (Var v : in) analytic.push_back(tape.adjoint(v));
        Tape scratch;
        auto f = [&] {
            scratch.clear();
            std::vector<Var> live, fixed;
            for (std::size_t i = 0; i < x.size(); ++i) {
                live.push_back(scratch.constant(x[i]));
                fixed.push_back(scratch.constant(loss_in[i]));
            }
            const Var full = loss(scratch, live, std::span<const Var>(live).subspan(0, 2),
                                  std::span<const Var>(live).subspan(8, 6), 1.0);
            const Var det = loss(scratch, live, std::span<const Var>(fixed).subspan(0, 2),
                                 std::span<const Var>(fixed).subspan(8, 6), 1.0);
            return lambda * scratch.value(full) + (1.0 - lambda) * scratch.value(det);
        };
        const FdResult r = fd_check(f, x, analytic, options_for(seed));
        char name[64];
        std::snprintf(name, sizeof name, "predicted_normal_loss/lambda=%g", lambda);
        add({name, r.max_rel_err, r.checked, tol});
    }

    // Composed pipeline: color and transmittance-gradient normals of one ray.
    {
        SmallScene scene = small_scene(seed);
        ParamSet params = scene.fields.make_params();
        const LossSettings s = small_settings(1.0, Supervision::transmittance);
        const RayTarget& r = scene.rays[0];
        const Samples samples = *samples_for_ray(scene.fields.shape(), r.ray, s.render, r.pixel);
        auto build = [&](Tape& t, bool normals) {
            const FieldViews views = make_views(scene.fields, &params);
            const auto tr = trace_ray(t, views, r.ray, samples, s.render.background, request_for(s.supervision));
            if (!normals) return weighted3(t, tr.color, w);
            std::optional<Var> sum;
            for (std::size_t i = 0; i < tr.n_trans.size(); ++i) {
                if (!tr.n_trans[i]) continue;
                const Var term = t.mul(weighted3(t, *tr.n_trans[i], w), 1.0 + 0.01 * i);
                sum = sum ? t.add(*sum, term) : term;
            }
            return *sum;
        };
        for (bool normals : {false, true}) {
            Tape tape;
            std::vector<double> analytic(params.size(), 0.0);
            tape.backward(build(tape, normals), analytic);
            Tape scratch;
            auto f = [&] {
                scratch.clear();
                return scratch.value(build(scratch, normals));
            };
            for (ParamBlock& b : params.blocks()) {
                const std::span<const double> a(analytic.data() + b.offset, b.values.size());
                FdOptions o = options_for(seed);
                o.max_coords = 96;
                const FdResult res = fd_check(f, b.values, a, o);
                if (res.checked == 0) continue;
                add({std::string(normals ? "transmittance_normals/" : "render_color/") + b.name, res.max_rel_err,
                     res.checked, tol});
            }
        }
    }

    // Grid smoothness penalty.
    {
        const GridShape shape{{5, 4, 3}, {-1, -1, -1}, {1, 1, 1}};
        std::mt19937_64 rng(seed + 5);
        std::uniform_real_distribution<double> u(-1.0, 1.0);
        std::vector<double> x(shape.vertex_count() * 3);
        for (double& v : x) v = u(rng);
        std::vector<double> analytic(x.size(), 0.0);
        add_smoothness(x, analytic, shape, 3, 0.7);
        std::vector<double> scratch(x.size());
        auto f = [&] { return add_smoothness(x, scratch, shape, 3, 0.7); };
        const FdResult r = fd_check(f, x, analytic, options_for(seed));
        add({"smoothness", r.max_rel_err, r.checked, tol});
    }

    for (double lambda : {0.0, 0.5, 1.0}) {
        char label[64];
        std::snprintf(label, sizeof label, "total_loss/lambda=%g", lambda);
        for (auto& r : check_total_loss(label, lambda, Supervision::transmittance, seed, tol)) add(std::move(r));
    }
    for (auto& r : check_total_loss("total_loss/density_supervision", 1.0, Supervision::density, seed, tol))
        add(std::move(r));
    return rows;
}

void write_gradcheck_csv(std::ostream& out, const std::vector<GradcheckRow>& rows) {
    out << "op,max_rel_err,checked,tolerance,pass\n";
    char buf[64];
    for (const GradcheckRow& r : rows) {
        std::snprintf(buf, sizeof buf, "%.3e", r.max_rel_err);
        out << r.op << "," << buf << "," << r.checked << ",";
        std::snprintf(buf, sizeof buf, "%.0e", r.tolerance);
        out << buf << "," << (r.pass() ? "true" : "false") << "\n";
    }
}

}  // namespace nf
