// normalfield: command-line front end for the volumetric reconstruction toolkit.

#include <array>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numbers>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "normalfield/checkpoint.hpp"
#include "normalfield/error.hpp"
#include "normalfield/gradcheck.hpp"
#include "normalfield/metrics.hpp"
#include "normalfield/parallel.hpp"
#include "normalfield/probe.hpp"
#include "normalfield/render.hpp"
#include "normalfield/scene.hpp"
#include "normalfield/train.hpp"

namespace fs = std::filesystem;
using namespace nf;

namespace {

Vec3 to_vec(const std::array<double, 3>& a) { return {a[0], a[1], a[2]}; }

const Frame& pick_frame(const Dataset& data, const std::string& split, int index) {
    const auto frames = data.split(split == "test");
    if (frames.empty()) throw DataError("dataset has no " + split + " frames");
    if (index < 0 || index >= static_cast<int>(frames.size()))
        throw InvalidInput("view " + std::to_string(index) + " out of range (the " + split + " split has " +
                           std::to_string(frames.size()) + " frames)");
    return *frames[static_cast<std::size_t>(index)];
}

// --- scene generate ---------------------------------------------------------

struct SceneArgs {
    std::string kind = "shiny_sphere";
    int views = 16, test_views = 4, resolution = 64;
    std::uint64_t seed = 1;
    std::string out;
};

int run_scene_generate(const SceneArgs& a) {
    const SceneKind kind = parse_scene_kind(a.kind);
    if (a.views < 2) throw InvalidInput("--views must be at least 2");
    if (a.test_views < 0) throw InvalidInput("--test-views must be non-negative");
    if (a.resolution < 1) throw InvalidInput("--resolution must be positive");
    const SyntheticScene scene = make_scene(kind, a.views, a.test_views, a.resolution, a.seed);
    write_dataset(scene, a.out);
    std::printf("scene %s: %d train + %d test views at %dx%d -> %s\n", to_string(kind).c_str(), a.views,
                a.test_views, a.resolution, a.resolution, a.out.c_str());
    return 0;
}

// --- train ------------------------------------------------------------------

struct TrainArgs {
    std::string data, out, config;
    std::vector<std::string> overrides;
    int iterations = 0;
    long long seed = -1;
    bool quiet = false;
};

int run_train(const TrainArgs& a) {
    TrainConfig cfg;
    if (!a.config.empty()) apply_config_file(cfg, a.config);
    for (const auto& o : a.overrides) apply_config_override(cfg, o);
    if (a.iterations > 0) cfg.iterations = a.iterations;
    if (a.seed >= 0) cfg.seed = static_cast<std::uint64_t>(a.seed);
    cfg.validate();

    const Dataset dataset = read_dataset(a.data);
    const TrainData data = train_data_from(dataset);
    fs::create_directories(a.out);
    {
        std::ofstream run(fs::path(a.out) / "run.toml");
        run << to_config_text(cfg);
    }
    std::printf("adam beta1=%g beta2=%g eps=%g; lr_grid %g->%g, lr_env %g->%g; lambda_n %g->%g over %d\n",
                cfg.adam.beta1, cfg.adam.beta2, cfg.adam.eps, cfg.lr_grid.start, cfg.lr_grid.end, cfg.lr_env.start,
                cfg.lr_env.end, cfg.lambda_n.start, cfg.lambda_n.end, cfg.lambda_n.steps);
    std::vector<LogRow> log;
    const SceneFields fields = train(data, cfg, &log, [&](const LogRow& r) {
        if (a.quiet || !r.psnr_probe) return;
        std::printf("iter %6ld  loss_c %.6f  loss_n %.6f  lambda_n %.4f  psnr %.2f\n", r.iter, r.loss_c, r.loss_n,
                    r.lambda_n, *r.psnr_probe);
        std::fflush(stdout);
    });
    save_checkpoint(fs::path(a.out) / "checkpoint.nfld", fields);
    write_log_csv(fs::path(a.out) / "train_log.csv", log);
    const LogRow& last = log.back();
    std::printf("trained %d iterations (%s supervision), final loss_c %.6f", cfg.iterations,
                to_string(cfg.supervision).c_str(), last.loss_c);
    if (last.psnr_probe) std::printf(", probe psnr %.2f dB", *last.psnr_probe);
    std::printf(" -> %s\n", a.out.c_str());
    return 0;
}

// --- render -----------------------------------------------------------------

struct RenderArgs {
    std::string checkpoint, data, split = "test", mode = "color", out;
    int view = 0, samples = 128;
};

int run_render(const RenderArgs& a) {
    const RenderMode mode = parse_render_mode(a.mode);
    if (a.samples < 2) throw InvalidInput("--samples must be at least 2");
    const SceneFields fields = load_checkpoint(a.checkpoint);
    const Dataset dataset = read_dataset(a.data);
    const Frame& frame = pick_frame(dataset, a.split, a.view);
    RenderConfig rc;
    rc.samples = a.samples;
    rc.deterministic = true;
    rc.background = dataset.params.background;
    const RenderedImage img = render_image(fields, frame.camera, rc);
    const Image raw = to_image(img, mode);
    Image preview = raw;
    if (mode == RenderMode::depth)
        preview = depth_preview(raw);
    else if (mode != RenderMode::color)
        preview = normal_preview(raw);
    const fs::path base(a.out);
    if (base.has_parent_path()) fs::create_directories(base.parent_path());
    write_pfm(fs::path(a.out + ".pfm"), raw);
    write_png(fs::path(a.out + ".png"), quantize(preview));
    std::printf("rendered %s view %d (%s, %dx%d) -> %s.pfm, %s.png\n", a.split.c_str(), a.view, a.mode.c_str(),
                img.width, img.height, a.out.c_str(), a.out.c_str());
    return 0;
}

// --- eval -------------------------------------------------------------------

struct EvalArgs {
    std::string checkpoint, data, split = "test", out = "metrics.csv";
    int samples = 128;
};

int run_eval(const EvalArgs& a) {
    if (a.samples < 2) throw InvalidInput("--samples must be at least 2");
    const SceneFields fields = load_checkpoint(a.checkpoint);
    const Dataset dataset = read_dataset(a.data);
    const MetricReport report = evaluate_split(fields, dataset, a.split == "test", a.samples);
    if (fs::path(a.out).has_parent_path()) fs::create_directories(fs::path(a.out).parent_path());
    report.write_csv(a.out);
    std::printf("eval %zu %s views: psnr %.2f dB, mae %.2f deg (density %.2f, pred %.2f) -> %s\n", report.rows.size(),
                a.split.c_str(), report.mean_psnr(), report.mean_mae(), report.mean_extra()[0],
                report.mean_extra()[1], a.out.c_str());
    return 0;
}

// --- probe ------------------------------------------------------------------

struct ProbeArgs {
    std::string analytic, checkpoint, out;
    std::array<double, 3> origin{-1, 0, 0}, direction{1, 0, 0}, axis{0, 0, 0};
    double near = 0.0, far = 2.0;
    int samples = 256;
    double amplitude = 4.0, width = 0.1, radius = 0.5;
};

int run_probe(const ProbeArgs& a) {
    if (a.analytic.empty() == a.checkpoint.empty())
        throw InvalidInput("probe needs exactly one of --analytic or --checkpoint");
    if (a.samples < 2) throw InvalidInput("--samples must be at least 2");
    if (!(a.far > a.near)) throw InvalidInput("--far must exceed --near");
    const Vec3 dir = to_vec(a.direction);
    if (!(norm(dir) > 0)) throw InvalidInput("--direction must be nonzero");
    const Ray ray{to_vec(a.origin), normalized(dir)};
    const Vec3 axis = norm(to_vec(a.axis)) > 0 ? normalized(to_vec(a.axis)) : -ray.direction;
    const Samples samples = sample_stratified(a.near, a.far, a.samples);

    RaySampleTrack track;
    if (!a.analytic.empty()) {
        AnalyticField field;
        switch (parse_analytic_kind(a.analytic)) {
            case AnalyticField::Kind::gaussian_slab:
                field = AnalyticField::gaussian_slab({0, 0, 0}, {1, 0, 0}, a.amplitude, a.width);
                break;
            case AnalyticField::Kind::solid_sphere:
                field = AnalyticField::solid_sphere({0, 0, 0}, a.radius, a.amplitude, 40.0);
                break;
            case AnalyticField::Kind::double_bump:
                field = AnalyticField::double_bump({0, 0, 0}, {0.25, 0, 0}, a.amplitude, a.width);
                break;
        }
        track = trace_analytic(field, ray, samples);
    } else {
        track = trace_track(load_checkpoint(a.checkpoint), ray, samples);
    }
    const auto rows = probe_rows(track, axis);
    if (a.out.empty() || a.out == "-") {
        write_probe_csv(std::cout, rows);
    } else {
        std::ofstream out(a.out);
        if (!out) throw DataError("cannot write " + a.out);
        write_probe_csv(out, rows);
    }
    const ProbeSummary s = summarize_probe(rows);
    std::fprintf(stderr, "probe %d samples: %zu/%zu significant samples with n_trans.axis > 0.999, %d density sign flips\n",
                 a.samples, s.trans_consistent, s.significant, s.density_sign_flips);
    return 0;
}

// --- gradcheck --------------------------------------------------------------

struct GradcheckArgs {
    std::string out;
    double tolerance = 1e-4;
    std::uint64_t seed = 7;
};

int run_gradcheck_cmd(const GradcheckArgs& a) {
    const auto rows = run_gradcheck(a.seed, a.tolerance);
    if (a.out.empty() || a.out == "-") {
        write_gradcheck_csv(std::cout, rows);
    } else {
        std::ofstream out(a.out);
        if (!out) throw DataError("cannot write " + a.out);
        write_gradcheck_csv(out, rows);
    }
    int failed = 0;
    double worst = 0.0;
    for (const auto& r : rows) {
        failed += !r.pass();
        worst = std::max(worst, r.max_rel_err);
    }
    std::fprintf(stderr, "gradcheck: %zu checks, %d failed, worst relative error %.3g (tolerance %g)\n", rows.size(),
                 failed, worst, a.tolerance);
    return failed ? static_cast<int>(ExitCode::numerical) : 0;
}

// --- env export -------------------------------------------------------------

struct EnvArgs {
    std::string checkpoint, out;
    bool ground_truth = false;
    int width = 512, height = 256;
};

int run_env_export(const EnvArgs& a) {
    if (a.ground_truth == !a.checkpoint.empty())
        throw InvalidInput("env export needs exactly one of --checkpoint or --ground-truth");
    if (a.width < 1 || a.height < 1) throw InvalidInput("--width and --height must be positive");
    const EnvMapSH env = a.ground_truth ? ground_truth_environment() : load_checkpoint(a.checkpoint).env;
    Image img(a.width, a.height, 3);
    for (int y = 0; y < a.height; ++y) {
        const double theta = std::numbers::pi * (y + 0.5) / a.height;  // from +z
        for (int x = 0; x < a.width; ++x) {
            const double phi = 2.0 * std::numbers::pi * (x + 0.5) / a.width;
            const Vec3 d{std::sin(theta) * std::cos(phi), std::sin(theta) * std::sin(phi), std::cos(theta)};
            const Vec3 c = env_radiance(env, d);
            for (int k = 0; k < 3; ++k) img.at(x, y, k) = static_cast<float>(c[k]);
        }
    }
    write_pfm(a.out, img);
    std::printf("environment (SH degree %d) -> %s (%dx%d equirectangular, linear)\n", env.degree, a.out.c_str(),
                a.width, a.height);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Differentiable volumetric reconstruction with transmittance-gradient normals"};
    app.require_subcommand(1);
    int threads = -1;
    app.add_option("--threads", threads, "worker threads (0: auto; default from NORMALFIELD_THREADS)");

    SceneArgs scene_args;
    auto* scene = app.add_subcommand("scene", "synthetic scenes");
    scene->require_subcommand(1);
    auto* generate = scene->add_subcommand("generate", "render a synthetic dataset to disk");
    generate->add_option("--kind", scene_args.kind, "gaussian_slab, matte_sphere, shiny_sphere or two_spheres");
    generate->add_option("--views", scene_args.views, "training views");
    generate->add_option("--test-views", scene_args.test_views, "held-out views");
    generate->add_option("--resolution", scene_args.resolution, "image width and height");
    generate->add_option("--seed", scene_args.seed, "camera lattice seed");
    generate->add_option("--out", scene_args.out, "output directory")->required();

    TrainArgs train_args;
    auto* train_cmd = app.add_subcommand("train", "fit fields to a dataset");
    train_cmd->add_option("--data", train_args.data, "dataset directory")->required();
    train_cmd->add_option("--out", train_args.out, "run directory")->required();
    train_cmd->add_option("--config", train_args.config, "key = value config file");
    train_cmd->add_option("--set", train_args.overrides, "config override key=value (repeatable)");
    train_cmd->add_option("--iterations", train_args.iterations, "override the iteration count");
    train_cmd->add_option("--seed", train_args.seed, "override the seed");
    train_cmd->add_flag("--quiet", train_args.quiet, "no per-probe progress lines");

    RenderArgs render_args;
    auto* render_cmd = app.add_subcommand("render", "render one dataset view from a checkpoint");
    render_cmd->add_option("--checkpoint", render_args.checkpoint)->required();
    render_cmd->add_option("--data", render_args.data, "dataset directory (cameras)")->required();
    render_cmd->add_option("--split", render_args.split)->check(CLI::IsMember({"train", "test"}));
    render_cmd->add_option("--view", render_args.view, "frame index within the split");
    render_cmd->add_option("--mode", render_args.mode, "color, normal-trans, normal-density, normal-pred or depth");
    render_cmd->add_option("--samples", render_args.samples);
    render_cmd->add_option("--out", render_args.out, "output prefix; writes .pfm and .png")->required();

    EvalArgs eval_args;
    auto* eval_cmd = app.add_subcommand("eval", "PSNR and normal MAE against dataset ground truth");
    eval_cmd->add_option("--checkpoint", eval_args.checkpoint)->required();
    eval_cmd->add_option("--data", eval_args.data)->required();
    eval_cmd->add_option("--split", eval_args.split)->check(CLI::IsMember({"train", "test"}));
    eval_cmd->add_option("--samples", eval_args.samples);
    eval_cmd->add_option("--out", eval_args.out, "metrics CSV");

    ProbeArgs probe_args;
    auto* probe_cmd = app.add_subcommand("probe", "per-sample densities, weights and normals along one ray");
    probe_cmd->add_option("--analytic", probe_args.analytic, "gaussian_slab, solid_sphere or double_bump");
    probe_cmd->add_option("--checkpoint", probe_args.checkpoint);
    probe_cmd->add_option("--origin", probe_args.origin)->delimiter(',');
    probe_cmd->add_option("--direction", probe_args.direction)->delimiter(',');
    probe_cmd->add_option("--axis", probe_args.axis, "reference normal (default: against the ray)")->delimiter(',');
    probe_cmd->add_option("--near", probe_args.near);
    probe_cmd->add_option("--far", probe_args.far);
    probe_cmd->add_option("--samples", probe_args.samples);
    probe_cmd->add_option("--amplitude", probe_args.amplitude);
    probe_cmd->add_option("--width", probe_args.width);
    probe_cmd->add_option("--radius", probe_args.radius);
    probe_cmd->add_option("--out", probe_args.out, "CSV path (default stdout)");

    GradcheckArgs gc_args;
    auto* gc_cmd = app.add_subcommand("gradcheck", "central-difference check of every differentiable operation");
    gc_cmd->add_option("--out", gc_args.out, "CSV path (default stdout)");
    gc_cmd->add_option("--tolerance", gc_args.tolerance);
    gc_cmd->add_option("--seed", gc_args.seed);

    EnvArgs env_args;
    auto* env = app.add_subcommand("env", "environment map tools");
    env->require_subcommand(1);
    auto* env_export = env->add_subcommand("export", "equirectangular radiance of the SH environment");
    env_export->add_option("--checkpoint", env_args.checkpoint);
    env_export->add_flag("--ground-truth", env_args.ground_truth, "export the synthetic scenes' environment");
    env_export->add_option("--width", env_args.width);
    env_export->add_option("--height", env_args.height);
    env_export->add_option("--out", env_args.out)->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        std::cerr << app.help();
        return static_cast<int>(ExitCode::usage);
    }

    try {
        if (threads >= 0) set_worker_count(threads);
        if (*generate) return run_scene_generate(scene_args);
        if (*train_cmd) return run_train(train_args);
        if (*render_cmd) return run_render(render_args);
        if (*eval_cmd) return run_eval(eval_args);
        if (*probe_cmd) return run_probe(probe_args);
        if (*gc_cmd) return run_gradcheck_cmd(gc_args);
        if (*env_export) return run_env_export(env_args);
    } catch (const Error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return static_cast<int>(e.code());
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return static_cast<int>(ExitCode::data);
    }
    return static_cast<int>(ExitCode::usage);
}
