// End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
// exits non-zero if any fails. Usage: acceptance [criterion numbers...]

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <string>

#include "normalfield/checkpoint.hpp"
#include "normalfield/gradcheck.hpp"
#include "normalfield/parallel.hpp"
#include "normalfield/probe.hpp"
#include "normalfield/scene.hpp"
#include "normalfield/train.hpp"

using namespace nf;
namespace fs = std::filesystem;

namespace {

struct Verdict {
    bool pass = false;
    std::string detail;
};

// Tolerances.
constexpr double kSlabDot = 0.999;
constexpr double kGradTol = 1e-4;
constexpr double kClosedFormTol = 1e-10;
constexpr double kPartitionTol = 1e-12;
constexpr double kForwardTol = 1e-12;
constexpr double kMinPsnr = 24.0;
constexpr double kMaxMae = 10.0;
constexpr double kDensityMargin = 2.0;
constexpr double kWarmupTie = 0.5;
constexpr double kScheduleTol = 1e-12;

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

// --- 1 ----------------------------------------------------------------------

Verdict slab_normals() {
    const AnalyticField slab = AnalyticField::gaussian_slab({0, 0, 0}, {1, 0, 0}, 4.0, 0.1);
    const Ray ray{{-1, 0, 0}, {1, 0, 0}};
    const auto rows = probe_rows(trace_analytic(slab, ray, sample_stratified(0.0, 2.0, 256)), {-1, 0, 0});
    const ProbeSummary s = summarize_probe(rows);
    return {s.significant > 0 && s.trans_consistent == s.significant && s.density_sign_flips >= 1,
            fmt("transmittance dot > %.3f on %zu/%zu significant samples, density sign flips %d", kSlabDot,
                s.trans_consistent, s.significant, s.density_sign_flips)};
}

// --- 2 ----------------------------------------------------------------------

Verdict gradients() {
    const auto rows = run_gradcheck(7, kGradTol);
    double worst = 0.0;
    std::string worst_op;
    int failed = 0;
    for (const GradcheckRow& r : rows) {
        if (!r.pass()) ++failed;
        if (r.max_rel_err >= worst) {
            worst = r.max_rel_err;
            worst_op = r.op;
        }
    }
    return {failed == 0, fmt("%zu checks, %d failed, worst %.2e (%s), tolerance %.0e", rows.size(), failed, worst,
                             worst_op.c_str(), kGradTol)};
}

// --- 3 ----------------------------------------------------------------------

// Continuous integral for a density that is constant on each segment.
Vec3 closed_form(const std::vector<double>& sigma, const std::vector<double>& len, const std::vector<Vec3>& color,
                 const Vec3& bg) {
    double depth = 0.0;
    Vec3 c;
    for (std::size_t k = 0; k < sigma.size(); ++k) {
        c += color[k] * (std::exp(-depth) * (1.0 - std::exp(-sigma[k] * len[k])));
        depth += sigma[k] * len[k];
    }
    return c + bg * std::exp(-depth);
}

Verdict rendering_oracle() {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    double worst_color = 0.0;
    for (int trial = 0; trial < 1000; ++trial) {
        const int segments = 1 + static_cast<int>(u(rng) * 6);
        std::vector<double> seg_sigma, seg_len, sigma, delta;
        std::vector<Vec3> seg_color, colors;
        for (int k = 0; k < segments; ++k) {
            seg_sigma.push_back(u(rng) < 0.2 ? 0.0 : 5.0 * u(rng));
            seg_len.push_back(0.05 + u(rng));
            seg_color.push_back({u(rng), u(rng), u(rng)});
            const int parts = 1 + static_cast<int>(u(rng) * 5);
            for (int p = 0; p < parts; ++p) {
                sigma.push_back(seg_sigma[k]);
                delta.push_back(seg_len[k] / parts);
                colors.push_back(seg_color[k]);
            }
        }
        const Vec3 bg{u(rng), u(rng), u(rng)};
        const Vec3 got = composite(sigma, delta, colors, bg).color;
        const Vec3 ref = closed_form(seg_sigma, seg_len, seg_color, bg);
        for (int a = 0; a < 3; ++a) worst_color = std::max(worst_color, std::abs(got[a] - ref[a]));
    }
    double worst_sum = 0.0;
    std::vector<double> sigma, delta;
    std::vector<Vec3> colors;
    for (int ray = 0; ray < 10000; ++ray) {
        const int n = 2 + static_cast<int>(u(rng) * 126);
        sigma.resize(n);
        delta.resize(n);
        colors.assign(n, Vec3{});
        for (int i = 0; i < n; ++i) {
            sigma[i] = std::exp(12.0 * u(rng) - 6.0);
            delta[i] = 0.1 * u(rng);
        }
        const CompositeResult r = composite(sigma, delta, colors, {});
        double sum = r.final_transmittance;
        for (double w : r.weights) sum += w;
        worst_sum = std::max(worst_sum, std::abs(sum - 1.0));
    }
    return {worst_color <= kClosedFormTol && worst_sum <= kPartitionTol,
            fmt("closed form max err %.1e (tol %.0e), partition of unity max err %.1e over 10^4 rays (tol %.0e)",
                worst_color, kClosedFormTol, worst_sum, kPartitionTol)};
}

// --- 4 ----------------------------------------------------------------------

Verdict stop_gradient() {
    const GridShape shape{{8, 8, 8}, {-1, -1, -1}, {1, 1, 1}};
    SceneFields fields = SceneFields::random_init(shape, 3, 21);
    std::mt19937_64 rng(22);
    std::uniform_real_distribution<double> u(-0.5, 0.5);
    for (int k = 0; k < 8; ++k)
        for (int j = 0; j < 8; ++j)
            for (int i = 0; i < 8; ++i) {
                const Vec3 p = shape.vertex_position(i, j, k);
                fields.density.at(i, j, k, 0) = 2.0 - 4.0 * dot(p, p) + u(rng);
                for (int a = 0; a < 3; ++a) fields.normal.at(i, j, k, a) = p[a] + u(rng);
            }
    ParamSet params = fields.make_params();
    const FieldViews views = make_views(fields, &params);
    RenderConfig rc;
    rc.samples = 32;
    rc.deterministic = true;

    auto run = [&](double lambda, double& value) {
        std::vector<double> adj(params.size(), 0.0);
        Tape tape;
        std::optional<Var> total;
        std::mt19937_64 ray_rng(3);
        std::normal_distribution<double> g;
        for (int n = 0; n < 8; ++n) {
            const Vec3 origin = normalized({g(ray_rng), g(ray_rng), g(ray_rng)}) * 2.5;
            const Vec3 target{0.3 * g(ray_rng), 0.3 * g(ray_rng), 0.3 * g(ray_rng)};
            const Ray ray{origin, normalized(target - origin)};
            const auto samples = samples_for_ray(shape, ray, rc, static_cast<std::uint64_t>(n));
            if (!samples) continue;
            const auto tr = trace_ray(tape, views, ray, *samples, {1, 1, 1}, TraceRequest{});
            const auto ln = predicted_normal_loss<Tape>(tape, tr.weights, tr.n_pred, tr.n_trans, lambda);
            if (ln) total = total ? tape.add(*total, *ln) : *ln;
        }
        value = tape.value(*total);
        tape.backward(*total, adj);
        const ParamBlock& b = params.block("density");
        double s = 0.0;
        for (std::size_t i = 0; i < b.values.size(); ++i) s += std::abs(adj[b.offset + i]);
        return s;
    };
    double v0 = 0.0, v1 = 0.0, vh = 0.0;
    const double d0 = run(0.0, v0), d1 = run(1.0, v1);
    run(0.37, vh);
    const double spread = std::max(std::abs(v0 - v1), std::abs(v0 - vh));
    return {d0 == 0.0 && d1 > 0.0 && spread <= kForwardTol,
            fmt("density adjoint |sum| %.3g at lambda 0, %.3g at lambda 1; forward spread %.1e (tol %.0e)", d0, d1,
                spread, kForwardTol)};
}

// --- 5, 6 -------------------------------------------------------------------

TrainConfig run_config() {
    TrainConfig cfg;
    cfg.iterations = 2000;
    cfg.rays_per_batch = 1024;
    cfg.samples_per_ray = 64;
    cfg.grid_resolution = 48;
    cfg.sh_degree = 3;
    cfg.seed = 0;
    return cfg;
}

struct RunResult {
    MetricReport report;
    double seconds = 0.0;
};

RunResult train_and_eval(const Dataset& dataset, const TrainConfig& cfg) {
    const auto t0 = std::chrono::steady_clock::now();
    const SceneFields fields = train(train_data_from(dataset), cfg);
    RunResult r;
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    r.report = evaluate_split(fields, dataset, true, 128);
    return r;
}

struct Reconstruction {
    std::optional<RunResult> full, density, no_warmup;
};

const Dataset& shiny_dataset() {
    static const Dataset d = [] {
        const fs::path dir = fs::temp_directory_path() / "normalfield_acceptance" / "shiny";
        fs::remove_all(dir);
        write_dataset(make_scene(SceneKind::shiny_sphere, 16, 4, 64, 1), dir);
        return read_dataset(dir);
    }();
    return d;
}

Reconstruction& runs() {
    static Reconstruction r;
    return r;
}

const RunResult& full_run() {
    if (!runs().full) runs().full = train_and_eval(shiny_dataset(), run_config());
    return *runs().full;
}

Verdict reconstruction() {
    const RunResult& r = full_run();
    const double p = r.report.mean_psnr(), m = r.report.mean_mae();
    return {p >= kMinPsnr && m <= kMaxMae,
            fmt("held-out psnr %.2f dB (>= %.1f), transmittance normal mae %.2f deg (<= %.1f), training %.0f s", p,
                kMinPsnr, m, kMaxMae, r.seconds)};
}

Verdict ablations() {
    const RunResult& full = full_run();
    TrainConfig dens = run_config();
    dens.supervision = Supervision::density;
    TrainConfig flat = run_config();
    flat.lambda_n = {1.0, 1.0, 800};
    runs().density = train_and_eval(shiny_dataset(), dens);
    runs().no_warmup = train_and_eval(shiny_dataset(), flat);
    // Each variant is scored with the normal estimate it supervises with.
    const double m_full = full.report.mean_mae();
    const double m_dens = runs().density->report.mean_extra()[0];
    const double m_flat = runs().no_warmup->report.mean_mae();
    const bool a = m_dens - m_full >= kDensityMargin;
    const bool b = m_full <= m_flat + kWarmupTie;
    return {a && b, fmt("mae full %.2f, density-gradient variant %.2f (needs >= +%.1f), no warmup %.2f (tie %.1f); "
                        "predicted-normal mae %.2f / %.2f / %.2f",
                        m_full, m_dens, kDensityMargin, m_flat, kWarmupTie, full.report.mean_extra()[1],
                        runs().density->report.mean_extra()[1], runs().no_warmup->report.mean_extra()[1])};
}

// --- 7 ----------------------------------------------------------------------

Verdict schedules() {
    const TrainConfig cfg = run_config();
    const long K = cfg.lambda_n.steps;
    auto near = [](double a, double b) { return std::abs(a - b) <= kScheduleTol * std::abs(b); };
    bool ok = near(cfg.lambda_at(0), 0.01) && near(cfg.lambda_at(K), 1.0);
    double worst = 0.0;
    for (long k = 0; k <= K; ++k) {
        const double expect = std::log(0.01) + (std::log(1.0) - std::log(0.01)) * static_cast<double>(k) / K;
        worst = std::max(worst, std::abs(std::log(cfg.lambda_at(k)) - expect));
    }
    ok = ok && worst <= kScheduleTol;
    const double lr0 = cfg.lr_grid_at(0), lr1 = cfg.lr_grid_at(cfg.iterations);
    const double e0 = cfg.lr_env_at(0), e1 = cfg.lr_env_at(cfg.iterations);
    ok = ok && near(lr0, cfg.lr_grid.start) && near(lr1, cfg.lr_grid.end) && near(e0, cfg.lr_env.start) &&
         near(e1, cfg.lr_env.end);
    const std::string log = to_config_text(cfg);
    const bool surfaced = log.find("adam_beta1 = 0.9\n") != std::string::npos &&
                          log.find("adam_beta2 = 0.99\n") != std::string::npos &&
                          log.find("adam_eps = 1e-15\n") != std::string::npos;
    const bool adam = cfg.adam.beta1 == 0.9 && cfg.adam.beta2 == 0.99 && cfg.adam.eps == 1e-15;
    return {ok && surfaced && adam,
            fmt("lambda(0)=%g lambda(%ld)=%.15g log-linear err %.1e; lr grid %g->%g, env %g->%g; adam %g/%g/%g in run "
                "log: %s",
                cfg.lambda_at(0), K, cfg.lambda_at(K), worst, lr0, lr1, e0, e1, cfg.adam.beta1, cfg.adam.beta2,
                cfg.adam.eps, surfaced ? "yes" : "no")};
}

// --- 8 ----------------------------------------------------------------------

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), {}};
}

Verdict determinism() {
    const fs::path dir = fs::temp_directory_path() / "normalfield_acceptance" / "determinism";
    fs::create_directories(dir);
    TrainConfig cfg = run_config();
    cfg.iterations = 100;
    cfg.seed = 5;
    set_worker_count(1);
    std::string ck[2], lg[2], mt[2];
    for (int run = 0; run < 2; ++run) {
        std::vector<LogRow> log;
        const SceneFields f = train(train_data_from(shiny_dataset()), cfg, &log);
        const fs::path c = dir / fmt("run%d.nfld", run), l = dir / fmt("log%d.csv", run),
                       m = dir / fmt("metrics%d.csv", run);
        save_checkpoint(c, f);
        write_log_csv(l, log);
        evaluate_split(f, shiny_dataset(), true, 64).write_csv(m);
        ck[run] = slurp(c);
        lg[run] = slurp(l);
        mt[run] = slurp(m);
    }
    set_worker_count(0);
    const bool same = !ck[0].empty() && ck[0] == ck[1] && lg[0] == lg[1] && mt[0] == mt[1];
    return {same, fmt("checkpoint %zu bytes %s, log csv %s, metrics csv %s", ck[0].size(),
                      ck[0] == ck[1] ? "identical" : "differs", lg[0] == lg[1] ? "identical" : "differs",
                      mt[0] == mt[1] ? "identical" : "differs")};
}

struct Criterion {
    int id;
    const char* name;
    double time_limit;  // seconds, 0 for none
    std::function<Verdict()> check;
};

}  // namespace

int main(int argc, char** argv) {
    std::set<int> only;
    for (int i = 1; i < argc; ++i) only.insert(std::atoi(argv[i]));
    const Criterion criteria[] = {
        {1, "slab normal consistency", 1.0, slab_normals},
        {2, "gradient check", 60.0, gradients},
        {3, "rendering oracle", 10.0, rendering_oracle},
        {4, "stop-gradient semantics", 5.0, stop_gradient},
        {5, "toy reconstruction", 0.0, reconstruction},
        {6, "ablation ordering", 0.0, ablations},
        {7, "schedules and adam constants", 0.0, schedules},
        {8, "determinism", 0.0, determinism},
    };
    int failed = 0;
    for (const Criterion& c : criteria) {
        if (!only.empty() && !only.count(c.id)) continue;
        const auto t0 = std::chrono::steady_clock::now();
        Verdict v;
        try {
            v = c.check();
        } catch (const std::exception& e) {
            v = {false, std::string("error: ") + e.what()};
        }
        const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        if (c.time_limit > 0 && s > c.time_limit) {
            v.pass = false;
            v.detail += fmt("; over the %.0f s limit", c.time_limit);
        }
        failed += !v.pass;
        std::printf("[%s] %d %s: %s (%.2f s)\n", v.pass ? "PASS" : "FAIL", c.id, c.name, v.detail.c_str(), s);
        std::fflush(stdout);
    }
    fs::remove_all(fs::temp_directory_path() / "normalfield_acceptance");
    return failed == 0 ? 0 : 1;
}
