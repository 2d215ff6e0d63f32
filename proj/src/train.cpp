#include "normalfield/train.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <random>
#include <sstream>

#include "normalfield/metrics.hpp"
#include "normalfield/parallel.hpp"

namespace nf {

double predicted_normal_loss(std::span<const double> weights, std::span<const Vec3> n_pred,
                             std::span<const MaybeNormal> n_target, double lambda_n) {
    PlainOps ops;
    std::vector<std::array<double, 3>> p;
    std::vector<std::optional<std::array<double, 3>>> t;
    for (const Vec3& v : n_pred) p.push_back({v.x, v.y, v.z});
    for (const MaybeNormal& v : n_target) {
        if (v)
            t.push_back(std::array<double, 3>{v->x, v->y, v->z});
        else
            t.push_back(std::nullopt);
    }
    const auto loss = predicted_normal_loss<PlainOps>(ops, weights, p, t, lambda_n);
    return loss.value_or(0.0);
}

// ---------------------------------------------------------------------------

double log_decay(long k, double start, double end, long total) {
    if (!(start > 0.0) || !(end > 0.0)) throw InvalidInput("log_decay: endpoints must be positive");
    if (total <= 0) throw InvalidInput("log_decay: total must be positive");
    const double u = static_cast<double>(std::clamp(k, 0L, total)) / static_cast<double>(total);
    return std::exp(std::log(start) + u * (std::log(end) - std::log(start)));
}

void adam_step(ParamBlock& block, double lr, const AdamConfig& adam, long k) {
    const double c1 = 1.0 - std::pow(adam.beta1, static_cast<double>(k));
    const double c2 = 1.0 - std::pow(adam.beta2, static_cast<double>(k));
    for (std::size_t i = 0; i < block.values.size(); ++i) {
        const double g = block.adjoints[i];
        block.m[i] = adam.beta1 * block.m[i] + (1.0 - adam.beta1) * g;
        block.v[i] = adam.beta2 * block.v[i] + (1.0 - adam.beta2) * g * g;
        const double mhat = block.m[i] / c1, vhat = block.v[i] / c2;
        block.values[i] -= lr * mhat / (std::sqrt(vhat) + adam.eps);
        block.adjoints[i] = 0.0;
    }
}

double add_smoothness(std::span<const double> values, std::span<double> adjoints, const GridShape& shape,
                      int channels, double weight) {
    const std::size_t n = shape.vertex_count() * static_cast<std::size_t>(channels);
    if (values.size() != n || adjoints.size() != n) throw InvalidInput("add_smoothness: block size does not match grid");
    if (weight == 0.0) return 0.0;
    const auto [nx, ny, nz] = shape.res;
    const std::size_t stride[3] = {1, static_cast<std::size_t>(nx), static_cast<std::size_t>(nx) * ny};
    const std::size_t pairs = static_cast<std::size_t>(channels) *
                              ((nx - 1) * ny * nz + nx * (ny - 1) * nz + nx * ny * (nz - 1));
    if (pairs == 0) return 0.0;
    const double scale = weight / static_cast<double>(pairs);
    double sum = 0.0;
    for (int k = 0; k < nz; ++k)
        for (int j = 0; j < ny; ++j)
            for (int i = 0; i < nx; ++i) {
                const std::size_t v = shape.vertex_index(i, j, k);
                const bool has[3] = {i + 1 < nx, j + 1 < ny, k + 1 < nz};
                for (int a = 0; a < 3; ++a) {
                    if (!has[a]) continue;
                    const std::size_t u = v + stride[a];
                    for (int c = 0; c < channels; ++c) {
                        const std::size_t p = v * channels + c, q = u * channels + c;
                        const double d = values[q] - values[p];
                        sum += d * d;
                        adjoints[q] += 2.0 * scale * d;
                        adjoints[p] -= 2.0 * scale * d;
                    }
                }
            }
    return scale * sum;
}

// ---------------------------------------------------------------------------
// Configuration
// ---------------------------------------------------------------------------

Supervision parse_supervision(const std::string& name) {
    if (name == "transmittance") return Supervision::transmittance;
    if (name == "density") return Supervision::density;
    if (name == "none") return Supervision::none;
    throw InvalidInput("unknown supervision '" + name + "' (expected transmittance, density or none)");
}

std::string to_string(Supervision s) {
    switch (s) {
        case Supervision::transmittance: return "transmittance";
        case Supervision::density: return "density";
        case Supervision::none: return "none";
    }
    return "unknown";
}

void TrainConfig::validate() const {
    auto need = [](bool ok, const char* what) {
        if (!ok) throw InvalidInput(std::string("config: ") + what);
    };
    need(iterations >= 1, "iterations must be at least 1");
    need(rays_per_batch >= 1, "rays_per_batch must be at least 1");
    need(samples_per_ray >= 2, "samples_per_ray must be at least 2");
    need(lr_grid.start > 0 && lr_grid.end > 0 && lr_env.start > 0 && lr_env.end > 0,
         "learning rates must be positive");
    need(lambda_n.start > 0 && lambda_n.start <= 1 && lambda_n.end > 0 && lambda_n.end <= 1 && lambda_n.steps >= 1,
         "lambda_n_schedule needs endpoints in (0, 1] and a positive length");
    need(normal_weight.start > 0 && normal_weight.end > 0 && normal_weight.steps >= 1,
         "normal_loss_weight needs positive endpoints and length");
    need(adam.beta1 >= 0 && adam.beta1 < 1 && adam.beta2 >= 0 && adam.beta2 < 1 && adam.eps >= 0,
         "adam constants out of range");
    need(grid_resolution >= 2, "grid_resolution must be at least 2");
    need(sh_degree >= 0 && sh_degree <= kMaxShDegree, "sh_degree must lie in [0, 3]");
    need(grid_l2 >= 0, "grid_l2 must be non-negative");
    need(tv_density >= 0 && tv_appearance >= 0, "smoothness weights must be non-negative");
    need(probe_every >= 0, "probe_every must be non-negative");
    need(chunk_rays >= 1, "chunk_rays must be at least 1");
    need(min_transmittance >= 0 && min_transmittance < 1, "min_transmittance must lie in [0, 1)");
}

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

struct ConfigValue {
    std::vector<std::string> items;  // one entry for scalars
    bool array = false;
};

ConfigValue parse_value(const std::string& text, const std::string& where) {
    ConfigValue v;
    std::string t = trim(text);
    if (t.empty()) throw InvalidInput(where + ": missing value");
    if (t.front() == '[') {
        if (t.back() != ']') throw InvalidInput(where + ": unterminated array");
        v.array = true;
        std::stringstream ss(t.substr(1, t.size() - 2));
        std::string item;
        while (std::getline(ss, item, ',')) {
            item = trim(item);
            if (!item.empty()) v.items.push_back(item);
        }
        return v;
    }
    if (t.front() == '"') {
        if (t.size() < 2 || t.back() != '"') throw InvalidInput(where + ": unterminated string");
        t = t.substr(1, t.size() - 2);
    }
    v.items.push_back(t);
    return v;
}

double to_double(const std::string& s, const std::string& where) {
    double x = 0.0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), x);
    if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(x))
        throw InvalidInput(where + ": '" + s + "' is not a number");
    return x;
}

long long to_integer(const std::string& s, const std::string& where) {
    long long x = 0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), x);
    if (ec != std::errc() || ptr != s.data() + s.size()) throw InvalidInput(where + ": '" + s + "' is not an integer");
    return x;
}

std::vector<double> numbers(const ConfigValue& v, std::size_t n, const std::string& where) {
    if (!v.array || v.items.size() != n)
        throw InvalidInput(where + ": expected an array of " + std::to_string(n) + " numbers");
    std::vector<double> out;
    for (const auto& s : v.items) out.push_back(to_double(s, where));
    return out;
}

double scalar(const ConfigValue& v, const std::string& where) {
    if (v.array) throw InvalidInput(where + ": expected a number");
    return to_double(v.items[0], where);
}

int integer(const ConfigValue& v, const std::string& where) {
    if (v.array) throw InvalidInput(where + ": expected an integer");
    return static_cast<int>(to_integer(v.items[0], where));
}

void set_value(TrainConfig& cfg, const std::string& key, const ConfigValue& v, const std::string& where) {
    if (key == "iterations") cfg.iterations = integer(v, where);
    else if (key == "rays_per_batch") cfg.rays_per_batch = integer(v, where);
    else if (key == "samples_per_ray") cfg.samples_per_ray = integer(v, where);
    else if (key == "lr_grid") {
        const auto x = numbers(v, 2, where);
        cfg.lr_grid = {x[0], x[1]};
    } else if (key == "lr_env") {
        const auto x = numbers(v, 2, where);
        cfg.lr_env = {x[0], x[1]};
    } else if (key == "lambda_n_schedule") {
        const auto x = numbers(v, 3, where);
        cfg.lambda_n = {x[0], x[1], static_cast<int>(x[2])};
    } else if (key == "normal_loss_weight") {
        const auto x = numbers(v, 3, where);
        cfg.normal_weight = {x[0], x[1], static_cast<int>(x[2])};
    } else if (key == "adam_beta1") cfg.adam.beta1 = scalar(v, where);
    else if (key == "adam_beta2") cfg.adam.beta2 = scalar(v, where);
    else if (key == "adam_eps") cfg.adam.eps = scalar(v, where);
    else if (key == "seed") {
        if (v.array) throw InvalidInput(where + ": expected an integer");
        cfg.seed = static_cast<std::uint64_t>(to_integer(v.items[0], where));
    } else if (key == "background") {
        const auto x = numbers(v, 3, where);
        cfg.background = {x[0], x[1], x[2]};
    } else if (key == "supervision") {
        if (v.array) throw InvalidInput(where + ": expected a string");
        cfg.supervision = parse_supervision(v.items[0]);
    } else if (key == "grid_resolution") cfg.grid_resolution = integer(v, where);
    else if (key == "sh_degree") cfg.sh_degree = integer(v, where);
    else if (key == "grid_l2") cfg.grid_l2 = scalar(v, where);
    else if (key == "tv_density") cfg.tv_density = scalar(v, where);
    else if (key == "tv_appearance") cfg.tv_appearance = scalar(v, where);
    else if (key == "probe_every") cfg.probe_every = integer(v, where);
    else if (key == "chunk_rays") cfg.chunk_rays = integer(v, where);
    else if (key == "min_transmittance") cfg.min_transmittance = scalar(v, where);
    else throw InvalidInput(where + ": unknown key '" + key + "'");
}

void apply_line(TrainConfig& cfg, const std::string& raw, const std::string& where) {
    std::string line = raw;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        if (line[i] == '"') quoted = !quoted;
        if (line[i] == '#' && !quoted) {
            line.resize(i);
            break;
        }
    }
    line = trim(line);
    if (line.empty()) return;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw InvalidInput(where + ": expected key = value");
    set_value(cfg, trim(line.substr(0, eq)), parse_value(line.substr(eq + 1), where), where);
}

// Shortest text that parses back to the same double.
std::string num(double x) {
    char buf[40];
    const auto res = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, res.ptr);
}

}  // namespace

void apply_config_text(TrainConfig& cfg, const std::string& text, const std::string& source) {
    std::stringstream ss(text);
    std::string line;
    int n = 0;
    while (std::getline(ss, line)) apply_line(cfg, line, source + ":" + std::to_string(++n));
}

void apply_config_file(TrainConfig& cfg, const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open config " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    apply_config_text(cfg, ss.str(), path.string());
}

void apply_config_override(TrainConfig& cfg, const std::string& assignment) {
    apply_line(cfg, assignment, "--set " + assignment);
}

std::string to_config_text(const TrainConfig& cfg) {
    std::ostringstream o;
    o << "iterations = " << cfg.iterations << "\n";
    o << "rays_per_batch = " << cfg.rays_per_batch << "\n";
    o << "samples_per_ray = " << cfg.samples_per_ray << "\n";
    o << "lr_grid = [" << num(cfg.lr_grid.start) << ", " << num(cfg.lr_grid.end) << "]\n";
    o << "lr_env = [" << num(cfg.lr_env.start) << ", " << num(cfg.lr_env.end) << "]\n";
    o << "lambda_n_schedule = [" << num(cfg.lambda_n.start) << ", " << num(cfg.lambda_n.end) << ", "
      << cfg.lambda_n.steps << "]\n";
    o << "normal_loss_weight = [" << num(cfg.normal_weight.start) << ", " << num(cfg.normal_weight.end) << ", "
      << cfg.normal_weight.steps << "]\n";
    o << "adam_beta1 = " << num(cfg.adam.beta1) << "\n";
    o << "adam_beta2 = " << num(cfg.adam.beta2) << "\n";
    o << "adam_eps = " << num(cfg.adam.eps) << "\n";
    o << "seed = " << cfg.seed << "\n";
    o << "background = [" << num(cfg.background.x) << ", " << num(cfg.background.y) << ", "
      << num(cfg.background.z) << "]\n";
    o << "supervision = \"" << to_string(cfg.supervision) << "\"\n";
    o << "grid_resolution = " << cfg.grid_resolution << "\n";
    o << "sh_degree = " << cfg.sh_degree << "\n";
    o << "grid_l2 = " << num(cfg.grid_l2) << "\n";
    o << "tv_density = " << num(cfg.tv_density) << "\n";
    o << "tv_appearance = " << num(cfg.tv_appearance) << "\n";
    o << "probe_every = " << cfg.probe_every << "\n";
    o << "chunk_rays = " << cfg.chunk_rays << "\n";
    o << "min_transmittance = " << num(cfg.min_transmittance) << "\n";
    return o.str();
}

// ---------------------------------------------------------------------------
// Batch evaluation
// ---------------------------------------------------------------------------

namespace {

struct ChunkResult {
    double color = 0.0;
    double normal = 0.0;
    std::vector<ParamContribution> contributions;
};

// With `direct` set, gradients go straight into that buffer instead of the
// chunk's contribution list; the order of additions is the same.
void evaluate_chunk(const SceneFields& fields, const FieldViews& views, std::span<const RayTarget> rays,
                    const LossSettings& s, bool gradients, double seed, Tape& tape, ChunkResult& out,
                    std::span<double> direct = {}) {
    tape.clear();
    TraceRequest request;
    request.transmittance = s.supervision == Supervision::transmittance;
    request.density = s.supervision == Supervision::density;
    request.predicted = s.supervision != Supervision::none;
    request.min_transmittance = s.min_transmittance;

    std::optional<Var> total;
    for (const RayTarget& r : rays) {
        const auto samples = samples_for_ray(fields.shape(), r.ray, s.render, r.pixel);
        if (!samples) {
            const Vec3 c = tone_map(s.render.background);
            for (int a = 0; a < 3; ++a) out.color += (c[a] - r.color[a]) * (c[a] - r.color[a]);
            continue;
        }
        const TracedRay<Tape> tr = trace_ray(tape, views, r.ray, *samples, s.render.background, request);
        Var loss = color_loss(tape, tr.color, r.color);
        out.color += tape.value(loss);
        if (request.predicted) {
            const auto& target = request.transmittance ? tr.n_trans : tr.n_density;
            const auto ln = predicted_normal_loss<Tape>(tape, tr.weights, tr.n_pred, target, s.lambda_n);
            if (ln) {
                out.normal += tape.value(*ln);
                loss = tape.add(loss, tape.mul(*ln, s.normal_weight));
            }
        }
        total = total ? tape.add(*total, loss) : loss;
    }
    if (!gradients || !total) return;
    if (!direct.empty())
        tape.backward_into(*total, direct, seed);
    else
        tape.backward(*total, seed, out.contributions);
}

}  // namespace

BatchLoss evaluate_batch(const SceneFields& fields, const ParamSet& params, std::span<const RayTarget> rays,
                         const LossSettings& settings, std::span<double> adjoints) {
    if (rays.empty()) throw InvalidInput("evaluate_batch: no rays");
    if (settings.chunk_rays < 1) throw InvalidInput("evaluate_batch: chunk_rays must be positive");
    const bool gradients = !adjoints.empty();
    if (gradients && adjoints.size() != params.size())
        throw InvalidInput("evaluate_batch: adjoint buffer does not match the parameter set");
    const FieldViews views = make_views(fields, &params);
    const std::size_t chunk = static_cast<std::size_t>(settings.chunk_rays);
    const std::size_t n_chunks = (rays.size() + chunk - 1) / chunk;
    const double seed = 1.0 / static_cast<double>(rays.size());

    // Chunks run in waves of one per worker to bound the memory held in
    // contribution lists; each wave is merged in chunk order.
    const std::size_t wave = static_cast<std::size_t>(std::max(1, worker_count()));
    BatchLoss loss;
    if (wave == 1) {
        thread_local Tape tape;
        for (std::size_t c = 0; c < n_chunks; ++c) {
            const std::size_t begin = c * chunk, end = std::min(rays.size(), begin + chunk);
            ChunkResult r;
            evaluate_chunk(fields, views, rays.subspan(begin, end - begin), settings, gradients, seed, tape, r,
                           adjoints);
            loss.color += r.color;
            loss.normal += r.normal;
        }
        loss.color /= static_cast<double>(rays.size());
        loss.normal /= static_cast<double>(rays.size());
        loss.total = loss.color + settings.normal_weight * loss.normal;
        return loss;
    }
    std::vector<ChunkResult> results(std::min(wave, n_chunks));
    for (std::size_t first = 0; first < n_chunks; first += wave) {
        const std::size_t count = std::min(wave, n_chunks - first);
        parallel_for(count, [&](std::size_t j) {
            thread_local Tape tape;
            const std::size_t c = first + j;
            const std::size_t begin = c * chunk, end = std::min(rays.size(), begin + chunk);
            results[j] = ChunkResult{};
            evaluate_chunk(fields, views, rays.subspan(begin, end - begin), settings, gradients, seed, tape,
                           results[j]);
        });
        for (std::size_t j = 0; j < count; ++j) {
            loss.color += results[j].color;
            loss.normal += results[j].normal;
            if (gradients) accumulate(results[j].contributions, adjoints);
        }
    }
    loss.color /= static_cast<double>(rays.size());
    loss.normal /= static_cast<double>(rays.size());
    loss.total = loss.color + settings.normal_weight * loss.normal;
    return loss;
}

// ---------------------------------------------------------------------------
// Training loop
// ---------------------------------------------------------------------------

TrainData train_data_from(const Dataset& dataset) {
    TrainData d;
    d.box.lo = dataset.params.box_lo;
    d.box.hi = dataset.params.box_hi;
    for (const Frame* f : dataset.split(false)) d.views.push_back({f->camera, dequantize(f->rgb)});
    const auto test = dataset.split(true);
    if (!test.empty())
        d.probe = TrainView{test.front()->camera, dequantize(test.front()->rgb)};
    else if (!d.views.empty())
        d.probe = d.views.front();
    return d;
}

Trainer::Trainer(TrainData data, TrainConfig cfg) : data_(std::move(data)), cfg_(cfg) {
    cfg_.validate();
    if (data_.views.size() < 2) throw InvalidInput("training needs at least two views");
    for (const TrainView& v : data_.views) {
        v.camera.validate();
        if (v.target.width != v.camera.width || v.target.height != v.camera.height || v.target.channels != 3)
            throw InvalidInput("training target does not match its camera");
    }
    data_.box.res = {cfg_.grid_resolution, cfg_.grid_resolution, cfg_.grid_resolution};
    data_.box.validate();
    fields_ = SceneFields::random_init(data_.box, cfg_.sh_degree, mix_seed(cfg_.seed, 0x1f1e1d, 0));
    params_ = fields_.make_params();
}

std::vector<RayTarget> Trainer::sample_batch() {
    std::mt19937_64 rng(mix_seed(cfg_.seed, static_cast<std::uint64_t>(iter_), 0xba7c4));
    std::uniform_int_distribution<std::size_t> pick_view(0, data_.views.size() - 1);
    std::vector<RayTarget> batch(static_cast<std::size_t>(cfg_.rays_per_batch));
    for (RayTarget& r : batch) {
        const std::size_t v = pick_view(rng);
        const TrainView& view = data_.views[v];
        const int w = view.camera.width, h = view.camera.height;
        const int px = std::uniform_int_distribution<int>(0, w - 1)(rng);
        const int py = std::uniform_int_distribution<int>(0, h - 1)(rng);
        r.ray = generate_ray(view.camera, px, py);
        for (int c = 0; c < 3; ++c) r.color[c] = view.target.at(px, py, c);
        r.pixel = (static_cast<std::uint64_t>(v) * h + py) * w + px;
    }
    return batch;
}

double Trainer::probe_psnr() const {
    RenderConfig rc;
    rc.samples = cfg_.samples_per_ray;
    rc.background = cfg_.background;
    rc.deterministic = true;
    const RenderedImage img = render_image(fields_, data_.probe->camera, rc);
    return psnr(to_image(img, RenderMode::color), data_.probe->target);
}

LogRow Trainer::step() {
    if (done()) throw InvalidInput("training already finished");
    const long k = iter_;
    LossSettings s;
    s.lambda_n = cfg_.lambda_at(k);
    s.normal_weight = cfg_.supervision == Supervision::none ? 0.0 : cfg_.normal_weight_at(k);
    s.supervision = cfg_.supervision;
    s.render.samples = cfg_.samples_per_ray;
    s.render.background = cfg_.background;
    s.render.seed = cfg_.seed;
    s.render.iteration = static_cast<std::uint64_t>(k);
    s.chunk_rays = cfg_.chunk_rays;
    s.min_transmittance = cfg_.min_transmittance;

    const std::vector<RayTarget> batch = sample_batch();
    const BatchLoss loss = evaluate_batch(fields_, params_, batch, s, params_.adjoints());
    if (!std::isfinite(loss.total)) {
        params_.zero_adjoints();
        throw NumericalError("training diverged at iteration " + std::to_string(k) + ": loss_c=" +
                             std::to_string(loss.color) + " loss_n=" + std::to_string(loss.normal));
    }

    const double lr_grid = cfg_.lr_grid_at(k), lr_env = cfg_.lr_env_at(k);
    for (ParamBlock& b : params_.blocks()) {
        const bool env = b.name == "env_sh";
        if (!env && cfg_.grid_l2 > 0.0)
            for (std::size_t i = 0; i < b.values.size(); ++i) b.adjoints[i] += 2.0 * cfg_.grid_l2 * b.values[i];
        if (!env) {
            const bool density = b.name == fields_.density.name();
            add_smoothness(b.values, b.adjoints, fields_.shape(), density ? 1 : 3,
                           density ? cfg_.tv_density : cfg_.tv_appearance);
        }
        adam_step(b, env ? lr_env : lr_grid, cfg_.adam, k + 1);
    }
    ++iter_;

    LogRow row;
    row.iter = k;
    row.loss_c = loss.color;
    row.loss_n = loss.normal;
    row.lambda_n = s.lambda_n;
    row.lr_grid = lr_grid;
    if (data_.probe && cfg_.probe_every > 0 && (iter_ % cfg_.probe_every == 0 || done())) row.psnr_probe = probe_psnr();
    log_.push_back(row);
    return row;
}

SceneFields train(const TrainData& data, const TrainConfig& cfg, std::vector<LogRow>* log,
                  const std::function<void(const LogRow&)>& on_row) {
    Trainer t(data, cfg);
    while (!t.done()) {
        const LogRow row = t.step();
        if (on_row) on_row(row);
    }
    if (log) *log = t.log();
    return t.fields();
}

void write_log_csv(const std::filesystem::path& path, std::span<const LogRow> rows) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write " + path.string());
    out << "iter,loss_c,loss_n,lambda_n,lr_grid,psnr_probe\n";
    char buf[256];
    for (const LogRow& r : rows) {
        std::snprintf(buf, sizeof buf, "%ld,%.9g,%.9g,%.9g,%.9g,", r.iter, r.loss_c, r.loss_n, r.lambda_n, r.lr_grid);
        out << buf;
        if (r.psnr_probe) {
            std::snprintf(buf, sizeof buf, "%.6f", *r.psnr_probe);
            out << buf;
        }
        out << "\n";
    }
}

}  // namespace nf
