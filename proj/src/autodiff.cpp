#include "normalfield/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include "normalfield/error.hpp"
#include "normalfield/sh.hpp"

namespace nf {

void ParamSet::add(std::string name, std::span<double> values) {
    for (const auto& b : blocks_)
        if (b.name == name) throw InvalidInput("duplicate parameter block '" + name + "'");
    ParamBlock block;
    block.name = std::move(name);
    block.values = values;
    block.offset = static_cast<std::uint32_t>(adjoints_.size());
    block.m.assign(values.size(), 0.0);
    block.v.assign(values.size(), 0.0);
    blocks_.push_back(std::move(block));
    adjoints_.resize(adjoints_.size() + values.size(), 0.0);
    for (auto& b : blocks_) b.adjoints = std::span<double>(adjoints_).subspan(b.offset, b.values.size());
}

ParamBlock& ParamSet::block(std::string_view name) {
    for (auto& b : blocks_)
        if (b.name == name) return b;
    throw InvalidInput("no parameter block named '" + std::string(name) + "'");
}

const ParamBlock& ParamSet::block(std::string_view name) const {
    for (const auto& b : blocks_)
        if (b.name == name) return b;
    throw InvalidInput("no parameter block named '" + std::string(name) + "'");
}

void ParamSet::zero_adjoints() { std::fill(adjoints_.begin(), adjoints_.end(), 0.0); }

ParamView ParamSet::view(std::string_view name, int channels) const {
    const ParamBlock& b = block(name);
    return ParamView{b.values, b.offset, channels};
}

// ---------------------------------------------------------------------------

Tape::Tape() { starts_.push_back(0); }

void Tape::clear() {
    values_.clear();
    edges_.clear();
    starts_.assign(1, 0);
}

Var Tape::push(double value) {
    values_.push_back(value);
    return Var{static_cast<std::uint32_t>(values_.size() - 1)};
}

Var Tape::constant(double c) {
    push(c);
    return finish();
}

Var Tape::stop_gradient(Var v) { return constant(value(v)); }

Var Tape::add(Var a, Var b) {
    push(value(a) + value(b));
    edge(a, 1.0);
    edge(b, 1.0);
    return finish();
}

Var Tape::add(Var a, double c) {
    push(value(a) + c);
    edge(a, 1.0);
    return finish();
}

Var Tape::sub(Var a, Var b) {
    push(value(a) - value(b));
    edge(a, 1.0);
    edge(b, -1.0);
    return finish();
}

Var Tape::sub(double c, Var a) {
    push(c - value(a));
    edge(a, -1.0);
    return finish();
}

Var Tape::mul(Var a, Var b) {
    const double va = value(a), vb = value(b);
    push(va * vb);
    edge(a, vb);
    edge(b, va);
    return finish();
}

Var Tape::mul(Var a, double c) {
    push(value(a) * c);
    edge(a, c);
    return finish();
}

Var Tape::div(Var a, Var b) {
    const double va = value(a), vb = value(b);
    push(va / vb);
    edge(a, 1.0 / vb);
    edge(b, -va / (vb * vb));
    return finish();
}

Var Tape::exp(Var a) {
    const double e = std::exp(value(a));
    push(e);
    edge(a, e);
    return finish();
}

Var Tape::softplus(Var a) {
    const double x = value(a);
    push(nf::softplus(x));
    edge(a, nf::sigmoid(x));
    return finish();
}

Var Tape::sigmoid(Var a) {
    const double s = nf::sigmoid(value(a));
    push(s);
    edge(a, s * (1.0 - s));
    return finish();
}

Var Tape::pow(Var a, double p) {
    const double x = value(a);
    push(std::pow(x, p));
    edge(a, p * std::pow(x, p - 1.0));
    return finish();
}

Var Tape::clamp(Var a, double lo, double hi) {
    const double x = value(a);
    push(std::clamp(x, lo, hi));
    edge(a, (x > lo && x < hi) ? 1.0 : 0.0);
    return finish();
}

Var Tape::dot(const Var3& a, const Var3& b) {
    double s = 0.0;
    for (int i = 0; i < 3; ++i) s += value(a[i]) * value(b[i]);
    push(s);
    for (int i = 0; i < 3; ++i) {
        edge(a[i], value(b[i]));
        edge(b[i], value(a[i]));
    }
    return finish();
}

Var3 Tape::normalize(const Var3& v, double eps) {
    const double x[3] = {value(v[0]), value(v[1]), value(v[2])};
    const double s = std::sqrt(x[0] * x[0] + x[1] * x[1] + x[2] * x[2] + eps);
    const double inv = 1.0 / s, inv3 = inv * inv * inv;
    Var3 out;
    for (int i = 0; i < 3; ++i) {
        push(x[i] * inv);
        for (int j = 0; j < 3; ++j) edge(v[j], (i == j ? inv : 0.0) - x[i] * x[j] * inv3);
        out[i] = finish();
    }
    return out;
}

Var Tape::gather(const ParamView& grid, const CellLookup& lk, int channel) {
    if (lk.outside && grid.empty_outside) return constant(grid.empty_value);
    double s = 0.0;
    for (int c = 0; c < 8; ++c) s += lk.weight[c] * grid.values[lk.vertex[c] * grid.channels + channel];
    push(s);
    for (int c = 0; c < 8; ++c) param_edge(grid.offset + lk.vertex[c] * grid.channels + channel, lk.weight[c]);
    return finish();
}

Var3 Tape::gather_gradient(const ParamView& grid, const CellLookup& lk, int channel) {
    Var3 out;
    if (lk.outside && grid.empty_outside) {
        for (auto& o : out) o = constant(0.0);
        return out;
    }
    for (int a = 0; a < 3; ++a) {
        double s = 0.0;
        for (int c = 0; c < 8; ++c) s += lk.dweight[c][a] * grid.values[lk.vertex[c] * grid.channels + channel];
        push(s);
        for (int c = 0; c < 8; ++c)
            param_edge(grid.offset + lk.vertex[c] * grid.channels + channel, lk.dweight[c][a]);
        out[a] = finish();
    }
    return out;
}

Var3 Tape::sh_eval(const ParamView& coeffs, int degree, const Var3& dir) {
    const ShBasis basis = sh_basis(degree, {value(dir[0]), value(dir[1]), value(dir[2])});
    const int n = sh_coeff_count(degree);
    Var3 out;
    for (int ch = 0; ch < 3; ++ch) {
        double s = 0.0;
        Vec3 g;
        for (int k = 0; k < n; ++k) {
            const double c = coeffs.values[k * 3 + ch];
            s += c * basis.value[k];
            g += basis.grad[k] * c;
        }
        push(s);
        for (int k = 0; k < n; ++k) param_edge(coeffs.offset + k * 3 + ch, basis.value[k]);
        for (int a = 0; a < 3; ++a) edge(dir[a], g[a]);
        out[ch] = finish();
    }
    return out;
}

std::pair<Var, Var> Tape::composite_step(Var transmittance, Var sigma, double delta) {
    const double t = value(transmittance), s = value(sigma);
    const double decay = std::exp(-s * delta);
    const double alpha = -std::expm1(-s * delta);
    push(t * alpha);
    edge(transmittance, alpha);
    edge(sigma, t * delta * decay);
    const Var w = finish();
    push(t * decay);
    edge(transmittance, decay);
    edge(sigma, -t * delta * decay);
    const Var next = finish();
    return {w, next};
}

std::vector<Var> Tape::record(Primitive op, std::span<const Var> in, std::span<const double> attrs) {
    auto need = [&](std::size_t inputs, std::size_t attributes, const char* name) {
        if (in.size() != inputs || attrs.size() != attributes)
            throw InvalidInput(std::string("record: wrong arity for primitive ") + name);
    };
    switch (op) {
        case Primitive::add: need(2, 0, "add"); return {add(in[0], in[1])};
        case Primitive::mul: need(2, 0, "mul"); return {mul(in[0], in[1])};
        case Primitive::div: need(2, 0, "div"); return {div(in[0], in[1])};
        case Primitive::exp: need(1, 0, "exp"); return {exp(in[0])};
        case Primitive::softplus: need(1, 0, "softplus"); return {softplus(in[0])};
        case Primitive::sigmoid: need(1, 0, "sigmoid"); return {sigmoid(in[0])};
        case Primitive::power: need(1, 1, "power"); return {pow(in[0], attrs[0])};
        case Primitive::dot:
            need(6, 0, "dot");
            return {dot({in[0], in[1], in[2]}, {in[3], in[4], in[5]})};
        case Primitive::normalize_eps: {
            need(3, 1, "normalize_eps");
            const Var3 n = normalize({in[0], in[1], in[2]}, attrs[0]);
            return {n.begin(), n.end()};
        }
        case Primitive::composite_step: {
            need(2, 1, "composite_step");
            auto [w, next] = composite_step(in[0], in[1], attrs[0]);
            return {w, next};
        }
        case Primitive::clamp: need(1, 2, "clamp"); return {clamp(in[0], attrs[0], attrs[1])};
        case Primitive::sh_eval:
        case Primitive::trilinear_gather:
            throw InvalidInput("record: primitive reads a parameter block; use sh_eval()/gather()");
    }
    throw InvalidInput("record: unknown primitive");
}

void Tape::backward(Var loss, double seed, std::vector<ParamContribution>& out) {
    const std::size_t n = values_.size();
    if (loss.id >= n) throw InvalidInput("backward: loss handle is not on this tape");
    adjoints_.assign(n, 0.0);
    adjoints_[loss.id] = seed;
    for (std::size_t i = loss.id + 1; i-- > 0;) {
        const double a = adjoints_[i];
        if (a == 0.0) continue;
        for (std::uint32_t e = starts_[i]; e < starts_[i + 1]; ++e) {
            const Edge& ed = edges_[e];
            if (ed.target & kParamBit)
                out.push_back({ed.target & ~kParamBit, a * ed.partial});
            else
                adjoints_[ed.target] += a * ed.partial;
        }
    }
}

void Tape::backward_into(Var loss, std::span<double> param_adjoints, double seed) {
    const std::size_t n = values_.size();
    if (loss.id >= n) throw InvalidInput("backward: loss handle is not on this tape");
    adjoints_.assign(n, 0.0);
    adjoints_[loss.id] = seed;
    for (std::size_t i = loss.id + 1; i-- > 0;) {
        const double a = adjoints_[i];
        if (a == 0.0) continue;
        for (std::uint32_t e = starts_[i]; e < starts_[i + 1]; ++e) {
            const Edge& ed = edges_[e];
            if (ed.target & kParamBit)
                param_adjoints[ed.target & ~kParamBit] += a * ed.partial;
            else
                adjoints_[ed.target] += a * ed.partial;
        }
    }
}

void Tape::backward(std::span<const Var> loss, std::span<double> param_adjoints, double seed) {
    if (loss.size() != 1) throw InvalidInput("backward: loss must be a single scalar");
    backward(loss[0], param_adjoints, seed);
}

void Tape::backward(Var loss, std::span<double> param_adjoints, double seed) {
    std::vector<ParamContribution> contributions;
    backward(loss, seed, contributions);
    accumulate(contributions, param_adjoints);
}

void accumulate(std::span<const ParamContribution> contributions, std::span<double> adjoints) {
    for (const auto& c : contributions) adjoints[c.index] += c.value;
}

// ---------------------------------------------------------------------------

std::array<double, 3> PlainOps::normalize(const std::array<double, 3>& v, double eps) const {
    const double s = std::sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2] + eps);
    return {v[0] / s, v[1] / s, v[2] / s};
}

double PlainOps::gather(const ParamView& grid, const CellLookup& lk, int channel) const {
    if (lk.outside && grid.empty_outside) return grid.empty_value;
    double s = 0.0;
    for (int c = 0; c < 8; ++c) s += lk.weight[c] * grid.values[lk.vertex[c] * grid.channels + channel];
    return s;
}

std::array<double, 3> PlainOps::gather_gradient(const ParamView& grid, const CellLookup& lk, int channel) const {
    std::array<double, 3> g{};
    if (lk.outside && grid.empty_outside) return g;
    for (int c = 0; c < 8; ++c) {
        const double v = grid.values[lk.vertex[c] * grid.channels + channel];
        for (int a = 0; a < 3; ++a) g[a] += lk.dweight[c][a] * v;
    }
    return g;
}

std::array<double, 3> PlainOps::sh_eval(const ParamView& coeffs, int degree, const std::array<double, 3>& dir) const {
    const ShBasis basis = sh_basis(degree, {dir[0], dir[1], dir[2]});
    const int n = sh_coeff_count(degree);
    std::array<double, 3> out{};
    for (int k = 0; k < n; ++k)
        for (int ch = 0; ch < 3; ++ch) out[ch] += coeffs.values[k * 3 + ch] * basis.value[k];
    return out;
}

std::pair<double, double> PlainOps::composite_step(double transmittance, double sigma, double delta) const {
    return {transmittance * -std::expm1(-sigma * delta), transmittance * std::exp(-sigma * delta)};
}

// ---------------------------------------------------------------------------

FdResult fd_check(const std::function<double()>& f, std::span<double> x, std::span<const double> analytic,
                  const FdOptions& options) {
    if (x.size() != analytic.size()) throw InvalidInput("fd_check: gradient size does not match parameters");
    std::vector<std::size_t> coords;
    for (std::size_t i = 0; i < x.size(); ++i)
        if (std::abs(analytic[i]) > options.min_abs_grad) coords.push_back(i);
    if (coords.size() > options.max_coords) {
        std::mt19937_64 rng(options.seed);
        std::shuffle(coords.begin(), coords.end(), rng);
        coords.resize(options.max_coords);
        std::sort(coords.begin(), coords.end());
    }
    FdResult r;
    for (const std::size_t i : coords) {
        const double x0 = x[i];
        const double h = options.rel_step * std::max(1.0, std::abs(x0));
        x[i] = x0 + h;
        const double fp = f();
        x[i] = x0 - h;
        const double fm = f();
        x[i] = x0;
        const double numeric = (fp - fm) / (2.0 * h);
        const double err = std::abs(numeric - analytic[i]) / std::max(std::abs(numeric), std::abs(analytic[i]));
        ++r.checked;
        if (!(err <= r.max_rel_err)) {
            r.max_rel_err = std::isfinite(err) ? err : std::numeric_limits<double>::infinity();
            r.worst_index = i;
            r.worst_analytic = analytic[i];
            r.worst_numeric = numeric;
        }
    }
    return r;
}

}  // namespace nf
