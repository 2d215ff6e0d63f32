#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "normalfield/field.hpp"
#include "normalfield/math.hpp"

namespace nf {

// ---------------------------------------------------------------------------
// Parameters
// ---------------------------------------------------------------------------

/// A named slice of learnable values. Values are owned by the model; adjoints
/// are a slice of the owning ParamSet's flat buffer; m and v hold Adam state.
struct ParamBlock {
    std::string name;
    std::span<double> values;
    std::span<double> adjoints;
    std::vector<double> m;
    std::vector<double> v;
    std::uint32_t offset = 0;  // position in the global parameter index space
};

/// Read-only access to a parameter block from inside a differentiable pipeline.
struct ParamView {
    std::span<const double> values;
    std::uint32_t offset = 0;
    int channels = 1;
    bool empty_outside = false;
    double empty_value = 0.0;
};

class ParamSet {
  public:
    ParamSet() = default;
    ParamSet(const ParamSet&) = delete;
    ParamSet& operator=(const ParamSet&) = delete;
    ParamSet(ParamSet&&) = default;
    ParamSet& operator=(ParamSet&&) = default;

    void add(std::string name, std::span<double> values);

    std::span<ParamBlock> blocks() { return blocks_; }
    std::span<const ParamBlock> blocks() const { return blocks_; }
    ParamBlock& block(std::string_view name);
    const ParamBlock& block(std::string_view name) const;

    std::span<double> adjoints() { return adjoints_; }
    std::span<const double> adjoints() const { return adjoints_; }
    std::size_t size() const { return adjoints_.size(); }
    void zero_adjoints();

    ParamView view(std::string_view name, int channels) const;

  private:
    std::vector<ParamBlock> blocks_;
    std::vector<double> adjoints_;
};

// ---------------------------------------------------------------------------
// Reverse-mode tape
// ---------------------------------------------------------------------------

struct Var {
    std::uint32_t id = 0;
};

using Var3 = std::array<Var, 3>;

struct ParamContribution {
    std::uint32_t index = 0;
    double value = 0.0;
};

enum class Primitive {
    add,
    mul,
    div,
    exp,
    softplus,
    sigmoid,
    power,
    dot,
    normalize_eps,
    sh_eval,
    trilinear_gather,
    composite_step,
    clamp,
};

/// Wengert list with local partials. Each node stores its forward value and
/// the partial derivatives with respect to its inputs, which are either
/// earlier nodes or entries of a ParamSet. Nodes are appended in evaluation
/// order, so one reverse sweep visits them in reverse topological order.
class Tape {
  public:
    using Value = Var;

    Tape();

    void clear();
    std::size_t size() const { return values_.size(); }
    std::size_t edge_count() const { return edges_.size(); }

    double value(Var v) const { return values_[v.id]; }
    Var constant(double c);
    /// Same forward value; contributes nothing to its input in the backward pass.
    Var stop_gradient(Var v);

    Var add(Var a, Var b);
    Var add(Var a, double c);
    Var sub(Var a, Var b);
    Var sub(double c, Var a);
    Var mul(Var a, Var b);
    Var mul(Var a, double c);
    Var div(Var a, Var b);
    Var exp(Var a);
    Var softplus(Var a);
    Var sigmoid(Var a);
    Var pow(Var a, double p);
    /// Passes gradient only strictly inside (lo, hi).
    Var clamp(Var a, double lo, double hi);
    Var dot(const Var3& a, const Var3& b);
    /// v / sqrt(|v|^2 + eps).
    Var3 normalize(const Var3& v, double eps);

    Var gather(const ParamView& grid, const CellLookup& lk, int channel);
    Var3 gather_gradient(const ParamView& grid, const CellLookup& lk, int channel);
    /// Sum_k c[k, ch] Y_k(dir) for ch = 0..2, differentiable in c and dir.
    Var3 sh_eval(const ParamView& coeffs, int degree, const Var3& dir);
    /// One quadrature step: (T_i, sigma_i) -> (w_i, T_{i+1}) with
    /// w_i = T_i (1 - exp(-sigma_i delta)), T_{i+1} = T_i exp(-sigma_i delta).
    std::pair<Var, Var> composite_step(Var transmittance, Var sigma, double delta);

    /// Generic entry point for primitives whose inputs are all tape values.
    /// Numeric attributes: power {p}, normalize_eps {eps}, composite_step {delta},
    /// clamp {lo, hi}. Throws InvalidInput on arity mismatch or for primitives
    /// that read parameter blocks directly.
    std::vector<Var> record(Primitive op, std::span<const Var> inputs, std::span<const double> attrs = {});

    /// Accumulates seed * d(loss)/d(param) as a list of contributions in
    /// deterministic order.
    void backward(Var loss, double seed, std::vector<ParamContribution>& out);
    /// Rejects anything but a single scalar loss.
    void backward(std::span<const Var> loss, std::span<double> param_adjoints, double seed = 1.0);
    void backward(Var loss, std::span<double> param_adjoints, double seed = 1.0);
    /// Same as accumulating the contribution list, without materializing it.
    void backward_into(Var loss, std::span<double> param_adjoints, double seed = 1.0);

    /// Adjoint of an interior node from the most recent backward pass.
    double adjoint(Var v) const { return adjoints_.at(v.id); }

  private:
    static constexpr std::uint32_t kParamBit = 1u << 31;
    struct Edge {
        std::uint32_t target;
        double partial;
    };

    Var push(double value);
    void edge(Var input, double partial) { edges_.push_back({input.id, partial}); }
    void param_edge(std::uint32_t index, double partial) { edges_.push_back({index | kParamBit, partial}); }
    Var finish() {
        starts_.push_back(static_cast<std::uint32_t>(edges_.size()));
        return Var{static_cast<std::uint32_t>(values_.size() - 1)};
    }

    std::vector<double> values_;
    std::vector<std::uint32_t> starts_;
    std::vector<Edge> edges_;
    std::vector<double> adjoints_;
};

/// Adds contributions into a flat adjoint buffer in list order.
void accumulate(std::span<const ParamContribution> contributions, std::span<double> adjoints);

/// Value-only backend with the same interface as Tape, so pipelines written
/// once against the interface serve both inference and training.
struct PlainOps {
    using Value = double;

    double value(double v) const { return v; }
    double constant(double c) const { return c; }
    double stop_gradient(double v) const { return v; }
    double add(double a, double b) const { return a + b; }
    double sub(double a, double b) const { return a - b; }
    double mul(double a, double b) const { return a * b; }
    double div(double a, double b) const { return a / b; }
    double exp(double a) const { return std::exp(a); }
    double softplus(double a) const { return nf::softplus(a); }
    double sigmoid(double a) const { return nf::sigmoid(a); }
    double pow(double a, double p) const { return std::pow(a, p); }
    double clamp(double a, double lo, double hi) const { return std::clamp(a, lo, hi); }
    double dot(const std::array<double, 3>& a, const std::array<double, 3>& b) const {
        return a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
    }
    std::array<double, 3> normalize(const std::array<double, 3>& v, double eps) const;
    double gather(const ParamView& grid, const CellLookup& lk, int channel) const;
    std::array<double, 3> gather_gradient(const ParamView& grid, const CellLookup& lk, int channel) const;
    std::array<double, 3> sh_eval(const ParamView& coeffs, int degree, const std::array<double, 3>& dir) const;
    std::pair<double, double> composite_step(double transmittance, double sigma, double delta) const;
};

// ---------------------------------------------------------------------------
// Finite-difference verification
// ---------------------------------------------------------------------------

struct FdOptions {
    double rel_step = 1e-4;
    std::size_t max_coords = 256;
    double min_abs_grad = 1e-8;
    std::uint64_t seed = 7;
};

struct FdResult {
    double max_rel_err = 0.0;
    std::size_t checked = 0;
    std::size_t worst_index = 0;
    double worst_analytic = 0.0;
    double worst_numeric = 0.0;
};

/// Central differences of f over coordinates of x, compared against the
/// analytic gradient. f must read x in place. Coordinates with
/// |analytic| <= min_abs_grad are skipped; when more than max_coords remain
/// a seeded random subset is checked.
FdResult fd_check(const std::function<double()>& f, std::span<double> x, std::span<const double> analytic,
                  const FdOptions& options = {});

}  // namespace nf
