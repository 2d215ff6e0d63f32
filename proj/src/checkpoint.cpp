#include "normalfield/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <optional>
#include <string>

#include "normalfield/error.hpp"

namespace nf {

namespace {

constexpr char kMagic[4] = {'N', 'F', 'L', 'D'};
constexpr std::uint32_t kVersion = 1;

class Writer {
  public:
    void u32(std::uint32_t v) {
        for (int k = 0; k < 4; ++k) bytes_.push_back(static_cast<char>((v >> (8 * k)) & 0xff));
    }
    void u64(std::uint64_t v) {
        for (int k = 0; k < 8; ++k) bytes_.push_back(static_cast<char>((v >> (8 * k)) & 0xff));
    }
    void f32(double v) { u32(std::bit_cast<std::uint32_t>(static_cast<float>(v))); }
    void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
    void raw(const void* p, std::size_t n) { bytes_.append(static_cast<const char*>(p), n); }
    void name(const std::string& s) {
        u32(static_cast<std::uint32_t>(s.size()));
        raw(s.data(), s.size());
    }
    const std::string& bytes() const { return bytes_; }

  private:
    std::string bytes_;
};

class Reader {
  public:
    Reader(std::string bytes, std::string path) : bytes_(std::move(bytes)), path_(std::move(path)) {}

    void need(std::size_t n) const {
        if (pos_ + n > bytes_.size()) throw DataError(path_ + ": checkpoint is truncated");
    }
    std::uint32_t u32() {
        need(4);
        std::uint32_t v = 0;
        for (int k = 0; k < 4; ++k) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(bytes_[pos_ + k])) << (8 * k);
        pos_ += 4;
        return v;
    }
    std::uint64_t u64() {
        need(8);
        std::uint64_t v = 0;
        for (int k = 0; k < 8; ++k) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes_[pos_ + k])) << (8 * k);
        pos_ += 8;
        return v;
    }
    double f32() { return std::bit_cast<float>(u32()); }
    double f64() { return std::bit_cast<double>(u64()); }
    std::string str(std::size_t n) {
        need(n);
        std::string s = bytes_.substr(pos_, n);
        pos_ += n;
        return s;
    }
    bool at_end() const { return pos_ == bytes_.size(); }
    const std::string& path() const { return path_; }

  private:
    std::string bytes_;
    std::string path_;
    std::size_t pos_ = 0;
};

void write_grid(Writer& w, const VoxelGrid& g) {
    w.name(g.name());
    const GridShape& s = g.shape();
    for (int a = 0; a < 3; ++a) w.u32(static_cast<std::uint32_t>(s.res[a]));
    for (int a = 0; a < 3; ++a) w.f64(s.lo[a]);
    for (int a = 0; a < 3; ++a) w.f64(s.hi[a]);
    w.u32(static_cast<std::uint32_t>(g.channels()));
    for (double v : g.data()) w.f32(v);
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const SceneFields& fields) {
    Writer w;
    w.raw(kMagic, 4);
    w.u32(kVersion);
    for (const VoxelGrid* g : {&fields.density, &fields.normal, &fields.diffuse, &fields.tint}) write_grid(w, *g);
    w.name("env_sh");
    w.u32(static_cast<std::uint32_t>(fields.env.degree));
    for (double c : fields.env.coeffs) w.f32(c);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write " + path.string());
    out.write(w.bytes().data(), static_cast<std::streamsize>(w.bytes().size()));
    if (!out) throw DataError("failed writing " + path.string());
}

SceneFields load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open checkpoint " + path.string());
    Reader r(std::string(std::istreambuf_iterator<char>(in), {}), path.string());
    if (r.str(4) != std::string(kMagic, 4)) throw DataError(path.string() + ": not a checkpoint (bad magic)");
    if (const auto v = r.u32(); v != kVersion)
        throw DataError(path.string() + ": unsupported checkpoint version " + std::to_string(v));

    SceneFields f;
    bool have[4] = {false, false, false, false};
    bool have_env = false;
    std::optional<GridShape> shape;
    while (!r.at_end()) {
        const std::uint32_t len = r.u32();
        if (len > 256) throw DataError(path.string() + ": corrupt block name");
        const std::string name = r.str(len);
        if (name == "env_sh") {
            const int degree = static_cast<int>(r.u32());
            if (degree < 0 || degree > kMaxShDegree) throw DataError(path.string() + ": bad SH degree");
            f.env = EnvMapSH(degree);
            for (double& c : f.env.coeffs) c = r.f32();
            have_env = true;
            continue;
        }
        GridShape s;
        for (int a = 0; a < 3; ++a) s.res[a] = static_cast<int>(r.u32());
        for (int a = 0; a < 3; ++a) s.lo[a] = r.f64();
        for (int a = 0; a < 3; ++a) s.hi[a] = r.f64();
        const int channels = static_cast<int>(r.u32());
        try {
            s.validate();
        } catch (const Error& e) {
            throw DataError(path.string() + ": grid '" + name + "': " + e.what());
        }
        if (s.res[0] > 4096 || s.res[1] > 4096 || s.res[2] > 4096)
            throw DataError(path.string() + ": grid '" + name + "' is implausibly large");
        if (shape && !(*shape == s)) throw DataError(path.string() + ": grids disagree on shape");
        shape = s;
        int slot = -1;
        int want = 3;
        VoxelGrid* g = nullptr;
        if (name == "density") {
            slot = 0, want = 1;
            f.density = VoxelGrid(name, s, 1, OutsideMode::empty, -10.0);
            g = &f.density;
        } else if (name == "normal") {
            slot = 1;
            f.normal = VoxelGrid(name, s, 3);
            g = &f.normal;
        } else if (name == "diffuse") {
            slot = 2;
            f.diffuse = VoxelGrid(name, s, 3);
            g = &f.diffuse;
        } else if (name == "tint") {
            slot = 3;
            f.tint = VoxelGrid(name, s, 3);
            g = &f.tint;
        } else {
            throw DataError(path.string() + ": unknown block '" + name + "'");
        }
        if (channels != want) throw DataError(path.string() + ": grid '" + name + "' has the wrong channel count");
        for (double& v : g->data()) v = r.f32();
        have[slot] = true;
    }
    for (int i = 0; i < 4; ++i)
        if (!have[i]) throw DataError(path.string() + ": checkpoint is missing a grid");
    if (!have_env) throw DataError(path.string() + ": checkpoint is missing env_sh");
    return f;
}

}  // namespace nf
