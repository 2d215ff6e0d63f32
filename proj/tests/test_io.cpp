#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <cstring>
#include <random>

#include "normalfield/checkpoint.hpp"
#include "normalfield/error.hpp"
#include "normalfield/image_io.hpp"

using namespace nf;
namespace fs = std::filesystem;

namespace {

fs::path tmp(const std::string& name) { return fs::temp_directory_path() / ("nf_io_" + name); }

}  // namespace

TEST(ImageIo, PfmRoundTripIsExact) {
    std::mt19937_64 rng(3);
    std::normal_distribution<float> g;
    for (int channels : {1, 3}) {
        Image img(7, 5, channels);
        for (float& v : img.data) v = g(rng);
        write_pfm(tmp("a.pfm"), img);
        EXPECT_EQ(read_pfm(tmp("a.pfm")), img);
    }
    std::ifstream in(tmp("a.pfm"), std::ios::binary);
    std::string magic, dims, scale;
    in >> magic >> dims;
    EXPECT_EQ(magic, "PF");
    fs::remove(tmp("a.pfm"));
}

TEST(ImageIo, PfmRowsStoredBottomUp) {
    Image img(1, 2, 1);
    img.at(0, 0, 0) = 1.0f;  // top
    img.at(0, 1, 0) = 2.0f;  // bottom
    write_pfm(tmp("b.pfm"), img);
    std::ifstream in(tmp("b.pfm"), std::ios::binary);
    std::string bytes((std::istreambuf_iterator<char>(in)), {});
    EXPECT_EQ(bytes.substr(0, 12), "Pf\n1 2\n-1.0\n");
    float first = 0.0f;
    std::memcpy(&first, bytes.data() + 12, 4);
    EXPECT_EQ(first, 2.0f);
    fs::remove(tmp("b.pfm"));
}

TEST(ImageIo, PngRoundTripAndQuantize) {
    Image img(6, 4, 3);
    for (std::size_t i = 0; i < img.data.size(); ++i) img.data[i] = static_cast<float>(i % 7) / 6.0f;
    const Image8 q = quantize(img);
    EXPECT_EQ(q.data[1], 43);  // 1/6 -> 42.5 rounds up
    write_png(tmp("c.png"), q);
    EXPECT_EQ(read_png(tmp("c.png")), q);
    const Image back = dequantize(q);
    EXPECT_NEAR(back.data[1], 43.0f / 255.0f, 1e-7);
    fs::remove(tmp("c.png"));
}

TEST(ImageIo, CorruptFilesRaiseDataError) {
    {
        std::ofstream bad(tmp("bad.pfm"));
        bad << "P6\n1 1\n255\n";
    }
    EXPECT_THROW(read_pfm(tmp("bad.pfm")), DataError);
    EXPECT_THROW(read_png(tmp("missing.png")), DataError);
    fs::copy_file(tmp("bad.pfm"), tmp("bad.png"), fs::copy_options::overwrite_existing);
    EXPECT_THROW(read_png(tmp("bad.png")), DataError);
    fs::remove(tmp("bad.pfm"));
    fs::remove(tmp("bad.png"));
}

TEST(Checkpoint, RoundTripToSinglePrecision) {
    GridShape shape{{5, 4, 3}, {-1, -2, -3}, {1, 2, 3}};
    SceneFields f = SceneFields::random_init(shape, 2, 17);
    for (double& c : f.env.coeffs) c = 0.123456789;
    save_checkpoint(tmp("ck.nfld"), f);
    const SceneFields g = load_checkpoint(tmp("ck.nfld"));
    EXPECT_EQ(g.shape(), f.shape());
    EXPECT_EQ(g.env.degree, 2);
    ASSERT_EQ(g.density.data().size(), f.density.data().size());
    for (std::size_t i = 0; i < f.density.data().size(); ++i)
        EXPECT_EQ(g.density.data()[i], static_cast<double>(static_cast<float>(f.density.data()[i])));
    EXPECT_EQ(g.tint.data()[7], static_cast<double>(static_cast<float>(f.tint.data()[7])));
    EXPECT_EQ(g.env.coeffs[5], static_cast<double>(0.123456789f));
    EXPECT_EQ(g.density.outside_mode(), OutsideMode::empty);
    // Saving the loaded fields reproduces the file byte for byte.
    save_checkpoint(tmp("ck2.nfld"), g);
    std::ifstream a(tmp("ck.nfld"), std::ios::binary), b(tmp("ck2.nfld"), std::ios::binary);
    EXPECT_EQ(std::string(std::istreambuf_iterator<char>(a), {}), std::string(std::istreambuf_iterator<char>(b), {}));
    fs::remove(tmp("ck.nfld"));
    fs::remove(tmp("ck2.nfld"));
}

TEST(Checkpoint, RejectsTruncatedAndForeignFiles) {
    GridShape shape{{3, 3, 3}, {-1, -1, -1}, {1, 1, 1}};
    save_checkpoint(tmp("t.nfld"), SceneFields::zeros(shape, 1));
    std::ifstream in(tmp("t.nfld"), std::ios::binary);
    std::string bytes((std::istreambuf_iterator<char>(in)), {});
    {
        std::ofstream out(tmp("t.nfld"), std::ios::binary);
        out << bytes.substr(0, bytes.size() / 2);
    }
    try {
        load_checkpoint(tmp("t.nfld"));
        FAIL() << "expected DataError";
    } catch (const DataError& e) {
        EXPECT_NE(std::string(e.what()).find("t.nfld"), std::string::npos);
    }
    {
        std::ofstream out(tmp("t.nfld"), std::ios::binary);
        out << "JUNKJUNKJUNK";
    }
    EXPECT_THROW(load_checkpoint(tmp("t.nfld")), DataError);
    EXPECT_THROW(load_checkpoint(tmp("none.nfld")), DataError);
    fs::remove(tmp("t.nfld"));
}
