#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>

#include "kxsr/image.hpp"
#include "kxsr/image_io.hpp"
#include "kxsr/resize.hpp"

using namespace kxsr;
namespace fs = std::filesystem;

namespace {

struct TmpDir {
    fs::path path;
    TmpDir() {
        path = fs::temp_directory_path() /
               ("kxsr_test_" + std::to_string(std::random_device{}()));
        fs::create_directories(path);
    }
    ~TmpDir() { fs::remove_all(path); }
    std::string file(const std::string& name) const { return (path / name).string(); }
};

void write_pgm_bytes(const std::string& path, int h, int w,
                     const std::vector<unsigned char>& bytes) {
    std::ofstream out(path, std::ios::binary);
    out << "P5\n" << w << " " << h << "\n255\n";
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
}

}  // namespace

TEST_CASE("load_image scales 8-bit samples by 255") {
    TmpDir tmp;
    write_pgm_bytes(tmp.file("a.pgm"), 1, 1, {255});
    Image a = load_image(tmp.file("a.pgm"));
    REQUIRE(a.h == 1);
    REQUIRE(a.w == 1);
    REQUIRE(a.c == 1);
    CHECK(a.at(0, 0) == 1.0);

    write_pgm_bytes(tmp.file("b.pgm"), 1, 1, {0});
    CHECK(load_image(tmp.file("b.pgm")).at(0, 0) == 0.0);

    write_pgm_bytes(tmp.file("c.pgm"), 2, 2, {0, 51, 102, 255});
    Image c = load_image(tmp.file("c.pgm"));
    CHECK(c.at(0, 0) == Catch::Approx(0.0));
    CHECK(c.at(0, 1) == Catch::Approx(0.2));
    CHECK(c.at(1, 0) == Catch::Approx(0.4));
    CHECK(c.at(1, 1) == Catch::Approx(1.0));
}

TEST_CASE("save_image clamps and rounds half away from zero") {
    TmpDir tmp;
    auto byte_of = [&](double v) {
        Image img(1, 1, 1);
        img.at(0, 0) = v;
        save_image(img, tmp.file("q.pgm"));
        std::ifstream in(tmp.file("q.pgm"), std::ios::binary);
        std::string magic;
        int w, h, maxv;
        in >> magic >> w >> h >> maxv;
        in.get();
        return static_cast<unsigned char>(in.get());
    };
    CHECK(byte_of(1.0) == 255);
    CHECK(byte_of(-0.2) == 0);
    CHECK(byte_of(0.5) == 128);
}

TEST_CASE("image byte round-trip is exact for 8-bit inputs") {
    TmpDir tmp;
    std::mt19937 rng(7);
    std::vector<unsigned char> bytes(12 * 9);
    for (auto& b : bytes) b = static_cast<unsigned char>(rng() & 0xff);
    write_pgm_bytes(tmp.file("rt.pgm"), 12, 9, bytes);
    Image img = load_image(tmp.file("rt.pgm"));
    save_image(img, tmp.file("rt2.pgm"));
    Image img2 = load_image(tmp.file("rt2.pgm"));
    REQUIRE(img.size() == img2.size());
    for (size_t i = 0; i < img.size(); ++i) CHECK(img.data[i] == img2.data[i]);
}

TEST_CASE("png round-trip preserves samples") {
    TmpDir tmp;
    std::mt19937 rng(11);
    Image img(10, 14, 3);
    for (auto& v : img.data) v = (rng() & 0xff) / 255.0;
    save_image(img, tmp.file("x.png"));
    Image back = load_image(tmp.file("x.png"));
    REQUIRE(back.h == 10);
    REQUIRE(back.w == 14);
    REQUIRE(back.c == 3);
    for (size_t i = 0; i < img.size(); ++i)
        CHECK(back.data[i] == Catch::Approx(img.data[i]).margin(0.5 / 255.0 + 1e-12));
}

TEST_CASE("rgb_to_y uses full-range BT.601 weights") {
    Image rgb(1, 3, 3);
    // pixel 0: black, pixel 1: white, pixel 2: pure red
    rgb.at(0, 1, 0) = rgb.at(0, 1, 1) = rgb.at(0, 1, 2) = 1.0;
    rgb.at(0, 2, 0) = 1.0;
    Image y = rgb_to_y(rgb);
    CHECK(y.at(0, 0) == 0.0);
    CHECK(y.at(0, 1) == Catch::Approx(1.0).margin(1e-12));
    CHECK(y.at(0, 2) == Catch::Approx(0.299).margin(1e-12));

    Image gray(1, 1, 1);
    CHECK_THROWS_AS(rgb_to_y(gray), std::invalid_argument);
}

TEST_CASE("rgb_to_y is linear") {
    std::mt19937 rng(3);
    std::uniform_real_distribution<double> dist(0.0, 1.0);
    Image a(4, 5, 3), b(4, 5, 3);
    for (auto& v : a.data) v = dist(rng);
    for (auto& v : b.data) v = dist(rng);
    double alpha = 0.3, beta = 0.6;
    Image mix(4, 5, 3);
    for (size_t i = 0; i < mix.size(); ++i)
        mix.data[i] = alpha * a.data[i] + beta * b.data[i];
    Image ym = rgb_to_y(mix), ya = rgb_to_y(a), yb = rgb_to_y(b);
    for (size_t i = 0; i < ym.size(); ++i)
        CHECK(ym.data[i] == Catch::Approx(alpha * ya.data[i] + beta * yb.data[i]).margin(1e-12));
}

TEST_CASE("bicubic_resize identity and constant preservation") {
    std::mt19937 rng(5);
    std::uniform_real_distribution<double> dist(0.0, 1.0);
    Image img(6, 7, 1);
    for (auto& v : img.data) v = dist(rng);
    Image same = bicubic_resize(img, 6, 7);
    for (size_t i = 0; i < img.size(); ++i)
        CHECK(same.data[i] == Catch::Approx(img.data[i]).margin(1e-12));

    Image flat(5, 5, 1, 0.37);
    Image up = bicubic_resize(flat, 12, 9);
    for (double v : up.data) CHECK(v == Catch::Approx(0.37).margin(1e-9));
}

TEST_CASE("cubic interpolation midpoint weights are (-1/16, 9/16, 9/16, -1/16)") {
    Image row(1, 4, 1);
    row.at(0, 0) = 0.0;
    row.at(0, 1) = 1.0;
    row.at(0, 2) = 0.0;
    row.at(0, 3) = 0.0;
    // midpoint between samples 1 and 2
    double v = bicubic_sample(row, 0.0, 1.5);
    double expected = -1.0 / 16 * 0.0 + 9.0 / 16 * 1.0 + 9.0 / 16 * 0.0 - 1.0 / 16 * 0.0;
    CHECK(v == Catch::Approx(expected).margin(1e-12));
    CHECK(cubic_weight(0.5) == Catch::Approx(9.0 / 16).margin(1e-15));
    CHECK(cubic_weight(1.5) == Catch::Approx(-1.0 / 16).margin(1e-15));
}

TEST_CASE("bicubic interior agrees with direct evaluation of the cubic weights") {
    std::mt19937 rng(9);
    std::uniform_real_distribution<double> dist(0.0, 1.0);
    Image img(8, 8, 1);
    for (auto& v : img.data) v = dist(rng);
    Image up = bicubic_resize(img, 16, 16);
    // naive per-pixel oracle on interior output pixels
    for (int i = 4; i < 12; ++i)
        for (int j = 4; j < 12; ++j) {
            double y = i * 0.5, x = j * 0.5;
            int iy = static_cast<int>(std::floor(y)), ix = static_cast<int>(std::floor(x));
            double acc = 0.0;
            for (int m = -1; m <= 2; ++m)
                for (int n = -1; n <= 2; ++n)
                    acc += cubic_weight(y - (iy + m)) * cubic_weight(x - (ix + n)) *
                           img.at(iy + m, ix + n);
            CHECK(up.at(i, j) == Catch::Approx(acc).margin(1e-12));
        }
}

TEST_CASE("kernel text format round-trips and enforces invariants") {
    TmpDir tmp;
    Kernel k(3);
    k.data = {0.05, 0.1, 0.05, 0.1, 0.4, 0.1, 0.05, 0.1, 0.05};
    write_kernel(k, tmp.file("k.txt"));
    Kernel back = read_kernel(tmp.file("k.txt"));
    REQUIRE(back.p == 3);
    for (int i = 0; i < 9; ++i)
        CHECK(back.data[i] == Catch::Approx(k.data[i]).margin(1e-9));

    // write(read(f)) reproduces the file contents
    write_kernel(back, tmp.file("k2.txt"));
    std::ifstream f1(tmp.file("k.txt")), f2(tmp.file("k2.txt"));
    std::stringstream s1, s2;
    s1 << f1.rdbuf();
    s2 << f2.rdbuf();
    CHECK(s1.str() == s2.str());

    {
        std::ofstream bad(tmp.file("bad_sum.txt"));
        bad << "1\n0.5\n";
    }
    CHECK_THROWS_AS(read_kernel(tmp.file("bad_sum.txt")), FormatError);

    {
        std::ofstream bad(tmp.file("bad_neg.txt"));
        bad << "3\n0.5 0.5 0.5\n0.5 -0.5 0.5\n0.5 -0.5 0\n";
    }
    CHECK_THROWS_AS(read_kernel(tmp.file("bad_neg.txt")), FormatError);

    {
        std::ofstream bad(tmp.file("bad_short.txt"));
        bad << "3\n1.0\n";
    }
    CHECK_THROWS_AS(read_kernel(tmp.file("bad_short.txt")), FormatError);

    {
        std::ofstream ok(tmp.file("one.txt"));
        ok << "1\n1.0\n";
    }
    Kernel one = read_kernel(tmp.file("one.txt"));
    CHECK(one.p == 1);
    CHECK(one.data[0] == 1.0);
}

TEST_CASE("load_image reports missing files as I/O errors") {
    CHECK_THROWS_AS(load_image("/nonexistent/kxsr.png"), IoError);
}
