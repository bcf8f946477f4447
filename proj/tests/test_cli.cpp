#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include <json.hpp>

#include "kxsr/image_io.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string cli_path() {
    const char* p = std::getenv("KXSR_CLI");
    REQUIRE(p != nullptr);
    return p;
}

int run(const std::string& args) {
    std::string cmd = cli_path() + " " + args + " >/dev/null 2>&1";
    int rc = std::system(cmd.c_str());
    return WEXITSTATUS(rc);
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

struct TmpDir {
    fs::path path;
    TmpDir() {
        path = fs::temp_directory_path() /
               ("kxsr_cli_" + std::to_string(std::random_device{}()));
        fs::create_directories(path);
    }
    ~TmpDir() { fs::remove_all(path); }
    std::string operator/(const std::string& name) const { return (path / name).string(); }
};

kxsr::Image test_chart(int n = 32) {
    kxsr::Image img(n, n, 1);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            img.at(i, j) = 0.5 + 0.4 * std::sin(0.8 * i) * std::cos(0.5 * j);
    return img;
}

int count_lines(const std::string& s) {
    int n = 0;
    for (char ch : s)
        if (ch == '\n') ++n;
    return n;
}

}  // namespace

TEST_CASE("cli usage errors exit with code 2") {
    CHECK(run("definitely-not-a-subcommand") == 2);
    CHECK(run("degrade") == 2);                      // missing required --input
    CHECK(run("solve --input x.png --prox bogus") == 2);
}

TEST_CASE("cli degrade identity pipeline and determinism") {
    TmpDir tmp;
    kxsr::save_image(test_chart(), tmp / "hr.png");

    SECTION("scale 1, kernel 1, no noise reproduces the input") {
        REQUIRE(run("degrade --input " + (tmp / "hr.png") +
                    " --scale 1 --kernel-size 1 --noise 0 --out-prefix " + (tmp / "a")) == 0);
        CHECK(slurp(tmp / "a_lr.png") == slurp(tmp / "hr.png"));
    }

    SECTION("same seed twice gives byte-identical outputs") {
        std::string flags = "degrade --input " + (tmp / "hr.png") +
                            " --scale 2 --kernel-size 5 --sigma 1.1 --noise 10 --seed 42";
        REQUIRE(run(flags + " --out-prefix " + (tmp / "b1")) == 0);
        REQUIRE(run(flags + " --out-prefix " + (tmp / "b2")) == 0);
        CHECK(slurp(tmp / "b1_lr.png") == slurp(tmp / "b2_lr.png"));
        CHECK(slurp(tmp / "b1_kernel.txt") == slurp(tmp / "b2_kernel.txt"));
    }

    SECTION("setting2 sidecar records the angle and the kernel round-trips") {
        REQUIRE(run("degrade --input " + (tmp / "hr.png") +
                    " --scale 2 --kernel-size 7 --setting2 --l1 2.0 --l2 4.0 "
                    "--theta 0.7854 --out-prefix " + (tmp / "c")) == 0);
        json side = json::parse(std::ifstream(tmp / "c_spec.json"));
        CHECK(side["kernel"]["theta"].get<double>() == Catch::Approx(0.7854));
        kxsr::Kernel k = kxsr::read_kernel(tmp / "c_kernel.txt");
        CHECK(k.p == 7);
        CHECK(k.valid(1e-6));
    }
}

TEST_CASE("cli solve writes trace, kernel, and SR image") {
    TmpDir tmp;
    kxsr::save_image(test_chart(), tmp / "hr.png");
    REQUIRE(run("degrade --input " + (tmp / "hr.png") +
                " --scale 2 --kernel-size 5 --sigma 1.0 --out-prefix " + (tmp / "d")) == 0);

    SECTION("trace has exactly T+1 rows; gt flags add diagnostic columns") {
        REQUIRE(run("solve --input " + (tmp / "d_lr.png") +
                    " --scale 2 --kernel-size 5 --stages 3 --gt-kernel " +
                    (tmp / "d_kernel.txt") + " --gt-image " + (tmp / "d_hr.png") +
                    " --out-prefix " + (tmp / "s")) == 0);
        std::string trace = slurp(tmp / "s_trace.csv");
        CHECK(count_lines(trace) == 5);  // header + stages 0..3
        CHECK(trace.find("psnr") != std::string::npos);
        CHECK(trace.find("kernel_l1") != std::string::npos);
        CHECK(fs::exists(tmp / "s_sr.png"));
        kxsr::Kernel est = kxsr::read_kernel(tmp / "s_kernel.txt");
        CHECK(est.valid(1e-6));
    }

    SECTION("identity pipeline end to end: SR equals GT") {
        REQUIRE(run("degrade --input " + (tmp / "hr.png") +
                    " --scale 1 --kernel-size 1 --noise 0 --out-prefix " + (tmp / "i")) == 0);
        REQUIRE(run("solve --input " + (tmp / "i_lr.png") +
                    " --scale 1 --kernel-size 1 --stages 1 --out-prefix " + (tmp / "is")) == 0);
        REQUIRE(run("eval --sr " + (tmp / "is_sr.png") + " --gt " + (tmp / "i_hr.png") +
                    " --out-prefix " + (tmp / "ie")) == 0);
        std::string report = slurp(tmp / "ie_report.csv");
        CHECK(report.find("inf") != std::string::npos);
    }

    SECTION("config file is honored and flags override it") {
        {
            std::ofstream cfg(tmp / "cfg.json");
            cfg << R"({"stages": 2, "scale": 2, "kernel_size": 5, "prox_x": "tikhonov",)"
                << R"( "tau": 0.001})";
        }
        REQUIRE(run("solve --input " + (tmp / "d_lr.png") + " --config " + (tmp / "cfg.json") +
                    " --stages 1 --out-prefix " + (tmp / "cf")) == 0);
        // --stages 1 overrides the file's 2: trace is header + stages 0..1
        CHECK(count_lines(slurp(tmp / "cf_trace.csv")) == 3);
    }
}

TEST_CASE("cli eval reports and border flag") {
    TmpDir tmp;
    kxsr::Image a = test_chart();
    kxsr::save_image(a, tmp / "a.png");

    SECTION("identical images: psnr inf, ssim 1") {
        REQUIRE(run("eval --sr " + (tmp / "a.png") + " --gt " + (tmp / "a.png") +
                    " --out-prefix " + (tmp / "r")) == 0);
        json rep = json::parse(std::ifstream(tmp / "r_report.json"));
        CHECK(rep["psnr_db"] == "inf");
        CHECK(rep["ssim"].get<double>() == Catch::Approx(1.0).margin(1e-12));
        CHECK(rep["border"] == 0);
    }

    SECTION("border 0 vs border 2 differ on a border-corrupted image") {
        kxsr::Image b = a;
        for (int j = 0; j < b.w; ++j) b.at(0, j) = (j % 2) ? 1.0 : 0.0;
        kxsr::save_image(b, tmp / "b.png");
        REQUIRE(run("eval --sr " + (tmp / "b.png") + " --gt " + (tmp / "a.png") +
                    " --border 0 --out-prefix " + (tmp / "r0")) == 0);
        REQUIRE(run("eval --sr " + (tmp / "b.png") + " --gt " + (tmp / "a.png") +
                    " --border 2 --out-prefix " + (tmp / "r2")) == 0);
        json r0 = json::parse(std::ifstream(tmp / "r0_report.json"));
        json r2 = json::parse(std::ifstream(tmp / "r2_report.json"));
        CHECK(r0["psnr_db"] != r2["psnr_db"]);
    }

    SECTION("dimension mismatch exits 1") {
        kxsr::save_image(test_chart(16), tmp / "small.png");
        CHECK(run("eval --sr " + (tmp / "small.png") + " --gt " + (tmp / "a.png")) == 1);
    }
}

TEST_CASE("cli gaussian8 writes 8 valid kernels") {
    TmpDir tmp;
    REQUIRE(run("gaussian8 --scale 2 --out-dir " + (tmp / "g8")) == 0);
    int count = 0;
    for (const auto& e : fs::directory_iterator(tmp / "g8")) {
        kxsr::Kernel k = kxsr::read_kernel(e.path().string());
        CHECK(k.p == 21);
        ++count;
    }
    CHECK(count == 8);
}

TEST_CASE("cli bench on builtin charts is deterministic") {
    TmpDir tmp;
    std::string flags = "bench --builtin --scale 2 --stages 1 --kernel-size 5 --seed 9";
    REQUIRE(run(flags + " --out-dir " + (tmp / "b1")) == 0);
    REQUIRE(run(flags + " --out-dir " + (tmp / "b2")) == 0);
    CHECK(slurp(tmp / "b1" + std::string("/summary.csv")) ==
          slurp(tmp / "b2" + std::string("/summary.csv")));
    CHECK(slurp(tmp / "b1" + std::string("/cases.csv")) ==
          slurp(tmp / "b2" + std::string("/cases.csv")));
    // 3 builtin images x 8 kernels x 1 noise level, plus header
    CHECK(count_lines(slurp(tmp / "b1" + std::string("/cases.csv"))) == 25);
}
