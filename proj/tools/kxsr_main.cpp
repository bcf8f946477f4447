// kxsr command-line tool: degrade / solve / eval / gaussian8 / bench.
// Exit codes: 0 ok, 1 I/O error, 2 usage error, 3 divergence or failed cases.

#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <json.hpp>

#include "kxsr/bench.hpp"
#include "kxsr/degrade.hpp"
#include "kxsr/image_io.hpp"
#include "kxsr/metrics.hpp"
#include "kxsr/solver.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct DegradeArgs {
    std::string input;
    std::string out_prefix = "out";
    int scale = 2;
    int kernel_size = 21;
    double sigma = 1.2;
    bool setting2 = false;
    double l1 = 2.0, l2 = 4.0, theta = 0.0;
    double noise = 0.0;
    uint64_t seed = 0;
    std::string boundary = "replicate";
};

int cmd_degrade(const DegradeArgs& a) {
    kxsr::Image hr = kxsr::center_crop_multiple(kxsr::load_image(a.input), a.scale);
    kxsr::DegradationSpec spec;
    spec.scale = a.scale;
    spec.kernel_size = a.kernel_size;
    spec.noise_level = a.noise;
    spec.seed = a.seed;
    if (a.setting2)
        spec.params = kxsr::Aniso{a.l1, a.l2, a.theta};
    else
        spec.params = kxsr::Iso{a.sigma};

    auto [y, k] = kxsr::degrade(hr, spec, kxsr::boundary_from_string(a.boundary));
    kxsr::save_image(y, a.out_prefix + "_lr.png");
    kxsr::save_image(hr, a.out_prefix + "_hr.png");
    kxsr::write_kernel(k, a.out_prefix + "_kernel.txt");

    json side;
    side["scale"] = spec.scale;
    side["kernel_size"] = spec.kernel_size;
    side["noise_level"] = spec.noise_level;
    side["seed"] = spec.seed;
    side["boundary"] = a.boundary;
    if (a.setting2) {
        side["kernel"] = {{"type", "aniso"}, {"lambda1", a.l1}, {"lambda2", a.l2},
                          {"theta", a.theta}};
    } else {
        side["kernel"] = {{"type", "iso"}, {"sigma", a.sigma}};
    }
    std::ofstream js(a.out_prefix + "_spec.json");
    if (!js) throw kxsr::IoError("cannot write " + a.out_prefix + "_spec.json");
    js << side.dump(2) << "\n";
    return 0;
}

struct SolveArgs {
    std::string input;
    std::string out_prefix = "out";
    std::string config_file;
    std::string gt_kernel, gt_image;
    kxsr::SolverConfig cfg;
};

// Command-line flags take precedence over config-file values: a key is only
// read from the file when its flag was not given on the command line.
void apply_config_file(kxsr::SolverConfig& cfg, const std::string& path, const CLI::App* cmd) {
    std::ifstream in(path);
    if (!in) throw kxsr::IoError("cannot open config " + path);
    json j = json::parse(in);
    auto unset = [cmd](const char* flag) { return cmd->count(flag) == 0; };
    if (j.contains("stages") && unset("--stages")) cfg.stages = j["stages"];
    if (j.contains("scale") && unset("--scale")) cfg.scale = j["scale"];
    if (j.contains("kernel_size") && unset("--kernel-size")) cfg.kernel_size = j["kernel_size"];
    if (j.contains("delta1") && !j["delta1"].is_null() && unset("--delta1"))
        cfg.delta1 = j["delta1"].get<double>();
    if (j.contains("delta2") && !j["delta2"].is_null() && unset("--delta2"))
        cfg.delta2 = j["delta2"].get<double>();
    if (j.contains("prox_x") && unset("--prox"))
        cfg.prox_x = kxsr::image_prox_from_string(j["prox_x"]);
    if (j.contains("tau") && unset("--tau")) cfg.tau = j["tau"];
    if (j.contains("tv_iters") && unset("--tv-iters")) cfg.tv_iters = j["tv_iters"];
    if (j.contains("boundary") && unset("--boundary"))
        cfg.boundary = kxsr::boundary_from_string(j["boundary"]);
    if (j.contains("seed") && unset("--seed")) cfg.seed = j["seed"].get<uint64_t>();
}

void write_trace_csv(const std::string& path, const std::vector<kxsr::StageRecord>& trace,
                     bool with_gt) {
    std::ofstream csv(path);
    if (!csv) throw kxsr::IoError("cannot write " + path);
    csv << "stage,fidelity,kernel_change";
    if (with_gt) csv << ",psnr,kernel_l1";
    csv << "\n";
    for (const auto& r : trace) {
        csv << r.stage << "," << kxsr::detail::fmt(r.fidelity) << ","
            << kxsr::detail::fmt(r.kernel_change);
        if (with_gt)
            csv << "," << kxsr::detail::fmt(r.psnr_db.value_or(0.0)) << ","
                << kxsr::detail::fmt(r.kernel_l1_err.value_or(0.0));
        csv << "\n";
    }
}

int cmd_solve(const SolveArgs& a) {
    kxsr::Image y = kxsr::load_image(a.input);
    std::optional<kxsr::GroundTruth> gt;
    if (!a.gt_image.empty() && !a.gt_kernel.empty()) {
        gt = kxsr::GroundTruth{kxsr::load_image(a.gt_image), kxsr::read_kernel(a.gt_kernel)};
        if (gt->k.p != a.cfg.kernel_size)
            throw std::invalid_argument("--gt-kernel size differs from --kernel-size");
    } else if (!a.gt_image.empty() || !a.gt_kernel.empty()) {
        throw std::invalid_argument("--gt-image and --gt-kernel must be given together");
    }

    try {
        kxsr::SolverState st = kxsr::run_solver(y, a.cfg, gt);
        kxsr::save_image(st.x, a.out_prefix + "_sr.png");
        kxsr::write_kernel(st.k, a.out_prefix + "_kernel.txt");
        write_trace_csv(a.out_prefix + "_trace.csv", st.trace, gt.has_value());
    } catch (const kxsr::DivergenceError& e) {
        std::cerr << "kxsr solve: diverged at stage " << e.stage << "\n";
        return 3;
    }
    return 0;
}

struct EvalArgs {
    std::string sr, gt;
    std::string sr_kernel, gt_kernel;
    std::string out_prefix;
    int border = 0;
};

int cmd_eval(const EvalArgs& a) {
    kxsr::Image sr = kxsr::load_image(a.sr);
    kxsr::Image gt = kxsr::load_image(a.gt);
    if (sr.h != gt.h || sr.w != gt.w || sr.c != gt.c)
        throw std::runtime_error("eval: SR and GT dimensions differ");
    kxsr::MetricReport rep;
    rep.border = a.border;
    rep.psnr_db = kxsr::psnr(sr, gt, a.border);
    rep.ssim = kxsr::ssim(sr, gt, a.border);
    if (!a.sr_kernel.empty() && !a.gt_kernel.empty())
        rep.kernel_l1 = kxsr::kernel_l1(kxsr::read_kernel(a.sr_kernel),
                                        kxsr::read_kernel(a.gt_kernel));

    std::cout << "psnr_db=" << kxsr::detail::fmt(rep.psnr_db)
              << " ssim=" << kxsr::detail::fmt(rep.ssim)
              << " kernel_l1=" << kxsr::detail::fmt(rep.kernel_l1)
              << " stage_loss=" << kxsr::detail::fmt(rep.stage_loss)
              << " border=" << rep.border << "\n";

    if (!a.out_prefix.empty()) {
        std::ofstream csv(a.out_prefix + "_report.csv");
        csv << "psnr_db,ssim,kernel_l1,stage_loss,border\n";
        csv << kxsr::detail::fmt(rep.psnr_db) << "," << kxsr::detail::fmt(rep.ssim) << ","
            << kxsr::detail::fmt(rep.kernel_l1) << "," << kxsr::detail::fmt(rep.stage_loss)
            << "," << rep.border << "\n";
        json j;
        j["psnr_db"] = std::isinf(rep.psnr_db) ? json("inf") : json(rep.psnr_db);
        j["ssim"] = rep.ssim;
        j["kernel_l1"] = rep.kernel_l1;
        j["stage_loss"] = rep.stage_loss;
        j["border"] = rep.border;
        std::ofstream js(a.out_prefix + "_report.json");
        js << j.dump(2) << "\n";
    }
    return 0;
}

int cmd_gaussian8(int scale, const std::string& out_dir) {
    fs::create_directories(out_dir);
    auto kernels = kxsr::gaussian8(scale);
    auto sigmas = kxsr::gaussian8_sigmas(scale);
    for (size_t i = 0; i < kernels.size(); ++i) {
        std::ostringstream name;
        name << "gaussian8_s" << scale << "_k" << i << ".txt";
        kxsr::write_kernel(kernels[i], (fs::path(out_dir) / name.str()).string());
        std::cout << name.str() << " sigma=" << kxsr::detail::fmt(sigmas[i], 6) << "\n";
    }
    return 0;
}

struct BenchArgs {
    std::string images_dir;
    bool builtin = false;
    std::string setting = "setting1";
    int scale = 2;
    std::vector<double> noise = {0.0};
    std::string out_dir = "bench_out";
    uint64_t seed = 0;
    int border = -1;
    kxsr::SolverConfig cfg;
};

int cmd_bench(const BenchArgs& a) {
    kxsr::BenchmarkSpec spec;
    spec.setting = a.setting == "setting2" ? kxsr::BenchSetting::setting2
                                           : kxsr::BenchSetting::setting1;
    spec.scale = a.scale;
    spec.noise_levels = a.noise;
    spec.solver = a.cfg;
    spec.solver.scale = a.scale;
    spec.out_dir = a.out_dir;
    spec.master_seed = a.seed;
    spec.border = a.border;

    if (a.builtin) {
        spec.images = kxsr::builtin_charts();
    } else {
        std::vector<fs::path> paths;
        for (const auto& entry : fs::directory_iterator(a.images_dir)) {
            auto ext = entry.path().extension().string();
            if (ext == ".png" || ext == ".pgm" || ext == ".ppm") paths.push_back(entry.path());
        }
        std::sort(paths.begin(), paths.end());
        for (const auto& p : paths)
            spec.images.emplace_back(p.stem().string(), kxsr::load_image(p.string()));
        if (spec.images.empty()) throw kxsr::IoError("no images found in " + a.images_dir);
    }

    kxsr::BenchmarkResult res = kxsr::run_benchmark(spec);
    std::cout << "cases=" << res.cases.size() << " kxsr " << kxsr::detail::fmt(res.mean_psnr_sr, 6)
              << "/" << kxsr::detail::fmt(res.mean_ssim_sr, 6) << " bicubic "
              << kxsr::detail::fmt(res.mean_psnr_bicubic, 6) << "/"
              << kxsr::detail::fmt(res.mean_ssim_bicubic, 6) << "\n";
    return res.all_ok ? 0 : 3;
}

void add_solver_flags(CLI::App* cmd, kxsr::SolverConfig& cfg, std::string& prox_name,
                      std::string& boundary_name) {
    cmd->add_option("--stages,-T", cfg.stages, "Number of solver stages");
    cmd->add_option("--kernel-size,-p", cfg.kernel_size, "Estimated kernel size (odd)");
    cmd->add_option("--delta1", [&cfg](const CLI::results_t& r) {
        cfg.delta1 = std::stod(r[0]);
        return true;
    }, "Fixed kernel step size (default: backtracking)");
    cmd->add_option("--delta2", [&cfg](const CLI::results_t& r) {
        cfg.delta2 = std::stod(r[0]);
        return true;
    }, "Fixed image step size (default: backtracking)");
    cmd->add_option("--prox", prox_name, "Image prox: identity|tikhonov|tv")
        ->check(CLI::IsMember({"identity", "tikhonov", "tv"}));
    cmd->add_option("--tau", cfg.tau, "Image prox regularization weight");
    cmd->add_option("--tv-iters", cfg.tv_iters, "Inner iterations for the TV prox");
    cmd->add_option("--boundary", boundary_name, "Boundary: replicate|circular|zero")
        ->check(CLI::IsMember({"replicate", "circular", "zero"}));
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"kxsr: blind super-resolution via alternating proximal gradient"};
    app.require_subcommand(1);

    DegradeArgs da;
    auto* degrade = app.add_subcommand("degrade", "Blur, downsample, and add noise to an HR image");
    degrade->add_option("--input,-i", da.input, "HR input image")->required();
    degrade->add_option("--out-prefix,-o", da.out_prefix, "Output file prefix");
    degrade->add_option("--scale,-s", da.scale, "Downsampling factor");
    degrade->add_option("--kernel-size,-p", da.kernel_size, "Blur kernel size (odd)");
    degrade->add_option("--sigma", da.sigma, "Isotropic Gaussian width");
    degrade->add_flag("--setting2", da.setting2, "Use an anisotropic kernel");
    degrade->add_option("--l1", da.l1, "Anisotropic width lambda1");
    degrade->add_option("--l2", da.l2, "Anisotropic width lambda2");
    degrade->add_option("--theta", da.theta, "Anisotropic rotation angle (radians)");
    degrade->add_option("--noise", da.noise, "AWGN level on the 0-255 scale");
    degrade->add_option("--seed", da.seed, "RNG seed");
    degrade->add_option("--boundary", da.boundary, "Boundary: replicate|circular|zero")
        ->check(CLI::IsMember({"replicate", "circular", "zero"}));

    SolveArgs sa;
    std::string sa_prox = "identity", sa_boundary = "replicate";
    auto* solve = app.add_subcommand("solve", "Jointly estimate kernel and HR image from an LR image");
    solve->add_option("--input,-i", sa.input, "LR input image")->required();
    solve->add_option("--out-prefix,-o", sa.out_prefix, "Output file prefix");
    solve->add_option("--config", sa.config_file, "JSON config file (flags override)");
    solve->add_option("--scale,-s", sa.cfg.scale, "Upscaling factor");
    solve->add_option("--seed", sa.cfg.seed, "RNG seed");
    solve->add_option("--gt-kernel", sa.gt_kernel, "Ground-truth kernel for trace diagnostics");
    solve->add_option("--gt-image", sa.gt_image, "Ground-truth HR image for trace diagnostics");
    add_solver_flags(solve, sa.cfg, sa_prox, sa_boundary);

    EvalArgs ea;
    auto* eval = app.add_subcommand("eval", "Compute PSNR/SSIM (and kernel error) of an SR result");
    eval->add_option("--sr", ea.sr, "SR image")->required();
    eval->add_option("--gt", ea.gt, "Ground-truth HR image")->required();
    eval->add_option("--sr-kernel", ea.sr_kernel, "Estimated kernel file");
    eval->add_option("--gt-kernel", ea.gt_kernel, "Ground-truth kernel file");
    eval->add_option("--border", ea.border, "Border pixels shaved before metrics");
    eval->add_option("--out-prefix,-o", ea.out_prefix, "Write <prefix>_report.{csv,json}");

    int g8_scale = 2;
    std::string g8_dir = ".";
    auto* g8 = app.add_subcommand("gaussian8", "Write the 8-kernel isotropic test set");
    g8->add_option("--scale,-s", g8_scale, "Scale factor (2, 3, or 4)");
    g8->add_option("--out-dir,-o", g8_dir, "Output directory");

    BenchArgs ba;
    std::string ba_prox = "identity", ba_boundary = "replicate";
    auto* bench = app.add_subcommand("bench", "Run the synthetic degradation benchmark");
    auto* imgopt = bench->add_option("--images", ba.images_dir, "Directory of HR images");
    bench->add_flag("--builtin", ba.builtin, "Use the built-in procedural charts")
        ->excludes(imgopt);
    bench->add_option("--setting", ba.setting, "setting1 (isotropic) or setting2 (anisotropic)")
        ->check(CLI::IsMember({"setting1", "setting2"}));
    bench->add_option("--scale,-s", ba.scale, "Scale factor");
    bench->add_option("--noise", ba.noise, "Noise levels (0-255 scale)")->delimiter(',');
    bench->add_option("--out-dir,-o", ba.out_dir, "Output directory");
    bench->add_option("--seed", ba.seed, "Master seed");
    bench->add_option("--border", ba.border, "Metric border crop (-1: use scale)");
    add_solver_flags(bench, ba.cfg, ba_prox, ba_boundary);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (*degrade) return cmd_degrade(da);
        if (*solve) {
            if (!sa.config_file.empty()) apply_config_file(sa.cfg, sa.config_file, solve);
            if (solve->count("--prox")) sa.cfg.prox_x = kxsr::image_prox_from_string(sa_prox);
            if (solve->count("--boundary"))
                sa.cfg.boundary = kxsr::boundary_from_string(sa_boundary);
            return cmd_solve(sa);
        }
        if (*eval) return cmd_eval(ea);
        if (*g8) return cmd_gaussian8(g8_scale, g8_dir);
        if (*bench) {
            if (!ba.builtin && ba.images_dir.empty())
                throw CLI::ValidationError("bench", "one of --images or --builtin is required");
            ba.cfg.prox_x = kxsr::image_prox_from_string(ba_prox);
            ba.cfg.boundary = kxsr::boundary_from_string(ba_boundary);
            return cmd_bench(ba);
        }
    } catch (const CLI::Error& e) {
        std::cerr << "kxsr: " << e.what() << "\n";
        return 2;
    } catch (const std::invalid_argument& e) {
        std::cerr << "kxsr: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "kxsr: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
