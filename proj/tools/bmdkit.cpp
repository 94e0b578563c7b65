// bmdkit: synthesize, decompose, separate, and score videos with low BM-rank
// models.
//
// Subcommands
//   synth      render a synthetic clip plus its exact ground-truth factors
//   decompose  run the regularized alternating solver from an SVD or DMD start
//   separate   split a factor bundle into background and foreground sequences
//   metrics    score a bundle against the original clip and a reference image
//   info       echo the header of a tensor container or factor bundle
//
// Exit codes: 0 success, 1 command-line or config error, 2 file/format error,
// 3 invalid shapes or parameters, 4 numerical failure.

#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <CLI11.hpp>

#include "bmd/als.hpp"
#include "bmd/als_color.hpp"
#include "bmd/bm_algebra.hpp"
#include "bmd/errors.hpp"
#include "bmd/generative.hpp"
#include "bmd/init.hpp"
#include "bmd/io.hpp"
#include "bmd/metrics.hpp"
#include "bmd/tensor.hpp"

namespace fs = std::filesystem;

namespace {

// ---------------------------------------------------------------------------
// Shared plumbing
// ---------------------------------------------------------------------------

unsigned resolve_threads(unsigned flag) {
    if (flag > 0) return flag;
    if (const char* env = std::getenv("BMDKIT_THREADS")) {
        char* end = nullptr;
        const unsigned long v = std::strtoul(env, &end, 10);
        if (end != env && *end == '\0' && v > 0) return static_cast<unsigned>(v);
    }
    return 1;
}

// Removes everything registered with track() unless disarmed, so a failing
// command does not leave partial outputs behind.
class OutputGuard {
public:
    OutputGuard() = default;
    OutputGuard(const OutputGuard&) = delete;
    OutputGuard& operator=(const OutputGuard&) = delete;

    void track(const fs::path& p) { paths_.push_back(p); }
    void disarm() { armed_ = false; }

    // Create `dir` if needed; on failure only remove it when we made it.
    void ensure_dir(const fs::path& dir) {
        if (!fs::exists(dir)) {
            fs::create_directories(dir);
            track(dir);
        }
    }

    ~OutputGuard() {
        if (!armed_) return;
        for (auto it = paths_.rbegin(); it != paths_.rend(); ++it) {
            std::error_code ec;
            fs::remove_all(*it, ec);
        }
    }

private:
    std::vector<fs::path> paths_;
    bool armed_ = true;
};

void write_text(OutputGuard& guard, const fs::path& path, const std::string& text) {
    guard.track(path);
    std::ofstream os(path);
    if (!os) throw bmd::io_error(bmd::io_errc::open_failed,
                                 "cannot open " + path.string());
    os << text;
    os.flush();
    if (!os) throw bmd::io_error(bmd::io_errc::open_failed,
                                 "write failed for " + path.string());
}

void scale_in_place(double* data, std::size_t len, double factor) {
    Eigen::Map<bmd::Vector>(data, static_cast<Eigen::Index>(len)) *= factor;
}

bmd::Tensor3 load_video3(const std::string& input, bool scale01) {
    if (fs::is_directory(input))
        return bmd::read_frames_pgm(bmd::list_frames(input, ".pgm"), scale01);
    bmd::Tensor3 X = bmd::read_tensor3(input);
    if (scale01) scale_in_place(X.data(), X.size(), 1.0 / 255.0);
    return X;
}

bmd::Tensor4 load_video4(const std::string& input, bool scale01) {
    if (fs::is_directory(input))
        return bmd::read_frames_ppm(bmd::list_frames(input, ".ppm"), scale01);
    bmd::Tensor4 X = bmd::read_tensor4(input);
    if (scale01) scale_in_place(X.data(), X.size(), 1.0 / 255.0);
    return X;
}

std::string join_dims(const std::vector<std::size_t>& dims) {
    std::ostringstream ss;
    for (std::size_t i = 0; i < dims.size(); ++i) {
        if (i) ss << 'x';
        ss << dims[i];
    }
    return ss.str();
}

// ---------------------------------------------------------------------------
// synth
// ---------------------------------------------------------------------------

struct SynthOpts {
    std::string out = "synth_out";
    std::string scenario = "two-object";
    std::string background = "noise";
    std::size_t rows = 50, cols = 50, frames = 30;
    double bg_value = 128.0;
    std::uint64_t seed = 7;
    bool color = false;
};

// Canonical object layouts.  The two-object scene keeps the horizontal
// walker's row band and the vertical faller's column band spatially disjoint,
// so one extra BM term can carry both objects.
std::vector<bmd::ObjectSpec> scenario_objects(const std::string& name,
                                              std::size_t n, std::size_t p) {
    std::vector<bmd::ObjectSpec> objects;
    if (name == "empty") return objects;
    if (name == "one-object") {
        objects.push_back({85.0, 6, 6, bmd::linear_path(6, 2, 0, 1, p)});
        return objects;
    }
    if (name == "two-object") {
        objects.push_back({85.0, 6, 6, bmd::linear_path(6, 2, 0, 1, p)});
        objects.push_back({15.0, 6, 5, bmd::linear_path(14, n - 9, 1, 0, p)});
        return objects;
    }
    if (name == "crossing") {
        objects.push_back({200.0, 6, 6, bmd::linear_path(22, 2, 0, 1, p)});
        objects.push_back({60.0, 6, 6, bmd::linear_path(5, 20, 1, 0, p)});
        return objects;
    }
    throw bmd::dim_error("unknown scenario: " + name);
}

bmd::Matrix make_backdrop(const SynthOpts& o) {
    if (o.background == "constant")
        return bmd::constant_background(o.rows, o.cols, o.bg_value);
    if (o.background == "gradient")
        return bmd::gradient_background(o.rows, o.cols);
    if (o.background == "noise")
        return bmd::value_noise_background(o.rows, o.cols, o.seed);
    throw bmd::dim_error("unknown background kind: " + o.background);
}

int cmd_synth(const SynthOpts& o) {
    const bmd::Matrix backdrop = make_backdrop(o);
    const auto objects = scenario_objects(o.scenario, o.cols, o.frames);
    const bmd::GenerativeVideo gv = bmd::synth_video(backdrop, objects, o.frames);

    OutputGuard guard;
    guard.ensure_dir(o.out);
    const fs::path out(o.out);

    guard.track(out / "frames");
    bmd::write_frames_pgm(gv.video, (out / "frames").string(), "frame");

    guard.track(out / "video.bmdt");
    bmd::write_tensor((out / "video.bmdt").string(), gv.video);

    bmd::FactorBundleMeta meta;
    meta.reg_enabled = false;
    guard.track(out / "truth.bmdf");
    bmd::write_factors((out / "truth.bmdf").string(), gv.factors, meta);

    guard.track(out / "background.pgm");
    bmd::write_pgm((out / "background.pgm").string(), backdrop);

    if (o.color) {
        const bmd::Tensor4 color =
            bmd::stack_channels({gv.video, gv.video, gv.video});
        guard.track(out / "frames_color");
        bmd::write_frames_ppm(color, (out / "frames_color").string(), "frame");
        guard.track(out / "video_color.bmdt");
        bmd::write_tensor((out / "video_color.bmdt").string(), color);
    }

    std::ostringstream kv;
    kv.precision(17);
    kv << "scenario=" << o.scenario << '\n'
       << "background=" << o.background << '\n'
       << "rows=" << o.rows << '\n'
       << "cols=" << o.cols << '\n'
       << "frames=" << o.frames << '\n'
       << "objects=" << objects.size() << '\n'
       << "declared_rank=" << gv.bm_rank << '\n'
       << "occluded=" << (gv.occluded ? 1 : 0) << '\n'
       << "out=" << o.out << '\n';
    write_text(guard, out / "info.txt", kv.str());
    std::cout << kv.str();

    guard.disarm();
    return 0;
}

// ---------------------------------------------------------------------------
// decompose
// ---------------------------------------------------------------------------

struct DecompOpts {
    std::string input;
    std::string out = "decomp_out";
    std::size_t rank = 0;
    std::string init = "svd";
    std::size_t dmd_segment = 0;
    double dmd_delta = 1e-2;
    bool color = false;
    bool scale = false;
    bool no_reg = false;
    bool reg_a = false;
    double lambda1 = 0.01;
    double lambda = 1.0;
    double beta = 1.0;
    double gamma = 1.0;
    double coupling_weight = 1.0;
    std::size_t max_sweeps = 100;
    double tol = 1e-5;
    unsigned threads = 0;
};

bmd::Regularization make_reg(const DecompOpts& o, std::size_t rank) {
    if (o.no_reg) return bmd::Regularization::none();
    bmd::Regularization reg;
    reg.lambda = bmd::Vector::Constant(static_cast<Eigen::Index>(rank), o.lambda);
    reg.lambda(0) = o.lambda1;
    reg.beta = o.beta;
    reg.gamma = o.gamma;
    return reg;
}

void report_solve(std::ostream& os, const bmd::SolveReport& rep,
                  std::size_t m, std::size_t p, std::size_t n, std::size_t q,
                  std::size_t rank, const std::string& init) {
    os.precision(17);
    os << "m=" << m << '\n'
       << "p=" << p << '\n'
       << "n=" << n << '\n'
       << "q=" << q << '\n'
       << "rank=" << rank << '\n'
       << "init=" << init << '\n'
       << "stop_reason=" << bmd::to_string(rep.reason) << '\n'
       << "sweeps=" << rep.sweeps_run << '\n'
       << "wall_seconds=" << rep.wall_seconds << '\n';
    if (!rep.trace.empty()) {
        const bmd::SweepStats& last = rep.trace.back();
        os << "misfit=" << last.misfit << '\n'
           << "psi=" << last.psi << '\n'
           << "re=" << last.re << '\n'
           << "rel_change=" << last.rel_change << '\n';
    }
    os << "cr=" << bmd::compression_ratio(m, p, n, rank) << '\n';
}

int cmd_decompose(const DecompOpts& o) {
    const unsigned threads = resolve_threads(o.threads);
    if (o.rank < 1) throw bmd::dim_error("--rank must be at least 1");

    OutputGuard guard;
    guard.ensure_dir(o.out);
    const fs::path out(o.out);

    bmd::SolveOptions opts;
    opts.max_sweeps = o.max_sweeps;
    opts.rel_tol = o.tol;
    opts.threads = threads;

    std::ostringstream kv;
    if (!o.color) {
        const bmd::Tensor3 X = load_video3(o.input, o.scale);
        bmd::BmdFactors init;
        if (o.init == "svd") {
            init = bmd::slicewise_svd_init(X, o.rank, threads);
        } else if (o.dmd_segment > 0) {
            init = bmd::dmd_segmented_init(X, o.rank, o.dmd_segment, o.dmd_delta);
        } else {
            init = bmd::dmd_to_bmd(bmd::dmd_fit(X, o.rank, o.dmd_delta), X.p());
        }
        // DMD mode pairing can land on a different slot count than requested.
        const std::size_t rank = init.rank();
        opts.reg = make_reg(o, rank);

        const auto [f, rep] = bmd::bmd_als(X, init, opts);

        bmd::FactorBundleMeta meta;
        meta.reg_enabled = opts.reg.enabled;
        if (opts.reg.enabled) meta.lambda = opts.reg.resolved_lambda(rank);
        meta.beta = opts.reg.beta;
        meta.gamma = opts.reg.gamma;
        meta.sweeps = rep.sweeps_run;
        guard.track(out / "factors.bmdf");
        bmd::write_factors((out / "factors.bmdf").string(), f, meta);

        std::ostringstream trace;
        bmd::write_trace_csv(rep, trace);
        write_text(guard, out / "trace.csv", trace.str());

        report_solve(kv, rep, X.m(), X.p(), X.n(), 1, rank, o.init);
    } else {
        const bmd::Tensor4 X = load_video4(o.input, o.scale);
        if (o.init != "svd")
            throw bmd::dim_error("color decomposition supports --init svd only");
        const bmd::Bmd4Factors init = bmd::als4_init(X, o.rank, threads);
        const std::size_t rank = init.rank();
        opts.reg = make_reg(o, rank);

        bmd::ChannelCoupling coupling;
        coupling.enabled = o.coupling_weight > 0;
        coupling.weight = o.coupling_weight;

        const auto [f, rep] = bmd::bmd_als4(X, init, opts, coupling, o.reg_a);

        bmd::FactorBundleMeta meta;
        meta.reg_enabled = opts.reg.enabled;
        if (opts.reg.enabled) meta.lambda = opts.reg.resolved_lambda(rank);
        meta.beta = opts.reg.beta;
        meta.gamma = opts.reg.gamma;
        meta.coupling_enabled = coupling.enabled;
        meta.coupling_weight = coupling.weight;
        meta.sweeps = rep.sweeps_run;
        guard.track(out / "factors.bmdf");
        bmd::write_factors4((out / "factors.bmdf").string(), f, meta);

        std::ostringstream trace;
        bmd::write_trace_csv(rep, trace);
        write_text(guard, out / "trace.csv", trace.str());

        report_solve(kv, rep, X.m(), X.p(), X.n(), X.q(), rank, o.init);
    }

    write_text(guard, out / "report.txt", kv.str());
    std::cout << kv.str();
    guard.disarm();
    return 0;
}

// ---------------------------------------------------------------------------
// separate
// ---------------------------------------------------------------------------

struct SepOpts {
    std::string factors;
    std::string out = "sep_out";
    bool scale = false;
    unsigned threads = 0;
};

int cmd_separate(const SepOpts& o) {
    const unsigned threads = resolve_threads(o.threads);
    const bmd::FactorBundleMeta meta = bmd::read_factors_info(o.factors);

    OutputGuard guard;
    guard.ensure_dir(o.out);
    const fs::path out(o.out);

    std::size_t frames = 0;
    if (meta.order == 3) {
        const auto [f, m] = bmd::read_factors(o.factors);
        (void)m;
        const auto [bg, fg] = bmd::separate(f, threads);
        guard.track(out / "background.bmdt");
        bmd::write_tensor((out / "background.bmdt").string(), bg);
        guard.track(out / "foreground.bmdt");
        bmd::write_tensor((out / "foreground.bmdt").string(), fg);
        guard.track(out / "background");
        bmd::write_frames_pgm(bg, (out / "background").string(), "frame", o.scale);
        guard.track(out / "foreground");
        bmd::write_frames_pgm(fg, (out / "foreground").string(), "frame", o.scale);
        frames = bg.p();
    } else {
        const auto [f, m] = bmd::read_factors4(o.factors);
        (void)m;
        const auto [bg, fg] = bmd::separate4(f, threads);
        guard.track(out / "background.bmdt");
        bmd::write_tensor((out / "background.bmdt").string(), bg);
        guard.track(out / "foreground.bmdt");
        bmd::write_tensor((out / "foreground.bmdt").string(), fg);
        guard.track(out / "background");
        bmd::write_frames_ppm(bg, (out / "background").string(), "frame", o.scale);
        guard.track(out / "foreground");
        bmd::write_frames_ppm(fg, (out / "foreground").string(), "frame", o.scale);
        frames = bg.p();
    }

    std::ostringstream kv;
    kv << "order=" << static_cast<unsigned>(meta.order) << '\n'
       << "rank=" << meta.rank << '\n'
       << "frames=" << frames << '\n'
       << "out=" << o.out << '\n';
    std::cout << kv.str();
    guard.disarm();
    return 0;
}

// ---------------------------------------------------------------------------
// metrics
// ---------------------------------------------------------------------------

struct MetOpts {
    std::string input;
    std::string factors;
    std::string gt_bg;
    std::string mode = "first";
    double tau = 20.0;
    std::string out;
    bool scale = false;
    unsigned threads = 0;
};

int cmd_metrics(const MetOpts& o) {
    const unsigned threads = resolve_threads(o.threads);
    const bmd::FactorBundleMeta meta = bmd::read_factors_info(o.factors);

    bmd::EvalMode mode;
    if (o.mode == "first")
        mode = bmd::EvalMode::first_frame;
    else if (o.mode == "mean")
        mode = bmd::EvalMode::per_frame_mean;
    else
        throw bmd::dim_error("--mode must be first or mean");

    std::ostringstream kv;
    kv.precision(17);
    kv << "order=" << static_cast<unsigned>(meta.order) << '\n'
       << "rank=" << meta.rank << '\n';

    bmd::Tensor3 bg_gray;  // background sequence used for image scoring
    if (meta.order == 3) {
        const bmd::Tensor3 X = load_video3(o.input, o.scale);
        const auto [f, m] = bmd::read_factors(o.factors);
        (void)m;
        const bmd::Tensor3 Xhat = bmd::bmp(f, threads);
        kv << "re=" << bmd::relative_error(X, Xhat) << '\n'
           << "cr=" << bmd::compression_ratio(f.m(), f.p(), f.n(), f.rank())
           << '\n';
        bg_gray = bmd::separate(f, threads).first;
    } else {
        const bmd::Tensor4 X = load_video4(o.input, o.scale);
        const auto [f, m] = bmd::read_factors4(o.factors);
        (void)m;
        const bmd::Tensor4 Xhat = bmd::bmp4(f, threads);
        kv << "re=" << bmd::relative_error(X, Xhat) << '\n'
           << "cr=" << bmd::compression_ratio(f.m(), f.p(), f.n(), f.rank())
           << '\n';
        bg_gray = bmd::luma_video(bmd::separate4(f, threads).first);
    }

    bmd::BackgroundReport rep;
    const bool have_gt = !o.gt_bg.empty();
    if (have_gt) {
        const bmd::Matrix gt = bmd::read_pgm(o.gt_bg);
        if (o.scale)
            scale_in_place(bg_gray.data(), bg_gray.size(), 255.0);
        rep = bmd::evaluate_background(gt, bg_gray, mode, o.tau);
        bmd::write_report_kv(rep, kv);
    }

    if (!o.out.empty()) {
        OutputGuard guard;
        guard.ensure_dir(o.out);
        write_text(guard, fs::path(o.out) / "metrics.txt", kv.str());
        if (have_gt) {
            std::ostringstream csv;
            bmd::write_report_csv(rep, csv);
            write_text(guard, fs::path(o.out) / "metrics.csv", csv.str());
        }
        guard.disarm();
    }
    std::cout << kv.str();
    return 0;
}

// ---------------------------------------------------------------------------
// info
// ---------------------------------------------------------------------------

struct InfoOpts {
    std::string input;
    bool rank_bound = true;
};

int cmd_info(const InfoOpts& o) {
    std::ifstream probe(o.input, std::ios::binary);
    if (!probe)
        throw bmd::io_error(bmd::io_errc::open_failed, "cannot open " + o.input);
    char magic[4] = {};
    probe.read(magic, 4);
    if (!probe)
        throw bmd::io_error(bmd::io_errc::truncated, "file shorter than its magic");
    probe.close();

    std::ostringstream kv;
    kv.precision(17);
    if (std::string(magic, 4) == "BMDT") {
        const bmd::ContainerInfo info = bmd::read_tensor_info(o.input);
        kv << "kind=tensor\n"
           << "version=" << static_cast<unsigned>(info.version) << '\n'
           << "order=" << static_cast<unsigned>(info.order) << '\n'
           << "dims=" << join_dims(info.dims) << '\n';
        if (info.order == 3 && o.rank_bound) {
            const bmd::Tensor3 X = bmd::read_tensor3(o.input);
            kv << "rank_bound=" << bmd::bm_rank_upper_bound(X) << '\n';
        }
    } else if (std::string(magic, 4) == "BMDF") {
        const bmd::FactorBundleMeta meta = bmd::read_factors_info(o.input);
        kv << "kind=bundle\n"
           << "order=" << static_cast<unsigned>(meta.order) << '\n'
           << "rank=" << meta.rank << '\n'
           << "dims=" << meta.m << 'x' << meta.p << 'x' << meta.n;
        if (meta.order == 4) kv << 'x' << meta.q;
        kv << '\n'
           << "reg_enabled=" << (meta.reg_enabled ? 1 : 0) << '\n';
        if (meta.lambda.size() > 0) {
            kv << "lambda=";
            for (Eigen::Index t = 0; t < meta.lambda.size(); ++t) {
                if (t) kv << ',';
                kv << meta.lambda(t);
            }
            kv << '\n';
        }
        kv << "beta=" << meta.beta << '\n'
           << "gamma=" << meta.gamma << '\n'
           << "coupling_enabled=" << (meta.coupling_enabled ? 1 : 0) << '\n'
           << "coupling_weight=" << meta.coupling_weight << '\n'
           << "sweeps=" << meta.sweeps << '\n';
    } else {
        throw bmd::io_error(bmd::io_errc::bad_magic,
                            "not a tensor container or factor bundle");
    }
    std::cout << kv.str();
    return 0;
}

}  // namespace

// ---------------------------------------------------------------------------
// main
// ---------------------------------------------------------------------------

int main(int argc, char** argv) {
    CLI::App app{"low BM-rank video decomposition toolkit"};
    app.set_version_flag("--version", "bmdkit 1.0.0");
    app.set_config("--config", "", "read options from an INI file");
    bool dump_config = false;
    app.add_flag("--dump-config", dump_config,
                 "print the effective configuration and exit")
        ->configurable(false);
    app.require_subcommand(0, 1);

    SynthOpts so;
    CLI::App* synth =
        app.add_subcommand("synth", "render a synthetic clip with ground truth");
    synth->configurable();
    synth->fallthrough();
    synth->add_option("--out", so.out, "output directory")->capture_default_str();
    synth->add_option("--scenario", so.scenario, "object preset")
        ->check(CLI::IsMember({"empty", "one-object", "two-object", "crossing"}))
        ->capture_default_str();
    synth->add_option("--background", so.background, "backdrop kind")
        ->check(CLI::IsMember({"constant", "gradient", "noise"}))
        ->capture_default_str();
    synth->add_option("--rows", so.rows, "frame height")->capture_default_str();
    synth->add_option("--cols", so.cols, "frame width")->capture_default_str();
    synth->add_option("--frames", so.frames, "clip length")->capture_default_str();
    synth->add_option("--bg-value", so.bg_value, "constant backdrop gray level")
        ->capture_default_str();
    synth->add_option("--seed", so.seed, "value-noise seed")->capture_default_str();
    synth->add_flag("--color", so.color,
                    "also emit channel-replicated color frames");

    DecompOpts dopt;
    CLI::App* decompose = app.add_subcommand(
        "decompose", "fit a low BM-rank model with regularized ALS");
    decompose->configurable();
    decompose->fallthrough();
    decompose->add_option("--input", dopt.input, ".bmdt file or frames directory")
        ->required();
    decompose->add_option("--out", dopt.out, "output directory")
        ->capture_default_str();
    decompose->add_option("--rank", dopt.rank, "number of BM terms")->required();
    decompose->add_option("--init", dopt.init, "initialization method")
        ->check(CLI::IsMember({"svd", "dmd"}))
        ->capture_default_str();
    decompose->add_option("--dmd-segment", dopt.dmd_segment,
                          "frames per DMD window (0 = whole clip)")
        ->capture_default_str();
    decompose->add_option("--dmd-delta", dopt.dmd_delta,
                          "modulus band treated as stationary")
        ->capture_default_str();
    decompose->add_flag("--color", dopt.color, "treat input as an order-4 clip");
    decompose->add_flag("--scale", dopt.scale, "map pixel values to [0,1]");
    decompose->add_flag("--no-reg", dopt.no_reg, "disable regularization");
    decompose->add_flag("--reg-a", dopt.reg_a,
                        "also ridge-penalize A in the color solver");
    decompose->add_option("--lambda1", dopt.lambda1,
                          "weight on the first (background) slice of A")
        ->capture_default_str();
    decompose->add_option("--lambda", dopt.lambda, "weight on remaining A slices")
        ->capture_default_str();
    decompose->add_option("--beta", dopt.beta, "weight on B")->capture_default_str();
    decompose->add_option("--gamma", dopt.gamma, "weight on C")
        ->capture_default_str();
    decompose->add_option("--coupling-weight", dopt.coupling_weight,
                          "cross-channel tie strength (0 disables)")
        ->capture_default_str();
    decompose->add_option("--max-sweeps", dopt.max_sweeps, "sweep budget")
        ->capture_default_str();
    decompose->add_option("--tol", dopt.tol, "relative-change stopping tolerance")
        ->capture_default_str();
    decompose->add_option("--threads", dopt.threads,
                          "worker threads (0 = BMDKIT_THREADS or 1)")
        ->capture_default_str();

    SepOpts sep;
    CLI::App* separate = app.add_subcommand(
        "separate", "write background/foreground sequences from a bundle");
    separate->configurable();
    separate->fallthrough();
    separate->add_option("--factors", sep.factors, "factor bundle (.bmdf)")
        ->required();
    separate->add_option("--out", sep.out, "output directory")
        ->capture_default_str();
    separate->add_flag("--scale", sep.scale,
                       "frames were solved in [0,1]; rescale on write");
    separate->add_option("--threads", sep.threads,
                         "worker threads (0 = BMDKIT_THREADS or 1)")
        ->capture_default_str();

    MetOpts met;
    CLI::App* metrics =
        app.add_subcommand("metrics", "score a bundle against the original clip");
    metrics->configurable();
    metrics->fallthrough();
    metrics->add_option("--input", met.input, "original clip (.bmdt or frames dir)")
        ->required();
    metrics->add_option("--factors", met.factors, "factor bundle (.bmdf)")
        ->required();
    metrics->add_option("--gt-bg", met.gt_bg, "ground-truth background image (PGM)");
    metrics->add_option("--mode", met.mode, "background scoring mode")
        ->check(CLI::IsMember({"first", "mean"}))
        ->capture_default_str();
    metrics->add_option("--tau", met.tau, "error-pixel threshold")
        ->capture_default_str();
    metrics->add_option("--out", met.out, "optional directory for reports");
    metrics->add_flag("--scale", met.scale, "inputs were solved in [0,1]");
    metrics->add_option("--threads", met.threads,
                        "worker threads (0 = BMDKIT_THREADS or 1)")
        ->capture_default_str();

    InfoOpts inf;
    CLI::App* info =
        app.add_subcommand("info", "echo a container or bundle header");
    info->configurable();
    info->fallthrough();
    info->add_option("--input", inf.input, "file to inspect")->required();
    info->add_flag("--rank-bound,!--no-rank-bound", inf.rank_bound,
                   "compute the slicewise BM-rank bound for order-3 tensors");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;
    }

    if (dump_config) {
        std::cout << app.config_to_str(true, true);
        return 0;
    }

    try {
        if (synth->parsed()) return cmd_synth(so);
        if (decompose->parsed()) return cmd_decompose(dopt);
        if (separate->parsed()) return cmd_separate(sep);
        if (metrics->parsed()) return cmd_metrics(met);
        if (info->parsed()) return cmd_info(inf);
        std::cerr << "no subcommand given; see --help\n";
        return 1;
    } catch (const bmd::io_error& e) {
        std::cerr << "io error: " << e.what() << '\n';
        return 2;
    } catch (const bmd::dim_error& e) {
        std::cerr << "invalid input: " << e.what() << '\n';
        return 3;
    } catch (const bmd::numerical_error& e) {
        std::cerr << "numerical failure: " << e.what() << '\n';
        return 4;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}
