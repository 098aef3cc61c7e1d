#include "tomopipe/cli.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <unistd.h>

#include "tomopipe/phantom.hpp"

namespace tomopipe {
namespace {

std::string format_bytes(std::size_t bytes) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%zu bytes (%.1f MiB)", bytes, static_cast<double>(bytes) / (1024.0 * 1024.0));
    return buf;
}

void print_plan(std::ostream& out, const PipelinePlan& plan, std::size_t estimate) {
    out << "stages:";
    for (const auto& s : plan.stages) out << ' ' << s.name << '(' << s.workers << "w/" << s.queue_capacity << "q)";
    out << "\nblock size: " << plan.block_size << "\nmemory estimate: " << format_bytes(estimate);
    if (plan.memory_budget > 0) out << ", budget " << format_bytes(plan.memory_budget);
    out << '\n';
}

// Removes a scratch directory it created.
class ScratchDir {
public:
    explicit ScratchDir(std::filesystem::path requested) {
        if (requested.empty()) {
            path_ = std::filesystem::temp_directory_path() / ("tomopipe-bench-" + std::to_string(::getpid()));
            owned_ = true;
        } else {
            path_ = std::move(requested);
        }
        std::filesystem::create_directories(path_);
    }
    ~ScratchDir() {
        if (owned_) {
            std::error_code ec;
            std::filesystem::remove_all(path_, ec);
        }
    }
    const std::filesystem::path& path() const noexcept { return path_; }

private:
    std::filesystem::path path_;
    bool owned_ = false;
};

}  // namespace

double slice_coordinate(std::size_t slice, std::size_t n_slices) { return pixel_coordinate(n_slices, slice); }

void cmd_phantom(const PhantomOptions& opt) {
    if (opt.n < 2 || opt.angles == 0 || opt.slices == 0) {
        throw std::invalid_argument("phantom: need --n >= 2, --angles >= 1, --slices >= 1");
    }
    if (opt.counts && !(opt.flat_level > opt.dark_level && opt.dark_level >= 0.0)) {
        throw std::invalid_argument("phantom: need flat level > dark level >= 0");
    }
    const Ellipsoid e(opt.a, opt.b, opt.c, opt.rho, {opt.center_u1, opt.center_u2, opt.center_s});
    const DetectorAxis detector(opt.n);
    const AngleAxis angles(opt.angles);

    VolumeWriter writer(opt.output, VolumeHeader::frames(opt.angles, opt.slices, opt.n));
    for (std::size_t k = 0; k < opt.slices; ++k) {
        Sinogram y = analytic_sinogram(e, slice_coordinate(k, opt.slices), detector, angles);
        if (opt.counts) {
            RealArray counts = y.data();
            for (double& v : counts.values()) v = opt.dark_level + (opt.flat_level - opt.dark_level) * std::exp(-v);
            y = Sinogram(detector, angles, std::move(counts));
        }
        writer.write_sinogram(k, y);
    }
    if (opt.counts) {
        const auto header = VolumeHeader::frames(1, opt.slices, opt.n);
        write_volume(flat_path(opt.output), header,
                     std::vector<float>(header.count(), static_cast<float>(opt.flat_level)));
        write_volume(dark_path(opt.output), header,
                     std::vector<float>(header.count(), static_cast<float>(opt.dark_level)));
    } else {
        // Stale sidecars from an earlier counts run would be picked up by reconstruct.
        std::filesystem::remove(flat_path(opt.output));
        std::filesystem::remove(dark_path(opt.output));
    }
    writer.finish();
}

ReconResult cmd_reconstruct(const ReconOptions& opt, std::ostream& out) {
    if (!opt.dry_run && opt.output.empty()) throw std::invalid_argument("reconstruct: --output is required");
    ReconstructionConfig cfg = opt.config;
    cfg.write = !opt.dry_run;

    ReconstructionIo io;
    io.reader = std::make_shared<BlockReader>(opt.input, cfg.block_size);
    const VolumeHeader& in = io.reader->header();
    if (cfg.normalize) {
        if (auto fd = load_flat_dark(opt.input, in)) io.flat_dark = std::make_shared<const FlatDarkVolume>(std::move(*fd));
    }
    const std::size_t n = cfg.output_n ? cfg.output_n : in.n_detector();

    ReconResult result;
    // The plan without its write stage, plus what that stage would hold, so
    // the estimate is known before anything touches the output path.
    {
        ReconstructionConfig probe = cfg;
        probe.write = false;
        const PipelinePlan plan = build_reconstruction_pipeline(probe, io);
        const std::size_t writer_bytes =
            (1 + cfg.queue_capacity) * cfg.block_size * n * n * (sizeof(double) + sizeof(float));
        result.memory_estimate = estimate_memory(plan) + writer_bytes;
        if (opt.dry_run) {
            print_plan(out, plan, result.memory_estimate);
            out << "write stage: S(1w/" << cfg.queue_capacity << "q) to " << opt.output.string() << " ("
                << in.n_slices() << " x " << n << " x " << n << "), not run\n";
            if (cfg.center == CenterMode::volume) out << "center: estimated on the middle slice at run time\n";
            return result;
        }
        if (cfg.memory_budget > 0 && !cfg.allow_over_budget && result.memory_estimate > cfg.memory_budget) {
            throw MemoryBudgetError(result.memory_estimate, cfg.memory_budget);
        }
    }

    if (cfg.center == CenterMode::volume) {
        result.center = estimate_volume_center(*io.reader, io.flat_dark.get());
        cfg.center_beta = result.center->beta;
        out << "center: beta = " << result.center->beta_bins << " bins (confidence "
            << result.center->confidence << ")\n";
    }

    io.writer = std::make_shared<VolumeWriter>(opt.output, VolumeHeader::slices(in.n_slices(), n, n));
    PipelinePlan plan = build_reconstruction_pipeline(cfg, io);
    result.metrics = run_pipeline(plan, block_requests(*io.reader), [](JobTicket&&) {});
    io.writer->finish();

    const auto metrics_path = opt.metrics.empty() ? std::filesystem::path(opt.output.string() + ".metrics.csv") : opt.metrics;
    std::ofstream csv(metrics_path);
    if (!csv) throw IoError(metrics_path.string() + ": cannot create");
    write_metrics_csv(csv, result.metrics);
    csv.flush();
    if (!csv) throw IoError(metrics_path.string() + ": write failed");

    out << format_summary(result.metrics);
    char buf[64];
    std::snprintf(buf, sizeof buf, "wall time: %.3f s\n", result.metrics.wall_s);
    out << buf;
    return result;
}

double time_pipeline(const std::filesystem::path& input, Kernel kernel, std::size_t block_size,
                     std::size_t workers, bool read_only) {
    ReconstructionConfig cfg;
    cfg.kernel = kernel;
    cfg.block_size = block_size;
    cfg.workers = workers;
    ReconstructionIo io;
    io.reader = std::make_shared<BlockReader>(input, block_size);
    PipelinePlan plan = build_reconstruction_pipeline(cfg, io);
    if (read_only) plan.stages.resize(1);
    return run_pipeline(plan, block_requests(*io.reader), [](JobTicket&&) {}).wall_s;
}

std::vector<BenchRow> cmd_bench(const BenchOptions& opt, std::ostream& csv) {
    if (opt.sizes.empty() || opt.block_sizes.empty() || opt.kernels.empty() || opt.workers.empty()) {
        throw std::invalid_argument("bench: size, blocksize, kernel and workers lists must be non-empty");
    }
    if (opt.repeat == 0 || opt.slices == 0) throw std::invalid_argument("bench: --repeat and --slices must be >= 1");
    std::vector<Kernel> kernels;
    for (const auto& k : opt.kernels) kernels.push_back(parse_kernel(k));

    ScratchDir dir(opt.workdir);
    std::vector<BenchRow> rows;
    csv << "size,Q,kernel,workers,rep,seconds,mode\n";
    for (std::size_t size : opt.sizes) {
        PhantomOptions ph;
        ph.output = dir.path() / ("phantom_" + std::to_string(size) + ".tomovol");
        ph.n = size;
        ph.angles = size;
        ph.slices = opt.slices;
        cmd_phantom(ph);
        for (std::size_t q : opt.block_sizes) {
            for (Kernel kernel : kernels) {
                for (std::size_t w : opt.workers) {
                    for (std::size_t rep = 0; rep < opt.repeat; ++rep) {
                        BenchRow row{size, q, to_string(kernel), w, rep,
                                     time_pipeline(ph.output, kernel, q, w, opt.read_only),
                                     opt.read_only ? "read" : "full"};
                        char buf[64];
                        std::snprintf(buf, sizeof buf, "%.6f", row.seconds);
                        csv << row.size << ',' << row.block_size << ',' << row.kernel << ',' << row.workers << ','
                            << row.rep << ',' << buf << ',' << row.mode << '\n';
                        csv.flush();
                        rows.push_back(std::move(row));
                    }
                }
            }
        }
        std::filesystem::remove(ph.output);
    }
    return rows;
}

void cmd_inspect(const InspectOptions& opt, std::ostream& out) {
    BlockReader reader(opt.input, 1);
    const VolumeHeader& h = reader.header();
    const bool frames = h.layout == Layout::frames;
    out << "file: " << opt.input.string() << '\n'
        << "layout: " << (frames ? "frames [angle][slice][detector]" : "slices [slice][row][column]") << " ("
        << static_cast<int>(h.layout) << ")\n"
        << "dims: " << h.dims[0] << " x " << h.dims[1] << " x " << h.dims[2] << '\n'
        << "slices: " << h.n_slices() << ", " << (frames ? "angles: " : "rows: ") << h.n_angles() << ", "
        << (frames ? "detector: " : "columns: ") << h.n_detector() << '\n'
        << "dtype: float32 little-endian\n"
        << "bytes: " << h.file_bytes() << '\n';

    const std::size_t k = opt.export_slice.value_or(h.n_slices() / 2);
    if (k >= h.n_slices()) {
        throw std::invalid_argument("inspect: slice " + std::to_string(k) + " outside 0.." +
                                    std::to_string(h.n_slices() - 1));
    }
    const auto raw = reader.read_raw(k, 1);
    RealArray slice(h.n_angles(), h.n_detector(), std::vector<double>(raw.begin(), raw.end()));
    const auto [lo, hi] = std::minmax_element(raw.begin(), raw.end());
    double sum = 0.0;
    for (float v : raw) sum += v;
    char buf[160];
    std::snprintf(buf, sizeof buf, "slice %zu: min %.6g, max %.6g, mean %.6g\n", k, static_cast<double>(*lo),
                  static_cast<double>(*hi), sum / static_cast<double>(raw.size()));
    out << buf;

    if (opt.export_slice) {
        auto target = opt.output;
        if (target.empty()) {
            target = opt.input.string() + ".slice" + std::to_string(k) + (opt.format == ImageFormat::pgm16 ? ".pgm" : ".csv");
        }
        export_array(slice, target, opt.format);
        out << "exported: " << target.string() << '\n';
    }
}

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"CPU tomography toolkit: phantoms, reconstruction, benchmarks"};
    app.name("tomopipe");
    app.require_subcommand(1);

    PhantomOptions ph;
    std::string ph_output;
    auto* phantom = app.add_subcommand("phantom", "Write a frame-major volume of analytic ellipsoid sinograms");
    phantom->add_option("--output", ph_output, "Output TOMOVOL1 path")->required();
    phantom->add_option("--n", ph.n, "Detector samples per row")->capture_default_str();
    phantom->add_option("--angles", ph.angles, "Projection angles over [0, pi)")->capture_default_str();
    phantom->add_option("--slices", ph.slices, "Number of slices")->capture_default_str();
    phantom->add_option("--a", ph.a, "Semi-axis along u1")->capture_default_str();
    phantom->add_option("--b", ph.b, "Semi-axis along u2")->capture_default_str();
    phantom->add_option("--c", ph.c, "Semi-axis along the slice axis")->capture_default_str();
    phantom->add_option("--rho", ph.rho, "Density")->capture_default_str();
    phantom->add_option("--u1", ph.center_u1, "Centre offset along u1")->capture_default_str();
    phantom->add_option("--u2", ph.center_u2, "Centre offset along u2")->capture_default_str();
    phantom->add_option("--s", ph.center_s, "Centre offset along the slice axis")->capture_default_str();
    phantom->add_flag("--counts", ph.counts, "Write detector counts plus .flat/.dark sidecars");
    phantom->add_option("--flat", ph.flat_level, "Flat-field level I0 for --counts")->capture_default_str();
    phantom->add_option("--dark", ph.dark_level, "Dark level D for --counts")->capture_default_str();

    ReconOptions rc;
    std::string rc_input, rc_output, rc_metrics, rc_kernel = "bst", rc_center = "off", rc_rings = "off";
    std::optional<double> rc_apodize;
    bool rc_no_normalize = false;
    auto* recon = app.add_subcommand("reconstruct", "Filtered backprojection of every slice through the pipeline");
    recon->add_option("--input", rc_input, "Input TOMOVOL1 sinogram volume")->required();
    recon->add_option("--output", rc_output, "Output slice-major TOMOVOL1 volume");
    recon->add_option("--metrics", rc_metrics, "Per-stage metrics CSV (default <output>.metrics.csv)");
    recon->add_option("--kernel", rc_kernel, "Backprojection kernel")->check(CLI::IsMember({"ss", "bst"}))->capture_default_str();
    recon->add_option("--blocksize", rc.config.block_size, "Slices per job (Q)")->check(CLI::PositiveNumber)->capture_default_str();
    recon->add_option("--workers", rc.config.workers, "Workers per compute stage")->check(CLI::PositiveNumber)->capture_default_str();
    recon->add_option("--queue", rc.config.queue_capacity, "Queue capacity per stage")->check(CLI::PositiveNumber)->capture_default_str();
    recon->add_flag("--no-normalize", rc_no_normalize, "Drop the normalization stage");
    recon->add_option("--center", rc_center, "Rotation-axis correction")->check(CLI::IsMember({"off", "volume", "slice"}))->capture_default_str();
    recon->add_option("--rings", rc_rings, "Ring suppression stage")->check(CLI::IsMember({"off", "on"}))->capture_default_str();
    recon->add_option("--ring-window", rc.config.ring_window, "Median window of the ring filter (odd)")->capture_default_str();
    recon->add_option("--apodize", rc_apodize, "Raised-cosine taper start as a fraction of Nyquist, (0, 1]")->check(CLI::Range(0.0, 1.0));
    recon->add_option("--pad-factor", rc.config.bst.pad_factor, "BST padding factor")->capture_default_str();
    recon->add_option("--kb-beta", rc.config.bst.kb_beta, "BST origin window shape")->capture_default_str();
    recon->add_option("--kb-support", rc.config.bst.kb_support, "BST origin window half-width")->capture_default_str();
    recon->add_option("--memory-budget", rc.config.memory_budget, "Memory budget in bytes (0 = unlimited)")->capture_default_str();
    recon->add_flag("--ignore-budget", rc.config.allow_over_budget, "Run even if the estimate exceeds the budget");
    recon->add_flag("--dry-run", rc.dry_run, "Print the plan and memory estimate only");

    BenchOptions bo;
    std::string bo_output;
    auto* bench = app.add_subcommand("bench", "Time the pipeline over sizes, block sizes, kernels and workers");
    bench->add_option("--sizes", bo.sizes, "Grid sizes (n = n_t = angles)")->delimiter(',')->capture_default_str();
    bench->add_option("--blocksize", bo.block_sizes, "Block sizes Q")->delimiter(',')->capture_default_str();
    bench->add_option("--kernel", bo.kernels, "Kernels")->delimiter(',')->check(CLI::IsMember({"ss", "bst"}))->capture_default_str();
    bench->add_option("--workers", bo.workers, "Workers per compute stage")->delimiter(',')->capture_default_str();
    bench->add_option("--repeat", bo.repeat, "Repetitions per cell")->check(CLI::PositiveNumber)->capture_default_str();
    bench->add_option("--slices", bo.slices, "Slices in each generated volume")->check(CLI::PositiveNumber)->capture_default_str();
    bench->add_flag("--read-only", bo.read_only, "Time only the read stage");
    bench->add_option("--output", bo_output, "CSV path (default stdout)");

    InspectOptions io;
    std::string io_input, io_output, io_format = "pgm16";
    std::optional<std::size_t> io_slice;
    auto* inspect = app.add_subcommand("inspect", "Print a container summary and optionally export a slice");
    inspect->add_option("--input,input", io_input, "TOMOVOL1 file")->required();
    inspect->add_option("--export-slice", io_slice, "Slice to export");
    inspect->add_option("--format", io_format, "Export format")->check(CLI::IsMember({"pgm16", "csv"}))->capture_default_str();
    inspect->add_option("--output", io_output, "Export path");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e, out, err) == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (phantom->parsed()) {
            ph.output = ph_output;
            cmd_phantom(ph);
        } else if (recon->parsed()) {
            rc.input = rc_input;
            rc.output = rc_output;
            rc.metrics = rc_metrics;
            rc.config.kernel = parse_kernel(rc_kernel);
            rc.config.normalize = !rc_no_normalize;
            rc.config.center = parse_center_mode(rc_center);
            rc.config.rings = rc_rings == "on";
            if (rc_apodize) {
                if (!(*rc_apodize > 0.0)) throw std::invalid_argument("--apodize must lie in (0, 1]");
                rc.config.filter = {FilterKind::ramp_apodized, *rc_apodize};
            }
            cmd_reconstruct(rc, out);
        } else if (bench->parsed()) {
            if (bo_output.empty()) {
                cmd_bench(bo, out);
            } else {
                std::ofstream csv(bo_output);
                if (!csv) throw IoError(bo_output + ": cannot create");
                cmd_bench(bo, csv);
            }
        } else if (inspect->parsed()) {
            io.input = io_input;
            io.output = io_output;
            io.export_slice = io_slice;
            io.format = parse_image_format(io_format);
            cmd_inspect(io, out);
        }
    } catch (const MemoryBudgetError& e) {
        err << "error: " << e.what() << '\n';
        return kExitMemory;
    } catch (const IoError& e) {
        err << "error: " << e.what() << '\n';
        return kExitIo;
    } catch (const FormatError& e) {
        err << "error: " << e.what() << '\n';
        return kExitIo;
    } catch (const std::filesystem::filesystem_error& e) {
        err << "error: " << e.what() << '\n';
        return kExitIo;
    } catch (const PipelineError& e) {
        err << "error: " << e.what() << '\n';
        return kExitNumeric;
    } catch (const std::invalid_argument& e) {
        err << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitNumeric;
    }
    return kExitOk;
}

}  // namespace tomopipe
