#pragma once

// Subcommands behind the tomopipe executable. Each cmd_* reports failure by
// exception; run_cli maps exceptions to exit codes:
//   0 success, 1 usage, 2 I/O, 3 numeric or stage failure, 4 memory budget.

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "tomopipe/io.hpp"
#include "tomopipe/pipeline.hpp"
#include "tomopipe/recon.hpp"

namespace tomopipe {

enum ExitCode : int { kExitOk = 0, kExitUsage = 1, kExitIo = 2, kExitNumeric = 3, kExitMemory = 4 };

struct PhantomOptions {
    std::filesystem::path output;
    std::size_t n = 128;
    std::size_t angles = 180;
    std::size_t slices = 16;
    double a = 0.5, b = 0.5, c = 0.5, rho = 1.0;
    double center_u1 = 0.0, center_u2 = 0.0, center_s = 0.0;
    /// Write counts I = D + (I0 - D) e^{-y} and flat/dark sidecars instead of y.
    bool counts = false;
    double flat_level = 10000.0;
    double dark_level = 0.0;
};

/// Slice k of a volume with S slices sits at s = -1 + (2k + 1)/S.
double slice_coordinate(std::size_t slice, std::size_t n_slices);

void cmd_phantom(const PhantomOptions& opt);

struct ReconOptions {
    std::filesystem::path input;
    std::filesystem::path output;
    /// Metrics CSV; defaults to <output>.metrics.csv.
    std::filesystem::path metrics;
    ReconstructionConfig config;
    bool dry_run = false;
};

struct ReconResult {
    PipelineMetrics metrics;
    std::size_t memory_estimate = 0;
    std::optional<CenteringResult> center;
};

/// Throws MemoryBudgetError, IoError, PipelineError or std::invalid_argument.
ReconResult cmd_reconstruct(const ReconOptions& opt, std::ostream& out);

struct BenchOptions {
    std::vector<std::size_t> sizes{128, 256};
    std::vector<std::size_t> block_sizes{5, 10};
    std::vector<std::string> kernels{"ss", "bst"};
    std::vector<std::size_t> workers{1};
    std::size_t repeat = 3;
    std::size_t slices = 10;
    /// Time only the read stage.
    bool read_only = false;
    /// Scratch directory for the generated inputs; a temporary one when empty.
    std::filesystem::path workdir;
};

struct BenchRow {
    std::size_t size = 0;
    std::size_t block_size = 0;
    std::string kernel;
    std::size_t workers = 0;
    std::size_t rep = 0;
    double seconds = 0.0;
    std::string mode;
};

/// Runs every (size, Q, kernel, workers) cell `repeat` times and writes
/// size,Q,kernel,workers,rep,seconds,mode rows to csv.
std::vector<BenchRow> cmd_bench(const BenchOptions& opt, std::ostream& csv);

/// Seconds for one pipeline run over `input`; with read_only only the read stage runs.
double time_pipeline(const std::filesystem::path& input, Kernel kernel, std::size_t block_size,
                     std::size_t workers, bool read_only);

struct InspectOptions {
    std::filesystem::path input;
    std::optional<std::size_t> export_slice;
    ImageFormat format = ImageFormat::pgm16;
    /// Export target; defaults to <input>.slice<K>.<pgm|csv>.
    std::filesystem::path output;
};

void cmd_inspect(const InspectOptions& opt, std::ostream& out);

/// Parses argv and runs the subcommand. Never throws.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace tomopipe
