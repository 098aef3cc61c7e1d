#pragma once

// The reconstruction pipeline: read -> N -> [C] -> [R] -> F -> B -> [S].
// Every job is a VolumeBlock of up to Q slices; within a stage the slices of a
// block are processed one after another with single-threaded kernels, so all
// parallelism comes from the stage worker pools.

#include <memory>
#include <optional>

#include "tomopipe/bst.hpp"
#include "tomopipe/fbp.hpp"
#include "tomopipe/io.hpp"
#include "tomopipe/pipeline.hpp"
#include "tomopipe/preprocess.hpp"

namespace tomopipe {

enum class CenterMode { off, volume, slice };

CenterMode parse_center_mode(const std::string& name);
const char* to_string(CenterMode mode) noexcept;

struct ReconstructionConfig {
    Kernel kernel = Kernel::bst;
    std::size_t block_size = 10;
    /// Workers of every compute stage; read and write always run one worker.
    std::size_t workers = 1;
    std::size_t queue_capacity = 2;
    bool normalize = true;
    CenterMode center = CenterMode::off;
    /// Axis shift in t units applied by the C stage in volume mode.
    double center_beta = 0.0;
    bool rings = false;
    std::size_t ring_window = 9;
    FilterPlan filter;
    BstOptions bst;
    /// Reconstructed grid side; 0 means n_t.
    std::size_t output_n = 0;
    std::size_t memory_budget = 0;
    bool allow_over_budget = false;
    bool write = false;
};

/// Per-slice flat and dark fields, one entry per slice of the volume.
using FlatDarkVolume = std::vector<FlatDarkFrames>;

/// Sidecar paths holding the flat and dark fields of a count volume.
std::filesystem::path flat_path(const std::filesystem::path& input);
std::filesystem::path dark_path(const std::filesystem::path& input);

/// Loads both sidecars if present, nothing if neither exists. Sidecars are
/// frame-major with one or n_angle frames. Throws IoError if only one exists
/// and std::invalid_argument if their shape does not fit the volume.
std::optional<FlatDarkVolume> load_flat_dark(const std::filesystem::path& input, const VolumeHeader& volume);

struct ReconstructionIo {
    std::shared_ptr<BlockReader> reader;
    /// Required when cfg.write is set; layout 1 with dims (slices, n, n).
    std::shared_ptr<VolumeWriter> writer;
    /// Used by N when present; without it the data is taken as already in the log domain.
    std::shared_ptr<const FlatDarkVolume> flat_dark;
};

/// Payload of the jobs the reconstruction source emits.
struct BlockRequest {
    std::size_t first_slice = 0;
    std::size_t count = 0;
};

/// Throws std::invalid_argument for an invalid config or missing reader/writer.
PipelinePlan build_reconstruction_pipeline(const ReconstructionConfig& cfg, const ReconstructionIo& io);

/// Emits one BlockRequest per block of the reader's volume.
JobSource block_requests(const BlockReader& reader);

/// The per-slice chain the pipeline runs, sequentially: N, C, R, F, B.
ImageGrid reconstruct_slice(const Sinogram& y, const ReconstructionConfig& cfg, const BstPlan& plan,
                            const RampFilter& filter, const FlatDarkFrames* frames);

/// Estimates the axis shift on the middle slice (normalized if frames are given).
CenteringResult estimate_volume_center(BlockReader& reader, const FlatDarkVolume* flat_dark);

}  // namespace tomopipe
