#include "tomopipe/recon.hpp"

namespace tomopipe {
namespace {

VolumeBlock take_block(Blob& blob) { return std::any_cast<VolumeBlock>(std::move(blob)); }

template <typename Fn>
Blob map_sinograms(Blob blob, StageTag tag, Fn&& fn) {
    VolumeBlock block = take_block(blob);
    auto& sinos = block.sinograms();
    for (std::size_t k = 0; k < sinos.size(); ++k) sinos[k] = fn(block.first_slice + k, sinos[k]);
    block.stage = tag;
    return block;
}

Sinogram normalize_slice(const Sinogram& y, const FlatDarkFrames* frames) {
    return frames ? normalize(y, *frames) : y;
}

Sinogram center_slice(const Sinogram& y, const ReconstructionConfig& cfg) {
    if (cfg.center == CenterMode::volume) return apply_center(y, cfg.center_beta);
    try {
        return apply_center(y, estimate_center(y).beta);
    } catch (const std::domain_error&) {
        // A constant slice (e.g. outside the object) has no axis to find.
        return y;
    }
}

ImageGrid backproject(const Sinogram& filtered, Kernel kernel, const BstPlan& plan) {
    ImageGrid b = kernel == Kernel::bst ? bst_backproject(filtered, plan, 1)
                                        : backproject_ss(filtered, plan.output_n(), 1);
    RealArray data = b.data();
    for (double& v : data.values()) v *= kFbpScale;
    return ImageGrid(b.n(), std::move(data));
}

}  // namespace

CenterMode parse_center_mode(const std::string& name) {
    if (name == "off") return CenterMode::off;
    if (name == "volume") return CenterMode::volume;
    if (name == "slice") return CenterMode::slice;
    throw std::invalid_argument("unknown center mode '" + name + "' (expected off, volume or slice)");
}

const char* to_string(CenterMode mode) noexcept {
    switch (mode) {
        case CenterMode::off: return "off";
        case CenterMode::volume: return "volume";
        case CenterMode::slice: return "slice";
    }
    return "?";
}

std::filesystem::path flat_path(const std::filesystem::path& input) {
    auto p = input;
    p += ".flat";
    return p;
}

std::filesystem::path dark_path(const std::filesystem::path& input) {
    auto p = input;
    p += ".dark";
    return p;
}

std::optional<FlatDarkVolume> load_flat_dark(const std::filesystem::path& input, const VolumeHeader& volume) {
    const bool has_flat = std::filesystem::exists(flat_path(input));
    const bool has_dark = std::filesystem::exists(dark_path(input));
    if (!has_flat && !has_dark) return std::nullopt;
    if (!has_flat || !has_dark) {
        throw IoError(input.string() + ": flat and dark sidecars must both be present");
    }
    const Volume flat = read_volume(flat_path(input));
    const Volume dark = read_volume(dark_path(input));
    auto to_frames = [&](const Volume& v, const char* what) {
        const auto& h = v.header;
        if (h.layout != Layout::frames || h.n_slices() != volume.n_slices() ||
            h.n_detector() != volume.n_detector() || (h.n_angles() != 1 && h.n_angles() != volume.n_angles())) {
            throw std::invalid_argument(std::string(what) + " sidecar shape does not fit the volume");
        }
        std::vector<RealArray> per_slice;
        const std::size_t n_a = h.n_angles(), n_s = h.n_slices(), n_t = h.n_detector();
        for (std::size_t k = 0; k < n_s; ++k) {
            RealArray a(n_a, n_t);
            for (std::size_t j = 0; j < n_a; ++j) {
                for (std::size_t i = 0; i < n_t; ++i) a(j, i) = v.data[(j * n_s + k) * n_t + i];
            }
            per_slice.push_back(std::move(a));
        }
        return per_slice;
    };
    auto flats = to_frames(flat, "flat");
    auto darks = to_frames(dark, "dark");
    FlatDarkVolume out;
    for (std::size_t k = 0; k < flats.size(); ++k) out.push_back({std::move(flats[k]), std::move(darks[k])});
    return out;
}

ImageGrid reconstruct_slice(const Sinogram& y, const ReconstructionConfig& cfg, const BstPlan& plan,
                            const RampFilter& filter, const FlatDarkFrames* frames) {
    Sinogram s = cfg.normalize ? normalize_slice(y, frames) : y;
    if (cfg.center != CenterMode::off) s = center_slice(s, cfg);
    if (cfg.rings) s = suppress_rings(s, cfg.ring_window);
    return backproject(filter.apply(s, 1), cfg.kernel, plan);
}

JobSource block_requests(const BlockReader& reader) {
    const std::size_t n = reader.header().n_slices();
    const std::size_t q = reader.block_size();
    auto next = std::make_shared<std::size_t>(0);
    return [n, q, next]() -> std::optional<Blob> {
        if (*next >= n) return std::nullopt;
        BlockRequest r{*next, std::min(q, n - *next)};
        *next += r.count;
        return Blob(r);
    };
}

PipelinePlan build_reconstruction_pipeline(const ReconstructionConfig& cfg, const ReconstructionIo& io) {
    if (!io.reader) throw std::invalid_argument("reconstruction: no reader");
    if (cfg.write && !io.writer) throw std::invalid_argument("reconstruction: write enabled without a writer");
    if (cfg.block_size == 0 || cfg.workers == 0 || cfg.queue_capacity == 0) {
        throw std::invalid_argument("reconstruction: block size, workers and queue capacity must be >= 1");
    }
    if (cfg.rings && (cfg.ring_window < 3 || cfg.ring_window % 2 == 0)) {
        throw std::invalid_argument("reconstruction: ring window must be odd and >= 3");
    }
    const VolumeHeader& h = io.reader->header();
    const std::size_t n_t = h.n_detector();
    const std::size_t n = cfg.output_n ? cfg.output_n : n_t;
    const DetectorAxis detector(n_t);
    const AngleAxis angles(h.n_angles());
    if (cfg.write && (io.writer->header() != VolumeHeader::slices(h.n_slices(), n, n))) {
        throw std::invalid_argument("reconstruction: writer header does not match the output volume");
    }
    if (io.flat_dark && io.flat_dark->size() != h.n_slices()) {
        throw std::invalid_argument("reconstruction: flat/dark fields do not cover every slice");
    }

    auto plan = std::make_shared<const BstPlan>(detector, angles, n, cfg.bst);
    auto filter = std::make_shared<const RampFilter>(detector, cfg.filter);
    const std::size_t image_bytes = n * n * sizeof(double);

    PipelinePlan p;
    p.block_size = cfg.block_size;
    p.work_items = 1;
    p.threads_per_item = cfg.workers;
    p.memory_budget = cfg.memory_budget;
    p.allow_over_budget = cfg.allow_over_budget;
    p.slice_bytes = h.n_angles() * n_t * sizeof(double);

    // Working sets per slice, counted at the allocation sites: a stage holds
    // its input and output sinogram plus its own scratch.
    auto reader = io.reader;
    p.stages.push_back({"read", 1, cfg.queue_capacity,
                        [reader](Blob b) -> Blob {
                            const auto r = std::any_cast<BlockRequest>(b);
                            return reader->read_slices(r.first_slice, r.count);
                        },
                        1.5, h.layout == Layout::frames ? n_t * sizeof(float) : 0});
    if (cfg.normalize) {
        auto fd = io.flat_dark;
        p.stages.push_back({"N", cfg.workers, cfg.queue_capacity,
                            [fd](Blob b) {
                                return map_sinograms(std::move(b), StageTag::normalized,
                                                     [&](std::size_t k, const Sinogram& y) {
                                                         return normalize_slice(y, fd ? &(*fd)[k] : nullptr);
                                                     });
                            },
                            2.0, 0});
    }
    if (cfg.center != CenterMode::off) {
        p.stages.push_back({"C", cfg.workers, cfg.queue_capacity,
                            [cfg](Blob b) {
                                return map_sinograms(std::move(b), StageTag::centered,
                                                     [&](std::size_t, const Sinogram& y) { return center_slice(y, cfg); });
                            },
                            2.0, 0});
    }
    if (cfg.rings) {
        const std::size_t window = cfg.ring_window;
        p.stages.push_back({"R", cfg.workers, cfg.queue_capacity,
                            [window](Blob b) {
                                return map_sinograms(std::move(b), StageTag::rings_suppressed,
                                                     [&](std::size_t, const Sinogram& y) { return suppress_rings(y, window); });
                            },
                            2.0, 2 * n_t * sizeof(double)});
    }
    p.stages.push_back({"F", cfg.workers, cfg.queue_capacity,
                        [filter](Blob b) {
                            return map_sinograms(std::move(b), StageTag::filtered,
                                                 [&](std::size_t, const Sinogram& y) { return filter->apply(y, 1); });
                        },
                        2.0, filter->padded_length() * sizeof(Complex)});
    const Kernel kernel = cfg.kernel;
    const std::size_t b_scratch = kernel == Kernel::bst ? plan->scratch_bytes() : n * sizeof(double);
    p.stages.push_back({"B", cfg.workers, cfg.queue_capacity,
                        [plan, kernel](Blob b) -> Blob {
                            VolumeBlock in = take_block(b);
                            std::vector<ImageGrid> images;
                            images.reserve(in.size());
                            for (const auto& y : in.sinograms()) images.push_back(backproject(y, kernel, *plan));
                            VolumeBlock out{in.first_slice, StageTag::backprojected, std::move(images)};
                            return out;
                        },
                        1.0, image_bytes + b_scratch});
    if (cfg.write) {
        auto writer = io.writer;
        p.stages.push_back({"S", 1, cfg.queue_capacity,
                            [writer](Blob b) -> Blob {
                                VolumeBlock block = take_block(b);
                                const auto& images = block.images();
                                for (std::size_t k = 0; k < images.size(); ++k) {
                                    writer->write_image(block.first_slice + k, images[k]);
                                }
                                block.stage = StageTag::written;
                                return block;
                            },
                            0.0, image_bytes + n * n * sizeof(float)});
    }
    validate(p);
    return p;
}

CenteringResult estimate_volume_center(BlockReader& reader, const FlatDarkVolume* flat_dark) {
    const std::size_t mid = reader.header().n_slices() / 2;
    const VolumeBlock block = reader.read_slices(mid, 1);
    const Sinogram& y = block.sinograms().front();
    return estimate_center(flat_dark ? normalize(y, (*flat_dark)[mid]) : y);
}

}  // namespace tomopipe
