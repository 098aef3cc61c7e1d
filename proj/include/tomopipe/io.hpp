#pragma once

// TOMOVOL1 container: a 64-byte header followed by raw little-endian float32.
//
//   bytes 0-7    "TOMOVOL1"
//   byte  8      layout: 0 = frames [angle][slice][detector], 1 = slices [slice][angle][detector]
//   bytes 9-20   three u32 LE dims in storage order
//   byte  21     dtype: 0 = float32 LE
//   bytes 22-63  zero
//
// Reconstructed volumes use layout 1 with dims (slice, row, column).

#include <array>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <optional>
#include <stdexcept>

#include "tomopipe/core.hpp"

namespace tomopipe {

inline constexpr std::size_t kHeaderBytes = 64;

/// I/O failures, including short files. Messages name the path.
class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Bytes that do not form a valid header.
class FormatError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class Layout : std::uint8_t { frames = 0, slices = 1 };

struct VolumeHeader {
    Layout layout = Layout::frames;
    std::array<std::uint32_t, 3> dims{1, 1, 1};
    std::uint8_t dtype = 0;

    static VolumeHeader frames(std::size_t n_angle, std::size_t n_slice, std::size_t n_detector);
    static VolumeHeader slices(std::size_t n_slice, std::size_t n_angle, std::size_t n_detector);

    std::size_t n_slices() const noexcept { return layout == Layout::frames ? dims[1] : dims[0]; }
    std::size_t n_angles() const noexcept { return layout == Layout::frames ? dims[0] : dims[1]; }
    std::size_t n_detector() const noexcept { return dims[2]; }
    std::size_t count() const noexcept;
    std::size_t payload_bytes() const noexcept { return 4 * count(); }
    std::size_t file_bytes() const noexcept { return kHeaderBytes + payload_bytes(); }

    bool operator==(const VolumeHeader&) const = default;
};

std::array<std::uint8_t, kHeaderBytes> encode_header(const VolumeHeader& h);
/// Throws FormatError("not a TOMOVOL1 file") on a bad magic, and FormatError for
/// unknown layout/dtype or zero dims.
VolumeHeader decode_header(std::span<const std::uint8_t> bytes);
VolumeHeader read_header(const std::filesystem::path& path);

/// Throws std::invalid_argument if data.size() != header.count(), IoError on failure.
void write_volume(const std::filesystem::path& path, const VolumeHeader& header,
                  std::span<const float> data);

struct Volume {
    VolumeHeader header;
    std::vector<float> data;
};

Volume read_volume(const std::filesystem::path& path);

/// Reads consecutive blocks of Q slices as sinograms. Layout 0 files are
/// gathered across angle frames. Angles are taken as [0, pi).
class BlockReader {
public:
    /// Throws IoError if the file cannot be opened or is shorter than its header
    /// declares, FormatError on a bad header, std::invalid_argument for Q == 0.
    BlockReader(const std::filesystem::path& path, std::size_t block_size);

    const VolumeHeader& header() const noexcept { return header_; }
    std::size_t block_size() const noexcept { return block_size_; }
    std::size_t cursor() const noexcept { return cursor_; }
    std::size_t block_count() const noexcept;

    /// Next block, or nothing at the end of the volume.
    std::optional<VolumeBlock> read_block();
    /// Slices [first, first + count), independent of the cursor. Safe to call
    /// from several threads.
    VolumeBlock read_slices(std::size_t first, std::size_t count);
    /// Raw float32 values of slices [first, first + count) as [slice][angle][detector].
    std::vector<float> read_raw(std::size_t first, std::size_t count);

private:
    std::filesystem::path path_;
    VolumeHeader header_;
    std::size_t block_size_;
    std::size_t cursor_ = 0;
    std::ifstream in_;
    std::mutex mutex_;
};

/// Creates a full-size file up front and accepts slices in any order.
/// The file is removed if the writer is destroyed without finish().
class VolumeWriter {
public:
    VolumeWriter(const std::filesystem::path& path, const VolumeHeader& header);
    ~VolumeWriter();
    VolumeWriter(const VolumeWriter&) = delete;
    VolumeWriter& operator=(const VolumeWriter&) = delete;

    const VolumeHeader& header() const noexcept { return header_; }

    /// Layout 1 with dims (slices, n, n). Thread-safe.
    void write_image(std::size_t slice, const ImageGrid& image);
    /// Either layout; rows go to their frames for layout 0. Thread-safe.
    void write_sinogram(std::size_t slice, const Sinogram& y);
    /// Flushes and closes; throws IoError on failure.
    void finish();

private:
    void write_at(std::size_t element, std::span<const double> values);

    std::filesystem::path path_;
    VolumeHeader header_;
    std::ofstream out_;
    std::mutex mutex_;
    bool finished_ = false;
};

enum class ImageFormat { pgm16, csv };

ImageFormat parse_image_format(const std::string& name);

/// pgm16: binary P5, 16-bit big-endian, min-max scaled to 0..65535 (constant
/// images map to 0). csv: one row per line, %.17g, LF endings.
void export_image(const ImageGrid& grid, const std::filesystem::path& path, ImageFormat format);
/// Same for any rectangular array, e.g. a sinogram.
void export_array(const RealArray& values, const std::filesystem::path& path, ImageFormat format);
ImageGrid import_csv(const std::filesystem::path& path);

}  // namespace tomopipe
