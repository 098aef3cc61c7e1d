#include "tomopipe/io.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <sstream>

namespace tomopipe {
namespace {

constexpr char kMagic[8] = {'T', 'O', 'M', 'O', 'V', 'O', 'L', '1'};

std::uint32_t to_u32(std::size_t v, const char* what) {
    if (v == 0 || v > 0xFFFFFFFFu) {
        throw std::invalid_argument(std::string("VolumeHeader: ") + what + " must be in [1, 2^32)");
    }
    return static_cast<std::uint32_t>(v);
}

// float32 values in file byte order.
void to_file_order(float* values, std::size_t n) {
    if constexpr (std::endian::native == std::endian::big) {
        for (std::size_t k = 0; k < n; ++k) {
            auto bits = std::bit_cast<std::uint32_t>(values[k]);
            bits = ((bits & 0xFFu) << 24) | ((bits & 0xFF00u) << 8) | ((bits >> 8) & 0xFF00u) | (bits >> 24);
            values[k] = std::bit_cast<float>(bits);
        }
    } else {
        (void)values;
        (void)n;
    }
}

void from_file_order(float* values, std::size_t n) { to_file_order(values, n); }

std::string describe(const std::filesystem::path& path) { return path.string(); }

void check_stream(const std::ios& s, const std::filesystem::path& path, const char* action) {
    if (!s) throw IoError(describe(path) + ": " + action + " failed");
}

void read_exact(std::ifstream& in, const std::filesystem::path& path, std::size_t offset, char* dst,
                std::size_t bytes) {
    in.clear();
    in.seekg(static_cast<std::streamoff>(offset));
    in.read(dst, static_cast<std::streamsize>(bytes));
    if (static_cast<std::size_t>(in.gcount()) != bytes) {
        throw IoError(describe(path) + ": truncated read, expected " + std::to_string(offset + bytes) +
                      " bytes, found fewer");
    }
}

}  // namespace

VolumeHeader VolumeHeader::frames(std::size_t n_angle, std::size_t n_slice, std::size_t n_detector) {
    return {Layout::frames,
            {to_u32(n_angle, "n_angle"), to_u32(n_slice, "n_slice"), to_u32(n_detector, "n_detector")},
            0};
}

VolumeHeader VolumeHeader::slices(std::size_t n_slice, std::size_t n_angle, std::size_t n_detector) {
    return {Layout::slices,
            {to_u32(n_slice, "n_slice"), to_u32(n_angle, "n_angle"), to_u32(n_detector, "n_detector")},
            0};
}

std::size_t VolumeHeader::count() const noexcept {
    return static_cast<std::size_t>(dims[0]) * dims[1] * dims[2];
}

std::array<std::uint8_t, kHeaderBytes> encode_header(const VolumeHeader& h) {
    std::array<std::uint8_t, kHeaderBytes> bytes{};
    std::memcpy(bytes.data(), kMagic, 8);
    bytes[8] = static_cast<std::uint8_t>(h.layout);
    for (std::size_t d = 0; d < 3; ++d) {
        for (std::size_t b = 0; b < 4; ++b) bytes[9 + 4 * d + b] = static_cast<std::uint8_t>(h.dims[d] >> (8 * b));
    }
    bytes[21] = h.dtype;
    return bytes;
}

VolumeHeader decode_header(std::span<const std::uint8_t> bytes) {
    if (bytes.size() < kHeaderBytes || std::memcmp(bytes.data(), kMagic, 8) != 0) {
        throw FormatError("not a TOMOVOL1 file");
    }
    VolumeHeader h;
    if (bytes[8] > 1) throw FormatError("TOMOVOL1: unknown layout " + std::to_string(bytes[8]));
    h.layout = static_cast<Layout>(bytes[8]);
    for (std::size_t d = 0; d < 3; ++d) {
        std::uint32_t v = 0;
        for (std::size_t b = 0; b < 4; ++b) v |= static_cast<std::uint32_t>(bytes[9 + 4 * d + b]) << (8 * b);
        if (v == 0) throw FormatError("TOMOVOL1: zero dimension");
        h.dims[d] = v;
    }
    h.dtype = bytes[21];
    if (h.dtype != 0) throw FormatError("TOMOVOL1: unsupported dtype " + std::to_string(h.dtype));
    return h;
}

VolumeHeader read_header(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError(describe(path) + ": cannot open");
    std::array<std::uint8_t, kHeaderBytes> bytes{};
    in.read(reinterpret_cast<char*>(bytes.data()), kHeaderBytes);
    if (static_cast<std::size_t>(in.gcount()) < 8 ||
        std::memcmp(bytes.data(), kMagic, 8) != 0) {
        throw FormatError("not a TOMOVOL1 file");
    }
    if (static_cast<std::size_t>(in.gcount()) != kHeaderBytes) {
        throw IoError(describe(path) + ": truncated header, expected " + std::to_string(kHeaderBytes) +
                      " bytes, found " + std::to_string(in.gcount()));
    }
    return decode_header(bytes);
}

void write_volume(const std::filesystem::path& path, const VolumeHeader& header,
                  std::span<const float> data) {
    if (data.size() != header.count()) {
        throw std::invalid_argument("write_volume: " + std::to_string(data.size()) +
                                    " values for a header declaring " + std::to_string(header.count()));
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError(describe(path) + ": cannot create");
    const auto bytes = encode_header(header);
    out.write(reinterpret_cast<const char*>(bytes.data()), kHeaderBytes);
    std::vector<float> chunk;
    constexpr std::size_t kChunk = 1 << 16;
    for (std::size_t k = 0; k < data.size(); k += kChunk) {
        const std::size_t n = std::min(kChunk, data.size() - k);
        chunk.assign(data.begin() + static_cast<long>(k), data.begin() + static_cast<long>(k + n));
        to_file_order(chunk.data(), n);
        out.write(reinterpret_cast<const char*>(chunk.data()), static_cast<std::streamsize>(4 * n));
    }
    out.flush();
    check_stream(out, path, "write");
}

Volume read_volume(const std::filesystem::path& path) {
    Volume v;
    v.header = read_header(path);
    const auto size = std::filesystem::file_size(path);
    if (size < v.header.file_bytes()) {
        throw IoError(describe(path) + ": truncated, expected " + std::to_string(v.header.file_bytes()) +
                      " bytes, found " + std::to_string(size));
    }
    std::ifstream in(path, std::ios::binary);
    v.data.resize(v.header.count());
    read_exact(in, path, kHeaderBytes, reinterpret_cast<char*>(v.data.data()), v.header.payload_bytes());
    from_file_order(v.data.data(), v.data.size());
    return v;
}

BlockReader::BlockReader(const std::filesystem::path& path, std::size_t block_size)
    : path_(path), header_(read_header(path)), block_size_(block_size), in_(path, std::ios::binary) {
    if (block_size_ == 0) throw std::invalid_argument("BlockReader: block size must be >= 1");
    if (!in_) throw IoError(describe(path) + ": cannot open");
    const auto size = std::filesystem::file_size(path);
    if (size < header_.file_bytes()) {
        throw IoError(describe(path) + ": truncated, expected " + std::to_string(header_.file_bytes()) +
                      " bytes, found " + std::to_string(size));
    }
}

std::size_t BlockReader::block_count() const noexcept {
    return (header_.n_slices() + block_size_ - 1) / block_size_;
}

std::optional<VolumeBlock> BlockReader::read_block() {
    if (cursor_ >= header_.n_slices()) return std::nullopt;
    const std::size_t count = std::min(block_size_, header_.n_slices() - cursor_);
    auto block = read_slices(cursor_, count);
    cursor_ += count;
    return block;
}

std::vector<float> BlockReader::read_raw(std::size_t first, std::size_t count) {
    const std::size_t n_s = header_.n_slices();
    if (first > n_s || count > n_s - first) {
        throw std::out_of_range("BlockReader: slices [" + std::to_string(first) + ", " +
                                std::to_string(first + count) + ") outside volume of " +
                                std::to_string(n_s));
    }
    const std::size_t n_a = header_.n_angles();
    const std::size_t n_t = header_.n_detector();
    std::vector<float> out(count * n_a * n_t);
    std::lock_guard lock(mutex_);
    if (header_.layout == Layout::slices) {
        read_exact(in_, path_, kHeaderBytes + 4 * first * n_a * n_t, reinterpret_cast<char*>(out.data()),
                   4 * out.size());
    } else {
        // Frame j holds every slice's row j; one contiguous run per frame.
        std::vector<float> run(count * n_t);
        for (std::size_t j = 0; j < n_a; ++j) {
            read_exact(in_, path_, kHeaderBytes + 4 * (j * n_s + first) * n_t,
                       reinterpret_cast<char*>(run.data()), 4 * run.size());
            for (std::size_t k = 0; k < count; ++k) {
                std::copy_n(run.begin() + static_cast<long>(k * n_t), n_t,
                            out.begin() + static_cast<long>((k * n_a + j) * n_t));
            }
        }
    }
    from_file_order(out.data(), out.size());
    return out;
}

VolumeBlock BlockReader::read_slices(std::size_t first, std::size_t count) {
    const auto raw = read_raw(first, count);
    const std::size_t n_a = header_.n_angles();
    const std::size_t n_t = header_.n_detector();
    const DetectorAxis detector(n_t);
    const AngleAxis angles(n_a);
    std::vector<Sinogram> sinos;
    sinos.reserve(count);
    for (std::size_t k = 0; k < count; ++k) {
        const auto begin = raw.begin() + static_cast<long>(k * n_a * n_t);
        sinos.emplace_back(detector, angles,
                           RealArray(n_a, n_t, std::vector<double>(begin, begin + static_cast<long>(n_a * n_t))));
    }
    VolumeBlock block;
    block.first_slice = first;
    block.stage = StageTag::read;
    block.slices = std::move(sinos);
    return block;
}

VolumeWriter::VolumeWriter(const std::filesystem::path& path, const VolumeHeader& header)
    : path_(path), header_(header) {
    {
        std::ofstream create(path, std::ios::binary | std::ios::trunc);
        if (!create) throw IoError(describe(path) + ": cannot create");
        const auto bytes = encode_header(header);
        create.write(reinterpret_cast<const char*>(bytes.data()), kHeaderBytes);
        check_stream(create, path, "write");
    }
    std::error_code ec;
    std::filesystem::resize_file(path, header.file_bytes(), ec);
    if (ec) throw IoError(describe(path) + ": cannot size file: " + ec.message());
    out_.open(path, std::ios::binary | std::ios::in | std::ios::out);
    if (!out_) throw IoError(describe(path) + ": cannot open for writing");
}

VolumeWriter::~VolumeWriter() {
    if (!finished_) {
        out_.close();
        std::error_code ec;
        std::filesystem::remove(path_, ec);
    }
}

void VolumeWriter::write_at(std::size_t element, std::span<const double> values) {
    std::vector<float> buf(values.begin(), values.end());
    to_file_order(buf.data(), buf.size());
    out_.seekp(static_cast<std::streamoff>(kHeaderBytes + 4 * element));
    out_.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(4 * buf.size()));
    check_stream(out_, path_, "write");
}

void VolumeWriter::write_image(std::size_t slice, const ImageGrid& image) {
    if (header_.layout != Layout::slices || header_.dims[1] != image.n() || header_.dims[2] != image.n()) {
        throw std::invalid_argument("VolumeWriter: image does not match a slice-major volume of its size");
    }
    if (slice >= header_.n_slices()) throw std::out_of_range("VolumeWriter: slice out of range");
    std::lock_guard lock(mutex_);
    write_at(slice * image.n() * image.n(), image.data().values());
}

void VolumeWriter::write_sinogram(std::size_t slice, const Sinogram& y) {
    if (y.n_theta() != header_.n_angles() || y.n_t() != header_.n_detector()) {
        throw std::invalid_argument("VolumeWriter: sinogram shape does not match the header");
    }
    if (slice >= header_.n_slices()) throw std::out_of_range("VolumeWriter: slice out of range");
    const std::size_t n_t = y.n_t();
    std::lock_guard lock(mutex_);
    if (header_.layout == Layout::slices) {
        write_at(slice * y.n_theta() * n_t, y.data().values());
        return;
    }
    for (std::size_t j = 0; j < y.n_theta(); ++j) {
        write_at((j * header_.n_slices() + slice) * n_t, y.row(j));
    }
}

void VolumeWriter::finish() {
    std::lock_guard lock(mutex_);
    out_.flush();
    check_stream(out_, path_, "flush");
    out_.close();
    check_stream(out_, path_, "close");
    finished_ = true;
}

ImageFormat parse_image_format(const std::string& name) {
    if (name == "pgm16") return ImageFormat::pgm16;
    if (name == "csv") return ImageFormat::csv;
    throw std::invalid_argument("unknown image format '" + name + "' (expected pgm16 or csv)");
}

void export_image(const ImageGrid& grid, const std::filesystem::path& path, ImageFormat format) {
    export_array(grid.data(), path, format);
}

void export_array(const RealArray& array, const std::filesystem::path& path, ImageFormat format) {
    const auto values = array.values();
    require_finite(values, "export_image");
    if (values.empty()) throw std::invalid_argument("export_image: empty array");
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError(describe(path) + ": cannot create");
    if (format == ImageFormat::pgm16) {
        const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
        const double range = *hi - *lo;
        out << "P5\n" << array.cols() << ' ' << array.rows() << "\n65535\n";
        std::vector<unsigned char> bytes(2 * values.size());
        for (std::size_t k = 0; k < values.size(); ++k) {
            const double v = range > 0.0 ? (values[k] - *lo) / range * 65535.0 : 0.0;
            const auto q = static_cast<std::uint16_t>(std::clamp(std::lround(v), 0L, 65535L));
            bytes[2 * k] = static_cast<unsigned char>(q >> 8);
            bytes[2 * k + 1] = static_cast<unsigned char>(q & 0xFF);
        }
        out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    } else {
        char buf[32];
        for (std::size_t r = 0; r < array.rows(); ++r) {
            for (std::size_t c = 0; c < array.cols(); ++c) {
                std::snprintf(buf, sizeof buf, "%.17g", array(r, c));
                if (c > 0) out << ',';
                out << buf;
            }
            out << '\n';
        }
    }
    out.flush();
    check_stream(out, path, "write");
}

ImageGrid import_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError(describe(path) + ": cannot open");
    std::vector<double> values;
    std::size_t rows = 0;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream cells(line);
        std::string cell;
        while (std::getline(cells, cell, ',')) values.push_back(std::stod(cell));
        ++rows;
    }
    if (rows == 0 || values.size() != rows * rows) {
        throw FormatError(describe(path) + ": not a square CSV image");
    }
    return ImageGrid(rows, RealArray(rows, rows, std::move(values)));
}

}  // namespace tomopipe
