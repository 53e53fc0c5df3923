#include "trire/idx.hpp"

#include <cstdio>
#include <fstream>

#include "trire/errors.hpp"

namespace trire {

namespace {

constexpr std::uint32_t kImagesMagic = 0x00000803u;
constexpr std::uint32_t kLabelsMagic = 0x00000801u;

std::vector<std::uint8_t> read_all(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw DataError(path + ": cannot open");
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(f)),
                                    std::istreambuf_iterator<char>());
    return bytes;
}

std::uint32_t read_be32(const std::vector<std::uint8_t>& b, std::size_t off,
                        const std::string& path) {
    if (off + 4 > b.size()) {
        throw DataError(path + ": truncated at byte " + std::to_string(b.size()) +
                        " (need 32-bit word at byte " + std::to_string(off) + ")");
    }
    return (std::uint32_t(b[off]) << 24) | (std::uint32_t(b[off + 1]) << 16) |
           (std::uint32_t(b[off + 2]) << 8) | std::uint32_t(b[off + 3]);
}

void write_be32(std::ofstream& f, std::uint32_t v) {
    const char bytes[4] = {static_cast<char>((v >> 24) & 0xFF),
                           static_cast<char>((v >> 16) & 0xFF),
                           static_cast<char>((v >> 8) & 0xFF),
                           static_cast<char>(v & 0xFF)};
    f.write(bytes, 4);
}

std::string hex32(std::uint32_t v) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "0x%08x", v);
    return buf;
}

} // namespace

IdxImages load_idx_images(const std::string& path) {
    const auto bytes = read_all(path);
    const std::uint32_t magic = read_be32(bytes, 0, path);
    if (magic != kImagesMagic) {
        throw DataError(path + ": bad images magic " + hex32(magic) + " at byte 0");
    }
    IdxImages out;
    out.count = read_be32(bytes, 4, path);
    out.rows = read_be32(bytes, 8, path);
    out.cols = read_be32(bytes, 12, path);
    const std::size_t expected = 16 + std::size_t(out.count) * out.rows * out.cols;
    if (bytes.size() < expected) {
        throw DataError(path + ": truncated at byte " + std::to_string(bytes.size()) +
                        " (expected " + std::to_string(expected) + " bytes)");
    }
    out.pixels.assign(bytes.begin() + 16, bytes.begin() + static_cast<std::ptrdiff_t>(expected));
    return out;
}

IdxLabels load_idx_labels(const std::string& path) {
    const auto bytes = read_all(path);
    const std::uint32_t magic = read_be32(bytes, 0, path);
    if (magic != kLabelsMagic) {
        throw DataError(path + ": bad labels magic " + hex32(magic) + " at byte 0");
    }
    IdxLabels out;
    out.count = read_be32(bytes, 4, path);
    const std::size_t expected = 8 + out.count;
    if (bytes.size() < expected) {
        throw DataError(path + ": truncated at byte " + std::to_string(bytes.size()) +
                        " (expected " + std::to_string(expected) + " bytes)");
    }
    out.labels.assign(bytes.begin() + 8, bytes.begin() + static_cast<std::ptrdiff_t>(expected));
    return out;
}

void save_idx_images(const std::string& path, const IdxImages& images) {
    if (images.pixels.size() != std::size_t(images.count) * images.rows * images.cols) {
        throw DataError(path + ": pixel payload does not match header counts");
    }
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw DataError(path + ": cannot open for writing");
    write_be32(f, kImagesMagic);
    write_be32(f, images.count);
    write_be32(f, images.rows);
    write_be32(f, images.cols);
    f.write(reinterpret_cast<const char*>(images.pixels.data()),
            static_cast<std::streamsize>(images.pixels.size()));
    if (!f) throw DataError(path + ": write failed");
}

void save_idx_labels(const std::string& path, const IdxLabels& labels) {
    if (labels.labels.size() != labels.count) {
        throw DataError(path + ": label payload does not match header count");
    }
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw DataError(path + ": cannot open for writing");
    write_be32(f, kLabelsMagic);
    write_be32(f, labels.count);
    f.write(reinterpret_cast<const char*>(labels.labels.data()),
            static_cast<std::streamsize>(labels.labels.size()));
    if (!f) throw DataError(path + ": write failed");
}

} // namespace trire
