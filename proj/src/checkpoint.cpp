#include "trire/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include "trire/errors.hpp"

static_assert(std::endian::native == std::endian::little,
              "checkpoint writer assumes a little-endian host");

namespace trire {

namespace {

constexpr char kMagic[8] = {'T', 'R', 'I', 'R', 'E', 'C', 'K', '1'};
constexpr std::uint32_t kVersion = 1;
constexpr std::uint32_t kFlagEma = 1u << 0;
constexpr std::uint32_t kFlagMask = 1u << 1;
constexpr std::uint32_t kFlagBuffer = 1u << 2;

class Writer {
public:
    explicit Writer(const std::string& path) : path_(path), f_(path, std::ios::binary | std::ios::trunc) {
        if (!f_) throw DataError(path + ": cannot open for writing");
    }
    void bytes(const void* p, std::size_t n) {
        f_.write(static_cast<const char*>(p), static_cast<std::streamsize>(n));
    }
    void u32(std::uint32_t v) { bytes(&v, 4); }
    void u64(std::uint64_t v) { bytes(&v, 8); }
    void i32(std::int32_t v) { bytes(&v, 4); }
    void f64(double v) { bytes(&v, 8); }
    void f64s(const std::vector<double>& v) { bytes(v.data(), v.size() * 8); }
    void done() {
        f_.flush();
        if (!f_) throw DataError(path_ + ": write failed");
    }

private:
    std::string path_;
    std::ofstream f_;
};

class Reader {
public:
    explicit Reader(const std::string& path) : path_(path), f_(path, std::ios::binary) {
        if (!f_) throw DataError(path + ": cannot open");
    }
    void bytes(void* p, std::size_t n) {
        f_.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
        if (f_.gcount() != static_cast<std::streamsize>(n)) {
            throw DataError(path_ + ": truncated checkpoint");
        }
    }
    std::uint32_t u32() {
        std::uint32_t v;
        bytes(&v, 4);
        return v;
    }
    std::uint64_t u64() {
        std::uint64_t v;
        bytes(&v, 8);
        return v;
    }
    std::int32_t i32() {
        std::int32_t v;
        bytes(&v, 4);
        return v;
    }
    double f64() {
        double v;
        bytes(&v, 8);
        return v;
    }
    std::vector<double> f64s(std::size_t n) {
        std::vector<double> v(n);
        bytes(v.data(), n * 8);
        return v;
    }

private:
    std::string path_;
    std::ifstream f_;
};

} // namespace

void save_checkpoint(const std::string& path, const Checkpoint& ckpt) {
    Writer w(path);
    w.bytes(kMagic, 8);
    w.u32(kVersion);
    std::uint32_t flags = 0;
    if (ckpt.ema_params) flags |= kFlagEma;
    if (ckpt.mask) flags |= kFlagMask;
    if (ckpt.buffer) flags |= kFlagBuffer;
    w.u32(flags);
    w.u32(static_cast<std::uint32_t>(ckpt.input_dim));
    w.u32(static_cast<std::uint32_t>(ckpt.hidden.size()));
    for (std::size_t h : ckpt.hidden) w.u32(static_cast<std::uint32_t>(h));
    w.u32(static_cast<std::uint32_t>(ckpt.num_classes));
    w.u64(ckpt.params.size());
    w.f64s(ckpt.params);
    if (ckpt.ema_params) {
        w.u64(ckpt.ema_params->size());
        w.f64s(*ckpt.ema_params);
    }
    if (ckpt.mask) {
        for (const auto& layer : ckpt.mask->neurons.layers) {
            w.u32(static_cast<std::uint32_t>(layer.size()));
            w.bytes(layer.data(), layer.size());
        }
        w.u64(ckpt.mask->weights.size());
        w.bytes(ckpt.mask->weights.data(), ckpt.mask->weights.size());
    }
    if (ckpt.buffer) {
        w.u64(ckpt.buffer->capacity);
        w.u64(ckpt.buffer->seen);
        w.u32(static_cast<std::uint32_t>(ckpt.buffer->slots.size()));
        const std::uint32_t dim = ckpt.buffer->slots.empty()
                                      ? 0
                                      : static_cast<std::uint32_t>(
                                            ckpt.buffer->slots[0].example.features.size());
        w.u32(dim);
        for (const auto& slot : ckpt.buffer->slots) {
            w.f64s(slot.example.features);
            w.i32(slot.example.label);
            w.i32(slot.task_id);
            w.f64(slot.stored_loss);
        }
    }
    w.done();
}

Checkpoint load_checkpoint(const std::string& path) {
    Reader r(path);
    char magic[8];
    r.bytes(magic, 8);
    if (std::memcmp(magic, kMagic, 8) != 0) {
        throw DataError(path + ": not a checkpoint container (bad magic)");
    }
    const std::uint32_t version = r.u32();
    if (version != kVersion) {
        throw DataError(path + ": unsupported checkpoint version " + std::to_string(version));
    }
    const std::uint32_t flags = r.u32();

    Checkpoint ckpt;
    ckpt.input_dim = r.u32();
    const std::uint32_t num_hidden = r.u32();
    for (std::uint32_t i = 0; i < num_hidden; ++i) ckpt.hidden.push_back(r.u32());
    ckpt.num_classes = r.u32();
    ckpt.params = r.f64s(r.u64());
    if (flags & kFlagEma) {
        ckpt.ema_params = r.f64s(r.u64());
    }
    if (flags & kFlagMask) {
        SubnetworkMask mask;
        for (std::uint32_t i = 0; i < num_hidden; ++i) {
            std::vector<std::uint8_t> layer(r.u32());
            r.bytes(layer.data(), layer.size());
            mask.neurons.layers.push_back(std::move(layer));
        }
        mask.weights.resize(r.u64());
        r.bytes(mask.weights.data(), mask.weights.size());
        ckpt.mask = std::move(mask);
    }
    if (flags & kFlagBuffer) {
        Checkpoint::BufferDump dump;
        dump.capacity = r.u64();
        dump.seen = r.u64();
        const std::uint32_t count = r.u32();
        const std::uint32_t dim = r.u32();
        for (std::uint32_t i = 0; i < count; ++i) {
            BufferSlot slot;
            slot.example.features = r.f64s(dim);
            slot.example.label = r.i32();
            slot.task_id = r.i32();
            slot.stored_loss = r.f64();
            dump.slots.push_back(std::move(slot));
        }
        ckpt.buffer = std::move(dump);
    }
    return ckpt;
}

MLPNet net_from_checkpoint(const Checkpoint& ckpt, bool use_ema) {
    RngState throwaway(0);
    MLPNet net(ckpt.input_dim, ckpt.hidden, ckpt.num_classes, throwaway);
    if (use_ema) {
        if (!ckpt.ema_params) {
            throw DataError("checkpoint has no EMA parameter section");
        }
        net.restore(*ckpt.ema_params);
    } else {
        net.restore(ckpt.params);
    }
    return net;
}

} // namespace trire
