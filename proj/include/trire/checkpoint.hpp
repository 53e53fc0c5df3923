#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "trire/buffer.hpp"
#include "trire/masks.hpp"
#include "trire/net.hpp"

namespace trire {

// Versioned binary container, all multi-byte fields little-endian:
//
//   offset  size  field
//   0       8     magic "TRIRECK1"
//   8       4     format version (u32, currently 1)
//   12      4     flags (u32): bit0 ema params, bit1 mask, bit2 buffer
//   16      4     input_dim (u32)
//   20      4     hidden layer count H (u32)
//   24      4*H   hidden widths (u32 each)
//   ..      4     class count (u32)
//   ..      8     parameter count N (u64)
//   ..      8*N   working parameters (f64 each)
//   [ema]   8+8*N parameter count + EMA parameters
//   [mask]  per hidden layer: u32 width + width bytes (0/1);
//           then u64 weight-mask length + that many bytes (0/1)
//   [buffer] u64 capacity, u64 seen, u32 slot count, u32 feature dim;
//           per slot: feature dim f64s, i32 label, i32 task id, f64 loss
//
// The layout is stable within a release; readers reject other magics and
// versions.
struct Checkpoint {
    std::size_t input_dim = 0;
    std::vector<std::size_t> hidden;
    std::size_t num_classes = 0;
    ParamVector params;
    std::optional<ParamVector> ema_params;
    std::optional<SubnetworkMask> mask;

    struct BufferDump {
        std::size_t capacity = 0;
        std::uint64_t seen = 0;
        std::vector<BufferSlot> slots;
    };
    std::optional<BufferDump> buffer;
};

void save_checkpoint(const std::string& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::string& path);

// Rebuilds a model from the stored architecture and parameter set.
MLPNet net_from_checkpoint(const Checkpoint& ckpt, bool use_ema);

} // namespace trire
