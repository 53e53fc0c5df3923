#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace trire {

// Raw IDX payloads, big-endian headers. Images: magic 0x00000803 then
// count/rows/cols as 32-bit big-endian words and raw pixel bytes. Labels:
// magic 0x00000801 then count and raw label bytes.
struct IdxImages {
    std::uint32_t count = 0;
    std::uint32_t rows = 0;
    std::uint32_t cols = 0;
    std::vector<std::uint8_t> pixels; // count*rows*cols bytes
};

struct IdxLabels {
    std::uint32_t count = 0;
    std::vector<std::uint8_t> labels;
};

IdxImages load_idx_images(const std::string& path);
IdxLabels load_idx_labels(const std::string& path);

void save_idx_images(const std::string& path, const IdxImages& images);
void save_idx_labels(const std::string& path, const IdxLabels& labels);

} // namespace trire
