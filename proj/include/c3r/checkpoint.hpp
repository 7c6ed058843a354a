#pragma once

#include <map>
#include <string>

#include "c3r/tensor.hpp"

namespace c3r {

// Flat little-endian tensor archive:
//   magic "C3RT", version u32, count u32, then per tensor:
//   name length u16, UTF-8 name, rank u8, extents u32 each, f32 payload.
inline constexpr uint32_t kCheckpointVersion = 1;

void save_checkpoint(const std::string& path, const std::map<std::string, Tensor>& tensors);
std::map<std::string, Tensor> load_checkpoint(const std::string& path);

}  // namespace c3r
