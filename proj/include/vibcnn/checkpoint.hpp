#pragma once

#include <optional>
#include <string>

#include "vibcnn/adam.hpp"
#include "vibcnn/model.hpp"

namespace vibcnn {

struct Checkpoint {
  ModelParamsT<float> params;
  std::optional<AdamState> adam;
};

// Binary format: magic "VCK1", u16 version (=1), u16 tensor count, then per
// tensor: u16 name length, UTF-8 name, u8 rank, u32 dims[rank], raw
// little-endian f32 data. A rank-1 "arch" tensor carries the geometry;
// optimizer state rides along as "adam.m.<slot>" / "adam.v.<slot>" tensors
// plus the 1-element step counter "adam.t". Round trips are bit-exact.
void save_checkpoint(const ModelParamsT<float>& params, const AdamState* adam,
                     const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace vibcnn
