#pragma once

#include <cstdint>
#include <vector>

#include "vibcnn/model.hpp"

namespace vibcnn {

// Adam first/second moments, one vector per trainable slot in the canonical
// trainable_slots order, plus the shared step count.
struct AdamState {
  std::vector<std::vector<float>> m, v;
  std::int64_t t = 0;

  static AdamState init(ModelParamsT<float>& params) {
    AdamState s;
    for (const auto& slot : trainable_slots(params)) {
      s.m.emplace_back(slot.values.size(), 0.0f);
      s.v.emplace_back(slot.values.size(), 0.0f);
    }
    return s;
  }
};

}  // namespace vibcnn
