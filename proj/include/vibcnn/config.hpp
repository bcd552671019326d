#pragma once

#include <string>

#include "vibcnn/augment.hpp"
#include "vibcnn/trainer.hpp"

// Flat key=value run configuration: one pair per line, '#' starts a comment,
// blank lines are ignored. Every key has a built-in default, unknown keys
// are rejected, and serialization echoes the full effective configuration in
// a fixed canonical order.

namespace vibcnn {

struct RunConfig {
  TrainConfig train;
  AugmentConfig augment;

  void validate() const {
    train.validate();
    augment.validate();
  }
};

RunConfig parse_run_config(const std::string& text);
RunConfig load_run_config(const std::string& path);
std::string serialize_run_config(const RunConfig& cfg);

}  // namespace vibcnn
