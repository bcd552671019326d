#pragma once

#include <string>

#include "vibcnn/config.hpp"
#include "vibcnn/trainer.hpp"

// Cross-validation reporting: a machine-readable JSON document with the
// per-fold results and the effective configuration, plus a fixed-width text
// rendering with the aggregate confusion matrix.

namespace vibcnn {

// Stable key order and shortest-round-trip numbers: identical inputs yield
// byte-identical documents.
std::string report_json(const CrossvalReport& rep, const RunConfig& cfg);

// Inverse of report_json for the fields render_report needs. Malformed
// documents raise FormatError.
CrossvalReport report_from_json(const std::string& text);

std::string render_report(const CrossvalReport& rep);

// The two fixed-width confusion panels (raw counts, then percentages of each
// true class), transposed so columns are the true class.
std::string render_confusion(const ConfusionMatrix& cm);

}  // namespace vibcnn
