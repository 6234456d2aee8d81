#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "vge/ensemble.hpp"

namespace vge::io {

// Probabilities are validated on ingest with this tolerance.
inline constexpr double kIngestTolerance = 1e-5;

enum class InputFormat { kAuto, kJsonLines, kCsv };

struct PredictionFile {
  std::vector<std::string> ids;
  std::vector<std::optional<std::size_t>> labels;
  EnsembleBatch batch;
};

// JSON lines: {"id": "...", "probs": [[C floats] x M], "label": <optional int>}
// CSV: header `id,member,class_0,...,class_{C-1}[,label]`, one row per member.
// Errors carry the 1-based line number: kParseError for syntax and range
// problems, kInconsistentShape when rows disagree on M or C, kEmptyInput for a
// file without samples, and the validate_simplex codes for bad probabilities.
PredictionFile read_predictions(std::istream& in, InputFormat format);
PredictionFile read_predictions(const std::string& path, InputFormat format = InputFormat::kAuto);

InputFormat format_from_path(const std::string& path);

// JSON-lines serialization of a batch (inverse of the JSON-lines reader).
void write_predictions_jsonl(std::ostream& out, const PredictionFile& file);

}  // namespace vge::io
