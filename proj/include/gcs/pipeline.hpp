#pragma once

#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "gcs/imaging.hpp"
#include "json.hpp"

namespace gcs {

namespace ops {
struct Rgb2Gray {
  friend bool operator==(const Rgb2Gray&, const Rgb2Gray&) = default;
};
struct Complement {
  friend bool operator==(const Complement&, const Complement&) = default;
};
struct Histogram {
  friend bool operator==(const Histogram&, const Histogram&) = default;
};
struct GrayAdjust {
  double low_in = 0.0;
  double high_in = 1.0;
  double gamma = 1.0;
  friend bool operator==(const GrayAdjust&, const GrayAdjust&) = default;
};
struct NoiseFilter {
  FilterKind kind = FilterKind::Median;
  int k = 3;
  friend bool operator==(const NoiseFilter&, const NoiseFilter&) = default;
};
struct EdgeDetect {
  EdgeOperator op = EdgeOperator::Sobel;
  EdgeParams params;
  friend bool operator==(const EdgeDetect&, const EdgeDetect&) = default;
};
struct RotateQuarter {
  int turns = 1;
  friend bool operator==(const RotateQuarter&, const RotateQuarter&) = default;
};
}  // namespace ops

using EnhancementOp =
    std::variant<ops::Rgb2Gray, ops::Complement, ops::Histogram, ops::GrayAdjust,
                 ops::NoiseFilter, ops::EdgeDetect, ops::RotateQuarter>;

using AnyImage = std::variant<RgbImage, GrayImage>;

struct LineageEntry {
  EnhancementOp op;
  std::optional<Histogram256> bins;  // set for histogram steps only
};

struct PipelineResult {
  AnyImage image;
  std::vector<LineageEntry> lineage;
};

/// Throws Error(BadParams) when the op's parameters break its invariants.
void validate(const EnhancementOp& op);

/// Applies ops left to right. Gray-only ops on an RGB image raise
/// PipelineError(TypeMismatch) naming the 1-based step.
PipelineResult apply_pipeline(const AnyImage& img, std::span<const EnhancementOp> ops);
inline PipelineResult apply_pipeline(const RgbImage& img,
                                     std::span<const EnhancementOp> ops) {
  return apply_pipeline(AnyImage{img}, ops);
}

// JSON contract: [{"op":"rgb2gray"},{"op":"edge","operator":"sobel","threshold_frac":0.25}]
nlohmann::json to_json(const EnhancementOp& op);
nlohmann::json to_json(const LineageEntry& entry);
nlohmann::json pipeline_to_json(std::span<const EnhancementOp> ops);

/// Parses one op object; missing parameters take their defaults.
EnhancementOp op_from_json(const nlohmann::json& j);

/// Parses a pipeline array. Errors are PipelineError(BadPipeline) with the
/// 1-based step index.
std::vector<EnhancementOp> pipeline_from_json(const nlohmann::json& j);

std::string op_name(const EnhancementOp& op);

}  // namespace gcs
