#include "gcs/pipeline.hpp"

#include <string_view>

namespace gcs {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};

std::string_view filter_name(FilterKind k) {
  return k == FilterKind::Mean ? "mean" : "median";
}

std::string_view operator_name(EdgeOperator op) {
  switch (op) {
    case EdgeOperator::Sobel: return "sobel";
    case EdgeOperator::Prewitt: return "prewitt";
    case EdgeOperator::Canny: return "canny";
  }
  return "?";
}

const GrayImage& require_gray(const AnyImage& img, std::size_t step,
                              std::string_view what) {
  if (const auto* g = std::get_if<GrayImage>(&img)) return *g;
  throw PipelineError(Errc::TypeMismatch, step,
                      "step " + std::to_string(step) + ": " + std::string(what) +
                          " needs a gray image; add rgb2gray first");
}

AnyImage apply_one(const AnyImage& img, const EnhancementOp& op, std::size_t step,
                   std::optional<Histogram256>& bins) {
  return std::visit(
      overloaded{
          [&](const ops::Rgb2Gray&) -> AnyImage {
            const auto* rgb = std::get_if<RgbImage>(&img);
            if (!rgb)
              throw PipelineError(Errc::TypeMismatch, step,
                                  "step " + std::to_string(step) +
                                      ": rgb2gray needs an RGB image");
            return rgb_to_gray(*rgb);
          },
          [&](const ops::Complement&) -> AnyImage {
            return std::visit([](const auto& i) -> AnyImage { return complement(i); },
                              img);
          },
          [&](const ops::Histogram&) -> AnyImage {
            bins = histogram(require_gray(img, step, "histogram"));
            return img;
          },
          [&](const ops::GrayAdjust& o) -> AnyImage {
            return gray_adjust(require_gray(img, step, "gray_adjust"), o.low_in,
                               o.high_in, o.gamma);
          },
          [&](const ops::NoiseFilter& o) -> AnyImage {
            return noise_filter(require_gray(img, step, "noise_filter"), o.kind, o.k);
          },
          [&](const ops::EdgeDetect& o) -> AnyImage {
            return edge_detect(require_gray(img, step, "edge"), o.op, o.params);
          },
          [&](const ops::RotateQuarter& o) -> AnyImage {
            return std::visit(
                [&](const auto& i) -> AnyImage { return rotate_quarter(i, o.turns); },
                img);
          },
      },
      op);
}

template <class T>
T field_or(const nlohmann::json& j, const char* key, T fallback) {
  if (!j.contains(key)) return fallback;
  return j.at(key).get<T>();
}

}  // namespace

std::string op_name(const EnhancementOp& op) {
  return std::visit(overloaded{
                        [](const ops::Rgb2Gray&) { return "rgb2gray"; },
                        [](const ops::Complement&) { return "complement"; },
                        [](const ops::Histogram&) { return "histogram"; },
                        [](const ops::GrayAdjust&) { return "gray_adjust"; },
                        [](const ops::NoiseFilter&) { return "noise_filter"; },
                        [](const ops::EdgeDetect&) { return "edge"; },
                        [](const ops::RotateQuarter&) { return "rotate"; },
                    },
                    op);
}

void validate(const EnhancementOp& op) {
  std::visit(
      overloaded{
          [](const ops::GrayAdjust& o) {
            if (!(o.low_in >= 0.0 && o.low_in < o.high_in && o.high_in <= 1.0))
              throw Error(Errc::BadParams, "gray_adjust: need 0 <= low_in < high_in <= 1");
            if (!(o.gamma > 0.0))
              throw Error(Errc::BadParams, "gray_adjust: gamma must be > 0");
          },
          [](const ops::NoiseFilter& o) {
            if (o.k < 3 || o.k % 2 == 0)
              throw Error(Errc::BadParams, "noise_filter: k must be odd and >= 3");
          },
          [](const ops::EdgeDetect& o) {
            const auto& p = o.params;
            if (o.op == EdgeOperator::Canny) {
              if (!(p.sigma > 0.0 && p.low > 0.0 && p.low < p.high && p.high <= 1.0))
                throw Error(Errc::BadParams, "edge: canny needs sigma > 0, 0 < low < high <= 1");
            } else if (!(p.threshold_frac > 0.0 && p.threshold_frac <= 1.0)) {
              throw Error(Errc::BadParams, "edge: threshold_frac must be in (0, 1]");
            }
          },
          [](const ops::RotateQuarter& o) {
            if (o.turns < 0 || o.turns > 3)
              throw Error(Errc::BadParams, "rotate: turns must be in 0..3");
          },
          [](const auto&) {},
      },
      op);
}

PipelineResult apply_pipeline(const AnyImage& img, std::span<const EnhancementOp> ops) {
  PipelineResult result{img, {}};
  result.lineage.reserve(ops.size());
  for (std::size_t i = 0; i < ops.size(); ++i) {
    const std::size_t step = i + 1;
    try {
      validate(ops[i]);
    } catch (const Error& e) {
      throw PipelineError(e.code(), step, "step " + std::to_string(step) + ": " + e.what());
    }
    std::optional<Histogram256> bins;
    try {
      result.image = apply_one(result.image, ops[i], step, bins);
    } catch (const PipelineError&) {
      throw;
    } catch (const Error& e) {
      // e.g. a kernel larger than the image
      throw PipelineError(e.code(), step, "step " + std::to_string(step) + ": " + e.what());
    }
    result.lineage.push_back({ops[i], bins});
  }
  return result;
}

nlohmann::json to_json(const EnhancementOp& op) {
  nlohmann::json j{{"op", op_name(op)}};
  std::visit(overloaded{
                 [&](const ops::GrayAdjust& o) {
                   j["low_in"] = o.low_in;
                   j["high_in"] = o.high_in;
                   j["gamma"] = o.gamma;
                 },
                 [&](const ops::NoiseFilter& o) {
                   j["kind"] = filter_name(o.kind);
                   j["k"] = o.k;
                 },
                 [&](const ops::EdgeDetect& o) {
                   j["operator"] = operator_name(o.op);
                   if (o.op == EdgeOperator::Canny) {
                     j["sigma"] = o.params.sigma;
                     j["low"] = o.params.low;
                     j["high"] = o.params.high;
                   } else {
                     j["threshold_frac"] = o.params.threshold_frac;
                   }
                 },
                 [&](const ops::RotateQuarter& o) { j["turns"] = o.turns; },
                 [](const auto&) {},
             },
             op);
  return j;
}

nlohmann::json to_json(const LineageEntry& entry) {
  auto j = to_json(entry.op);
  if (entry.bins) j["bins"] = entry.bins->bins;
  return j;
}

nlohmann::json pipeline_to_json(std::span<const EnhancementOp> ops) {
  auto j = nlohmann::json::array();
  for (const auto& op : ops) j.push_back(to_json(op));
  return j;
}

EnhancementOp op_from_json(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("op") || !j.at("op").is_string())
    throw Error(Errc::BadPipeline, "op must be an object with a string \"op\" field");
  const auto name = j.at("op").get<std::string>();
  try {
    if (name == "rgb2gray") return ops::Rgb2Gray{};
    if (name == "complement") return ops::Complement{};
    if (name == "histogram") return ops::Histogram{};
    if (name == "gray_adjust") {
      ops::GrayAdjust o;
      o.low_in = field_or(j, "low_in", o.low_in);
      o.high_in = field_or(j, "high_in", o.high_in);
      o.gamma = field_or(j, "gamma", o.gamma);
      return o;
    }
    if (name == "noise_filter") {
      ops::NoiseFilter o;
      const auto kind = field_or<std::string>(j, "kind", "median");
      if (kind == "mean") o.kind = FilterKind::Mean;
      else if (kind == "median") o.kind = FilterKind::Median;
      else throw Error(Errc::BadPipeline, "noise_filter: unknown kind \"" + kind + "\"");
      o.k = field_or(j, "k", o.k);
      return o;
    }
    if (name == "edge") {
      ops::EdgeDetect o;
      const auto op = field_or<std::string>(j, "operator", "sobel");
      if (op == "sobel") o.op = EdgeOperator::Sobel;
      else if (op == "prewitt") o.op = EdgeOperator::Prewitt;
      else if (op == "canny") o.op = EdgeOperator::Canny;
      else throw Error(Errc::BadPipeline, "edge: unknown operator \"" + op + "\"");
      o.params.threshold_frac = field_or(j, "threshold_frac", o.params.threshold_frac);
      o.params.sigma = field_or(j, "sigma", o.params.sigma);
      o.params.low = field_or(j, "low", o.params.low);
      o.params.high = field_or(j, "high", o.params.high);
      return o;
    }
    if (name == "rotate") {
      ops::RotateQuarter o;
      o.turns = field_or(j, "turns", o.turns);
      return o;
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::BadPipeline, name + ": " + e.what());
  }
  throw Error(Errc::BadPipeline, "unknown op \"" + name + "\"");
}

std::vector<EnhancementOp> pipeline_from_json(const nlohmann::json& j) {
  if (!j.is_array()) throw PipelineError(Errc::BadPipeline, 0, "pipeline must be a JSON array");
  std::vector<EnhancementOp> out;
  out.reserve(j.size());
  for (std::size_t i = 0; i < j.size(); ++i) {
    try {
      out.push_back(op_from_json(j[i]));
      validate(out.back());
    } catch (const Error& e) {
      throw PipelineError(Errc::BadPipeline, i + 1,
                          "step " + std::to_string(i + 1) + ": " + e.what());
    }
  }
  return out;
}

}  // namespace gcs
