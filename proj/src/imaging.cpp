#include "gcs/imaging.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <numbers>
#include <utility>
#include <vector>

namespace gcs {

namespace {

std::uint8_t round_to_u8(double v) {
  return static_cast<std::uint8_t>(std::clamp(std::round(v), 0.0, 255.0));
}

// Image padded by `r` replicated pixels on every side, stored as int so that
// kernels can index without clamping.
struct Padded {
  int r;
  int pw;
  std::vector<int> data;

  Padded(const GrayImage& img, int radius)
      : r(radius), pw(img.width() + 2 * radius) {
    const int w = img.width();
    const int h = img.height();
    data.resize(static_cast<std::size_t>(pw) * (h + 2 * r));
    for (int py = 0; py < h + 2 * r; ++py) {
      const int sy = std::clamp(py - r, 0, h - 1);
      auto src = img.row(sy);
      int* dst = &data[static_cast<std::size_t>(py) * pw];
      for (int px = 0; px < pw; ++px) dst[px] = src[std::clamp(px - r, 0, w - 1)];
    }
  }

  // (x, y) in source coordinates.
  int operator()(int x, int y) const {
    return data[static_cast<std::size_t>(y + r) * pw + (x + r)];
  }
};

GrayImage mean_filter(const GrayImage& img, int k) {
  const int w = img.width();
  const int h = img.height();
  const int r = k / 2;
  const Padded pad(img, r);
  const int ph = h + 2 * r;

  // Summed-area table over the padded image, one extra leading row/column.
  const int sw = pad.pw + 1;
  std::vector<std::int64_t> sat(static_cast<std::size_t>(sw) * (ph + 1), 0);
  for (int y = 0; y < ph; ++y) {
    std::int64_t row_sum = 0;
    for (int x = 0; x < pad.pw; ++x) {
      row_sum += pad.data[static_cast<std::size_t>(y) * pad.pw + x];
      sat[static_cast<std::size_t>(y + 1) * sw + x + 1] =
          sat[static_cast<std::size_t>(y) * sw + x + 1] + row_sum;
    }
  }

  const std::int64_t area = static_cast<std::int64_t>(k) * k;
  GrayImage out(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      // window in padded coords: [x, x+k) x [y, y+k)
      const std::int64_t sum = sat[static_cast<std::size_t>(y + k) * sw + x + k] -
                               sat[static_cast<std::size_t>(y) * sw + x + k] -
                               sat[static_cast<std::size_t>(y + k) * sw + x] +
                               sat[static_cast<std::size_t>(y) * sw + x];
      // round half away from zero; sum is non-negative
      out.at(x, y) = static_cast<std::uint8_t>((2 * sum + area) / (2 * area));
    }
  }
  return out;
}

// Sliding-histogram median (Huang): one histogram per row, updated by
// removing the leaving column and adding the entering one.
GrayImage median_filter(const GrayImage& img, int k) {
  const int w = img.width();
  const int h = img.height();
  const int r = k / 2;
  const Padded pad(img, r);
  const int rank = (k * k) / 2;  // 0-based index of the median

  GrayImage out(w, h);
  std::array<int, 256> hist{};
  for (int y = 0; y < h; ++y) {
    hist.fill(0);
    for (int dy = -r; dy <= r; ++dy)
      for (int dx = -r; dx <= r; ++dx) ++hist[pad(dx, y + dy)];

    for (int x = 0; x < w; ++x) {
      if (x > 0) {
        for (int dy = -r; dy <= r; ++dy) {
          --hist[pad(x - r - 1, y + dy)];
          ++hist[pad(x + r, y + dy)];
        }
      }
      int seen = 0;
      int v = 0;
      for (; v < 256; ++v) {
        seen += hist[v];
        if (seen > rank) break;
      }
      out.at(x, y) = static_cast<std::uint8_t>(v);
    }
  }
  return out;
}

struct Kernel3 {
  int side;    // weight of the outer taps (1)
  int center;  // weight of the middle tap (2 for sobel, 1 for prewitt)
};

GrayImage gradient_threshold(const GrayImage& img, Kernel3 kern, double frac) {
  const int w = img.width();
  const int h = img.height();
  const Padded p(img, 1);

  std::vector<double> mag(img.pixel_count());
  double max_mag = 0.0;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const int gx = kern.side * (p(x + 1, y - 1) - p(x - 1, y - 1)) +
                     kern.center * (p(x + 1, y) - p(x - 1, y)) +
                     kern.side * (p(x + 1, y + 1) - p(x - 1, y + 1));
      const int gy = kern.side * (p(x - 1, y + 1) - p(x - 1, y - 1)) +
                     kern.center * (p(x, y + 1) - p(x, y - 1)) +
                     kern.side * (p(x + 1, y + 1) - p(x + 1, y - 1));
      const double m = std::sqrt(static_cast<double>(gx * gx + gy * gy));
      mag[static_cast<std::size_t>(y) * w + x] = m;
      max_mag = std::max(max_mag, m);
    }
  }

  GrayImage out(w, h);
  if (max_mag == 0.0) return out;
  const double threshold = frac * max_mag;
  auto dst = out.bytes();
  for (std::size_t i = 0; i < mag.size(); ++i)
    dst[i] = mag[i] >= threshold ? 255 : 0;
  return out;
}

std::vector<double> gaussian_weights(double sigma) {
  const int r = static_cast<int>(std::ceil(3.0 * sigma));
  std::vector<double> w(2 * r + 1);
  double sum = 0.0;
  for (int i = -r; i <= r; ++i) {
    w[i + r] = std::exp(-(i * i) / (2.0 * sigma * sigma));
    sum += w[i + r];
  }
  for (auto& v : w) v /= sum;
  return w;
}

GrayImage canny(const GrayImage& img, const EdgeParams& prm) {
  const int w = img.width();
  const int h = img.height();
  const auto idx = [w](int x, int y) { return static_cast<std::size_t>(y) * w + x; };
  const auto cx = [w](int x) { return std::clamp(x, 0, w - 1); };
  const auto cy = [h](int y) { return std::clamp(y, 0, h - 1); };

  // separable gaussian, horizontal then vertical
  const auto kern = gaussian_weights(prm.sigma);
  const int r = static_cast<int>(kern.size() / 2);
  std::vector<double> tmp(img.pixel_count());
  std::vector<double> smooth(img.pixel_count());
  for (int y = 0; y < h; ++y) {
    auto row = img.row(y);
    for (int x = 0; x < w; ++x) {
      double acc = 0.0;
      for (int i = -r; i <= r; ++i) acc += kern[i + r] * row[cx(x + i)];
      tmp[idx(x, y)] = acc;
    }
  }
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double acc = 0.0;
      for (int i = -r; i <= r; ++i) acc += kern[i + r] * tmp[idx(x, cy(y + i))];
      smooth[idx(x, y)] = acc;
    }
  }

  // sobel gradient on the smoothed field
  std::vector<double> mag(img.pixel_count());
  std::vector<std::uint8_t> sector(img.pixel_count());
  double max_mag = 0.0;
  for (int y = 0; y < h; ++y) {
    const int ym = cy(y - 1), yp = cy(y + 1);
    for (int x = 0; x < w; ++x) {
      const int xm = cx(x - 1), xp = cx(x + 1);
      const double gx = (smooth[idx(xp, ym)] + 2.0 * smooth[idx(xp, y)] + smooth[idx(xp, yp)]) -
                        (smooth[idx(xm, ym)] + 2.0 * smooth[idx(xm, y)] + smooth[idx(xm, yp)]);
      const double gy = (smooth[idx(xm, yp)] + 2.0 * smooth[idx(x, yp)] + smooth[idx(xp, yp)]) -
                        (smooth[idx(xm, ym)] + 2.0 * smooth[idx(x, ym)] + smooth[idx(xp, ym)]);
      const double m = std::sqrt(gx * gx + gy * gy);
      mag[idx(x, y)] = m;
      max_mag = std::max(max_mag, m);
      double deg = std::atan2(gy, gx) * 180.0 / std::numbers::pi;
      if (deg < 0.0) deg += 180.0;
      std::uint8_t s = 0;
      if (deg >= 22.5 && deg < 67.5) s = 1;
      else if (deg >= 67.5 && deg < 112.5) s = 2;
      else if (deg >= 112.5 && deg < 157.5) s = 3;
      sector[idx(x, y)] = s;
    }
  }

  GrayImage out(w, h);
  if (max_mag == 0.0) return out;

  // non-maximum suppression along the quantized gradient direction
  static constexpr std::array<std::pair<int, int>, 4> kStep{
      {{1, 0}, {1, 1}, {0, 1}, {-1, 1}}};
  std::vector<double> thin(img.pixel_count(), 0.0);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const double m = mag[idx(x, y)];
      if (m == 0.0) continue;
      const auto [sx, sy] = kStep[sector[idx(x, y)]];
      const double a = mag[idx(cx(x + sx), cy(y + sy))];
      const double b = mag[idx(cx(x - sx), cy(y - sy))];
      if (m >= a && m >= b) thin[idx(x, y)] = m;
    }
  }

  // double threshold + hysteresis by flood fill from strong pixels
  const double high = prm.high * max_mag;
  const double low = prm.low * max_mag;
  auto dst = out.bytes();
  std::deque<std::pair<int, int>> frontier;
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      if (thin[idx(x, y)] > 0.0 && thin[idx(x, y)] >= high) {
        dst[idx(x, y)] = 255;
        frontier.emplace_back(x, y);
      }
  while (!frontier.empty()) {
    const auto [x, y] = frontier.front();
    frontier.pop_front();
    for (int dy = -1; dy <= 1; ++dy) {
      for (int dx = -1; dx <= 1; ++dx) {
        const int nx = x + dx, ny = y + dy;
        if (nx < 0 || ny < 0 || nx >= w || ny >= h) continue;
        const auto i = idx(nx, ny);
        if (dst[i] == 0 && thin[i] > 0.0 && thin[i] >= low) {
          dst[i] = 255;
          frontier.emplace_back(nx, ny);
        }
      }
    }
  }
  return out;
}

}  // namespace

std::uint64_t raw_image_bits(std::uint64_t width, std::uint64_t height,
                             std::uint64_t bits_per_pixel) {
  if (width == 0 || height == 0 || bits_per_pixel == 0)
    throw Error(Errc::BadParams, "raw_image_bits: arguments must be positive");
  constexpr auto kMax = std::numeric_limits<std::uint64_t>::max();
  if (width > kMax / height)
    throw Error(Errc::Overflow, "raw_image_bits: width * height overflows");
  const std::uint64_t px = width * height;
  if (px > kMax / bits_per_pixel)
    throw Error(Errc::Overflow, "raw_image_bits: pixel count * bpp overflows");
  return px * bits_per_pixel;
}

GrayImage rgb_to_gray(const RgbImage& img) {
  GrayImage out(img.width(), img.height());
  auto src = img.bytes();
  auto dst = out.bytes();
  for (std::size_t i = 0; i < dst.size(); ++i) {
    // weights scaled by 10^4; max sum is 254975 so no clamp is needed
    const std::uint32_t s = 2989u * src[3 * i] + 5870u * src[3 * i + 1] +
                            1140u * src[3 * i + 2];
    dst[i] = static_cast<std::uint8_t>((s + 5000u) / 10000u);
  }
  return out;
}

Histogram256 histogram(const GrayImage& img) {
  Histogram256 h;
  for (auto v : img.bytes()) ++h.bins[v];
  return h;
}

GrayImage gray_adjust(const GrayImage& img, double low_in, double high_in,
                      double gamma) {
  if (!(low_in >= 0.0 && low_in < high_in && high_in <= 1.0))
    throw Error(Errc::InvalidWindow, "gray_adjust: need 0 <= low_in < high_in <= 1");
  if (!(gamma > 0.0))
    throw Error(Errc::InvalidWindow, "gray_adjust: gamma must be > 0");

  std::array<std::uint8_t, 256> lut{};
  for (int v = 0; v < 256; ++v) {
    const double n = std::clamp(v / 255.0, low_in, high_in);
    const double t = std::pow((n - low_in) / (high_in - low_in), gamma);
    lut[v] = round_to_u8(255.0 * t);
  }
  GrayImage out = img;
  for (auto& v : out.bytes()) v = lut[v];
  return out;
}

GrayImage noise_filter(const GrayImage& img, FilterKind kind, int k) {
  if (k < 3 || k % 2 == 0 || k > std::min(img.width(), img.height()))
    throw Error(Errc::BadKernel,
                "noise_filter: k must be odd and in [3, min(width, height)]");
  return kind == FilterKind::Mean ? mean_filter(img, k) : median_filter(img, k);
}

GrayImage edge_detect(const GrayImage& img, EdgeOperator op,
                      const EdgeParams& params) {
  switch (op) {
    case EdgeOperator::Sobel:
    case EdgeOperator::Prewitt:
      if (!(params.threshold_frac > 0.0 && params.threshold_frac <= 1.0))
        throw Error(Errc::BadParams, "edge_detect: threshold_frac must be in (0, 1]");
      return gradient_threshold(
          img, op == EdgeOperator::Sobel ? Kernel3{1, 2} : Kernel3{1, 1},
          params.threshold_frac);
    case EdgeOperator::Canny:
      if (!(params.sigma > 0.0))
        throw Error(Errc::BadParams, "edge_detect: sigma must be > 0");
      if (!(params.low > 0.0 && params.low < params.high && params.high <= 1.0))
        throw Error(Errc::BadParams, "edge_detect: need 0 < low < high <= 1");
      return canny(img, params);
  }
  throw Error(Errc::BadParams, "edge_detect: unknown operator");
}

}  // namespace gcs
