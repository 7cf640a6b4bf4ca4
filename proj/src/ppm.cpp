#include "gcs/ppm.hpp"

#include <cctype>
#include <fstream>
#include <iterator>
#include <string>

#include "gcs/error.hpp"

namespace gcs {

namespace {

class HeaderReader {
 public:
  explicit HeaderReader(std::span<const std::uint8_t> b) : bytes_(b) {}

  void skip_space_and_comments() {
    while (pos_ < bytes_.size()) {
      if (bytes_[pos_] == '#') {
        while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
      } else if (std::isspace(bytes_[pos_])) {
        ++pos_;
      } else {
        break;
      }
    }
  }

  long number() {
    skip_space_and_comments();
    long v = 0;
    std::size_t digits = 0;
    while (pos_ < bytes_.size() && std::isdigit(bytes_[pos_])) {
      v = v * 10 + (bytes_[pos_++] - '0');
      if (++digits > 9) throw Error(Errc::MalformedPpm, "PPM header number too large");
    }
    if (digits == 0) throw Error(Errc::MalformedPpm, "PPM header: expected a number");
    return v;
  }

  std::size_t pos() const { return pos_; }
  void advance(std::size_t n) { pos_ += n; }

 private:
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

std::vector<std::uint8_t> encode_ppm(const RgbImage& img) {
  const auto header = "P6\n" + std::to_string(img.width()) + " " +
                      std::to_string(img.height()) + "\n255\n";
  std::vector<std::uint8_t> out(header.size() + img.bytes().size());
  std::copy(header.begin(), header.end(), out.begin());
  std::copy(img.bytes().begin(), img.bytes().end(), out.begin() + header.size());
  return out;
}

RgbImage decode_ppm(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 2 || bytes[0] != 'P' || bytes[1] != '6')
    throw Error(Errc::MalformedPpm, "not a binary PPM (P6) file");
  HeaderReader r(bytes);
  r.advance(2);
  const long w = r.number();
  const long h = r.number();
  const long maxval = r.number();
  if (w < 1 || h < 1) throw Error(Errc::MalformedPpm, "PPM dimensions must be positive");
  if (maxval != 255)
    throw Error(Errc::MalformedPpm,
                "only 8-bit PPM (maxval 255) is supported, got " + std::to_string(maxval));
  // exactly one whitespace byte separates the header from the raster
  if (r.pos() >= bytes.size() || !std::isspace(bytes[r.pos()]))
    throw Error(Errc::MalformedPpm, "PPM header not terminated");
  r.advance(1);
  const std::size_t need = static_cast<std::size_t>(w) * h * 3;
  if (bytes.size() - r.pos() != need)
    throw Error(Errc::MalformedPpm, "PPM raster has " + std::to_string(bytes.size() - r.pos()) +
                                        " bytes, expected " + std::to_string(need));
  auto px = bytes.subspan(r.pos());
  return RgbImage(static_cast<int>(w), static_cast<int>(h),
                  std::vector<std::uint8_t>(px.begin(), px.end()));
}

void save_image(const RgbImage& img, const std::filesystem::path& path) {
  const auto bytes = encode_ppm(img);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(Errc::IoFailure, "cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(Errc::IoFailure, "write failed: " + path.string());
}

RgbImage load_image(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::IoFailure, "cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode_ppm(bytes);
}

}  // namespace gcs
