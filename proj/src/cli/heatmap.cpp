#include <algorithm>
#include <cctype>
#include <cmath>
#include <map>
#include <sstream>

#include "mmvad/cli.hpp"
#include "mmvad/errors.hpp"

namespace mmvad::cli {

Rgb colormap(double rate) {
  const double r = std::isnan(rate) ? 0.0 : std::clamp(rate, 0.0, 1.0);
  // dark blue (20, 24, 110) -> yellow (250, 230, 40)
  auto lerp = [r](double lo, double hi) { return static_cast<std::uint8_t>(std::lround(lo + (hi - lo) * r)); };
  return {lerp(20, 250), lerp(24, 230), lerp(110, 40)};
}

Image render_phase_diagram(const std::vector<CellResult>& cells, const std::vector<int>& m_values,
                           const std::vector<int>& t_values, int k, int scale) {
  if (scale < 1) throw DomainError("heatmap scale must be >= 1");
  std::map<std::pair<int, int>, double> rate;
  for (const auto& c : cells)
    if (c.k == k) rate[{c.m, c.t}] = c.rate;

  Image img;
  img.width = static_cast<int>(t_values.size()) * scale;
  img.height = static_cast<int>(m_values.size()) * scale;
  img.pixels.assign(static_cast<std::size_t>(img.width) * img.height, Rgb{0, 0, 0});
  for (std::size_t row = 0; row < m_values.size(); ++row) {
    for (std::size_t col = 0; col < t_values.size(); ++col) {
      auto it = rate.find({m_values[row], t_values[col]});
      const Rgb color = it == rate.end() ? Rgb{0, 0, 0} : colormap(it->second);
      for (int dy = 0; dy < scale; ++dy)
        for (int dx = 0; dx < scale; ++dx) {
          const auto y = static_cast<std::size_t>(row) * scale + dy;
          const auto x = static_cast<std::size_t>(col) * scale + dx;
          img.pixels[y * img.width + x] = color;
        }
    }
  }
  return img;
}

std::string encode_ppm(const Image& image, const std::vector<std::string>& caption) {
  std::string s = "P6\n";
  for (const auto& line : caption) s += "# " + line + "\n";
  s += std::to_string(image.width) + " " + std::to_string(image.height) + "\n255\n";
  s.reserve(s.size() + image.pixels.size() * 3);
  for (const Rgb& p : image.pixels) {
    s.push_back(static_cast<char>(p.r));
    s.push_back(static_cast<char>(p.g));
    s.push_back(static_cast<char>(p.b));
  }
  return s;
}

Image decode_ppm(const std::string& bytes) {
  std::size_t pos = 0;
  auto next_token = [&]() {
    while (pos < bytes.size()) {
      if (bytes[pos] == '#') {
        while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
      } else if (std::isspace(static_cast<unsigned char>(bytes[pos]))) {
        ++pos;
      } else {
        break;
      }
    }
    const std::size_t start = pos;
    while (pos < bytes.size() && !std::isspace(static_cast<unsigned char>(bytes[pos]))) ++pos;
    return bytes.substr(start, pos - start);
  };
  if (next_token() != "P6") throw IoError("not a binary PPM");
  Image img;
  try {
    img.width = std::stoi(next_token());
    img.height = std::stoi(next_token());
    if (next_token() != "255") throw IoError("unsupported PPM max value");
  } catch (const std::logic_error&) {
    throw IoError("malformed PPM header");
  }
  ++pos;  // single whitespace before the raster
  const std::size_t n = static_cast<std::size_t>(img.width) * img.height;
  if (bytes.size() - pos < n * 3) throw IoError("truncated PPM raster");
  img.pixels.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    img.pixels[i] = {static_cast<std::uint8_t>(bytes[pos + 3 * i]), static_cast<std::uint8_t>(bytes[pos + 3 * i + 1]),
                     static_cast<std::uint8_t>(bytes[pos + 3 * i + 2])};
  }
  return img;
}

}  // namespace mmvad::cli
