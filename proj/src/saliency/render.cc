// Copyright 2026  The dfwhisper Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

// PNG rendering of saliency maps. Output bytes depend only on the map: no
// timestamps or text chunks, fixed compression settings.

#include <png.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <map>
#include <string>
#include <vector>

#include "dfw/common/error.h"
#include "dfw/saliency/saliency.h"

namespace dfw::saliency {
namespace {

struct Rgb {
  uint8_t r, g, b;
};

constexpr Rgb kWhite{255, 255, 255}, kBlack{0, 0, 0}, kTrace{31, 73, 160};

class Canvas {
 public:
  Canvas(int w, int h) : w_(w), h_(h), px_(static_cast<size_t>(w) * h, kWhite) {}
  int width() const { return w_; }
  int height() const { return h_; }
  void set(int x, int y, Rgb c) {
    if (x >= 0 && y >= 0 && x < w_ && y < h_) px_[static_cast<size_t>(y) * w_ + x] = c;
  }
  void hline(int x0, int x1, int y, Rgb c) {
    for (int x = x0; x <= x1; ++x) set(x, y, c);
  }
  void vline(int x, int y0, int y1, Rgb c) {
    for (int y = std::min(y0, y1); y <= std::max(y0, y1); ++y) set(x, y, c);
  }
  void write(const std::string& path) const;

 private:
  int w_, h_;
  std::vector<Rgb> px_;
};

void Canvas::write(const std::string& path) const {
  FILE* f = std::fopen(path.c_str(), "wb");
  if (!f) fail(ErrorKind::kIoError, "cannot write " + path);
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info || setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    std::fclose(f);
    fail(ErrorKind::kIoError, "PNG encoding failed for " + path);
  }
  png_init_io(png, f);
  png_set_IHDR(png, info, static_cast<png_uint_32>(w_), static_cast<png_uint_32>(h_), 8, PNG_COLOR_TYPE_RGB,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_set_compression_level(png, 6);
  png_write_info(png, info);
  std::vector<uint8_t> row(static_cast<size_t>(w_) * 3);
  for (int y = 0; y < h_; ++y) {
    for (int x = 0; x < w_; ++x) {
      const Rgb& c = px_[static_cast<size_t>(y) * w_ + x];
      row[3 * x] = c.r;
      row[3 * x + 1] = c.g;
      row[3 * x + 2] = c.b;
    }
    png_write_row(png, row.data());
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  if (std::fclose(f) != 0) fail(ErrorKind::kIoError, "cannot close " + path);
}

// 3x5 bitmap glyphs for axis labels.
const std::map<char, std::array<const char*, 5>>& glyphs() {
  static const std::map<char, std::array<const char*, 5>> g = {
      {'0', {"###", "#.#", "#.#", "#.#", "###"}}, {'1', {".#.", "##.", ".#.", ".#.", "###"}},
      {'2', {"###", "..#", "###", "#..", "###"}}, {'3', {"###", "..#", "###", "..#", "###"}},
      {'4', {"#.#", "#.#", "###", "..#", "..#"}}, {'5', {"###", "#..", "###", "..#", "###"}},
      {'6', {"###", "#..", "###", "#.#", "###"}}, {'7', {"###", "..#", "..#", "..#", "..#"}},
      {'8', {"###", "#.#", "###", "#.#", "###"}}, {'9', {"###", "#.#", "###", "..#", "###"}},
      {'a', {"...", "##.", "..#", "###", "###"}}, {'d', {"..#", "..#", "###", "#.#", "###"}},
      {'e', {"...", "###", "###", "#..", "###"}}, {'f', {".##", "#..", "##.", "#..", "#.."}},
      {'g', {"...", "###", "#.#", "###", "..#"}}, {'i', {".#.", "...", ".#.", ".#.", ".#."}},
      {'l', {"#..", "#..", "#..", "#..", ".##"}}, {'m', {"...", "#.#", "###", "#.#", "#.#"}},
      {'n', {"...", "##.", "#.#", "#.#", "#.#"}}, {'p', {"...", "###", "#.#", "###", "#.."}},
      {'r', {"...", "#.#", "##.", "#..", "#.."}}, {'s', {"...", ".##", ".#.", "..#", "##."}},
      {'t', {".#.", "###", ".#.", ".#.", ".##"}}, {'u', {"...", "#.#", "#.#", "#.#", "###"}},
      {'x', {"...", "#.#", ".#.", "#.#", "#.#"}}, {'|', {".#.", ".#.", ".#.", ".#.", ".#."}},
      {'.', {"...", "...", "...", "...", ".#."}}, {' ', {"...", "...", "...", "...", "..."}},
  };
  return g;
}

constexpr int kScale = 2;
constexpr int kGlyphW = 4 * kScale;  // 3 columns + 1 spacing

int text_width(const std::string& s) { return static_cast<int>(s.size()) * kGlyphW; }

void draw_text(Canvas& c, int x, int y, const std::string& s) {
  for (char ch : s) {
    auto it = glyphs().find(ch);
    if (it != glyphs().end())
      for (int r = 0; r < 5; ++r)
        for (int col = 0; col < 3; ++col)
          if (it->second[r][col] == '#')
            for (int dy = 0; dy < kScale; ++dy)
              for (int dx = 0; dx < kScale; ++dx) c.set(x + col * kScale + dx, y + r * kScale + dy, kBlack);
    x += kGlyphW;
  }
}

// Fixed five-stop dark-to-bright colormap, t in [0, 1].
Rgb colormap(double t) {
  static constexpr std::array<Rgb, 5> stops{
      Rgb{0, 0, 4}, Rgb{87, 16, 110}, Rgb{188, 55, 84}, Rgb{249, 142, 9}, Rgb{252, 255, 164}};
  t = std::clamp(t, 0.0, 1.0) * 4.0;
  const int i = std::min(3, static_cast<int>(t));
  const double f = t - i;
  auto lerp = [&](uint8_t a, uint8_t b) {
    return static_cast<uint8_t>(std::lround(a + f * (static_cast<double>(b) - a)));
  };
  return {lerp(stops[i].r, stops[i + 1].r), lerp(stops[i].g, stops[i + 1].g), lerp(stops[i].b, stops[i + 1].b)};
}

// Max of |v| over [i0, i1) with i1 > i0.
double bin_max(const std::vector<double>& v, int64_t i0, int64_t i1) {
  double m = 0.0;
  for (int64_t i = i0; i < i1; ++i) m = std::max(m, v[static_cast<size_t>(i)]);
  return m;
}

int64_t bin_start(int64_t px, int64_t pixels, int64_t n) { return px * n / pixels; }
int64_t bin_end(int64_t px, int64_t pixels, int64_t n) {
  return std::max(bin_start(px, pixels, n) + 1, (px + 1) * n / pixels);
}

// Axis lines with three labelled ticks on x and y.
void draw_axes(Canvas& c, int left, int top, int w, int h, int64_t x_max, const std::string& y_lo,
               const std::string& y_hi, const std::string& x_title, const std::string& y_title) {
  const int bottom = top + h;
  c.vline(left - 1, top, bottom, kBlack);
  c.hline(left - 1, left + w, bottom, kBlack);
  for (int k = 0; k <= 2; ++k) {
    const int x = left + (w - 1) * k / 2;
    c.vline(x, bottom, bottom + 4, kBlack);
    const std::string label = std::to_string(x_max * k / 2);
    draw_text(c, std::clamp(x - text_width(label) / 2, 0, c.width() - text_width(label)), bottom + 7, label);
  }
  c.hline(left - 5, left - 1, bottom - 1, kBlack);
  c.hline(left - 5, left - 1, top, kBlack);
  draw_text(c, left - 8 - text_width(y_lo), bottom - 10, y_lo);
  draw_text(c, left - 8 - text_width(y_hi), top, y_hi);
  draw_text(c, left + (w - text_width(x_title)) / 2, bottom + 22, x_title);
  draw_text(c, left, top - 16, y_title);
}

constexpr int kLeft = 64, kTop = 24, kRight = 16, kBottom = 40;

}  // namespace

void render_heatmap(const SaliencyMap& map, const std::string& path) {
  if (!map.values.defined() || map.values.dim() != 2)
    fail(ErrorKind::kShapeMismatch, "heatmap needs a (rows, frames) map");
  const int64_t rows = map.values.size(0), frames = map.values.size(1);
  const auto mag = map.magnitude();
  const double peak = mag.empty() ? 0.0 : *std::max_element(mag.begin(), mag.end());
  const int w = static_cast<int>(std::clamp<int64_t>(frames, 200, 1000));
  const int h = static_cast<int>(std::clamp<int64_t>(rows, 100, 400));
  Canvas c(kLeft + w + kRight, kTop + h + kBottom);
  // Row-wise maxima per x bin, then per y bin.
  std::vector<double> col(static_cast<size_t>(rows));
  for (int px = 0; px < w; ++px) {
    const int64_t f0 = bin_start(px, w, frames), f1 = bin_end(px, w, frames);
    for (int64_t r = 0; r < rows; ++r) {
      double m = 0.0;
      for (int64_t f = f0; f < f1; ++f) m = std::max(m, mag[static_cast<size_t>(r * frames + f)]);
      col[static_cast<size_t>(r)] = m;
    }
    for (int py = 0; py < h; ++py) {
      const double m = bin_max(col, bin_start(py, h, rows), bin_end(py, h, rows));
      c.set(kLeft + px, kTop + h - 1 - py, colormap(peak > 0.0 ? m / peak : 0.0));
    }
  }
  draw_axes(c, kLeft, kTop, w, h, frames, "0", std::to_string(rows - 1), "frames", "feature index");
  c.write(path);
}

void render_trace(const SaliencyMap& map, const std::string& path) {
  if (!map.values.defined() || map.values.dim() != 1)
    fail(ErrorKind::kShapeMismatch, "trace needs a 1-D map");
  const int64_t n = map.values.size(0);
  if (n == 0) fail(ErrorKind::kShapeMismatch, "trace of an empty map");
  const auto mag = map.magnitude();
  const double peak = *std::max_element(mag.begin(), mag.end());
  const int w = static_cast<int>(std::clamp<int64_t>(n, 200, 1200));
  const int h = 240;
  Canvas c(kLeft + w + kRight, kTop + h + kBottom);
  for (int px = 0; px < w; ++px) {
    const double m = bin_max(mag, bin_start(px, w, n), bin_end(px, w, n));
    const int height = peak > 0.0 ? static_cast<int>(std::lround(m / peak * (h - 1))) : 0;
    c.vline(kLeft + px, kTop + h - 1, kTop + h - 1 - height, kTrace);
  }
  draw_axes(c, kLeft, kTop, w, h, n, "0", "1", "sample", "|grad|");
  c.write(path);
}

}  // namespace dfw::saliency
