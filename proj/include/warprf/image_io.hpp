#pragma once

// File formats: PFM (Pf, 32-bit float, scale -1.0 = little-endian) for scalar
// maps with invalid pixels encoded as negative infinity; binary PPM (P6,
// 8-bit) for quick-look images; plain-text XYZ for point clouds.
//
// PFM rasters are stored bottom row first, per the format convention.

#include "warprf/cloud.hpp"
#include "warprf/core.hpp"

#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

namespace warprf {

inline void write_pfm(const std::string& path, const ScalarMap& map) {
  require(map.width > 0 && map.height > 0, "pfm: empty map");
  std::ofstream out(path, std::ios::binary);
  require(out.good(), "pfm: cannot open for writing: " + path);
  out << "Pf\n" << map.width << " " << map.height << "\n-1.0\n";
  std::vector<float> row(map.width);
  for (int y = map.height - 1; y >= 0; --y) {
    for (int x = 0; x < map.width; ++x) {
      row[x] = map.is_valid(x, y) ? static_cast<float>(map.at(x, y))
                                  : -std::numeric_limits<float>::infinity();
    }
    out.write(reinterpret_cast<const char*>(row.data()),
              static_cast<std::streamsize>(row.size() * sizeof(float)));
  }
  require(out.good(), "pfm: write failed: " + path);
}

inline ScalarMap read_pfm(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), "pfm: cannot open: " + path);
  std::string magic;
  in >> magic;
  require(magic == "Pf", "pfm: bad magic (expected Pf): " + path);
  int width = 0, height = 0;
  double scale = 0.0;
  in >> width >> height >> scale;
  require(width > 0 && height > 0, "pfm: bad dimensions: " + path);
  require(scale < 0.0, "pfm: only little-endian (negative scale) files supported: " + path);
  in.get();  // single whitespace after the scale
  ScalarMap map(width, height);
  std::vector<float> row(width);
  for (int y = height - 1; y >= 0; --y) {
    in.read(reinterpret_cast<char*>(row.data()),
            static_cast<std::streamsize>(row.size() * sizeof(float)));
    require(in.gcount() == static_cast<std::streamsize>(row.size() * sizeof(float)),
            "pfm: truncated payload: " + path);
    for (int x = 0; x < width; ++x) {
      float v = row[x];
      if (std::isinf(v) && v < 0.0f) continue;  // invalid pixel
      if (std::isnan(v)) continue;
      map.set(x, y, v);
    }
  }
  return map;
}

/// 8-bit binary PPM quick-look; channel values are clamped and rounded.
inline void write_ppm(const std::string& path, const ImageBuffer& image) {
  require(image.width > 0 && image.height > 0, "ppm: empty image");
  std::ofstream out(path, std::ios::binary);
  require(out.good(), "ppm: cannot open for writing: " + path);
  out << "P6\n" << image.width << " " << image.height << "\n255\n";
  std::vector<unsigned char> row(static_cast<size_t>(image.width) * 3);
  for (int y = 0; y < image.height; ++y) {
    for (int x = 0; x < image.width; ++x) {
      Vec3 c = image.is_valid(x, y) ? image.at(x, y) : Vec3::Zero();
      for (int ch = 0; ch < 3; ++ch)
        row[3 * x + ch] = static_cast<unsigned char>(std::lround(clamp01(c[ch]) * 255.0));
    }
    out.write(reinterpret_cast<const char*>(row.data()), static_cast<std::streamsize>(row.size()));
  }
  require(out.good(), "ppm: write failed: " + path);
}

inline ImageBuffer read_ppm(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), "ppm: cannot open: " + path);
  std::string magic;
  in >> magic;
  require(magic == "P6", "ppm: bad magic (expected P6): " + path);
  int width = 0, height = 0, maxval = 0;
  in >> width >> height >> maxval;
  require(width > 0 && height > 0, "ppm: bad dimensions: " + path);
  require(maxval == 255, "ppm: only 8-bit files supported: " + path);
  in.get();
  ImageBuffer image(width, height, Vec3::Zero(), true);
  std::vector<unsigned char> row(static_cast<size_t>(width) * 3);
  for (int y = 0; y < height; ++y) {
    in.read(reinterpret_cast<char*>(row.data()), static_cast<std::streamsize>(row.size()));
    require(in.gcount() == static_cast<std::streamsize>(row.size()), "ppm: truncated: " + path);
    for (int x = 0; x < width; ++x) {
      image.set(x, y, Vec3(row[3 * x] / 255.0, row[3 * x + 1] / 255.0, row[3 * x + 2] / 255.0));
    }
  }
  return image;
}

/// Plain text cloud, one "x y z" triple per line.
inline void write_xyz(const std::string& path, const PointCloud& cloud) {
  std::ofstream out(path);
  require(out.good(), "xyz: cannot open for writing: " + path);
  char buf[128];
  for (const auto& p : cloud.points) {
    std::snprintf(buf, sizeof(buf), "%.17g %.17g %.17g\n", p.x(), p.y(), p.z());
    out << buf;
  }
  require(out.good(), "xyz: write failed: " + path);
}

inline PointCloud read_xyz(const std::string& path) {
  std::ifstream in(path);
  require(in.good(), "xyz: cannot open: " + path);
  PointCloud cloud;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::istringstream ss(line);
    double x, y, z;
    if (!(ss >> x >> y >> z))
      throw std::invalid_argument("xyz: parse error at line " + std::to_string(lineno) + ": " + path);
    cloud.points.emplace_back(x, y, z);
  }
  cloud.validate();
  return cloud;
}

}  // namespace warprf
