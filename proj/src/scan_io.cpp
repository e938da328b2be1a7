#include "instaug/scan_io.hpp"

#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

#include "instaug/error.hpp"

namespace instaug {

namespace {

std::vector<char> read_all_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error("cannot open file for reading: " + path.string());
  }
  in.seekg(0, std::ios::end);
  const std::streamoff size = in.tellg();
  in.seekg(0, std::ios::beg);
  std::vector<char> bytes(static_cast<std::size_t>(size));
  if (size > 0 && !in.read(bytes.data(), size)) {
    throw Error("failed to read file: " + path.string());
  }
  return bytes;
}

void write_all_bytes(const std::filesystem::path& path, const void* data, std::size_t size) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw Error("cannot open file for writing: " + path.string());
  }
  if (size > 0) {
    out.write(static_cast<const char*>(data), static_cast<std::streamsize>(size));
  }
  if (!out) {
    throw Error("failed to write file: " + path.string());
  }
}

}  // namespace

double normalize_yaw(double yaw) {
  double wrapped = std::remainder(yaw, 2.0 * M_PI);
  if (wrapped <= -M_PI) wrapped += 2.0 * M_PI;
  return wrapped;
}

PointCloud read_point_cloud(const std::filesystem::path& path) {
  const std::vector<char> bytes = read_all_bytes(path);
  if (bytes.size() % sizeof(Point) != 0) {
    throw Error("malformed scan file (size " + std::to_string(bytes.size()) +
                " is not a multiple of 16): " + path.string());
  }
  const std::size_t count = bytes.size() / sizeof(Point);
  PointCloud cloud;
  cloud.points.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    Point p;
    std::memcpy(&p, bytes.data() + i * sizeof(Point), sizeof(Point));
    if (!std::isfinite(p.x) || !std::isfinite(p.y) || !std::isfinite(p.z) ||
        !std::isfinite(p.remission)) {
      ++cloud.dropped_invalid;
      continue;
    }
    if (p.remission < 0.0f) p.remission = 0.0f;
    if (p.remission > 1.0f) p.remission = 1.0f;
    cloud.points.push_back(p);
  }
  return cloud;
}

void write_point_cloud(const PointCloud& cloud, const std::filesystem::path& path) {
  write_all_bytes(path, cloud.points.data(), cloud.points.size() * sizeof(Point));
}

SemanticLabels read_labels(const std::filesystem::path& path) {
  const std::vector<char> bytes = read_all_bytes(path);
  if (bytes.size() % 4 != 0) {
    throw Error("malformed label file (size " + std::to_string(bytes.size()) +
                " is not a multiple of 4): " + path.string());
  }
  const std::size_t count = bytes.size() / 4;
  SemanticLabels out;
  out.labels.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    uint32_t word = 0;
    std::memcpy(&word, bytes.data() + i * 4, 4);
    out.labels.push_back(PointLabel{static_cast<uint16_t>(word & 0xffffu),
                                    static_cast<uint16_t>(word >> 16)});
  }
  return out;
}

void write_labels(const SemanticLabels& labels, const std::filesystem::path& path) {
  std::vector<uint32_t> words;
  words.reserve(labels.size());
  for (const PointLabel& label : labels.labels) {
    words.push_back(static_cast<uint32_t>(label.semantic_id) |
                    (static_cast<uint32_t>(label.instance_id) << 16));
  }
  write_all_bytes(path, words.data(), words.size() * 4);
}

std::vector<BoxAnnotation> read_boxes(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw Error("cannot open file for reading: " + path.string());
  }
  std::vector<BoxAnnotation> boxes;
  std::string line;
  int line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    if (line.empty() || line.find_first_not_of(" \t\r") == std::string::npos) {
      continue;
    }
    std::istringstream fields(line);
    BoxAnnotation box;
    if (!(fields >> box.class_id >> box.cx >> box.cy >> box.cz >> box.length >>
          box.width >> box.height >> box.yaw)) {
      throw Error("malformed box line " + std::to_string(line_number) + " in " +
                  path.string() + ": '" + line + "'");
    }
    std::string trailing;
    if (fields >> trailing) {
      throw Error("trailing fields on box line " + std::to_string(line_number) + " in " +
                  path.string());
    }
    if (box.length <= 0.0 || box.width <= 0.0 || box.height <= 0.0) {
      throw Error("non-positive box dims on line " + std::to_string(line_number) + " in " +
                  path.string());
    }
    box.yaw = normalize_yaw(box.yaw);
    boxes.push_back(box);
  }
  return boxes;
}

void write_boxes(const std::vector<BoxAnnotation>& boxes, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) {
    throw Error("cannot open file for writing: " + path.string());
  }
  char line[256];
  for (const BoxAnnotation& box : boxes) {
    std::snprintf(line, sizeof(line), "%d %.6g %.6g %.6g %.6g %.6g %.6g %.6g\n",
                  box.class_id, box.cx, box.cy, box.cz, box.length, box.width,
                  box.height, box.yaw);
    out << line;
  }
  if (!out) {
    throw Error("failed to write file: " + path.string());
  }
}

}  // namespace instaug
