#include "instaug/remission.hpp"

#include <cmath>
#include <cstring>
#include <fstream>

#include "instaug/error.hpp"
#include "instaug/scan_io.hpp"

namespace instaug {

RemissionTable::RemissionTable(double bin_width, std::size_t reservoir_size)
    : bin_width_(bin_width), reservoir_size_(reservoir_size) {
  if (!(bin_width > 0.0)) {
    throw Error("remission bin width must be positive");
  }
  if (reservoir_size < 1) {
    throw Error("remission reservoir size must be at least 1");
  }
}

std::size_t RemissionTable::bin_index(double range) const {
  if (!(range > 0.0)) return 0;
  return static_cast<std::size_t>(std::floor(range / bin_width_));
}

void RemissionTable::add(double range, float remission, Rng& rng) {
  const std::size_t index = bin_index(range);
  if (index >= bins_.size()) {
    bins_.resize(index + 1);
  }
  Bin& bin = bins_[index];
  bin.total_count += 1;
  if (bin.values.size() < reservoir_size_) {
    bin.values.push_back(remission);
  } else {
    // Algorithm R: the t-th observation replaces a kept one with prob k/t.
    const uint64_t slot = rng.uniform_index(bin.total_count);
    if (slot < reservoir_size_) {
      bin.values[static_cast<std::size_t>(slot)] = remission;
    }
  }
}

void RemissionTable::add_cloud(const PointCloud& cloud, Rng& rng) {
  for (const Point& p : cloud.points) {
    const double range = std::sqrt(static_cast<double>(p.x) * p.x +
                                   static_cast<double>(p.y) * p.y +
                                   static_cast<double>(p.z) * p.z);
    add(range, p.remission, rng);
  }
}

bool RemissionTable::empty() const {
  for (const Bin& bin : bins_) {
    if (!bin.values.empty()) return false;
  }
  return true;
}

std::size_t RemissionTable::nearest_populated_bin(std::size_t index) const {
  if (empty()) {
    throw Error("remission table is empty");
  }
  if (index < bins_.size() && !bins_[index].values.empty()) {
    return index;
  }
  const std::ptrdiff_t n = static_cast<std::ptrdiff_t>(bins_.size());
  const std::ptrdiff_t start = static_cast<std::ptrdiff_t>(index);
  std::size_t best = 0;
  std::ptrdiff_t best_distance = -1;
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    if (bins_[static_cast<std::size_t>(i)].values.empty()) continue;
    const std::ptrdiff_t distance = std::abs(i - start);
    if (best_distance < 0 || distance < best_distance) {
      best_distance = distance;
      best = static_cast<std::size_t>(i);
    }
  }
  return best;
}

float RemissionTable::sample(double range, Rng& rng) const {
  const std::size_t bin = nearest_populated_bin(bin_index(range));
  const std::vector<float>& values = bins_[bin].values;
  return values[static_cast<std::size_t>(rng.uniform_index(values.size()))];
}

void RemissionTable::merge(const RemissionTable& other, Rng& rng) {
  if (other.bin_width_ != bin_width_ || other.reservoir_size_ != reservoir_size_) {
    throw Error("cannot merge remission tables with different parameters");
  }
  if (other.bins_.size() > bins_.size()) {
    bins_.resize(other.bins_.size());
  }
  for (std::size_t i = 0; i < other.bins_.size(); ++i) {
    Bin& ours = bins_[i];
    const Bin& theirs = other.bins_[i];
    if (theirs.values.empty()) continue;
    if (ours.values.empty()) {
      ours = theirs;
      continue;
    }
    // Weighted without-replacement draw: each kept value stands for
    // total_count / kept of its source stream.
    struct Pool {
      std::vector<float> values;
      double weight;
    };
    Pool pools[2] = {
        {ours.values, static_cast<double>(ours.total_count) / ours.values.size()},
        {theirs.values, static_cast<double>(theirs.total_count) / theirs.values.size()}};
    std::vector<float> merged;
    const std::size_t target =
        std::min(reservoir_size_, pools[0].values.size() + pools[1].values.size());
    merged.reserve(target);
    while (merged.size() < target) {
      const double w0 = pools[0].weight * pools[0].values.size();
      const double w1 = pools[1].weight * pools[1].values.size();
      Pool& chosen = (rng.uniform() * (w0 + w1) < w0) ? pools[0] : pools[1];
      if (chosen.values.empty()) continue;
      const std::size_t pick =
          static_cast<std::size_t>(rng.uniform_index(chosen.values.size()));
      merged.push_back(chosen.values[pick]);
      chosen.values[pick] = chosen.values.back();
      chosen.values.pop_back();
    }
    ours.values = std::move(merged);
    ours.total_count += theirs.total_count;
  }
}

namespace {
constexpr char kMagic[4] = {'R', 'M', 'T', 'B'};
constexpr uint32_t kVersion = 1;

template <typename T>
void write_raw(std::ofstream& out, const T& value) {
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T read_raw(std::ifstream& in, const std::filesystem::path& path) {
  T value;
  in.read(reinterpret_cast<char*>(&value), sizeof(T));
  if (!in) {
    throw Error("truncated remission table file: " + path.string());
  }
  return value;
}
}  // namespace

void RemissionTable::save(const std::filesystem::path& path) const {
  if (empty()) {
    throw Error("refusing to save an empty remission table");
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw Error("cannot open file for writing: " + path.string());
  }
  out.write(kMagic, 4);
  write_raw(out, kVersion);
  write_raw(out, bin_width_);
  write_raw(out, static_cast<uint64_t>(reservoir_size_));
  write_raw(out, static_cast<uint64_t>(bins_.size()));
  for (const Bin& bin : bins_) {
    write_raw(out, bin.total_count);
    write_raw(out, static_cast<uint32_t>(bin.values.size()));
    out.write(reinterpret_cast<const char*>(bin.values.data()),
              static_cast<std::streamsize>(bin.values.size() * sizeof(float)));
  }
  if (!out) {
    throw Error("failed to write remission table: " + path.string());
  }
}

RemissionTable RemissionTable::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error("cannot open remission table: " + path.string());
  }
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kMagic, 4) != 0) {
    throw Error("not a remission table file: " + path.string());
  }
  const auto version = read_raw<uint32_t>(in, path);
  if (version != kVersion) {
    throw Error("unsupported remission table version " + std::to_string(version) + ": " +
                path.string());
  }
  const auto bin_width = read_raw<double>(in, path);
  const auto reservoir_size = read_raw<uint64_t>(in, path);
  const auto bin_count = read_raw<uint64_t>(in, path);
  RemissionTable table(bin_width, static_cast<std::size_t>(reservoir_size));
  table.bins_.resize(static_cast<std::size_t>(bin_count));
  for (Bin& bin : table.bins_) {
    bin.total_count = read_raw<uint64_t>(in, path);
    const auto value_count = read_raw<uint32_t>(in, path);
    bin.values.resize(value_count);
    in.read(reinterpret_cast<char*>(bin.values.data()),
            static_cast<std::streamsize>(value_count * sizeof(float)));
    if (!in) {
      throw Error("truncated remission table file: " + path.string());
    }
  }
  return table;
}

RemissionTable build_remission_table(const std::vector<std::filesystem::path>& scan_files,
                                     double bin_width, std::size_t reservoir_size, Rng& rng) {
  RemissionTable table(bin_width, reservoir_size);
  for (const auto& file : scan_files) {
    table.add_cloud(read_point_cloud(file), rng);
  }
  if (table.empty()) {
    throw Error("no points found while building the remission table");
  }
  return table;
}

}  // namespace instaug
