#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <vector>

#include "instaug/rng.hpp"
#include "instaug/types.hpp"

namespace instaug {

/// Range-binned empirical remission samples, built unsupervised from real
/// scans. Each bin keeps a bounded reservoir so memory stays flat over
/// arbitrarily large datasets while the kept values remain an unbiased
/// draw from everything observed in that bin.
class RemissionTable {
 public:
  struct Bin {
    std::vector<float> values;
    uint64_t total_count = 0;
  };

  RemissionTable(double bin_width, std::size_t reservoir_size);

  /// Adds one observation at the given 3D range.
  void add(double range, float remission, Rng& rng);

  /// Adds every point of a cloud, keyed by its Euclidean range.
  void add_cloud(const PointCloud& cloud, Rng& rng);

  /// Uniform draw from the bin containing `range`; empty bins fall back to
  /// the nearest non-empty bin (ties toward smaller range). Throws if the
  /// whole table is empty.
  float sample(double range, Rng& rng) const;

  /// Folds a sharded partial table into this one. Reservoirs are re-sampled
  /// weighted by the total observation counts they represent.
  void merge(const RemissionTable& other, Rng& rng);

  bool empty() const;
  double bin_width() const { return bin_width_; }
  std::size_t reservoir_size() const { return reservoir_size_; }
  const std::vector<Bin>& bins() const { return bins_; }

  /// Index of the bin `range` falls into (negative ranges clamp to bin 0).
  std::size_t bin_index(double range) const;

  /// Nearest non-empty bin to `index`, ties toward smaller range. Throws on
  /// an empty table.
  std::size_t nearest_populated_bin(std::size_t index) const;

  void save(const std::filesystem::path& path) const;
  static RemissionTable load(const std::filesystem::path& path);

 private:
  double bin_width_;
  std::size_t reservoir_size_;
  std::vector<Bin> bins_;
};

/// Streams every listed scan into a fresh table. Throws if the scans held no
/// points at all.
RemissionTable build_remission_table(const std::vector<std::filesystem::path>& scan_files,
                                     double bin_width, std::size_t reservoir_size, Rng& rng);

}  // namespace instaug
