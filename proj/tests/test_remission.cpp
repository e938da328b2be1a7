#include <doctest.h>

#include <fstream>
#include <set>

#include "instaug/error.hpp"
#include "instaug/remission.hpp"
#include "instaug/scan_io.hpp"
#include "test_support.hpp"

using namespace instaug;
using testsupport::TempDir;

TEST_CASE("a single observation lands in its range bin") {
  RemissionTable table(1.0, 64);
  Rng rng(1);
  table.add(5.0, 0.3f, rng);
  REQUIRE(table.bins().size() == 6);
  const auto& bin = table.bins()[5];
  REQUIRE(bin.values.size() == 1);
  CHECK(bin.values[0] == 0.3f);
  CHECK(bin.total_count == 1);
}

TEST_CASE("reservoirs stay bounded and only hold observed values") {
  RemissionTable table(1.0, 10);
  Rng rng(2);
  std::set<float> offered;
  for (int i = 0; i < 1000; ++i) {
    const float value = static_cast<float>(i) / 1000.0f;
    offered.insert(value);
    table.add(3.5, value, rng);
  }
  const auto& bin = table.bins()[3];
  CHECK(bin.total_count == 1000);
  REQUIRE(bin.values.size() == 10);
  for (float value : bin.values) {
    CHECK(offered.count(value) == 1);
  }
}

TEST_CASE("streaming clouds separately or together gives the same counts") {
  TempDir dir("rem");
  Rng gen(3);
  const PointCloud a = testsupport::random_cloud(500, gen);
  const PointCloud b = testsupport::random_cloud(700, gen);
  PointCloud both;
  both.points = a.points;
  both.points.insert(both.points.end(), b.points.begin(), b.points.end());

  RemissionTable streamed(1.0, 32);
  Rng rng1(4);
  streamed.add_cloud(a, rng1);
  streamed.add_cloud(b, rng1);
  RemissionTable concatenated(1.0, 32);
  Rng rng2(5);
  concatenated.add_cloud(both, rng2);

  REQUIRE(streamed.bins().size() == concatenated.bins().size());
  for (std::size_t i = 0; i < streamed.bins().size(); ++i) {
    CHECK(streamed.bins()[i].total_count == concatenated.bins()[i].total_count);
  }
}

TEST_CASE("sampling a singleton bin is forced") {
  RemissionTable table(1.0, 8);
  Rng rng(6);
  table.add(5.0, 0.3f, rng);
  for (int i = 0; i < 20; ++i) {
    CHECK(table.sample(5.2, rng) == 0.3f);
  }
}

TEST_CASE("empty bins fall back to the nearest populated bin") {
  RemissionTable table(1.0, 8);
  Rng rng(7);
  table.add(5.5, 0.2f, rng);   // bin 5
  table.add(30.5, 0.9f, rng);  // bin 30
  // Range 20 sits in bin 20: |20-30| < |20-5|, so bin 30 supplies the value.
  CHECK(table.nearest_populated_bin(table.bin_index(20.0)) == 30);
  for (int i = 0; i < 10; ++i) {
    CHECK(table.sample(20.0, rng) == 0.9f);
  }
  // Ties go toward the smaller range: bins 5 and 9 around range 7.
  RemissionTable tie(1.0, 8);
  tie.add(5.5, 0.1f, rng);
  tie.add(9.5, 0.8f, rng);
  CHECK(tie.nearest_populated_bin(7) == 5);
}

TEST_CASE("two-value bins sample near evenly") {
  RemissionTable table(1.0, 8);
  Rng rng(8);
  table.add(2.5, 0.2f, rng);
  table.add(2.5, 0.8f, rng);
  int low = 0;
  const int draws = 10000;
  for (int i = 0; i < draws; ++i) {
    if (table.sample(2.5, rng) == 0.2f) ++low;
  }
  // Binomial 5-sigma band around p = 0.5.
  const double fraction = static_cast<double>(low) / draws;
  CHECK(fraction > 0.45);
  CHECK(fraction < 0.55);
}

TEST_CASE("tables survive the disk round trip and reject broken files") {
  TempDir dir("rem");
  RemissionTable table(0.5, 16);
  Rng rng(9);
  for (int i = 0; i < 2000; ++i) {
    table.add(rng.uniform(0.0, 40.0), static_cast<float>(rng.uniform()), rng);
  }
  table.save(dir / "table.rmt");
  const RemissionTable loaded = RemissionTable::load(dir / "table.rmt");
  CHECK(loaded.bin_width() == table.bin_width());
  CHECK(loaded.reservoir_size() == table.reservoir_size());
  REQUIRE(loaded.bins().size() == table.bins().size());
  for (std::size_t i = 0; i < table.bins().size(); ++i) {
    CHECK(loaded.bins()[i].total_count == table.bins()[i].total_count);
    CHECK(loaded.bins()[i].values == table.bins()[i].values);
  }

  // Truncated file: structured error, no partial table.
  const auto bytes = testsupport::slurp(dir / "table.rmt");
  {
    std::ofstream out(dir / "cut.rmt", std::ios::binary | std::ios::trunc);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size() / 2));
  }
  CHECK_THROWS_AS(RemissionTable::load(dir / "cut.rmt"), Error);

  {
    std::ofstream out(dir / "junk.rmt", std::ios::binary | std::ios::trunc);
    out << "not a table";
  }
  CHECK_THROWS_AS(RemissionTable::load(dir / "junk.rmt"), Error);

  // Same layout, bumped version word: refused.
  {
    auto patched = bytes;
    patched[4] = 2;
    std::ofstream out(dir / "future.rmt", std::ios::binary | std::ios::trunc);
    out.write(patched.data(), static_cast<std::streamsize>(patched.size()));
  }
  try {
    RemissionTable::load(dir / "future.rmt");
    FAIL("expected a version error");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("version") != std::string::npos);
  }
}

TEST_CASE("empty tables cannot be saved or sampled") {
  TempDir dir("rem");
  RemissionTable table(1.0, 8);
  CHECK(table.empty());
  CHECK_THROWS_AS(table.save(dir / "nope.rmt"), Error);
  Rng rng(10);
  CHECK_THROWS_AS(table.sample(5.0, rng), Error);
}

TEST_CASE("building from scan files requires points") {
  TempDir dir("rem");
  {
    std::ofstream out(dir / "empty.bin", std::ios::binary);
  }
  Rng rng(11);
  CHECK_THROWS_AS(build_remission_table({dir / "empty.bin"}, 1.0, 8, rng), Error);

  Rng gen(12);
  write_point_cloud(testsupport::random_cloud(100, gen), dir / "scan.bin");
  const RemissionTable table = build_remission_table({dir / "scan.bin"}, 1.0, 8, rng);
  CHECK_FALSE(table.empty());
}

TEST_CASE("merged shards keep counts and membership") {
  Rng rng(13);
  RemissionTable a(1.0, 8), b(1.0, 8);
  std::set<float> offered;
  for (int i = 0; i < 300; ++i) {
    const float va = static_cast<float>(rng.uniform());
    const float vb = static_cast<float>(rng.uniform());
    offered.insert(va);
    offered.insert(vb);
    a.add(4.5, va, rng);
    b.add(4.5, vb, rng);
    b.add(9.5, vb, rng);
  }
  const uint64_t count_a = a.bins()[4].total_count;
  const uint64_t count_b = b.bins()[4].total_count;
  a.merge(b, rng);
  CHECK(a.bins()[4].total_count == count_a + count_b);
  CHECK(a.bins()[4].values.size() == 8);
  for (float value : a.bins()[4].values) {
    CHECK(offered.count(value) == 1);
  }
  CHECK(a.bins()[9].total_count == b.bins()[9].total_count);

  RemissionTable mismatched(2.0, 8);
  CHECK_THROWS_AS(a.merge(mismatched, rng), Error);
}

TEST_CASE("sampling is deterministic under a fixed generator state") {
  RemissionTable table(1.0, 32);
  Rng fill(14);
  for (int i = 0; i < 500; ++i) {
    table.add(fill.uniform(0.0, 20.0), static_cast<float>(fill.uniform()), fill);
  }
  Rng rng_a(15), rng_b(15);
  for (int i = 0; i < 100; ++i) {
    CHECK(table.sample(7.3, rng_a) == table.sample(7.3, rng_b));
  }
}
