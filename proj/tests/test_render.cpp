#include <doctest.h>

#include <cmath>
#include <set>

#include "instaug/bvh.hpp"
#include "instaug/error.hpp"
#include "instaug/mesh.hpp"
#include "instaug/remission.hpp"
#include "instaug/render.hpp"
#include "instaug/scan_io.hpp"
#include "instaug/sensor.hpp"
#include "test_support.hpp"

using namespace instaug;

namespace {

SensorModel test_sensor() {
  SensorModel sensor;
  for (int i = 0; i < 32; ++i) {
    sensor.ring_elevations.push_back((-16.0 + i) * M_PI / 180.0);
  }
  sensor.azimuth_resolution = 0.25 * M_PI / 180.0;
  sensor.range_min = 1.0;
  sensor.range_max = 100.0;
  sensor.validate();
  return sensor;
}

}  // namespace

TEST_CASE("ray-triangle kernel fixed cases") {
  const Eigen::Vector3d origin(0, 0, 0);
  const Eigen::Vector3d dir(1, 0, 0);

  SUBCASE("axis-aligned hit at t = 5") {
    const auto t = intersect_ray_triangle(origin, dir, {5, -1, -1}, {5, 1, -1}, {5, 0, 1});
    REQUIRE(t.has_value());
    CHECK(*t == doctest::Approx(5.0).epsilon(1e-15));
  }
  SUBCASE("ray lying in the triangle's plane misses") {
    const auto t = intersect_ray_triangle(origin, dir, {1, -1, 0}, {3, 1, 0}, {2, 0, 0});
    CHECK_FALSE(t.has_value());
  }
  SUBCASE("degenerate triangle never hits") {
    const auto t = intersect_ray_triangle(origin, dir, {5, -1, 0}, {5, 0, 0}, {5, 1, 0});
    CHECK_FALSE(t.has_value());
  }
  SUBCASE("edge and vertex hits count") {
    const auto edge = intersect_ray_triangle(origin, dir, {5, 0, -1}, {5, 0, 1}, {5, 3, 0});
    CHECK(edge.has_value());
    const auto vertex = intersect_ray_triangle(origin, dir, {5, 0, 0}, {5, 2, -1}, {5, 2, 1});
    CHECK(vertex.has_value());
  }
  SUBCASE("hits behind the origin are rejected") {
    const auto t = intersect_ray_triangle(origin, dir, {-5, -1, -1}, {-5, 1, -1}, {-5, 0, 1});
    CHECK_FALSE(t.has_value());
  }
}

TEST_CASE("a million random rays agree with the barycentric oracle") {
  Rng rng(31);
  int hits = 0;
  for (int trial = 0; trial < 1000000; ++trial) {
    const Eigen::Vector3d a(rng.uniform(-2, 2), rng.uniform(-2, 2), rng.uniform(-2, 2));
    const Eigen::Vector3d b(rng.uniform(-2, 2), rng.uniform(-2, 2), rng.uniform(-2, 2));
    const Eigen::Vector3d c(rng.uniform(-2, 2), rng.uniform(-2, 2), rng.uniform(-2, 2));
    const Eigen::Vector3d origin(rng.uniform(-4, 4), rng.uniform(-4, 4), rng.uniform(-4, 4));
    Eigen::Vector3d dir(rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1));
    if (dir.norm() < 1e-6) continue;
    dir.normalize();
    const auto mine = intersect_ray_triangle(origin, dir, a, b, c);
    const auto oracle = testsupport::barycentric_intersect(origin, dir, a, b, c);
    REQUIRE(mine.has_value() == oracle.has_value());
    if (mine) {
      REQUIRE(*mine == doctest::Approx(*oracle).epsilon(1e-9));
      ++hits;
    }
  }
  CHECK(hits > 1000);  // the sample actually exercised the hit path
}

TEST_CASE("a frontal square returns its exact range on the central ray") {
  // Plane x = 10 spanning the full window; the ring 16 (theta 0), phi 0 ray
  // hits it perpendicular at range 10 exactly.
  SensorModel sensor = test_sensor();
  Mesh square;
  square.vertices = {{10, -3, -3}, {10, 3, -3}, {10, 3, 3}, {10, -3, 3}};
  square.triangles = {{0, 1, 2}, {0, 2, 3}};
  const TriangleBvh bvh(square);
  const auto [points, shadow] = ray_cast(square, sensor, bvh);
  REQUIRE_FALSE(points.empty());
  bool found_central = false;
  const int central_step = static_cast<int>(sensor.azimuth_cell(0.0));
  for (const auto& point : points.points) {
    if (point.ring == 16 && point.step == central_step) {
      found_central = true;
      CHECK(point.position.norm() == doctest::Approx(10.0).epsilon(1e-12));
    }
  }
  CHECK(found_central);
}

TEST_CASE("BVH nearest hits equal the brute-force scan on random soups") {
  Rng rng(32);
  const SensorModel sensor = test_sensor();
  for (int trial = 0; trial < 20; ++trial) {
    const double distance = rng.uniform(6.0, 25.0);
    const double phi = rng.uniform(-M_PI, M_PI);
    const Eigen::Vector3d center(distance * std::cos(phi), distance * std::sin(phi),
                                 rng.uniform(-1.0, 1.0));
    const Mesh soup = testsupport::make_triangle_soup(200, 1.5, center, rng);
    const TriangleBvh bvh(soup);
    const auto rays = rays_in_window(sensor, phi - 0.4, phi + 0.4, -0.3, 0.3);
    for (const auto& ray : rays) {
      const Eigen::Vector3d dir = ray_direction(sensor, static_cast<std::size_t>(ray.ring),
                                                static_cast<std::size_t>(ray.step));
      const auto fast = bvh.nearest_hit({0, 0, 0}, dir, sensor.range_max);
      const auto slow = testsupport::brute_force_nearest(soup, {0, 0, 0}, dir, sensor.range_max);
      REQUIRE(fast.has_value() == slow.has_value());
      if (fast) {
        CHECK(std::abs(fast->t - *slow) <= 1e-9);
      }
    }
  }
}

TEST_CASE("rendered points sit on the grid, on their rays and on the surface") {
  const SensorModel sensor = test_sensor();
  const Mesh box = transform_mesh(normalize_mesh(testsupport::make_box_mesh(3.0, 2.0, 2.0)),
                                  1.8, 0.4, {12.0, 3.0, -1.5});
  const TriangleBvh bvh(box);
  const auto [points, shadow] = ray_cast(box, sensor, bvh);
  REQUIRE(points.size() > 10);
  std::set<std::pair<int, int>> used_cells;
  for (const auto& point : points.points) {
    const PolarPoint polar = to_polar(point.position);
    CHECK(std::abs(polar.elevation -
                   sensor.ring_elevations[static_cast<std::size_t>(point.ring)]) <= 1e-9);
    CHECK(std::abs(wrap_angle(polar.azimuth -
                              sensor.azimuth_of_step(static_cast<std::size_t>(point.step)))) <=
          1e-9);
    const Eigen::Vector3d dir = ray_direction(sensor, static_cast<std::size_t>(point.ring),
                                              static_cast<std::size_t>(point.step));
    CHECK(testsupport::distance_to_ray_line(point.position, dir) <= 1e-6);
    CHECK(testsupport::distance_to_mesh(point.position, box) <= 1e-6);
    CHECK(point.position.norm() >= sensor.range_min);
    CHECK(point.position.norm() <= sensor.range_max);
    used_cells.insert({point.ring, point.step});
  }
  // Convex mesh: at most one point per ray.
  CHECK(used_cells.size() == points.size());

  // Shadow intervals cover exactly the hit azimuths of their ring.
  for (const auto& point : points.points) {
    const auto& interval = shadow.per_ring[static_cast<std::size_t>(point.ring)];
    REQUIRE(interval.has_value());
    CHECK(shadow.covers(point.ring, to_polar(point.position).azimuth));
  }
}

TEST_CASE("instance point count does not grow with distance") {
  const SensorModel sensor = test_sensor();
  // A box straddling the sensor's horizontal plane keeps the angular windows
  // nested as the distance grows.
  const Mesh canon = normalize_mesh(testsupport::make_box_mesh(2.0, 2.0, 2.0));
  std::size_t previous = std::numeric_limits<std::size_t>::max();
  for (double distance = 6.0; distance <= 30.0; distance += 2.0) {
    const Mesh placed = transform_mesh(canon, 2.0, 0.0, {distance, 0.0, -1.0});
    const TriangleBvh bvh(placed);
    const auto [points, shadow] = ray_cast(placed, sensor, bvh);
    CHECK(points.size() <= previous);
    previous = points.size();
  }
}

TEST_CASE("culling removes shadowed points in front and behind, nothing else") {
  const SensorModel sensor = test_sensor();
  const Mesh box = transform_mesh(normalize_mesh(testsupport::make_box_mesh(2.0, 2.0, 2.0)),
                                  2.0, 0.0, {10.0, 0.0, -1.0});
  const TriangleBvh bvh(box);
  const auto [points, shadow] = ray_cast(box, sensor, bvh);
  REQUIRE(shadow.any());

  // Three points on ring 16 at azimuth 0: in front of, inside and behind the
  // instance; plus one at the same azimuth far above every shadowed ring.
  PointCloud cloud;
  cloud.points.push_back({3.0f, 0.0f, 0.0f, 0.1f});
  cloud.points.push_back({25.0f, 0.0f, 0.0f, 0.1f});
  const double top_theta = sensor.ring_elevations.back();
  cloud.points.push_back({30.0f, 0.0f, static_cast<float>(30.0 * std::tan(top_theta)), 0.1f});
  SemanticLabels labels;
  labels.labels = {{1, 0}, {2, 0}, {3, 0}};

  std::vector<int> rings;
  for (const Point& p : cloud.points) {
    rings.push_back(assign_ring(sensor, to_polar({p.x, p.y, p.z}).elevation));
  }
  REQUIRE(rings[0] == 16);
  REQUIRE(rings[1] == 16);
  REQUIRE(rings[2] == 31);

  REQUIRE(shadow.per_ring[16].has_value());
  const bool top_ring_shadowed = shadow.per_ring[31].has_value();

  const CullResult culled = cull_shadowed_points(cloud, &labels, shadow, rings);
  // Ring 16 is shadowed at azimuth 0: the points in front of and behind the
  // box both go, regardless of range.
  std::set<uint16_t> kept;
  for (const PointLabel& label : culled.labels.labels) kept.insert(label.semantic_id);
  CHECK(kept.count(1) == 0);
  CHECK(kept.count(2) == 0);
  if (!top_ring_shadowed) {
    CHECK(kept.count(3) == 1);  // same azimuth, shadow-free ring: retained
  }
  CHECK(culled.removed + culled.cloud.size() == cloud.size());
  CHECK(culled.labels.size() == culled.cloud.size());
}

TEST_CASE("points outside every ring tolerance are never culled") {
  const SensorModel sensor = test_sensor();
  RingShadow shadow;
  shadow.per_ring.assign(sensor.ring_count(), std::nullopt);
  shadow.per_ring[0] = RingShadow::Interval{-0.1, 0.1};
  PointCloud cloud;
  cloud.points.push_back({10.0f, 0.0f, 30.0f, 0.2f});  // way above the FOV
  const std::vector<int> rings = {assign_ring(sensor, to_polar({10.0, 0.0, 30.0}).elevation)};
  REQUIRE(rings[0] == -1);
  const CullResult culled = cull_shadowed_points(cloud, nullptr, shadow, rings);
  CHECK(culled.removed == 0);
  CHECK(culled.cloud.size() == 1);
}

TEST_CASE("remission assignment draws reservoir members by range") {
  RemissionTable table(1.0, 8);
  Rng fill(33);
  table.add(10.2, 0.3f, fill);  // the only populated bin

  InstancePoints points;
  for (int i = 0; i < 5; ++i) {
    InstancePoint p;
    p.position = Eigen::Vector3d(10.0 + 0.1 * i, 0.0, 0.0);
    points.points.push_back(p);
  }
  Rng rng(34);
  assign_remission(points, table, rng);
  for (const auto& p : points.points) {
    CHECK(p.remission == 0.3f);
  }

  // Determinism and membership on a richer table.
  RemissionTable rich(1.0, 16);
  std::set<float> offered;
  for (int i = 0; i < 400; ++i) {
    const float v = static_cast<float>(fill.uniform());
    offered.insert(v);
    rich.add(fill.uniform(5.0, 15.0), v, fill);
  }
  InstancePoints a = points, b = points;
  Rng rng_a(35), rng_b(35);
  assign_remission(a, rich, rng_a);
  assign_remission(b, rich, rng_b);
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a.points[i].remission == b.points[i].remission);
    CHECK(offered.count(a.points[i].remission) == 1);
  }
}

TEST_CASE("instance dumps use the scan record format") {
  testsupport::TempDir dir("render");
  InstancePoints points;
  for (int i = 0; i < 8; ++i) {
    InstancePoint p;
    p.position = Eigen::Vector3d(10.0 + i, -2.0, 0.5 * i);
    p.remission = 0.125f * static_cast<float>(i);
    points.points.push_back(p);
  }
  dump_instance_points(points, dir / "inst.bin");
  const PointCloud reread = read_point_cloud(dir / "inst.bin");
  REQUIRE(reread.size() == points.size());
  for (std::size_t i = 0; i < reread.size(); ++i) {
    CHECK(reread.points[i].x == static_cast<float>(points.points[i].position.x()));
    CHECK(reread.points[i].remission == points.points[i].remission);
  }
}

TEST_CASE("dropout and noise follow their distributions and stay on the ray") {
  const SensorModel sensor = test_sensor();
  InstancePoints base;
  for (int i = 0; i < 10000; ++i) {
    InstancePoint p;
    p.ring = i % static_cast<int>(sensor.ring_count());
    p.step = (i * 37) % static_cast<int>(sensor.azimuth_step_count());
    p.position = ray_direction(sensor, static_cast<std::size_t>(p.ring),
                               static_cast<std::size_t>(p.step)) *
                 12.0;
    base.points.push_back(p);
  }

  SUBCASE("zero probabilities are the identity") {
    InstancePoints points = base;
    Rng rng(36);
    apply_dropout_and_noise(points, 0.0, 0.0, 0.03, sensor, rng);
    REQUIRE(points.size() == base.size());
    for (std::size_t i = 0; i < points.size(); ++i) {
      CHECK(points.points[i].position == base.points[i].position);
    }
  }

  SUBCASE("drop rate hits the binomial band") {
    InstancePoints points = base;
    Rng rng(37);
    apply_dropout_and_noise(points, 0.1, 0.0, 0.03, sensor, rng);
    const double dropped = static_cast<double>(base.size() - points.size());
    // 3 sigma around 1000 of 10000: sqrt(10000 * 0.1 * 0.9) = 30.
    CHECK(dropped >= 1000 - 90);
    CHECK(dropped <= 1000 + 90);
  }

  SUBCASE("full noise keeps every point on its ray with half-normal magnitude") {
    InstancePoints points = base;
    Rng rng(38);
    const double sigma = 0.03;
    apply_dropout_and_noise(points, 0.0, 1.0, sigma, sensor, rng);
    REQUIRE(points.size() == base.size());
    double total_displacement = 0.0;
    for (std::size_t i = 0; i < points.size(); ++i) {
      const Eigen::Vector3d dir =
          ray_direction(sensor, static_cast<std::size_t>(points.points[i].ring),
                        static_cast<std::size_t>(points.points[i].step));
      CHECK(testsupport::distance_to_ray_line(points.points[i].position, dir) <= 1e-6);
      total_displacement += (points.points[i].position - base.points[i].position).norm();
    }
    const double mean = total_displacement / static_cast<double>(points.size());
    CHECK(mean == doctest::Approx(sigma * std::sqrt(2.0 / M_PI)).epsilon(0.10));
  }

  SUBCASE("noise fraction selects about the requested share") {
    InstancePoints points = base;
    Rng rng(39);
    apply_dropout_and_noise(points, 0.0, 0.6, 0.03, sensor, rng);
    std::size_t moved = 0;
    for (std::size_t i = 0; i < points.size(); ++i) {
      if (points.points[i].position != base.points[i].position) ++moved;
    }
    // 3 sigma around 6000 of 10000: sqrt(10000 * 0.6 * 0.4) = 49.
    CHECK(moved >= 6000 - 147);
    CHECK(moved <= 6000 + 147);
  }

  SUBCASE("parameters outside [0, 1] are rejected") {
    InstancePoints points = base;
    Rng rng(40);
    CHECK_THROWS_AS(apply_dropout_and_noise(points, -0.1, 0.0, 0.03, sensor, rng), Error);
    CHECK_THROWS_AS(apply_dropout_and_noise(points, 0.0, 1.5, 0.03, sensor, rng), Error);
  }
}
