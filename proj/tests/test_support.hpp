#pragma once

#include "commute/geodata.hpp"
#include "commute/sampling.hpp"

#include <atomic>
#include <filesystem>
#include <string>
#include <unistd.h>
#include <vector>

namespace testing {

/// Scratch directory removed on destruction.
class TempDir
{
public:
  explicit TempDir(const std::string& tag)
  {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("commute-" + tag + "-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir()
  {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
  std::filesystem::path path_;
};

inline commute::MultiPolygon square(double x0, double y0, double size)
{
  return {commute::Polygon{
      commute::Ring{{x0, y0}, {x0 + size, y0}, {x0 + size, y0 + size}, {x0, y0 + size}, {x0, y0}}}};
}

inline commute::Zone make_zone(std::string id, double x0, double y0, double size, std::int64_t workers,
                               std::int64_t jobs)
{
  commute::Zone z;
  z.id = std::move(id);
  z.shape = square(x0, y0, size);
  z.resident_workers = workers;
  z.jobs = jobs;
  return z;
}

/// Connected-or-not random graph with integer lengths in [1, 20]; about
/// `degree` arcs per node, some one-way.
inline commute::RoadNetwork random_graph(std::size_t nodes, double degree, std::uint64_t seed)
{
  commute::RandomStream rng(seed);
  std::vector<commute::RoadNode> ns;
  for (std::size_t i = 0; i < nodes; ++i) {
    ns.push_back({static_cast<std::int64_t>(i * 3 + 7), {rng.uniform() * 10.0, rng.uniform() * 10.0}});
  }
  std::vector<commute::RoadEdge> es;
  const auto edges = static_cast<std::size_t>(degree * static_cast<double>(nodes) / 2.0);
  for (std::size_t e = 0; e < edges; ++e) {
    const auto a = ns[rng.below(nodes)].id;
    const auto b = ns[rng.below(nodes)].id;
    es.push_back({a, b, static_cast<double>(1 + rng.below(20)), rng.uniform() < 0.8});
  }
  return commute::RoadNetwork(std::move(ns), std::move(es));
}

}  // namespace testing
