#include "ehgm/random_model.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <vector>

namespace ehgm {

namespace {

std::uint64_t splitmix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

double unit(std::uint64_t bits) { return static_cast<double>(bits >> 11) * 0x1.0p-53; }

double draw_cost(double u, bool quantized) {
  if (quantized) return 0.25 * (1.0 + std::min(7.0, std::floor(u * 8.0)));
  return u;
}

double injective_count(int d, int n2) {
  double c = 1.0;
  for (int i = 0; i < d; ++i) c *= n2 - i;
  return c;
}

}  // namespace

HypergraphModel random_model(int vertex_count, int point_count, std::mt19937_64& rng,
                             const RandomModelOptions& options) {
  HypergraphModel model(vertex_count, point_count);
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  const int top = options.max_degree > 0 ? std::min(options.max_degree, vertex_count) : vertex_count;

  for (int d = 1; d <= top; ++d) {
    std::vector<int> all(static_cast<std::size_t>(vertex_count));
    for (int v = 0; v < vertex_count; ++v) all[static_cast<std::size_t>(v)] = v;

    // Distinct random vertex subsets of size d.
    std::set<std::vector<int>> chosen;
    const int wanted = std::uniform_int_distribution<int>(1, options.max_hyperedges_per_degree)(rng);
    for (int attempt = 0; attempt < 8 * wanted && static_cast<int>(chosen.size()) < wanted; ++attempt) {
      std::shuffle(all.begin(), all.end(), rng);
      std::vector<int> subset(all.begin(), all.begin() + d);
      std::sort(subset.begin(), subset.end());
      chosen.insert(subset);
    }
    std::vector<std::vector<int>> hyperedges(chosen.begin(), chosen.end());

    if (injective_count(d, point_count) > static_cast<double>(options.max_stored_entries)) {
      const std::uint64_t salt = rng();
      const double density = options.entry_density;
      const bool quantized = options.quantized;
      model.add_tensor(DissimilarityTensor(
          d, hyperedges, [salt, density, quantized](std::size_t h, std::span<const int> points) {
            std::uint64_t state = splitmix(salt ^ (h * 0x100000001b3ULL));
            for (int p : points) state = splitmix(state ^ static_cast<std::uint64_t>(p + 1));
            if (unit(state) >= density) return 0.0;
            return draw_cost(unit(splitmix(state)), quantized);
          }));
      continue;
    }

    DissimilarityTensor tensor(d);
    std::vector<int> points(static_cast<std::size_t>(d));
    std::vector<bool> used(static_cast<std::size_t>(point_count), false);
    for (const auto& h : hyperedges) {
      auto descend = [&](auto&& self, int slot) -> void {
        if (slot == d) {
          if (uniform(rng) < options.entry_density) tensor.set(h, points, draw_cost(uniform(rng), options.quantized));
          return;
        }
        for (int p = 0; p < point_count; ++p) {
          if (used[static_cast<std::size_t>(p)]) continue;
          used[static_cast<std::size_t>(p)] = true;
          points[static_cast<std::size_t>(slot)] = p;
          self(self, slot + 1);
          used[static_cast<std::size_t>(p)] = false;
        }
      };
      descend(descend, 0);
    }
    model.add_tensor(std::move(tensor));
  }
  return model;
}

}  // namespace ehgm
