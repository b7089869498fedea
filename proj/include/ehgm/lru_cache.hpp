#pragma once

#include <algorithm>
#include <cstddef>
#include <functional>
#include <list>
#include <mutex>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

namespace ehgm {

/// Sharded, mutex-protected LRU map from string keys to doubles. Values are
/// computed outside the lock, so two threads may race to fill the same key; the
/// later insert wins, which is harmless because lazy costs are pure.
class LruCache {
 public:
  explicit LruCache(std::size_t capacity, std::size_t shard_count = 16)
      : shards_(capacity == 0 ? 1 : std::min(shard_count, capacity)) {
    const std::size_t per_shard = capacity / shards_.size();
    for (auto& s : shards_) s.capacity = per_shard;
  }

  LruCache(const LruCache&) = delete;
  LruCache& operator=(const LruCache&) = delete;

  /// Returns the cached value or calls `compute`; `missed` is set when it was called.
  template <typename Compute>
  double get_or_compute(const std::string& key, Compute&& compute, bool& missed) {
    Shard& shard = shards_[std::hash<std::string>{}(key) % shards_.size()];
    {
      std::lock_guard lock(shard.mutex);
      if (auto it = shard.index.find(key); it != shard.index.end()) {
        shard.order.splice(shard.order.begin(), shard.order, it->second);
        missed = false;
        return it->second->second;
      }
    }
    missed = true;
    const double value = compute();
    if (shard.capacity == 0) return value;
    std::lock_guard lock(shard.mutex);
    if (auto it = shard.index.find(key); it != shard.index.end()) {
      it->second->second = value;
      shard.order.splice(shard.order.begin(), shard.order, it->second);
      return value;
    }
    shard.order.emplace_front(key, value);
    shard.index.emplace(key, shard.order.begin());
    if (shard.index.size() > shard.capacity) {
      shard.index.erase(shard.order.back().first);
      shard.order.pop_back();
    }
    return value;
  }

  std::size_t size() const {
    std::size_t total = 0;
    for (const auto& s : shards_) {
      std::lock_guard lock(s.mutex);
      total += s.index.size();
    }
    return total;
  }

 private:
  struct Shard {
    mutable std::mutex mutex;
    std::size_t capacity = 0;
    std::list<std::pair<std::string, double>> order;
    std::unordered_map<std::string, std::list<std::pair<std::string, double>>::iterator> index;
  };
  std::vector<Shard> shards_;
};

}  // namespace ehgm
