// Copyright 2026 The wattbed Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <unistd.h>

#include <atomic>
#include <chrono>
#include <filesystem>
#include <thread>
#include <vector>

#include <catch2/catch_amalgamated.hpp>

#include "wattbed/collector/storage.hpp"
#include "wattbed/common/rng.hpp"
#include "wattbed/common/time.hpp"

using namespace wattbed;
using namespace wattbed::collector;
namespace fs = std::filesystem;

namespace {

/// Fresh directory under the system temp root, removed on destruction.
struct TempDir {
  fs::path path;

  TempDir() {
    static std::atomic<int> counter{0};
    path = fs::temp_directory_path() /
           ("wattbed-store-" + std::to_string(::getpid()) + "-" +
            std::to_string(counter.fetch_add(1)));
    fs::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path, ec);
  }
};

}  // namespace

TEST_CASE("appended samples come back in range queries") {
  TempDir tmp;
  SeriesStore store(tmp.path);
  const SeriesKey key{"edge", "hardware"};
  store.append(key, {1000, 133.6});
  store.append(key, {2000, 134.0});
  store.append(key, {3000, 133.2});

  const auto all = store.query_range(key, 0, 10000);
  REQUIRE(all.size() == 3);
  CHECK(all[1].power_w == 134.0);

  const auto mid = store.query_range(key, 1500, 2500);
  REQUIRE(mid.size() == 1);
  CHECK(mid[0].timestamp_ms == 2000);

  CHECK(store.query_range(key, 4000, 9000).empty());
  CHECK(store.query_range({"edge", "host"}, 0, 10000).empty());
  CHECK(store.sample_count(key) == 3);
}

TEST_CASE("reopening the directory replays identical content") {
  TempDir tmp;
  Rng rng(7);
  const SeriesKey hw{"edge", "hardware"};
  const SeriesKey pod{"edge", "container:renderer"};
  std::vector<RawSample> hw_ref;
  std::vector<RawSample> pod_ref;
  {
    SeriesStore store(tmp.path);
    std::int64_t ts = kDefaultEpochMs;
    for (int i = 0; i < 500; ++i) {
      ts += 1000 + static_cast<std::int64_t>(rng.next_below(50));
      hw_ref.push_back({ts, rng.uniform(100.0, 200.0)});
      store.append(hw, hw_ref.back());
      pod_ref.push_back({ts, rng.uniform(10.0, 30.0)});
      store.append(pod, pod_ref.back());
    }
    store.flush_all();
  }

  SeriesStore reopened(tmp.path);
  const auto keys = reopened.list_series();
  REQUIRE(keys.size() == 2);
  const auto hw_back = reopened.query_range(hw, INT64_MIN, INT64_MAX);
  const auto pod_back = reopened.query_range(pod, INT64_MIN, INT64_MAX);
  REQUIRE(hw_back.size() == hw_ref.size());
  REQUIRE(pod_back.size() == pod_ref.size());
  for (std::size_t i = 0; i < hw_ref.size(); ++i) {
    CHECK(hw_back[i].timestamp_ms == hw_ref[i].timestamp_ms);
    CHECK(hw_back[i].power_w == hw_ref[i].power_w);
    CHECK(pod_back[i].power_w == pod_ref[i].power_w);
  }
}

TEST_CASE("series names with separators survive the filename encoding") {
  TempDir tmp;
  const SeriesKey pod{"edge", "container:renderer"};
  {
    SeriesStore store(tmp.path);
    store.append(pod, {1000, 20.68});
  }
  // The ':' must not reach the filesystem name.
  bool found = false;
  for (const auto& entry : fs::directory_iterator(tmp.path)) {
    const auto name = entry.path().filename().string();
    CHECK(name.find(':') == std::string::npos);
    if (name.find("container") != std::string::npos) {
      found = true;
    }
  }
  CHECK(found);

  SeriesStore reopened(tmp.path);
  const auto back = reopened.query_range(pod, 0, 2000);
  REQUIRE(back.size() == 1);
  CHECK(back[0].power_w == 20.68);
}

TEST_CASE("appends must advance the series clock") {
  TempDir tmp;
  SeriesStore store(tmp.path);
  const SeriesKey key{"edge", "hardware"};
  store.append(key, {2000, 1.0});
  CHECK_THROWS_AS(store.append(key, {2000, 2.0}), OutOfOrderAppend);
  CHECK_THROWS_AS(store.append(key, {1500, 2.0}), OutOfOrderAppend);
  // A different series has its own clock.
  store.append({"edge", "host"}, {1000, 3.0});
  CHECK(store.sample_count(key) == 1);
}

TEST_CASE("a million appends still answer range queries in bounded time") {
  TempDir tmp;
  SeriesStore store(tmp.path);
  const SeriesKey key{"edge", "hardware"};
  constexpr int kSamples = 1'000'000;
  for (int i = 0; i < kSamples; ++i) {
    store.append(key, {static_cast<std::int64_t>(i) * 10, 100.0});
  }

  const auto t0 = std::chrono::steady_clock::now();
  const auto mid = store.query_range(key, 2'500'000, 7'500'000);
  const auto elapsed = std::chrono::duration_cast<std::chrono::milliseconds>(
                           std::chrono::steady_clock::now() - t0)
                           .count();
  CHECK(mid.size() == 500'001);
  CHECK(elapsed < 100);
}

TEST_CASE("concurrent appenders on distinct series do not interleave") {
  TempDir tmp;
  SeriesStore store(tmp.path);
  constexpr int kThreads = 8;
  constexpr int kPerThread = 2000;
  std::vector<std::thread> workers;
  for (int t = 0; t < kThreads; ++t) {
    workers.emplace_back([&store, t] {
      const SeriesKey key{"node" + std::to_string(t), "hardware"};
      for (int i = 0; i < kPerThread; ++i) {
        store.append(key, {static_cast<std::int64_t>(i + 1) * 100,
                           static_cast<double>(t * 1000 + i)});
      }
    });
  }
  for (auto& w : workers) {
    w.join();
  }
  for (int t = 0; t < kThreads; ++t) {
    const SeriesKey key{"node" + std::to_string(t), "hardware"};
    const auto got = store.query_range(key, INT64_MIN, INT64_MAX);
    REQUIRE(got.size() == kPerThread);
    for (int i = 0; i < kPerThread; ++i) {
      CHECK(got[i].power_w == static_cast<double>(t * 1000 + i));
    }
  }
}
