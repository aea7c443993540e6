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

#include <atomic>
#include <chrono>
#include <cmath>
#include <string>
#include <thread>
#include <vector>

#include <catch2/catch_amalgamated.hpp>
#include "wattbed/common/http.hpp"

#include "wattbed/common/rng.hpp"
#include "wattbed/common/time.hpp"
#include "wattbed/meter/mock_meter.hpp"
#include "wattbed/meter/poll.hpp"
#include "wattbed/meter/status.hpp"
#include "wattbed/meter/trace.hpp"

using namespace wattbed;
using namespace wattbed::meter;

namespace {

MeterStatus canonical_status() {
  MeterStatus s;
  s.device_name = "wattbed-pdu";
  s.time_ms = 1700000000000LL;
  s.voltage_v = 230.0;
  s.frequency_hz = 50.0;
  OutputChannel ch;
  ch.id = 1;
  ch.name = "edge";
  ch.state = 1;
  ch.load_w = 133.6;
  ch.current_ma = 580.87;
  ch.power_factor = 1.0;
  ch.energy_wh = 0.0;
  s.outputs = {ch};
  return s;
}

MeterStatus random_status(Rng& rng) {
  MeterStatus s;
  s.device_name = "dev-" + std::to_string(rng.next_below(1000));
  s.time_ms = 1700000000000LL + static_cast<std::int64_t>(rng.next_below(1u << 30));
  s.voltage_v = rng.uniform(100.0, 250.0);
  s.frequency_hz = rng.bernoulli(0.5) ? 50.0 : 60.0;
  const int n = 1 + static_cast<int>(rng.next_below(6));
  for (int i = 0; i < n; ++i) {
    OutputChannel ch;
    ch.id = i + 1;
    ch.name = "node-" + std::to_string(i);
    ch.state = rng.bernoulli(0.8) ? 1 : 0;
    if (ch.state == 1) {
      ch.load_w = rng.uniform(0.0, 400.0);
      ch.current_ma = rng.uniform(0.0, 2000.0);
    }
    ch.power_factor = rng.uniform(0.0, 1.0);
    // Energy travels rounded to 3 decimals; generate it on-grid so the
    // round trip is exact.
    ch.energy_wh = std::round(rng.uniform(0.0, 9000.0) * 1000.0) / 1000.0;
    s.outputs.push_back(ch);
  }
  return s;
}

}  // namespace

TEST_CASE("encoding matches the device document shape byte for byte") {
  const std::string wire = encode_meter_status(canonical_status());
  CHECK(wire ==
        R"({"Agent":{"DeviceName":"wattbed-pdu","Time":1700000000000},)"
        R"("GlobalMeasure":{"Voltage":230.0,"Frequency":50.0},)"
        R"("Outputs":[{"ID":1,"Name":"edge","State":1,"Load":133.6,)"
        R"("Current":580.87,"PowerFactor":1.0,"Energy":0.0}]})");
  CHECK(wire.find("\"Load\":133.6") != std::string::npos);
}

TEST_CASE("off channels encode zero load and current") {
  MeterStatus s = canonical_status();
  s.outputs[0].state = 0;
  s.outputs[0].load_w = 0.0;
  s.outputs[0].current_ma = 0.0;
  const std::string wire = encode_meter_status(s);
  CHECK(wire.find("\"Load\":0.0") != std::string::npos);
  CHECK(wire.find("\"Current\":0.0") != std::string::npos);

  s.outputs[0].load_w = 10.0;
  CHECK_THROWS_MATCHES(
      encode_meter_status(s), ParseError,
      Catch::Matchers::Predicate<ParseError>([](const ParseError& e) {
        return e.kind() == ParseErrorKind::kInvariantViolation;
      }));
}

TEST_CASE("status documents survive an encode/parse round trip") {
  Rng rng(20260822);
  for (int i = 0; i < 500; ++i) {
    const MeterStatus s = random_status(rng);
    const MeterStatus back = parse_meter_status(encode_meter_status(s));
    REQUIRE(back == s);
  }
}

TEST_CASE("parser accepts a gnodeb document and ignores unknown fields") {
  const std::string doc = R"({
    "Agent": {"DeviceName": "pdu", "Time": 1700000000000, "Model": "4KS"},
    "GlobalMeasure": {"Voltage": 230.0, "Frequency": 50.0, "Phase": 1},
    "Outputs": [{"ID": 2, "Name": "gnodeb", "State": 1, "Load": 161.4,
                 "Current": 701.7, "PowerFactor": 1.0, "Energy": 12.5,
                 "Delay": 0}]
  })";
  const MeterStatus s = parse_meter_status(doc);
  REQUIRE(s.outputs.size() == 1);
  CHECK(s.outputs[0].name == "gnodeb");
  CHECK(s.outputs[0].load_w == 161.4);
}

TEST_CASE("parser rejections carry a named error kind") {
  const auto kind_of = [](const std::string& doc) {
    try {
      parse_meter_status(doc);
    } catch (const ParseError& e) {
      return e.kind();
    }
    FAIL("expected a parse error");
    return ParseErrorKind::kMalformedDocument;
  };

  CHECK(kind_of("{\"Agent\":") == ParseErrorKind::kMalformedDocument);
  CHECK(kind_of("not json at all") == ParseErrorKind::kMalformedDocument);
  CHECK(kind_of("{}") == ParseErrorKind::kSchemaViolation);
  CHECK(kind_of(R"({"Agent":{"DeviceName":"x","Time":1},)"
                R"("GlobalMeasure":{"Voltage":230.0,"Frequency":50.0},)"
                R"("Outputs":[]})") == ParseErrorKind::kSchemaViolation);
  // Negative load.
  CHECK(kind_of(R"({"Agent":{"DeviceName":"x","Time":1},)"
                R"("GlobalMeasure":{"Voltage":230.0,"Frequency":50.0},)"
                R"("Outputs":[{"ID":1,"Name":"e","State":1,"Load":-5.0}]})") ==
        ParseErrorKind::kSchemaViolation);
  // On-state channel without a load reading.
  CHECK(kind_of(R"({"Agent":{"DeviceName":"x","Time":1},)"
                R"("GlobalMeasure":{"Voltage":230.0,"Frequency":50.0},)"
                R"("Outputs":[{"ID":1,"Name":"e","State":1}]})") ==
        ParseErrorKind::kInvariantViolation);
  // Duplicate channel ids.
  CHECK(kind_of(R"({"Agent":{"DeviceName":"x","Time":1},)"
                R"("GlobalMeasure":{"Voltage":230.0,"Frequency":50.0},)"
                R"("Outputs":[{"ID":1,"Name":"a","State":1,"Load":1.0},)"
                R"({"ID":1,"Name":"b","State":1,"Load":2.0}]})") ==
        ParseErrorKind::kSchemaViolation);
}

TEST_CASE("fuzzed documents never crash the parser") {
  const std::string seedDoc = encode_meter_status(canonical_status());
  Rng rng(7);
  int rejected = 0;
  for (int i = 0; i < 3000; ++i) {
    std::string doc = seedDoc;
    switch (rng.next_below(3)) {
      case 0:  // truncation
        doc.resize(rng.next_below(doc.size() + 1));
        break;
      case 1: {  // byte flips
        const int flips = 1 + static_cast<int>(rng.next_below(8));
        for (int f = 0; f < flips && !doc.empty(); ++f) {
          doc[rng.next_below(doc.size())] =
              static_cast<char>(rng.next_below(256));
        }
        break;
      }
      default: {  // structural splice
        const std::size_t at = rng.next_below(doc.size() + 1);
        doc.insert(at, "{\"State\":2,{");
        break;
      }
    }
    try {
      (void)parse_meter_status(doc);
    } catch (const ParseError&) {
      ++rejected;  // every rejection is a typed error
    }
  }
  CHECK(rejected > 0);
}

TEST_CASE("mock meter serves the trace and the poller maps channels") {
  ManualClock clock(kDefaultEpochMs);
  MockMeterConfig cfg;
  cfg.channels = {{1, "edge"}};
  cfg.clock = &clock;
  const auto server = serve_mock_meter(
      cfg, std::make_shared<ConstantTrace>(
               std::map<std::string, double>{{"edge", 133.6}}));
  MeterPoller poller(cfg.host, server->port(), {{1, "edge"}});

  const auto samples = poller.poll();
  REQUIRE(samples.size() == 1);
  CHECK(samples[0].node_id == "edge");
  CHECK(samples[0].power_w == 133.6);
  CHECK(samples[0].timestamp_ms == kDefaultEpochMs);

  clock.advance_ms(1000);
  const auto next = poller.poll();
  REQUIRE(next.size() == 1);
  CHECK(next[0].power_w == 133.6);
  CHECK(next[0].timestamp_ms == kDefaultEpochMs + 1000);
}

TEST_CASE("constant 120 W for one second accrues one thirtieth of a watt hour") {
  ManualClock clock(kDefaultEpochMs);
  MockMeterConfig cfg;
  cfg.channels = {{1, "edge"}};
  cfg.clock = &clock;
  const auto server = serve_mock_meter(
      cfg, std::make_shared<ConstantTrace>(
               std::map<std::string, double>{{"edge", 120.0}}));
  MeterPoller poller(cfg.host, server->port(), {{1, "edge"}});

  const double e0 = poller.poll().at(0).cumulative_energy_wh;
  clock.advance_ms(1000);
  const double e1 = poller.poll().at(0).cumulative_energy_wh;
  CHECK_THAT(e1 - e0, Catch::Matchers::WithinAbs(120.0 / 3600.0, 0.001));
}

TEST_CASE("served energy matches analytic P dt over long windows to 1e-6") {
  ManualClock clock(kDefaultEpochMs);
  MockMeterConfig cfg;
  cfg.channels = {{1, "edge"}};
  cfg.clock = &clock;
  const auto server = serve_mock_meter(
      cfg, std::make_shared<ConstantTrace>(
               std::map<std::string, double>{{"edge", 133.6}}));
  MeterPoller poller(cfg.host, server->port(), {{1, "edge"}});

  const double e0 = poller.poll().at(0).cumulative_energy_wh;
  const double dt_s = 100000.0;
  clock.advance_ms(static_cast<std::int64_t>(dt_s * 1000.0));
  const double e1 = poller.poll().at(0).cumulative_energy_wh;
  const double expected = 133.6 * dt_s / 3600.0;
  CHECK_THAT((e1 - e0) / expected, Catch::Matchers::WithinAbs(1.0, 1e-6));
}

TEST_CASE("energy counters never decrease under irregular clock advances") {
  ManualClock clock(kDefaultEpochMs);
  MockMeterConfig cfg;
  cfg.channels = {{1, "edge"}};
  cfg.clock = &clock;
  const auto server = serve_mock_meter(
      cfg, std::make_shared<ConstantTrace>(
               std::map<std::string, double>{{"edge", 90.0}}));
  MeterPoller poller(cfg.host, server->port(), {{1, "edge"}});

  Rng rng(11);
  double last = -1.0;
  for (int i = 0; i < 60; ++i) {
    for (const auto& s : poller.poll()) {
      REQUIRE(s.cumulative_energy_wh >= last);
      last = s.cumulative_energy_wh;
    }
    // Mix of zero, tiny, and large advances; a stalled clock accrues nothing.
    clock.advance_ms(static_cast<std::int64_t>(rng.next_below(4000)));
  }
  CHECK(last > 0.0);
}

TEST_CASE("an exhausted trace reads as an off channel") {
  ManualClock clock(kDefaultEpochMs);
  auto trace = std::make_shared<StepTrace>();
  trace->add_point("edge", kDefaultEpochMs, 129.6);
  trace->set_end("edge", kDefaultEpochMs + 5000);
  MockMeterConfig cfg;
  cfg.channels = {{1, "edge"}};
  cfg.clock = &clock;
  MockMeterServer server(cfg, trace);  // render directly, no HTTP needed

  const MeterStatus live = parse_meter_status(server.render_status());
  REQUIRE(live.outputs.size() == 1);
  CHECK(live.outputs[0].state == 1);
  CHECK(live.outputs[0].load_w == 129.6);

  clock.set_ms(kDefaultEpochMs + 10000);
  const MeterStatus after = parse_meter_status(server.render_status());
  CHECK(after.outputs[0].state == 0);
  CHECK(after.outputs[0].load_w == 0.0);
  CHECK(after.outputs[0].current_ma == 0.0);
}

TEST_CASE("transport failures carry retry metadata") {
  // Nothing listens on this port (bound-then-closed to find a free one).
  int dead_port = 0;
  {
    httplib::Server probe;
    dead_port = probe.bind_to_any_port("127.0.0.1");
  }
  MeterPoller poller("127.0.0.1", dead_port, {{1, "edge"}}, 0.5);
  CHECK(MeterPoller::kDefaultTimeoutS == 2.0);

  int attempts = 0;
  for (int i = 1; i <= 3; ++i) {
    try {
      poller.poll();
      FAIL("poll against a dead endpoint must throw");
    } catch (const TransportError& e) {
      attempts = e.attempts();
      CHECK(e.endpoint().find(std::to_string(dead_port)) != std::string::npos);
      CHECK(e.attempts() == i);
    }
  }
  CHECK(attempts == 3);
}

TEST_CASE("a hundred concurrent pollers observe consistent monotone counters") {
  MockMeterConfig cfg;
  cfg.channels = {{1, "edge"}};
  cfg.worker_threads = 110;
  const auto server = serve_mock_meter(
      cfg, std::make_shared<ConstantTrace>(
               std::map<std::string, double>{{"edge", 133.6}}));

  constexpr int kPollers = 100;
  constexpr int kPollsEach = 10;
  std::atomic<int> failures{0};
  std::vector<std::thread> threads;
  threads.reserve(kPollers);
  for (int t = 0; t < kPollers; ++t) {
    threads.emplace_back([&] {
      try {
        MeterPoller poller(cfg.host, server->port(), {{1, "edge"}});
        double last_energy = -1.0;
        std::int64_t last_ts = -1;
        for (int i = 0; i < kPollsEach; ++i) {
          for (const auto& s : poller.poll()) {
            if (s.power_w != 133.6 || s.cumulative_energy_wh < last_energy ||
                s.timestamp_ms <= last_ts) {
              ++failures;
            }
            last_energy = s.cumulative_energy_wh;
            last_ts = s.timestamp_ms;
          }
          std::this_thread::sleep_for(std::chrono::milliseconds(3));
        }
      } catch (...) {
        ++failures;
      }
    });
  }
  for (auto& t : threads) {
    t.join();
  }
  CHECK(failures.load() == 0);
}
