#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "support.hpp"
#include "xaui/harness.hpp"

using namespace xaui;

namespace {

const std::vector<std::uint32_t> kReferenceLengths = {0x588, 0x577, 0x5a,  0x151, 0x12f, 0x230, 0x440,
                                                  0xa5,  0x72,  0x2c1, 0xfb,  0x511, 0x582, 0xd2};

/// Flattens a plan into the transfer stream a perfect link would deliver.
std::vector<XgmiiWord> words_of(const TrafficPlan& plan) {
  std::vector<XgmiiWord> out;
  for (const auto& c : plan.columns) {
    const auto [lo, hi] = c.split();
    out.push_back(lo);
    out.push_back(hi);
  }
  return out;
}

std::string read_file(const std::filesystem::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("generate_packets") {
  SUBCASE("zero packets") {
    TrafficConfig tc;
    const auto plan = generate_packets(tc);
    CHECK(plan.columns.empty());
    CHECK(plan.records.empty());
  }
  SUBCASE("same seed, same stream") {
    TrafficConfig tc;
    tc.pkt_num = 30;
    tc.seed = 99;
    const auto a = generate_packets(tc);
    const auto b = generate_packets(tc);
    CHECK(a.columns == b.columns);
    tc.seed = 100;
    CHECK(generate_packets(tc).columns != a.columns);
  }
  SUBCASE("explicit lengths are kept in order") {
    TrafficConfig tc;
    tc.lengths = kReferenceLengths;
    tc.first_seq = 0x86;
    const auto plan = generate_packets(tc);
    REQUIRE(plan.records.size() == kReferenceLengths.size());
    for (std::size_t i = 0; i < kReferenceLengths.size(); ++i) {
      CHECK(plan.records[i].length == kReferenceLengths[i]);
      CHECK(plan.records[i].seq == 0x86 + i);
    }
  }
  SUBCASE("random lengths stay in range") {
    TrafficConfig tc;
    tc.pkt_num = 500;
    tc.len_min = 100;
    tc.len_max = 140;
    for (const auto& r : generate_packets(tc).records) {
      CHECK(r.length >= 100);
      CHECK(r.length <= 140);
    }
  }
  SUBCASE("framing") {
    TrafficConfig tc;
    tc.lengths = {70};
    tc.ifg = 3;
    const auto plan = generate_packets(tc);
    // 72 octets fill nine columns exactly, then three idle columns.
    REQUIRE(plan.columns.size() == 12);
    CHECK(plan.columns[0].is_control(0));
    CHECK(plan.columns[0].octet(0) == kXgmiiStart);
    CHECK(plan.columns[0].octet(1) == plan.packets[0].payload[0]);
    CHECK(plan.columns[8].octet(7) == kXgmiiTerminate);
    CHECK(plan.columns[8].is_control(7));
    CHECK(plan.columns[9] == kIdleColumn);
  }
  SUBCASE("bandwidth sets the idle share") {
    TrafficConfig tc;
    tc.lengths = {126};  // 128 octets, 16 columns
    tc.bandwidth = 50;
    CHECK(generate_packets(tc).columns.size() == 32);
    tc.bandwidth = 80;
    CHECK(generate_packets(tc).columns.size() == 20);
  }
  SUBCASE("invalid configs are rejected") {
    TrafficConfig tc;
    tc.ifg = 0;
    CHECK_THROWS_AS(generate_packets(tc), std::invalid_argument);
    tc = TrafficConfig{};
    tc.len_min = 10;
    CHECK_THROWS_AS(generate_packets(tc), std::invalid_argument);
    tc = TrafficConfig{};
    tc.bandwidth = 0;
    CHECK_THROWS_AS(generate_packets(tc), std::invalid_argument);
  }
}

TEST_CASE("checker on a perfect stream") {
  TrafficConfig tc;
  tc.lengths = kReferenceLengths;
  const auto plan = generate_packets(tc);
  std::vector<PacketRecord> chk;
  const auto r = check_packets(plan, words_of(plan), &chk);
  CHECK(r.sent == 14);
  CHECK(r.received == 14);
  CHECK(r.lost == 0);
  CHECK(r.clean());
  REQUIRE(chk.size() == 14);
  for (std::size_t i = 0; i < chk.size(); ++i) CHECK(chk[i].length == kReferenceLengths[i]);
}

TEST_CASE("checker: dropped, corrupted and truncated frames") {
  TrafficConfig tc;
  tc.pkt_num = 10;
  tc.len_min = tc.len_max = 64;
  const auto plan = generate_packets(tc);
  auto words = words_of(plan);

  SUBCASE("one packet dropped") {
    const std::size_t first = plan.packets[3].first_column * 2;
    const std::size_t last = plan.packets[4].first_column * 2;
    for (std::size_t i = first; i < last; ++i) words[i] = kIdleWord;
    std::vector<PacketRecord> chk;
    const auto r = check_packets(plan, words, &chk);
    CHECK(r.lost == 1);
    CHECK(r.received == 9);
    CHECK(r.out_of_order == 0);
    CHECK(chk[3].seq == 4);
  }
  SUBCASE("/E/ inside a frame") {
    words[plan.packets[2].first_column * 2 + 3].set(1, kXgmiiError, true);
    const auto r = check_packets(plan, words);
    CHECK(r.corrupted == 1);
    CHECK(r.lost == 1);
  }
  SUBCASE("payload changed in flight") {
    words[plan.packets[5].first_column * 2 + 2].set(2, 0x00, false);
    words[plan.packets[5].first_column * 2 + 2].set(3, 0x01, false);
    const auto r = check_packets(plan, words);
    CHECK(r.payload_mismatches == 1);
    CHECK(r.lost == 1);
    CHECK_FALSE(r.clean());
  }
  SUBCASE("final frame cut off") {
    words.resize(plan.packets[9].first_column * 2 + 4);
    const auto r = check_packets(plan, words);
    CHECK(r.truncated == 1);
    CHECK(r.lost == 1);
  }
}

TEST_CASE("trace format") {
  const PacketRecord r{0x14c76, 0x86, 0x588};
  CHECK(format_record(r) == "14c76\t86\t588");

  std::ostringstream os;
  write_trace(os, TraceKind::gen, {});
  CHECK(os.str() == "TimeL\tethFCnt\tlength\n");

  const std::vector<PacketRecord> recs = {r, {0x1666a, 0x87, 0x577}, {0, 0, 0}};
  std::ostringstream os2;
  write_trace(os2, TraceKind::chk, recs);
  std::istringstream is(os2.str());
  TraceKind kind = TraceKind::gen;
  CHECK(parse_trace(is, &kind) == recs);
  CHECK(kind == TraceKind::chk);

  std::istringstream bad("TimeL\tethFCnt\tlength\n1\t2\t3\n1\tZZ\t3\n");
  try {
    parse_trace(bad);
    FAIL("expected a parse error");
  } catch (const TraceParseError& e) {
    CHECK(e.line == 3);
  }
  std::istringstream bad_header("time seq len\n");
  CHECK_THROWS_AS(parse_trace(bad_header), TraceParseError);
  std::istringstream two_fields("TimeL\tethFCnt\tlength\n1\t2\n");
  CHECK_THROWS_AS(parse_trace(two_fields), TraceParseError);
}

TEST_CASE("trace_diff reports latency and disagreements") {
  const std::vector<PacketRecord> gen = {{0x14c76, 0x86, 0x588}, {0x15000, 0x87, 0x577}};
  std::vector<PacketRecord> chk = {{0x1666a, 0x86, 0x588}, {0x16a00, 0x87, 0x577}};
  auto d = trace_diff(gen, chk);
  CHECK(d.same());
  REQUIRE(d.time_delta_ns.size() == 2);
  CHECK(d.time_delta_ns[0] == 0x19f4);

  chk[1].length = 0x576;
  CHECK_FALSE(trace_diff(gen, chk).same());
  chk.pop_back();
  d = trace_diff(gen, chk);
  CHECK(d.differences.size() == 2);
}

TEST_CASE("scenario parsing") {
  const auto sc = parse_scenario(R"({
    "seed": 3, "holdoff_ticks": 150, "protection": false,
    "traffic": {"lengths": ["0x588", 100], "bandwidth": 40, "start_tick": 5000},
    "instances": [{"skew_ui": [0, 10, 20, 30], "ppm": -50, "loss_db": 1.5}],
    "faults": [{"target": 1, "kind": "lane_cut", "lane": 2, "after_traffic_start": 10, "duration": 20}],
    "lmpi": [{"tick": 3000, "op": "read", "addr": "0x10"}]
  })");
  CHECK(sc.seed == 3);
  CHECK(sc.holdoff_ticks == 150);
  CHECK_FALSE(sc.protection);
  CHECK(sc.traffic.lengths == std::vector<std::uint32_t>{0x588, 100});
  CHECK(sc.start_tick == 5000u);
  CHECK(sc.instances[0].skew_ui[3] == 30);
  CHECK(sc.instances[0].ppm_offset == -50);
  REQUIRE(sc.faults.size() == 1);
  CHECK(sc.faults[0].relative_to_traffic);
  CHECK(sc.faults[0].spec.lane == 2);
  REQUIRE(sc.lmpi.size() == 1);
  CHECK_FALSE(sc.lmpi[0].write);
  CHECK(sc.lmpi[0].addr == 0x10);

  CHECK_THROWS_AS(parse_scenario("{\"sed\": 1}"), ScenarioError);
  CHECK_THROWS_AS(parse_scenario("{"), ScenarioError);
  CHECK_THROWS_AS(parse_scenario(R"({"instances": [{"ppm": 400}]})"), ScenarioError);
  CHECK_THROWS_AS(parse_scenario(R"({"faults": [{"kind": "lane_cut", "duration": 5}]})"), ScenarioError);
  CHECK_THROWS_AS(parse_scenario(R"({"traffic": {"ifg": 0}})"), ScenarioError);
  CHECK_THROWS_AS(parse_scenario(R"({"lmpi": [{"tick": 1, "op": "poke", "addr": 0}]})"), ScenarioError);
}

TEST_CASE("scenario runs write reproducible artifacts") {
  const auto sc = load_scenario(test::data_path("scenarios/loopback_reference.json"));
  const auto dir = std::filesystem::temp_directory_path() / "xaui_harness_test";
  std::filesystem::remove_all(dir);
  RunOptions opt;
  opt.out_dir = dir / "a";
  const auto a = run_scenario(sc, opt);
  opt.out_dir = dir / "b";
  const auto b = run_scenario(sc, opt);
  CHECK(a.exit_code == 0);
  CHECK(a.report.received == 14);
  for (const char* f : {"eth_gen0.dat", "eth_chk0.dat", "events.log", "summary.txt"}) {
    CHECK(read_file(dir / "a" / f) == read_file(dir / "b" / f));
  }
  const auto gen = parse_trace(dir / "a" / "eth_gen0.dat");
  const auto chk = parse_trace(dir / "a" / "eth_chk0.dat");
  CHECK(trace_diff(gen, chk).same());
  std::filesystem::remove_all(dir);
}

TEST_CASE("latency is stable over an ideal channel") {
  Scenario sc;
  sc.traffic.pkt_num = 300;
  sc.traffic.bandwidth = 70;
  sc.xgmii_loop = true;
  const auto r = run_scenario(sc);
  REQUIRE(r.exit_code == 0);
  const auto [lo, hi] = std::minmax_element(r.report.latency_ns.begin(), r.report.latency_ns.end());
  CHECK(*hi - *lo <= static_cast<std::int64_t>(ticks_to_ns(4)));
}

TEST_CASE("settings sweep") {
  SweepGrid grid = parse_sweep_grid(R"({"vod": [3, 4], "loss_db": [0], "packets": 50, "length": 128, "seed": 2})");
  REQUIRE(grid.settings.size() == 2);
  const auto rows = ber_sweep(grid);
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].illegal);
  CHECK_FALSE(rows[1].illegal);
  CHECK(rows[1].model_ber == doctest::Approx(1e-7));
  CHECK(rows[1].frames == 50);
  CHECK(rows[1].frame_errors == 0);
  std::ostringstream os;
  write_sweep(os, rows);
  CHECK(os.str().find("illegal") != std::string::npos);

  CHECK_THROWS_AS(parse_sweep_grid(R"({"vod": [8]})"), ScenarioError);
  CHECK(parse_sweep_grid(R"({"points": [[4, 0, 0, 0], [7, 21, 3, 2]]})").settings.size() == 2);
}
