#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "xaui/harness.hpp"
#include "xaui/link.hpp"

using namespace xaui;

namespace {

/// Settings with enough margin that no bit errors occur in test-length runs.
constexpr AnalogSettings kClean{7, 6, 3, 2};

/// Waits out offset cancellation and programs every channel through LMPI.
void program_all(System& sys, AnalogSettings s) {
  while (!sys.ready()) sys.step(1);
  sys.lmpi_access(LmpiPort::write(lmpi::TX_VODCTRL, encode_setting(ReconfigField::tx_vodctrl, s.vod)));
  sys.lmpi_access(LmpiPort::write(lmpi::TX_PREEMP, encode_setting(ReconfigField::tx_preemp, s.preemp)));
  sys.lmpi_access(LmpiPort::write(lmpi::RX_EQCTRL, s.eqctrl));
  sys.lmpi_access(LmpiPort::write(lmpi::RX_EQDCGAIN, s.eqdcgain));
  for (unsigned c = 0; c < kInstances * kLanes; ++c) {
    sys.lmpi_access(LmpiPort::write(lmpi::RECONFIG_CMD, static_cast<std::uint16_t>((c << 4) | lmpi::cmd::write_all)));
    while (sys.controller().status().reconfig_busy) sys.step(1);
  }
}

void wait_link(System& sys, std::uint64_t limit = 5000) {
  const auto end = sys.now() + limit;
  while (!(sys.status(0).healthy() && sys.status(1).healthy()) && sys.now() < end) sys.step(1);
  REQUIRE(sys.status(0).healthy());
  REQUIRE(sys.status(1).healthy());
}

std::size_t count_events(const System& sys, EventKind k) {
  return static_cast<std::size_t>(
      std::count_if(sys.events().begin(), sys.events().end(), [k](const Event& e) { return e.kind == k; }));
}

}  // namespace

TEST_CASE("output is /E/ until offset cancellation completes, then the link comes up") {
  System sys(SystemConfig{});
  std::uint64_t error_ticks = 0;
  sys.set_sink([&](std::uint64_t, const TickOutput& o) {
    if (!sys.ready()) {
      CHECK(o.selected == kErrorWord);
      ++error_ticks;
    }
  });
  sys.step(100);
  CHECK_FALSE(sys.link_up());
  CHECK_FALSE(sys.status(0).healthy());
  program_all(sys, kClean);
  wait_link(sys);
  CHECK(sys.link_up());
  CHECK(error_ticks == 2047);
  const auto st = *sys.lmpi_access(LmpiPort::read(lmpi::STATUS));
  CHECK((st & lmpi::status::xaui0_synced));
  CHECK((st & lmpi::status::xaui1_synced));
  CHECK((st & lmpi::status::offset_cancel_done));
}

TEST_CASE("hot standby: both instances deliver identical transfers") {
  TrafficConfig tc;
  tc.pkt_num = 40;
  tc.bandwidth = 60;
  const TrafficPlan plan = generate_packets(tc);
  TrafficSource src(plan);
  System sys(SystemConfig{}, &src);
  program_all(sys, kClean);
  wait_link(sys);
  src.set_start(sys.now() + 10);
  std::uint64_t compared = 0;
  sys.set_sink([&](std::uint64_t, const TickOutput& o) {
    CHECK(o.instance[0] == o.instance[1]);
    ++compared;
  });
  sys.step(plan.columns.size() * 2 + 200);
  CHECK(compared > 1000);
  CHECK(src.done(0));
  CHECK(src.done(1));
}

TEST_CASE("lane cut on the active instance switches once and does not revert") {
  SystemConfig cfg;
  cfg.holdoff_ticks = 100;
  System sys(cfg);
  program_all(sys, kClean);
  wait_link(sys);
  sys.step(500);
  const std::uint64_t t = sys.now() + 10;
  sys.inject_fault({0, FaultKind::lane_cut, 2, 0.0, 0, t, 1000});
  sys.step(3000);

  REQUIRE(count_events(sys, EventKind::switch_over) == 1);
  const auto sw = *std::find_if(sys.events().begin(), sys.events().end(),
                                [](const Event& e) { return e.kind == EventKind::switch_over; });
  CHECK(sw.from == 0);
  CHECK(sw.to == 1);
  CHECK(sw.cause == "sync_lost");
  CHECK(sw.tick >= t + cfg.holdoff_ticks - 64);
  CHECK(sw.tick <= t + cfg.holdoff_ticks + 64);
  CHECK(count_events(sys, EventKind::fault_start) == 1);
  CHECK(count_events(sys, EventKind::fault_end) == 1);
  // XAUI0 recovered long ago; the selector stays on XAUI1.
  CHECK(sys.status(0).healthy());
  CHECK(sys.active() == 1);
  CHECK(sys.registers().xaui_sel() == 1);
}

TEST_CASE("a fault shorter than the holdoff is suppressed") {
  System sys(SystemConfig{});
  program_all(sys, kClean);
  wait_link(sys);
  sys.inject_fault({0, FaultKind::lane_cut, 0, 0.0, 0, sys.now() + 5, 40});
  sys.step(400);
  CHECK(count_events(sys, EventKind::switch_over) == 0);
  CHECK(count_events(sys, EventKind::suppressed_fault) == 1);
  CHECK(sys.active() == 0);
}

TEST_CASE("both instances down is reported once as degraded") {
  System sys(SystemConfig{});
  program_all(sys, kClean);
  wait_link(sys);
  const auto t = sys.now() + 5;
  sys.inject_fault({0, FaultKind::lane_cut, 1, 0.0, 0, t, 600});
  sys.inject_fault({1, FaultKind::lane_cut, 3, 0.0, 0, t, 600});
  sys.step(500);
  CHECK(count_events(sys, EventKind::switch_over) == 0);
  CHECK(count_events(sys, EventKind::degraded) == 1);
}

TEST_CASE("protection disabled never switches") {
  SystemConfig cfg;
  cfg.protection = false;
  System sys(cfg);
  program_all(sys, kClean);
  wait_link(sys);
  sys.inject_fault({0, FaultKind::lane_cut, 1, 0.0, 0, sys.now() + 5, 1000});
  sys.step(800);
  CHECK(sys.events().size() == 1);
  CHECK(sys.active() == 0);
  CHECK(sys.last_output().selected == kErrorWord);
}

TEST_CASE("fault scheduling rules") {
  System sys(SystemConfig{});
  sys.inject_fault({0, FaultKind::lane_cut, 0, 0.0, 0, 100, 50});
  CHECK_THROWS_AS(sys.inject_fault({0, FaultKind::high_ber, 0, 0.1, 0, 120, 50}), std::invalid_argument);
  CHECK_NOTHROW(sys.inject_fault({0, FaultKind::high_ber, 0, 0.1, 0, 150, 50}));
  CHECK_NOTHROW(sys.inject_fault({1, FaultKind::high_ber, 0, 0.1, 0, 120, 50}));
  CHECK_THROWS_AS(sys.inject_fault({2, FaultKind::lane_cut, 0, 0.0, 0, 0, 1}), std::invalid_argument);
  CHECK_THROWS_AS(sys.inject_fault({0, FaultKind::lane_cut, 4, 0.0, 0, 500, 1}), std::invalid_argument);
  CHECK(fault_kind_from_string("skew_burst") == FaultKind::skew_burst);
  CHECK_THROWS_AS(fault_kind_from_string("meteor"), std::invalid_argument);
}

TEST_CASE("high BER fault knocks the instance out while it lasts") {
  SystemConfig cfg;
  cfg.protection = false;
  System sys(cfg);
  program_all(sys, kClean);
  wait_link(sys);
  sys.inject_fault({1, FaultKind::high_ber, 0, 0.05, 0, sys.now() + 1, 300});
  sys.step(200);
  CHECK_FALSE(sys.status(1).healthy());
  CHECK(sys.instance(1).lane(0).ber() == doctest::Approx(0.05));
  sys.step(800);
  CHECK(sys.instance(1).lane(0).ber() < 1e-9);
  CHECK(sys.status(1).healthy());
}

TEST_CASE("skew burst beyond the deskew depth drops alignment") {
  SystemConfig cfg;
  cfg.protection = false;
  System sys(cfg);
  program_all(sys, kClean);
  wait_link(sys);
  sys.inject_fault({0, FaultKind::skew_burst, 2, 0.0, 200, sys.now() + 1, 2000});
  bool lost = false;
  for (int i = 0; i < 400 && !lost; ++i) {
    sys.step(1);
    lost = !sys.status(0).healthy();
  }
  CHECK(lost);
  CHECK(sys.instance(0).lane(2).delay() == 200);
  sys.step(3000);
  CHECK(sys.instance(0).lane(2).delay() == 0);
  CHECK(sys.status(0).healthy());
}

TEST_CASE("host select moves the output and the selector keeps monitoring") {
  System sys(SystemConfig{});
  program_all(sys, kClean);
  wait_link(sys);
  sys.select_active(1);
  sys.step(1);
  CHECK(sys.active() == 1);
  CHECK(sys.last_output().active == 1);
  sys.inject_fault({1, FaultKind::lane_cut, 0, 0.0, 0, sys.now() + 1, 500});
  sys.step(400);
  CHECK(sys.active() == 0);
}

TEST_CASE("xgmii_loop bypasses channel impairments") {
  SystemConfig cfg;
  cfg.xgmii_loop = true;
  cfg.channels[0].loss_db = 20.0;
  cfg.channels[0].skew_ui = {0, 30, 0, 0};
  System sys(cfg);
  while (!sys.ready()) sys.step(1);
  wait_link(sys);
  CHECK(sys.instance(0).lane(0).ber() == doctest::Approx(1e-3));
  sys.step(2000);
  CHECK(sys.status(0).healthy());
  CHECK(sys.instance(0).rx().aligner(0).sync_losses() == 0);
}

TEST_CASE("frames damaged on the selected output count as lost") {
  TrafficConfig tc;
  tc.pkt_num = 200;
  tc.len_min = tc.len_max = 256;
  tc.bandwidth = 90;
  const TrafficPlan plan = generate_packets(tc);
  TrafficSource src(plan);
  SystemConfig cfg;
  cfg.protection = false;
  System sys(cfg, &src);
  program_all(sys, kClean);
  wait_link(sys);
  src.set_start(sys.now() + 10);
  sys.inject_fault({0, FaultKind::lane_cut, 1, 0.0, 0, sys.now() + 500, 200});
  sys.step(plan.columns.size() * 2 + 500);
  CHECK(sys.frame_monitor().bad_frames() > 0);
  const auto lost = *sys.lmpi_access(LmpiPort::read(lmpi::LOST_PKT_CNT));
  CHECK(lost == sys.frame_monitor().bad_frames());
  CHECK(*sys.lmpi_access(LmpiPort::read(lmpi::LOST_PKT_CNT)) == 0);
}

TEST_CASE("soft reset reruns calibration") {
  System sys(SystemConfig{});
  program_all(sys, kClean);
  wait_link(sys);
  sys.lmpi_access(LmpiPort::write(lmpi::CTRL, lmpi::ctrl::soft_reset));
  sys.step(1);
  CHECK_FALSE(sys.ready());
  CHECK(sys.controller().active(0) == AnalogSettings::defaults());
  CHECK(sys.last_output().selected == kErrorWord);
  sys.step(2100);
  CHECK(sys.ready());
}

TEST_CASE("event formatting") {
  CHECK(format_event({120, EventKind::switch_over, 0, 1, "sync_lost"}) == "120\tswitch\tXAUI0\tXAUI1\tsync_lost");
  CHECK(format_event({7, EventKind::degraded, 1, -1, ""}) == "7\tdegraded\tXAUI1\t-\t-");
}
