#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <set>

#include "xaui/pma.hpp"
#include "xaui/xgxs.hpp"

using namespace xaui;

namespace {

XgmiiWord data_word(std::uint32_t v) { return {v, 0}; }

/// Encodes a word stream and returns each lane's bit stream.
std::array<LaneBits, kLanes> encode_words(const std::vector<XgmiiWord>& words, std::uint16_t seed = 1) {
  IdleState idle = IdleState::seeded(seed);
  TxEncoder enc;
  std::array<LaneBits, kLanes> lanes;
  for (const auto& w : words) {
    const LaneGroups g = enc.encode(tx_convert(w, idle));
    for (std::size_t k = 0; k < kLanes; ++k) {
      for (unsigned i = 0; i < 10; ++i) lanes[k].push_back((g[k].bits >> i) & 1u);
    }
  }
  return lanes;
}

/// Runs lane bit streams through an RxPath ten bits per tick.
std::vector<XgmiiWord> receive(const std::array<LaneBits, kLanes>& lanes, RxPath& rx) {
  std::vector<XgmiiWord> out;
  for (std::size_t p = 0; p + 10 <= lanes[0].size(); p += 10) {
    std::array<std::span<const std::uint8_t>, kLanes> in;
    for (std::size_t k = 0; k < kLanes; ++k) in[k] = std::span<const std::uint8_t>(lanes[k]).subspan(p, 10);
    out.push_back(rx.step(in));
  }
  return out;
}

std::vector<XgmiiWord> idle_then(std::size_t idles, const std::vector<XgmiiWord>& tail) {
  std::vector<XgmiiWord> w(idles, kIdleWord);
  w.insert(w.end(), tail.begin(), tail.end());
  return w;
}

}  // namespace

TEST_CASE("column split and join are inverse") {
  XgmiiColumn c = kIdleColumn;
  c.set(0, kXgmiiStart, true);
  c.set(5, 0xAB, false);
  const auto [lo, hi] = c.split();
  CHECK(lo.octet(0) == kXgmiiStart);
  CHECK(lo.is_control(0));
  CHECK(hi.octet(1) == 0xAB);
  CHECK_FALSE(hi.is_control(1));
  CHECK(XgmiiColumn::join(lo, hi) == c);
}

TEST_CASE("idle LFSR has full period") {
  Lfsr16 l(1);
  const auto start = l.state();
  unsigned period = 0;
  do {
    l.next_bit();
    ++period;
  } while (l.state() != start && period < 70000);
  CHECK(period == 65535);
  CHECK(Lfsr16(0).state() == 0xACE1);
}

TEST_CASE("transmit mapping of XGMII control octets") {
  IdleState idle;
  XgmiiWord w = data_word(0x44332211);
  w.set(0, kXgmiiStart, true);
  auto s = tx_convert(w, idle);
  CHECK(s[0] == control_symbol(kcode::S));
  CHECK(s[1] == data_symbol(0x22));

  w = data_word(0);
  w.set(2, kXgmiiStart, true);
  w.set(1, kXgmiiTerminate, true);
  w.set(3, kXgmiiIdle, true);
  s = tx_convert(w, idle);
  CHECK(s[2] == control_symbol(kcode::E));
  CHECK(s[1] == control_symbol(kcode::T));
  CHECK(s[3] == control_symbol(kcode::K));

  w = data_word(0);
  w.set(0, 0x00, true);
  w.set(1, kcode::Q, true);
  w.set(2, kXgmiiError, true);
  s = tx_convert(w, idle);
  CHECK(s[0] == control_symbol(kcode::E));
  CHECK(s[1] == control_symbol(kcode::Q));
  CHECK(s[2] == control_symbol(kcode::E));
}

TEST_CASE("idle stream: K after a packet, A spacing 16..31, R and K otherwise") {
  IdleState idle = IdleState::seeded(0x1234);
  tx_convert(data_word(0x01020304), idle);
  CHECK(tx_convert(kIdleWord, idle)[0] == control_symbol(kcode::K));

  std::optional<std::size_t> last_a;
  std::set<std::size_t> gaps;
  std::size_t r = 0, k = 0;
  for (std::size_t i = 0; i < 20000; ++i) {
    const auto s = tx_convert(kIdleWord, idle);
    CHECK(s[0] == s[1]);
    CHECK(s[0] == s[3]);
    if (s[0].octet == kcode::A) {
      if (last_a) gaps.insert(i - *last_a);
      last_a = i;
    } else if (s[0].octet == kcode::R) {
      ++r;
    } else {
      ++k;
    }
  }
  REQUIRE_FALSE(gaps.empty());
  CHECK(*gaps.begin() >= IdleState::kMinAGap);
  CHECK(*gaps.rbegin() <= IdleState::kMaxAGap);
  CHECK(r > 8000);
  CHECK(k > 8000);
}

TEST_CASE("aligner locks on commas at any bit phase") {
  for (unsigned shift = 0; shift < 10; ++shift) {
    auto lanes = encode_words(idle_then(40, {data_word(0x03020100)}));
    LaneBits bits(shift, 1);
    bits.insert(bits.end(), lanes[0].begin(), lanes[0].end());

    LaneAligner al;
    std::vector<CodeGroup> groups;
    al.push_bits(bits, groups);
    REQUIRE(al.sync() == SyncState::Synced);
    CHECK(al.good_commas() >= LaneAligner::kLockCommas);
    CHECK(al.bit_offset() == shift);
    // The last group out is lane 0 of the data word.
    REQUIRE_FALSE(groups.empty());
    CHECK(decode_code_group(groups.back(), RunningDisparity::Negative).symbol.octet == 0x00);
  }
}

TEST_CASE("aligner drops sync after four invalid groups in sixteen") {
  auto lanes = encode_words(idle_then(40, {}));
  LaneAligner al;
  std::vector<CodeGroup> groups;
  al.push_bits(lanes[0], groups);
  REQUIRE(al.sync() == SyncState::Synced);

  LaneBits bad;
  for (int g = 0; g < 3; ++g) {
    for (unsigned i = 0; i < 10; ++i) bad.push_back(0);  // all-zero group is not in the codebook
  }
  al.push_bits(bad, groups);
  CHECK(al.sync() == SyncState::Synced);
  CHECK(al.bad_groups() == 3);
  al.push_bits(LaneBits(10, 0), groups);
  CHECK(al.sync() == SyncState::Hunting);
  CHECK(al.sync_losses() == 1);
}

TEST_CASE("deskew absorbs lane skew up to the guaranteed depth") {
  DeskewFifo fifo;
  const LaneSymbol a{CodeGroup{}, control_symbol(kcode::A), DecodeStatus::ok};
  const auto d = [](std::uint8_t v) { return LaneSymbol{CodeGroup{}, data_symbol(v), DecodeStatus::ok}; };
  // Lane k sees k junk groups before its /A/.
  std::array<std::vector<LaneSymbol>, kLanes> streams;
  for (std::size_t k = 0; k < kLanes; ++k) {
    for (std::size_t j = 0; j < k; ++j) streams[k].push_back(d(0xEE));
    streams[k].push_back(a);
    for (std::uint8_t v = 1; v <= 8; ++v) streams[k].push_back(d(v));
  }
  std::vector<RxColumn> cols;
  for (std::size_t t = 0; t < 12; ++t) {
    for (std::size_t k = 0; k < kLanes; ++k) {
      if (t < streams[k].size()) fifo.push(k, streams[k][t]);
    }
    while (auto c = fifo.pop()) cols.push_back(*c);
  }
  CHECK(fifo.aligned());
  REQUIRE(cols.size() == 9);
  for (std::size_t i = 0; i < cols.size(); ++i) {
    for (std::size_t k = 1; k < kLanes; ++k) CHECK(cols[i][k].symbol == cols[i][0].symbol);
  }
}

TEST_CASE("deskew fails when one lane lags by more than the queue depth") {
  DeskewFifo fifo;
  const LaneSymbol a{CodeGroup{}, control_symbol(kcode::A), DecodeStatus::ok};
  const LaneSymbol k{CodeGroup{}, control_symbol(kcode::K), DecodeStatus::ok};
  for (std::size_t k_lane = 1; k_lane < kLanes; ++k_lane) fifo.push(k_lane, a);
  for (int i = 0; i < 16; ++i) {
    for (std::size_t l = 1; l < kLanes; ++l) fifo.push(l, k);
    fifo.push(0, k);
  }
  CHECK(fifo.status() == DeskewStatus::alignment_failed);
  CHECK(fifo.alignment_failures() == 1);
}

TEST_CASE("deskew resets on /A/ in some lanes only") {
  DeskewFifo fifo;
  const LaneSymbol a{CodeGroup{}, control_symbol(kcode::A), DecodeStatus::ok};
  const LaneSymbol k{CodeGroup{}, control_symbol(kcode::K), DecodeStatus::ok};
  for (std::size_t l = 0; l < kLanes; ++l) fifo.push(l, a);
  REQUIRE(fifo.pop());
  for (std::size_t l = 0; l < kLanes; ++l) fifo.push(l, l == 2 ? a : k);
  CHECK_FALSE(fifo.pop());
  CHECK(fifo.misalignments() == 1);
  CHECK_FALSE(fifo.aligned());
}

TEST_CASE("rate match FIFO") {
  const auto col = [](std::uint8_t k) {
    RxColumn c;
    for (auto& s : c) s = {CodeGroup{}, control_symbol(k), DecodeStatus::ok};
    return c;
  };
  const auto data = [] {
    RxColumn c;
    for (auto& s : c) s = {CodeGroup{}, data_symbol(0x55), DecodeStatus::ok};
    return c;
  };

  SUBCASE("reads errors until primed") {
    RateMatchFifo f;
    for (int i = 0; i < 7; ++i) f.write(data());
    CHECK(rx_convert(f.read()) == kErrorWord);
    f.write(data());
    CHECK(rx_convert(f.read()).data == 0x55555555u);
    CHECK(f.primed());
  }
  SUBCASE("deletes /R/ only at or above the high mark") {
    RateMatchFifo f;
    for (int i = 0; i < 12; ++i) f.write(data());
    f.write(col(kcode::K));
    CHECK(f.deletions() == 0);
    f.write(col(kcode::R));
    CHECK(f.deletions() == 1);
    CHECK(f.occupancy() == 13);
  }
  SUBCASE("repeats /R/ below the low mark") {
    RateMatchFifo f;
    for (int i = 0; i < 7; ++i) f.write(data());
    f.write(col(kcode::R));
    for (int i = 0; i < 7; ++i) f.read();
    CHECK(f.occupancy() == 1);
    CHECK(rx_convert(f.read()) == kIdleWord);
    CHECK(f.insertions() == 1);
    CHECK(f.occupancy() == 1);
  }
  SUBCASE("underflow after data is a fault") {
    RateMatchFifo f;
    for (int i = 0; i < 8; ++i) f.write(data());
    for (int i = 0; i < 8; ++i) f.read();
    CHECK(rx_convert(f.read()) == kErrorWord);
    CHECK(f.underflows() == 1);
    CHECK(f.fifo_faults() == 1);
  }
  SUBCASE("overflow of data is a fault") {
    RateMatchFifo f;
    for (int i = 0; i < 17; ++i) f.write(data());
    CHECK(f.overflows() == 1);
    CHECK(f.fifo_faults() == 1);
  }
}

TEST_CASE("receive conversion") {
  RxColumn c;
  c[0] = {CodeGroup{}, control_symbol(kcode::A), DecodeStatus::ok};
  c[1] = {CodeGroup{}, control_symbol(kcode::R), DecodeStatus::ok};
  c[2] = {CodeGroup{}, data_symbol(0x12), DecodeStatus::ok};
  c[3] = {CodeGroup{}, data_symbol(0x34), DecodeStatus::disparity_error};
  const XgmiiWord w = rx_convert(c);
  CHECK(w.octet(0) == kXgmiiIdle);
  CHECK(w.octet(1) == kXgmiiIdle);
  CHECK(w.octet(2) == 0x12);
  CHECK_FALSE(w.is_control(2));
  CHECK(w.octet(3) == kXgmiiError);
  CHECK(w.is_control(3));
}

TEST_CASE("TX to RX round trip recovers the transfer stream") {
  std::vector<XgmiiWord> payload;
  XgmiiWord s = data_word(0x03020100);
  s.set(0, kXgmiiStart, true);
  payload.push_back(s);
  for (std::uint32_t i = 1; i < 20; ++i) payload.push_back(data_word(i * 0x01010101u));
  XgmiiWord t = kIdleWord;
  t.set(0, 0x99, false);
  t.set(1, kXgmiiTerminate, true);
  payload.push_back(t);
  const auto words = idle_then(200, payload);
  const auto tail = std::vector<XgmiiWord>(40, kIdleWord);
  auto all = words;
  all.insert(all.end(), tail.begin(), tail.end());

  RxPath rx;
  const auto out = receive(encode_words(all), rx);
  CHECK(rx.all_lanes_synced());
  CHECK(rx.deskew_aligned());

  const auto first = std::find(out.begin(), out.end(), s);
  REQUIRE(first != out.end());
  REQUIRE(out.end() - first >= static_cast<std::ptrdiff_t>(payload.size()));
  for (std::size_t i = 0; i < payload.size(); ++i) CHECK(first[static_cast<std::ptrdiff_t>(i)] == payload[i]);
}
