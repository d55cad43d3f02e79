#include <algorithm>

#include "xaui/xgxs.hpp"

namespace xaui {

void XgmiiWord::set(std::size_t lane, std::uint8_t octet, bool control) {
  const unsigned shift = static_cast<unsigned>(8 * lane);
  data = (data & ~(0xFFu << shift)) | (static_cast<std::uint32_t>(octet) << shift);
  ctrl = static_cast<std::uint8_t>((ctrl & ~(1u << lane)) | (control ? (1u << lane) : 0u));
}

bool XgmiiWord::all_idle() const { return *this == kIdleWord; }

void XgmiiColumn::set(std::size_t i, std::uint8_t octet, bool control) {
  const unsigned shift = static_cast<unsigned>(8 * i);
  data = (data & ~(0xFFull << shift)) | (static_cast<std::uint64_t>(octet) << shift);
  ctrl = static_cast<std::uint8_t>((ctrl & ~(1u << i)) | (control ? (1u << i) : 0u));
}

std::pair<XgmiiWord, XgmiiWord> XgmiiColumn::split() const {
  return {XgmiiWord{static_cast<std::uint32_t>(data), static_cast<std::uint8_t>(ctrl & 0xF)},
          XgmiiWord{static_cast<std::uint32_t>(data >> 32), static_cast<std::uint8_t>(ctrl >> 4)}};
}

XgmiiColumn XgmiiColumn::join(XgmiiWord low, XgmiiWord high) {
  return {static_cast<std::uint64_t>(low.data) | (static_cast<std::uint64_t>(high.data) << 32),
          static_cast<std::uint8_t>((low.ctrl & 0xF) | ((high.ctrl & 0xF) << 4))};
}

unsigned Lfsr16::next_bit() {
  const unsigned bit = (state_ ^ (state_ >> 2) ^ (state_ >> 3) ^ (state_ >> 5)) & 1u;
  state_ = static_cast<std::uint16_t>((state_ >> 1) | (bit << 15));
  return bit;
}

unsigned Lfsr16::next_bits(unsigned n) {
  unsigned v = 0;
  for (unsigned i = 0; i < n; ++i) v = (v << 1) | next_bit();
  return v;
}

IdleState IdleState::seeded(std::uint16_t seed) {
  IdleState s;
  s.prng = Lfsr16(seed);
  s.next_a_gap = s.draw_gap();
  return s;
}

unsigned IdleState::draw_gap() { return kMinAGap + prng.next_bits(4); }

namespace {

Symbol map_control(std::uint8_t octet, std::size_t lane) {
  switch (octet) {
    case kXgmiiStart:
      return control_symbol(lane == 0 ? kcode::S : kcode::E);
    case kXgmiiTerminate:
      return control_symbol(kcode::T);
    case kXgmiiIdle:
      return control_symbol(kcode::K);
    case kcode::Q:
    case 0x5C:
      return control_symbol(octet);
    default:
      return control_symbol(kcode::E);
  }
}

constexpr unsigned kSinceACap = 1u << 20;

}  // namespace

LaneSymbols tx_convert(XgmiiWord word, IdleState& idle) {
  LaneSymbols out{};
  idle.columns_since_a = std::min(idle.columns_since_a + 1, kSinceACap);

  if (!word.all_idle()) {
    for (std::size_t lane = 0; lane < kLanes; ++lane) {
      out[lane] = word.is_control(lane) ? map_control(word.octet(lane), lane)
                                        : data_symbol(word.octet(lane));
    }
    idle.after_packet = true;
    return out;
  }

  std::uint8_t k = kcode::K;
  if (idle.after_packet) {
    k = kcode::K;
  } else if (idle.columns_since_a >= idle.next_a_gap) {
    k = kcode::A;
    idle.columns_since_a = 0;
    idle.next_a_gap = idle.draw_gap();
  } else {
    k = idle.prng.next_bit() ? kcode::R : kcode::K;
  }
  idle.after_packet = false;
  out.fill(control_symbol(k));
  return out;
}

std::array<LaneSymbols, 2> tx_convert(const XgmiiColumn& col, IdleState& idle) {
  const auto [low, high] = col.split();
  std::array<LaneSymbols, 2> out{};
  out[0] = tx_convert(low, idle);
  out[1] = tx_convert(high, idle);
  return out;
}

LaneGroups TxEncoder::encode(const LaneSymbols& symbols) {
  LaneGroups out{};
  for (std::size_t lane = 0; lane < kLanes; ++lane) {
    const auto r = encode_code_group(symbols[lane], rd_[lane]);
    out[lane] = r.group;
    rd_[lane] = r.rd;
  }
  return out;
}

}  // namespace xaui
