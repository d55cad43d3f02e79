// XGMII extender sublayer.
//
// The datapath advances one 32-bit XGMII transfer per tick: four octets, one
// per XAUI lane. The 64-bit internal XGMII column (rxd[63:0]/rxc[7:0]) is two
// such transfers, octets 0..3 first.

#ifndef XAUI_XGXS_HPP
#define XAUI_XGXS_HPP

#include <array>
#include <cstdint>
#include <deque>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "xaui/codec.hpp"

namespace xaui {

inline constexpr std::size_t kLanes = 4;
inline constexpr std::uint8_t kXgmiiIdle = 0x07;
inline constexpr std::uint8_t kXgmiiStart = 0xFB;
inline constexpr std::uint8_t kXgmiiTerminate = 0xFD;
inline constexpr std::uint8_t kXgmiiError = 0xFE;

/// One 32-bit XGMII transfer. Octet i is data bits [8i+7:8i], ctrl bit i.
struct XgmiiWord {
  std::uint32_t data = 0;
  std::uint8_t ctrl = 0;  // low 4 bits used

  std::uint8_t octet(std::size_t lane) const {
    return static_cast<std::uint8_t>(data >> (8 * lane));
  }
  bool is_control(std::size_t lane) const { return (ctrl >> lane) & 1u; }
  void set(std::size_t lane, std::uint8_t octet, bool control);
  bool all_idle() const;

  friend bool operator==(const XgmiiWord&, const XgmiiWord&) = default;
};

inline constexpr XgmiiWord kIdleWord{0x07070707u, 0xF};
inline constexpr XgmiiWord kErrorWord{0xFEFEFEFEu, 0xF};

/// 64-bit XGMII column: eight octets, one control bit each.
struct XgmiiColumn {
  std::uint64_t data = 0;
  std::uint8_t ctrl = 0;

  std::uint8_t octet(std::size_t i) const { return static_cast<std::uint8_t>(data >> (8 * i)); }
  bool is_control(std::size_t i) const { return (ctrl >> i) & 1u; }
  void set(std::size_t i, std::uint8_t octet, bool control);

  std::pair<XgmiiWord, XgmiiWord> split() const;
  static XgmiiColumn join(XgmiiWord low, XgmiiWord high);

  friend bool operator==(const XgmiiColumn&, const XgmiiColumn&) = default;
};

inline constexpr XgmiiColumn kIdleColumn{0x0707070707070707ull, 0xFF};

using LaneSymbols = std::array<Symbol, kLanes>;
using LaneGroups = std::array<CodeGroup, kLanes>;

/// 16-bit Fibonacci LFSR, x^16 + x^14 + x^13 + x^11 + 1.
class Lfsr16 {
 public:
  explicit Lfsr16(std::uint16_t seed = 0xACE1u) : state_(seed == 0 ? 0xACE1u : seed) {}
  unsigned next_bit();
  unsigned next_bits(unsigned n);
  std::uint16_t state() const { return state_; }

  friend bool operator==(const Lfsr16&, const Lfsr16&) = default;

 private:
  std::uint16_t state_;
};

/// Transmit idle generator state. columns_since_a is the distance, in
/// transfers, from the last ||A|| to the transfer being converted.
struct IdleState {
  static constexpr unsigned kMinAGap = 16;
  static constexpr unsigned kMaxAGap = 31;

  Lfsr16 prng;
  unsigned columns_since_a = 0;
  unsigned next_a_gap = kMinAGap;
  bool after_packet = false;  // previous transfer was not all-idle

  static IdleState seeded(std::uint16_t seed);
  unsigned draw_gap();

  friend bool operator==(const IdleState&, const IdleState&) = default;
};

/// XGMII transfer to lane symbols. All-idle transfers become ||A||, ||K|| or
/// ||R||; /S/ outside lane 0 and unknown control octets become /E/.
LaneSymbols tx_convert(XgmiiWord word, IdleState& idle);

/// Both halves of a 64-bit column, low half first.
std::array<LaneSymbols, 2> tx_convert(const XgmiiColumn& col, IdleState& idle);

/// Per-lane 8B/10B encoders sharing one transmit clock.
class TxEncoder {
 public:
  LaneGroups encode(const LaneSymbols& symbols);
  const std::array<RunningDisparity, kLanes>& disparity() const { return rd_; }

 private:
  std::array<RunningDisparity, kLanes> rd_{};
};

// ---------------------------------------------------------------------------
// Receive side

enum class SyncState : std::uint8_t { Hunting, Synced };

/// Word aligner for one lane (RxLaneState). Locks after kLockCommas commas at
/// one 10-bit phase and unlocks after kUnlockInvalid invalid groups among the
/// last kUnlockWindow.
class LaneAligner {
 public:
  static constexpr unsigned kLockCommas = 4;
  static constexpr unsigned kUnlockInvalid = 4;
  static constexpr unsigned kUnlockWindow = 16;

  /// Appends every group recovered from these bits to out.
  void push_bits(std::span<const std::uint8_t> bits, std::vector<CodeGroup>& out);
  void reset();

  SyncState sync() const { return sync_; }
  unsigned good_commas() const { return good_commas_; }
  unsigned bad_groups() const;
  /// Lock phase, absolute bit position modulo 10.
  unsigned bit_offset() const { return bit_offset_; }
  std::uint64_t sync_losses() const { return sync_losses_; }

 private:
  void hunt();
  void emit_groups(std::vector<CodeGroup>& out);
  void compact();

  SyncState sync_ = SyncState::Hunting;
  std::vector<std::uint8_t> buf_;
  std::size_t head_ = 0;       // index of first unconsumed bit in buf_
  std::uint64_t base_ = 0;     // absolute position of buf_[0]
  std::uint64_t skip_until_ = 0;
  unsigned good_commas_ = 0;
  std::uint64_t last_comma_ = 0;
  std::uint16_t invalid_history_ = 0;
  unsigned bit_offset_ = 0;
  std::uint64_t sync_losses_ = 0;
};

/// A code group after per-lane decoding.
struct LaneSymbol {
  CodeGroup group;
  Symbol symbol;
  DecodeStatus status = DecodeStatus::ok;

  bool is_k(std::uint8_t k) const {
    return status == DecodeStatus::ok && symbol.is_control && symbol.octet == k;
  }
};

using RxColumn = std::array<LaneSymbol, kLanes>;

/// Per-lane 8B/10B decoders.
class RxDecoder {
 public:
  LaneSymbol decode(std::size_t lane, CodeGroup group);
  void reset() { rd_.fill(RunningDisparity::Negative); }

 private:
  std::array<RunningDisparity, kLanes> rd_{};
};

enum class DeskewStatus : std::uint8_t { hunting, aligned, alignment_failed };

/// Lane-to-lane deskew on ||A||. Each lane queue holds at most kDepth groups;
/// skew up to kGuaranteedSkew groups is always absorbed.
class DeskewFifo {
 public:
  static constexpr std::size_t kDepth = 16;
  static constexpr std::size_t kGuaranteedSkew = 4;

  void push(std::size_t lane, const LaneSymbol& s);
  std::optional<RxColumn> pop();
  /// Drops alignment and clears every queue.
  void reset();

  bool aligned() const { return status_ == DeskewStatus::aligned; }
  DeskewStatus status() const { return status_; }
  std::size_t occupancy(std::size_t lane) const { return queues_[lane].size(); }
  std::uint64_t alignment_failures() const { return failures_; }
  std::uint64_t misalignments() const { return misalignments_; }

 private:
  void try_align();

  std::array<std::deque<LaneSymbol>, kLanes> queues_;
  DeskewStatus status_ = DeskewStatus::hunting;
  std::uint64_t failures_ = 0;
  std::uint64_t misalignments_ = 0;
};

/// Clock-compensation FIFO. Deletes ||R|| on write above kHigh, repeats ||R||
/// on read below kLow. Reading starts once kPrime columns are buffered.
class RateMatchFifo {
 public:
  static constexpr std::size_t kDepth = 16;
  static constexpr std::size_t kLow = 4;
  static constexpr std::size_t kHigh = 12;
  static constexpr std::size_t kPrime = 8;

  void write(const RxColumn& col);
  /// One column per local tick. Returns an /E/ column before priming or on
  /// underflow.
  RxColumn read();
  void reset();

  std::size_t occupancy() const { return q_.size(); }
  bool primed() const { return primed_; }
  std::uint64_t deletions() const { return deletions_; }
  std::uint64_t insertions() const { return insertions_; }
  std::uint64_t overflows() const { return overflows_; }
  std::uint64_t underflows() const { return underflows_; }
  /// Overflows or underflows that hit a non-idle column.
  std::uint64_t fifo_faults() const { return fifo_faults_; }

 private:
  std::deque<RxColumn> q_;
  bool primed_ = false;
  bool last_was_idle_ = true;
  std::uint64_t deletions_ = 0;
  std::uint64_t insertions_ = 0;
  std::uint64_t overflows_ = 0;
  std::uint64_t underflows_ = 0;
  std::uint64_t fifo_faults_ = 0;
};

bool is_r_column(const RxColumn& col);
bool is_idle_column(const RxColumn& col);
RxColumn error_column();

/// Lane symbols back to an XGMII transfer.
XgmiiWord rx_convert(const RxColumn& col);
XgmiiWord rx_convert(const LaneSymbols& symbols);

/// Receive half of one XGXS: aligners, decoders, deskew and rate matching.
class RxPath {
 public:
  /// Consumes this tick's recovered bits and produces exactly one transfer.
  XgmiiWord step(const std::array<std::span<const std::uint8_t>, kLanes>& lane_bits);
  void reset();

  bool all_lanes_synced() const;
  bool deskew_aligned() const { return deskew_.aligned(); }
  const LaneAligner& aligner(std::size_t lane) const { return aligners_[lane]; }
  const DeskewFifo& deskew() const { return deskew_; }
  const RateMatchFifo& rate_match() const { return rate_match_; }

 private:
  std::array<LaneAligner, kLanes> aligners_;
  RxDecoder decoder_;
  DeskewFifo deskew_;
  RateMatchFifo rate_match_;
  bool was_healthy_ = false;
};

}  // namespace xaui

#endif  // XAUI_XGXS_HPP
