// Serializer, impaired serial channel and receive CDR seam.

#ifndef XAUI_PMA_HPP
#define XAUI_PMA_HPP

#include <array>
#include <cstdint>
#include <deque>
#include <optional>
#include <random>
#include <span>
#include <stdexcept>
#include <vector>

#include "xaui/codec.hpp"
#include "xaui/xgxs.hpp"

namespace xaui {

/// Transmit/receive buffer knobs for one channel, as setting indices:
/// vod 0..7 except 3, preemp 0..6, eqctrl 0..3, eqdcgain 0..2 (0/3/6 dB).
struct AnalogSettings {
  std::uint8_t vod = 4;
  std::uint8_t preemp = 0;
  std::uint8_t eqctrl = 0;
  std::uint8_t eqdcgain = 0;

  static constexpr AnalogSettings defaults() { return {}; }
  bool legal() const;

  friend bool operator==(const AnalogSettings&, const AnalogSettings&) = default;
};

/// Every legal AnalogSettings value (7 x 7 x 4 x 3 = 588 points).
std::vector<AnalogSettings> legal_settings_lattice();

struct ChannelImpairment {
  static constexpr std::int32_t kMaxPpm = 300;

  std::array<std::uint32_t, kLanes> skew_ui{};
  std::int32_t ppm_offset = 0;
  double loss_db = 0.0;
  std::uint64_t noise_seed = 0;

  /// Throws std::invalid_argument on |ppm| > 300 or negative loss.
  void validate() const;
};

using LaneBits = std::vector<std::uint8_t>;

/// Code groups to wire bits, 'a' first.
LaneBits serialize(std::span<const CodeGroup> groups);

/// Groups read from bits starting at offset; trailing partial group ignored.
std::vector<CodeGroup> deserialize(std::span<const std::uint8_t> bits, std::size_t offset = 0);

struct Margin {
  double margin_db = 0.0;
  double ber = 0.0;
};

/// Synthetic link budget. margin = vod + 0.5 preemp + 0.75 eqctrl
/// + 0.25 {0,3,6}[eqdcgain] - loss; ber = 10^-(3 + max(margin, 0)), capped at 1e-3.
/// Throws std::invalid_argument for illegal settings.
Margin margin_model(const AnalogSettings& s, double loss_db);
Margin margin_model(const AnalogSettings& s, const ChannelImpairment& ch);

/// Independent bit flips at a settable rate. Candidate positions are drawn
/// geometrically at rate max(ber, 1e-3) and each is kept with probability
/// ber / rate, so for a fixed seed the flipped set only grows with ber.
class BitErrorInjector {
 public:
  static constexpr double kCandidateRate = 1e-3;

  explicit BitErrorInjector(std::uint64_t seed);
  void set_ber(double ber);
  double ber() const { return ber_; }
  /// Advances one bit; true if that bit is flipped.
  bool next();
  std::uint64_t flips() const { return flips_; }

 private:
  void draw_gap();

  std::mt19937_64 rng_;
  double ber_ = 0.0;
  double rate_ = kCandidateRate;
  std::uint64_t countdown_ = 0;
  std::uint64_t flips_ = 0;
};

/// One serial lane: fixed skew delay line, error injection, fault overrides.
class LaneChannel {
 public:
  LaneChannel(std::uint32_t skew_ui, std::uint64_t seed);

  void set_ber(double ber) { errors_.set_ber(ber); }
  double ber() const { return errors_.ber(); }
  /// Forces the lane output to constant 0 (cut fibre).
  void set_cut(bool cut) { cut_ = cut; }
  bool cut() const { return cut_; }
  /// Changes the total delay. Growing it stalls the lane with zeros,
  /// shrinking it drops bits in flight.
  void set_delay(std::uint32_t ui);
  std::uint32_t delay() const { return delay_; }

  /// Transforms bits in place.
  void apply(std::span<std::uint8_t> bits);
  std::uint64_t flips() const { return errors_.flips(); }

 private:
  std::deque<std::uint8_t> line_;
  std::uint32_t delay_;
  BitErrorInjector errors_;
  bool cut_ = false;
};

/// Converts a ppm offset of the far transmitter against the local receive
/// clock into the number of bit times arriving in each local tick (10 on
/// average, occasionally 9 or 11).
class ClockOffset {
 public:
  explicit ClockOffset(std::int32_t ppm) : ppm_(ppm) {}
  unsigned bits_this_tick();
  std::int32_t ppm() const { return ppm_; }

 private:
  std::int32_t ppm_;
  std::int64_t acc_ = 0;  // micro-bits
};

/// Applies skew and bit errors to four lanes. Lane k uses seed noise_seed ^ k.
/// The ppm offset does not alter bit content; see ClockOffset.
std::array<LaneBits, kLanes> channel_apply(const std::array<LaneBits, kLanes>& lanes,
                                           const ChannelImpairment& ch, const AnalogSettings& s);

/// Single-lane form used by channel_apply.
LaneBits channel_apply(std::span<const std::uint8_t> bits, std::uint32_t skew_ui, double ber,
                       std::uint64_t seed);

/// Clock and data recovery. Bit content passes through unchanged; word
/// alignment is done by LaneAligner.
LaneBits cdr_recover(std::span<const std::uint8_t> bits);

}  // namespace xaui

#endif  // XAUI_PMA_HPP
