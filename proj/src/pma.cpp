#include "xaui/pma.hpp"

#include <algorithm>
#include <cmath>

namespace xaui {

bool AnalogSettings::legal() const {
  return vod <= 7 && vod != 3 && preemp <= 6 && eqctrl <= 3 && eqdcgain <= 2;
}

std::vector<AnalogSettings> legal_settings_lattice() {
  std::vector<AnalogSettings> out;
  for (std::uint8_t vod : {0, 1, 2, 4, 5, 6, 7}) {
    for (std::uint8_t pre = 0; pre <= 6; ++pre) {
      for (std::uint8_t eq = 0; eq <= 3; ++eq) {
        for (std::uint8_t dc = 0; dc <= 2; ++dc) out.push_back({vod, pre, eq, dc});
      }
    }
  }
  return out;
}

void ChannelImpairment::validate() const {
  if (ppm_offset > kMaxPpm || ppm_offset < -kMaxPpm) {
    throw std::invalid_argument("ppm offset outside +/-300");
  }
  if (!(loss_db >= 0.0)) throw std::invalid_argument("channel loss must be non-negative");
}

LaneBits serialize(std::span<const CodeGroup> groups) {
  LaneBits out;
  out.reserve(groups.size() * 10);
  for (const CodeGroup& g : groups) {
    for (unsigned i = 0; i < 10; ++i) out.push_back(static_cast<std::uint8_t>((g.bits >> i) & 1u));
  }
  return out;
}

std::vector<CodeGroup> deserialize(std::span<const std::uint8_t> bits, std::size_t offset) {
  std::vector<CodeGroup> out;
  for (std::size_t p = offset; p + 10 <= bits.size(); p += 10) {
    std::uint16_t v = 0;
    for (unsigned i = 0; i < 10; ++i) v |= static_cast<std::uint16_t>((bits[p + i] & 1u) << i);
    out.push_back(CodeGroup{v});
  }
  return out;
}

Margin margin_model(const AnalogSettings& s, double loss_db) {
  if (!s.legal()) throw std::invalid_argument("illegal analog settings");
  static constexpr std::array<double, 3> kDcGainDb = {0.0, 3.0, 6.0};
  const double margin = 1.0 * s.vod + 0.5 * s.preemp + 0.75 * s.eqctrl +
                        kDcGainDb[s.eqdcgain] * 0.25 - loss_db;
  // Saturates at 1e-3 once the eye is closed.
  return {margin, std::pow(10.0, -3.0 - std::max(margin, 0.0))};
}

Margin margin_model(const AnalogSettings& s, const ChannelImpairment& ch) {
  return margin_model(s, ch.loss_db);
}

// --- error injection --------------------------------------------------------

namespace {
// Uniform in [0, 1) from the top 53 bits; std::uniform_real_distribution is
// not reproducible across standard libraries.
double unit(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }
}  // namespace

BitErrorInjector::BitErrorInjector(std::uint64_t seed) : rng_(seed) { draw_gap(); }

void BitErrorInjector::set_ber(double ber) {
  ber = std::clamp(ber, 0.0, 1.0);
  ber_ = ber;
  const double rate = std::max(ber, kCandidateRate);
  if (rate != rate_) {
    rate_ = rate;
    draw_gap();
  }
}

void BitErrorInjector::draw_gap() {
  // Geometric number of clean bits before the next candidate.
  const double u = 1.0 - unit(rng_);
  if (rate_ >= 1.0) {
    countdown_ = 0;
    return;
  }
  const double g = std::floor(std::log(u) / std::log1p(-rate_));
  countdown_ = g > 1e18 ? static_cast<std::uint64_t>(1e18) : static_cast<std::uint64_t>(g);
}

bool BitErrorInjector::next() {
  if (countdown_ > 0) {
    --countdown_;
    return false;
  }
  const double keep = unit(rng_);
  draw_gap();
  if (keep < ber_ / rate_) {
    ++flips_;
    return true;
  }
  return false;
}

// --- lanes ------------------------------------------------------------------

LaneChannel::LaneChannel(std::uint32_t skew_ui, std::uint64_t seed)
    : line_(skew_ui, 0), delay_(skew_ui), errors_(seed) {}

void LaneChannel::set_delay(std::uint32_t ui) {
  if (ui > delay_) {
    line_.insert(line_.end(), ui - delay_, 0);
  } else {
    const std::size_t drop = std::min<std::size_t>(delay_ - ui, line_.size());
    line_.erase(line_.begin(), line_.begin() + static_cast<std::ptrdiff_t>(drop));
  }
  delay_ = ui;
}

void LaneChannel::apply(std::span<std::uint8_t> bits) {
  for (auto& b : bits) {
    std::uint8_t v = b;
    if (delay_ > 0) {
      line_.push_back(v);
      v = line_.front();
      line_.pop_front();
    }
    if (errors_.next()) v ^= 1u;
    if (cut_) v = 0;
    b = v;
  }
}

unsigned ClockOffset::bits_this_tick() {
  acc_ += static_cast<std::int64_t>(ppm_) * 10;
  unsigned n = 10;
  if (acc_ >= 1'000'000) {
    acc_ -= 1'000'000;
    ++n;
  } else if (acc_ <= -1'000'000) {
    acc_ += 1'000'000;
    --n;
  }
  return n;
}

LaneBits channel_apply(std::span<const std::uint8_t> bits, std::uint32_t skew_ui, double ber,
                       std::uint64_t seed) {
  LaneBits out(bits.begin(), bits.end());
  LaneChannel lane(skew_ui, seed);
  lane.set_ber(ber);
  lane.apply(out);
  return out;
}

std::array<LaneBits, kLanes> channel_apply(const std::array<LaneBits, kLanes>& lanes,
                                           const ChannelImpairment& ch, const AnalogSettings& s) {
  ch.validate();
  const double ber = margin_model(s, ch).ber;
  std::array<LaneBits, kLanes> out;
  for (std::size_t k = 0; k < kLanes; ++k) {
    out[k] = channel_apply(lanes[k], ch.skew_ui[k], ber, ch.noise_seed ^ k);
  }
  return out;
}

LaneBits cdr_recover(std::span<const std::uint8_t> bits) { return LaneBits(bits.begin(), bits.end()); }

}  // namespace xaui
