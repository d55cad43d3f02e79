#include <algorithm>
#include <cmath>
#include <random>

#include "xaui/harness.hpp"

namespace xaui {

void TrafficConfig::validate() const {
  if (ifg < 1) throw std::invalid_argument("ifg must be at least one column");
  if (!(bandwidth > 0.0 && bandwidth <= 100.0)) throw std::invalid_argument("bandwidth must be in (0, 100]");
  const auto check_len = [](std::uint64_t len) {
    if (len < kMinLength || len > kMaxLength) {
      throw std::invalid_argument("packet length " + std::to_string(len) + " outside [64, 65535]");
    }
  };
  if (lengths.empty()) {
    check_len(len_min);
    check_len(len_max);
    if (len_min > len_max) throw std::invalid_argument("len_min exceeds len_max");
  } else {
    for (auto len : lengths) check_len(len);
  }
}

TrafficPlan generate_packets(const TrafficConfig& cfg) {
  cfg.validate();
  TrafficPlan plan;
  std::mt19937_64 rng(cfg.seed);
  const std::uint64_t n = cfg.packet_count();
  plan.packets.reserve(n);

  for (std::uint64_t i = 0; i < n; ++i) {
    std::uint32_t len = 0;
    if (!cfg.lengths.empty()) {
      len = cfg.lengths[i];
    } else {
      // Modulo bias is negligible for these spans and keeps the stream portable.
      len = cfg.len_min + static_cast<std::uint32_t>(rng() % (cfg.len_max - cfg.len_min + 1u));
    }

    Packet p;
    p.seq = cfg.first_seq + i;
    p.first_column = plan.columns.size();
    p.payload.resize(len);
    for (std::size_t k = 0; k < len; k += 8) {
      std::uint64_t r = rng();
      for (std::size_t b = k; b < std::min<std::size_t>(k + 8, len); ++b, r >>= 8) {
        p.payload[b] = static_cast<std::uint8_t>(r);
      }
    }

    // Octet stream: /S/, payload, /T/, idles to the column boundary.
    const std::size_t octets = len + 2u;
    const std::size_t cols = (octets + 7) / 8;
    for (std::size_t c = 0; c < cols; ++c) {
      XgmiiColumn col = kIdleColumn;
      for (std::size_t lane = 0; lane < 8; ++lane) {
        const std::size_t o = c * 8 + lane;
        if (o == 0) {
          col.set(lane, kXgmiiStart, true);
        } else if (o <= len) {
          col.set(lane, p.payload[o - 1], false);
        } else if (o == len + 1u) {
          col.set(lane, kXgmiiTerminate, true);
        }
      }
      plan.columns.push_back(col);
    }

    const double bw = cfg.bandwidth / 100.0;
    const auto gap_for_bw = static_cast<std::uint64_t>(std::ceil(static_cast<double>(cols) * (1.0 - bw) / bw - 1e-9));
    const std::uint64_t gap = std::max<std::uint64_t>(cfg.ifg, gap_for_bw);
    plan.columns.insert(plan.columns.end(), gap, kIdleColumn);

    plan.records.push_back({ticks_to_ns(p.first_column * 2), p.seq, len});
    plan.packets.push_back(std::move(p));
  }
  return plan;
}

TrafficSource::TrafficSource(const TrafficPlan& plan, std::optional<std::uint64_t> start_tick)
    : plan_(&plan), start_(start_tick) {}

bool TrafficSource::done(unsigned instance) const { return word_.at(instance) >= plan_->columns.size() * 2; }

XgmiiWord TrafficSource::pull(unsigned instance, std::uint64_t tick) {
  if (!start_ || tick < *start_ || done(instance)) return kIdleWord;
  const std::uint64_t w = word_[instance]++;
  if (instance == 0 && next_packet_ < plan_->packets.size() && w == plan_->packets[next_packet_].first_column * 2) {
    const Packet& p = plan_->packets[next_packet_++];
    sent_.push_back({ticks_to_ns(tick), p.seq, p.payload.size()});
  }
  const auto halves = plan_->columns[w / 2].split();
  return w % 2 == 0 ? halves.first : halves.second;
}

}  // namespace xaui
