#include <algorithm>
#include <unordered_map>

#include "xaui/harness.hpp"

namespace xaui {

PacketChecker::PacketChecker(const std::vector<Packet>& expected)
    : expected_(&expected), matched_(expected.size(), false) {}

void PacketChecker::observe(std::uint64_t tick, const XgmiiWord& w) {
  for (std::size_t lane = 0; lane < kLanes; ++lane) {
    const std::uint8_t o = w.octet(lane);
    if (!w.is_control(lane)) {
      if (in_frame_) bytes_.push_back(o);
      continue;
    }
    if (o == kXgmiiStart) {
      if (in_frame_) end_frame(false);
      in_frame_ = true;
      damaged_ = false;
      frame_tick_ = tick;
      bytes_.clear();
      continue;
    }
    if (!in_frame_) continue;
    if (o == kXgmiiTerminate) {
      end_frame(true);
    } else if (o == kXgmiiError) {
      damaged_ = true;
    } else {
      end_frame(false);
    }
  }
}

void PacketChecker::end_frame(bool terminated) {
  in_frame_ = false;
  if (terminated && !damaged_) {
    match_intact();
  } else {
    match_damaged();
  }
}

void PacketChecker::match_intact() {
  const auto& exp = *expected_;
  const auto same = [&](std::size_t j) { return !matched_[j] && exp[j].payload == bytes_; };

  std::optional<std::size_t> hit;
  for (std::size_t j = cursor_; j < exp.size() && !hit; ++j) {
    if (same(j)) hit = j;
  }
  if (hit) {
    cursor_ = *hit + 1;
  } else {
    // A packet given up as lost may still turn up late.
    for (std::size_t j = 0; j < std::min(cursor_, exp.size()) && !hit; ++j) {
      if (same(j)) hit = j;
    }
  }

  if (!hit) {
    if (cursor_ >= exp.size()) {
      ++report_.unexpected;
      return;
    }
    if (exp[cursor_].payload.size() != bytes_.size()) {
      ++report_.length_mismatches;
    } else {
      ++report_.payload_mismatches;
    }
    ++cursor_;
    return;
  }

  const Packet& p = exp[*hit];
  matched_[*hit] = true;
  if (last_seq_ && p.seq < *last_seq_) ++report_.out_of_order;
  last_seq_ = p.seq;
  ++report_.received;
  chk_.push_back({ticks_to_ns(frame_tick_), p.seq, p.payload.size()});
}

void PacketChecker::match_damaged() {
  // Damaged frames never match; the next intact frame skips past whatever
  // they stood for.
  ++report_.corrupted;
}

CheckReport PacketChecker::finish(const std::vector<PacketRecord>& sent) {
  if (!finished_) {
    finished_ = true;
    if (in_frame_) {
      in_frame_ = false;
      ++report_.truncated;
    }
    report_.sent = expected_->size();
    report_.lost = report_.sent - report_.received;

    std::unordered_map<std::uint64_t, std::uint64_t> sent_at;
    for (const auto& r : sent) sent_at.emplace(r.seq, r.time_ns);
    for (const auto& r : chk_) {
      const auto it = sent_at.find(r.seq);
      if (it != sent_at.end()) {
        report_.latency_ns.push_back(static_cast<std::int64_t>(r.time_ns) - static_cast<std::int64_t>(it->second));
      }
    }
  }
  return report_;
}

CheckReport check_packets(const TrafficPlan& plan, const std::vector<XgmiiWord>& observed,
                          std::vector<PacketRecord>* chk) {
  PacketChecker checker(plan.packets);
  for (std::size_t i = 0; i < observed.size(); ++i) checker.observe(i, observed[i]);
  CheckReport r = checker.finish(plan.records);
  if (chk) *chk = checker.received();
  return r;
}

}  // namespace xaui
