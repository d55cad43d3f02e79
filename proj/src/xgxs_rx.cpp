#include <algorithm>
#include <bit>

#include "xaui/xgxs.hpp"

namespace xaui {

// --- word alignment ---------------------------------------------------------

void LaneAligner::reset() { *this = LaneAligner{}; }

unsigned LaneAligner::bad_groups() const {
  return static_cast<unsigned>(std::popcount(static_cast<unsigned>(invalid_history_)));
}

void LaneAligner::push_bits(std::span<const std::uint8_t> bits, std::vector<CodeGroup>& out) {
  buf_.insert(buf_.end(), bits.begin(), bits.end());
  for (;;) {
    const SyncState before = sync_;
    if (sync_ == SyncState::Hunting) {
      hunt();
    } else {
      emit_groups(out);
    }
    if (sync_ == before) break;
  }
  compact();
}

void LaneAligner::hunt() {
  std::size_t p = head_;
  const std::span<const std::uint8_t> all(buf_);
  while (p + 7 <= buf_.size()) {
    if (comma_at(all.subspan(p, 7))) {
      const std::uint64_t abs = base_ + p;
      if (good_commas_ > 0 && (abs - last_comma_) % 10 == 0) {
        ++good_commas_;
      } else {
        good_commas_ = 1;
      }
      last_comma_ = abs;
      if (good_commas_ >= kLockCommas) {
        sync_ = SyncState::Synced;
        bit_offset_ = static_cast<unsigned>(abs % 10);
        // The locking comma's own group is consumed by the aligner.
        skip_until_ = abs + 10;
        invalid_history_ = 0;
        head_ = p;
        return;
      }
    }
    ++p;
  }
  head_ = p;
}

void LaneAligner::emit_groups(std::vector<CodeGroup>& out) {
  const std::uint64_t pos = base_ + head_;
  if (pos < skip_until_) {
    const std::size_t avail = buf_.size() - head_;
    head_ += static_cast<std::size_t>(std::min<std::uint64_t>(avail, skip_until_ - pos));
  }
  while (buf_.size() - head_ >= 10) {
    std::uint16_t v = 0;
    for (unsigned i = 0; i < 10; ++i) v |= static_cast<std::uint16_t>((buf_[head_ + i] & 1u) << i);
    head_ += 10;
    const CodeGroup g{v};
    out.push_back(g);
    invalid_history_ = static_cast<std::uint16_t>((invalid_history_ << 1) | (is_in_codebook(g) ? 0u : 1u));
    if (bad_groups() >= kUnlockInvalid) {
      sync_ = SyncState::Hunting;
      good_commas_ = 0;
      invalid_history_ = 0;
      ++sync_losses_;
      return;
    }
  }
}

void LaneAligner::compact() {
  if (head_ < 256) return;
  buf_.erase(buf_.begin(), buf_.begin() + static_cast<std::ptrdiff_t>(head_));
  base_ += head_;
  head_ = 0;
}

// --- decode -----------------------------------------------------------------

LaneSymbol RxDecoder::decode(std::size_t lane, CodeGroup group) {
  const auto r = decode_code_group(group, rd_[lane]);
  rd_[lane] = r.rd;
  return {group, r.symbol, r.status};
}

// --- deskew -----------------------------------------------------------------

void DeskewFifo::reset() {
  for (auto& q : queues_) q.clear();
  status_ = DeskewStatus::hunting;
}

void DeskewFifo::push(std::size_t lane, const LaneSymbol& s) {
  auto& q = queues_[lane];
  if (status_ == DeskewStatus::aligned) {
    if (q.size() >= kDepth) {
      ++failures_;
      reset();
      status_ = DeskewStatus::alignment_failed;
      return;
    }
    q.push_back(s);
    return;
  }
  if (q.empty() && !s.is_k(kcode::A)) return;
  q.push_back(s);
  if (q.size() > kDepth) {
    ++failures_;
    reset();
    status_ = DeskewStatus::alignment_failed;
    return;
  }
  try_align();
}

void DeskewFifo::try_align() {
  for (const auto& q : queues_) {
    if (q.empty() || !q.front().is_k(kcode::A)) return;
  }
  status_ = DeskewStatus::aligned;
}

std::optional<RxColumn> DeskewFifo::pop() {
  if (status_ != DeskewStatus::aligned) return std::nullopt;
  for (const auto& q : queues_) {
    if (q.empty()) return std::nullopt;
  }
  RxColumn col{};
  unsigned a_lanes = 0;
  for (std::size_t lane = 0; lane < kLanes; ++lane) {
    col[lane] = queues_[lane].front();
    queues_[lane].pop_front();
    if (col[lane].is_k(kcode::A)) ++a_lanes;
  }
  if (a_lanes != 0 && a_lanes != kLanes) {
    ++misalignments_;
    reset();
    return std::nullopt;
  }
  return col;
}

// --- rate matching ----------------------------------------------------------

bool is_r_column(const RxColumn& col) {
  return std::all_of(col.begin(), col.end(), [](const LaneSymbol& s) { return s.is_k(kcode::R); });
}

bool is_idle_column(const RxColumn& col) {
  return std::all_of(col.begin(), col.end(), [](const LaneSymbol& s) {
    return s.is_k(kcode::A) || s.is_k(kcode::K) || s.is_k(kcode::R);
  });
}

RxColumn error_column() {
  RxColumn col{};
  for (auto& s : col) s = {CodeGroup{}, control_symbol(kcode::E), DecodeStatus::ok};
  return col;
}

void RateMatchFifo::reset() {
  q_.clear();
  primed_ = false;
  last_was_idle_ = true;
}

void RateMatchFifo::write(const RxColumn& col) {
  if (q_.size() >= kHigh && is_r_column(col)) {
    ++deletions_;
    return;
  }
  if (q_.size() >= kDepth) {
    ++overflows_;
    if (!is_idle_column(col)) ++fifo_faults_;
    return;
  }
  q_.push_back(col);
}

RxColumn RateMatchFifo::read() {
  if (!primed_) {
    if (q_.size() < kPrime) return error_column();
    primed_ = true;
  }
  if (q_.empty()) {
    ++underflows_;
    if (!last_was_idle_) ++fifo_faults_;
    return error_column();
  }
  if (q_.size() < kLow && is_r_column(q_.front())) {
    ++insertions_;
    last_was_idle_ = true;
    return q_.front();
  }
  RxColumn c = q_.front();
  q_.pop_front();
  last_was_idle_ = is_idle_column(c);
  return c;
}

// --- XGMII mapping ----------------------------------------------------------

namespace {

std::pair<std::uint8_t, bool> to_xgmii(const Symbol& s, DecodeStatus status) {
  if (status != DecodeStatus::ok) return {kXgmiiError, true};
  if (!s.is_control) return {s.octet, false};
  switch (s.octet) {
    case kcode::S:
      return {kXgmiiStart, true};
    case kcode::T:
      return {kXgmiiTerminate, true};
    case kcode::A:
    case kcode::K:
    case kcode::R:
      return {kXgmiiIdle, true};
    case kcode::E:
      return {kXgmiiError, true};
    default:
      return {s.octet, true};
  }
}

}  // namespace

XgmiiWord rx_convert(const RxColumn& col) {
  XgmiiWord w{};
  for (std::size_t lane = 0; lane < kLanes; ++lane) {
    const auto [octet, control] = to_xgmii(col[lane].symbol, col[lane].status);
    w.set(lane, octet, control);
  }
  return w;
}

XgmiiWord rx_convert(const LaneSymbols& symbols) {
  XgmiiWord w{};
  for (std::size_t lane = 0; lane < kLanes; ++lane) {
    const auto [octet, control] = to_xgmii(symbols[lane], DecodeStatus::ok);
    w.set(lane, octet, control);
  }
  return w;
}

// --- receive path -----------------------------------------------------------

void RxPath::reset() {
  for (auto& a : aligners_) a.reset();
  decoder_.reset();
  deskew_.reset();
  rate_match_.reset();
  was_healthy_ = false;
}

bool RxPath::all_lanes_synced() const {
  return std::all_of(aligners_.begin(), aligners_.end(),
                     [](const LaneAligner& a) { return a.sync() == SyncState::Synced; });
}

XgmiiWord RxPath::step(const std::array<std::span<const std::uint8_t>, kLanes>& lane_bits) {
  std::array<std::vector<CodeGroup>, kLanes> groups;
  for (std::size_t lane = 0; lane < kLanes; ++lane) {
    aligners_[lane].push_bits(lane_bits[lane], groups[lane]);
  }
  if (!all_lanes_synced()) {
    deskew_.reset();
  } else {
    for (std::size_t lane = 0; lane < kLanes; ++lane) {
      for (const CodeGroup& g : groups[lane]) deskew_.push(lane, decoder_.decode(lane, g));
    }
    while (auto col = deskew_.pop()) rate_match_.write(*col);
  }

  const bool healthy = all_lanes_synced() && deskew_.aligned();
  if (!healthy) {
    rate_match_.reset();
    was_healthy_ = false;
    return kErrorWord;
  }
  was_healthy_ = true;
  return rx_convert(rate_match_.read());
}

}  // namespace xaui
