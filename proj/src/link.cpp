#include "xaui/link.hpp"

#include <algorithm>
#include <stdexcept>

namespace xaui {
namespace {

std::array<LaneChannel, kLanes> make_lanes(const ChannelImpairment& ch) {
  return {LaneChannel(ch.skew_ui[0], ch.noise_seed ^ 0u), LaneChannel(ch.skew_ui[1], ch.noise_seed ^ 1u),
          LaneChannel(ch.skew_ui[2], ch.noise_seed ^ 2u), LaneChannel(ch.skew_ui[3], ch.noise_seed ^ 3u)};
}

std::uint16_t idle_seed_for(std::uint64_t seed) {
  const auto s = static_cast<std::uint16_t>(seed ^ (seed >> 16) ^ (seed >> 32) ^ (seed >> 48));
  return s == 0 ? 0xACE1u : s;
}

}  // namespace

// --- instance ---------------------------------------------------------------

XauiInstance::XauiInstance(const ChannelImpairment& channel, std::uint16_t idle_seed)
    : impairment_(channel),
      idle_seed_(idle_seed),
      idle_(IdleState::seeded(idle_seed)),
      lanes_(make_lanes(channel)),
      clock_(channel.ppm_offset) {
  impairment_.validate();
}

void XauiInstance::reset() {
  idle_ = IdleState::seeded(idle_seed_);
  encoder_ = TxEncoder{};
  for (auto& b : tx_bits_) b.clear();
  rx_.reset();
}

XgmiiWord XauiInstance::step(TxSource& source, unsigned index, std::uint64_t tick, bool serial_loopback) {
  const unsigned n = serial_loopback ? 10u : clock_.bits_this_tick();
  while (tx_bits_[0].size() < n) {
    const XgmiiWord w = source.pull(index, tick);
    ++words_sent_;
    const LaneGroups groups = encoder_.encode(tx_convert(w, idle_));
    for (std::size_t k = 0; k < kLanes; ++k) {
      for (unsigned i = 0; i < 10; ++i) {
        tx_bits_[k].push_back(static_cast<std::uint8_t>((groups[k].bits >> i) & 1u));
      }
    }
  }

  std::array<std::span<const std::uint8_t>, kLanes> rx_in;
  for (std::size_t k = 0; k < kLanes; ++k) {
    auto& pending = tx_bits_[k];
    auto& bits = tick_bits_[k];
    bits.assign(pending.begin(), pending.begin() + n);
    pending.erase(pending.begin(), pending.begin() + n);
    if (!serial_loopback) lanes_[k].apply(bits);
    // cdr_recover is the identity on bit content.
    rx_in[k] = bits;
  }
  return rx_.step(rx_in);
}

// --- protection -------------------------------------------------------------

const char* to_string(EventKind k) {
  switch (k) {
    case EventKind::fault_start:
      return "fault_start";
    case EventKind::fault_end:
      return "fault_end";
    case EventKind::switch_over:
      return "switch";
    case EventKind::suppressed_fault:
      return "suppressed_fault";
    case EventKind::degraded:
      return "degraded";
  }
  return "?";
}

std::string format_event(const Event& e) {
  const auto inst = [](int i) { return i < 0 ? std::string("-") : "XAUI" + std::to_string(i); };
  return std::to_string(e.tick) + '\t' + to_string(e.kind) + '\t' + inst(e.from) + '\t' + inst(e.to) + '\t' +
         (e.cause.empty() ? "-" : e.cause);
}

namespace {

std::string cause_of(const InstanceStatus& s) {
  if (!s.all_lanes_synced) return "sync_lost";
  if (!s.deskew_aligned) return "deskew_lost";
  return "none";
}

}  // namespace

void monitor_and_switch(ProtectionState& st, std::uint64_t tick, const InstanceStatus& s0,
                        const InstanceStatus& s1, std::vector<Event>& log) {
  const std::array<const InstanceStatus*, kInstances> s = {&s0, &s1};
  const unsigned a = st.active;
  const std::uint32_t prev_active_timer = st.fault_timer[a];
  for (std::size_t i = 0; i < kInstances; ++i) {
    st.fault_timer[i] = s[i]->healthy() ? 0 : std::min<std::uint32_t>(st.fault_timer[i] + 1, 0x7FFFFFFF);
  }
  if (!st.enabled) return;
  if (!st.armed) {
    if (!s0.healthy() && !s1.healthy()) return;
    st.armed = true;
  }

  if (s[a]->healthy()) {
    if (prev_active_timer > 0 && prev_active_timer < st.holdoff_ticks) {
      log.push_back({tick, EventKind::suppressed_fault, static_cast<int>(a), -1,
                     "cleared_after_" + std::to_string(prev_active_timer)});
    }
    st.degraded_reported = false;
    return;
  }
  if (st.fault_timer[a] < st.holdoff_ticks) return;

  const unsigned standby = 1u - a;
  if (s[standby]->healthy()) {
    log.push_back({tick, EventKind::switch_over, static_cast<int>(a), static_cast<int>(standby), cause_of(*s[a])});
    st.active = standby;
    st.degraded_reported = false;
  } else if (!st.degraded_reported) {
    log.push_back({tick, EventKind::degraded, static_cast<int>(a), -1, cause_of(*s[a])});
    st.degraded_reported = true;
  }
}

// --- faults -----------------------------------------------------------------

const char* to_string(FaultKind k) {
  switch (k) {
    case FaultKind::none:
      return "none";
    case FaultKind::lane_cut:
      return "lane_cut";
    case FaultKind::high_ber:
      return "high_ber";
    case FaultKind::skew_burst:
      return "skew_burst";
  }
  return "?";
}

FaultKind fault_kind_from_string(const std::string& s) {
  for (FaultKind k : {FaultKind::none, FaultKind::lane_cut, FaultKind::high_ber, FaultKind::skew_burst}) {
    if (s == to_string(k)) return k;
  }
  throw std::invalid_argument("unknown fault kind '" + s + "'");
}

// --- frame monitor ----------------------------------------------------------

std::uint32_t FrameMonitor::observe(const XgmiiWord& w) {
  std::uint32_t bad = 0;
  for (std::size_t lane = 0; lane < kLanes; ++lane) {
    const std::uint8_t o = w.octet(lane);
    const bool c = w.is_control(lane);
    if (c && o == kXgmiiStart) {
      if (in_frame_) ++bad;
      in_frame_ = true;
      damaged_ = false;
      continue;
    }
    if (!in_frame_ || !c) continue;
    if (o == kXgmiiTerminate) {
      if (damaged_) ++bad;
      in_frame_ = false;
    } else if (o == kXgmiiError) {
      damaged_ = true;
    } else {
      ++bad;
      in_frame_ = false;
    }
  }
  bad_ += bad;
  return bad;
}

// --- system -----------------------------------------------------------------

System::System(const SystemConfig& cfg, TxSource* source)
    : cfg_(cfg),
      source_(source ? source : &idle_),
      controller_(static_cast<unsigned>(kInstances * kLanes)),
      lmpi_(controller_),
      instances_{XauiInstance(cfg.channels[0], idle_seed_for(cfg.seed)),
                 XauiInstance(cfg.channels[1], idle_seed_for(cfg.seed))} {
  protection_.enabled = cfg.protection;
  protection_.holdoff_ticks = cfg.holdoff_ticks;
  lmpi_.set_xgmii_loop(cfg.xgmii_loop);
  controller_.reset();
}

void System::step(std::uint64_t n_ticks) {
  for (std::uint64_t i = 0; i < n_ticks; ++i) tick_once();
}

void System::select_active(unsigned sel) { lmpi_.set_xaui_sel(sel ? 1u : 0u); }

void System::inject_fault(const FaultSpec& spec) {
  if (spec.target >= kInstances) throw std::invalid_argument("fault target out of range");
  if (spec.lane >= kLanes) throw std::invalid_argument("fault lane out of range");
  if (spec.kind == FaultKind::none) return;
  const auto end = spec.start_tick + spec.duration;
  for (const auto& f : faults_) {
    if (f.target != spec.target) continue;
    const auto f_end = f.start_tick + f.duration;
    if (spec.start_tick < f_end && f.start_tick < end) {
      throw std::invalid_argument("overlapping faults on the same instance");
    }
  }
  faults_.push_back(spec);
}

void System::schedule_lmpi(std::uint64_t tick, const LmpiPort& port) {
  // Stable insertion keeps same-tick accesses in submission order.
  auto it = std::upper_bound(lmpi_schedule_.begin() + static_cast<std::ptrdiff_t>(lmpi_next_), lmpi_schedule_.end(),
                             tick, [](std::uint64_t t, const auto& e) { return t < e.first; });
  lmpi_schedule_.insert(it, {tick, port});
}

LinkStatusView System::link_view() const {
  return {status(0).healthy(), status(1).healthy(), protection_.active};
}

std::optional<std::uint16_t> System::lmpi_access(const LmpiPort& port) {
  return lmpi_.access(port, link_view());
}

InstanceStatus System::status(unsigned instance) const {
  if (!ready()) return {};
  return instances_.at(instance).status();
}

void System::reset_datapath() {
  for (auto& inst : instances_) inst.reset();
  controller_.reset();
  ber_dirty_ = true;
}

void System::apply_faults() {
  for (const auto& f : faults_) {
    const bool starts = f.start_tick == tick_;
    const bool ends = f.start_tick + f.duration == tick_;
    if (!starts && !ends) continue;
    if (starts && f.duration == 0) continue;
    XauiInstance& inst = instances_[f.target];
    switch (f.kind) {
      case FaultKind::lane_cut:
        inst.lane(f.lane).set_cut(starts);
        break;
      case FaultKind::high_ber:
        ber_override_[f.target] = starts ? std::optional<double>(f.ber) : std::nullopt;
        ber_dirty_ = true;
        break;
      case FaultKind::skew_burst: {
        const std::uint32_t base = inst.impairment().skew_ui[f.lane];
        inst.lane(f.lane).set_delay(starts ? base + f.skew_ui : base);
        break;
      }
      case FaultKind::none:
        break;
    }
    events_.push_back({tick_, starts ? EventKind::fault_start : EventKind::fault_end, static_cast<int>(f.target), -1,
                       std::string(to_string(f.kind)) + (f.kind == FaultKind::high_ber ? "" : "_lane" + std::to_string(f.lane))});
  }
}

void System::refresh_ber() {
  if (!ber_dirty_ && settings_generation_ == controller_.generation()) return;
  for (unsigned i = 0; i < kInstances; ++i) {
    for (unsigned k = 0; k < kLanes; ++k) {
      const double ber = ber_override_[i] ? *ber_override_[i]
                                          : margin_model(controller_.active(i * kLanes + k),
                                                         instances_[i].impairment()).ber;
      instances_[i].set_lane_ber(k, ber);
    }
  }
  settings_generation_ = controller_.generation();
  ber_dirty_ = false;
}

void System::tick_once() {
  while (lmpi_next_ < lmpi_schedule_.size() && lmpi_schedule_[lmpi_next_].first <= tick_) {
    const LmpiPort& port = lmpi_schedule_[lmpi_next_].second;
    if (auto v = lmpi_access(port)) lmpi_reads_.push_back({tick_, port.addr, *v});
    ++lmpi_next_;
  }
  if (lmpi_.take_soft_reset()) reset_datapath();
  lmpi_.tick();
  apply_faults();
  refresh_ber();

  const bool loop = lmpi_.xgmii_loop();
  const bool rx_ready = ready();
  TickOutput out{};
  for (unsigned i = 0; i < kInstances; ++i) {
    const XgmiiWord w = instances_[i].step(*source_, i, tick_, loop);
    out.instance[i] = rx_ready ? w : kErrorWord;
  }

  protection_.active = lmpi_.xaui_sel();
  monitor_and_switch(protection_, tick_, status(0), status(1), events_);
  lmpi_.set_xaui_sel(protection_.active);

  out.active = protection_.active;
  out.selected = out.instance[out.active];
  if (const auto bad = monitor_.observe(out.selected)) lmpi_.count_lost(bad);
  last_ = out;
  if (sink_) sink_(tick_, out);
  ++tick_;
}

}  // namespace xaui
