// Dual XAUI system: two transceiver instances fed the same XGMII traffic
// (1+1), one reconfiguration controller for all eight channels, a 1+1
// protection selector and scheduled fault injection.
//
// One tick is one 32-bit XGMII transfer time (3.2 ns at 3.125 Gbaud).

#ifndef XAUI_LINK_HPP
#define XAUI_LINK_HPP

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "xaui/pma.hpp"
#include "xaui/reconfig.hpp"
#include "xaui/xgxs.hpp"

namespace xaui {

inline constexpr std::size_t kInstances = 2;

/// XGMII transmit data for the instances. Each instance pulls at its own
/// transmit clock rate.
class TxSource {
 public:
  virtual ~TxSource() = default;
  virtual XgmiiWord pull(unsigned instance, std::uint64_t tick) = 0;
};

class IdleSource final : public TxSource {
 public:
  XgmiiWord pull(unsigned, std::uint64_t) override { return kIdleWord; }
};

struct InstanceStatus {
  bool all_lanes_synced = false;
  bool deskew_aligned = false;

  bool healthy() const { return all_lanes_synced && deskew_aligned; }
};

/// One four-lane XAUI transceiver looped through its serial channel.
class XauiInstance {
 public:
  XauiInstance(const ChannelImpairment& channel, std::uint16_t idle_seed);

  /// Runs one tick. With serial_loopback the lanes bypass the channel model.
  XgmiiWord step(TxSource& source, unsigned index, std::uint64_t tick, bool serial_loopback);
  void reset();

  void set_lane_ber(std::size_t lane, double ber) { lanes_[lane].set_ber(ber); }
  LaneChannel& lane(std::size_t k) { return lanes_[k]; }
  const LaneChannel& lane(std::size_t k) const { return lanes_[k]; }
  const ChannelImpairment& impairment() const { return impairment_; }

  InstanceStatus status() const { return {rx_.all_lanes_synced(), rx_.deskew_aligned()}; }
  const RxPath& rx() const { return rx_; }
  std::uint64_t words_sent() const { return words_sent_; }

 private:
  ChannelImpairment impairment_;
  std::uint16_t idle_seed_;
  IdleState idle_;
  TxEncoder encoder_;
  std::array<std::vector<std::uint8_t>, kLanes> tx_bits_;
  std::array<std::vector<std::uint8_t>, kLanes> tick_bits_;
  std::array<LaneChannel, kLanes> lanes_;
  ClockOffset clock_;
  RxPath rx_;
  std::uint64_t words_sent_ = 0;
};

// ---------------------------------------------------------------------------
// Protection

enum class EventKind : std::uint8_t { fault_start, fault_end, switch_over, suppressed_fault, degraded };

const char* to_string(EventKind k);

struct Event {
  std::uint64_t tick = 0;
  EventKind kind = EventKind::switch_over;
  int from = -1;
  int to = -1;
  std::string cause;

  friend bool operator==(const Event&, const Event&) = default;
};

/// "tick<TAB>kind<TAB>from<TAB>to<TAB>cause"; absent instances print as '-'.
std::string format_event(const Event& e);

/// Non-revertive 1+1 selector state.
struct ProtectionState {
  static constexpr std::uint32_t kDefaultHoldoff = 100;

  unsigned active = 0;
  bool enabled = true;
  std::uint32_t holdoff_ticks = kDefaultHoldoff;
  std::array<std::uint32_t, kInstances> fault_timer{};
  bool armed = false;  // set once either instance has been healthy
  bool degraded_reported = false;
};

/// Switches away from the active instance once it has been unhealthy for
/// holdoff_ticks consecutive ticks, provided the standby is healthy.
void monitor_and_switch(ProtectionState& st, std::uint64_t tick, const InstanceStatus& s0,
                        const InstanceStatus& s1, std::vector<Event>& log);

// ---------------------------------------------------------------------------
// Faults

enum class FaultKind : std::uint8_t { none, lane_cut, high_ber, skew_burst };

struct FaultSpec {
  unsigned target = 0;
  FaultKind kind = FaultKind::none;
  unsigned lane = 0;        // lane_cut, skew_burst
  double ber = 0.0;         // high_ber
  std::uint32_t skew_ui = 0;  // skew_burst
  std::uint64_t start_tick = 0;
  std::uint64_t duration = 0;
};

const char* to_string(FaultKind k);
FaultKind fault_kind_from_string(const std::string& s);

// ---------------------------------------------------------------------------
// System

struct SystemConfig {
  std::array<ChannelImpairment, kInstances> channels{};
  std::uint64_t seed = 1;
  bool protection = true;
  std::uint32_t holdoff_ticks = ProtectionState::kDefaultHoldoff;
  bool xgmii_loop = false;
};

struct TickOutput {
  XgmiiWord selected;
  std::array<XgmiiWord, kInstances> instance;
  unsigned active = 0;
};

struct LmpiRead {
  std::uint64_t tick = 0;
  std::uint8_t addr = 0;
  std::uint16_t value = 0;
};

/// Counts frames that leave the selected output damaged: /E/ inside, or
/// ended by anything other than a terminate.
class FrameMonitor {
 public:
  std::uint32_t observe(const XgmiiWord& w);
  std::uint64_t bad_frames() const { return bad_; }

 private:
  bool in_frame_ = false;
  bool damaged_ = false;
  std::uint64_t bad_ = 0;
};

class System {
 public:
  using Sink = std::function<void(std::uint64_t tick, const TickOutput&)>;

  /// Applies reset at tick 0, which starts offset cancellation.
  explicit System(const SystemConfig& cfg, TxSource* source = nullptr);

  void step(std::uint64_t n_ticks);
  std::uint64_t now() const { return tick_; }

  void set_source(TxSource* source) { source_ = source ? source : &idle_; }
  void set_sink(Sink sink) { sink_ = std::move(sink); }

  /// Host write of xaui_sel. With protection enabled this acts as a manual
  /// switch command; the selector keeps monitoring from the new active.
  void select_active(unsigned sel);
  unsigned active() const { return protection_.active; }

  /// Throws std::invalid_argument if the target is out of range or the
  /// window overlaps another fault on the same target.
  void inject_fault(const FaultSpec& spec);

  std::optional<std::uint16_t> lmpi_access(const LmpiPort& port);
  /// Runs the access at the start of the given tick; reads are logged.
  void schedule_lmpi(std::uint64_t tick, const LmpiPort& port);
  const std::vector<LmpiRead>& lmpi_reads() const { return lmpi_reads_; }

  InstanceStatus status(unsigned instance) const;
  bool ready() const { return controller_.status().offset_cancel_done; }
  bool link_up() const { return ready() && status(protection_.active).healthy(); }

  const TickOutput& last_output() const { return last_; }
  const std::vector<Event>& events() const { return events_; }
  const ProtectionState& protection() const { return protection_; }
  ReconfigController& controller() { return controller_; }
  const ReconfigController& controller() const { return controller_; }
  LmpiRegisters& registers() { return lmpi_; }
  XauiInstance& instance(unsigned i) { return instances_.at(i); }
  const XauiInstance& instance(unsigned i) const { return instances_.at(i); }
  const FrameMonitor& frame_monitor() const { return monitor_; }

 private:
  void tick_once();
  void apply_faults();
  void refresh_ber();
  void reset_datapath();
  LinkStatusView link_view() const;

  SystemConfig cfg_;
  IdleSource idle_;
  TxSource* source_;
  Sink sink_;
  ReconfigController controller_;
  LmpiRegisters lmpi_;
  std::array<XauiInstance, kInstances> instances_;
  ProtectionState protection_;
  std::vector<FaultSpec> faults_;
  std::array<std::optional<double>, kInstances> ber_override_{};
  std::vector<std::pair<std::uint64_t, LmpiPort>> lmpi_schedule_;
  std::size_t lmpi_next_ = 0;
  std::vector<LmpiRead> lmpi_reads_;
  std::vector<Event> events_;
  FrameMonitor monitor_;
  TickOutput last_{};
  std::uint64_t settings_generation_ = ~0ull;
  bool ber_dirty_ = true;
  std::uint64_t tick_ = 0;
};

}  // namespace xaui

#endif  // XAUI_LINK_HPP
