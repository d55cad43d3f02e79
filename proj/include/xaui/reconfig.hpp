// Dynamic reconfiguration controller and the LMPI register interface.
//
// The controller owns the active analog settings of every transceiver
// channel. Hosts stage raw register values, then strobe write_all to validate
// and apply them to one channel, or strobe read to fetch a channel's active
// settings. Every transaction, and the post-reset offset cancellation, holds
// reconfig_busy for a fixed number of ticks.

#ifndef XAUI_RECONFIG_HPP
#define XAUI_RECONFIG_HPP

#include <cstdint>
#include <optional>
#include <vector>

#include "xaui/pma.hpp"

namespace xaui {

enum class ReconfigField : std::uint8_t { tx_vodctrl, tx_preemp, rx_eqctrl, rx_eqdcgain, rx_tx_duplex_sel };

/// Register width in bits.
unsigned field_width(ReconfigField f);

/// Raw register value to setting index, or nullopt for an N/A encoding.
/// eqdcgain indices are 0/1/2 for 0/3/6 dB; duplex_sel indices follow Duplex.
std::optional<std::uint8_t> validate_setting(ReconfigField f, std::uint16_t raw);

/// Inverse of validate_setting for a legal index.
std::uint16_t encode_setting(ReconfigField f, std::uint8_t index);

enum class Duplex : std::uint8_t { both = 0, rx = 1, tx = 2 };

/// Host-staged raw register values. Nothing is checked until write_all.
struct StagedRegisters {
  std::uint16_t tx_vodctrl = 4;
  std::uint16_t tx_preemp = 0;
  std::uint16_t rx_eqctrl = 0;
  std::uint16_t rx_eqdcgain = 0;
  std::uint16_t rx_tx_duplex_sel = 0;
  std::uint16_t channel_address = 0;
};

struct ControllerStatus {
  bool reconfig_busy = false;
  bool reconfig_error = false;
  bool offset_cancel_done = false;
};

enum class TxnResult : std::uint8_t { accepted, rejected_busy, rejected_illegal, rejected_address };

class ReconfigController {
 public:
  static constexpr unsigned kWriteTicks = 32;
  static constexpr unsigned kReadTicks = 32;
  static constexpr unsigned kOffsetCancelTicksPerChannel = 256;

  explicit ReconfigController(unsigned channels = 8);

  /// Reset deassertion: restores power-on settings and starts offset
  /// cancellation on every receiver channel in turn.
  void reset();
  void tick();

  TxnResult write_all(const StagedRegisters& staged);
  TxnResult read(unsigned channel);
  /// Marks an unsupported operation seen outside a transaction.
  void raise_error() { error_ = true; }

  /// Result of the last completed read transaction.
  std::optional<AnalogSettings> readback() const { return readback_; }
  /// Returns and clears a read result that has not been collected yet.
  std::optional<AnalogSettings> take_fresh_readback();

  const AnalogSettings& active(unsigned channel) const { return active_.at(channel); }
  ControllerStatus status() const;
  unsigned channels() const { return static_cast<unsigned>(active_.size()); }
  /// Increments whenever any active setting changes.
  std::uint64_t generation() const { return generation_; }
  /// Channel under offset cancellation, if any.
  std::optional<unsigned> offset_cancel_channel() const;
  std::uint64_t ticks() const { return ticks_; }

 private:
  enum class Kind : std::uint8_t { none, write, read };
  struct Pending {  // reconfig_to_xcvr / reconfig_from_xcvr message in flight
    Kind kind = Kind::none;
    unsigned channel = 0;
    AnalogSettings settings;
    Duplex duplex = Duplex::both;
    unsigned remaining = 0;
  };

  TxnResult begin(Kind kind, unsigned channel);

  std::vector<AnalogSettings> active_;
  Pending pending_;
  unsigned offset_cancel_remaining_ = 0;
  bool offset_cancel_done_ = false;
  bool error_ = false;
  std::optional<AnalogSettings> readback_;
  bool readback_fresh_ = false;
  std::uint64_t generation_ = 0;
  std::uint64_t ticks_ = 0;
};

// ---------------------------------------------------------------------------
// LMPI register map

namespace lmpi {
inline constexpr std::uint8_t CTRL = 0x00;
inline constexpr std::uint8_t RECONFIG_CMD = 0x04;
inline constexpr std::uint8_t TX_VODCTRL = 0x08;
inline constexpr std::uint8_t TX_PREEMP = 0x0A;
inline constexpr std::uint8_t RX_EQCTRL = 0x0C;
inline constexpr std::uint8_t RX_EQDCGAIN = 0x0E;
inline constexpr std::uint8_t STATUS = 0x10;
inline constexpr std::uint8_t LOST_PKT_CNT = 0x20;

inline constexpr std::uint16_t kUnmapped = 0xDEAD;

namespace ctrl {
inline constexpr std::uint16_t xaui_sel = 1u << 0;
inline constexpr std::uint16_t xgmii_loop = 1u << 1;
inline constexpr std::uint16_t soft_reset = 1u << 2;
}  // namespace ctrl

namespace cmd {
inline constexpr std::uint16_t write_all = 1u << 0;
inline constexpr std::uint16_t read = 1u << 1;
inline constexpr unsigned duplex_shift = 2;
inline constexpr unsigned channel_shift = 4;
}  // namespace cmd

namespace status {
inline constexpr std::uint16_t busy = 1u << 0;
inline constexpr std::uint16_t error = 1u << 1;
inline constexpr std::uint16_t xaui0_synced = 1u << 2;
inline constexpr std::uint16_t xaui1_synced = 1u << 3;
inline constexpr std::uint16_t active_channel = 1u << 4;
inline constexpr std::uint16_t offset_cancel_done = 1u << 5;
}  // namespace status
}  // namespace lmpi

struct LmpiPort {
  bool cs = true;
  std::uint8_t addr = 0;
  std::uint16_t wdata = 0;
  bool wen = false;
  bool ren = false;

  static LmpiPort write(std::uint8_t addr, std::uint16_t value) { return {true, addr, value, true, false}; }
  static LmpiPort read(std::uint8_t addr) { return {true, addr, 0, false, true}; }
};

/// Link state the STATUS register reports.
struct LinkStatusView {
  bool xaui0_synced = false;
  bool xaui1_synced = false;
  unsigned active = 0;
};

class LmpiRegisters {
 public:
  explicit LmpiRegisters(ReconfigController& controller) : ctl_(&controller) {}

  /// One bus cycle. Reads return rdata; writes and deselected cycles return
  /// nullopt. Unmapped reads return 0xDEAD and raise reconfig_error.
  std::optional<std::uint16_t> access(const LmpiPort& port, const LinkStatusView& link);

  /// Advances the controller one tick and latches completed reads into the
  /// staged registers.
  void tick();

  unsigned xaui_sel() const { return (ctrl_ & lmpi::ctrl::xaui_sel) ? 1u : 0u; }
  void set_xaui_sel(unsigned sel);
  bool xgmii_loop() const { return (ctrl_ & lmpi::ctrl::xgmii_loop) != 0; }
  void set_xgmii_loop(bool on);
  /// True once per soft_reset write.
  bool take_soft_reset();

  void count_lost(std::uint32_t n) { lost_ += n; }
  const StagedRegisters& staged() const { return staged_; }
  ReconfigController& controller() { return *ctl_; }

 private:
  std::optional<std::uint16_t> read_reg(std::uint8_t addr, const LinkStatusView& link);
  void write_reg(std::uint8_t addr, std::uint16_t value);

  ReconfigController* ctl_;
  StagedRegisters staged_;
  std::uint16_t ctrl_ = 0;
  bool soft_reset_pending_ = false;
  std::uint32_t lost_ = 0;
};

}  // namespace xaui

#endif  // XAUI_RECONFIG_HPP
