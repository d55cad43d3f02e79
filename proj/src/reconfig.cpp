#include "xaui/reconfig.hpp"

#include <algorithm>
#include <array>

namespace xaui {
namespace {

// Raw pre-emphasis encodings, indexed by ALTGX setting.
constexpr std::array<std::uint16_t, 7> kPreempRaw = {0b00000, 0b00001, 0b00101, 0b01001,
                                                     0b01101, 0b10001, 0b10101};

}  // namespace

unsigned field_width(ReconfigField f) {
  switch (f) {
    case ReconfigField::tx_vodctrl:
      return 3;
    case ReconfigField::tx_preemp:
      return 5;
    case ReconfigField::rx_eqctrl:
    case ReconfigField::rx_eqdcgain:
    case ReconfigField::rx_tx_duplex_sel:
      return 2;
  }
  return 0;
}

std::optional<std::uint8_t> validate_setting(ReconfigField f, std::uint16_t raw) {
  if (raw >= (1u << field_width(f))) return std::nullopt;
  switch (f) {
    case ReconfigField::tx_vodctrl:
      if (raw == 0b011) return std::nullopt;
      return static_cast<std::uint8_t>(raw);
    case ReconfigField::tx_preemp:
      for (std::size_t i = 0; i < kPreempRaw.size(); ++i) {
        if (kPreempRaw[i] == raw) return static_cast<std::uint8_t>(i);
      }
      return std::nullopt;
    case ReconfigField::rx_eqctrl:
      return static_cast<std::uint8_t>(raw);
    case ReconfigField::rx_eqdcgain:
    case ReconfigField::rx_tx_duplex_sel:
      if (raw == 0b11) return std::nullopt;
      return static_cast<std::uint8_t>(raw);
  }
  return std::nullopt;
}

std::uint16_t encode_setting(ReconfigField f, std::uint8_t index) {
  if (f == ReconfigField::tx_preemp) return kPreempRaw.at(index);
  return index;
}

// --- controller -------------------------------------------------------------

ReconfigController::ReconfigController(unsigned channels) : active_(channels, AnalogSettings::defaults()) {}

void ReconfigController::reset() {
  std::fill(active_.begin(), active_.end(), AnalogSettings::defaults());
  ++generation_;
  pending_ = {};
  error_ = false;
  readback_.reset();
  readback_fresh_ = false;
  offset_cancel_done_ = false;
  offset_cancel_remaining_ = kOffsetCancelTicksPerChannel * channels();
}

std::optional<unsigned> ReconfigController::offset_cancel_channel() const {
  if (offset_cancel_remaining_ == 0) return std::nullopt;
  const unsigned total = kOffsetCancelTicksPerChannel * channels();
  return (total - offset_cancel_remaining_) / kOffsetCancelTicksPerChannel;
}

ControllerStatus ReconfigController::status() const {
  return {offset_cancel_remaining_ > 0 || pending_.kind != Kind::none, error_, offset_cancel_done_};
}

void ReconfigController::tick() {
  ++ticks_;
  if (offset_cancel_remaining_ > 0) {
    if (--offset_cancel_remaining_ == 0) offset_cancel_done_ = true;
    return;
  }
  if (pending_.kind == Kind::none) return;
  if (--pending_.remaining > 0) return;

  AnalogSettings& a = active_[pending_.channel];
  if (pending_.kind == Kind::write) {
    const AnalogSettings& s = pending_.settings;
    if (pending_.duplex != Duplex::rx) {
      a.vod = s.vod;
      a.preemp = s.preemp;
    }
    if (pending_.duplex != Duplex::tx) {
      a.eqctrl = s.eqctrl;
      a.eqdcgain = s.eqdcgain;
    }
    ++generation_;
  } else {
    readback_ = a;
    readback_fresh_ = true;
  }
  pending_ = {};
}

TxnResult ReconfigController::begin(Kind kind, unsigned channel) {
  if (status().reconfig_busy) {
    error_ = true;
    return TxnResult::rejected_busy;
  }
  if (channel >= channels()) {
    error_ = true;
    return TxnResult::rejected_address;
  }
  error_ = false;
  pending_.kind = kind;
  pending_.channel = channel;
  pending_.remaining = kind == Kind::write ? kWriteTicks : kReadTicks;
  return TxnResult::accepted;
}

TxnResult ReconfigController::write_all(const StagedRegisters& staged) {
  if (status().reconfig_busy) {
    error_ = true;
    return TxnResult::rejected_busy;
  }
  const auto vod = validate_setting(ReconfigField::tx_vodctrl, staged.tx_vodctrl);
  const auto pre = validate_setting(ReconfigField::tx_preemp, staged.tx_preemp);
  const auto eq = validate_setting(ReconfigField::rx_eqctrl, staged.rx_eqctrl);
  const auto dc = validate_setting(ReconfigField::rx_eqdcgain, staged.rx_eqdcgain);
  const auto duplex = validate_setting(ReconfigField::rx_tx_duplex_sel, staged.rx_tx_duplex_sel);
  if (!vod || !pre || !eq || !dc || !duplex) {
    error_ = true;
    return TxnResult::rejected_illegal;
  }
  const TxnResult r = begin(Kind::write, staged.channel_address);
  if (r != TxnResult::accepted) return r;
  pending_.settings = {*vod, *pre, *eq, *dc};
  pending_.duplex = static_cast<Duplex>(*duplex);
  return r;
}

TxnResult ReconfigController::read(unsigned channel) { return begin(Kind::read, channel); }

std::optional<AnalogSettings> ReconfigController::take_fresh_readback() {
  if (!readback_fresh_) return std::nullopt;
  readback_fresh_ = false;
  return readback_;
}

// --- LMPI -------------------------------------------------------------------

void LmpiRegisters::tick() {
  ctl_->tick();
  if (auto rb = ctl_->take_fresh_readback()) {
    staged_.tx_vodctrl = encode_setting(ReconfigField::tx_vodctrl, rb->vod);
    staged_.tx_preemp = encode_setting(ReconfigField::tx_preemp, rb->preemp);
    staged_.rx_eqctrl = encode_setting(ReconfigField::rx_eqctrl, rb->eqctrl);
    staged_.rx_eqdcgain = encode_setting(ReconfigField::rx_eqdcgain, rb->eqdcgain);
  }
}

void LmpiRegisters::set_xaui_sel(unsigned sel) {
  ctrl_ = static_cast<std::uint16_t>(sel ? (ctrl_ | lmpi::ctrl::xaui_sel) : (ctrl_ & ~lmpi::ctrl::xaui_sel));
}

void LmpiRegisters::set_xgmii_loop(bool on) {
  ctrl_ = static_cast<std::uint16_t>(on ? (ctrl_ | lmpi::ctrl::xgmii_loop) : (ctrl_ & ~lmpi::ctrl::xgmii_loop));
}

bool LmpiRegisters::take_soft_reset() {
  const bool r = soft_reset_pending_;
  soft_reset_pending_ = false;
  return r;
}

std::optional<std::uint16_t> LmpiRegisters::access(const LmpiPort& port, const LinkStatusView& link) {
  if (!port.cs) return std::nullopt;
  if (port.wen == port.ren) {
    // Neither or both strobes: not a bus cycle the interface supports.
    if (port.wen) ctl_->raise_error();
    return std::nullopt;
  }
  if (port.ren) return read_reg(port.addr, link);
  write_reg(port.addr, port.wdata);
  return std::nullopt;
}

std::optional<std::uint16_t> LmpiRegisters::read_reg(std::uint8_t addr, const LinkStatusView& link) {
  switch (addr) {
    case lmpi::CTRL:
      return static_cast<std::uint16_t>(ctrl_ & ~lmpi::ctrl::soft_reset);
    case lmpi::RECONFIG_CMD:
      return static_cast<std::uint16_t>((staged_.rx_tx_duplex_sel << lmpi::cmd::duplex_shift) |
                                        (staged_.channel_address << lmpi::cmd::channel_shift));
    case lmpi::TX_VODCTRL:
      return staged_.tx_vodctrl;
    case lmpi::TX_PREEMP:
      return staged_.tx_preemp;
    case lmpi::RX_EQCTRL:
      return staged_.rx_eqctrl;
    case lmpi::RX_EQDCGAIN:
      return staged_.rx_eqdcgain;
    case lmpi::STATUS: {
      const ControllerStatus s = ctl_->status();
      std::uint16_t v = 0;
      if (s.reconfig_busy) v |= lmpi::status::busy;
      if (s.reconfig_error) v |= lmpi::status::error;
      if (link.xaui0_synced) v |= lmpi::status::xaui0_synced;
      if (link.xaui1_synced) v |= lmpi::status::xaui1_synced;
      if (link.active != 0) v |= lmpi::status::active_channel;
      if (s.offset_cancel_done) v |= lmpi::status::offset_cancel_done;
      return v;
    }
    case lmpi::LOST_PKT_CNT: {
      const std::uint32_t v = lost_;
      lost_ = 0;
      return static_cast<std::uint16_t>(v > 0xFFFF ? 0xFFFF : v);
    }
    default:
      ctl_->raise_error();
      return lmpi::kUnmapped;
  }
}

void LmpiRegisters::write_reg(std::uint8_t addr, std::uint16_t value) {
  const auto masked = [&](ReconfigField f) {
    return static_cast<std::uint16_t>(value & ((1u << field_width(f)) - 1u));
  };
  switch (addr) {
    case lmpi::CTRL:
      ctrl_ = static_cast<std::uint16_t>(value & (lmpi::ctrl::xaui_sel | lmpi::ctrl::xgmii_loop));
      if (value & lmpi::ctrl::soft_reset) soft_reset_pending_ = true;
      return;
    case lmpi::RECONFIG_CMD:
      staged_.rx_tx_duplex_sel = static_cast<std::uint16_t>((value >> lmpi::cmd::duplex_shift) & 0x3u);
      staged_.channel_address = static_cast<std::uint16_t>((value >> lmpi::cmd::channel_shift) & 0xFu);
      if ((value & lmpi::cmd::write_all) && (value & lmpi::cmd::read)) {
        ctl_->raise_error();
      } else if (value & lmpi::cmd::write_all) {
        ctl_->write_all(staged_);
      } else if (value & lmpi::cmd::read) {
        ctl_->read(staged_.channel_address);
      }
      return;
    case lmpi::TX_VODCTRL:
      staged_.tx_vodctrl = masked(ReconfigField::tx_vodctrl);
      return;
    case lmpi::TX_PREEMP:
      staged_.tx_preemp = masked(ReconfigField::tx_preemp);
      return;
    case lmpi::RX_EQCTRL:
      staged_.rx_eqctrl = masked(ReconfigField::rx_eqctrl);
      return;
    case lmpi::RX_EQDCGAIN:
      staged_.rx_eqdcgain = masked(ReconfigField::rx_eqdcgain);
      return;
    default:
      // Read-only or unmapped.
      ctl_->raise_error();
      return;
  }
}

}  // namespace xaui
