// Traffic generation, end-to-end checking, trace files, scenario runner and
// the analog settings sweep.

#ifndef XAUI_HARNESS_HPP
#define XAUI_HARNESS_HPP

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "xaui/link.hpp"

namespace xaui {

// ---------------------------------------------------------------------------
// Traffic

struct TrafficConfig {
  static constexpr std::uint32_t kMinLength = 64;
  static constexpr std::uint32_t kMaxLength = 0xFFFF;

  std::uint64_t pkt_num = 0;
  std::uint32_t ifg = 1;          // minimum idle columns between frames
  double bandwidth = 100.0;       // percent of line rate
  std::uint32_t len_min = 64;
  std::uint32_t len_max = 1518;
  std::uint64_t seed = 1;
  std::uint64_t first_seq = 0;
  /// When non-empty, replaces the random lengths; pkt_num is ignored.
  std::vector<std::uint32_t> lengths;

  /// Throws std::invalid_argument.
  void validate() const;
  std::uint64_t packet_count() const { return lengths.empty() ? pkt_num : lengths.size(); }
};

/// Ticks to nanoseconds at 3.2 ns per tick, truncated.
constexpr std::uint64_t ticks_to_ns(std::uint64_t ticks) { return ticks * 16 / 5; }

struct PacketRecord {
  std::uint64_t time_ns = 0;
  std::uint64_t seq = 0;
  std::uint64_t length = 0;

  friend bool operator==(const PacketRecord&, const PacketRecord&) = default;
};

struct Packet {
  std::uint64_t seq = 0;
  std::vector<std::uint8_t> payload;
  std::uint64_t first_column = 0;
};

struct TrafficPlan {
  std::vector<XgmiiColumn> columns;
  std::vector<Packet> packets;
  /// Nominal records, timed by column index from the start of the stream.
  std::vector<PacketRecord> records;
};

/// Each frame starts with /S/ in octet 0 of a column, carries its payload and
/// ends with /T/, padded with idles to the column boundary. Idle columns
/// follow so the long-run load matches the bandwidth, never fewer than ifg.
TrafficPlan generate_packets(const TrafficConfig& cfg);

/// Replays a plan into every instance from a start tick. Before the start
/// and after the last column the source sends idles. Send times are stamped
/// from instance 0.
class TrafficSource final : public TxSource {
 public:
  explicit TrafficSource(const TrafficPlan& plan, std::optional<std::uint64_t> start_tick = std::nullopt);

  XgmiiWord pull(unsigned instance, std::uint64_t tick) override;

  void set_start(std::uint64_t tick) { start_ = tick; }
  std::optional<std::uint64_t> start() const { return start_; }
  bool done(unsigned instance) const;
  /// Send records, one per packet already handed to instance 0.
  const std::vector<PacketRecord>& sent() const { return sent_; }

 private:
  const TrafficPlan* plan_;
  std::optional<std::uint64_t> start_;
  std::array<std::uint64_t, kInstances> word_{};
  std::size_t next_packet_ = 0;
  std::vector<PacketRecord> sent_;
};

// ---------------------------------------------------------------------------
// Checking

struct CheckReport {
  std::uint64_t sent = 0;
  std::uint64_t received = 0;
  std::uint64_t lost = 0;
  std::uint64_t length_mismatches = 0;
  std::uint64_t payload_mismatches = 0;
  std::uint64_t out_of_order = 0;
  std::uint64_t corrupted = 0;  // frames carrying /E/ or cut short by a control
  std::uint64_t truncated = 0;  // frame still open when the run ended
  std::uint64_t unexpected = 0; // frames with no packet left to match
  std::vector<std::int64_t> latency_ns;

  bool mismatches() const { return length_mismatches + payload_mismatches > 0; }
  bool clean() const { return lost == 0 && !mismatches(); }
};

/// Parses frames from the received XGMII stream and matches them to the
/// expected packets in order. A frame that arrives intact is matched by
/// content, skipping packets that never arrived; damaged frames are matched
/// by position.
class PacketChecker {
 public:
  explicit PacketChecker(const std::vector<Packet>& expected);

  void observe(std::uint64_t tick, const XgmiiWord& w);
  /// Closes the stream. Latencies are taken against the send records by seq.
  CheckReport finish(const std::vector<PacketRecord>& sent);
  /// Receive records of intact, matched packets in arrival order.
  const std::vector<PacketRecord>& received() const { return chk_; }

 private:
  void end_frame(bool terminated);
  void match_intact();
  void match_damaged();

  const std::vector<Packet>* expected_;
  std::vector<bool> matched_;
  std::size_t cursor_ = 0;
  std::optional<std::uint64_t> last_seq_;
  bool in_frame_ = false;
  bool damaged_ = false;
  std::uint64_t frame_tick_ = 0;
  std::vector<std::uint8_t> bytes_;
  std::vector<PacketRecord> chk_;
  CheckReport report_;
  bool finished_ = false;
};

/// Runs expected packets through the checker's rules against an observed
/// column stream. Convenience for tests.
CheckReport check_packets(const TrafficPlan& plan, const std::vector<XgmiiWord>& observed,
                          std::vector<PacketRecord>* chk = nullptr);

// ---------------------------------------------------------------------------
// Trace files

enum class TraceKind : std::uint8_t { gen, chk };

struct TraceParseError : std::runtime_error {
  TraceParseError(std::size_t line, const std::string& what);
  std::size_t line;
};

const char* trace_header(TraceKind kind);
std::string format_record(const PacketRecord& r);
void write_trace(std::ostream& os, TraceKind kind, const std::vector<PacketRecord>& records);
void write_trace(const std::filesystem::path& path, TraceKind kind, const std::vector<PacketRecord>& records);
/// Accepts either header. Throws TraceParseError with a 1-based line number.
std::vector<PacketRecord> parse_trace(std::istream& is, TraceKind* kind = nullptr);
std::vector<PacketRecord> parse_trace(const std::filesystem::path& path, TraceKind* kind = nullptr);

struct TraceDiff {
  std::size_t count_a = 0;
  std::size_t count_b = 0;
  std::vector<std::string> differences;
  std::vector<std::int64_t> time_delta_ns;  // b - a for each shared seq

  bool same() const { return differences.empty(); }
};

/// Compares two traces by sequence number and length. Times only feed the
/// delta list.
TraceDiff trace_diff(const std::vector<PacketRecord>& a, const std::vector<PacketRecord>& b);

// ---------------------------------------------------------------------------
// Scenarios

struct ScenarioError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct LmpiAction {
  std::uint64_t tick = 0;
  bool write = true;
  std::uint8_t addr = 0;
  std::uint16_t value = 0;
};

struct ScheduledFault {
  FaultSpec spec;
  /// start_tick counts from the traffic start instead of tick 0.
  bool relative_to_traffic = false;
};

struct Scenario {
  std::uint64_t seed = 1;
  std::uint64_t ticks = 0;  // 0: run until the traffic has drained
  bool protection = true;
  std::uint32_t holdoff_ticks = ProtectionState::kDefaultHoldoff;
  bool xgmii_loop = false;
  bool defaults = true;  // write power-on settings to every channel after calibration
  TrafficConfig traffic;
  std::optional<std::uint64_t> start_tick;
  std::uint64_t guard_ticks = 64;
  std::array<ChannelImpairment, kInstances> instances{};
  std::vector<ScheduledFault> faults;
  std::vector<LmpiAction> lmpi;
};

/// Throws ScenarioError on malformed input.
Scenario parse_scenario(const std::string& json_text);
Scenario load_scenario(const std::filesystem::path& path);

struct RunOptions {
  std::optional<std::uint64_t> seed;
  std::optional<std::uint64_t> ticks;
  std::optional<std::uint64_t> loss_budget;
  /// Artifacts are written here when set.
  std::optional<std::filesystem::path> out_dir;
};

struct RunResult {
  CheckReport report;
  std::vector<PacketRecord> gen;
  std::vector<PacketRecord> chk;
  std::vector<Event> events;
  std::vector<LmpiRead> lmpi_reads;
  std::optional<std::uint64_t> link_up_tick;
  std::uint64_t traffic_start = 0;
  std::uint64_t ticks = 0;
  std::uint64_t rm_deletions = 0;  // XAUI0 rate matcher
  std::uint64_t rm_insertions = 0;
  int exit_code = 1;
};

/// Builds the system, runs it and, when an output directory is given, writes
/// eth_gen0.dat, eth_chk0.dat, events.log and summary.txt.
RunResult run_scenario(const Scenario& sc, const RunOptions& opt = {});

std::string format_summary(const RunResult& r);
void write_events(std::ostream& os, const std::vector<Event>& events);

// ---------------------------------------------------------------------------
// Settings sweep

struct RawSettings {
  std::uint16_t vod = 4;
  std::uint16_t preemp = 0;
  std::uint16_t eqctrl = 0;
  std::uint16_t eqdcgain = 0;
};

struct SweepGrid {
  std::vector<RawSettings> settings;
  std::vector<double> loss_db;
  std::uint64_t packets = 200;
  std::uint32_t length = 256;
  std::uint64_t seed = 1;
};

struct SweepRow {
  RawSettings raw;
  double loss_db = 0.0;
  bool illegal = false;
  double margin = 0.0;
  double model_ber = 0.0;
  std::uint64_t frames = 0;
  std::uint64_t frame_errors = 0;
  std::uint64_t bits = 0;
  std::uint64_t flips = 0;

  double fer() const { return frames ? static_cast<double>(frame_errors) / static_cast<double>(frames) : 0.0; }
};

/// JSON grid: per-field raw value lists (cartesian product) or an explicit
/// "points" list, plus loss_db, packets, length and seed.
SweepGrid parse_sweep_grid(const std::string& json_text);

/// Each point programs XAUI0's channels through the register interface and
/// runs a burst. Points whose raw values the controller rejects are marked
/// illegal and not run.
std::vector<SweepRow> ber_sweep(const SweepGrid& grid);
SweepRow sweep_point(const RawSettings& raw, double loss_db, const SweepGrid& grid);
void write_sweep(std::ostream& os, const std::vector<SweepRow>& rows);

}  // namespace xaui

#endif  // XAUI_HARNESS_HPP
