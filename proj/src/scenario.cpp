#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "xaui/harness.hpp"

namespace xaui {
namespace {

using nlohmann::json;

/// Rejects keys outside `allowed` so typos in scenario files fail loudly.
void check_keys(const json& j, const std::string& where, std::initializer_list<const char*> allowed) {
  if (!j.is_object()) throw ScenarioError(where + ": expected an object");
  const std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& [k, v] : j.items()) {
    if (!ok.count(k)) throw ScenarioError(where + ": unknown key '" + k + "'");
  }
}

/// Numbers may be written as JSON integers or as strings such as "0x588".
std::uint64_t get_uint(const json& v, const std::string& where) {
  if (v.is_number_unsigned()) return v.get<std::uint64_t>();
  if (v.is_number_integer()) {
    const auto i = v.get<std::int64_t>();
    if (i < 0) throw ScenarioError(where + ": must be non-negative");
    return static_cast<std::uint64_t>(i);
  }
  if (v.is_string()) {
    const std::string s = v.get<std::string>();
    std::size_t used = 0;
    std::uint64_t out = 0;
    try {
      out = std::stoull(s, &used, 0);
    } catch (const std::exception&) {
      used = 0;
    }
    if (s.empty() || used != s.size() || s[0] == '-') throw ScenarioError(where + ": bad number '" + s + "'");
    return out;
  }
  throw ScenarioError(where + ": expected an unsigned number");
}

template <typename T>
T get_uint_as(const json& v, const std::string& where, std::uint64_t max) {
  const std::uint64_t u = get_uint(v, where);
  if (u > max) throw ScenarioError(where + ": value " + std::to_string(u) + " too large");
  return static_cast<T>(u);
}

double get_double(const json& v, const std::string& where) {
  if (!v.is_number()) throw ScenarioError(where + ": expected a number");
  return v.get<double>();
}

bool get_bool(const json& v, const std::string& where) {
  if (!v.is_boolean()) throw ScenarioError(where + ": expected true or false");
  return v.get<bool>();
}

TrafficConfig parse_traffic(const json& j, Scenario& sc) {
  check_keys(j, "traffic",
             {"pkt_num", "ifg", "bandwidth", "len_min", "len_max", "seed", "first_seq", "lengths", "start_tick",
              "guard_ticks"});
  TrafficConfig t;
  t.seed = 0;
  if (j.contains("pkt_num")) t.pkt_num = get_uint(j["pkt_num"], "traffic.pkt_num");
  if (j.contains("ifg")) t.ifg = get_uint_as<std::uint32_t>(j["ifg"], "traffic.ifg", 0xFFFF);
  if (j.contains("bandwidth")) t.bandwidth = get_double(j["bandwidth"], "traffic.bandwidth");
  if (j.contains("len_min")) t.len_min = get_uint_as<std::uint32_t>(j["len_min"], "traffic.len_min", 0xFFFFFFFF);
  if (j.contains("len_max")) t.len_max = get_uint_as<std::uint32_t>(j["len_max"], "traffic.len_max", 0xFFFFFFFF);
  if (j.contains("seed")) t.seed = get_uint(j["seed"], "traffic.seed");
  if (j.contains("first_seq")) t.first_seq = get_uint(j["first_seq"], "traffic.first_seq");
  if (j.contains("lengths")) {
    if (!j["lengths"].is_array()) throw ScenarioError("traffic.lengths: expected an array");
    for (const auto& v : j["lengths"]) t.lengths.push_back(get_uint_as<std::uint32_t>(v, "traffic.lengths", 0xFFFFFFFF));
  }
  if (j.contains("start_tick")) sc.start_tick = get_uint(j["start_tick"], "traffic.start_tick");
  if (j.contains("guard_ticks")) sc.guard_ticks = get_uint(j["guard_ticks"], "traffic.guard_ticks");
  try {
    t.validate();
  } catch (const std::invalid_argument& e) {
    throw ScenarioError(std::string("traffic: ") + e.what());
  }
  return t;
}

ChannelImpairment parse_instance(const json& j, const std::string& where) {
  check_keys(j, where, {"skew_ui", "ppm", "loss_db", "noise_seed"});
  ChannelImpairment ch;
  ch.noise_seed = 0;
  if (j.contains("skew_ui")) {
    const json& s = j["skew_ui"];
    if (!s.is_array() || s.size() != kLanes) throw ScenarioError(where + ".skew_ui: expected four values");
    for (std::size_t k = 0; k < kLanes; ++k) ch.skew_ui[k] = get_uint_as<std::uint32_t>(s[k], where + ".skew_ui", 1u << 20);
  }
  if (j.contains("ppm")) {
    if (!j["ppm"].is_number_integer()) throw ScenarioError(where + ".ppm: expected an integer");
    ch.ppm_offset = j["ppm"].get<std::int32_t>();
  }
  if (j.contains("loss_db")) ch.loss_db = get_double(j["loss_db"], where + ".loss_db");
  if (j.contains("noise_seed")) ch.noise_seed = get_uint(j["noise_seed"], where + ".noise_seed");
  try {
    ch.validate();
  } catch (const std::invalid_argument& e) {
    throw ScenarioError(where + ": " + e.what());
  }
  return ch;
}

ScheduledFault parse_fault(const json& j, const std::string& where) {
  check_keys(j, where, {"target", "kind", "lane", "ber", "skew_ui", "start_tick", "after_traffic_start", "duration"});
  ScheduledFault f;
  if (!j.contains("kind") || !j["kind"].is_string()) throw ScenarioError(where + ": missing kind");
  try {
    f.spec.kind = fault_kind_from_string(j["kind"].get<std::string>());
  } catch (const std::invalid_argument& e) {
    throw ScenarioError(where + ": " + e.what());
  }
  if (j.contains("target")) f.spec.target = get_uint_as<unsigned>(j["target"], where + ".target", kInstances - 1);
  if (j.contains("lane")) f.spec.lane = get_uint_as<unsigned>(j["lane"], where + ".lane", kLanes - 1);
  if (j.contains("ber")) {
    f.spec.ber = get_double(j["ber"], where + ".ber");
    if (f.spec.ber < 0.0 || f.spec.ber > 1.0) throw ScenarioError(where + ".ber: outside [0, 1]");
  }
  if (j.contains("skew_ui")) f.spec.skew_ui = get_uint_as<std::uint32_t>(j["skew_ui"], where + ".skew_ui", 1u << 20);
  const bool abs = j.contains("start_tick");
  const bool rel = j.contains("after_traffic_start");
  if (abs == rel) throw ScenarioError(where + ": give exactly one of start_tick, after_traffic_start");
  f.relative_to_traffic = rel;
  f.spec.start_tick = get_uint(abs ? j["start_tick"] : j["after_traffic_start"], where + ".start");
  if (!j.contains("duration")) throw ScenarioError(where + ": missing duration");
  f.spec.duration = get_uint(j["duration"], where + ".duration");
  return f;
}

LmpiAction parse_lmpi(const json& j, const std::string& where) {
  check_keys(j, where, {"tick", "op", "addr", "value"});
  LmpiAction a;
  if (!j.contains("tick") || !j.contains("op") || !j.contains("addr")) {
    throw ScenarioError(where + ": tick, op and addr are required");
  }
  a.tick = get_uint(j["tick"], where + ".tick");
  const std::string op = j["op"].is_string() ? j["op"].get<std::string>() : "";
  if (op != "write" && op != "read") throw ScenarioError(where + ".op: expected \"write\" or \"read\"");
  a.write = op == "write";
  a.addr = get_uint_as<std::uint8_t>(j["addr"], where + ".addr", 0xFF);
  if (a.write) {
    if (!j.contains("value")) throw ScenarioError(where + ": write needs a value");
    a.value = get_uint_as<std::uint16_t>(j["value"], where + ".value", 0xFFFF);
  }
  return a;
}

std::uint64_t mix(std::uint64_t x) {
  // splitmix64 finaliser
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

constexpr std::uint64_t kDefaultsSpacing = ReconfigController::kWriteTicks + 8;
constexpr std::uint64_t kLinkUpLimit = 200'000;
constexpr std::uint64_t kDrainTicks = 1024;

std::uint64_t offset_cancel_ticks() {
  return static_cast<std::uint64_t>(ReconfigController::kOffsetCancelTicksPerChannel) * kInstances * kLanes;
}

}  // namespace

Scenario parse_scenario(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ScenarioError(std::string("scenario is not valid JSON: ") + e.what());
  }
  check_keys(j, "scenario",
             {"seed", "ticks", "protection", "holdoff_ticks", "xgmii_loop", "defaults", "traffic", "instances", "faults",
              "lmpi", "description"});
  Scenario sc;
  if (j.contains("seed")) sc.seed = get_uint(j["seed"], "seed");
  if (j.contains("ticks")) sc.ticks = get_uint(j["ticks"], "ticks");
  if (j.contains("protection")) sc.protection = get_bool(j["protection"], "protection");
  if (j.contains("holdoff_ticks")) sc.holdoff_ticks = get_uint_as<std::uint32_t>(j["holdoff_ticks"], "holdoff_ticks", 1u << 30);
  if (j.contains("xgmii_loop")) sc.xgmii_loop = get_bool(j["xgmii_loop"], "xgmii_loop");
  if (j.contains("defaults")) sc.defaults = get_bool(j["defaults"], "defaults");
  if (j.contains("traffic")) {
    sc.traffic = parse_traffic(j["traffic"], sc);
  } else {
    sc.traffic.seed = 0;
  }
  for (auto& ch : sc.instances) ch.noise_seed = 0;
  if (j.contains("instances")) {
    const json& a = j["instances"];
    if (!a.is_array() || a.size() > kInstances) throw ScenarioError("instances: expected at most two entries");
    for (std::size_t i = 0; i < a.size(); ++i) sc.instances[i] = parse_instance(a[i], "instances[" + std::to_string(i) + "]");
  }
  if (j.contains("faults")) {
    if (!j["faults"].is_array()) throw ScenarioError("faults: expected an array");
    for (std::size_t i = 0; i < j["faults"].size(); ++i) {
      sc.faults.push_back(parse_fault(j["faults"][i], "faults[" + std::to_string(i) + "]"));
    }
  }
  if (j.contains("lmpi")) {
    if (!j["lmpi"].is_array()) throw ScenarioError("lmpi: expected an array");
    for (std::size_t i = 0; i < j["lmpi"].size(); ++i) {
      sc.lmpi.push_back(parse_lmpi(j["lmpi"][i], "lmpi[" + std::to_string(i) + "]"));
    }
  }
  return sc;
}

Scenario load_scenario(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw ScenarioError("cannot open scenario " + path.string());
  std::ostringstream ss;
  ss << is.rdbuf();
  return parse_scenario(ss.str());
}

void write_events(std::ostream& os, const std::vector<Event>& events) {
  os << "tick\tevent\tfrom\tto\tcause\n";
  for (const auto& e : events) os << format_event(e) << '\n';
}

std::string format_summary(const RunResult& r) {
  std::ostringstream os;
  const CheckReport& c = r.report;
  os << "sent\t" << c.sent << '\n'
     << "received\t" << c.received << '\n'
     << "lost\t" << c.lost << '\n'
     << "length_mismatches\t" << c.length_mismatches << '\n'
     << "payload_mismatches\t" << c.payload_mismatches << '\n'
     << "out_of_order\t" << c.out_of_order << '\n'
     << "corrupted\t" << c.corrupted << '\n'
     << "truncated\t" << c.truncated << '\n'
     << "unexpected\t" << c.unexpected << '\n';
  if (!c.latency_ns.empty()) {
    const auto [lo, hi] = std::minmax_element(c.latency_ns.begin(), c.latency_ns.end());
    os << "latency_min_ns\t" << *lo << '\n' << "latency_max_ns\t" << *hi << '\n';
  }
  const auto switches = std::count_if(r.events.begin(), r.events.end(),
                                      [](const Event& e) { return e.kind == EventKind::switch_over; });
  os << "switches\t" << switches << '\n'
     << "link_up_tick\t" << (r.link_up_tick ? std::to_string(*r.link_up_tick) : "-") << '\n'
     << "traffic_start_tick\t" << r.traffic_start << '\n'
     << "ticks\t" << r.ticks << '\n'
     << "rate_match_deletions\t" << r.rm_deletions << '\n'
     << "rate_match_insertions\t" << r.rm_insertions << '\n';
  for (const auto& rd : r.lmpi_reads) {
    os << "lmpi_read\t" << rd.tick << '\t' << static_cast<unsigned>(rd.addr) << '\t' << rd.value << '\n';
  }
  os << "status\t" << (r.exit_code == 0 ? "PASS" : "FAIL") << '\n';
  return os.str();
}

RunResult run_scenario(const Scenario& scenario, const RunOptions& opt) {
  Scenario sc = scenario;
  if (opt.seed) sc.seed = *opt.seed;
  if (opt.ticks) sc.ticks = *opt.ticks;
  if (sc.traffic.seed == 0) sc.traffic.seed = mix(sc.seed);
  for (std::size_t i = 0; i < kInstances; ++i) {
    if (sc.instances[i].noise_seed == 0) sc.instances[i].noise_seed = mix(sc.seed ^ (0x100u + i));
  }

  const TrafficPlan plan = generate_packets(sc.traffic);
  TrafficSource source(plan, sc.start_tick);

  SystemConfig cfg;
  cfg.channels = sc.instances;
  cfg.seed = sc.seed;
  cfg.protection = sc.protection;
  cfg.holdoff_ticks = sc.holdoff_ticks;
  cfg.xgmii_loop = sc.xgmii_loop;
  System sys(cfg, &source);

  RunResult result;
  PacketChecker checker(plan.packets);
  sys.set_sink([&](std::uint64_t tick, const TickOutput& out) {
    checker.observe(tick, out.selected);
    if (!result.link_up_tick && sys.link_up()) result.link_up_tick = tick;
  });

  std::uint64_t config_done = offset_cancel_ticks();
  if (sc.defaults) {
    for (unsigned c = 0; c < kInstances * kLanes; ++c) {
      const std::uint64_t t = offset_cancel_ticks() + c * kDefaultsSpacing;
      sys.schedule_lmpi(t, LmpiPort::write(lmpi::RECONFIG_CMD,
                                           static_cast<std::uint16_t>((c << lmpi::cmd::channel_shift) | lmpi::cmd::write_all)));
      config_done = t + kDefaultsSpacing;
    }
  }
  for (const auto& a : sc.lmpi) {
    sys.schedule_lmpi(a.tick, a.write ? LmpiPort::write(a.addr, a.value) : LmpiPort::read(a.addr));
  }
  for (const auto& f : sc.faults) {
    if (f.relative_to_traffic) continue;
    try {
      sys.inject_fault(f.spec);
    } catch (const std::invalid_argument& e) {
      throw ScenarioError(std::string("faults: ") + e.what());
    }
  }

  if (!sc.start_tick) {
    const std::uint64_t limit = sc.ticks ? sc.ticks : kLinkUpLimit;
    while (sys.now() < limit && !(sys.link_up() && sys.now() >= config_done)) sys.step(1);
    source.set_start(sys.now() + sc.guard_ticks);
  }
  result.traffic_start = *source.start();

  for (const auto& f : sc.faults) {
    if (!f.relative_to_traffic) continue;
    FaultSpec spec = f.spec;
    spec.start_tick += result.traffic_start;
    try {
      sys.inject_fault(spec);
    } catch (const std::invalid_argument& e) {
      throw ScenarioError(std::string("faults: ") + e.what());
    }
  }

  std::uint64_t end = sc.ticks;
  if (end == 0) {
    // Slowest transmitter at -300 ppm needs 0.03% more ticks.
    const std::uint64_t words = plan.columns.size() * 2;
    end = result.traffic_start + words + words / 1000 + kDrainTicks;
  }
  if (sys.now() < end) sys.step(end - sys.now());

  result.report = checker.finish(source.sent());
  result.gen = source.sent();
  result.chk = checker.received();
  result.events = sys.events();
  result.lmpi_reads = sys.lmpi_reads();
  result.ticks = sys.now();
  result.rm_deletions = sys.instance(0).rx().rate_match().deletions();
  result.rm_insertions = sys.instance(0).rx().rate_match().insertions();
  // A budget forgives lost packets, never delivered-but-wrong ones.
  const bool pass = opt.loss_budget ? result.report.lost <= *opt.loss_budget && !result.report.mismatches()
                                    : result.report.clean();
  result.exit_code = pass ? 0 : 1;

  if (opt.out_dir) {
    std::filesystem::create_directories(*opt.out_dir);
    write_trace(*opt.out_dir / "eth_gen0.dat", TraceKind::gen, result.gen);
    write_trace(*opt.out_dir / "eth_chk0.dat", TraceKind::chk, result.chk);
    std::ofstream ev(*opt.out_dir / "events.log", std::ios::binary);
    write_events(ev, result.events);
    std::ofstream sum(*opt.out_dir / "summary.txt", std::ios::binary);
    sum << format_summary(result);
    if (!ev || !sum) throw std::runtime_error("cannot write artifacts to " + opt.out_dir->string());
  }
  return result;
}

}  // namespace xaui
