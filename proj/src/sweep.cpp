#include <iomanip>
#include <ostream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "xaui/harness.hpp"

namespace xaui {
namespace {

using nlohmann::json;

std::vector<std::uint16_t> raw_list(const json& j, const char* key, std::uint16_t dflt, ReconfigField f) {
  if (!j.contains(key)) return {dflt};
  const json& a = j[key];
  if (!a.is_array() || a.empty()) throw ScenarioError(std::string(key) + ": expected a non-empty array");
  std::vector<std::uint16_t> out;
  for (const auto& v : a) {
    if (!v.is_number_unsigned() || v.get<std::uint64_t>() >= (1u << field_width(f))) {
      throw ScenarioError(std::string(key) + ": raw values must fit the register width");
    }
    out.push_back(v.get<std::uint16_t>());
  }
  return out;
}

constexpr std::uint64_t kLinkUpLimit = 50'000;
constexpr std::uint64_t kDrainTicks = 512;

}  // namespace

SweepGrid parse_sweep_grid(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ScenarioError(std::string("grid is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw ScenarioError("grid: expected an object");
  for (const auto& [k, v] : j.items()) {
    static const std::set<std::string> ok = {"vod", "preemp", "eqctrl", "eqdcgain", "points",
                                             "loss_db", "packets", "length", "seed"};
    if (!ok.count(k)) throw ScenarioError("grid: unknown key '" + k + "'");
  }

  SweepGrid g;
  if (j.contains("points")) {
    for (const auto& p : j["points"]) {
      if (!p.is_array() || p.size() != 4) throw ScenarioError("points: each entry is [vod, preemp, eqctrl, eqdcgain]");
      const json one = {{"vod", {p[0]}}, {"preemp", {p[1]}}, {"eqctrl", {p[2]}}, {"eqdcgain", {p[3]}}};
      g.settings.push_back({raw_list(one, "vod", 0, ReconfigField::tx_vodctrl)[0],
                            raw_list(one, "preemp", 0, ReconfigField::tx_preemp)[0],
                            raw_list(one, "eqctrl", 0, ReconfigField::rx_eqctrl)[0],
                            raw_list(one, "eqdcgain", 0, ReconfigField::rx_eqdcgain)[0]});
    }
  } else {
    for (auto vod : raw_list(j, "vod", 4, ReconfigField::tx_vodctrl)) {
      for (auto pre : raw_list(j, "preemp", 0, ReconfigField::tx_preemp)) {
        for (auto eq : raw_list(j, "eqctrl", 0, ReconfigField::rx_eqctrl)) {
          for (auto dc : raw_list(j, "eqdcgain", 0, ReconfigField::rx_eqdcgain)) g.settings.push_back({vod, pre, eq, dc});
        }
      }
    }
  }
  if (j.contains("loss_db")) {
    if (!j["loss_db"].is_array()) throw ScenarioError("loss_db: expected an array");
    for (const auto& v : j["loss_db"]) {
      if (!v.is_number() || v.get<double>() < 0.0) throw ScenarioError("loss_db: expected non-negative numbers");
      g.loss_db.push_back(v.get<double>());
    }
  } else {
    g.loss_db = {0.0};
  }
  if (j.contains("packets")) g.packets = j["packets"].get<std::uint64_t>();
  if (j.contains("length")) g.length = j["length"].get<std::uint32_t>();
  if (j.contains("seed")) g.seed = j["seed"].get<std::uint64_t>();
  return g;
}

SweepRow sweep_point(const RawSettings& raw, double loss_db, const SweepGrid& grid) {
  SweepRow row;
  row.raw = raw;
  row.loss_db = loss_db;

  TrafficConfig tc;
  tc.pkt_num = grid.packets;
  tc.len_min = tc.len_max = grid.length;
  tc.seed = grid.seed;
  const TrafficPlan plan = generate_packets(tc);
  TrafficSource source(plan);

  SystemConfig cfg;
  cfg.seed = grid.seed;
  cfg.protection = false;
  for (std::size_t i = 0; i < kInstances; ++i) {
    cfg.channels[i].loss_db = loss_db;
    cfg.channels[i].noise_seed = grid.seed + i;
  }
  System sys(cfg, &source);
  PacketChecker checker(plan.packets);
  sys.set_sink([&](std::uint64_t tick, const TickOutput& out) { checker.observe(tick, out.selected); });

  while (!sys.ready()) sys.step(1);
  sys.lmpi_access(LmpiPort::write(lmpi::TX_VODCTRL, raw.vod));
  sys.lmpi_access(LmpiPort::write(lmpi::TX_PREEMP, raw.preemp));
  sys.lmpi_access(LmpiPort::write(lmpi::RX_EQCTRL, raw.eqctrl));
  sys.lmpi_access(LmpiPort::write(lmpi::RX_EQDCGAIN, raw.eqdcgain));
  for (unsigned c = 0; c < kLanes; ++c) {
    sys.lmpi_access(LmpiPort::write(lmpi::RECONFIG_CMD,
                                    static_cast<std::uint16_t>((c << lmpi::cmd::channel_shift) | lmpi::cmd::write_all)));
    const auto st = sys.lmpi_access(LmpiPort::read(lmpi::STATUS));
    if (st && (*st & lmpi::status::error)) {
      row.illegal = true;
      return row;
    }
    while (sys.controller().status().reconfig_busy) sys.step(1);
  }

  const AnalogSettings applied = sys.controller().active(0);
  const Margin m = margin_model(applied, loss_db);
  row.margin = m.margin_db;
  row.model_ber = m.ber;

  const std::uint64_t limit = sys.now() + kLinkUpLimit;
  while (!sys.link_up() && sys.now() < limit) sys.step(1);
  source.set_start(sys.now() + 64);
  const std::uint64_t words = plan.columns.size() * 2;
  sys.step(64 + words + kDrainTicks);

  const CheckReport rep = checker.finish(source.sent());
  row.frames = rep.sent;
  row.frame_errors = rep.sent - rep.received;
  row.bits = sys.instance(0).words_sent() * 40;
  for (unsigned k = 0; k < kLanes; ++k) row.flips += sys.instance(0).lane(k).flips();
  return row;
}

std::vector<SweepRow> ber_sweep(const SweepGrid& grid) {
  std::vector<SweepRow> rows;
  rows.reserve(grid.settings.size() * grid.loss_db.size());
  for (double loss : grid.loss_db) {
    for (const auto& raw : grid.settings) rows.push_back(sweep_point(raw, loss, grid));
  }
  return rows;
}

void write_sweep(std::ostream& os, const std::vector<SweepRow>& rows) {
  os << "vodctrl\tpreemp\teqctrl\teqdcgain\tloss_db\tstatus\tmargin\tmodel_ber\tframes\tframe_errors\tfer\tbits\tflips\n";
  for (const auto& r : rows) {
    std::ostringstream line;
    line << r.raw.vod << '\t' << r.raw.preemp << '\t' << r.raw.eqctrl << '\t' << r.raw.eqdcgain << '\t'
         << r.loss_db << '\t';
    if (r.illegal) {
      line << "illegal\t-\t-\t-\t-\t-\t-\t-";
    } else {
      line << "ok\t" << r.margin << '\t' << std::setprecision(3) << r.model_ber << '\t' << r.frames << '\t'
           << r.frame_errors << '\t' << r.fer() << '\t' << r.bits << '\t' << r.flips;
    }
    os << line.str() << '\n';
  }
}

}  // namespace xaui
