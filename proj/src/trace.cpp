#include <charconv>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>

#include "xaui/harness.hpp"

namespace xaui {
namespace {

constexpr const char* kGenHeader = "TimeL\tethFCnt\tlength";
constexpr const char* kChkHeader = "TimeL\tpacketNum\tlength";

void append_hex(std::string& out, std::uint64_t v) {
  char buf[17];
  const auto res = std::to_chars(buf, buf + sizeof buf, v, 16);
  out.append(buf, res.ptr);
}

std::uint64_t parse_hex(std::string_view field, std::size_t line) {
  if (field.empty()) throw TraceParseError(line, "empty field");
  for (char c : field) {
    if (!((c >= '0' && c <= '9') || (c >= 'a' && c <= 'f'))) {
      throw TraceParseError(line, "'" + std::string(field) + "' is not lowercase hex");
    }
  }
  std::uint64_t v = 0;
  const auto res = std::from_chars(field.data(), field.data() + field.size(), v, 16);
  if (res.ec != std::errc{} || res.ptr != field.data() + field.size()) {
    throw TraceParseError(line, "'" + std::string(field) + "' does not fit in 64 bits");
  }
  return v;
}

}  // namespace

TraceParseError::TraceParseError(std::size_t line_no, const std::string& what)
    : std::runtime_error("line " + std::to_string(line_no) + ": " + what), line(line_no) {}

const char* trace_header(TraceKind kind) { return kind == TraceKind::gen ? kGenHeader : kChkHeader; }

std::string format_record(const PacketRecord& r) {
  std::string s;
  append_hex(s, r.time_ns);
  s += '\t';
  append_hex(s, r.seq);
  s += '\t';
  append_hex(s, r.length);
  return s;
}

void write_trace(std::ostream& os, TraceKind kind, const std::vector<PacketRecord>& records) {
  os << trace_header(kind) << '\n';
  for (const auto& r : records) os << format_record(r) << '\n';
}

void write_trace(const std::filesystem::path& path, TraceKind kind, const std::vector<PacketRecord>& records) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open " + path.string() + " for writing");
  write_trace(os, kind, records);
  if (!os) throw std::runtime_error("write to " + path.string() + " failed");
}

std::vector<PacketRecord> parse_trace(std::istream& is, TraceKind* kind) {
  std::string line;
  if (!std::getline(is, line)) throw TraceParseError(1, "missing header");
  if (line == kGenHeader) {
    if (kind) *kind = TraceKind::gen;
  } else if (line == kChkHeader) {
    if (kind) *kind = TraceKind::chk;
  } else {
    throw TraceParseError(1, "unrecognised header");
  }

  std::vector<PacketRecord> out;
  std::size_t n = 1;
  while (std::getline(is, line)) {
    ++n;
    std::string_view rest(line);
    std::array<std::uint64_t, 3> f{};
    for (std::size_t i = 0; i < f.size(); ++i) {
      const auto tab = rest.find('\t');
      const bool last = i + 1 == f.size();
      if (last != (tab == std::string_view::npos)) throw TraceParseError(n, "expected three tab-separated fields");
      f[i] = parse_hex(rest.substr(0, tab), n);
      if (!last) rest.remove_prefix(tab + 1);
    }
    out.push_back({f[0], f[1], f[2]});
  }
  return out;
}

std::vector<PacketRecord> parse_trace(const std::filesystem::path& path, TraceKind* kind) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open " + path.string());
  return parse_trace(is, kind);
}

TraceDiff trace_diff(const std::vector<PacketRecord>& a, const std::vector<PacketRecord>& b) {
  TraceDiff d;
  d.count_a = a.size();
  d.count_b = b.size();
  if (a.size() != b.size()) {
    d.differences.push_back("record count " + std::to_string(a.size()) + " vs " + std::to_string(b.size()));
  }

  std::map<std::uint64_t, const PacketRecord*> in_b;
  for (const auto& r : b) in_b.emplace(r.seq, &r);
  std::map<std::uint64_t, const PacketRecord*> in_a;
  for (const auto& r : a) in_a.emplace(r.seq, &r);

  const auto hex = [](std::uint64_t v) {
    std::string s;
    append_hex(s, v);
    return s;
  };
  for (const auto& r : a) {
    const auto it = in_b.find(r.seq);
    if (it == in_b.end()) {
      d.differences.push_back("seq " + hex(r.seq) + " missing from second trace");
      continue;
    }
    if (it->second->length != r.length) {
      d.differences.push_back("seq " + hex(r.seq) + " length " + hex(r.length) + " vs " + hex(it->second->length));
    }
    d.time_delta_ns.push_back(static_cast<std::int64_t>(it->second->time_ns) - static_cast<std::int64_t>(r.time_ns));
  }
  for (const auto& r : b) {
    if (!in_a.count(r.seq)) d.differences.push_back("seq " + hex(r.seq) + " only in second trace");
  }
  for (std::size_t i = 1; i < b.size(); ++i) {
    if (b[i].seq <= b[i - 1].seq) {
      d.differences.push_back("second trace out of order at record " + std::to_string(i + 1));
      break;
    }
  }
  return d;
}

}  // namespace xaui
