// Shared helpers for the test binaries.

#ifndef XAUI_TESTS_SUPPORT_HPP
#define XAUI_TESTS_SUPPORT_HPP

#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "xaui/codec.hpp"

#ifndef XAUI_TEST_DATA_DIR
#error "XAUI_TEST_DATA_DIR must point at tests/"
#endif

namespace xaui::test {

inline std::string data_path(const std::string& rel) { return std::string(XAUI_TEST_DATA_DIR) + "/" + rel; }

/// One row of the standard 8B/10B codebook fixture.
struct CodebookRow {
  Symbol symbol;
  RunningDisparity rd_in;
  CodeGroup group;
  RunningDisparity rd_out;
};

inline RunningDisparity parse_rd(const std::string& s) {
  if (s == "-") return RunningDisparity::Negative;
  if (s == "+") return RunningDisparity::Positive;
  throw std::runtime_error("bad disparity '" + s + "'");
}

inline std::vector<CodebookRow> load_codebook() {
  std::ifstream is(data_path("fixtures/codebook.tsv"));
  if (!is) throw std::runtime_error("codebook fixture missing");
  std::string line;
  std::getline(is, line);  // header
  std::vector<CodebookRow> rows;
  while (std::getline(is, line)) {
    std::istringstream ls(line);
    std::string octet, control, rd_in, group, rd_out;
    ls >> octet >> control >> rd_in >> group >> rd_out;
    CodebookRow r;
    r.symbol = {static_cast<std::uint8_t>(std::stoul(octet, nullptr, 16)), control == "1"};
    r.rd_in = parse_rd(rd_in);
    r.group = CodeGroup::from_string(group);
    r.rd_out = parse_rd(rd_out);
    rows.push_back(r);
  }
  return rows;
}

}  // namespace xaui::test

#endif  // XAUI_TESTS_SUPPORT_HPP
