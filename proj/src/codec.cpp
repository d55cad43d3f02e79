#include "xaui/codec.hpp"

#include <array>
#include <bit>

namespace xaui {
namespace {

// 5b/6b sub-block, RD- column, written abcdei.
constexpr std::array<const char*, 32> kSixB = {
    "100111", "011101", "101101", "110001", "110101", "101001", "011001", "111000",
    "111001", "100101", "010101", "110100", "001101", "101100", "011100", "010111",
    "011011", "100011", "010011", "110010", "001011", "101010", "011010", "111010",
    "110011", "100110", "010110", "110110", "001110", "101110", "011110", "101011",
};
constexpr const char* kSixBK28 = "001111";

// 3b/4b sub-block, RD- column, written fghj. Index 7 is the primary D.x.P7.
constexpr std::array<const char*, 8> kFourB = {
    "1011", "1001", "0101", "1100", "1101", "1010", "0110", "1110",
};
constexpr const char* kFourBAlt7 = "0111";

constexpr std::array<std::uint8_t, 12> kKOctets = {
    0x1C, 0x3C, 0x5C, 0x7C, 0x9C, 0xBC, 0xDC, 0xFC, 0xF7, 0xFB, 0xFD, 0xFE,
};

constexpr std::uint16_t parse_bits(const char* s) {
  std::uint16_t v = 0;
  for (int i = 0; s[i] != '\0'; ++i) {
    if (s[i] == '1') v |= static_cast<std::uint16_t>(1u << i);
  }
  return v;
}

constexpr std::uint16_t complement(std::uint16_t v, int width) {
  return static_cast<std::uint16_t>(~v & ((1u << width) - 1u));
}

constexpr int imbalance(std::uint16_t v, int width) {
  return 2 * std::popcount(static_cast<unsigned>(v)) - width;
}

// Encodes one sub-block given its RD- form. Unbalanced blocks, and the
// balanced-but-alternating D.07 and D.x.3 blocks, are complemented under RD+.
struct SubBlock {
  std::uint16_t bits;
  RunningDisparity rd_after;
};

constexpr SubBlock sub_block(std::uint16_t minus_form, int width, bool alternates,
                             RunningDisparity rd) {
  const bool complemented = rd == RunningDisparity::Positive &&
                            (alternates || imbalance(minus_form, width) != 0);
  const std::uint16_t bits = complemented ? complement(minus_form, width) : minus_form;
  const int d = imbalance(bits, width);
  RunningDisparity after = rd;
  if (d > 0) after = RunningDisparity::Positive;
  if (d < 0) after = RunningDisparity::Negative;
  return {bits, after};
}

constexpr EncodeResult encode_data(std::uint8_t octet, RunningDisparity rd) {
  const unsigned x = octet & 0x1Fu;
  const unsigned y = octet >> 5;
  const SubBlock six = sub_block(parse_bits(kSixB[x]), 6, x == 7, rd);
  bool use_alt = false;
  if (y == 7) {
    use_alt = (six.rd_after == RunningDisparity::Negative && (x == 17 || x == 18 || x == 20)) ||
              (six.rd_after == RunningDisparity::Positive && (x == 11 || x == 13 || x == 14));
  }
  const char* four_src = use_alt ? kFourBAlt7 : kFourB[y];
  const SubBlock four = sub_block(parse_bits(four_src), 4, y == 3, six.rd_after);
  return {CodeGroup{static_cast<std::uint16_t>(six.bits | (four.bits << 6))}, four.rd_after};
}

// K codes are built in their RD- form; the RD+ form is the full complement.
constexpr CodeGroup encode_k_minus(std::uint8_t octet) {
  const unsigned x = octet & 0x1Fu;
  const unsigned y = octet >> 5;
  std::uint16_t six = 0;
  if (x == 28) {
    six = parse_bits(kSixBK28);
  } else {
    six = parse_bits(kSixB[x]);
  }
  // After the 6b block the disparity is positive for every K code.
  std::uint16_t four = 0;
  if (y == 7) {
    four = complement(parse_bits(kFourBAlt7), 4);
  } else {
    four = sub_block(parse_bits(kFourB[y]), 4, y == 3, RunningDisparity::Positive).bits;
  }
  return CodeGroup{static_cast<std::uint16_t>(six | (four << 6))};
}

struct Tables {
  // [rd][octet]
  std::array<std::array<EncodeResult, 256>, 2> data{};
  std::array<std::array<EncodeResult, 256>, 2> control{};
  std::array<bool, 256> k_valid{};

  struct Entry {
    bool legal = false;
    Symbol symbol;
    RunningDisparity rd_after = RunningDisparity::Negative;
  };
  // [rd][10-bit group]
  std::array<std::array<Entry, 1024>, 2> decode{};

  Tables() {
    for (int r = 0; r < 2; ++r) {
      const auto rd = static_cast<RunningDisparity>(r);
      for (unsigned o = 0; o < 256; ++o) {
        data[r][o] = encode_data(static_cast<std::uint8_t>(o), rd);
        auto& e = decode[r][data[r][o].group.bits];
        e = {true, data_symbol(static_cast<std::uint8_t>(o)), data[r][o].rd};
      }
    }
    for (std::uint8_t k : kKOctets) {
      k_valid[k] = true;
      const CodeGroup minus = encode_k_minus(k);
      const CodeGroup plus{complement(minus.bits, 10)};
      const int d = minus.disparity();
      const RunningDisparity after_minus = d == 0 ? RunningDisparity::Negative : RunningDisparity::Positive;
      const RunningDisparity after_plus = d == 0 ? RunningDisparity::Positive : RunningDisparity::Negative;
      control[0][k] = {minus, after_minus};
      control[1][k] = {plus, after_plus};
      decode[0][minus.bits] = {true, control_symbol(k), after_minus};
      decode[1][plus.bits] = {true, control_symbol(k), after_plus};
    }
  }
};

const Tables& tables() {
  static const Tables t;
  return t;
}

}  // namespace

bool is_valid_k_octet(std::uint8_t octet) { return tables().k_valid[octet]; }

std::string CodeGroup::to_string() const {
  std::string s(10, '0');
  for (int i = 0; i < 10; ++i) {
    if ((bits >> i) & 1u) s[i] = '1';
  }
  return s;
}

CodeGroup CodeGroup::from_string(std::string_view abcdeifghj) {
  if (abcdeifghj.size() != 10) throw CodecError("code group string must have 10 bits");
  std::uint16_t v = 0;
  for (std::size_t i = 0; i < 10; ++i) {
    const char c = abcdeifghj[i];
    if (c != '0' && c != '1') throw CodecError("code group string must be binary");
    if (c == '1') v |= static_cast<std::uint16_t>(1u << i);
  }
  return CodeGroup{v};
}

int CodeGroup::ones() const { return std::popcount(static_cast<unsigned>(bits & 0x3FFu)); }

EncodeResult encode_code_group(Symbol sym, RunningDisparity rd) {
  const auto& t = tables();
  const auto r = static_cast<std::size_t>(rd);
  if (!sym.is_control) return t.data[r][sym.octet];
  if (!t.k_valid[sym.octet]) throw CodecError("octet has no K-code encoding");
  return t.control[r][sym.octet];
}

DecodeResult decode_code_group(CodeGroup cg, RunningDisparity rd) {
  const auto& t = tables();
  const std::uint16_t v = cg.bits & 0x3FFu;
  const auto& same = t.decode[static_cast<std::size_t>(rd)][v];
  if (same.legal) return {same.symbol, same.rd_after, DecodeStatus::ok};
  const auto& other = t.decode[static_cast<std::size_t>(flip(rd))][v];
  if (other.legal) return {other.symbol, other.rd_after, DecodeStatus::disparity_error};
  return {control_symbol(kcode::E), rd, DecodeStatus::invalid_code_group};
}

bool is_in_codebook(CodeGroup cg) {
  const auto& t = tables();
  const std::uint16_t v = cg.bits & 0x3FFu;
  return t.decode[0][v].legal || t.decode[1][v].legal;
}

bool is_k_group(CodeGroup cg, std::uint8_t k_octet) {
  const auto& t = tables();
  if (!t.k_valid[k_octet]) return false;
  return cg == t.control[0][k_octet].group || cg == t.control[1][k_octet].group;
}

bool comma_at(std::span<const std::uint8_t> bits) {
  if (bits.size() < 7) return false;
  std::uint8_t v = 0;
  for (int i = 0; i < 7; ++i) v |= static_cast<std::uint8_t>((bits[i] & 1u) << i);
  return v == kCommaMinus || v == kCommaPlus;
}

std::optional<std::size_t> find_comma(std::span<const std::uint8_t> window) {
  if (window.size() < kMinCommaWindow) throw CodecError("comma search window shorter than 17 bits");
  for (std::size_t i = 0; i + 7 <= window.size(); ++i) {
    if (comma_at(window.subspan(i))) return i;
  }
  return std::nullopt;
}

}  // namespace xaui
