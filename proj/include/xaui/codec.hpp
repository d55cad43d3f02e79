// 8B/10B line code: encoder, decoder and comma detection.
//
// Code-group bit numbering: bit 0 of CodeGroup::bits is 'a', bit 9 is 'j'
// (abcdeifghj). Groups are serialized LSB first, so 'a' is the first bit on
// the wire and CodeGroup::to_string() prints bits in transmission order.

#ifndef XAUI_CODEC_HPP
#define XAUI_CODEC_HPP

#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>

namespace xaui {

/// One octet plus its XGMII control flag. Control symbols are K codes.
struct Symbol {
  std::uint8_t octet = 0;
  bool is_control = false;

  friend bool operator==(const Symbol&, const Symbol&) = default;
};

constexpr Symbol data_symbol(std::uint8_t octet) { return {octet, false}; }
constexpr Symbol control_symbol(std::uint8_t octet) { return {octet, true}; }

// K codes used on the XAUI lanes.
namespace kcode {
inline constexpr std::uint8_t R = 0x1C;  // K28.0
inline constexpr std::uint8_t A = 0x7C;  // K28.3
inline constexpr std::uint8_t Q = 0x9C;  // K28.4
inline constexpr std::uint8_t K = 0xBC;  // K28.5
inline constexpr std::uint8_t S = 0xFB;  // K27.7
inline constexpr std::uint8_t T = 0xFD;  // K29.7
inline constexpr std::uint8_t E = 0xFE;  // K30.7
}  // namespace kcode

/// True for the twelve octets that have a K-code encoding.
bool is_valid_k_octet(std::uint8_t octet);

struct CodeGroup {
  std::uint16_t bits = 0;  // 10 bits, bit 0 = 'a'

  /// Bits in transmission order, "abcdeifghj".
  std::string to_string() const;
  static CodeGroup from_string(std::string_view abcdeifghj);
  int ones() const;
  /// ones - zeros
  int disparity() const { return 2 * ones() - 10; }

  friend bool operator==(const CodeGroup&, const CodeGroup&) = default;
};

enum class RunningDisparity : std::uint8_t { Negative, Positive };

constexpr RunningDisparity flip(RunningDisparity rd) {
  return rd == RunningDisparity::Negative ? RunningDisparity::Positive
                                          : RunningDisparity::Negative;
}

enum class DecodeStatus : std::uint8_t { ok, invalid_code_group, disparity_error };

struct EncodeResult {
  CodeGroup group;
  RunningDisparity rd;
};

struct DecodeResult {
  Symbol symbol;
  RunningDisparity rd;
  DecodeStatus status;
};

class CodecError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Throws CodecError for a control symbol whose octet has no K code.
EncodeResult encode_code_group(Symbol sym, RunningDisparity rd);

/// Never throws. An invalid group yields /E/ and leaves rd unchanged; a group
/// that is only legal under the opposite disparity yields its octet with
/// disparity_error and resynchronizes rd to that group.
DecodeResult decode_code_group(CodeGroup cg, RunningDisparity rd);

/// True if cg is a legal group under either disparity.
bool is_in_codebook(CodeGroup cg);

/// True if cg is the RD- or RD+ encoding of the given K code.
bool is_k_group(CodeGroup cg, std::uint8_t k_octet);

/// 7-bit comma patterns in transmission order.
inline constexpr std::uint8_t kCommaMinus = 0b1111100;  // 0011111, bit 0 first
inline constexpr std::uint8_t kCommaPlus = 0b0000011;   // 1100000, bit 0 first
inline constexpr std::size_t kMinCommaWindow = 17;

/// Offset of the first comma in a window of bits (one bit per element, in
/// wire order). Throws CodecError for windows shorter than 17 bits.
std::optional<std::size_t> find_comma(std::span<const std::uint8_t> window);

/// True if the seven bits starting at bits[0] form a comma.
bool comma_at(std::span<const std::uint8_t> bits);

}  // namespace xaui

#endif  // XAUI_CODEC_HPP
