#pragma once

// Locale-independent number formatting and parsing for the text formats.

#include <charconv>
#include <cstdint>
#include <istream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <system_error>

namespace hlsd::textio {

// Shortest representation that reads back to the same double.
inline void put(std::string& out, double v) {
  char buf[32];
  auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
  if (ec != std::errc{}) throw std::runtime_error("textio: format failure");
  out.append(buf, p);
}

inline void put_fixed(std::string& out, double v, int decimals) {
  char buf[48];
  auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::fixed, decimals);
  if (ec != std::errc{}) throw std::runtime_error("textio: format failure");
  out.append(buf, p);
}

inline void put(std::string& out, std::int64_t v) {
  char buf[24];
  auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
  (void)ec;
  out.append(buf, p);
}

inline void put(std::string& out, std::uint64_t v) {
  char buf[24];
  auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
  (void)ec;
  out.append(buf, p);
}

// Whitespace-separated token cursor over one line.
class Tokens {
 public:
  explicit Tokens(std::string_view s) : s_(s) {}

  std::string_view next() {
    while (pos_ < s_.size() && (s_[pos_] == ' ' || s_[pos_] == '\t' || s_[pos_] == '\r')) ++pos_;
    const std::size_t b = pos_;
    while (pos_ < s_.size() && s_[pos_] != ' ' && s_[pos_] != '\t' && s_[pos_] != '\r') ++pos_;
    if (b == pos_) throw std::runtime_error("textio: unexpected end of record");
    return s_.substr(b, pos_ - b);
  }

  double number() {
    const auto t = next();
    double v = 0.0;
    auto [p, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
    if (ec != std::errc{} || p != t.data() + t.size())
      throw std::runtime_error("textio: bad number '" + std::string(t) + "'");
    return v;
  }

  template <class Int>
  Int integer() {
    const auto t = next();
    Int v{};
    auto [p, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
    if (ec != std::errc{} || p != t.data() + t.size())
      throw std::runtime_error("textio: bad integer '" + std::string(t) + "'");
    return v;
  }

  void expect(std::string_view word) {
    const auto t = next();
    if (t != word) throw std::runtime_error("textio: expected '" + std::string(word) + "', got '" + std::string(t) + "'");
  }

  bool done() {
    while (pos_ < s_.size() && (s_[pos_] == ' ' || s_[pos_] == '\t' || s_[pos_] == '\r')) ++pos_;
    return pos_ >= s_.size();
  }

 private:
  std::string_view s_;
  std::size_t pos_ = 0;
};

inline std::string read_line(std::istream& is, const char* what) {
  std::string line;
  if (!std::getline(is, line)) throw std::runtime_error(std::string("textio: truncated ") + what);
  return line;
}

}  // namespace hlsd::textio
