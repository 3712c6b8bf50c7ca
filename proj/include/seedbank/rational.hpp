// Exact rational arithmetic on 64-bit numerator/denominator.
// Population-size ratios, stationary weights and homogenized averages are
// small fractions; detailed-balance and stationarity identities are checked
// to 1e-12, so the core quantities are kept exact end to end.
#pragma once

#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <string>

namespace seedbank {

class Rat {
 public:
  constexpr Rat() : num_(0), den_(1) {}
  constexpr Rat(long long n) : num_(n), den_(1) {}
  Rat(long long n, long long d) : num_(n), den_(d) { normalize(); }

  long long num() const { return num_; }
  long long den() const { return den_; }

  double to_double() const { return static_cast<double>(num_) / static_cast<double>(den_); }

  std::string str() const {
    if (den_ == 1) return std::to_string(num_);
    return std::to_string(num_) + "/" + std::to_string(den_);
  }

  friend Rat operator+(const Rat& a, const Rat& b) {
    return from_i128(i128(a.num_) * b.den_ + i128(b.num_) * a.den_, i128(a.den_) * b.den_);
  }
  friend Rat operator-(const Rat& a, const Rat& b) {
    return from_i128(i128(a.num_) * b.den_ - i128(b.num_) * a.den_, i128(a.den_) * b.den_);
  }
  friend Rat operator*(const Rat& a, const Rat& b) {
    return from_i128(i128(a.num_) * b.num_, i128(a.den_) * b.den_);
  }
  friend Rat operator/(const Rat& a, const Rat& b) {
    if (b.num_ == 0) throw std::domain_error("rational division by zero");
    return from_i128(i128(a.num_) * b.den_, i128(a.den_) * b.num_);
  }
  Rat operator-() const { Rat r; r.num_ = -num_; r.den_ = den_; return r; }

  Rat& operator+=(const Rat& o) { return *this = *this + o; }
  Rat& operator-=(const Rat& o) { return *this = *this - o; }
  Rat& operator*=(const Rat& o) { return *this = *this * o; }
  Rat& operator/=(const Rat& o) { return *this = *this / o; }

  friend bool operator==(const Rat& a, const Rat& b) {
    return a.num_ == b.num_ && a.den_ == b.den_;
  }
  friend bool operator!=(const Rat& a, const Rat& b) { return !(a == b); }
  friend bool operator<(const Rat& a, const Rat& b) {
    return i128(a.num_) * b.den_ < i128(b.num_) * a.den_;
  }
  friend bool operator>(const Rat& a, const Rat& b) { return b < a; }
  friend bool operator<=(const Rat& a, const Rat& b) { return !(b < a); }
  friend bool operator>=(const Rat& a, const Rat& b) { return !(a < b); }

  Rat abs() const { return num_ < 0 ? -*this : *this; }

  // Parses "3", "-3", "0.25", ".5", "3/4", "-1/2" exactly.
  static Rat parse(const std::string& text);

 private:
  using i128 = __int128;

  static Rat from_i128(i128 n, i128 d) {
    if (d == 0) throw std::domain_error("rational with zero denominator");
    if (d < 0) { n = -n; d = -d; }
    i128 g = gcd128(n < 0 ? -n : n, d);
    if (g > 1) { n /= g; d /= g; }
    constexpr i128 lim = 0x7fffffffffffffffLL;
    if (n > lim || n < -lim || d > lim)
      throw std::overflow_error("rational overflow");
    Rat r;
    r.num_ = static_cast<long long>(n);
    r.den_ = static_cast<long long>(d);
    return r;
  }

  static i128 gcd128(i128 a, i128 b) {
    while (b != 0) { i128 t = a % b; a = b; b = t; }
    return a == 0 ? 1 : a;
  }

  void normalize() { *this = from_i128(num_, den_); }

  long long num_;
  long long den_;
};

inline Rat Rat::parse(const std::string& text) {
  if (text.empty()) throw std::invalid_argument("empty number");
  auto slash = text.find('/');
  if (slash != std::string::npos) {
    Rat n = parse(text.substr(0, slash));
    Rat d = parse(text.substr(slash + 1));
    return n / d;
  }
  bool neg = false;
  std::size_t i = 0;
  if (text[0] == '+' || text[0] == '-') { neg = text[0] == '-'; i = 1; }
  constexpr long long digit_cap = 100'000'000'000'000'000LL;  // 17 digits stay exact
  long long ipart = 0, fpart = 0, fden = 1;
  bool any_digit = false;
  for (; i < text.size() && text[i] >= '0' && text[i] <= '9'; ++i) {
    if (ipart >= digit_cap) throw std::overflow_error("number too long: '" + text + "'");
    ipart = ipart * 10 + (text[i] - '0');
    any_digit = true;
  }
  if (i < text.size() && text[i] == '.') {
    ++i;
    for (; i < text.size() && text[i] >= '0' && text[i] <= '9'; ++i) {
      if (fden >= digit_cap) throw std::overflow_error("number too long: '" + text + "'");
      fpart = fpart * 10 + (text[i] - '0');
      fden *= 10;
      any_digit = true;
    }
  }
  if (!any_digit || i != text.size())
    throw std::invalid_argument("malformed number: '" + text + "'");
  Rat r = Rat(ipart) + Rat(fpart, fden);
  return neg ? -r : r;
}

}  // namespace seedbank
