#pragma once

#include <compare>
#include <cstdint>
#include <numeric>
#include <ostream>
#include <stdexcept>
#include <string>

namespace forceagg {

/// Exact nonnegative-denominator rational over int64, always reduced.
/// Support functions are integer-valued, so fits and basic beliefs are
/// ratios of small integers and compare exactly.
class Ratio {
public:
    constexpr Ratio() = default;
    Ratio(std::int64_t num, std::int64_t den = 1) : num_(num), den_(den) {
        if (den_ == 0)
            throw std::domain_error("ratio with zero denominator");
        if (den_ < 0) {
            num_ = -num_;
            den_ = -den_;
        }
        const auto g = std::gcd(num_ < 0 ? -num_ : num_, den_);
        if (g > 1) {
            num_ /= g;
            den_ /= g;
        }
    }

    std::int64_t num() const noexcept { return num_; }
    std::int64_t den() const noexcept { return den_; }
    double value() const noexcept { return static_cast<double>(num_) / static_cast<double>(den_); }
    std::string str() const { return den_ == 1 ? std::to_string(num_) : std::to_string(num_) + "/" + std::to_string(den_); }

    friend Ratio operator+(const Ratio& a, const Ratio& b) {
        return Ratio(a.num_ * b.den_ + b.num_ * a.den_, a.den_ * b.den_);
    }
    friend Ratio operator/(const Ratio& a, std::int64_t d) { return Ratio(a.num_, a.den_ * d); }

    friend bool operator==(const Ratio& a, const Ratio& b) { return a.num_ == b.num_ && a.den_ == b.den_; }
    friend std::strong_ordering operator<=>(const Ratio& a, const Ratio& b) {
        const __int128 l = static_cast<__int128>(a.num_) * b.den_;
        const __int128 r = static_cast<__int128>(b.num_) * a.den_;
        return l <=> r;
    }

    friend std::ostream& operator<<(std::ostream& os, const Ratio& r) { return os << r.str(); }

private:
    std::int64_t num_ = 0;
    std::int64_t den_ = 1;
};

} // namespace forceagg
