#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace signdiff {

// Unsigned arbitrary-precision integer, base 1e9 limbs, little-endian.
// Covers what exact order counting needs: small multiply/divide for the
// incremental binomial loop, full multiply for stage products, and full
// division for exact ratios.
class BigUint {
  public:
    BigUint() = default;
    BigUint(uint64_t v);  // NOLINT(google-explicit-constructor)

    bool is_zero() const { return limbs_.empty(); }

    // -1, 0, +1
    int compare(const BigUint& other) const;

    bool operator==(const BigUint& o) const { return compare(o) == 0; }
    bool operator<(const BigUint& o) const { return compare(o) < 0; }
    bool operator>(const BigUint& o) const { return compare(o) > 0; }
    bool operator<=(const BigUint& o) const { return compare(o) <= 0; }
    bool operator>=(const BigUint& o) const { return compare(o) >= 0; }

    BigUint& operator+=(const BigUint& other);
    BigUint operator+(const BigUint& other) const {
        BigUint out = *this;
        out += other;
        return out;
    }
    BigUint& operator-=(const BigUint& other);  // requires *this >= other
    BigUint& operator*=(uint32_t m);
    BigUint operator*(const BigUint& other) const;

    // In-place division by a small divisor; returns the remainder.
    uint32_t divmod_u32(uint32_t d);

    // Schoolbook long division; d must be nonzero.
    static std::pair<BigUint, BigUint> divmod(const BigUint& n, const BigUint& d);

    static BigUint pow10(unsigned exp);

    std::string to_string() const;
    size_t decimal_digits() const;

    // floor(log10) and leading mantissa, from the decimal digits.
    int magnitude() const { return static_cast<int>(decimal_digits()) - 1; }
    double mantissa(int digits = 6) const;

    // "2.947e+123" style rendering for very large values.
    std::string scientific(int sig_digits = 4) const;

    double to_double() const;

  private:
    void trim();
    static constexpr uint32_t kBase = 1000000000u;
    std::vector<uint32_t> limbs_;
};

// M! / prod(sizes!) for an ordered partition of M, exact.
BigUint ordered_partition_count(int total, const std::vector<int>& sizes);

}  // namespace signdiff
