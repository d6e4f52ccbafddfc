#include <cstdint>

#include "doctest.h"
#include "signdiff/bigint.hpp"

using signdiff::BigUint;
using signdiff::ordered_partition_count;

namespace {

uint64_t factorial(int n) {
    uint64_t f = 1;
    for (int i = 2; i <= n; ++i) {
        f *= static_cast<uint64_t>(i);
    }
    return f;
}

}  // namespace

TEST_CASE("small arithmetic round trips") {
    BigUint a(123456789012345ULL);
    CHECK(a.to_string() == "123456789012345");
    a *= 1000000007u;
    // 123456789012345 * 1e9 + 123456789012345 * 7
    CHECK(a.to_string() == "123456789876542523086415");
    CHECK(a.divmod_u32(1000000007u) == 0);
    CHECK(a.to_string() == "123456789012345");
}

TEST_CASE("addition and subtraction") {
    BigUint a(999999999u);
    a += BigUint(1);
    CHECK(a.to_string() == "1000000000");
    a -= BigUint(2);
    CHECK(a.to_string() == "999999998");
    CHECK_THROWS(BigUint(1) -= BigUint(2));
}

TEST_CASE("big multiplication against u64 arithmetic") {
    const uint64_t x = 123456789ULL;
    const uint64_t y = 987654321ULL;
    CHECK((BigUint(x) * BigUint(y)).to_string() == std::to_string(x * y));
    CHECK((BigUint(0) * BigUint(y)).is_zero());
}

TEST_CASE("divmod with big divisor") {
    BigUint n = BigUint(123456789ULL) * BigUint(987654321ULL) + BigUint(12345);
    auto [q, r] = BigUint::divmod(n, BigUint(987654321ULL));
    CHECK(q.to_string() == "123456789");
    CHECK(r.to_string() == "12345");

    auto [q2, r2] = BigUint::divmod(BigUint(5), BigUint(7));
    CHECK(q2.is_zero());
    CHECK(r2.to_string() == "5");
}

TEST_CASE("factorials via ordered partitions") {
    // single steps of size 1 give M!
    for (int m = 1; m <= 15; ++m) {
        std::vector<int> ones(m, 1);
        CHECK(ordered_partition_count(m, ones).to_string() == std::to_string(factorial(m)));
    }
    // 8 choose steps (3,3,2): 8!/(3!3!2!) = 560
    CHECK(ordered_partition_count(8, {3, 3, 2}).to_string() == "560");
    CHECK(ordered_partition_count(4, {2, 2}).to_string() == "6");
    CHECK(ordered_partition_count(2, {2}).to_string() == "1");
}

TEST_CASE("decimal rendering of large values") {
    // 100! has 158 digits and starts 9.3326...
    BigUint f(1);
    for (uint32_t i = 2; i <= 100; ++i) {
        f *= i;
    }
    CHECK(f.decimal_digits() == 158);
    CHECK(f.magnitude() == 157);
    CHECK(f.mantissa(5) == doctest::Approx(9.3326).epsilon(1e-4));
    CHECK(f.scientific(3) == "9.33e+157");
}

TEST_CASE("pow10 and comparisons") {
    CHECK(BigUint::pow10(0).to_string() == "1");
    CHECK(BigUint::pow10(12).to_string() == "1000000000000");
    CHECK(BigUint(5) < BigUint(7));
    CHECK(BigUint::pow10(10) > BigUint(9999999999ULL));
}

TEST_CASE("ordered partition validates sizes") {
    CHECK_THROWS(ordered_partition_count(5, {2, 2}));
    CHECK_THROWS(ordered_partition_count(4, {2, 0, 2}));
}
