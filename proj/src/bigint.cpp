#include "signdiff/bigint.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace signdiff {

BigUint::BigUint(uint64_t v) {
    while (v > 0) {
        limbs_.push_back(static_cast<uint32_t>(v % kBase));
        v /= kBase;
    }
}

void BigUint::trim() {
    while (!limbs_.empty() && limbs_.back() == 0) {
        limbs_.pop_back();
    }
}

int BigUint::compare(const BigUint& other) const {
    if (limbs_.size() != other.limbs_.size()) {
        return limbs_.size() < other.limbs_.size() ? -1 : 1;
    }
    for (size_t i = limbs_.size(); i-- > 0;) {
        if (limbs_[i] != other.limbs_[i]) {
            return limbs_[i] < other.limbs_[i] ? -1 : 1;
        }
    }
    return 0;
}

BigUint& BigUint::operator+=(const BigUint& other) {
    const size_t n = std::max(limbs_.size(), other.limbs_.size());
    limbs_.resize(n, 0);
    uint64_t carry = 0;
    for (size_t i = 0; i < n; ++i) {
        uint64_t s = carry + limbs_[i] + (i < other.limbs_.size() ? other.limbs_[i] : 0);
        limbs_[i] = static_cast<uint32_t>(s % kBase);
        carry = s / kBase;
    }
    if (carry > 0) {
        limbs_.push_back(static_cast<uint32_t>(carry));
    }
    return *this;
}

BigUint& BigUint::operator-=(const BigUint& other) {
    if (compare(other) < 0) {
        throw std::invalid_argument("BigUint subtraction underflow");
    }
    int64_t borrow = 0;
    for (size_t i = 0; i < limbs_.size(); ++i) {
        int64_t s = static_cast<int64_t>(limbs_[i]) - borrow -
                    (i < other.limbs_.size() ? static_cast<int64_t>(other.limbs_[i]) : 0);
        if (s < 0) {
            s += kBase;
            borrow = 1;
        } else {
            borrow = 0;
        }
        limbs_[i] = static_cast<uint32_t>(s);
    }
    trim();
    return *this;
}

BigUint& BigUint::operator*=(uint32_t m) {
    if (m == 0 || is_zero()) {
        limbs_.clear();
        return *this;
    }
    uint64_t carry = 0;
    for (auto& limb : limbs_) {
        uint64_t p = static_cast<uint64_t>(limb) * m + carry;
        limb = static_cast<uint32_t>(p % kBase);
        carry = p / kBase;
    }
    while (carry > 0) {
        limbs_.push_back(static_cast<uint32_t>(carry % kBase));
        carry /= kBase;
    }
    return *this;
}

BigUint BigUint::operator*(const BigUint& other) const {
    if (is_zero() || other.is_zero()) {
        return BigUint();
    }
    BigUint out;
    out.limbs_.assign(limbs_.size() + other.limbs_.size(), 0);
    for (size_t i = 0; i < limbs_.size(); ++i) {
        unsigned __int128 carry = 0;
        for (size_t j = 0; j < other.limbs_.size(); ++j) {
            unsigned __int128 cur = carry + out.limbs_[i + j] +
                                    static_cast<unsigned __int128>(limbs_[i]) * other.limbs_[j];
            out.limbs_[i + j] = static_cast<uint32_t>(cur % kBase);
            carry = cur / kBase;
        }
        size_t k = i + other.limbs_.size();
        while (carry > 0) {
            unsigned __int128 cur = carry + out.limbs_[k];
            out.limbs_[k] = static_cast<uint32_t>(cur % kBase);
            carry = cur / kBase;
            ++k;
        }
    }
    out.trim();
    return out;
}

uint32_t BigUint::divmod_u32(uint32_t d) {
    if (d == 0) {
        throw std::invalid_argument("BigUint division by zero");
    }
    uint64_t rem = 0;
    for (size_t i = limbs_.size(); i-- > 0;) {
        uint64_t cur = rem * kBase + limbs_[i];
        limbs_[i] = static_cast<uint32_t>(cur / d);
        rem = cur % d;
    }
    trim();
    return static_cast<uint32_t>(rem);
}

std::pair<BigUint, BigUint> BigUint::divmod(const BigUint& n, const BigUint& d) {
    if (d.is_zero()) {
        throw std::invalid_argument("BigUint division by zero");
    }
    if (n.compare(d) < 0) {
        return {BigUint(), n};
    }
    BigUint quot;
    quot.limbs_.assign(n.limbs_.size(), 0);
    BigUint rem;
    for (size_t i = n.limbs_.size(); i-- > 0;) {
        // rem = rem * base + limb
        rem.limbs_.insert(rem.limbs_.begin(), n.limbs_[i]);
        rem.trim();
        // binary search for the largest q with d*q <= rem
        uint32_t lo = 0;
        uint32_t hi = kBase - 1;
        while (lo < hi) {
            const uint32_t mid = lo + (hi - lo + 1) / 2;
            BigUint trial = d;
            trial *= mid;
            if (trial.compare(rem) <= 0) {
                lo = mid;
            } else {
                hi = mid - 1;
            }
        }
        quot.limbs_[i] = lo;
        if (lo > 0) {
            BigUint trial = d;
            trial *= lo;
            rem -= trial;
        }
    }
    quot.trim();
    return {quot, rem};
}

BigUint BigUint::pow10(unsigned exp) {
    BigUint out(1);
    for (unsigned i = 0; i < exp; ++i) {
        out *= 10;
    }
    return out;
}

std::string BigUint::to_string() const {
    if (is_zero()) {
        return "0";
    }
    std::string out = std::to_string(limbs_.back());
    char buf[16];
    for (size_t i = limbs_.size() - 1; i-- > 0;) {
        std::snprintf(buf, sizeof(buf), "%09u", limbs_[i]);
        out += buf;
    }
    return out;
}

size_t BigUint::decimal_digits() const {
    if (is_zero()) {
        return 1;
    }
    return std::to_string(limbs_.back()).size() + 9 * (limbs_.size() - 1);
}

double BigUint::mantissa(int digits) const {
    const std::string s = to_string();
    double m = 0.0;
    double scale = 1.0;
    for (int i = 0; i < digits && i < static_cast<int>(s.size()); ++i) {
        m += (s[i] - '0') * scale;
        scale /= 10.0;
    }
    return m;
}

std::string BigUint::scientific(int sig_digits) const {
    const std::string s = to_string();
    std::string m;
    m += s[0];
    if (sig_digits > 1 && s.size() > 1) {
        m += '.';
        for (int i = 1; i < sig_digits && i < static_cast<int>(s.size()); ++i) {
            m += s[i];
        }
    }
    return m + "e+" + std::to_string(s.size() - 1);
}

double BigUint::to_double() const {
    double out = 0.0;
    for (size_t i = limbs_.size(); i-- > 0;) {
        out = out * static_cast<double>(kBase) + static_cast<double>(limbs_[i]);
    }
    return out;
}

BigUint ordered_partition_count(int total, const std::vector<int>& sizes) {
    if (total < 0) {
        throw std::invalid_argument("ordered_partition_count: negative total");
    }
    int sum = 0;
    for (int s : sizes) {
        if (s <= 0) {
            throw std::invalid_argument("ordered_partition_count: nonpositive step size");
        }
        sum += s;
    }
    if (sum != total) {
        throw std::invalid_argument("ordered_partition_count: sizes do not sum to total");
    }
    BigUint count(1);
    int remaining = total;
    for (int s : sizes) {
        // incremental binomial C(remaining, s); exact at every intermediate step
        BigUint binom(1);
        for (int i = 0; i < s; ++i) {
            binom *= static_cast<uint32_t>(remaining - i);
            binom.divmod_u32(static_cast<uint32_t>(i + 1));
        }
        count = count * binom;
        remaining -= s;
    }
    return count;
}

}  // namespace signdiff
