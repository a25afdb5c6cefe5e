#pragma once

#include <bit>
#include <cstdint>
#include <string>
#include <vector>

#include "semibandit/errors.hpp"

namespace semibandit {

// Atom index in [0, d). Atoms are kept sorted by prior mean (non-increasing)
// after problem canonicalization; see prior.hpp.
using AtomId = std::uint32_t;

inline constexpr std::uint32_t kMaxAtoms = 64;

// An arm is a non-empty subset of atoms, stored as a bitset.
struct Arm {
    std::uint64_t bits = 0;

    Arm() = default;
    explicit Arm(std::uint64_t b) : bits(b) {}

    static Arm of(std::initializer_list<AtomId> atoms) {
        Arm a;
        for (AtomId x : atoms) a.bits |= (1ULL << x);
        return a;
    }

    static Arm from_atoms(const std::vector<AtomId>& atoms) {
        Arm a;
        for (AtomId x : atoms) a.bits |= (1ULL << x);
        return a;
    }

    bool contains(AtomId atom) const { return (bits >> atom) & 1ULL; }
    int size() const { return std::popcount(bits); }
    bool empty() const { return bits == 0; }
    bool subset_of(const Arm& other) const { return (bits & ~other.bits) == 0; }

    std::vector<AtomId> atoms() const {
        std::vector<AtomId> out;
        out.reserve(static_cast<std::size_t>(size()));
        std::uint64_t b = bits;
        while (b) {
            out.push_back(static_cast<AtomId>(std::countr_zero(b)));
            b &= b - 1;
        }
        return out;
    }

    bool operator==(const Arm& other) const { return bits == other.bits; }
    bool operator!=(const Arm& other) const { return bits != other.bits; }

    std::string to_hex() const {
        static const char* hex = "0123456789abcdef";
        if (bits == 0) return "0x0";
        std::string s;
        std::uint64_t b = bits;
        while (b) {
            s.insert(s.begin(), hex[b & 0xf]);
            b >>= 4;
        }
        return "0x" + s;
    }

    std::string to_string() const {
        std::string s = "{";
        bool first = true;
        for (AtomId a : atoms()) {
            if (!first) s += ",";
            s += std::to_string(a);
            first = false;
        }
        return s + "}";
    }
};

// Order on arms: lexicographic on the ascending atom sequence, with a
// shorter sequence preceding its extensions. Atoms below the lowest
// differing atom x are shared, so the comparison is decided at x.
inline bool lex_less(const Arm& a, const Arm& b) {
    if (a.bits == b.bits) return false;
    const int x = std::countr_zero(a.bits ^ b.bits);
    const std::uint64_t at_or_above = ~0ULL << x;
    if (a.contains(static_cast<AtomId>(x))) {
        // a's next element is x; smaller unless b's sequence already ended.
        return (b.bits & at_or_above) != 0;
    }
    // b's next element is x; a precedes only if a's sequence ended (prefix).
    return (a.bits & at_or_above) == 0;
}

}  // namespace semibandit
