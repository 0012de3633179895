#pragma once

#include <compare>
#include <cstdint>
#include <functional>
#include <ostream>
#include <stdexcept>
#include <string>

namespace posmine {

// A block label. Within a GameState it is relative to the current genesis;
// absolute label = relative label + GameState::offset().
struct BlockId {
    std::uint64_t value = 0;

    constexpr BlockId() = default;
    constexpr explicit BlockId(std::uint64_t v) : value(v) {}

    constexpr auto operator<=>(const BlockId&) const = default;
};

inline constexpr BlockId kGenesis{0};

inline std::ostream& operator<<(std::ostream& os, BlockId b) { return os << b.value; }

enum class Miner : std::uint8_t { None = 0, One = 1, Two = 2 };

inline constexpr Miner other(Miner m) { return m == Miner::One ? Miner::Two : Miner::One; }

inline int miner_index(Miner m) { return m == Miner::One ? 0 : 1; }

struct Edge {
    BlockId from;
    BlockId to;

    constexpr auto operator<=>(const Edge&) const = default;
};

inline std::ostream& operator<<(std::ostream& os, const Edge& e) {
    return os << e.from << "->" << e.to;
}

class UnknownBlock : public std::out_of_range {
public:
    explicit UnknownBlock(BlockId b)
        : std::out_of_range("unknown block " + std::to_string(b.value)), block(b) {}
    BlockId block;
};

class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

}  // namespace posmine

template <>
struct std::hash<posmine::BlockId> {
    std::size_t operator()(posmine::BlockId b) const noexcept { return std::hash<std::uint64_t>{}(b.value); }
};
