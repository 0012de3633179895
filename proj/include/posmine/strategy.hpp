#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>

#include "posmine/action.hpp"
#include "posmine/game_state.hpp"

namespace posmine {

struct StrategyDecision {
    Action action = Wait{};
    // Capitulate at this height (relative to the current genesis) after the action.
    std::optional<std::uint64_t> capitulate;
    // The capitulation lands on a state equivalent to B_0: a renewal boundary.
    bool to_b0 = false;
};

class UnreachableState : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

// A miner's policy. decide() sees the half state: this round's block has been
// created (half.last_creator() owns half.newest()) and, when self is Miner 1,
// Miner 2 has already acted.
class Strategy {
public:
    virtual ~Strategy() = default;

    virtual StrategyDecision decide(const GameState& half, Miner self) = 0;
    virtual std::string id() const = 0;
    virtual std::unique_ptr<Strategy> clone() const = 0;

    // Re-derive internal memory from an end-of-round state, for runs that do
    // not start at B_0. Throws UnreachableState if the strategy cannot be there.
    virtual void sync(const GameState& state) { (void)state; }
};

}  // namespace posmine
