#pragma once

// Named states from the model, built round by round through the public API.

#include <cstdint>
#include <initializer_list>
#include <vector>

#include "posmine/game_state.hpp"

namespace fixtures {

using posmine::BlockId;
using posmine::GameState;
using posmine::Miner;
using posmine::PublishPath;

inline BlockId B(std::uint64_t v) { return BlockId{v}; }

inline PublishPath path(std::initializer_list<std::uint64_t> blocks, std::uint64_t base) {
    PublishPath p{{}, B(base)};
    for (auto b : blocks) p.blocks.push_back(B(b));
    return p;
}

// Miner 2 honest block: created and published onto the tip.
inline void honest(GameState& s) {
    const BlockId b = s.create_block(Miner::Two);
    s.apply(Miner::Two, PublishPath{{b}, s.tip()});
}

inline void withhold(GameState& s) { s.create_block(Miner::One); }

inline GameState b0() { return GameState::initial(); }

// Miner 1 created blocks 1..k and published nothing.
inline GameState b_k0(int k) {
    GameState s = b0();
    for (int i = 0; i < k; ++i) withhold(s);
    return s;
}

inline GameState b01() {
    GameState s = b0();
    honest(s);
    return s;
}

// ((0,2 -> 0), {1}, {1})
inline GameState b11() {
    GameState s = b_k0(1);
    honest(s);
    return s;
}

// ((0 <- 2 <- 3), {1}, {1})
inline GameState b12() {
    GameState s = b11();
    honest(s);
    return s;
}

// ((0 <- 2 <- 3), {1,4}, {1,4})
inline GameState b22() {
    GameState s = b12();
    withhold(s);
    return s;
}

// Chain 0<-1<-3<-4<-5<-7, U_1 = {2}, T_1 = {2,5,6}, 6 -> 4 published off-chain.
inline GameState checkpoint_figure() {
    GameState s = b0();
    honest(s);                             // 1
    withhold(s);                           // 2
    honest(s);                             // 3
    honest(s);                             // 4
    s.create_block(Miner::One);            // 5
    s.apply(Miner::One, path({5}, 4));
    s.create_block(Miner::One);            // 6, loses the height-4 tie to 5
    s.apply(Miner::One, path({6}, 4));
    honest(s);                             // 7
    return s;
}

}  // namespace fixtures
