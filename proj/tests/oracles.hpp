#pragma once

// Brute-force reference computations, written against the raw tree only.

#include <algorithm>
#include <cstdint>
#include <cstdlib>
#include <optional>
#include <random>
#include <vector>

#include "posmine/game_state.hpp"

namespace oracle {

using posmine::BlockId;
using posmine::GameState;
using posmine::Miner;
using posmine::PublishSet;

inline std::uint64_t depth(const GameState& s, BlockId b) {
    std::uint64_t d = 0;
    while (b != posmine::kGenesis) {
        b = s.parent(b);
        ++d;
    }
    return d;
}

// Max-height block; ties to the earliest publication, then the smaller label.
inline BlockId longest_chain(const GameState& s) {
    BlockId best = posmine::kGenesis;
    std::uint64_t best_d = 0;
    for (BlockId b : s.published()) {
        const std::uint64_t d = depth(s, b);
        if (d > best_d || (d == best_d && b != best && s.publish_key(b) < s.publish_key(best))) {
            best = b;
            best_d = d;
        }
    }
    return best;
}

inline std::uint64_t chain_ones(const GameState& s) {
    std::uint64_t n = 0;
    for (BlockId b = longest_chain(s); b != posmine::kGenesis; b = s.parent(b))
        if (s.creator(b) == Miner::One) ++n;
    return n;
}

// Every valid Miner-1 PublishSet: each subset of U_1, each block pointing at
// any published block or any smaller member of the subset.
template <class F>
void for_each_publish_set(const GameState& s, F&& f) {
    const auto& u = s.unpublished(Miner::One);
    const std::vector<BlockId> pubs = s.published();
    const std::size_t n = u.size();
    for (std::uint32_t mask = 1; mask < (1u << n); ++mask) {
        std::vector<BlockId> chosen;
        for (std::size_t i = 0; i < n; ++i)
            if (mask & (1u << i)) chosen.push_back(u[i]);
        std::vector<std::vector<BlockId>> options(chosen.size());
        for (std::size_t i = 0; i < chosen.size(); ++i) {
            for (BlockId p : pubs)
                if (p < chosen[i]) options[i].push_back(p);
            for (std::size_t j = 0; j < i; ++j) options[i].push_back(chosen[j]);
        }
        std::vector<std::size_t> pick(chosen.size(), 0);
        while (true) {
            PublishSet set;
            set.blocks = chosen;
            for (std::size_t i = 0; i < chosen.size(); ++i) set.edges.push_back({chosen[i], options[i][pick[i]]});
            f(set);
            std::size_t i = 0;
            while (i < pick.size() && ++pick[i] == options[i].size()) pick[i++] = 0;
            if (i == pick.size()) break;
        }
    }
}

inline std::uint64_t potential_reward(const GameState& s) {
    const auto before = static_cast<std::int64_t>(chain_ones(s));
    std::uint64_t best = 0;
    for_each_publish_set(s, [&](const PublishSet& set) {
        GameState t = s;
        t.apply(Miner::One, set);
        const auto r = static_cast<std::int64_t>(chain_ones(t)) - before;
        best = std::max<std::uint64_t>(best, static_cast<std::uint64_t>(std::llabs(r)));
    });
    return best;
}

// Random valid publication for miner m: random subset, random earlier parents.
inline PublishSet random_publish_set(const GameState& s, Miner m, std::mt19937_64& rng, double keep = 0.5) {
    PublishSet set;
    std::bernoulli_distribution take(keep);
    for (BlockId b : s.unpublished(m))
        if (take(rng)) set.blocks.push_back(b);
    const std::vector<BlockId> pubs = s.published();
    for (std::size_t i = 0; i < set.blocks.size(); ++i) {
        std::vector<BlockId> options;
        for (BlockId p : pubs)
            if (p < set.blocks[i]) options.push_back(p);
        for (std::size_t j = 0; j < i; ++j) options.push_back(set.blocks[j]);
        std::uniform_int_distribution<std::size_t> pick(0, options.size() - 1);
        set.edges.push_back({set.blocks[i], options[pick(rng)]});
    }
    return set;
}

// A random reachable state with `rounds` rounds of arbitrary valid play.
inline GameState random_state(std::mt19937_64& rng, int rounds, double alpha = 0.5, double publish = 0.4) {
    GameState s = GameState::initial();
    std::bernoulli_distribution one(alpha), act(publish);
    for (int r = 0; r < rounds; ++r) {
        s.create_block(one(rng) ? Miner::One : Miner::Two);
        for (Miner m : {Miner::Two, Miner::One})
            if (act(rng)) s.apply(m, random_publish_set(s, m, rng));
    }
    return s;
}

// Checkpoints straight from the definition: walk the chain by parent links
// and count labels in (P, v] by brute force.
inline std::vector<BlockId> checkpoints(const GameState& s) {
    std::vector<BlockId> chain;
    for (BlockId b = longest_chain(s);; b = s.parent(b)) {
        chain.push_back(b);
        if (b == posmine::kGenesis) break;
    }
    std::reverse(chain.begin(), chain.end());
    std::vector<BlockId> out{posmine::kGenesis};
    while (true) {
        const BlockId p = out.back();
        std::optional<BlockId> next;
        for (BlockId v : chain) {
            if (v <= p) continue;
            std::uint64_t in_chain = 0, hidden = 0;
            for (BlockId c : chain)
                if (c > p && c <= v && s.creator(c) == Miner::One) ++in_chain;
            for (BlockId u : s.unpublished(Miner::One))
                if (u > p && u <= v) ++hidden;
            if (in_chain >= hidden) {
                next = v;
                break;
            }
        }
        if (!next) return out;
        out.push_back(*next);
    }
}

}  // namespace oracle
