#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <vector>

#include "posmine/action.hpp"
#include "posmine/types.hpp"

namespace posmine {

enum class BlockStatus : std::uint8_t { Absent, Unpublished, Published };

// Publication timestamp used for longest-chain tie-breaking.
struct PublishKey {
    std::uint64_t round = 0;
    std::uint32_t index = 0;

    auto operator<=>(const PublishKey&) const = default;
};

class BadHeight : public std::invalid_argument {
public:
    BadHeight(std::uint64_t c, std::uint64_t h);
};

// One line of a state description (statefile or test fixture).
// Ids are absolute labels minus the state's offset.
struct BlockSpec {
    BlockId id;
    Miner creator = Miner::None;
    std::optional<BlockId> parent;          // published blocks only
    std::optional<std::uint64_t> published;  // publication round; nullopt = unpublished
};

// The mining-game state: published tree, unpublished sets, creators.
//
// Labels are relative to the current genesis and contiguous: capitulation
// maps the survivors onto 0..m in order, and a new block gets the next free
// label. Each block also keeps its absolute label (its creation round).
// Absolute chain counters survive capitulation, which keeps rewards and
// rev^(n) comparable across the whole game.
class GameState {
public:
    static GameState initial();

    // Build from explicit records whose ids are absolute labels minus `offset`;
    // missing ids are allowed and the result is compacted. Published blocks are
    // ordered by (published round, position in `blocks`). Throws
    // std::invalid_argument.
    static GameState assemble(std::uint64_t round, std::uint64_t offset, const std::vector<BlockSpec>& blocks);

    std::uint64_t round() const { return round_; }
    // Absolute label of the current genesis.
    std::uint64_t offset() const { return abs_[0]; }
    // Labels are in [0, label_bound()).
    std::uint64_t label_bound() const { return blocks_.size(); }
    BlockId newest() const { return BlockId{blocks_.size() - 1}; }
    Miner last_creator() const { return last_creator_; }

    bool contains(BlockId b) const { return b.value < blocks_.size() && blocks_[b.value].status != BlockStatus::Absent; }
    bool is_published(BlockId b) const {
        return b.value < blocks_.size() && blocks_[b.value].status == BlockStatus::Published;
    }
    bool is_unpublished(BlockId b, Miner m) const;
    Miner creator(BlockId b) const;
    BlockId parent(BlockId b) const;
    std::uint64_t height(BlockId b) const;
    PublishKey publish_key(BlockId b) const;

    BlockId tip() const { return chain_.back(); }
    std::uint64_t tip_height() const { return chain_.size() - 1; }
    BlockId chain_at(std::uint64_t h) const { return chain_.at(h); }
    bool on_chain(BlockId b) const;

    std::vector<BlockId> ancestors(BlockId b) const;
    // Path from the tip down to b, excluding b; empty when b is off the chain.
    std::vector<BlockId> successors(BlockId b) const;

    // Miner-m blocks on the longest path with height in (lo, hi].
    std::uint64_t chain_count(Miner m, std::uint64_t lo, std::uint64_t hi) const;
    std::uint64_t chain_count(Miner m) const { return chain_count(m, 0, tip_height()); }
    // Same quantities counted from the original genesis of the game.
    std::uint64_t abs_chain_count(Miner m) const { return base_count_[miner_index(m)] + chain_count(m); }
    std::uint64_t abs_height() const { return base_height_ + tip_height(); }
    std::uint64_t base_height() const { return base_height_; }
    // |A(C) ∩ T_1| / h(C) over the whole game; 0 at height 0.
    double revenue() const;

    const std::vector<BlockId>& unpublished(Miner m) const { return unpublished_[miner_index(m)]; }
    // |U_m ∩ (lo, hi]|
    std::size_t unpublished_in(Miner m, BlockId lo, BlockId hi) const;
    // |U_m ∩ (lo, ∞)|
    std::size_t unpublished_above(Miner m, BlockId lo) const;
    // min^(k)(U_m ∩ (lo, ∞))
    std::vector<BlockId> smallest_unpublished_above(Miner m, BlockId lo, std::size_t k) const;

    std::vector<BlockId> published() const;

    // Adds block round()+1 to the creator's unpublished set.
    BlockId create_block(Miner creator);

    PublishSet desugar(Miner m, const Action& action) const;
    std::optional<ValidityError> validate(Miner m, const PublishSet& set) const;
    std::optional<ValidityError> validate(Miner m, const Action& action) const {
        return validate(m, desugar(m, action));
    }
    // Throws ValidityError. Returns the published set actually applied.
    PublishSet apply(Miner m, const Action& action);

    bool can_reach_height(BlockId b, std::uint64_t ell) const;

    // c-capitulation: the height-c chain block becomes the new genesis.
    GameState capitulate(std::uint64_t c) const;

    // Structural invariants; throws std::logic_error on violation.
    void check_invariants() const;

    // Translate labels between this state's frame and absolute labels.
    BlockId to_absolute(BlockId b) const;
    BlockId to_relative(BlockId abs) const;
    PublishSet to_absolute(const PublishSet& s) const;
    PublishSet to_relative(const PublishSet& s) const;

private:
    struct Record {
        Miner creator = Miner::None;
        BlockStatus status = BlockStatus::Absent;
        BlockId parent;
        std::uint64_t height = 0;
        PublishKey key;
    };

    const Record& record(BlockId b) const;
    void rebuild_chain();
    void extend_chain_to(BlockId new_tip);
    bool better_tip(BlockId a, BlockId b) const;

    std::vector<Record> blocks_;
    std::array<std::vector<BlockId>, 2> unpublished_;
    std::vector<BlockId> chain_;            // chain_[h] = longest-path block at height h
    std::vector<std::uint32_t> chain_ones_;  // Miner-1 blocks on chain_[1..h]
    std::vector<std::uint64_t> abs_;        // absolute label per relative label
    std::uint64_t round_ = 0;
    std::uint32_t next_index_ = 0;
    Miner last_creator_ = Miner::None;
    std::uint64_t base_height_ = 0;
    std::array<std::uint64_t, 2> base_count_{};

    friend bool canonical_equal(const GameState& a, const GameState& b);
};

// r^k(before, after); states may differ by capitulations.
std::int64_t reward(const GameState& before, const GameState& after, Miner k);
double game_reward(const GameState& before, const GameState& after, double lambda);

// max over valid Miner-1 actions of |r^1(state, successor)|.
std::uint64_t potential_reward(const GameState& state);

// Order-preserving isomorphism on creators, parents, publication order and unpublished sets.
bool canonical_equal(const GameState& a, const GameState& b);

}  // namespace posmine
