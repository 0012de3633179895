#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "posmine/game_state.hpp"
#include "posmine/strategy.hpp"

namespace posmine {

class InnerNotTimeserving : public std::runtime_error {
public:
    InnerNotTimeserving(std::uint64_t round, const std::string& witness);
    std::uint64_t round;
};

class NoChainBlockAtHeight : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class NotForkingCheckpoint : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

class W0NonPositive : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// Bijection on absolute labels, stored as its difference from the identity.
class SigmaMap {
public:
    std::uint64_t operator()(std::uint64_t b) const {
        auto it = diff_.find(b);
        return it == diff_.end() ? b : it->second;
    }
    void set(std::uint64_t from, std::uint64_t to);
    // Drop entries whose key no longer exists in the shadow game.
    template <class Pred>
    void prune(Pred dead) {
        for (auto it = diff_.begin(); it != diff_.end();) it = dead(it->first) ? diff_.erase(it) : std::next(it);
    }
    std::size_t support() const { return diff_.size(); }
    const std::map<std::uint64_t, std::uint64_t>& entries() const { return diff_; }

private:
    std::map<std::uint64_t, std::uint64_t> diff_;
};

// Runs the inner strategy in a private copy of the game (Miner 2 plays
// FRONTIER there too) and translates each of its actions into the real game.
// Capitulation signals are forwarded; the renewal flag only when the real
// state really returns to B_0.
class ShadowReduction : public Strategy {
public:
    StrategyDecision decide(const GameState& half, Miner self) override;
    void sync(const GameState& state) override;

    // Feed a decision the inner strategy already made on shadow() to this
    // layer. `outer` is the real half state. Used when stacking layers.
    StrategyDecision finish(const GameState& outer, const StrategyDecision& inner_decision);

    const GameState& shadow() const { return shadow_; }
    const Strategy& inner() const { return *inner_; }

protected:
    ShadowReduction(std::unique_ptr<Strategy> inner, GameState start);
    ShadowReduction(const ShadowReduction& other);

    // `set` is the inner action in absolute labels, already applied to
    // shadow_. Returns the real action in `outer`'s frame.
    virtual PublishSet translate(const GameState& outer, const PublishSet& set, std::uint64_t base_height) = 0;
    virtual void before_inner(const GameState& outer) { (void)outer; }
    virtual void after_capitulation() {}

    GameState shadow_;
    std::unique_ptr<Strategy> inner_;
};

class OrderlyReduction final : public ShadowReduction {
public:
    explicit OrderlyReduction(std::unique_ptr<Strategy> inner, bool check_invariants = false,
                              GameState start = GameState::initial());
    OrderlyReduction(const OrderlyReduction&) = default;

    std::string id() const override { return "orderly(" + inner_->id() + ")"; }
    std::unique_ptr<Strategy> clone() const override { return std::make_unique<OrderlyReduction>(*this); }
    void sync(const GameState& state) override;

    const SigmaMap& sigma() const { return sigma_; }
    // Tree isomorphism, Miner-2 blocks fixed, injectivity, and order on
    // unpublished blocks, checked between shadow() and `real`. Throws std::logic_error.
    void check_invariants(const GameState& real) const;

private:
    PublishSet translate(const GameState& outer, const PublishSet& set, std::uint64_t base_height) override;
    void before_inner(const GameState& outer) override;
    void after_capitulation() override;

    SigmaMap sigma_;
    bool check_;
};

// Identical to the inner strategy except in round N+1, where a publication
// onto a block off the longest path moves to the chain block of equal height.
class StepLcmReduction final : public ShadowReduction {
public:
    StepLcmReduction(std::unique_ptr<Strategy> inner, std::uint64_t n, GameState start = GameState::initial());
    StepLcmReduction(const StepLcmReduction&) = default;

    std::string id() const override { return "lcm-step" + std::to_string(n_) + "(" + inner_->id() + ")"; }
    std::unique_ptr<Strategy> clone() const override { return std::make_unique<StepLcmReduction>(*this); }

private:
    PublishSet translate(const GameState& outer, const PublishSet& set, std::uint64_t base_height) override;

    std::uint64_t n_;
};

// pi_{N+1} = orderly(lcm_step(pi_N, N)), built on demand: a layer is added in
// the first round the current composite would publish off the longest path.
// After `horizon` rounds the current composite is replayed unchanged.
class LcmReduction final : public Strategy {
public:
    LcmReduction(std::unique_ptr<Strategy> inner, std::uint64_t horizon);
    LcmReduction(const LcmReduction& other);

    StrategyDecision decide(const GameState& half, Miner self) override;
    std::string id() const override { return "lcm(" + base_id_ + ")"; }
    std::unique_ptr<Strategy> clone() const override { return std::make_unique<LcmReduction>(*this); }
    void sync(const GameState& state) override { top_->sync(state); }

    std::size_t layers() const { return layers_; }

private:
    std::unique_ptr<Strategy> top_;
    std::uint64_t horizon_;
    std::size_t layers_ = 0;
    std::string base_id_;
};

std::unique_ptr<Strategy> orderly_reduce(std::unique_ptr<Strategy> inner, bool check_invariants = false);
std::unique_ptr<Strategy> lcm_step_reduce(std::unique_ptr<Strategy> inner, std::uint64_t n);
std::unique_ptr<Strategy> lcm_reduce(std::unique_ptr<Strategy> inner, std::uint64_t horizon);

// W_t = Q_t - Z_t - 1: +1 on Miner-1 blocks, -1 on Miner-2 blocks.
struct WalkCounter {
    std::int64_t w = 0;
    void step(Miner creator) { w += creator == Miner::One ? 1 : -1; }
};

// Case-1 deferral of a trimmed publication that forks the most recent
// checkpoint P_i: wait until the walk hits zero, then publish the lifted set
// plus every Miner-1 block created meanwhile onto P_i. Labels are absolute.
struct DeferredPublication {
    BlockId checkpoint;
    std::vector<BlockId> lifted;   // Q ∩ (P_i, ∞)
    std::int64_t w0 = 0;
    WalkCounter walk;
    std::vector<BlockId> interim;  // Miner-1 blocks created while waiting

    // Record the block created in the next round.
    void observe(Miner creator, BlockId block);
    bool ready() const { return walk.w <= 0; }
    PublishPath action() const;
};

DeferredPublication checkpoint_preserve_case1(const GameState& state, const PublishPath& action);

}  // namespace posmine
