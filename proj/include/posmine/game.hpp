#pragma once

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "posmine/game_state.hpp"
#include "posmine/rng.hpp"
#include "posmine/strategy.hpp"

namespace posmine {

// Labels in a record are absolute so records from different capitulation
// frames can be compared and replayed.
struct RoundRecord {
    std::uint64_t round = 0;
    Miner creator = Miner::None;
    PublishSet miner2_action;
    PublishSet miner1_action;
    std::optional<std::uint64_t> capitulated_at;  // absolute height of the new genesis
    bool renewal = false;
    BlockId tip;
    std::uint64_t height = 0;
    std::int64_t r1 = 0;
    std::int64_t r2 = 0;
    std::uint64_t chain_ones = 0;  // |A(C) ∩ T_1| after the round

    // rev^(n) after this round.
    double revenue() const {
        return height == 0 ? 0.0 : static_cast<double>(chain_ones) / static_cast<double>(height);
    }
};

struct Trace {
    std::string strategy;
    double alpha = 0;
    std::uint64_t seed = 0;
    std::vector<RoundRecord> rounds;
};

// Hooks into a round: the half state just before Miner 1 acts, and the state
// right after Miner 1's action (before any capitulation).
class RoundObserver {
public:
    virtual ~RoundObserver() = default;
    virtual void on_half(const GameState& half, const PublishSet& miner1_action, const StrategyDecision& decision) {
        (void)half, (void)miner1_action, (void)decision;
    }
    virtual void on_action(const GameState& after, const RoundRecord& record) { (void)after, (void)record; }
};

class InvalidRenewal : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

// One round: create block round+1 for `creator`, Miner 2 acts, Miner 1 acts,
// then Miner 1's capitulation (if any) is applied. Miner 2's capitulation
// signal is ignored.
RoundRecord step_round(GameState& state, Miner creator, Strategy& miner2, Strategy& miner1,
                       RoundObserver* observer = nullptr);

// Creator draws: i.i.d. Miner 1 with probability alpha, optionally preceded
// by a forced prefix.
class CreatorStream {
public:
    CreatorStream(double alpha, std::uint64_t seed, std::uint64_t stream = 0, std::vector<Miner> forced = {});
    Miner next();
    void set_alpha(double alpha) { alpha_ = alpha; }

private:
    double alpha_;
    Rng rng_;
    std::vector<Miner> forced_;
    std::size_t used_ = 0;
};

// A game with Miner 2 playing FRONTIER.
class Game {
public:
    Game(std::unique_ptr<Strategy> miner1, CreatorStream creators, GameState start = GameState::initial());

    RoundRecord step(RoundObserver* observer = nullptr);
    const GameState& state() const { return state_; }
    Strategy& strategy() { return *miner1_; }
    CreatorStream& creators() { return creators_; }

private:
    std::unique_ptr<Strategy> miner1_;
    std::unique_ptr<Strategy> miner2_;
    CreatorStream creators_;
    GameState state_;
};

Trace run_game(const Strategy& strategy, double alpha, std::uint64_t rounds, std::uint64_t seed,
               RoundObserver* observer = nullptr, const std::vector<Miner>& forced = {});

// Replays a recorded trace (creators, Miner-1 actions and capitulations).
class TraceReplay final : public Strategy {
public:
    explicit TraceReplay(const Trace& trace) : trace_(&trace) {}
    StrategyDecision decide(const GameState& half, Miner self) override;
    std::string id() const override { return "replay(" + trace_->strategy + ")"; }
    std::unique_ptr<Strategy> clone() const override { return std::make_unique<TraceReplay>(*this); }

private:
    const Trace* trace_;
};

// Re-run a trace through `observer`; returns the final state.
GameState replay_trace(const Trace& trace, RoundObserver& observer);

// CSV columns: round,creator,miner2_action,miner1_action,chain_tip,height,r1,r2,capitulated
// capitulated is 0 (none), 1 (to B_0) or 2 (partial capitulation).
void write_trace_csv(std::ostream& os, const Trace& trace);

}  // namespace posmine
