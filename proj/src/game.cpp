#include "posmine/game.hpp"

#include <ostream>

#include "posmine/strategies.hpp"

namespace posmine {

RoundRecord step_round(GameState& state, Miner creator, Strategy& miner2, Strategy& miner1, RoundObserver* observer) {
    const std::uint64_t ones_before = state.abs_chain_count(Miner::One);
    const std::uint64_t twos_before = state.abs_chain_count(Miner::Two);

    state.create_block(creator);
    const StrategyDecision d2 = miner2.decide(state, Miner::Two);
    const PublishSet a2 = state.apply(Miner::Two, d2.action);

    const StrategyDecision d1 = miner1.decide(state, Miner::One);
    if (observer) {
        PublishSet planned = state.desugar(Miner::One, d1.action);
        observer->on_half(state, planned, d1);
    }
    const PublishSet a1 = state.apply(Miner::One, d1.action);

    RoundRecord rec;
    rec.round = state.round();
    rec.creator = creator;
    rec.miner2_action = state.to_absolute(a2);
    rec.miner1_action = state.to_absolute(a1);
    rec.tip = state.to_absolute(state.tip());
    rec.height = state.abs_height();
    rec.chain_ones = state.abs_chain_count(Miner::One);
    rec.r1 = static_cast<std::int64_t>(rec.chain_ones) - static_cast<std::int64_t>(ones_before);
    rec.r2 = static_cast<std::int64_t>(state.abs_chain_count(Miner::Two)) - static_cast<std::int64_t>(twos_before);
    if (d1.capitulate) {
        rec.capitulated_at = state.base_height() + *d1.capitulate;
        rec.renewal = d1.to_b0;
    }
    if (observer) observer->on_action(state, rec);

    if (d1.capitulate) {
        state = state.capitulate(*d1.capitulate);
        if (d1.to_b0 && !canonical_equal(state, GameState::initial()))
            throw InvalidRenewal(miner1.id() + " signalled a renewal at round " + std::to_string(rec.round) +
                                 " but the capitulated state is not B_0");
    }
    return rec;
}

CreatorStream::CreatorStream(double alpha, std::uint64_t seed, std::uint64_t stream, std::vector<Miner> forced)
    : alpha_(alpha), rng_(seed, stream), forced_(std::move(forced)) {
    if (!(alpha >= 0.0 && alpha <= 1.0)) throw DomainError("alpha must lie in [0, 1]");
}

Miner CreatorStream::next() {
    if (used_ < forced_.size()) return forced_[used_++];
    return rng_.bernoulli(alpha_) ? Miner::One : Miner::Two;
}

Game::Game(std::unique_ptr<Strategy> miner1, CreatorStream creators, GameState start)
    : miner1_(std::move(miner1)),
      miner2_(std::make_unique<Frontier>()),
      creators_(std::move(creators)),
      state_(std::move(start)) {}

RoundRecord Game::step(RoundObserver* observer) {
    return step_round(state_, creators_.next(), *miner2_, *miner1_, observer);
}

Trace run_game(const Strategy& strategy, double alpha, std::uint64_t rounds, std::uint64_t seed,
               RoundObserver* observer, const std::vector<Miner>& forced) {
    Trace trace;
    trace.strategy = strategy.id();
    trace.alpha = alpha;
    trace.seed = seed;
    trace.rounds.reserve(rounds);
    Game game(strategy.clone(), CreatorStream(alpha, seed, 0, forced));
    for (std::uint64_t i = 0; i < rounds; ++i) trace.rounds.push_back(game.step(observer));
    return trace;
}

StrategyDecision TraceReplay::decide(const GameState& half, Miner self) {
    (void)self;
    const std::uint64_t r = half.round();
    if (r == 0 || r > trace_->rounds.size()) throw std::out_of_range("replay beyond the recorded trace");
    const RoundRecord& rec = trace_->rounds[r - 1];
    StrategyDecision d;
    d.action = half.to_relative(rec.miner1_action);
    if (rec.capitulated_at) {
        d.capitulate = *rec.capitulated_at - half.base_height();
        d.to_b0 = rec.renewal;
    }
    return d;
}

GameState replay_trace(const Trace& trace, RoundObserver& observer) {
    GameState state = GameState::initial();
    TraceReplay miner1(trace);
    Frontier miner2;
    for (const RoundRecord& rec : trace.rounds) step_round(state, rec.creator, miner2, miner1, &observer);
    return state;
}

void write_trace_csv(std::ostream& os, const Trace& trace) {
    os << "round,creator,miner2_action,miner1_action,chain_tip,height,r1,r2,capitulated\n";
    for (const RoundRecord& r : trace.rounds) {
        const int cap = !r.capitulated_at ? 0 : r.renewal ? 1 : 2;
        os << r.round << ',' << static_cast<int>(r.creator) << ',' << to_string(r.miner2_action) << ','
           << to_string(r.miner1_action) << ',' << r.tip << ',' << r.height << ',' << r.r1 << ',' << r.r2 << ','
           << cap << '\n';
    }
}

}  // namespace posmine
