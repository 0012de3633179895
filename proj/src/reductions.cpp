#include "posmine/reductions.hpp"

#include <algorithm>
#include <set>

#include "posmine/strategies.hpp"
#include "posmine/structure.hpp"

namespace posmine {

InnerNotTimeserving::InnerNotTimeserving(std::uint64_t r, const std::string& witness)
    : std::runtime_error("inner strategy is not timeserving in round " + std::to_string(r) + ": " + witness),
      round(r) {}

void SigmaMap::set(std::uint64_t from, std::uint64_t to) {
    if (from == to) {
        diff_.erase(from);
    } else {
        diff_[from] = to;
    }
}

// ---------------------------------------------------------------------------

ShadowReduction::ShadowReduction(std::unique_ptr<Strategy> inner, GameState start)
    : shadow_(std::move(start)), inner_(std::move(inner)) {}

ShadowReduction::ShadowReduction(const ShadowReduction& other)
    : Strategy(other), shadow_(other.shadow_), inner_(other.inner_->clone()) {}

void ShadowReduction::sync(const GameState& state) {
    shadow_ = state;
    inner_->sync(state);
}

StrategyDecision ShadowReduction::decide(const GameState& half, Miner self) {
    if (self != Miner::One) throw std::logic_error("reductions act for Miner 1");
    if (shadow_.round() + 1 != half.round())
        throw std::logic_error("shadow game is out of step with round " + std::to_string(half.round()));
    shadow_.create_block(half.last_creator());
    Frontier miner2;
    shadow_.apply(Miner::Two, miner2.decide(shadow_, Miner::Two).action);
    before_inner(half);
    return finish(half, inner_->decide(shadow_, Miner::One));
}

StrategyDecision ShadowReduction::finish(const GameState& outer, const StrategyDecision& d) {
    StrategyDecision out;
    const PublishSet set = shadow_.desugar(Miner::One, d.action);
    if (!set.blocks.empty()) {
        const PublishSet abs = shadow_.to_absolute(set);
        const auto path = set_as_path(set);
        if (!path) throw InnerNotTimeserving(shadow_.round(), to_string(abs));
        const std::uint64_t base_height = shadow_.height(path->base);
        shadow_.apply(Miner::One, set);
        for (BlockId b : set.blocks)
            if (!shadow_.on_chain(b)) throw InnerNotTimeserving(shadow_.round(), to_string(abs));
        out.action = translate(outer, abs, base_height);
    }
    if (d.capitulate) {
        out.capitulate = d.capitulate;
        shadow_ = shadow_.capitulate(*d.capitulate);
        after_capitulation();
        if (d.to_b0) {
            GameState real = outer;
            real.apply(Miner::One, out.action);
            out.to_b0 = canonical_equal(real.capitulate(*d.capitulate), GameState::initial());
        }
    }
    return out;
}

// ---------------------------------------------------------------------------

OrderlyReduction::OrderlyReduction(std::unique_ptr<Strategy> inner, bool check_invariants, GameState start)
    : ShadowReduction(std::move(inner), std::move(start)), check_(check_invariants) {}

void OrderlyReduction::sync(const GameState& state) {
    ShadowReduction::sync(state);
    sigma_ = SigmaMap{};
}

void OrderlyReduction::before_inner(const GameState& outer) {
    if (check_) check_invariants(outer);
}

void OrderlyReduction::after_capitulation() {
    const std::uint64_t genesis = shadow_.offset();
    sigma_.prune([&](std::uint64_t k) { return k < genesis || !shadow_.contains(shadow_.to_relative(BlockId{k})); });
}

PublishSet OrderlyReduction::translate(const GameState& outer, const PublishSet& set, std::uint64_t) {
    const auto path = set_as_path(set);
    const std::uint64_t k = path->blocks.size();
    BlockId real_base;
    try {
        real_base = outer.to_relative(BlockId{sigma_(path->base.value)});
    } catch (const UnknownBlock&) {
        throw std::logic_error("sigma maps the base outside the real tree");
    }
    const std::vector<BlockId> chosen = outer.smallest_unpublished_above(Miner::One, real_base, k);
    if (chosen.size() != k) throw std::logic_error("too few unpublished blocks above sigma(u)");

    // Snapshot for the monotonicity check.
    std::map<std::uint64_t, std::uint64_t> old;
    if (check_) {
        for (std::uint64_t v = 0; v < shadow_.label_bound(); ++v) {
            const BlockId a = shadow_.to_absolute(BlockId{v});
            old[a.value] = sigma_(a.value);
        }
    }

    for (std::size_t i = 0; i < k; ++i) sigma_.set(path->blocks[i].value, outer.to_absolute(chosen[i]).value);

    // Rank map between the remaining unpublished sets.
    std::vector<std::uint64_t> real_left;
    for (BlockId b : outer.unpublished(Miner::One))
        if (!std::binary_search(chosen.begin(), chosen.end(), b)) real_left.push_back(outer.to_absolute(b).value);
    const auto& shadow_left = shadow_.unpublished(Miner::One);
    if (shadow_left.size() > real_left.size()) throw std::logic_error("real game holds fewer unpublished blocks");
    for (std::size_t i = 0; i < shadow_left.size(); ++i)
        sigma_.set(shadow_.to_absolute(shadow_left[i]).value, real_left[i]);

    if (check_) {
        std::set<std::uint64_t> in_set;
        for (BlockId b : path->blocks) in_set.insert(b.value);
        for (const auto& [a, before] : old) {
            const std::uint64_t now = sigma_(a);
            const BlockId rel = shadow_.to_relative(BlockId{a});
            bool ok = true;
            if (in_set.count(a)) {
                ok = now <= before;
            } else if (shadow_.is_published(rel)) {
                ok = now == before;
            } else {
                ok = now >= before;
            }
            if (!ok) throw std::logic_error("sigma monotonicity fails at block " + std::to_string(a));
        }
    }

    PublishPath real{chosen, real_base};
    return path_to_set(real);
}

void OrderlyReduction::check_invariants(const GameState& real) const {
    const auto fail = [](const std::string& why) { throw std::logic_error("sigma invariant: " + why); };
    std::set<std::uint64_t> images;
    std::size_t published = 0;
    for (std::uint64_t v = 0; v < shadow_.label_bound(); ++v) {
        const BlockId s{v};
        const std::uint64_t a = shadow_.to_absolute(s).value;
        const std::uint64_t img = sigma_(a);
        if (!images.insert(img).second) fail("not injective at " + std::to_string(a));
        if (img < real.offset()) fail("image of " + std::to_string(a) + " lies below the real genesis");
        const BlockId r = real.to_relative(BlockId{img});
        if (!real.contains(r)) fail("image of " + std::to_string(a) + " is missing");
        if (shadow_.creator(s) != real.creator(r)) fail("creator differs at " + std::to_string(a));
        if (shadow_.creator(s) == Miner::Two && img != a) fail("moves Miner-2 block " + std::to_string(a));
        if (shadow_.is_published(s) != real.is_published(r)) fail("publication differs at " + std::to_string(a));
        if (!shadow_.is_published(s) || s == kGenesis) continue;
        ++published;
        const std::uint64_t parent = sigma_(shadow_.to_absolute(shadow_.parent(s)).value);
        if (real.to_absolute(real.parent(r)).value != parent) fail("edge differs at " + std::to_string(a));
        if (shadow_.publish_key(s).round != real.publish_key(r).round) fail("round differs at " + std::to_string(a));
    }
    if (published + 1 != real.published().size()) fail("published trees differ in size");
    for (BlockId v : shadow_.unpublished(Miner::One)) {
        const std::uint64_t av = shadow_.to_absolute(v).value;
        for (std::uint64_t u = 0; u < v.value; ++u) {
            const std::uint64_t au = shadow_.to_absolute(BlockId{u}).value;
            if (!(sigma_(av) > sigma_(au))) fail("order broken between " + std::to_string(au) + " and " + std::to_string(av));
        }
    }
}

// ---------------------------------------------------------------------------

StepLcmReduction::StepLcmReduction(std::unique_ptr<Strategy> inner, std::uint64_t n, GameState start)
    : ShadowReduction(std::move(inner), std::move(start)), n_(n) {}

PublishSet StepLcmReduction::translate(const GameState& outer, const PublishSet& set, std::uint64_t base_height) {
    const auto path = set_as_path(set);
    PublishPath real{{}, BlockId{}};
    for (BlockId b : path->blocks) real.blocks.push_back(outer.to_relative(b));
    const BlockId base_abs = path->base;
    const bool known = base_abs.value >= outer.offset() && outer.contains(outer.to_relative(base_abs));
    if (outer.round() == n_ + 1 && !(known && outer.on_chain(outer.to_relative(base_abs)))) {
        if (base_height > outer.tip_height())
            throw NoChainBlockAtHeight("no longest-path block at height " + std::to_string(base_height));
        real.base = outer.chain_at(base_height);
        if (real.blocks.front() <= real.base)
            throw NoChainBlockAtHeight("chain block at height " + std::to_string(base_height) +
                                       " is newer than the published blocks");
    } else {
        real.base = outer.to_relative(base_abs);
    }
    return path_to_set(real);
}

// ---------------------------------------------------------------------------

LcmReduction::LcmReduction(std::unique_ptr<Strategy> inner, std::uint64_t horizon)
    : top_(std::move(inner)), horizon_(horizon), base_id_(top_->id()) {}

LcmReduction::LcmReduction(const LcmReduction& other)
    : Strategy(other),
      top_(other.top_->clone()),
      horizon_(other.horizon_),
      layers_(other.layers_),
      base_id_(other.base_id_) {}

StrategyDecision LcmReduction::decide(const GameState& half, Miner self) {
    StrategyDecision d = top_->decide(half, self);
    if (half.round() > horizon_) return d;
    const PublishSet set = half.desugar(Miner::One, d.action);
    if (set.blocks.empty() || is_lcm(half, set)) return d;

    // The composite so far is (round-1)-LCM; wrap it as orderly(lcm_step(., round-1)).
    // Both new shadow games start from this half state, which the current
    // composite has just seen, so its decision is fed straight through.
    auto step = std::make_unique<StepLcmReduction>(std::move(top_), half.round() - 1, half);
    StepLcmReduction* step_raw = step.get();
    auto orderly = std::make_unique<OrderlyReduction>(std::move(step), false, half);
    const StrategyDecision moved = step_raw->finish(orderly->shadow(), d);
    StrategyDecision out = orderly->finish(half, moved);
    top_ = std::move(orderly);
    ++layers_;
    if (!is_lcm(half, out.action)) throw std::logic_error("lcm layer produced an off-chain publication");
    return out;
}

std::unique_ptr<Strategy> orderly_reduce(std::unique_ptr<Strategy> inner, bool check_invariants) {
    return std::make_unique<OrderlyReduction>(std::move(inner), check_invariants);
}

std::unique_ptr<Strategy> lcm_step_reduce(std::unique_ptr<Strategy> inner, std::uint64_t n) {
    return std::make_unique<StepLcmReduction>(std::move(inner), n);
}

std::unique_ptr<Strategy> lcm_reduce(std::unique_ptr<Strategy> inner, std::uint64_t horizon) {
    return std::make_unique<LcmReduction>(std::move(inner), horizon);
}

// ---------------------------------------------------------------------------

void DeferredPublication::observe(Miner creator, BlockId block) {
    walk.step(creator);
    if (creator == Miner::One) interim.push_back(block);
}

PublishPath DeferredPublication::action() const {
    PublishPath p{lifted, checkpoint};
    p.blocks.insert(p.blocks.end(), interim.begin(), interim.end());
    std::sort(p.blocks.begin(), p.blocks.end());
    return p;
}

DeferredPublication checkpoint_preserve_case1(const GameState& state, const PublishPath& action) {
    if (!is_trimmed(state, action)) throw std::invalid_argument("action is not trimmed");
    const auto cps = checkpoints(state);
    const BlockId p = cps.back();
    if (!(p > action.base))
        throw NotForkingCheckpoint("PublishPath onto " + std::to_string(action.base.value) +
                                   " does not fork the most recent checkpoint " + std::to_string(p.value));
    DeferredPublication plan;
    plan.checkpoint = state.to_absolute(p);
    for (BlockId q : action.blocks)
        if (q > p) plan.lifted.push_back(state.to_absolute(q));
    std::sort(plan.lifted.begin(), plan.lifted.end());
    const auto succ = static_cast<std::int64_t>(state.tip_height() - state.height(p));
    plan.w0 = static_cast<std::int64_t>(plan.lifted.size()) - succ - 1;
    if (plan.w0 <= 0) throw W0NonPositive("W_0 = " + std::to_string(plan.w0));
    plan.walk.w = plan.w0;
    return plan;
}

}  // namespace posmine
