#include "posmine/structure.hpp"

#include <algorithm>
#include <functional>
#include <sstream>

namespace posmine {

CheckpointList checkpoints(const GameState& state) {
    CheckpointList out{kGenesis};
    std::uint64_t prev_h = 0;
    const std::uint64_t top = state.tip_height();
    for (std::uint64_t h = 1; h <= top; ++h) {
        const BlockId prev = state.chain_at(prev_h);
        const BlockId v = state.chain_at(h);
        if (state.chain_count(Miner::One, prev_h, h) >= state.unpublished_in(Miner::One, prev, v)) {
            out.push_back(v);
            prev_h = h;
        }
    }
    return out;
}

const CheckpointList& CheckpointCache::get(const GameState& state) {
    const auto& hidden = state.unpublished(Miner::One);
    std::uint64_t hash = 0xcbf29ce484222325ull;
    for (BlockId b : hidden) hash = (hash ^ b.value) * 0x100000001b3ull;
    const Key key{state.round(), state.offset(), state.tip().value, state.tip_height(), hidden.size(), hash};
    if (!key_ || !(*key_ == key)) {
        value_ = checkpoints(state);
        key_ = key;
    }
    return value_;
}

bool is_checkpoint(const GameState& state, BlockId b) {
    const auto cps = checkpoints(state);
    return std::binary_search(cps.begin(), cps.end(), b);
}

namespace {

std::string interval_note(const char* bullet, BlockId a, BlockId b, std::uint64_t lhs, std::uint64_t rhs) {
    std::ostringstream os;
    os << bullet << " fails on (" << a << ',' << b << "]: " << lhs << " vs " << rhs;
    return os.str();
}

// Index of the highest checkpoint strictly below height h.
std::size_t preceding(const GameState& s, const CheckpointList& cps, std::uint64_t h) {
    std::size_t i = 0;
    while (i + 1 < cps.size() && s.height(cps[i + 1]) < h) ++i;
    return i;
}

}  // namespace

Verdict checkpoint_inequality(const GameState& state) {
    Verdict out;
    const auto cps = checkpoints(state);
    const auto ones = [&](BlockId a, BlockId b) {
        return state.chain_count(Miner::One, state.height(a), state.height(b));
    };
    for (std::uint64_t h = 0; h <= state.tip_height(); ++h) {
        const BlockId v = state.chain_at(h);
        const bool is_cp = std::binary_search(cps.begin(), cps.end(), v);
        if (!is_cp) {
            const BlockId p = cps[preceding(state, cps, h)];
            const auto lhs = ones(p, v), rhs = state.unpublished_in(Miner::One, p, v);
            ++out.checked;
            if (!(lhs < rhs)) out.fail(state.round(), interval_note("(ii)", p, v, lhs, rhs));
        }
        for (BlockId p : cps) {
            if (p <= v) continue;
            const auto lhs = ones(v, p);
            ++out.checked;
            if (is_cp) {
                // Open on the right: blocks strictly between v and P_i.
                const auto rhs = state.unpublished_in(Miner::One, v, BlockId{p.value - 1});
                if (!(lhs >= rhs)) out.fail(state.round(), interval_note("(i)", v, p, lhs, rhs));
            } else {
                const auto rhs = state.unpublished_in(Miner::One, v, p);
                if (!(lhs > rhs)) out.fail(state.round(), interval_note("(iii)", v, p, lhs, rhs));
            }
        }
    }
    return out;
}

Verdict checkpoint_reward_bound(const GameState& state) {
    Verdict out;
    const auto cps = checkpoints(state);
    // Prefix counts of Miner-1 blocks over labels.
    std::vector<std::uint64_t> t1(state.label_bound() + 1, 0);
    for (std::uint64_t v = 0; v < state.label_bound(); ++v) {
        const BlockId b{v};
        t1[v + 1] = t1[v] + (state.contains(b) && state.creator(b) == Miner::One ? 1 : 0);
    }
    for (std::uint64_t h = 1; h <= state.tip_height(); ++h) {
        const BlockId v = state.chain_at(h);
        if (std::binary_search(cps.begin(), cps.end(), v)) continue;
        const BlockId p = cps[preceding(state, cps, h)];
        const auto in_chain = state.chain_count(Miner::One, state.height(p), h);
        const auto created = t1[v.value + 1] - t1[p.value + 1];
        ++out.checked;
        if (!(2 * in_chain < created))
            out.fail(state.round(), interval_note("reward bound", p, v, 2 * in_chain, created));
    }
    return out;
}

bool is_timeserving(const GameState& half, const Action& action) {
    const PublishSet set = half.desugar(Miner::One, action);
    if (set.blocks.empty()) return true;
    GameState after = half;
    after.apply(Miner::One, set);
    return std::all_of(set.blocks.begin(), set.blocks.end(), [&](BlockId b) { return after.on_chain(b); });
}

bool is_orderly(const GameState& half, const Action& action) {
    const PublishSet set = half.desugar(Miner::One, action);
    if (set.blocks.empty()) return true;
    const auto path = set_as_path(set);
    if (!path) return false;
    return path->blocks == half.smallest_unpublished_above(Miner::One, path->base, path->blocks.size());
}

bool is_lcm(const GameState& half, const Action& action) {
    const PublishSet set = half.desugar(Miner::One, action);
    if (set.blocks.empty()) return true;
    const auto path = set_as_path(set);
    return path && half.on_chain(path->base);
}

bool is_trimmed(const GameState& half, const Action& action) {
    const PublishSet set = half.desugar(Miner::One, action);
    if (set.blocks.empty()) return true;
    const auto path = set_as_path(set);
    if (!path || !half.on_chain(path->base)) return false;
    if (path->base == half.tip()) return true;
    return half.creator(half.chain_at(half.height(path->base) + 1)) == Miner::Two;
}

const char* to_string(Property p) {
    switch (p) {
        case Property::Timeserving: return "timeserving";
        case Property::Orderly: return "orderly";
        case Property::Lcm: return "lcm";
        case Property::Trimmed: return "trimmed";
        case Property::Opportunistic: return "opportunistic";
        case Property::CheckpointRecurrent: return "checkpoint_recurrent";
    }
    return "?";
}

const std::vector<Property>& all_properties() {
    static const std::vector<Property> all{Property::Timeserving, Property::Orderly,       Property::Lcm,
                                           Property::Trimmed,     Property::Opportunistic, Property::CheckpointRecurrent};
    return all;
}

std::optional<Property> parse_property(const std::string& name) {
    for (Property p : all_properties())
        if (name == to_string(p)) return p;
    return std::nullopt;
}

bool PropertyReport::all_hold() const {
    return std::all_of(verdicts.begin(), verdicts.end(), [](const auto& kv) { return kv.second.holds; });
}

PropertyMonitor::PropertyMonitor(std::vector<Property> properties) {
    for (Property p : properties) {
        auto& v = verdicts_[p];
        v.empirical = p == Property::Opportunistic || p == Property::CheckpointRecurrent;
    }
}

void PropertyMonitor::record(Property p, bool ok, std::uint64_t round, const std::string& witness) {
    auto it = verdicts_.find(p);
    if (it == verdicts_.end()) return;
    auto& v = it->second;
    ++v.evaluated;
    if (!ok && v.holds) {
        v.holds = false;
        v.round = round;
        v.witness = witness;
    }
}

namespace {

void check_recurrence(const GameState& s, const CheckpointList& cps, std::set<std::uint64_t>& known,
                      const std::function<void(bool, const std::string&)>& report) {
    const std::uint64_t genesis = s.offset();
    known.erase(known.begin(), known.lower_bound(genesis + 1));
    std::set<std::uint64_t> now;
    for (BlockId c : cps) now.insert(s.to_absolute(c).value);
    for (std::uint64_t k : known) {
        if (!now.count(k)) {
            report(false, "checkpoint " + std::to_string(k) + " was undefined");
            return;
        }
    }
    const std::uint64_t top_known = known.empty() ? genesis : *known.rbegin();
    for (std::uint64_t c : now) {
        if (c == genesis || known.count(c)) continue;
        if (c < top_known) {
            report(false, "checkpoint " + std::to_string(c) + " appeared below " + std::to_string(top_known));
            return;
        }
        const BlockId rel = s.to_relative(BlockId{c});
        for (Miner m : {Miner::One, Miner::Two}) {
            if (s.unpublished_above(m, rel) != 0) {
                report(false, "checkpoint " + std::to_string(c) + " defined while miner " +
                                  std::to_string(miner_index(m) + 1) + " withholds blocks above it");
                return;
            }
        }
        known.insert(c);
    }
    report(true, "");
}

}  // namespace

void PropertyMonitor::on_half(const GameState& half, const PublishSet& action, const StrategyDecision&) {
    const std::uint64_t r = half.round();
    const std::string witness = to_string(half.to_absolute(action));
    if (!action.blocks.empty()) {
        if (wants(Property::Orderly)) record(Property::Orderly, is_orderly(half, action), r, witness);
        if (wants(Property::Lcm)) record(Property::Lcm, is_lcm(half, action), r, witness);
        if (wants(Property::Trimmed)) record(Property::Trimmed, is_trimmed(half, action), r, witness);
        pending_action_ = action;
        if (wants(Property::Opportunistic)) {
            if (const auto path = set_as_path(action)) {
                const BlockId top = path->blocks.back();
                opportunistic_.push_back(Pending{
                    half.to_absolute(top).value,
                    half.base_height() + half.height(path->base) + path->blocks.size(),
                    half.unpublished_above(Miner::One, path->base) == path->blocks.size(),
                    r,
                    witness,
                });
            }
        }
    } else {
        pending_action_.reset();
    }
    if (wants(Property::CheckpointRecurrent)) {
        check_recurrence(half, cache_.get(half), known_checkpoints_, [&](bool ok, const std::string& why) {
            record(Property::CheckpointRecurrent, ok, r, why.empty() ? witness : why + " before " + witness);
        });
    }
}

void PropertyMonitor::on_action(const GameState& after, const RoundRecord& rec) {
    const std::uint64_t r = rec.round;
    const std::string witness = to_string(rec.miner1_action);
    if (pending_action_ && wants(Property::Timeserving)) {
        const bool ok = std::all_of(pending_action_->blocks.begin(), pending_action_->blocks.end(),
                                    [&](BlockId b) { return after.on_chain(b); });
        record(Property::Timeserving, ok, r, witness);
    }
    pending_action_.reset();

    if (wants(Property::Opportunistic)) {
        std::vector<Pending> keep;
        for (const Pending& p : opportunistic_) {
            const bool alive = p.block >= after.offset() && after.on_chain(after.to_relative(BlockId{p.block}));
            if (!alive) continue;  // removed from the longest path: never final
            if (rec.capitulated_at && *rec.capitulated_at >= p.height) {
                record(Property::Opportunistic, p.took_all, p.round, p.action);
                continue;
            }
            keep.push_back(p);
        }
        opportunistic_ = std::move(keep);
    }
    if (wants(Property::CheckpointRecurrent)) {
        check_recurrence(after, cache_.get(after), known_checkpoints_, [&](bool ok, const std::string& why) {
            record(Property::CheckpointRecurrent, ok, r, why.empty() ? witness : why + " after " + witness);
        });
    }
}

PropertyReport PropertyMonitor::report() const { return PropertyReport{verdicts_}; }

PropertyReport classify_trace(const Trace& trace, const std::vector<Property>& properties) {
    PropertyMonitor monitor(properties);
    replay_trace(trace, monitor);
    return monitor.report();
}

PublishPath checkpoint_lift(const GameState& state, const PublishPath& action) {
    const auto cps = checkpoints(state);
    if (!state.on_chain(action.base) || cps.back() <= action.base)
        throw NoCheckpointAbove("no checkpoint in Succ(" + std::to_string(action.base.value) + ")");
    const BlockId c = cps.back();
    PublishPath out{{}, c};
    for (BlockId q : action.blocks)
        if (q > c) out.blocks.push_back(q);
    std::sort(out.blocks.begin(), out.blocks.end());
    return out;
}

bool is_safe_lift(const GameState& state, const PublishPath& original, const PublishPath& lifted) {
    if (!state.on_chain(original.base) || !state.on_chain(lifted.base) || lifted.base <= original.base)
        throw NotALift("lifted base must be a successor of the original base");
    std::vector<BlockId> q(original.blocks), q2(lifted.blocks);
    std::sort(q.begin(), q.end());
    std::sort(q2.begin(), q2.end());
    if (!std::includes(q.begin(), q.end(), q2.begin(), q2.end()))
        throw NotALift("lifted blocks must be a subset of the original blocks");
    const auto regained =
        state.chain_count(Miner::One, state.height(original.base), state.height(lifted.base));
    return regained >= q.size() - q2.size();
}

void OverrideMonitor::on_half(const GameState& half, const PublishSet& action, const StrategyDecision&) {
    armed_ = false;
    if (action.blocks.empty()) return;
    const auto path = set_as_path(action);
    if (!path || !is_trimmed(half, action)) {
        ++verdict_.skipped;
        return;
    }
    const auto cps = checkpoints(half);
    // Checkpoints lie on the longest path, so {v} ∪ Succ(v) holds one iff the highest is >= v.
    armed_ = cps.back() >= path->base;
    action_ = to_string(half.to_absolute(action));
}

void OverrideMonitor::on_action(const GameState& after, const RoundRecord& rec) {
    if (!armed_) return;
    armed_ = false;
    ++verdict_.checked;
    const auto cps = checkpoints(after);
    if (cps.back() != after.tip())
        verdict_.fail(rec.round, "tip " + std::to_string(rec.tip.value) + " is not a checkpoint after " + action_);
}

void ForkOwnershipMonitor::on_action(const GameState& s, const RoundRecord& rec) {
    for (BlockId b : s.published()) {
        if (s.on_chain(b)) continue;
        const std::uint64_t h = s.height(b);
        if (h > s.tip_height()) continue;
        BlockId r = b;
        while (!s.on_chain(r)) r = s.parent(r);
        ++verdict_.checked;
        const std::uint64_t theirs = s.chain_count(Miner::Two, s.height(r), h);
        if (theirs != 0) {
            const BlockId q = s.chain_at(h);
            verdict_.fail(rec.round, "path from " + std::to_string(s.to_absolute(r).value) + " to " +
                                         std::to_string(s.to_absolute(q).value) + " holds " + std::to_string(theirs) +
                                         " Miner-2 block(s); fork at " + std::to_string(s.to_absolute(b).value));
        }
    }
}

Verdict checkpoint_override_check(const Trace& trace) {
    OverrideMonitor m;
    replay_trace(trace, m);
    return m.verdict();
}

Verdict fork_ownership_check(const Trace& trace) {
    ForkOwnershipMonitor m;
    replay_trace(trace, m);
    return m.verdict();
}

}  // namespace posmine
