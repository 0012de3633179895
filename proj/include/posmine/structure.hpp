#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "posmine/game.hpp"
#include "posmine/game_state.hpp"

namespace posmine {

// Ascending longest-path blocks, starting at genesis.
using CheckpointList = std::vector<BlockId>;

CheckpointList checkpoints(const GameState& state);

// Memoizes the last result, keyed by everything checkpoints() reads.
class CheckpointCache {
public:
    const CheckpointList& get(const GameState& state);

private:
    struct Key {
        std::uint64_t round, offset, tip, tip_height, hidden, hidden_hash;
        bool operator==(const Key&) const = default;
    };
    std::optional<Key> key_;
    CheckpointList value_;
};

bool is_checkpoint(const GameState& state, BlockId b);

// Outcome of a lemma check. `detail` and `round` describe the first violation.
struct Verdict {
    bool holds = true;
    std::uint64_t checked = 0;
    std::uint64_t skipped = 0;
    std::optional<std::uint64_t> round;
    std::string detail;

    void fail(std::uint64_t r, std::string why) {
        if (holds) {
            holds = false;
            round = r;
            detail = std::move(why);
        }
    }
};

// Checkpoint inequality bullets (i)-(iii) for every longest-path block.
Verdict checkpoint_inequality(const GameState& state);
// For a non-checkpoint v after checkpoint P: |A(C)∩(P,v]∩T_1| < |T_1∩(P,v]| / 2.
Verdict checkpoint_reward_bound(const GameState& state);

// Action classifiers on the half state. Actions are desugared first; Wait
// satisfies every property. Orderly, LCM and trimmed are defined on paths, so
// a publication that is not a single path fails them.
bool is_timeserving(const GameState& half, const Action& action);
bool is_orderly(const GameState& half, const Action& action);
bool is_lcm(const GameState& half, const Action& action);
bool is_trimmed(const GameState& half, const Action& action);

enum class Property { Timeserving, Orderly, Lcm, Trimmed, Opportunistic, CheckpointRecurrent };

const char* to_string(Property p);
std::optional<Property> parse_property(const std::string& name);
const std::vector<Property>& all_properties();

struct PropertyVerdict {
    bool holds = true;
    bool empirical = false;  // decided by whole-trace retrospection
    std::uint64_t evaluated = 0;
    std::optional<std::uint64_t> round;
    std::string witness;
};

struct PropertyReport {
    std::map<Property, PropertyVerdict> verdicts;
    bool all_hold() const;
};

// Classifies Miner 1's actions round by round. Attach to step_round/Game::step.
class PropertyMonitor : public RoundObserver {
public:
    explicit PropertyMonitor(std::vector<Property> properties = all_properties());

    void on_half(const GameState& half, const PublishSet& action, const StrategyDecision& decision) override;
    void on_action(const GameState& after, const RoundRecord& record) override;
    PropertyReport report() const;

private:
    struct Pending {
        std::uint64_t block;   // absolute label of max Q
        std::uint64_t height;  // absolute height of max Q
        bool took_all;         // Q = U ∩ (v, ∞)
        std::uint64_t round;
        std::string action;
    };

    bool wants(Property p) const { return verdicts_.count(p) != 0; }
    void record(Property p, bool ok, std::uint64_t round, const std::string& witness);

    std::map<Property, PropertyVerdict> verdicts_;
    std::optional<PublishSet> pending_action_;
    std::vector<Pending> opportunistic_;
    std::set<std::uint64_t> known_checkpoints_;
    CheckpointCache cache_;
};

PropertyReport classify_trace(const Trace& trace, const std::vector<Property>& properties = all_properties());

class NoCheckpointAbove : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

class NotALift : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// PublishPath(Q ∩ (c_v, ∞), c_v) with c_v the highest checkpoint in Succ(v).
PublishPath checkpoint_lift(const GameState& state, const PublishPath& action);

// |(Succ(v) \ Succ(v')) ∩ T_1| >= |Q \ Q'|. Throws NotALift unless v' ∈ Succ(v) and Q' ⊆ Q.
bool is_safe_lift(const GameState& state, const PublishPath& original, const PublishPath& lifted);

// A trimmed PublishPath(Q,v) with a checkpoint in {v} ∪ Succ(v) must leave a
// checkpoint at the new tip. Non-trimmed publications are counted as skipped.
class OverrideMonitor : public RoundObserver {
public:
    void on_half(const GameState& half, const PublishSet& action, const StrategyDecision& decision) override;
    void on_action(const GameState& after, const RoundRecord& record) override;
    const Verdict& verdict() const { return verdict_; }

private:
    bool armed_ = false;
    std::string action_;
    Verdict verdict_;
};

// Whenever a published block shares its height with the longest-path block q,
// the path from their common ancestor r up to q holds only Miner-1 blocks.
class ForkOwnershipMonitor : public RoundObserver {
public:
    void on_action(const GameState& after, const RoundRecord& record) override;
    const Verdict& verdict() const { return verdict_; }

private:
    Verdict verdict_;
};

Verdict checkpoint_override_check(const Trace& trace);
Verdict fork_ownership_check(const Trace& trace);

// Fans one round out to several observers.
class ObserverGroup : public RoundObserver {
public:
    ObserverGroup(std::initializer_list<RoundObserver*> members) : members_(members) {}
    void add(RoundObserver* o) { members_.push_back(o); }
    void on_half(const GameState& half, const PublishSet& action, const StrategyDecision& decision) override {
        for (auto* m : members_) m->on_half(half, action, decision);
    }
    void on_action(const GameState& after, const RoundRecord& record) override {
        for (auto* m : members_) m->on_action(after, record);
    }

private:
    std::vector<RoundObserver*> members_;
};

}  // namespace posmine
