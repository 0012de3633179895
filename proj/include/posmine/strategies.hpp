#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "posmine/strategy.hpp"

namespace posmine {

// Publishes its own new block onto the tip and always capitulates.
class Frontier final : public Strategy {
public:
    StrategyDecision decide(const GameState& half, Miner self) override;
    std::string id() const override { return "frontier"; }
    std::unique_ptr<Strategy> clone() const override { return std::make_unique<Frontier>(*this); }
};

// Selfish Mining as a five-node automaton. Lead covers B_{2,0} onward: wait
// until Miner 2 is one block behind, then publish every withheld block onto 0.
// Block counts in Lead are taken from the last capitulation.
class SelfishMining final : public Strategy {
public:
    enum class Node { B0, B10, B11, Lead };

    StrategyDecision decide(const GameState& half, Miner self) override;
    std::string id() const override { return "sm"; }
    std::unique_ptr<Strategy> clone() const override { return std::make_unique<SelfishMining>(*this); }
    void sync(const GameState& state) override;
    Node node() const { return node_; }

private:
    Node node_ = Node::B0;
};

// Nothing-at-Stake Selfish Mining: SM plus the B_{1,2} / B_{2,2} branch that
// keeps block 1 around in the hope of winning the height-1 tie later.
class NothingAtStake final : public Strategy {
public:
    enum class Node { B0, B10, B11, B12, B22, Lead };

    StrategyDecision decide(const GameState& half, Miner self) override;
    std::string id() const override { return "nsm"; }
    std::unique_ptr<Strategy> clone() const override { return std::make_unique<NothingAtStake>(*this); }
    void sync(const GameState& state) override;
    Node node() const { return node_; }

private:
    Node node_ = Node::B0;
};

// Never publishes, never capitulates.
class Hoarder final : public Strategy {
public:
    StrategyDecision decide(const GameState&, Miner) override { return {}; }
    std::string id() const override { return "hoarder"; }
    std::unique_ptr<Strategy> clone() const override { return std::make_unique<Hoarder>(*this); }
};

class ScriptExhaustedMismatch : public std::runtime_error {
public:
    ScriptExhaustedMismatch(std::uint64_t round, const std::string& why);
    std::uint64_t round;
};

class ScriptParseError : public std::runtime_error {
public:
    ScriptParseError(std::size_t line, const std::string& what);
    std::size_t line;
};

// Replays actions keyed by absolute round; actions use absolute labels.
// Waits on rounds without an entry and never capitulates.
class Scripted final : public Strategy {
public:
    struct Entry {
        std::uint64_t round;
        Action action;
    };

    explicit Scripted(std::vector<Entry> entries, std::vector<Miner> creators = {});

    // Text form, one directive per line:
    //   creators 1 1 2 ...        optional forced creator sequence from round 1
    //   <round> wait
    //   <round> path <b,b,...> <base>
    //   <round> publish <k> <base>
    //   <round> set <from>-><to> ...
    static Scripted parse(const std::string& text);

    StrategyDecision decide(const GameState& half, Miner self) override;
    std::string id() const override { return "scripted"; }
    std::unique_ptr<Strategy> clone() const override { return std::make_unique<Scripted>(*this); }

    const std::vector<Miner>& creators() const { return creators_; }
    const std::map<std::uint64_t, Action>& entries() const { return entries_; }

private:
    std::map<std::uint64_t, Action> entries_;
    std::vector<Miner> creators_;
};

// Randomized timeserving strategy for tests and reduction experiments. Every
// publication is a path that immediately takes over the longest chain; the
// options control whether it is orderly, longest-chain-mining or trimmed.
// Decisions depend only on (seed, round, state), so a copy running in a
// shadow game makes exactly the same choices.
struct FuzzOptions {
    double publish_prob = 0.35;
    bool orderly = true;
    bool lcm_only = true;
    bool trimmed_only = false;
    double orphan_bias = 0.6;  // chance of preferring an off-chain base when one is eligible
    std::size_t max_extra = 2;  // blocks beyond the minimum needed to take over
    std::size_t window = 48;    // how many recent published blocks are considered as bases
};

class Fuzz final : public Strategy {
public:
    Fuzz(FuzzOptions options, std::uint64_t seed) : opt_(options), seed_(seed) {}

    StrategyDecision decide(const GameState& half, Miner self) override;
    std::string id() const override;
    std::unique_ptr<Strategy> clone() const override { return std::make_unique<Fuzz>(*this); }

private:
    FuzzOptions opt_;
    std::uint64_t seed_;
};

class UnknownStrategy : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// frontier | sm | nsm | hoarder | fuzz-orderly | fuzz-nonorderly | fuzz-nonlcm | fuzz-trimmed
std::unique_ptr<Strategy> make_strategy(const std::string& name, std::uint64_t seed = 0);

}  // namespace posmine
