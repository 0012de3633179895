#include "posmine/strategies.hpp"

#include <algorithm>
#include <numeric>
#include <sstream>

#include "posmine/rng.hpp"

namespace posmine {

namespace {

StrategyDecision capitulate_at(std::uint64_t c, bool to_b0, Action action = Wait{}) {
    StrategyDecision d;
    d.action = std::move(action);
    d.capitulate = c;
    d.to_b0 = to_b0;
    return d;
}

[[noreturn]] void unreachable(const char* who, const GameState& s) {
    throw UnreachableState(std::string(who) + ": no automaton node for the state at round " + std::to_string(s.round()));
}

void require(bool ok, const char* who, const GameState& s) {
    if (!ok) unreachable(who, s);
}

bool only_genesis_published(const GameState& s) { return s.tip_height() == 0 && s.published().size() == 1; }

// Chain 0 <- 2 <- ... of Miner-2 blocks only, nothing else published.
bool honest_chain(const GameState& s, std::uint64_t h) {
    return s.tip_height() == h && s.chain_count(Miner::Two) == h && s.published().size() == h + 1;
}

bool holds(const GameState& s, std::initializer_list<std::uint64_t> labels) {
    const auto& u = s.unpublished(Miner::One);
    if (u.size() != labels.size()) return false;
    return std::equal(u.begin(), u.end(), labels.begin(), [](BlockId b, std::uint64_t v) { return b.value == v; });
}

bool in_lead(const GameState& s) {
    const auto& u = s.unpublished(Miner::One);
    return u.size() >= 2 && u[0] == BlockId{1} && u[1] == BlockId{2} && honest_chain(s, s.tip_height()) &&
           s.tip_height() + 2 <= u.size();
}

// The Lead node shared by SM and NSM. Returns true when the lead collapsed.
bool lead_step(const GameState& half, StrategyDecision& d) {
    const auto& u = half.unpublished(Miner::One);
    if (half.last_creator() == Miner::Two && half.tip_height() + 1 == u.size()) {
        d = capitulate_at(u.size(), true, PublishPath{u, kGenesis});
        return true;
    }
    return false;
}

}  // namespace

StrategyDecision Frontier::decide(const GameState& half, Miner self) {
    StrategyDecision d;
    std::uint64_t h = half.tip_height();
    if (half.last_creator() == self) {
        d.action = PublishPath{{half.newest()}, half.tip()};
        ++h;
    }
    d.capitulate = h;
    const auto& u = half.unpublished(self);
    d.to_b0 = u.empty() || (u.size() == 1 && u[0] == half.newest() && half.last_creator() == self);
    return d;
}

StrategyDecision SelfishMining::decide(const GameState& half, Miner self) {
    require(self == Miner::One, "sm", half);
    const bool mine = half.last_creator() == Miner::One;
    const std::uint64_t n = half.newest().value;
    StrategyDecision d;
    switch (node_) {
        case Node::B0:
            require(n == 1, "sm", half);
            if (mine) {
                node_ = Node::B10;
                return d;
            }
            return capitulate_at(half.tip_height(), true);
        case Node::B10:
            require(n == 2 && holds(half, mine ? std::initializer_list<std::uint64_t>{1, 2}
                                                : std::initializer_list<std::uint64_t>{1}),
                    "sm", half);
            node_ = mine ? Node::Lead : Node::B11;
            return d;
        case Node::B11:
            require(n == 3, "sm", half);
            node_ = Node::B0;
            if (mine) return capitulate_at(2, true, PublishPath{{BlockId{1}, BlockId{3}}, kGenesis});
            return capitulate_at(2, true);
        case Node::Lead:
            require(half.chain_count(Miner::One) == 0, "sm", half);
            if (lead_step(half, d)) node_ = Node::B0;
            return d;
    }
    unreachable("sm", half);
}

void SelfishMining::sync(const GameState& s) {
    if (only_genesis_published(s) && holds(s, {})) {
        node_ = Node::B0;
    } else if (only_genesis_published(s) && holds(s, {1}) && s.newest() == BlockId{1}) {
        node_ = Node::B10;
    } else if (honest_chain(s, 1) && s.tip() == BlockId{2} && holds(s, {1})) {
        node_ = Node::B11;
    } else if (in_lead(s)) {
        node_ = Node::Lead;
    } else {
        unreachable("sm", s);
    }
}

StrategyDecision NothingAtStake::decide(const GameState& half, Miner self) {
    require(self == Miner::One, "nsm", half);
    const bool mine = half.last_creator() == Miner::One;
    const std::uint64_t n = half.newest().value;
    StrategyDecision d;
    switch (node_) {
        case Node::B0:
            require(n == 1, "nsm", half);
            if (mine) {
                node_ = Node::B10;
                return d;
            }
            return capitulate_at(half.tip_height(), true);
        case Node::B10:
            require(n == 2 && holds(half, mine ? std::initializer_list<std::uint64_t>{1, 2}
                                                : std::initializer_list<std::uint64_t>{1}),
                    "nsm", half);
            node_ = mine ? Node::Lead : Node::B11;
            return d;
        case Node::B11:
            require(n == 3 && holds(half, mine ? std::initializer_list<std::uint64_t>{1, 3}
                                                : std::initializer_list<std::uint64_t>{1}),
                    "nsm", half);
            if (mine) {
                node_ = Node::B0;
                return capitulate_at(2, true, PublishPath{{BlockId{1}, BlockId{3}}, kGenesis});
            }
            node_ = Node::B12;
            return d;
        case Node::B12:
            require(n == 4, "nsm", half);
            if (mine) {
                node_ = Node::B22;
                return d;
            }
            node_ = Node::B0;
            return capitulate_at(3, true);
        case Node::B22:
            require(n == 5 && half.unpublished(Miner::One).size() >= 2, "nsm", half);
            if (mine) {
                node_ = Node::B0;
                return capitulate_at(3, true, PublishPath{{BlockId{1}, BlockId{4}, BlockId{5}}, kGenesis});
            }
            // Block 3 becomes genesis; 4 and 5 are relabeled 1 and 2, which is B_{1,1}.
            node_ = Node::B11;
            return capitulate_at(2, false);
        case Node::Lead:
            require(half.chain_count(Miner::One) == 0, "nsm", half);
            if (lead_step(half, d)) node_ = Node::B0;
            return d;
    }
    unreachable("nsm", half);
}

void NothingAtStake::sync(const GameState& s) {
    if (only_genesis_published(s) && holds(s, {})) {
        node_ = Node::B0;
    } else if (only_genesis_published(s) && holds(s, {1}) && s.newest() == BlockId{1}) {
        node_ = Node::B10;
    } else if (honest_chain(s, 1) && s.tip() == BlockId{2} && holds(s, {1})) {
        node_ = Node::B11;
    } else if (honest_chain(s, 2) && s.tip() == BlockId{3} && holds(s, {1})) {
        node_ = Node::B12;
    } else if (honest_chain(s, 2) && s.tip() == BlockId{3} && holds(s, {1, 4})) {
        node_ = Node::B22;
    } else if (in_lead(s)) {
        node_ = Node::Lead;
    } else {
        unreachable("nsm", s);
    }
}

ScriptExhaustedMismatch::ScriptExhaustedMismatch(std::uint64_t r, const std::string& why)
    : std::runtime_error("scripted action at round " + std::to_string(r) + " is invalid: " + why), round(r) {}

ScriptParseError::ScriptParseError(std::size_t l, const std::string& what)
    : std::runtime_error("script line " + std::to_string(l) + ": " + what), line(l) {}

Scripted::Scripted(std::vector<Entry> entries, std::vector<Miner> creators) : creators_(std::move(creators)) {
    std::uint64_t last = 0;
    for (auto& e : entries) {
        if (e.round <= last) throw std::invalid_argument("script rounds must be strictly increasing");
        last = e.round;
        entries_.emplace(e.round, std::move(e.action));
    }
}

namespace {

std::uint64_t script_number(const std::string& tok, std::size_t line) {
    if (tok.empty() || !std::all_of(tok.begin(), tok.end(), [](char c) { return c >= '0' && c <= '9'; }))
        throw ScriptParseError(line, "expected a number, got '" + tok + "'");
    return std::stoull(tok);
}

}  // namespace

Scripted Scripted::parse(const std::string& text) {
    std::istringstream is(text);
    std::vector<Entry> entries;
    std::vector<Miner> creators;
    std::string raw;
    std::size_t lineno = 0;
    std::uint64_t last = 0;
    while (std::getline(is, raw)) {
        ++lineno;
        std::istringstream ls(raw);
        std::vector<std::string> t;
        for (std::string w; ls >> w;) t.push_back(w);
        if (t.empty() || t[0][0] == '#') continue;
        if (t[0] == "creators") {
            for (std::size_t i = 1; i < t.size(); ++i) {
                if (t[i] != "1" && t[i] != "2") throw ScriptParseError(lineno, "creator must be 1 or 2");
                creators.push_back(t[i] == "1" ? Miner::One : Miner::Two);
            }
            continue;
        }
        if (t.size() < 2) throw ScriptParseError(lineno, "expected '<round> <action>'");
        Entry e{script_number(t[0], lineno), Wait{}};
        if (e.round <= last) throw ScriptParseError(lineno, "rounds must be strictly increasing");
        last = e.round;
        const std::string& kind = t[1];
        if (kind == "wait") {
            if (t.size() != 2) throw ScriptParseError(lineno, "wait takes no arguments");
        } else if (kind == "path") {
            if (t.size() != 4) throw ScriptParseError(lineno, "path takes <b,b,...> <base>");
            PublishPath p;
            std::istringstream bs(t[2]);
            for (std::string b; std::getline(bs, b, ',');) p.blocks.push_back(BlockId{script_number(b, lineno)});
            p.base = BlockId{script_number(t[3], lineno)};
            e.action = p;
        } else if (kind == "publish") {
            if (t.size() != 4) throw ScriptParseError(lineno, "publish takes <k> <base>");
            e.action = Publish{script_number(t[2], lineno), BlockId{script_number(t[3], lineno)}};
        } else if (kind == "set") {
            PublishSet s;
            for (std::size_t i = 2; i < t.size(); ++i) {
                const auto arrow = t[i].find("->");
                if (arrow == std::string::npos) throw ScriptParseError(lineno, "edge must look like a->b");
                Edge edge{BlockId{script_number(t[i].substr(0, arrow), lineno)},
                          BlockId{script_number(t[i].substr(arrow + 2), lineno)}};
                s.blocks.push_back(edge.from);
                s.edges.push_back(edge);
            }
            e.action = s;
        } else {
            throw ScriptParseError(lineno, "unknown action '" + kind + "'");
        }
        entries.push_back(std::move(e));
    }
    return Scripted(std::move(entries), std::move(creators));
}

StrategyDecision Scripted::decide(const GameState& half, Miner self) {
    StrategyDecision d;
    auto it = entries_.find(half.round());
    if (it == entries_.end()) return d;
    try {
        d.action = std::visit(
            [&](const auto& a) -> Action {
                using T = std::decay_t<decltype(a)>;
                if constexpr (std::is_same_v<T, Wait>) {
                    return a;
                } else if constexpr (std::is_same_v<T, PublishSet>) {
                    return half.to_relative(a);
                } else if constexpr (std::is_same_v<T, PublishPath>) {
                    PublishPath p{{}, half.to_relative(a.base)};
                    for (BlockId b : a.blocks) p.blocks.push_back(half.to_relative(b));
                    return p;
                } else {
                    return Publish{a.count, half.to_relative(a.base)};
                }
            },
            it->second);
    } catch (const UnknownBlock& e) {
        throw ScriptExhaustedMismatch(half.round(), e.what());
    }
    if (auto err = half.validate(self, d.action)) throw ScriptExhaustedMismatch(half.round(), err->what());
    return d;
}

std::string Fuzz::id() const {
    std::ostringstream os;
    os << "fuzz(" << (opt_.orderly ? "orderly" : "nonorderly") << ','
       << (opt_.trimmed_only ? "trimmed" : opt_.lcm_only ? "lcm" : "nonlcm") << ",seed=" << seed_ << ')';
    return os.str();
}

StrategyDecision Fuzz::decide(const GameState& half, Miner self) {
    StrategyDecision d;
    if (half.unpublished(self).empty()) return d;
    Rng rng(seed_, half.round());
    if (!rng.bernoulli(opt_.publish_prob)) return d;

    struct Candidate {
        BlockId base;
        std::size_t need;
        std::size_t avail;
        bool on_chain;
    };
    std::vector<Candidate> all;
    const std::uint64_t tip_h = half.tip_height();
    std::size_t seen = 0;
    for (std::uint64_t v = half.label_bound(); v-- > 0 && seen < opt_.window;) {
        const BlockId p{v};
        if (!half.is_published(p)) continue;
        ++seen;
        const std::uint64_t h = half.height(p);
        if (h > tip_h) continue;
        const std::size_t need = tip_h - h + 1;
        const std::size_t avail = half.unpublished_above(self, p);
        if (avail < need) continue;
        const bool chain = half.on_chain(p);
        if ((opt_.lcm_only || opt_.trimmed_only) && !chain) continue;
        if (opt_.trimmed_only && p != half.tip() && half.creator(half.chain_at(h + 1)) != Miner::Two) continue;
        all.push_back({p, need, avail, chain});
    }
    if (all.empty()) return d;

    std::vector<Candidate> pool;
    if (!opt_.lcm_only && rng.bernoulli(opt_.orphan_bias))
        std::copy_if(all.begin(), all.end(), std::back_inserter(pool), [](const Candidate& c) { return !c.on_chain; });
    if (pool.empty()) pool = all;
    const Candidate& c = pool[rng.below(pool.size())];

    const std::size_t k = c.need + rng.below(std::min(opt_.max_extra, c.avail - c.need) + 1);
    std::vector<BlockId> above = half.smallest_unpublished_above(self, c.base, c.avail);
    if (!opt_.orderly) {
        for (std::size_t i = 0; i < k; ++i) std::swap(above[i], above[i + rng.below(above.size() - i)]);
    }
    above.resize(k);
    std::sort(above.begin(), above.end());
    d.action = PublishPath{std::move(above), c.base};
    return d;
}

std::unique_ptr<Strategy> make_strategy(const std::string& name, std::uint64_t seed) {
    if (name == "frontier") return std::make_unique<Frontier>();
    if (name == "sm") return std::make_unique<SelfishMining>();
    if (name == "nsm") return std::make_unique<NothingAtStake>();
    if (name == "hoarder") return std::make_unique<Hoarder>();
    FuzzOptions o;
    if (name == "fuzz-orderly") return std::make_unique<Fuzz>(o, seed);
    if (name == "fuzz-nonorderly") {
        o.orderly = false;
        return std::make_unique<Fuzz>(o, seed);
    }
    if (name == "fuzz-nonlcm") {
        o.lcm_only = false;
        return std::make_unique<Fuzz>(o, seed);
    }
    if (name == "fuzz-trimmed") {
        o.trimmed_only = true;
        return std::make_unique<Fuzz>(o, seed);
    }
    throw UnknownStrategy("unknown strategy '" + name + "'");
}

}  // namespace posmine
