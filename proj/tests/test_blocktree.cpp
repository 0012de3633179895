#include <catch_amalgamated.hpp>

#include <random>
#include <sstream>

#include "fixtures.hpp"
#include "oracles.hpp"
#include "posmine/game.hpp"
#include "posmine/state_io.hpp"
#include "posmine/strategies.hpp"

using namespace posmine;
using fixtures::B;
using fixtures::path;

namespace {

std::vector<BlockId> ids(std::initializer_list<std::uint64_t> v) {
    std::vector<BlockId> out;
    for (auto x : v) out.push_back(B(x));
    return out;
}

// Captures the state right after Miner 1's action, before capitulation.
struct AfterAction : RoundObserver {
    std::optional<GameState> state;
    void on_action(const GameState& after, const RoundRecord&) override { state = after; }
};

}  // namespace

TEST_CASE("initial state holds only genesis", "[blocktree]") {
    const GameState s = GameState::initial();
    CHECK(s.published() == ids({0}));
    CHECK(s.unpublished(Miner::One).empty());
    CHECK(s.unpublished(Miner::Two).empty());
    CHECK(s.tip() == kGenesis);
    CHECK(s.tip_height() == 0);
    CHECK(s.round() == 0);
    CHECK(s.creator(kGenesis) == Miner::None);
}

TEST_CASE("validity bullets are reported in order", "[blocktree]") {
    using K = ValidityError::Kind;
    const GameState b10 = fixtures::b_k0(1);
    CHECK_FALSE(b10.validate(Miner::One, path({1}, 0)));

    auto err = b10.validate(Miner::One, path({2}, 0));
    REQUIRE(err);
    CHECK(err->kind == K::NotOwned);
    CHECK(err->block == B(2));

    const GameState b20 = fixtures::b_k0(2);
    err = b20.validate(Miner::One, PublishSet{ids({1, 2}), {{B(1), B(2)}, {B(2), B(0)}}});
    REQUIRE(err);
    CHECK(err->kind == K::BackwardEdge);
    CHECK(err->edge == Edge{B(1), B(2)});

    SECTION("dangling and cardinality") {
        err = b20.validate(Miner::One, PublishSet{ids({2}), {{B(2), B(1)}}});
        REQUIRE(err);
        CHECK(err->kind == K::DanglingEdge);
        err = b20.validate(Miner::One, PublishSet{ids({1, 2}), {{B(2), B(0)}}});
        REQUIRE(err);
        CHECK(err->kind == K::EdgeCardinality);
        CHECK(err->block == B(1));
        err = b20.validate(Miner::One, PublishSet{ids({1}), {{B(1), B(0)}, {B(1), B(0)}}});
        REQUIRE(err);
        CHECK(err->kind == K::EdgeCardinality);
        // Miner 2 does not own Miner 1's blocks.
        CHECK(b20.validate(Miner::Two, path({1}, 0))->kind == K::NotOwned);
    }
    SECTION("apply throws the same error") {
        GameState s = b20;
        CHECK_THROWS_AS(s.apply(Miner::One, path({3}, 0)), ValidityError);
    }
}

TEST_CASE("apply_action examples", "[blocktree]") {
    GameState s = fixtures::b_k0(2);
    s.apply(Miner::One, path({1, 2}, 0));
    CHECK(s.tip() == B(2));
    CHECK(s.ancestors(B(2)) == ids({0, 1, 2}));
    CHECK(s.unpublished(Miner::One).empty());

    GameState b11 = fixtures::b11();
    const GameState before = b11;
    b11.apply(Miner::One, Wait{});
    CHECK(canonical_equal(b11, before));
    CHECK(b11.tip() == before.tip());

    GameState b22 = fixtures::b22();
    b22.create_block(Miner::One);  // block 5
    b22.apply(Miner::One, path({1, 4, 5}, 0));
    CHECK(b22.tip() == B(5));
    CHECK(b22.parent(B(5)) == B(4));
    CHECK(b22.parent(B(4)) == B(1));
    CHECK(b22.parent(B(1)) == B(0));

    SECTION("Publish(k,u) takes the k smallest blocks above u") {
        GameState t = fixtures::b_k0(3);
        t.apply(Miner::One, Publish{2, B(0)});
        CHECK(t.tip() == B(2));
        CHECK(t.unpublished(Miner::One) == ids({3}));
        GameState u = fixtures::b_k0(2);
        u.apply(Miner::One, Publish{5, B(0)});  // min(k, |S|) blocks
        CHECK(u.tip_height() == 2);
    }
}

TEST_CASE("step_round follows the order of operations", "[blocktree]") {
    Frontier f1, f2;
    Hoarder wait;
    SECTION("both frontier from B_0, Miner 2 wins") {
        GameState s = GameState::initial();
        AfterAction seen;
        const RoundRecord rec = step_round(s, Miner::Two, f2, f1, &seen);
        REQUIRE(seen.state);
        CHECK(canonical_equal(*seen.state, fixtures::b01()));
        CHECK(rec.r2 == 1);
        CHECK(rec.r1 == 0);
        // FRONTIER capitulates; B_{0,1} seen from block 1 is B_0.
        CHECK(canonical_equal(s, GameState::initial()));
        CHECK(rec.renewal);
    }
    SECTION("Miner 1 withholds") {
        GameState s = GameState::initial();
        step_round(s, Miner::One, f2, wait);
        CHECK(canonical_equal(s, fixtures::b_k0(1)));
        step_round(s, Miner::Two, f2, wait);
        CHECK(canonical_equal(s, fixtures::b11()));
        CHECK(s.tip() == B(2));
        CHECK(s.unpublished(Miner::One) == ids({1}));
    }
}

TEST_CASE("longest chain tie-breaking", "[blocktree]") {
    // 0<-2 published in round 2, 0<-1 published in round 3.
    const GameState s = GameState::assemble(3, 0,
                                            {{B(1), Miner::One, B(0), 3},
                                             {B(2), Miner::Two, B(0), 2},
                                             {B(3), Miner::Two, std::nullopt, std::nullopt}});
    CHECK(s.tip() == B(2));
    CHECK(oracle::longest_chain(s) == B(2));
    CHECK(fixtures::b_k0(2).tip() == kGenesis);

    SECTION("same action: ascending label order decides") {
        GameState t = fixtures::b_k0(2);
        t.apply(Miner::One, PublishSet{ids({1, 2}), {{B(1), B(0)}, {B(2), B(0)}}});
        CHECK(t.tip() == B(1));
    }
    SECTION("Miner 2 acts first and keeps ties") {
        GameState t = fixtures::b_k0(1);
        t.create_block(Miner::Two);
        t.apply(Miner::Two, path({2}, 0));
        t.apply(Miner::One, path({1}, 0));
        CHECK(t.tip() == B(2));
    }
    SECTION("SM fork replaces a shorter honest chain") {
        GameState t = fixtures::b_k0(2);
        fixtures::honest(t);  // 3 -> 0
        t.create_block(Miner::One);
        t.apply(Miner::One, path({1, 2, 4}, 0));
        CHECK(t.tip() == B(4));
    }
}

TEST_CASE("heights, ancestors and successors", "[blocktree]") {
    GameState s = GameState::initial();
    fixtures::honest(s);
    fixtures::honest(s);
    CHECK(s.height(B(2)) == 2);
    CHECK(s.successors(B(1)) == ids({2}));
    CHECK(s.successors(kGenesis) == ids({2, 1}));
    CHECK(s.ancestors(kGenesis) == ids({0}));
    CHECK(s.height(kGenesis) == 0);
    CHECK_THROWS_AS(s.height(B(9)), UnknownBlock);

    const GameState fig = fixtures::checkpoint_figure();
    CHECK(fig.successors(B(6)).empty());
    CHECK(fig.successors(B(4)) == ids({7, 5}));
}

TEST_CASE("rewards", "[blocktree]") {
    const GameState b0 = GameState::initial();
    const GameState b01 = fixtures::b01();
    CHECK(reward(b0, b01, Miner::Two) == 1);
    CHECK(reward(b0, b01, Miner::One) == 0);
    CHECK(game_reward(b0, b01, 0.3) == Catch::Approx(-0.3));
    CHECK(game_reward(b0, b0, 0.3) == 0.0);
    CHECK(reward(b01, b01, Miner::One) == 0);

    // SM override with lead 1: honest chain 0<-3, Miner 1 publishes 1,2,4.
    GameState before = fixtures::b_k0(2);
    fixtures::honest(before);
    before.create_block(Miner::One);
    GameState after = before;
    after.apply(Miner::One, path({1, 2, 4}, 0));
    CHECK(reward(before, after, Miner::Two) == -1);
    CHECK(reward(before, after, Miner::One) == 3);
}

TEST_CASE("reward telescoping and path additivity over simulated traces", "[blocktree][property]") {
    for (const char* name : {"frontier", "sm", "nsm", "fuzz-nonlcm"}) {
        for (std::uint64_t seed = 1; seed <= 5; ++seed) {
            auto strat = make_strategy(name, seed);
            Game game(strat->clone(), CreatorStream(0.4, seed));
            std::int64_t sum1 = 0, sum2 = 0;
            std::uint64_t last_h = 0;
            std::vector<GameState> states{game.state()};
            for (int r = 0; r < 2000; ++r) {
                const RoundRecord rec = game.step();
                sum1 += rec.r1;
                sum2 += rec.r2;
                REQUIRE(rec.height >= last_h);  // Miner 2 plays FRONTIER
                last_h = rec.height;
                if (r < 60) states.push_back(game.state());
            }
            CHECK(sum1 == static_cast<std::int64_t>(game.state().abs_chain_count(Miner::One)));
            CHECK(sum2 == static_cast<std::int64_t>(game.state().abs_chain_count(Miner::Two)));
            for (std::size_t i = 0; i + 2 < states.size(); ++i) {
                const double lhs = game_reward(states[i], states[i + 1], 0.37) + game_reward(states[i + 1], states[i + 2], 0.37);
                CHECK(lhs == Catch::Approx(game_reward(states[i], states[i + 2], 0.37)).margin(1e-12));
            }
        }
    }
}

TEST_CASE("potential reward", "[blocktree]") {
    CHECK(potential_reward(fixtures::b_k0(2)) == 2);
    CHECK(potential_reward(fixtures::b01()) == 0);
    // At B_{1,1} publishing 1 -> 0 loses the tie to block 2: every action yields 0.
    CHECK(oracle::potential_reward(fixtures::b11()) == 0);
    CHECK(potential_reward(fixtures::b11()) == 0);
    CHECK(potential_reward(fixtures::b22()) == oracle::potential_reward(fixtures::b22()));
}

TEST_CASE("potential reward agrees with exhaustive enumeration", "[blocktree][property]") {
    std::mt19937_64 rng(2024);
    int checked = 0;
    for (int i = 0; i < 400; ++i) {
        GameState s = oracle::random_state(rng, 9, 0.6, 0.35);
        if (s.unpublished(Miner::One).size() > 5) continue;
        INFO("round " << s.round() << " trial " << i);
        CHECK(potential_reward(s) == oracle::potential_reward(s));
        ++checked;
    }
    CHECK(checked > 100);
}

TEST_CASE("can_reach_height", "[blocktree]") {
    const GameState b20 = fixtures::b_k0(2);
    CHECK(b20.can_reach_height(B(2), 1));
    CHECK(b20.can_reach_height(B(2), 2));
    CHECK_FALSE(b20.can_reach_height(B(2), 3));
    const GameState b01 = fixtures::b01();
    CHECK(b01.can_reach_height(B(1), 1));
    CHECK_FALSE(b01.can_reach_height(B(1), 2));
    CHECK_THROWS_AS(b01.can_reach_height(B(5), 1), UnknownBlock);
}

TEST_CASE("capitulation", "[blocktree]") {
    const GameState b22 = fixtures::b22();

    // The paper keeps labels 3 and 4 and calls the new genesis 0.
    const GameState c1_expected = GameState::assemble(4, 0,
                                                      {{B(3), Miner::Two, B(0), 3},
                                                       {B(4), Miner::One, std::nullopt, std::nullopt}});
    const GameState c1 = b22.capitulate(1);
    CHECK(canonical_equal(c1, c1_expected));
    // Concrete frame: block 2 becomes genesis, everything shifts by 2.
    CHECK(c1.offset() == 2);
    CHECK(c1.tip() == B(1));
    CHECK(c1.creator(B(1)) == Miner::Two);
    CHECK(c1.unpublished(Miner::One) == ids({2}));
    CHECK(c1.abs_height() == 2);

    const GameState c2_expected = GameState::assemble(4, 0, {{B(4), Miner::One, std::nullopt, std::nullopt}});
    const GameState c2 = b22.capitulate(2);
    CHECK(canonical_equal(c2, c2_expected));
    CHECK(c2.unpublished(Miner::One) == ids({1}));
    CHECK(c2.tip_height() == 0);
    CHECK(c2.abs_chain_count(Miner::Two) == 2);

    CHECK(canonical_equal(b22.capitulate(0), b22));
    CHECK_THROWS_AS(b22.capitulate(3), BadHeight);
    CHECK(canonical_equal(fixtures::b01().capitulate(1), GameState::initial()));
    CHECK_FALSE(canonical_equal(fixtures::b_k0(1), GameState::initial()));
    CHECK(canonical_equal(b22, b22));
}

TEST_CASE("capitulation keeps everything that can reach c+1 above the new genesis", "[blocktree][property]") {
    std::mt19937_64 rng(99);
    for (int i = 0; i < 300; ++i) {
        const GameState s = oracle::random_state(rng, 14);
        std::uniform_int_distribution<std::uint64_t> pick(0, s.tip_height());
        const std::uint64_t c = pick(rng);
        const GameState t = s.capitulate(c);
        t.check_invariants();
        const BlockId g = s.chain_at(c);
        for (std::uint64_t v = g.value + 1; v < s.label_bound(); ++v) {
            const BlockId b{v};
            std::optional<BlockId> nb;
            try {
                nb = t.to_relative(s.to_absolute(b));
            } catch (const UnknownBlock&) {
            }
            if (s.is_published(b)) {
                const auto anc = s.ancestors(b);
                const bool below_g = std::find(anc.begin(), anc.end(), g) != anc.end();
                CHECK(nb.has_value() == below_g);
                if (below_g && nb) {
                    CHECK(t.height(*nb) + c == s.height(b));
                    CHECK(t.to_absolute(t.parent(*nb)) == s.to_absolute(s.parent(b)));
                }
            } else {
                REQUIRE(s.can_reach_height(b, c + 1));
                REQUIRE(nb);
                CHECK(t.is_unpublished(*nb, s.creator(b)));
            }
            if (nb) CHECK(t.creator(*nb) == s.creator(b));
        }
        CHECK(t.abs_chain_count(Miner::One) == s.abs_chain_count(Miner::One));
        CHECK(t.abs_height() == s.abs_height());
        CHECK(t.to_absolute(t.tip()) == s.to_absolute(s.tip()));
    }
}

TEST_CASE("fuzzed valid actions keep the state consistent", "[blocktree][property]") {
    std::mt19937_64 rng(7);
    int actions = 0;
    while (actions < 10000) {
        GameState s = GameState::initial();
        for (int r = 0; r < 40 && actions < 10000; ++r) {
            s.create_block((rng() & 1) ? Miner::One : Miner::Two);
            for (Miner m : {Miner::Two, Miner::One}) {
                const PublishSet set = oracle::random_publish_set(s, m, rng, 0.3);
                REQUIRE_FALSE(s.validate(m, set));
                s.apply(m, set);
                ++actions;
                s.check_invariants();
                REQUIRE(s.tip() == oracle::longest_chain(s));
                REQUIRE(s.chain_count(Miner::One) == oracle::chain_ones(s));
                for (BlockId b : s.published())
                    if (b != kGenesis) REQUIRE(s.parent(b) < b);
            }
        }
    }
}

TEST_CASE("statefile round trip and errors", "[blocktree][io]") {
    const GameState fig = fixtures::checkpoint_figure();
    std::ostringstream os;
    write_state(os, fig);
    const std::string text = os.str();
    CHECK(text.rfind("posmine-state v1 round 7 offset 0\n", 0) == 0);
    CHECK(text.find("block 6 creator 1 parent 4 published 6") != std::string::npos);
    CHECK(text.find("block 2 creator 1 parent - published -") != std::string::npos);
    const GameState back = parse_state(text);
    CHECK(canonical_equal(back, fig));
    CHECK(back.tip() == fig.tip());

    const GameState shifted = fixtures::b22().capitulate(1);
    std::ostringstream os2;
    write_state(os2, shifted);
    const GameState back2 = parse_state(os2.str());
    CHECK(back2.offset() == 2);
    CHECK(canonical_equal(back2, shifted));

    auto line_of = [](const std::string& bad) {
        try {
            parse_state(bad);
        } catch (const StateParseError& e) {
            return e.line;
        }
        return std::size_t{0};
    };
    CHECK(line_of("posmine-state v2 round 1 offset 0\n") == 1);
    CHECK(line_of("posmine-state v1 round 2 offset 0\nblock 1 creator 2 parent 0 published 1\nblock 2 creator 7 parent - published -\n") == 3);
    CHECK(line_of("# header next\nposmine-state v1 round 2 offset 0\nblock 2 creator 1 parent 3 published 2\n") == 3);
    CHECK(line_of("") == 1);
}

TEST_CASE("DOT export", "[blocktree][io]") {
    std::ostringstream os;
    write_dot(os, fixtures::checkpoint_figure());
    const std::string dot = os.str();
    CHECK(dot.rfind("digraph", 0) == 0);
    CHECK(dot.find("n5 [label=\"5/4\", shape=doublecircle]") != std::string::npos);
    CHECK(dot.find("n7 -> n5 [style=bold]") != std::string::npos);
    CHECK(dot.find("n6 -> n4;") != std::string::npos);
    CHECK(dot.find("n2 [label=\"2/-\", shape=doublecircle, style=dashed]") != std::string::npos);
    CHECK(dot.back() == '\n');
}
