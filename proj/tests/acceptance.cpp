// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any FAIL.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "posmine/analysis.hpp"
#include "posmine/game.hpp"
#include "posmine/reductions.hpp"
#include "posmine/state_io.hpp"
#include "posmine/strategies.hpp"
#include "posmine/structure.hpp"

using namespace posmine;

namespace {

struct Outcome {
    bool pass = true;
    std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* spec, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, spec, v);
    return buf;
}

// 1. rev_sm(1/3) = 1/3 and the sign of rev_sm(a) - a flips exactly at 1/3.
Outcome sm_closed_form() {
    Outcome o;
    const double err = std::abs(rev_sm_closed(1.0 / 3) - 1.0 / 3);
    o.pass = err < 1e-12;
    int bad = 0;
    for (int k = 1; k <= 1000; ++k) {
        const double a = 0.49 * k / 1000;
        const double g = rev_sm_closed(a) - a;
        if ((a > 1.0 / 3 && !(g > 0)) || (a < 1.0 / 3 && !(g < 0))) ++bad;
    }
    o.pass = o.pass && bad == 0;
    o.detail = "|rev_sm(1/3)-1/3| = " + fmt("%.2e", err) + ", sign mismatches on grid: " + std::to_string(bad);
    return o;
}

// 2. NSM threshold.
Outcome nsm_threshold() {
    const double x = crossover(rev_nsm_closed, 0.30, 0.36);
    return {std::abs(x - 0.3277) <= 0.0002, "crossover = " + fmt("%.6f", x)};
}

// 3. Renewal Monte Carlo against the closed forms.
Outcome simulation_vs_formula() {
    Outcome o;
    const auto t0 = Clock::now();
    double worst = 0;
    for (const char* name : {"sm", "nsm"}) {
        const auto s = make_strategy(name);
        for (double a : {0.25, 0.35, 0.40}) {
            const RevenuePoint p = mc_revenue_renewal(*s, a, 200000, 2024);
            const double cf = revenue_closed_form(name, a).estimate;
            const double d = std::abs(p.estimate - cf);
            worst = std::max(worst, d);
            if (d > 0.005) o.pass = false;
            o.detail += std::string(name) + "@" + fmt("%.2f", a) + " " + fmt("%.4f", p.estimate) + "/" +
                        fmt("%.4f", cf) + "  ";
        }
    }
    const double secs = seconds_since(t0);
    o.pass = o.pass && secs <= 120;
    o.detail += "max diff " + fmt("%.4f", worst) + ", " + fmt("%.1f", secs) + " s";
    return o;
}

// 4. Ordering of SM and NSM.
Outcome strategy_ordering() {
    int bad = 0;
    for (int k = 0; k < 1000; ++k) {
        const double a = 0.335 + (0.40 - 0.335) * k / 999;
        if (!(rev_nsm_closed(a) > rev_sm_closed(a))) ++bad;
        const double b = 0.45 + (0.49 - 0.45) * k / 999;
        if (!(rev_sm_closed(b) > rev_nsm_closed(b))) ++bad;
    }
    return {bad == 0, "violations on 2x1000 grid points: " + std::to_string(bad)};
}

// 5. Checkpoints of the example state.
Outcome checkpoint_example() {
    std::ifstream in(POSMINE_TEST_DATA "/example_fig.state");
    const GameState s = read_state(in);
    std::string got;
    for (BlockId b : checkpoints(s)) got += (got.empty() ? "" : " ") + std::to_string(s.to_absolute(b).value);
    return {got == "0 1 5 7", "checkpoints = {" + got + "}"};
}

struct SuiteResult {
    bool classifiers = true;
    bool frontier_capitulates = true;
    std::uint64_t fork_violations = 0, override_violations = 0;
    std::uint64_t fork_checked = 0, override_checked = 0;
    std::string first_failure;
};

// Traces for criteria 6 and 13: FRONTIER, SM, NSM at three stakes, 20 seeds, 10^4 rounds.
SuiteResult run_suite() {
    struct Job {
        std::string name;
        double alpha;
        std::uint64_t seed;
    };
    std::vector<Job> jobs;
    for (const char* name : {"frontier", "sm", "nsm"})
        for (double a : {0.2, 0.35, 0.45})
            for (std::uint64_t seed = 1; seed <= 20; ++seed) jobs.push_back({name, a, seed});

    struct JobResult {
        PropertyReport report;
        Verdict fork, over;
        bool capitulated_every_round = true;
    };
    std::vector<JobResult> results(jobs.size());
    parallel_for(jobs.size(), [&](std::size_t i) {
        const Job& j = jobs[i];
        PropertyMonitor props({Property::Timeserving, Property::Orderly, Property::Lcm, Property::Trimmed});
        ForkOwnershipMonitor fork;
        OverrideMonitor over;
        ObserverGroup group{&props, &fork, &over};
        Game game(make_strategy(j.name), CreatorStream(j.alpha, j.seed));
        for (int r = 0; r < 10000; ++r) {
            const RoundRecord rec = game.step(&group);
            if (!rec.capitulated_at || !rec.renewal) results[i].capitulated_every_round = false;
        }
        results[i].report = props.report();
        results[i].fork = fork.verdict();
        results[i].over = over.verdict();
    });

    SuiteResult s;
    for (std::size_t i = 0; i < jobs.size(); ++i) {
        const auto& r = results[i];
        const std::string where = jobs[i].name + " a=" + fmt("%.2f", jobs[i].alpha) + " seed " +
                                  std::to_string(jobs[i].seed);
        if (!r.report.all_hold()) {
            s.classifiers = false;
            if (s.first_failure.empty()) s.first_failure = where;
        }
        if (jobs[i].name == "frontier" && !r.capitulated_every_round) s.frontier_capitulates = false;
        s.fork_violations += !r.fork.holds;
        s.override_violations += !r.over.holds;
        s.fork_checked += r.fork.checked;
        s.override_checked += r.over.checked;
    }
    return s;
}

// Turns a recorded trace into a script with its creator sequence.
Scripted script_of(const Trace& t) {
    std::vector<Scripted::Entry> entries;
    std::vector<Miner> seq;
    for (const auto& r : t.rounds) {
        seq.push_back(r.creator);
        if (!r.miner1_action.blocks.empty()) entries.push_back({r.round, r.miner1_action});
    }
    return Scripted(entries, seq);
}

// 7. Orderly reduction of a scripted non-orderly strategy.
Outcome orderly_reduction() {
    const std::uint64_t n = 10000;
    const Scripted script = script_of(run_game(*make_strategy("fuzz-nonorderly", 7), 0.4, n, 7));
    const Trace inner = run_game(script, 0.5, n, 1, nullptr, script.creators());
    const Trace reduced = run_game(*orderly_reduce(script.clone()), 0.5, n, 1, nullptr, script.creators());
    std::uint64_t mismatched = 0, changed = 0;
    for (std::uint64_t i = 0; i < n; ++i) {
        const auto &a = inner.rounds[i], &b = reduced.rounds[i];
        mismatched += a.height != b.height || a.chain_ones != b.chain_ones;
        changed += a.miner1_action != b.miner1_action;
    }
    const PropertyVerdict in = classify_trace(inner, {Property::Orderly}).verdicts.at(Property::Orderly);
    const PropertyVerdict out = classify_trace(reduced, {Property::Orderly}).verdicts.at(Property::Orderly);
    Outcome o;
    o.pass = !in.holds && mismatched == 0 && out.holds;
    o.detail = "inner orderly: " + std::string(in.holds ? "yes" : "no") + ", actions rewritten: " +
               std::to_string(changed) + ", rounds with rev mismatch: " + std::to_string(mismatched) +
               ", reduced orderly violations: " + std::string(out.holds ? "0" : "some");
    return o;
}

// 8. LCM reduction: LCM output and revenue dominance on coupled seeds.
Outcome lcm_reduction() {
    Outcome o;
    std::uint64_t layers = 0, below = 0;
    bool lcm = true, inner_lcm = true;
    for (std::uint64_t seed = 1; seed <= 3; ++seed) {
        const std::uint64_t n = 3000;
        const auto inner = make_strategy("fuzz-nonlcm", seed);
        const Trace a = run_game(*inner, 0.4, n, seed);
        Game g(std::make_unique<LcmReduction>(inner->clone(), n), CreatorStream(0.4, seed));
        Trace b{"lcm", 0.4, seed, {}};
        for (std::uint64_t i = 0; i < n; ++i) b.rounds.push_back(g.step());
        layers += dynamic_cast<const LcmReduction&>(g.strategy()).layers();
        for (std::uint64_t i = 0; i < n; ++i) {
            const auto &x = a.rounds[i], &y = b.rounds[i];
            // rev(y) >= rev(x) without rounding.
            if (y.chain_ones * x.height < x.chain_ones * y.height) ++below;
        }
        lcm = lcm && classify_trace(b, {Property::Lcm}).all_hold();
        inner_lcm = inner_lcm && classify_trace(a, {Property::Lcm}).all_hold();
    }
    o.pass = lcm && below == 0 && !inner_lcm;
    o.detail = "reduced LCM: " + std::string(lcm ? "yes" : "no") + ", inner LCM: " + (inner_lcm ? "yes" : "no") +
               ", layers added: " + std::to_string(layers) + ", rounds with lower rev: " + std::to_string(below);
    return o;
}

// 9. Random-walk oracles.
Outcome random_walk() {
    Outcome o;
    double worst = 0;
    for (double a : {0.25, 0.3, 0.4}) {
        const double ex = mc_walk_x(a, 1000000, 91).mean;
        worst = std::max(worst, std::abs(ex / walk_stats(a).ex - 1));
        for (unsigned i : {1u, 2u}) {
            const double r = mc_ruin(a, i, 1000000, 92 + i).mean;
            worst = std::max(worst, std::abs(r / ruin_probability(a, i) - 1));
        }
    }
    o.pass = worst <= 0.02;
    o.detail = "max relative error " + fmt("%.4f", worst);
    return o;
}

// 10. Value identities for SM at a = 0.25.
Outcome value_identities() {
    const auto t0 = Clock::now();
    const double a = 0.25, rev = rev_sm_closed(a);
    Outcome o;
    const Estimate v0 = mc_value(SelfishMining{}, GameState::initial(), rev, a, 200000, 101);
    o.pass = std::abs(v0.mean) <= 3 * v0.stderr_;
    o.detail = "V(B0) = " + fmt("%.4f", v0.mean) + " +- " + fmt("%.4f", v0.stderr_);
    GameState b20 = GameState::initial();
    b20.create_block(Miner::One);
    b20.create_block(Miner::One);
    for (double lambda : {a, rev}) {
        const Estimate v = mc_value(SelfishMining{}, b20, lambda, a, 200000, 102);
        const double want = sm_lead_reward(a) * (1 - lambda);
        o.pass = o.pass && std::abs(v.mean - want) <= 3 * v.stderr_;
        o.detail += ", V(B20; " + fmt("%.4f", lambda) + ") = " + fmt("%.4f", v.mean) + " vs " + fmt("%.4f", want);
    }
    const double secs = seconds_since(t0);
    o.pass = o.pass && secs <= 60;
    o.detail += ", " + fmt("%.1f", secs) + " s";
    return o;
}

// 11. Minimum growth rate.
Outcome growth_rate() {
    const GrowthCheck c = growth_rate_check(NothingAtStake{}, 0.4, 100000, 111);
    return {c.tail_min >= 0.59, "tail min h/n = " + fmt("%.4f", c.tail_min)};
}

// 12. Dynamic stake.
Outcome dynamic_stake() {
    const auto t0 = Clock::now();
    struct Run {
        const char* strategy;
        double alpha0;
    };
    const std::vector<Run> runs{{"frontier", 0.33}, {"nsm", 0.34}, {"nsm", 0.30}};
    std::vector<double> final(runs.size());
    parallel_for(runs.size(), [&](std::size_t i) {
        final[i] = stake_dynamics(runs[i].strategy, runs[i].alpha0, 100000, 1000000, 121 + i).final_stake;
    });
    const double secs = seconds_since(t0);
    Outcome o;
    o.pass = std::abs(final[0] - 0.33) <= 0.01 && final[1] > 0.34 + 0.01 && final[2] <= 0.30 + 0.005 && secs <= 120;
    o.detail = "frontier 0.33 -> " + fmt("%.4f", final[0]) + ", nsm 0.34 -> " + fmt("%.4f", final[1]) +
               ", nsm 0.30 -> " + fmt("%.4f", final[2]) + ", " + fmt("%.1f", secs) + " s";
    return o;
}

}  // namespace

int main() {
    int failures = 0;
    const auto report = [&](int id, const char* name, const Outcome& o) {
        std::printf("%s %2d %s: %s\n", o.pass ? "PASS" : "FAIL", id, name, o.detail.c_str());
        std::fflush(stdout);
        failures += !o.pass;
    };
    const auto guarded = [&](int id, const char* name, const std::function<Outcome()>& fn) {
        try {
            report(id, name, fn());
        } catch (const std::exception& e) {
            report(id, name, {false, std::string("exception: ") + e.what()});
        }
    };

    guarded(1, "SM closed form", sm_closed_form);
    guarded(2, "NSM threshold", nsm_threshold);
    guarded(3, "simulation vs formula", simulation_vs_formula);
    guarded(4, "strategy ordering", strategy_ordering);
    guarded(5, "checkpoint example", checkpoint_example);

    SuiteResult suite;
    bool suite_ok = true;
    std::string suite_error;
    try {
        suite = run_suite();
    } catch (const std::exception& e) {
        suite_ok = false;
        suite_error = e.what();
    }
    report(6, "classifier suite",
           {suite_ok && suite.classifiers && suite.frontier_capitulates,
            suite_ok ? "180 traces; classifiers " + std::string(suite.classifiers ? "hold" : "fail at " +
                                                                                        suite.first_failure) +
                           ", FRONTIER capitulates every round: " + (suite.frontier_capitulates ? "yes" : "no")
                     : "exception: " + suite_error});

    guarded(7, "orderly reduction", orderly_reduction);
    guarded(8, "LCM reduction", lcm_reduction);
    guarded(9, "random-walk oracles", random_walk);
    guarded(10, "value identities", value_identities);
    guarded(11, "growth rate", growth_rate);
    guarded(12, "dynamic stake", dynamic_stake);

    report(13, "fork ownership and override",
           {suite_ok && suite.fork_violations == 0 && suite.override_violations == 0 && suite.fork_checked > 0 &&
                suite.override_checked > 0,
            suite_ok ? "fork ownership: " + std::to_string(suite.fork_violations) + " violations over " +
                           std::to_string(suite.fork_checked) + " checks; override: " +
                           std::to_string(suite.override_violations) + " violations over " +
                           std::to_string(suite.override_checked) + " checks"
                     : "exception: " + suite_error});

    std::printf("%d of 13 criteria failed\n", failures);
    return failures == 0 ? 0 : 1;
}
