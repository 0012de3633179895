#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "posmine/game_state.hpp"
#include "posmine/strategy.hpp"

namespace posmine {

class NoSignChange : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

class NonRecurrent : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Closed forms; all throw DomainError outside (0, 1/2).
double rev_frontier(double alpha);
double rev_sm_closed(double alpha);
double rev_nsm_closed(double alpha);
// NSM revenue from the same renewal-reward accounting as rev_nsm_closed, but
// with each run of i B_{1,1} loops weighted by the probability that the run
// then ends. This is what simulation of the strategy converges to; it sits
// about 0.003 above rev_nsm_closed near alpha = 1/3.
double rev_nsm_exact(double alpha);

// Bisection for f(a) = a on [lo, hi]. Needs f(a) - a to be strictly positive
// at one end and strictly negative at the other.
double crossover(const std::function<double(double)>& f, double lo, double hi, double tol = 1e-9);

// Walk from lead 1 that moves +1 with probability alpha until it reaches 0:
// X up-steps, Y down-steps, tau steps in total.
struct WalkStats {
    double ex = 0;
    double ey = 0;
    double etau = 0;
};
WalkStats walk_stats(double alpha);

// Probability that a walk drifting up (step +1 w.p. 1-alpha) ever falls from i to 0.
double ruin_probability(double alpha, unsigned i);
// (alpha/(1-alpha))^ell for ell in 0..2.
double tie_break_bound(double alpha, unsigned ell);
// E[|T_1(X_tau)|] for Selfish Mining started at B_{2,0}: 2 + alpha/(1-2alpha).
double sm_lead_reward(double alpha);

struct Estimate {
    double mean = 0;
    double stderr_ = 0;
    std::uint64_t samples = 0;
};

// Worker count: POSMINE_THREADS if set, else hardware concurrency.
unsigned worker_count();

// Runs body(i) for i in [0, n) on worker_count() threads. Callers write into
// per-index slots so results never depend on scheduling.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

Estimate mc_walk_x(double alpha, std::uint64_t walks, std::uint64_t seed);
Estimate mc_ruin(double alpha, unsigned i, std::uint64_t walks, std::uint64_t seed);

enum class Method { ClosedForm, McLiminf, McRenewal };
std::string to_string(Method m);

struct RevenuePoint {
    double alpha = 0;
    std::string strategy;
    Method method = Method::ClosedForm;
    double estimate = 0;
    std::optional<double> stderr_;
    std::uint64_t rounds = 0;
    std::uint64_t games = 0;
    std::uint64_t cycles = 0;
    std::uint64_t seed = 0;
};

// Closed form for frontier, sm or nsm; throws UnknownStrategy otherwise.
RevenuePoint revenue_closed_form(const std::string& strategy, double alpha);

RevenuePoint mc_revenue_liminf(const Strategy& strategy, double alpha, std::uint64_t rounds, std::uint64_t games,
                               std::uint64_t seed);

inline constexpr std::uint64_t kDefaultCycleCap = 1000000;

// Ratio estimator E[R1]/E[R1+R2] over `cycles` renewal cycles with a
// delta-method standard error.
RevenuePoint mc_revenue_renewal(const Strategy& strategy, double alpha, std::uint64_t cycles, std::uint64_t seed,
                                std::uint64_t cycle_cap = kDefaultCycleCap);

// Estimate of V^lambda(start): mean game reward up to the first capitulation.
Estimate mc_value(const Strategy& strategy, const GameState& start, double lambda, double alpha,
                  std::uint64_t episodes, std::uint64_t seed, std::uint64_t cycle_cap = kDefaultCycleCap);

struct GrowthCheck {
    std::vector<double> series;  // h(C(X_n))/n for n = 1..rounds
    double tail_min = 0;         // over n >= rounds/2
    double bound = 0;            // (1 - alpha) - 0.01
    bool holds = false;
};
GrowthCheck growth_rate_check(const Strategy& strategy, double alpha, std::uint64_t rounds, std::uint64_t seed);

struct DecayCheck {
    double tail_max = 0;  // max of pot^1(X_n)/n over the last half
    double epsilon = 0;
    bool holds = false;
};
DecayCheck potential_reward_decay_check(const Strategy& strategy, double alpha, std::uint64_t rounds,
                                        std::uint64_t seed, double epsilon = 0.02);

struct StakeSeries {
    std::vector<std::pair<std::uint64_t, double>> points;  // (round, Miner-1 stake)
    double initial = 0;
    double final_stake = 0;
    double coins = 0;  // total coins at the end
};

// Creators are drawn with the current stake; blocks mint one coin each once a
// capitulation puts them below the genesis. `sample_every` thins the series.
StakeSeries stake_dynamics(const std::string& strategy, double alpha0, std::uint64_t coins, std::uint64_t rounds,
                           std::uint64_t seed, std::uint64_t sample_every = 1000);

void write_revenue_csv(std::ostream& os, const std::vector<RevenuePoint>& points);
void write_stake_csv(std::ostream& os, const StakeSeries& series);

}  // namespace posmine
