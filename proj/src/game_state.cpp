#include "posmine/game_state.hpp"

#include <algorithm>
#include <cstdlib>
#include <string>
#include <tuple>

namespace posmine {

BadHeight::BadHeight(std::uint64_t c, std::uint64_t h)
    : std::invalid_argument("capitulation height " + std::to_string(c) + " exceeds chain height " +
                            std::to_string(h)) {}

GameState GameState::initial() {
    GameState s;
    Record genesis;
    genesis.status = BlockStatus::Published;
    s.blocks_.push_back(genesis);
    s.abs_ = {0};
    s.chain_ = {kGenesis};
    s.chain_ones_ = {0};
    return s;
}

GameState GameState::assemble(std::uint64_t round, std::uint64_t offset, const std::vector<BlockSpec>& specs) {
    if (offset > round) throw std::invalid_argument("offset exceeds round");
    auto where = [](BlockId id) { return "block " + std::to_string(id.value) + ": "; };

    std::vector<std::uint64_t> ids;
    for (const BlockSpec& spec : specs) {
        if (spec.id == kGenesis) {
            if (spec.creator != Miner::None || spec.parent)
                throw std::invalid_argument(where(spec.id) + "genesis has no creator or parent");
            continue;
        }
        if (spec.id.value > round - offset) throw std::invalid_argument(where(spec.id) + "label beyond current round");
        ids.push_back(spec.id.value);
    }
    std::sort(ids.begin(), ids.end());
    if (auto dup = std::adjacent_find(ids.begin(), ids.end()); dup != ids.end())
        throw std::invalid_argument(where(BlockId{*dup}) + "listed twice");
    auto index_of = [&](std::uint64_t id) -> std::optional<std::uint64_t> {
        if (id == 0) return 0;
        auto it = std::lower_bound(ids.begin(), ids.end(), id);
        if (it == ids.end() || *it != id) return std::nullopt;
        return static_cast<std::uint64_t>(it - ids.begin()) + 1;
    };

    GameState s = initial();
    s.round_ = round;
    s.blocks_.resize(ids.size() + 1);
    s.abs_.resize(ids.size() + 1);
    s.abs_[0] = offset;
    for (std::size_t i = 0; i < ids.size(); ++i) s.abs_[i + 1] = offset + ids[i];

    struct Pub {
        std::uint64_t round;
        std::size_t pos;
        std::uint64_t index;
    };
    std::vector<Pub> pubs;
    for (std::size_t i = 0; i < specs.size(); ++i) {
        const BlockSpec& spec = specs[i];
        if (spec.id == kGenesis) continue;
        const std::uint64_t idx = *index_of(spec.id.value);
        Record& r = s.blocks_[idx];
        if (spec.creator == Miner::None) throw std::invalid_argument(where(spec.id) + "non-genesis block needs a creator");
        r.creator = spec.creator;
        if (spec.published) {
            if (!spec.parent) throw std::invalid_argument(where(spec.id) + "published block needs a parent");
            if (*spec.parent >= spec.id) throw std::invalid_argument(where(spec.id) + "parent must be an earlier block");
            if (*spec.published > round || *spec.published < spec.id.value + offset)
                throw std::invalid_argument(where(spec.id) + "publication round out of range");
            const auto parent = index_of(spec.parent->value);
            if (!parent) throw std::invalid_argument(where(spec.id) + "parent is not listed");
            r.status = BlockStatus::Published;
            r.parent = BlockId{*parent};
            pubs.push_back({*spec.published, i, idx});
        } else {
            if (spec.parent) throw std::invalid_argument(where(spec.id) + "unpublished block cannot have a parent");
            r.status = BlockStatus::Unpublished;
            s.unpublished_[miner_index(spec.creator)].push_back(BlockId{idx});
        }
    }
    std::stable_sort(pubs.begin(), pubs.end(), [](const Pub& a, const Pub& b) {
        return std::tie(a.round, a.pos) < std::tie(b.round, b.pos);
    });
    std::uint64_t last_round = 0;
    std::uint32_t n = 0;
    for (const Pub& p : pubs) {
        if (p.round != last_round) n = 0;
        last_round = p.round;
        s.blocks_[p.index].key = {p.round, n++};
    }
    s.next_index_ = (last_round == round) ? n : 0;
    for (std::size_t v = 1; v < s.blocks_.size(); ++v) {
        Record& r = s.blocks_[v];
        if (r.status != BlockStatus::Published) continue;
        if (!s.is_published(r.parent))
            throw std::invalid_argument(where(BlockId{s.abs_[v] - offset}) + "parent is not published");
        r.height = s.blocks_[r.parent.value].height + 1;
    }
    for (auto& u : s.unpublished_) std::sort(u.begin(), u.end());
    const auto last = index_of(round - offset);
    s.last_creator_ = last ? s.blocks_[*last].creator : Miner::None;
    s.rebuild_chain();
    return s;
}

bool GameState::is_unpublished(BlockId b, Miner m) const {
    return b.value < blocks_.size() && blocks_[b.value].status == BlockStatus::Unpublished &&
           blocks_[b.value].creator == m;
}

const GameState::Record& GameState::record(BlockId b) const {
    if (!contains(b)) throw UnknownBlock(b);
    return blocks_[b.value];
}

Miner GameState::creator(BlockId b) const { return record(b).creator; }

BlockId GameState::parent(BlockId b) const {
    const Record& r = record(b);
    if (r.status != BlockStatus::Published || b == kGenesis) throw UnknownBlock(b);
    return r.parent;
}

std::uint64_t GameState::height(BlockId b) const {
    const Record& r = record(b);
    if (r.status != BlockStatus::Published) throw UnknownBlock(b);
    return r.height;
}

PublishKey GameState::publish_key(BlockId b) const {
    const Record& r = record(b);
    if (r.status != BlockStatus::Published) throw UnknownBlock(b);
    return r.key;
}

bool GameState::on_chain(BlockId b) const {
    if (!is_published(b)) return false;
    const std::uint64_t h = blocks_[b.value].height;
    return h < chain_.size() && chain_[h] == b;
}

std::vector<BlockId> GameState::ancestors(BlockId b) const {
    height(b);  // throws for unknown or unpublished blocks
    std::vector<BlockId> out;
    for (BlockId x = b;; x = blocks_[x.value].parent) {
        out.push_back(x);
        if (x == kGenesis) break;
    }
    std::reverse(out.begin(), out.end());
    return out;
}

std::vector<BlockId> GameState::successors(BlockId b) const {
    const std::uint64_t h = height(b);
    std::vector<BlockId> out;
    if (!on_chain(b)) return out;
    for (std::uint64_t i = tip_height(); i > h; --i) out.push_back(chain_[i]);
    return out;
}

std::uint64_t GameState::chain_count(Miner m, std::uint64_t lo, std::uint64_t hi) const {
    if (hi <= lo) return 0;
    const std::uint64_t ones = chain_ones_[hi] - chain_ones_[lo];
    return m == Miner::One ? ones : (hi - lo) - ones;
}

double GameState::revenue() const {
    const std::uint64_t h = abs_height();
    return h == 0 ? 0.0 : static_cast<double>(abs_chain_count(Miner::One)) / static_cast<double>(h);
}

std::size_t GameState::unpublished_in(Miner m, BlockId lo, BlockId hi) const {
    if (hi <= lo) return 0;
    const auto& u = unpublished(m);
    return static_cast<std::size_t>(std::upper_bound(u.begin(), u.end(), hi) - std::upper_bound(u.begin(), u.end(), lo));
}

std::size_t GameState::unpublished_above(Miner m, BlockId lo) const {
    const auto& u = unpublished(m);
    return static_cast<std::size_t>(u.end() - std::upper_bound(u.begin(), u.end(), lo));
}

std::vector<BlockId> GameState::smallest_unpublished_above(Miner m, BlockId lo, std::size_t k) const {
    const auto& u = unpublished(m);
    auto first = std::upper_bound(u.begin(), u.end(), lo);
    const std::size_t n = std::min<std::size_t>(k, static_cast<std::size_t>(u.end() - first));
    return {first, first + static_cast<std::ptrdiff_t>(n)};
}

std::vector<BlockId> GameState::published() const {
    std::vector<BlockId> out;
    for (std::size_t v = 0; v < blocks_.size(); ++v)
        if (blocks_[v].status == BlockStatus::Published) out.push_back(BlockId{v});
    return out;
}

BlockId GameState::create_block(Miner creator) {
    if (creator != Miner::One && creator != Miner::Two) throw std::invalid_argument("creator must be Miner 1 or 2");
    ++round_;
    const BlockId b{blocks_.size()};
    abs_.push_back(round_);
    Record r;
    r.creator = creator;
    r.status = BlockStatus::Unpublished;
    blocks_.push_back(r);
    unpublished_[miner_index(creator)].push_back(b);
    next_index_ = 0;
    last_creator_ = creator;
    return b;
}

PublishSet GameState::desugar(Miner m, const Action& action) const {
    return std::visit(
        [&](const auto& a) -> PublishSet {
            using T = std::decay_t<decltype(a)>;
            if constexpr (std::is_same_v<T, Wait>) {
                return {};
            } else if constexpr (std::is_same_v<T, PublishSet>) {
                return a;
            } else if constexpr (std::is_same_v<T, PublishPath>) {
                return path_to_set(a);
            } else {
                return path_to_set({smallest_unpublished_above(m, a.base, a.count), a.base});
            }
        },
        action);
}

std::optional<ValidityError> GameState::validate(Miner m, const PublishSet& set) const {
    using K = ValidityError::Kind;
    for (BlockId v : set.blocks)
        if (!is_unpublished(v, m)) return ValidityError(K::NotOwned, v);
    std::vector<BlockId> sorted = set.blocks;
    std::sort(sorted.begin(), sorted.end());
    auto in_new = [&](BlockId b) { return std::binary_search(sorted.begin(), sorted.end(), b); };
    for (const Edge& e : set.edges)
        if (!in_new(e.from) || !(in_new(e.to) || is_published(e.to))) return ValidityError(K::DanglingEdge, e.from, e);
    for (const Edge& e : set.edges)
        if (e.from <= e.to) return ValidityError(K::BackwardEdge, e.from, e);
    for (std::size_t i = 0; i < sorted.size(); ++i) {
        const BlockId v = sorted[i];
        if (i + 1 < sorted.size() && sorted[i + 1] == v) return ValidityError(K::EdgeCardinality, v);
        const auto out = std::count_if(set.edges.begin(), set.edges.end(), [v](const Edge& e) { return e.from == v; });
        if (out != 1) return ValidityError(K::EdgeCardinality, v);
    }
    return std::nullopt;
}

PublishSet GameState::apply(Miner m, const Action& action) {
    PublishSet set = desugar(m, action);
    if (auto err = validate(m, set)) throw *err;
    if (set.blocks.empty()) return set;
    std::sort(set.blocks.begin(), set.blocks.end());
    std::sort(set.edges.begin(), set.edges.end());

    BlockId best = tip();
    std::uint64_t best_h = tip_height();
    for (std::size_t i = 0; i < set.blocks.size(); ++i) {
        const BlockId v = set.blocks[i];
        Record& r = blocks_[v.value];
        r.status = BlockStatus::Published;
        r.parent = set.edges[i].to;
        r.height = blocks_[r.parent.value].height + 1;
        r.key = {round_, next_index_++};
        if (r.height > best_h) {
            best = v;
            best_h = r.height;
        }
    }
    auto& u = unpublished_[miner_index(m)];
    std::vector<BlockId> rest;
    rest.reserve(u.size());
    std::set_difference(u.begin(), u.end(), set.blocks.begin(), set.blocks.end(), std::back_inserter(rest));
    u.swap(rest);
    // A published block never loses the tie against a later one, so the tip
    // only moves when the height strictly grows.
    if (best != tip()) extend_chain_to(best);
    return set;
}

void GameState::extend_chain_to(BlockId t) {
    const std::size_t old_size = chain_.size();
    const std::uint64_t h_new = blocks_[t.value].height;
    chain_.resize(h_new + 1);
    std::uint64_t low = 0;
    for (BlockId x = t;; x = blocks_[x.value].parent) {
        const std::uint64_t h = blocks_[x.value].height;
        if (h < old_size && chain_[h] == x) {
            low = h;
            break;
        }
        chain_[h] = x;
    }
    chain_ones_.resize(h_new + 1);
    for (std::uint64_t i = low + 1; i <= h_new; ++i)
        chain_ones_[i] = chain_ones_[i - 1] + (blocks_[chain_[i].value].creator == Miner::One ? 1 : 0);
}

bool GameState::better_tip(BlockId a, BlockId b) const {
    const Record& ra = blocks_[a.value];
    const Record& rb = blocks_[b.value];
    if (ra.height != rb.height) return ra.height > rb.height;
    if (ra.key != rb.key) return ra.key < rb.key;
    return a < b;
}

void GameState::rebuild_chain() {
    BlockId best = kGenesis;
    for (std::size_t v = 1; v < blocks_.size(); ++v)
        if (blocks_[v].status == BlockStatus::Published && better_tip(BlockId{v}, best)) best = BlockId{v};
    chain_ = {kGenesis};
    chain_ones_ = {0};
    if (best != kGenesis) extend_chain_to(best);
}

bool GameState::can_reach_height(BlockId b, std::uint64_t ell) const {
    const Record& r = record(b);
    if (r.status == BlockStatus::Published) return r.height >= ell;
    const Miner owner = r.creator;
    for (std::size_t p = 0; p < b.value; ++p) {
        if (blocks_[p].status != BlockStatus::Published) continue;
        const std::uint64_t reach = blocks_[p].height + unpublished_in(owner, BlockId{p}, BlockId{b.value - 1}) + 1;
        if (reach >= ell) return true;
    }
    return false;
}

GameState GameState::capitulate(std::uint64_t c) const {
    if (c > tip_height()) throw BadHeight(c, tip_height());
    const BlockId g = chain_[c];
    GameState out;
    out.round_ = round_;
    out.next_index_ = next_index_;
    out.last_creator_ = last_creator_;
    out.base_height_ = base_height_ + c;
    out.base_count_ = base_count_;
    out.base_count_[0] += chain_count(Miner::One, 0, c);
    out.base_count_[1] += chain_count(Miner::Two, 0, c);

    // new_label[x - g] for survivors; 0 marks deleted blocks (genesis is g itself).
    std::vector<std::uint64_t> new_label(blocks_.size() - g.value, 0);
    out.blocks_.emplace_back();
    out.blocks_[0].status = BlockStatus::Published;
    out.abs_.push_back(abs_[g.value]);
    for (std::size_t x = g.value + 1; x < blocks_.size(); ++x) {
        const Record& r = blocks_[x];
        Record nr = r;
        if (r.status == BlockStatus::Published) {
            // Off-chain branches that do not hang below the new genesis are dropped.
            if (r.parent < g) continue;
            if (r.parent != g && new_label[r.parent.value - g.value] == 0) continue;
            nr.parent = BlockId{r.parent == g ? 0 : new_label[r.parent.value - g.value]};
            nr.height = r.height - c;
        } else if (r.status == BlockStatus::Unpublished) {
            // Anything above the new genesis can still be published onto it.
        } else {
            continue;
        }
        new_label[x - g.value] = out.blocks_.size();
        if (nr.status == BlockStatus::Unpublished)
            out.unpublished_[miner_index(nr.creator)].push_back(BlockId{out.blocks_.size()});
        out.blocks_.push_back(nr);
        out.abs_.push_back(abs_[x]);
    }
    out.chain_.reserve(chain_.size() - c);
    out.chain_ones_.reserve(chain_.size() - c);
    out.chain_.push_back(kGenesis);
    out.chain_ones_.push_back(0);
    for (std::size_t h = c + 1; h < chain_.size(); ++h) {
        out.chain_.push_back(BlockId{new_label[chain_[h].value - g.value]});
        out.chain_ones_.push_back(chain_ones_[h] - chain_ones_[c]);
    }
    return out;
}

void GameState::check_invariants() const {
    auto fail = [](const std::string& what) { throw std::logic_error("state invariant: " + what); };
    if (blocks_.empty() || blocks_[0].status != BlockStatus::Published || blocks_[0].creator != Miner::None)
        fail("genesis");
    if (abs_.size() != blocks_.size() || !std::is_sorted(abs_.begin(), abs_.end()) ||
        std::adjacent_find(abs_.begin(), abs_.end()) != abs_.end() || abs_.back() > round_)
        fail("absolute labels");
    std::array<std::vector<BlockId>, 2> u;
    for (std::size_t v = 1; v < blocks_.size(); ++v) {
        const Record& r = blocks_[v];
        if (r.status == BlockStatus::Absent) continue;
        if (r.creator != Miner::One && r.creator != Miner::Two) fail("creator of " + std::to_string(v));
        if (r.status == BlockStatus::Unpublished) {
            u[miner_index(r.creator)].push_back(BlockId{v});
            continue;
        }
        if (r.parent.value >= v) fail("parent monotonicity at " + std::to_string(v));
        if (!is_published(r.parent)) fail("parent of " + std::to_string(v) + " unpublished");
        if (r.height != blocks_[r.parent.value].height + 1) fail("height of " + std::to_string(v));
    }
    if (u != unpublished_) fail("unpublished sets");
    GameState copy = *this;
    copy.rebuild_chain();
    if (copy.chain_ != chain_ || copy.chain_ones_ != chain_ones_) fail("longest chain cache");
}

BlockId GameState::to_absolute(BlockId b) const {
    if (b.value >= abs_.size()) throw UnknownBlock(b);
    return BlockId{abs_[b.value]};
}

BlockId GameState::to_relative(BlockId abs) const {
    auto it = std::lower_bound(abs_.begin(), abs_.end(), abs.value);
    if (it == abs_.end() || *it != abs.value) throw UnknownBlock(abs);
    return BlockId{static_cast<std::uint64_t>(it - abs_.begin())};
}

PublishSet GameState::to_absolute(const PublishSet& s) const {
    PublishSet out;
    for (BlockId b : s.blocks) out.blocks.push_back(to_absolute(b));
    for (const Edge& e : s.edges) out.edges.push_back({to_absolute(e.from), to_absolute(e.to)});
    return out;
}

PublishSet GameState::to_relative(const PublishSet& s) const {
    PublishSet out;
    for (BlockId b : s.blocks) out.blocks.push_back(to_relative(b));
    for (const Edge& e : s.edges) out.edges.push_back({to_relative(e.from), to_relative(e.to)});
    return out;
}

std::int64_t reward(const GameState& before, const GameState& after, Miner k) {
    return static_cast<std::int64_t>(after.abs_chain_count(k)) - static_cast<std::int64_t>(before.abs_chain_count(k));
}

double game_reward(const GameState& before, const GameState& after, double lambda) {
    return (1.0 - lambda) * static_cast<double>(reward(before, after, Miner::One)) -
           lambda * static_cast<double>(reward(before, after, Miner::Two));
}

std::uint64_t potential_reward(const GameState& state) {
    const std::uint64_t tip_h = state.tip_height();
    const auto current = static_cast<std::int64_t>(state.chain_count(Miner::One));
    std::vector<std::int64_t> ones(state.label_bound(), 0);
    std::uint64_t best = 0;
    for (BlockId p : state.published()) {
        if (p != kGenesis) ones[p.value] = ones[state.parent(p).value] + (state.creator(p) == Miner::One ? 1 : 0);
        // Any path of k blocks from U ∩ (p, ∞) onto p; it takes over iff h(p) + k > h(C).
        const auto avail = static_cast<std::int64_t>(state.unpublished_above(Miner::One, p));
        const auto need = static_cast<std::int64_t>(tip_h - state.height(p) + 1);
        if (avail < need) continue;
        for (std::int64_t k : {need, avail}) {
            const std::int64_t r = ones[p.value] + k - current;
            best = std::max<std::uint64_t>(best, static_cast<std::uint64_t>(std::llabs(r)));
        }
    }
    return best;
}

bool canonical_equal(const GameState& a, const GameState& b) {
    auto present = [](const GameState& s) {
        std::vector<std::uint64_t> labels;
        for (std::size_t v = 0; v < s.blocks_.size(); ++v)
            if (s.blocks_[v].status != BlockStatus::Absent) labels.push_back(v);
        return labels;
    };
    const auto la = present(a);
    const auto lb = present(b);
    if (la.size() != lb.size()) return false;
    auto rank = [](const std::vector<std::uint64_t>& labels, BlockId x) {
        return std::lower_bound(labels.begin(), labels.end(), x.value) - labels.begin();
    };
    std::vector<std::pair<PublishKey, std::size_t>> order_a, order_b;
    for (std::size_t i = 0; i < la.size(); ++i) {
        const auto& ra = a.blocks_[la[i]];
        const auto& rb = b.blocks_[lb[i]];
        if (ra.creator != rb.creator || ra.status != rb.status) return false;
        if (i == 0 || ra.status != BlockStatus::Published) continue;
        if (rank(la, ra.parent) != rank(lb, rb.parent)) return false;
        order_a.emplace_back(ra.key, i);
        order_b.emplace_back(rb.key, i);
    }
    std::sort(order_a.begin(), order_a.end());
    std::sort(order_b.begin(), order_b.end());
    for (std::size_t i = 0; i < order_a.size(); ++i)
        if (order_a[i].second != order_b[i].second) return false;
    return true;
}

}  // namespace posmine
