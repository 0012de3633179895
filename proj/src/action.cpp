#include "posmine/action.hpp"

#include <algorithm>
#include <sstream>

namespace posmine {

PublishSet path_to_set(PublishPath path) {
    PublishSet out;
    std::sort(path.blocks.begin(), path.blocks.end());
    path.blocks.erase(std::unique(path.blocks.begin(), path.blocks.end()), path.blocks.end());
    BlockId prev = path.base;
    for (BlockId b : path.blocks) {
        out.edges.push_back({b, prev});
        prev = b;
    }
    out.blocks = std::move(path.blocks);
    return out;
}

std::optional<PublishPath> set_as_path(const PublishSet& set) {
    if (set.blocks.empty() || set.edges.size() != set.blocks.size()) return std::nullopt;
    std::vector<BlockId> blocks = set.blocks;
    std::sort(blocks.begin(), blocks.end());
    std::vector<Edge> edges = set.edges;
    std::sort(edges.begin(), edges.end());
    // After sorting by source, edge i must leave blocks[i] and land on blocks[i-1].
    for (std::size_t i = 0; i < blocks.size(); ++i) {
        if (edges[i].from != blocks[i]) return std::nullopt;
        if (i > 0 && edges[i].to != blocks[i - 1]) return std::nullopt;
    }
    if (edges[0].to >= blocks[0]) return std::nullopt;
    return PublishPath{std::move(blocks), edges[0].to};
}

std::string to_string(const PublishSet& set) {
    if (set.empty()) return "wait";
    std::vector<Edge> edges = set.edges;
    std::sort(edges.begin(), edges.end(), [](const Edge& a, const Edge& b) { return a.from > b.from; });
    std::ostringstream os;
    for (std::size_t i = 0; i < edges.size(); ++i) {
        if (i) os << ' ';
        os << edges[i];
    }
    return os.str();
}

std::string to_string(const Action& action) {
    return std::visit(
        [](const auto& a) -> std::string {
            using T = std::decay_t<decltype(a)>;
            if constexpr (std::is_same_v<T, Wait>) {
                return "wait";
            } else if constexpr (std::is_same_v<T, PublishSet>) {
                return to_string(a);
            } else if constexpr (std::is_same_v<T, PublishPath>) {
                return to_string(path_to_set(a));
            } else {
                return "publish(" + std::to_string(a.count) + "," + std::to_string(a.base.value) + ")";
            }
        },
        action);
}

namespace {

std::string describe(ValidityError::Kind kind, BlockId block, const std::optional<Edge>& edge) {
    std::ostringstream os;
    os << to_string(kind) << '(';
    if (edge) {
        os << *edge;
    } else {
        os << block;
    }
    os << ')';
    return os.str();
}

}  // namespace

ValidityError::ValidityError(Kind k, BlockId b, std::optional<Edge> e)
    : std::runtime_error(describe(k, b, e)), kind(k), block(b), edge(e) {}

const char* to_string(ValidityError::Kind kind) {
    switch (kind) {
        case ValidityError::Kind::NotOwned: return "NotOwned";
        case ValidityError::Kind::DanglingEdge: return "DanglingEdge";
        case ValidityError::Kind::BackwardEdge: return "BackwardEdge";
        case ValidityError::Kind::EdgeCardinality: return "EdgeCardinality";
    }
    return "?";
}

}  // namespace posmine
