#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "posmine/types.hpp"

namespace posmine {

struct Wait {
    bool operator==(const Wait&) const = default;
};

// General publication: blocks V' with one outgoing edge each.
struct PublishSet {
    std::vector<BlockId> blocks;
    std::vector<Edge> edges;

    bool empty() const { return blocks.empty() && edges.empty(); }
    bool operator==(const PublishSet&) const = default;
};

// Publish V' as a path: min(V') -> base, every other block -> next smaller one.
struct PublishPath {
    std::vector<BlockId> blocks;
    BlockId base;

    bool operator==(const PublishPath&) const = default;
};

// PublishPath of the k smallest unpublished blocks above `base`.
struct Publish {
    std::size_t count = 0;
    BlockId base;

    bool operator==(const Publish&) const = default;
};

using Action = std::variant<Wait, PublishSet, PublishPath, Publish>;

inline bool is_wait(const Action& a) {
    if (std::holds_alternative<Wait>(a)) return true;
    if (auto* s = std::get_if<PublishSet>(&a)) return s->empty();
    if (auto* p = std::get_if<PublishPath>(&a)) return p->blocks.empty();
    return std::get<Publish>(a).count == 0;
}

// Sorted path form; edges follow the PublishPath definition.
PublishSet path_to_set(PublishPath path);

// Recognizes a PublishSet that is exactly one PublishPath.
std::optional<PublishPath> set_as_path(const PublishSet& set);

// "wait" or space separated edges such as "3->1 1->0".
std::string to_string(const PublishSet& set);
std::string to_string(const Action& action);

class ValidityError : public std::runtime_error {
public:
    enum class Kind { NotOwned, DanglingEdge, BackwardEdge, EdgeCardinality };

    ValidityError(Kind kind, BlockId block, std::optional<Edge> edge = std::nullopt);

    Kind kind;
    BlockId block;
    std::optional<Edge> edge;
};

const char* to_string(ValidityError::Kind kind);

}  // namespace posmine
