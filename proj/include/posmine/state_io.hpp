#pragma once

#include <cstddef>
#include <iosfwd>
#include <stdexcept>
#include <string>

#include "posmine/game_state.hpp"

namespace posmine {

class StateParseError : public std::runtime_error {
public:
    StateParseError(std::size_t line, const std::string& what);
    std::size_t line;
};

// Statefile grammar:
//   posmine-state v1 round <n> offset <k>
//   block <id> creator <0|1|2> parent <id|-> published <round|->
// Blank lines and lines starting with '#' are ignored. Published blocks are
// listed in publication order; that order breaks longest-chain ties.
void write_state(std::ostream& os, const GameState& state);
GameState read_state(std::istream& is);
GameState parse_state(const std::string& text);

// Graphviz rendering: nodes "id/height", Miner-1 blocks double-circled,
// longest-path edges bold, unpublished blocks dashed.
void write_dot(std::ostream& os, const GameState& state);

}  // namespace posmine
