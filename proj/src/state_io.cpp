#include "posmine/state_io.hpp"

#include <algorithm>
#include <istream>
#include <ostream>
#include <sstream>
#include <vector>

namespace posmine {

StateParseError::StateParseError(std::size_t l, const std::string& what)
    : std::runtime_error("line " + std::to_string(l) + ": " + what), line(l) {}

void write_state(std::ostream& os, const GameState& state) {
    os << "posmine-state v1 round " << state.round() << " offset " << state.offset() << '\n';
    std::vector<BlockId> pubs = state.published();
    std::stable_sort(pubs.begin(), pubs.end(),
                     [&](BlockId a, BlockId b) { return state.publish_key(a) < state.publish_key(b); });
    // Ids are written uncompacted (absolute label minus offset).
    auto id = [&](BlockId b) { return state.to_absolute(b).value - state.offset(); };
    for (BlockId b : pubs) {
        os << "block " << id(b) << " creator " << static_cast<int>(state.creator(b)) << " parent ";
        if (b == kGenesis) {
            os << '-';
        } else {
            os << id(state.parent(b));
        }
        os << " published " << state.publish_key(b).round << '\n';
    }
    std::vector<BlockId> hidden;
    for (Miner m : {Miner::One, Miner::Two})
        hidden.insert(hidden.end(), state.unpublished(m).begin(), state.unpublished(m).end());
    std::sort(hidden.begin(), hidden.end());
    for (BlockId b : hidden)
        os << "block " << id(b) << " creator " << static_cast<int>(state.creator(b)) << " parent - published -\n";
}

namespace {

std::uint64_t parse_number(const std::string& tok, std::size_t line, const char* field) {
    if (tok.empty() || !std::all_of(tok.begin(), tok.end(), [](char c) { return c >= '0' && c <= '9'; }))
        throw StateParseError(line, std::string("expected a number for ") + field + ", got '" + tok + "'");
    try {
        return std::stoull(tok);
    } catch (const std::exception&) {
        throw StateParseError(line, std::string(field) + " out of range");
    }
}

void expect(const std::string& got, const char* want, std::size_t line) {
    if (got != want) throw StateParseError(line, std::string("expected '") + want + "', got '" + got + "'");
}

}  // namespace

GameState read_state(std::istream& is) {
    std::string text;
    std::size_t lineno = 0;
    bool have_header = false;
    std::uint64_t round = 0, offset = 0;
    std::vector<BlockSpec> specs;
    std::vector<std::size_t> spec_lines;
    while (std::getline(is, text)) {
        ++lineno;
        std::istringstream ls(text);
        std::vector<std::string> toks;
        for (std::string t; ls >> t;) toks.push_back(t);
        if (toks.empty() || toks[0][0] == '#') continue;
        if (!have_header) {
            if (toks.size() != 6) throw StateParseError(lineno, "malformed header");
            expect(toks[0], "posmine-state", lineno);
            expect(toks[1], "v1", lineno);
            expect(toks[2], "round", lineno);
            round = parse_number(toks[3], lineno, "round");
            expect(toks[4], "offset", lineno);
            offset = parse_number(toks[5], lineno, "offset");
            have_header = true;
            continue;
        }
        if (toks.size() != 8) throw StateParseError(lineno, "block record needs 8 fields");
        expect(toks[0], "block", lineno);
        BlockSpec spec;
        spec.id = BlockId{parse_number(toks[1], lineno, "block id")};
        expect(toks[2], "creator", lineno);
        const auto creator = parse_number(toks[3], lineno, "creator");
        if (creator > 2) throw StateParseError(lineno, "creator must be 0, 1 or 2");
        spec.creator = static_cast<Miner>(creator);
        expect(toks[4], "parent", lineno);
        if (toks[5] != "-") spec.parent = BlockId{parse_number(toks[5], lineno, "parent")};
        expect(toks[6], "published", lineno);
        if (toks[7] != "-") spec.published = parse_number(toks[7], lineno, "published");
        if (spec.id == kGenesis) {
            if (spec.creator != Miner::None || spec.parent)
                throw StateParseError(lineno, "genesis has creator 0 and no parent");
            continue;
        }
        specs.push_back(spec);
        spec_lines.push_back(lineno);
    }
    if (!have_header) throw StateParseError(lineno + 1, "missing header");
    try {
        return GameState::assemble(round, offset, specs);
    } catch (const std::invalid_argument& e) {
        // Point at the offending record when the message names one.
        std::string msg = e.what();
        std::size_t line = lineno;
        if (msg.rfind("block ", 0) == 0) {
            const auto id = std::stoull(msg.substr(6));
            for (std::size_t i = 0; i < specs.size(); ++i)
                if (specs[i].id.value == id) line = spec_lines[i];
        }
        throw StateParseError(line, msg);
    }
}

GameState parse_state(const std::string& text) {
    std::istringstream is(text);
    return read_state(is);
}

void write_dot(std::ostream& os, const GameState& state) {
    os << "digraph posmine {\n  rankdir=RL;\n";
    for (std::uint64_t v = 0; v < state.label_bound(); ++v) {
        const BlockId b{v};
        if (!state.contains(b)) continue;
        os << "  n" << v << " [label=\"" << v << '/';
        if (state.is_published(b)) {
            os << state.height(b);
        } else {
            os << '-';
        }
        os << '"';
        if (state.creator(b) == Miner::One) os << ", shape=doublecircle";
        if (!state.is_published(b)) os << ", style=dashed";
        os << "];\n";
    }
    for (BlockId b : state.published()) {
        if (b == kGenesis) continue;
        os << "  n" << b << " -> n" << state.parent(b);
        if (state.on_chain(b)) os << " [style=bold]";
        os << ";\n";
    }
    os << "}\n";
}

}  // namespace posmine
