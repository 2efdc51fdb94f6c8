// Copyright 2026 The qss Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <algorithm>
#include <cstdint>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "qss/quantum_core.hpp"

namespace qss {

/// A bit sequence, one bit (0 or 1) per element.
using Bits = std::vector<std::uint8_t>;

struct BitPair {
    std::uint8_t hi = 0;
    std::uint8_t lo = 0;

    constexpr unsigned value() const { return (hi << 1) | lo; }
    static constexpr BitPair from_value(unsigned v) {
        return {static_cast<std::uint8_t>((v >> 1) & 1), static_cast<std::uint8_t>(v & 1)};
    }
    friend constexpr auto operator<=>(const BitPair &, const BitPair &) = default;
};

inline std::string to_string(BitPair b) { return {char('0' + b.hi), char('0' + b.lo)}; }

// 00 -> phi+, 01 -> phi-, 10 -> psi+, 11 -> psi-
constexpr BellLabel bits_to_bell(BitPair b) { return kBellLabels[b.value()]; }
constexpr BitPair bell_to_bits(BellLabel label) { return BitPair::from_value(static_cast<unsigned>(label)); }

inline std::vector<BellLabel> encode_message(std::span<const std::uint8_t> bits) {
    if (bits.size() % 2 != 0) throw std::invalid_argument("message bit count must be even");
    std::vector<BellLabel> out;
    out.reserve(bits.size() / 2);
    for (std::size_t i = 0; i < bits.size(); i += 2) {
        if (bits[i] > 1 || bits[i + 1] > 1) throw std::invalid_argument("message bits must be 0 or 1");
        out.push_back(bits_to_bell({bits[i], bits[i + 1]}));
    }
    return out;
}

inline Bits decode_labels(std::span<const BellLabel> labels) {
    Bits out;
    out.reserve(labels.size() * 2);
    for (auto l : labels) {
        const auto b = bell_to_bits(l);
        out.push_back(b.hi);
        out.push_back(b.lo);
    }
    return out;
}

/// Recovers the initial bit pair from a Bell-measurement outcome, given the
/// Y-photon ops applied since preparation. When the history holds an odd
/// number of H ops, a compensating H must have been applied to the Y photon
/// just before measurement and `hadamard_undone` set.
inline BitPair decode_outcome(BellLabel measured, std::span<const LocalOp> history, bool hadamard_undone) {
    const auto h_count = std::count(history.begin(), history.end(), LocalOp::h);
    if ((h_count % 2 == 1) != hadamard_undone)
        throw std::invalid_argument("hadamard_undone flag inconsistent with op history");
    for (auto initial : kBellLabels) {
        auto state = compose_transforms(CanonicalState::bell(initial), history);
        if (hadamard_undone) state = table_transform(LocalOp::h, state);
        if (state.bell_label() == measured) return bell_to_bits(initial);
    }
    // Every history row permutes the Bell labels, so some candidate matched.
    throw std::logic_error("decode_outcome: no preimage");
}

/// Sender's encoding op in the reversed-direction protocol: maps phi+ onto
/// bits_to_bell(b) up to a global sign.
constexpr LocalOp alice_encoding_op(BitPair b) {
    constexpr std::array<LocalOp, 4> ops{LocalOp::u1, LocalOp::u2, LocalOp::u3, LocalOp::u4};
    return ops[b.value()];
}

/// Probability of observing `measured` when Bell-measuring `state`, read off
/// the canonical-state geometry (1 or 0 in the Bell set, 1/2 or 0 in the
/// rotation set).
inline double bell_outcome_probability(const CanonicalState &state, BellLabel measured) {
    if (state.is_bell()) return state.bell_label() == measured ? 1.0 : 0.0;
    const auto parts = rotation_components(state.rotation_label());
    return (parts.first == measured || parts.second == measured) ? 0.5 : 0.0;
}

namespace detail {
template <typename Fn> void for_each_op_chain(std::size_t length, std::vector<LocalOp> &chain, Fn &&fn) {
    if (chain.size() == length) {
        fn(std::span<const LocalOp>(chain));
        return;
    }
    for (auto op : kFiveOpSet) {
        chain.push_back(op);
        for_each_op_chain(length, chain, fn);
        chain.pop_back();
    }
}
} // namespace detail

/// Bit pairs that could have produced `measured` when `unknown_ops` sharer ops
/// (each from the five-op set) are withheld from the decoder.
inline std::set<BitPair> consistent_preimages(BellLabel measured, std::size_t unknown_ops) {
    std::set<BitPair> out;
    std::vector<LocalOp> chain;
    detail::for_each_op_chain(unknown_ops, chain, [&](std::span<const LocalOp> ops) {
        for (auto initial : kBellLabels) {
            const auto final_state = compose_transforms(CanonicalState::bell(initial), ops);
            if (bell_outcome_probability(final_state, measured) > 0) out.insert(bell_to_bits(initial));
        }
    });
    return out;
}

/// Optimal per-pair probability of guessing the sender's bit pair from one Bell
/// measurement when `unknown_ops` uniformly random ops are withheld. Initial
/// states are uniform.
inline double guess_success_probability(std::size_t unknown_ops) {
    // joint[initial][measured] accumulates P(initial, measured).
    std::array<std::array<double, 4>, 4> joint{};
    std::size_t chains = 0;
    std::vector<LocalOp> chain;
    detail::for_each_op_chain(unknown_ops, chain, [&](std::span<const LocalOp> ops) {
        ++chains;
        for (std::size_t i = 0; i < 4; ++i) {
            const auto final_state = compose_transforms(CanonicalState::bell(kBellLabels[i]), ops);
            for (std::size_t m = 0; m < 4; ++m) joint[i][m] += bell_outcome_probability(final_state, kBellLabels[m]);
        }
    });
    double success = 0;
    for (std::size_t m = 0; m < 4; ++m) {
        double best = 0;
        for (std::size_t i = 0; i < 4; ++i) best = std::max(best, joint[i][m]);
        success += best;
    }
    return success / (4.0 * double(chains));
}

} // namespace qss
