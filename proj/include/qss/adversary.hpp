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
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "qss/message_codec.hpp"
#include "qss/quantum_core.hpp"

namespace qss {

/// In-flight photons on a quantum link. Each entry refers to the pair whose
/// traveling photon it is, so an operation on the view acts on that pair.
using PhotonView = std::vector<std::reference_wrapper<TwoQubitState>>;

/// A quantum link in a session. The first leg is the chain the Y photons
/// travel hop by hop through the sharers; the second leg is the single
/// delivery link that follows a passed checking round.
struct Link {
    enum class Leg : std::uint8_t { first, second };
    Leg leg = Leg::first;
    int hop = 0;

    friend constexpr bool operator==(const Link &, const Link &) = default;
};

inline std::string to_string(Link::Leg leg) { return leg == Link::Leg::first ? "first" : "second"; }

enum class AdversaryKind : std::uint8_t { none, intercept_resend, insider_fake_sequence };

inline std::string to_string(AdversaryKind k) {
    switch (k) {
    case AdversaryKind::none:
        return "none";
    case AdversaryKind::intercept_resend:
        return "intercept-resend";
    case AdversaryKind::insider_fake_sequence:
        return "insider";
    }
    return "?";
}

enum class BasisPolicy : std::uint8_t { uniform, diagonal_only };

struct AdversaryStrategy {
    AdversaryKind kind = AdversaryKind::none;
    /// Links an intercept-resend eavesdropper taps. Empty means the last
    /// first-leg hop, the one entering the party that measures checking photons.
    std::vector<Link> targets;
    BasisPolicy basis_policy = BasisPolicy::uniform;
    /// Dishonest sharer (party index) for the insider attack.
    int insider_party = 2;

    static AdversaryStrategy none() { return {}; }
    static AdversaryStrategy intercept_resend(std::vector<Link> targets = {},
                                              BasisPolicy policy = BasisPolicy::uniform) {
        return {AdversaryKind::intercept_resend, std::move(targets), policy, 0};
    }
    static AdversaryStrategy insider(int party = 2) {
        return {AdversaryKind::insider_fake_sequence, {{Link::Leg::first, 0}}, BasisPolicy::uniform, party};
    }

    bool taps(const Link &link, int first_leg_hops) const {
        if (kind == AdversaryKind::none) return false;
        if (targets.empty()) return link == Link{Link::Leg::first, first_leg_hops - 1};
        return std::find(targets.begin(), targets.end(), link) != targets.end();
    }
};

template <std::uniform_random_bit_generator Rng> MeasBasis sample_basis(BasisPolicy policy, Rng &rng) {
    if (policy == BasisPolicy::diagonal_only) return MeasBasis::diagonal;
    return std::bernoulli_distribution(0.5)(rng) ? MeasBasis::rectilinear : MeasBasis::diagonal;
}

struct InterceptRecord {
    MeasBasis basis;
    int outcome;
};

/// Measures the traveling photon in a policy-sampled basis and resends a
/// photon prepared in the observed eigenstate. The collapsed pair state is
/// exactly the product of the partner's conditional state and the resent photon.
template <std::uniform_random_bit_generator Rng>
InterceptRecord tap_intercept_resend(TwoQubitState &pair, QubitSlot traveling, BasisPolicy policy, Rng &rng) {
    const auto basis = sample_basis(policy, rng);
    auto [outcome, collapsed] = measure_single(pair, traveling, basis, rng);
    pair = collapsed;
    return {basis, outcome};
}

/// Fake-sequence insider: keeps the true Y photons, injects halves of its own
/// phi+ pairs, and reads the upstream sharer's ops off the returned fakes.
struct InsiderState {
    std::vector<std::reference_wrapper<TwoQubitState>> retained;
    std::vector<TwoQubitState> fake_pairs;
    std::vector<BellLabel> inference_log;
    std::vector<LocalOp> inferred_ops;
};

inline void insider_substitute(PhotonView &link_photons, InsiderState &insider) {
    insider.retained.assign(link_photons.begin(), link_photons.end());
    insider.fake_pairs.assign(link_photons.size(), bell_state(BellLabel::phi_plus));
    for (std::size_t i = 0; i < link_photons.size(); ++i) link_photons[i] = std::ref(insider.fake_pairs[i]);
}

/// Handles the encrypted fakes coming back: Bell-measures each fake pair,
/// infers the op as the one taking phi+ to the observed label, applies that op
/// to the retained true photon, and returns the view of the true photons.
template <std::uniform_random_bit_generator Rng> PhotonView insider_recover(InsiderState &insider, Rng &rng) {
    insider.inference_log.clear();
    insider.inferred_ops.clear();
    for (std::size_t i = 0; i < insider.fake_pairs.size(); ++i) {
        auto [label, collapsed] = bell_measure(insider.fake_pairs[i], rng);
        insider.fake_pairs[i] = collapsed;
        const auto op = alice_encoding_op(bell_to_bits(label));
        insider.inference_log.push_back(label);
        insider.inferred_ops.push_back(op);
        auto &retained = insider.retained[i].get();
        retained = apply_local(op, QubitSlot::y, retained);
    }
    return PhotonView(insider.retained.begin(), insider.retained.end());
}

/// The insider answering a checking request: measures the retained photon at
/// `index` in the requested basis and announces the raw outcome.
template <std::uniform_random_bit_generator Rng>
int insider_checking_behavior(InsiderState &insider, std::size_t index, MeasBasis requested, Rng &rng) {
    auto &pair = insider.retained.at(index).get();
    auto [outcome, collapsed] = measure_single(pair, QubitSlot::y, requested, rng);
    pair = collapsed;
    return outcome;
}

} // namespace qss
