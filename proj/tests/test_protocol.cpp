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

#include <catch_amalgamated.hpp>

#include "qss/protocol.hpp"

using namespace qss;
using Catch::Approx;

namespace {

Bits random_bits(std::size_t n, std::uint64_t seed) {
    auto rng = make_stream(seed, 99);
    std::bernoulli_distribution coin(0.5);
    Bits out(n);
    for (auto &b : out) b = coin(rng);
    return out;
}

ProtocolConfig make_config(int parties, std::size_t n, std::size_t k, std::size_t j, std::uint64_t seed,
                           bool variant = false) {
    ProtocolConfig c;
    c.n_parties = parties;
    c.message_pairs = n;
    c.check_pairs = k;
    c.auth_pairs = j;
    c.seed = seed;
    c.variant = variant;
    return c;
}

SessionResult run_either(const ProtocolConfig &c, const Bits &m,
                         const AdversaryStrategy &a = AdversaryStrategy::none()) {
    return c.variant ? run_variant_session(c, m, a) : run_session(c, m, a);
}

bool has_second_leg_transmission(const Transcript &t) {
    for (const auto &e : t.entries())
        if (const auto *tx = std::get_if<Transmission>(&e.payload); tx && tx->link.leg == Link::Leg::second)
            return true;
    return false;
}

std::array<std::size_t, 3> role_counts(const std::vector<PhotonPairRecord> &records) {
    std::array<std::size_t, 3> out{};
    for (const auto &r : records) ++out[static_cast<std::size_t>(r.role)];
    return out;
}

} // namespace

TEST_CASE("config validation", "[protocol]") {
    auto c = make_config(3, 1, 1, 0, 0);
    CHECK_NOTHROW(c.validate());
    c.n_parties = 2;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c = make_config(3, 1, 0, 0, 0);
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c = make_config(3, 0, 1, 0, 0);
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c = make_config(3, 1, 1, 0, 0);
    c.error_threshold = 1.5;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    // Message length must match the pair count.
    CHECK_THROWS_AS(Session(make_config(3, 2, 1, 0, 0), Bits{0, 1}), ConfigError);
    // Insider is three-party standard only.
    CHECK_THROWS_AS(Session(make_config(4, 1, 1, 0, 0), Bits{0, 1}, AdversaryStrategy::insider()), ConfigError);
}

TEST_CASE("prepare_sequence examples", "[protocol]") {
    auto rng = make_stream(1);
    const Bits m{0, 0, 1, 1};
    const auto records = prepare_sequence(m, 1, 1, rng);
    REQUIRE(records.size() == 4);
    std::vector<BellLabel> message_labels;
    for (const auto &r : records) {
        if (r.role == PairRole::message) message_labels.push_back(r.initial);
        CHECK(r.state.max_distance(bell_state(r.initial)) == 0.0);
    }
    CHECK(message_labels == std::vector<BellLabel>{BellLabel::phi_plus, BellLabel::psi_minus});
    CHECK_THROWS_AS(prepare_sequence(m, 0, 1, rng), ConfigError);
}

TEST_CASE("prepare_sequence invariants", "[protocol][property]") {
    auto rng = make_stream(3);
    for (int t = 0; t < 100; ++t) {
        const auto m = random_bits(20, t);
        const auto records = prepare_sequence(m, 7, 4, rng);
        REQUIRE(records.size() == 21);
        std::set<std::size_t> ids;
        std::size_t next_message = 0;
        for (std::size_t pos = 0; pos < records.size(); ++pos) {
            const auto &r = records[pos];
            CHECK(r.position == pos);
            ids.insert(r.pair_id);
            if (r.role == PairRole::message) {
                CHECK(r.pair_id == next_message);
                CHECK(bell_to_bits(r.initial) == BitPair{m[2 * next_message], m[2 * next_message + 1]});
                ++next_message;
            }
        }
        CHECK(ids.size() == 21);
        CHECK(role_counts(records) == std::array<std::size_t, 3>{10, 7, 4});
    }
}

TEST_CASE("checking-pair positions are uniform over slots", "[protocol][property]") {
    // N = 8, k = 1: the checking pair lands in one of 9 slots.
    const Bits m = random_bits(16, 5);
    std::array<double, 9> counts{};
    for (std::uint64_t seed = 0; seed < 1000; ++seed) {
        auto rng = make_stream(seed);
        const auto records = prepare_sequence(m, 1, 0, rng);
        for (const auto &r : records)
            if (r.role == PairRole::check_k) ++counts[r.position];
    }
    const double expected = 1000.0 / 9.0;
    double chi2 = 0;
    for (double c : counts) chi2 += (c - expected) * (c - expected) / expected;
    // Critical value for 8 degrees of freedom at the 0.01 level.
    CHECK(chi2 < 20.090);
}

TEST_CASE("checking pairs are uniform over the Bell states", "[protocol][property]") {
    auto rng = make_stream(8);
    std::array<double, 4> counts{};
    const auto records = prepare_sequence(Bits{0, 0}, 4000, 0, rng);
    for (const auto &r : records)
        if (r.role == PairRole::check_k) ++counts[static_cast<std::size_t>(r.initial)];
    double chi2 = 0;
    for (double c : counts) chi2 += (c - 1000.0) * (c - 1000.0) / 1000.0;
    CHECK(chi2 < 11.345); // 3 dof, 0.01
}

TEST_CASE("sharer_encrypt examples", "[protocol]") {
    auto rng = make_stream(9);
    std::vector<TwoQubitState> pairs(6, bell_state(BellLabel::phi_minus));
    PhotonView view(pairs.begin(), pairs.end());
    const std::array<LocalOp, 1> identity_only{LocalOp::u1};
    const auto ops = sharer_encrypt(view, identity_only, rng);
    CHECK(ops.size() == pairs.size());
    for (const auto &p : pairs) CHECK(p.max_distance(bell_state(BellLabel::phi_minus)) == 0.0);

    const auto five = sharer_encrypt(view, kFiveOpSet, rng);
    CHECK(five.size() == pairs.size());
    for (std::size_t i = 0; i < pairs.size(); ++i) {
        const std::array<LocalOp, 1> one{five[i]};
        CHECK(classify(pairs[i]) == compose_transforms(CanonicalState::bell(BellLabel::phi_minus), one));
    }

    std::vector<TwoQubitState> phi(1, bell_state(BellLabel::phi_plus));
    PhotonView v2(phi.begin(), phi.end());
    const std::array<LocalOp, 1> h_only{LocalOp::h};
    sharer_encrypt(v2, h_only, rng);
    sharer_encrypt(v2, h_only, rng);
    CHECK(phi[0].max_distance(bell_state(BellLabel::phi_plus)) < 1e-12);
}

TEST_CASE("sharer_encrypt draws uniformly from the op set", "[protocol][property]") {
    auto rng = make_stream(10);
    std::vector<TwoQubitState> pairs(5000, bell_state(BellLabel::phi_plus));
    PhotonView view(pairs.begin(), pairs.end());
    const auto ops = sharer_encrypt(view, kFiveOpSet, rng);
    std::array<double, 5> counts{};
    for (auto op : ops) ++counts[static_cast<std::size_t>(op)];
    double chi2 = 0;
    for (double c : counts) chi2 += (c - 1000.0) * (c - 1000.0) / 1000.0;
    CHECK(chi2 < 13.277); // 4 dof, 0.01
}

TEST_CASE("honest completeness for 3 to 8 parties, both directions", "[protocol][property]") {
    for (bool variant : {false, true}) {
        for (int n = 3; n <= 8; ++n) {
            for (std::uint64_t seed = 0; seed < 5; ++seed) {
                const auto c = make_config(n, 64, 16, 8, seed * 31 + n, variant);
                const auto m = random_bits(128, seed + 1000 * n);
                const auto r = run_either(c, m);
                INFO("variant " << variant << " n " << n << " seed " << seed);
                CHECK(r.status == SessionStatus::completed);
                CHECK(r.transit_error_rate == 0.0);
                CHECK(r.auth_error_rate == 0.0);
                CHECK(r.recovered_bits == m);
            }
        }
    }
    // Largest message size at the top of the party range.
    const auto m = random_bits(1024, 77);
    for (bool variant : {false, true}) {
        const auto r = run_either(make_config(8, 512, 64, 32, 77, variant), m);
        CHECK(r.status == SessionStatus::completed);
        CHECK(r.recovered_bits == m);
    }
}

TEST_CASE("honest checking round has zero error", "[protocol]") {
    for (int n : {3, 6}) {
        auto c = make_config(n, 4, 200, 0, 12);
        const auto check = run_checking_only(c, random_bits(8, 1), AdversaryStrategy::none());
        CHECK(check.checked == 200);
        CHECK(check.errors == 0);
    }
}

TEST_CASE("three-party H history on a psi- pair decodes to 11", "[protocol]") {
    // Build the exact situation: psi- encoded, sharer applied H, H undone.
    auto state = apply_local(LocalOp::h, QubitSlot::y, bell_state(BellLabel::psi_minus));
    state = apply_local_adjoint(LocalOp::h, QubitSlot::y, state);
    auto rng = make_stream(4);
    const auto [label, collapsed] = bell_measure(state, rng);
    CHECK(label == BellLabel::psi_minus);
    const std::array<LocalOp, 1> history{LocalOp::h};
    CHECK(decode_outcome(label, history, true) == BitPair{1, 1});
}

TEST_CASE("extraction denial for every proper subset of sharers", "[protocol][property]") {
    for (int n : {3, 4, 5}) {
        for (bool variant : {false, true}) {
            const auto c = make_config(n, 4, 2, 1, 21, variant);
            const auto m = random_bits(8, 21);
            const int sharers = n - 1;
            for (unsigned mask = 0; mask + 1 < (1u << sharers); ++mask) {
                std::set<int> subset;
                for (int p = 1; p <= sharers; ++p)
                    if (mask & (1u << (p - 1))) subset.insert(p);
                ExtractionOutcome out;
                if (variant) {
                    VariantSession s(c, m);
                    s.prepare();
                    s.distribute();
                    s.checking_round(s.checking_positions());
                    s.deliver();
                    out = s.extract_message(subset);
                } else {
                    Session s(c, m);
                    s.prepare();
                    s.distribute();
                    s.checking_round(s.checking_positions());
                    s.deliver();
                    out = s.extract_message(subset);
                }
                REQUIRE(std::holds_alternative<Denial>(out));
                const auto &missing = std::get<Denial>(out).missing;
                CHECK(missing.size() == static_cast<std::size_t>(sharers) - subset.size());
            }
        }
    }
}

TEST_CASE("abort monotonicity", "[protocol][property]") {
    const auto m = random_bits(32, 3);
    for (std::uint64_t seed = 0; seed < 40; ++seed) {
        std::optional<double> rate;
        for (double threshold : {0.0, 0.1, 0.2, 0.3, 0.5, 1.0}) {
            auto c = make_config(3, 16, 10, 4, seed);
            c.error_threshold = threshold;
            const auto r = run_session(c, m, AdversaryStrategy::intercept_resend());
            // The transit rate does not depend on the threshold.
            if (rate) CHECK(*rate == r.transit_error_rate);
            rate = r.transit_error_rate;
            CHECK(r.transit_error_rate >= 0.0);
            CHECK(r.transit_error_rate <= 1.0);
            if (r.transit_error_rate > threshold) {
                CHECK(r.status == SessionStatus::aborted_transit_check);
                CHECK_FALSE(has_second_leg_transmission(r.transcript));
                CHECK(r.recovered_bits.empty());
                CHECK(std::holds_alternative<SessionAborted>(r.transcript.entries().back().payload));
            } else {
                CHECK(r.status != SessionStatus::aborted_transit_check);
                CHECK(has_second_leg_transmission(r.transcript));
            }
        }
    }
}

TEST_CASE("transcript ordering: outcome precedes declarations", "[protocol][property]") {
    for (bool variant : {false, true}) {
        for (int n : {3, 4, 6}) {
            const auto r = run_either(make_config(n, 8, 12, 4, 5 + n, variant), random_bits(16, n));
            const auto &entries = r.transcript.entries();
            std::map<std::size_t, std::size_t> outcome_at;
            std::map<std::size_t, std::size_t> declarations;
            int last_phase = 0;
            for (std::size_t i = 0; i < entries.size(); ++i) {
                const int phase = static_cast<int>(entries[i].phase);
                CHECK(phase >= last_phase);
                last_phase = phase;
                if (const auto *o = std::get_if<OutcomeAnnounced>(&entries[i].payload)) {
                    CHECK(entries[i].speaker == n - 1);
                    outcome_at[o->position] = i;
                }
                if (const auto *d = std::get_if<OpDeclared>(&entries[i].payload)) {
                    if (!variant) {
                        REQUIRE(outcome_at.count(d->position));
                        CHECK(outcome_at[d->position] < i);
                    }
                    ++declarations[d->position];
                }
            }
            CHECK(outcome_at.size() == 12);
            for (const auto &[pos, count] : declarations) CHECK(count == static_cast<std::size_t>(n - 2));
        }
    }
}

TEST_CASE("variant query order covers every sharer once", "[protocol]") {
    const int n = 5;
    const auto r = run_variant_session(make_config(n, 4, 30, 2, 8, true), random_bits(8, 8));
    std::set<std::vector<int>> orders;
    for (const auto &e : r.transcript.entries()) {
        if (const auto *q = std::get_if<QueryOrder>(&e.payload)) {
            auto sorted = q->parties;
            std::sort(sorted.begin(), sorted.end());
            CHECK(sorted == std::vector<int>{1, 2, 3, 4});
            orders.insert(q->parties);
        }
    }
    // 30 draws from 24 orders: more than one distinct order.
    CHECK(orders.size() > 1);
}

TEST_CASE("conservation: role counts never change", "[protocol][property]") {
    for (bool variant : {false, true}) {
        const auto c = make_config(4, 10, 5, 3, 2, variant);
        const auto m = random_bits(20, 2);
        auto check_counts = [](const std::vector<PhotonPairRecord> &records, std::size_t k, std::size_t j) {
            const auto rc = role_counts(records);
            CHECK(rc[0] == 10);
            CHECK(rc[1] == k);
            CHECK(rc[2] == j);
            CHECK(records.size() == 18);
            for (const auto &r : records) CHECK(r.state.norm_squared() == Approx(1.0).margin(1e-12));
        };
        if (variant) {
            VariantSession s(c, m);
            s.prepare();
            check_counts(s.records(), 5, 3);
            s.distribute();
            s.checking_round(s.checking_positions());
            check_counts(s.records(), 5, 3);
            s.deliver();
            check_counts(s.records(), 5, 3);
            const auto raw = std::get<RawMessage>(s.extract_message({1, 2, 3}));
            s.authenticate_message(raw);
            check_counts(s.records(), 5, 3);
        } else {
            Session s(c, m);
            s.prepare();
            check_counts(s.records(), 5, 3);
            s.distribute();
            s.checking_round(s.checking_positions());
            s.deliver();
            const auto raw = std::get<RawMessage>(s.extract_message({1, 2, 3}));
            CHECK(raw.pairs.size() == 13);
            s.authenticate_message(raw);
            check_counts(s.records(), 5, 3);
        }
    }
}

TEST_CASE("missing op declaration aborts the transit check", "[protocol]") {
    for (bool variant : {false, true}) {
        const auto c = make_config(4, 4, 4, 2, 3, variant);
        const auto m = random_bits(8, 3);
        SessionResult r;
        if (variant) {
            VariantSession s(c, m);
            s.withhold_declarations(2);
            r = s.run();
        } else {
            Session s(c, m);
            s.withhold_declarations(2);
            r = s.run();
        }
        CHECK(r.status == SessionStatus::aborted_transit_check);
        CHECK(r.abort_reason == "missing op declaration");
        CHECK_FALSE(has_second_leg_transmission(r.transcript));
        CHECK(r.recovered_bits.empty());
    }
}

TEST_CASE("tampering with the second transmission is caught by authentication", "[protocol]") {
    for (bool variant : {false, true}) {
        int detected = 0;
        for (std::uint64_t seed = 0; seed < 20; ++seed) {
            const auto c = make_config(3, 16, 8, 32, seed, variant);
            const auto r = run_either(c, random_bits(32, seed),
                                      AdversaryStrategy::intercept_resend({{Link::Leg::second, 0}}));
            CHECK(r.transit_error_rate == 0.0);
            if (r.auth_error_rate > 0) {
                ++detected;
                CHECK(r.status == SessionStatus::aborted_authentication);
                CHECK(r.recovered_bits.empty());
            }
        }
        CHECK(detected == 20);
    }
}

TEST_CASE("j = 0 yields rate 0 with the unchecked flag", "[protocol]") {
    for (bool variant : {false, true}) {
        const auto r = run_either(make_config(3, 8, 4, 0, 1, variant), random_bits(16, 1));
        CHECK(r.status == SessionStatus::completed);
        CHECK(r.auth_error_rate == 0.0);
        CHECK(r.auth_unchecked);
    }
    CHECK_FALSE(run_session(make_config(3, 8, 4, 2, 1), random_bits(16, 1)).auth_unchecked);
}

TEST_CASE("variant extraction applies at most an H", "[protocol]") {
    std::size_t with_h = 0, without = 0;
    for (int n : {3, 4, 6}) {
        const auto r = run_variant_session(make_config(n, 64, 16, 16, 40 + n, true), random_bits(128, n));
        REQUIRE(r.status == SessionStatus::completed);
        CHECK(r.extraction_log.size() == 80);
        for (const auto &a : r.extraction_log) {
            CHECK(a.undone.size() <= 1);
            for (auto op : a.undone) CHECK(op == LocalOp::h);
            (a.undone.empty() ? without : with_h) += 1;
        }
    }
    CHECK(with_h > 0);
    CHECK(without > 0);
}

TEST_CASE("standard extraction undoes ops in reverse order", "[protocol]") {
    const int n = 5;
    const auto c = make_config(n, 8, 4, 2, 6);
    Session s(c, random_bits(16, 6));
    const auto r = s.run();
    REQUIRE(r.status == SessionStatus::completed);
    for (const auto &a : r.extraction_log) {
        REQUIRE(a.undone.size() == 3);
        for (int p = 1; p <= 3; ++p) CHECK(a.undone[3 - p] == s.sharer_ops(p)[a.position]);
    }
    // The last sharer never encrypts.
    CHECK(s.sharer_ops(n - 1).empty());
}

TEST_CASE("sessions are deterministic in the seed", "[protocol]") {
    const auto m = random_bits(32, 1);
    for (bool variant : {false, true}) {
        const auto c = make_config(4, 16, 8, 4, 1234, variant);
        const auto a = run_either(c, m, AdversaryStrategy::intercept_resend());
        const auto b = run_either(c, m, AdversaryStrategy::intercept_resend());
        CHECK(a.transit_errors == b.transit_errors);
        CHECK(a.transcript.size() == b.transcript.size());
        CHECK(a.status == b.status);
    }
}
