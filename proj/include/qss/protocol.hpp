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

/// Session drivers for multiparty secret sharing of direct communication over
/// EPR pairs.
///
/// Parties are numbered 0 (the sender, Alice) through n-1. Sharers 1..n-2
/// encrypt the traveling Y photons; sharer n-1 (the last sharer) measures the
/// checking photons and receives the second transmission.
///
///  * Standard direction: Alice prepares pairs carrying the message, sends the
///    Y photons along 0 -> 1 -> ... -> n-1, checks the chain, then delivers the
///    retained X photons to party n-1.
///  * Variant direction: party n-1 prepares phi+ pairs and sends the Y photons
///    along n-1 -> n-2 -> ... -> 1 -> 0; Alice checks, encodes with one local op
///    per pair and returns the Y photons to party n-1.

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <optional>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "qss/adversary.hpp"
#include "qss/message_codec.hpp"
#include "qss/quantum_core.hpp"

namespace qss {

class ConfigError : public std::invalid_argument {
  public:
    using std::invalid_argument::invalid_argument;
};

struct ProtocolConfig {
    int n_parties = 3;
    std::size_t message_pairs = 1;
    std::size_t check_pairs = 1;
    std::size_t auth_pairs = 0;
    double error_threshold = 0.02;
    bool variant = false;
    std::uint64_t seed = 0;
    /// Restricts sharer encryption to {U1..U4}; only used for negative controls.
    bool four_op_set = false;
    /// Every checking measurement uses the diagonal basis; only used for negative controls.
    bool single_basis = false;

    int last_sharer() const { return n_parties - 1; }
    std::size_t total_pairs() const { return message_pairs + check_pairs + auth_pairs; }
    std::span<const LocalOp> op_set() const {
        if (four_op_set) return kFourOpSet;
        return kFiveOpSet;
    }

    void validate() const {
        if (n_parties < 3) throw ConfigError("n_parties must be at least 3");
        if (message_pairs < 1) throw ConfigError("message must contain at least one bit pair");
        if (check_pairs < 1) throw ConfigError("k (checking pairs) must be at least 1");
        if (!(error_threshold >= 0.0 && error_threshold <= 1.0))
            throw ConfigError("error threshold must lie in [0, 1]");
    }
};

enum class PairRole : std::uint8_t { message, check_k, check_j };

inline std::string to_string(PairRole r) {
    switch (r) {
    case PairRole::message:
        return "message";
    case PairRole::check_k:
        return "check_k";
    case PairRole::check_j:
        return "check_j";
    }
    return "?";
}

struct PhotonPairRecord {
    std::size_t pair_id = 0;
    PairRole role = PairRole::message;
    std::size_t position = 0;
    BellLabel initial = BellLabel::phi_plus;
    TwoQubitState state;
    /// Sender's encoding in the variant direction.
    std::optional<BitPair> encoding;
};

/// Builds the transmitted sequence: N message pairs in message order with k+j
/// checking pairs in uniformly random Bell states at uniformly random slots.
/// Message pairs get ids 0..N-1, k-checks N..N+k-1, j-checks after that.
template <std::uniform_random_bit_generator Rng>
std::vector<PhotonPairRecord> prepare_sequence(std::span<const std::uint8_t> message_bits, std::size_t k,
                                               std::size_t j, Rng &rng) {
    if (k < 1) throw ConfigError("k (checking pairs) must be at least 1");
    const auto message = encode_message(message_bits);
    const std::size_t n = message.size();

    // Inserting each checking pair at a uniform slot one at a time yields a
    // uniformly random interleaving; shuffling the role sequence samples the
    // same distribution in linear time.
    std::vector<std::size_t> ids(n + k + j);
    std::iota(ids.begin(), ids.end(), std::size_t{0});
    std::shuffle(ids.begin(), ids.end(), rng);
    std::size_t next_message = 0;
    for (auto &id : ids)
        if (id < n) id = next_message++;

    std::uniform_int_distribution<unsigned> pick_bell(0, 3);
    std::vector<PhotonPairRecord> records(ids.size());
    for (std::size_t pos = 0; pos < ids.size(); ++pos) {
        auto &r = records[pos];
        r.pair_id = ids[pos];
        r.position = pos;
        if (r.pair_id < n) {
            r.role = PairRole::message;
            r.initial = message[r.pair_id];
        } else {
            r.role = r.pair_id < n + k ? PairRole::check_k : PairRole::check_j;
            r.initial = kBellLabels[pick_bell(rng)];
        }
        r.state = bell_state(r.initial);
    }
    return records;
}

/// A sharer encrypting every photon in the view with an independently drawn
/// op. Returns the private op record, one entry per photon.
template <std::uniform_random_bit_generator Rng>
std::vector<LocalOp> sharer_encrypt(PhotonView &photons, std::span<const LocalOp> op_set, Rng &rng) {
    std::uniform_int_distribution<std::size_t> pick(0, op_set.size() - 1);
    std::vector<LocalOp> ops;
    ops.reserve(photons.size());
    for (auto &ref : photons) {
        const auto op = op_set[pick(rng)];
        auto &pair = ref.get();
        pair = apply_local(op, QubitSlot::y, pair);
        ops.push_back(op);
    }
    return ops;
}

// ---------------------------------------------------------------------------
// Transcript

enum class Phase : std::uint8_t { distribute, check, deliver, extract, authenticate };

inline std::string to_string(Phase p) {
    switch (p) {
    case Phase::distribute:
        return "distribute";
    case Phase::check:
        return "check";
    case Phase::deliver:
        return "deliver";
    case Phase::extract:
        return "extract";
    case Phase::authenticate:
        return "authenticate";
    }
    return "?";
}

struct Transmission {
    Link link;
    int to = 0;
    std::size_t photons = 0;
};
struct PositionsAnnounced {
    std::vector<std::size_t> positions;
};
struct BasisAssigned {
    std::size_t position = 0;
    MeasBasis basis = MeasBasis::diagonal;
};
struct OutcomeAnnounced {
    std::size_t position = 0;
    MeasBasis basis = MeasBasis::diagonal;
    int outcome = 0;
};
struct OpDeclared {
    std::size_t position = 0;
    LocalOp op = LocalOp::u1;
};
struct QueryOrder {
    std::size_t position = 0;
    std::vector<int> parties;
};
struct ErrorRateAnnounced {
    double rate = 0;
    std::size_t errors = 0;
    std::size_t checked = 0;
};
struct AuthRevealed {
    std::vector<std::size_t> positions;
    std::vector<BitPair> bits;
};
struct SessionAborted {
    std::string reason;
};

using Payload = std::variant<Transmission, PositionsAnnounced, BasisAssigned, OutcomeAnnounced, OpDeclared,
                             QueryOrder, ErrorRateAnnounced, AuthRevealed, SessionAborted>;

struct Announcement {
    int speaker = 0;
    Phase phase = Phase::distribute;
    Payload payload;
};

/// Append-only log of public classical announcements and quantum transmission events.
class Transcript {
  public:
    void append(int speaker, Phase phase, Payload payload) {
        entries_.push_back({speaker, phase, std::move(payload)});
    }
    const std::vector<Announcement> &entries() const { return entries_; }
    std::size_t size() const { return entries_.size(); }

  private:
    std::vector<Announcement> entries_;
};

// ---------------------------------------------------------------------------
// Results

enum class SessionStatus : std::uint8_t { completed, aborted_transit_check, aborted_authentication };

inline std::string to_string(SessionStatus s) {
    switch (s) {
    case SessionStatus::completed:
        return "completed";
    case SessionStatus::aborted_transit_check:
        return "aborted_transit_check";
    case SessionStatus::aborted_authentication:
        return "aborted_authentication";
    }
    return "?";
}

struct CheckResult {
    std::size_t checked = 0;
    std::size_t errors = 0;
    double error_rate = 0;
    /// A sharer withheld an op declaration; the round stopped at that pair.
    bool missing_declaration = false;
};

/// Decoded pairs of the second transmission, in sequence order.
struct RawMessage {
    std::vector<std::size_t> positions;
    std::vector<BitPair> pairs;

    Bits bits() const {
        Bits out;
        out.reserve(pairs.size() * 2);
        for (auto p : pairs) {
            out.push_back(p.hi);
            out.push_back(p.lo);
        }
        return out;
    }
};

struct Denial {
    std::vector<int> missing;
};

using ExtractionOutcome = std::variant<RawMessage, Denial>;

/// Ops applied to one Y photon during extraction; each is applied as its adjoint.
struct ExtractionAction {
    std::size_t position = 0;
    std::vector<LocalOp> undone;
};

struct AuthResult {
    double error_rate = 0;
    std::size_t mismatches = 0;
    Bits message;
    /// No authentication pairs were configured, so the rate is 0 by definition.
    bool unchecked = false;
};

struct SessionResult {
    SessionStatus status = SessionStatus::completed;
    double transit_error_rate = 0;
    double auth_error_rate = 0;
    std::size_t transit_errors = 0;
    std::size_t transit_checked = 0;
    std::size_t auth_errors = 0;
    Bits recovered_bits;
    bool auth_unchecked = false;
    std::string abort_reason;
    Transcript transcript;
    std::vector<ExtractionAction> extraction_log;
};

// ---------------------------------------------------------------------------
// Sessions

namespace detail {

/// State shared by both directions: configuration, pairs, private op records,
/// adversary, and the public transcript.
class SessionCore {
  public:
    SessionCore(ProtocolConfig config, Bits message, AdversaryStrategy adversary)
        : config_(config), message_(std::move(message)), adversary_(std::move(adversary)),
          rng_(make_stream(config.seed)) {
        config_.validate();
        if (message_.size() != 2 * config_.message_pairs)
            throw ConfigError("message length does not match the configured pair count");
        if (adversary_.kind == AdversaryKind::insider_fake_sequence) {
            if (config_.variant || config_.n_parties != 3)
                throw ConfigError("insider attack is modeled for the three-party standard protocol only");
            if (adversary_.insider_party != 2) throw ConfigError("insider must be the last sharer (party 2)");
        }
        for (const auto &link : adversary_.targets) {
            const bool ok = link.leg == Link::Leg::second ? link.hop == 0
                                                          : (link.hop >= 0 && link.hop < config_.n_parties - 1);
            if (!ok) throw ConfigError("adversary targets a link outside the session topology");
        }
        ops_.assign(config_.n_parties, {});
    }

    const ProtocolConfig &config() const { return config_; }
    const std::vector<PhotonPairRecord> &records() const { return records_; }
    std::vector<PhotonPairRecord> &mutable_records() { return records_; }
    const Transcript &transcript() const { return transcript_; }
    /// Private op record of one sharer, indexed by sequence position.
    const std::vector<LocalOp> &sharer_ops(int party) const { return ops_.at(party); }
    const InsiderState &insider_state() const { return insider_; }
    RandomStream &rng() { return rng_; }

    /// Test hook: the party refuses to declare its ops during checking.
    void withhold_declarations(int party) { withholding_.insert(party); }

    bool is_encrypting_sharer(int party) const { return party >= 1 && party <= config_.n_parties - 2; }

  protected:
    int first_leg_hops() const { return config_.n_parties - 1; }

    void tap_link(const Link &link, PhotonView &photons, QubitSlot traveling) {
        if (adversary_.kind != AdversaryKind::intercept_resend) return;
        if (!adversary_.taps(link, first_leg_hops())) return;
        const auto policy = config_.single_basis ? BasisPolicy::diagonal_only : adversary_.basis_policy;
        for (auto &ref : photons) tap_intercept_resend(ref.get(), traveling, policy, rng_);
    }

    MeasBasis checking_basis() {
        if (config_.single_basis) return MeasBasis::diagonal;
        return std::bernoulli_distribution(0.5)(rng_) ? MeasBasis::rectilinear : MeasBasis::diagonal;
    }

    std::optional<LocalOp> declare(int party, std::size_t position) const {
        if (withholding_.count(party)) return std::nullopt;
        return ops_[party][position];
    }

    std::optional<Denial> check_collaboration(const std::set<int> &collaboration) const {
        Denial denial;
        for (int p = 1; p < config_.n_parties; ++p)
            if (!collaboration.count(p)) denial.missing.push_back(p);
        if (denial.missing.empty()) return std::nullopt;
        return denial;
    }

    AuthResult compare_auth(const RawMessage &raw, const std::vector<std::size_t> &auth_positions,
                            const std::vector<BitPair> &announced) const {
        AuthResult out;
        std::set<std::size_t> auth_set(auth_positions.begin(), auth_positions.end());
        for (std::size_t i = 0; i < auth_positions.size(); ++i) {
            const auto it = std::find(raw.positions.begin(), raw.positions.end(), auth_positions[i]);
            if (it == raw.positions.end() || raw.pairs[it - raw.positions.begin()] != announced[i]) ++out.mismatches;
        }
        for (std::size_t i = 0; i < raw.positions.size(); ++i) {
            if (auth_set.count(raw.positions[i])) continue;
            out.message.push_back(raw.pairs[i].hi);
            out.message.push_back(raw.pairs[i].lo);
        }
        out.unchecked = auth_positions.empty();
        out.error_rate = out.unchecked ? 0.0 : double(out.mismatches) / double(auth_positions.size());
        return out;
    }

    /// Drives checking, delivery, extraction and authentication once the first
    /// leg is complete.
    template <typename Derived> SessionResult finish(Derived &self) {
        SessionResult result;
        const auto check = self.checking_round(self.checking_positions());
        result.transit_error_rate = check.error_rate;
        result.transit_errors = check.errors;
        result.transit_checked = check.checked;
        if (check.missing_declaration || check.error_rate > config_.error_threshold) {
            result.status = SessionStatus::aborted_transit_check;
            result.abort_reason = check.missing_declaration ? "missing op declaration" : "transit error rate above threshold";
            transcript_.append(0, Phase::check, SessionAborted{result.abort_reason});
            result.transcript = transcript_;
            return result;
        }
        self.deliver();
        std::set<int> everyone;
        for (int p = 1; p < config_.n_parties; ++p) everyone.insert(p);
        const auto raw = std::get<RawMessage>(self.extract_message(everyone));
        const auto auth = self.authenticate_message(raw);
        result.auth_error_rate = auth.error_rate;
        result.auth_errors = auth.mismatches;
        result.auth_unchecked = auth.unchecked;
        result.extraction_log = extraction_log_;
        if (auth.error_rate > config_.error_threshold) {
            result.status = SessionStatus::aborted_authentication;
            result.abort_reason = "authentication error rate above threshold";
            transcript_.append(0, Phase::authenticate, SessionAborted{result.abort_reason});
        } else {
            result.status = SessionStatus::completed;
            result.recovered_bits = auth.message;
        }
        result.transcript = transcript_;
        return result;
    }

    ProtocolConfig config_;
    Bits message_;
    AdversaryStrategy adversary_;
    RandomStream rng_;
    std::vector<PhotonPairRecord> records_;
    std::vector<std::vector<LocalOp>> ops_;
    std::set<int> withholding_;
    InsiderState insider_;
    bool insider_active_ = false;
    Transcript transcript_;
    std::vector<ExtractionAction> extraction_log_;
};

inline PhotonView view_of(std::vector<PhotonPairRecord> &records) {
    PhotonView view;
    view.reserve(records.size());
    for (auto &r : records) view.push_back(std::ref(r.state));
    return view;
}

} // namespace detail

/// Standard direction: sender prepares, Y photons travel down the sharer
/// chain, X photons follow once the chain is verified.
class Session : public detail::SessionCore {
  public:
    Session(ProtocolConfig config, Bits message, AdversaryStrategy adversary = AdversaryStrategy::none())
        : SessionCore(config, std::move(message), std::move(adversary)) {
        if (config_.variant) throw ConfigError("use VariantSession for the reversed direction");
    }

    void prepare() { records_ = prepare_sequence(message_, config_.check_pairs, config_.auth_pairs, rng_); }

    /// Sends the Y sequence hop by hop to the last sharer, with encryption by
    /// each intermediate sharer and any configured tapping.
    void distribute() {
        PhotonView photons = detail::view_of(records_);
        const bool insider = adversary_.kind == AdversaryKind::insider_fake_sequence;
        for (int hop = 0; hop < first_leg_hops(); ++hop) {
            const Link link{Link::Leg::first, hop};
            const int receiver = hop + 1;
            transcript_.append(hop, Phase::distribute, Transmission{link, receiver, photons.size()});
            tap_link(link, photons, QubitSlot::y);
            if (insider && hop == 0) {
                insider_substitute(photons, insider_);
                insider_active_ = true;
            }
            if (is_encrypting_sharer(receiver)) ops_[receiver] = sharer_encrypt(photons, config_.op_set(), rng_);
            if (insider && receiver == adversary_.insider_party) photons = insider_recover(insider_, rng_);
        }
    }

    std::vector<std::size_t> checking_positions() const {
        std::vector<std::size_t> out;
        for (const auto &r : records_)
            if (r.role == PairRole::check_k) out.push_back(r.position);
        return out;
    }

    /// For each position: the last sharer measures in the basis Alice assigns
    /// and announces, every other sharer declares its op, and Alice measures
    /// her X photon in the same basis if the composed state is in the Bell set
    /// and in the other basis otherwise.
    CheckResult checking_round(std::span<const std::size_t> positions) {
        const int last = config_.last_sharer();
        CheckResult out;
        transcript_.append(0, Phase::check, PositionsAnnounced{{positions.begin(), positions.end()}});
        for (auto pos : positions) {
            auto &rec = records_.at(pos);
            const auto basis = checking_basis();
            transcript_.append(0, Phase::check, BasisAssigned{pos, basis});

            int outcome = 0;
            if (insider_active_) {
                outcome = insider_checking_behavior(insider_, pos, basis, rng_);
            } else {
                auto [o, collapsed] = measure_single(rec.state, QubitSlot::y, basis, rng_);
                rec.state = collapsed;
                outcome = o;
            }
            transcript_.append(last, Phase::check, OutcomeAnnounced{pos, basis, outcome});

            std::vector<LocalOp> declared;
            for (int p = 1; p < last; ++p) {
                const auto op = declare(p, pos);
                if (!op) {
                    out.missing_declaration = true;
                    break;
                }
                transcript_.append(p, Phase::check, OpDeclared{pos, *op});
                declared.push_back(*op);
            }
            if (out.missing_declaration) break;

            const auto composed = compose_transforms(CanonicalState::bell(rec.initial), declared);
            const auto alice_basis = composed.is_bell() ? basis : other_basis(basis);
            auto [alice_outcome, collapsed] = measure_single(rec.state, QubitSlot::x, alice_basis, rng_);
            rec.state = collapsed;
            const auto expected = correlated_outcome(to_state(composed), QubitSlot::y, basis, outcome, alice_basis);
            // The basis rule always makes the partner outcome deterministic.
            if (!expected) throw std::logic_error("checking basis rule produced no correlation");
            ++out.checked;
            if (alice_outcome != *expected) ++out.errors;
        }
        out.error_rate = out.checked ? double(out.errors) / double(out.checked) : 0.0;
        transcript_.append(0, Phase::check, ErrorRateAnnounced{out.error_rate, out.errors, out.checked});
        return out;
    }

    /// Alice sends the retained X photons of the N+j remaining pairs to the last sharer.
    void deliver() {
        PhotonView photons;
        for (auto &r : records_)
            if (r.role != PairRole::check_k) photons.push_back(std::ref(r.state));
        const Link link{Link::Leg::second, 0};
        transcript_.append(0, Phase::deliver, Transmission{link, config_.last_sharer(), photons.size()});
        tap_link(link, photons, QubitSlot::x);
    }

    /// With every sharer present, undoes the encryption and Bell-measures each
    /// of the N+j delivered pairs. Three parties undo only an H and decode the
    /// rest from the declared op; larger groups apply the full reversal.
    ExtractionOutcome extract_message(const std::set<int> &collaboration) {
        if (auto denial = check_collaboration(collaboration)) return *denial;
        RawMessage raw;
        const int last = config_.last_sharer();
        for (auto &rec : records_) {
            if (rec.role == PairRole::check_k) continue;
            ExtractionAction action{rec.position, {}};
            BitPair bits;
            if (config_.n_parties == 3) {
                const LocalOp op = ops_[1][rec.position];
                const bool undo_h = op == LocalOp::h;
                if (undo_h) {
                    rec.state = apply_local_adjoint(LocalOp::h, QubitSlot::y, rec.state);
                    action.undone.push_back(LocalOp::h);
                }
                auto [label, collapsed] = bell_measure(rec.state, rng_);
                rec.state = collapsed;
                const std::array<LocalOp, 1> history{op};
                bits = decode_outcome(label, history, undo_h);
            } else {
                for (int p = last - 1; p >= 1; --p) {
                    const LocalOp op = ops_[p][rec.position];
                    rec.state = apply_local_adjoint(op, QubitSlot::y, rec.state);
                    action.undone.push_back(op);
                }
                auto [label, collapsed] = bell_measure(rec.state, rng_);
                rec.state = collapsed;
                bits = decode_outcome(label, {}, false);
            }
            raw.positions.push_back(rec.position);
            raw.pairs.push_back(bits);
            extraction_log_.push_back(std::move(action));
        }
        return raw;
    }

    /// Alice reveals the j authentication pairs; mismatches against the
    /// decoded bits give the authentication error rate, and the j pairs are
    /// stripped from the raw message.
    AuthResult authenticate_message(const RawMessage &raw) {
        AuthRevealed reveal;
        for (const auto &r : records_) {
            if (r.role != PairRole::check_j) continue;
            reveal.positions.push_back(r.position);
            reveal.bits.push_back(bell_to_bits(r.initial));
        }
        transcript_.append(0, Phase::authenticate, reveal);
        return compare_auth(raw, reveal.positions, reveal.bits);
    }

    SessionResult run() {
        prepare();
        distribute();
        return finish(*this);
    }
};

/// Reversed direction: the last sharer prepares phi+ pairs, the Y photons
/// travel back to Alice through the sharers, and Alice encodes on them.
class VariantSession : public detail::SessionCore {
  public:
    VariantSession(ProtocolConfig config, Bits message, AdversaryStrategy adversary = AdversaryStrategy::none())
        : SessionCore(config, std::move(message), std::move(adversary)) {
        if (!config_.variant) throw ConfigError("VariantSession requires config.variant");
    }

    /// All pairs start in phi+. Alice's k checking and j authentication
    /// positions are drawn here but stay private until she announces them.
    void prepare() {
        records_.assign(config_.total_pairs(), {});
        for (std::size_t i = 0; i < records_.size(); ++i) {
            records_[i].pair_id = i;
            records_[i].position = i;
            records_[i].initial = BellLabel::phi_plus;
            records_[i].state = bell_state(BellLabel::phi_plus);
        }
        std::vector<std::size_t> all(records_.size());
        std::iota(all.begin(), all.end(), std::size_t{0});
        check_positions_.clear();
        std::sample(all.begin(), all.end(), std::back_inserter(check_positions_), config_.check_pairs, rng_);
        for (auto pos : check_positions_) records_[pos].role = PairRole::check_k;
        std::vector<std::size_t> remaining;
        for (const auto &r : records_)
            if (r.role != PairRole::check_k) remaining.push_back(r.position);
        std::vector<std::size_t> auth;
        std::sample(remaining.begin(), remaining.end(), std::back_inserter(auth), config_.auth_pairs, rng_);
        for (auto pos : auth) records_[pos].role = PairRole::check_j;
    }

    /// Encrypting sharers in the order the Y photons reach them.
    std::vector<int> encryption_order() const {
        std::vector<int> order;
        for (int p = config_.n_parties - 2; p >= 1; --p) order.push_back(p);
        return order;
    }

    void distribute() {
        PhotonView photons = detail::view_of(records_);
        for (int hop = 0; hop < first_leg_hops(); ++hop) {
            const Link link{Link::Leg::first, hop};
            const int sender = config_.n_parties - 1 - hop;
            const int receiver = sender - 1;
            transcript_.append(sender, Phase::distribute, Transmission{link, receiver, photons.size()});
            tap_link(link, photons, QubitSlot::y);
            if (is_encrypting_sharer(receiver)) ops_[receiver] = sharer_encrypt(photons, config_.op_set(), rng_);
        }
    }

    /// Alice's k positions, uniform over the sequence.
    std::vector<std::size_t> checking_positions() const { return check_positions_; }

    /// For each position the last sharer measures its X photon in a random
    /// basis; Alice then queries every sharer in a fresh random order, composes
    /// the declared ops onto phi+, and measures her Y photon.
    CheckResult checking_round(std::span<const std::size_t> positions) {
        const int last = config_.last_sharer();
        CheckResult out;
        transcript_.append(0, Phase::check, PositionsAnnounced{{positions.begin(), positions.end()}});
        std::vector<int> sharers(last);
        std::iota(sharers.begin(), sharers.end(), 1);
        for (auto pos : positions) {
            auto &rec = records_.at(pos);
            const auto basis = checking_basis();
            auto [outcome, measured] = measure_single(rec.state, QubitSlot::x, basis, rng_);
            rec.state = measured;

            std::shuffle(sharers.begin(), sharers.end(), rng_);
            transcript_.append(0, Phase::check, QueryOrder{pos, sharers});
            for (int p : sharers) {
                if (p == last) {
                    transcript_.append(p, Phase::check, OutcomeAnnounced{pos, basis, outcome});
                    continue;
                }
                const auto op = declare(p, pos);
                if (!op) {
                    out.missing_declaration = true;
                    break;
                }
                transcript_.append(p, Phase::check, OpDeclared{pos, *op});
            }
            if (out.missing_declaration) break;

            const auto composed = pre_encoding_state(pos);
            const auto alice_basis = composed.is_bell() ? basis : other_basis(basis);
            auto [alice_outcome, collapsed] = measure_single(rec.state, QubitSlot::y, alice_basis, rng_);
            rec.state = collapsed;
            const auto expected = correlated_outcome(to_state(composed), QubitSlot::x, basis, outcome, alice_basis);
            if (!expected) throw std::logic_error("checking basis rule produced no correlation");
            ++out.checked;
            if (alice_outcome != *expected) ++out.errors;
        }
        out.error_rate = out.checked ? double(out.errors) / double(out.checked) : 0.0;
        transcript_.append(0, Phase::check, ErrorRateAnnounced{out.error_rate, out.errors, out.checked});
        return out;
    }

    /// Alice encodes the message in order on the unchecked non-authentication
    /// pairs and random bit pairs on the j authentication pairs,
    /// then returns the Y photons to the last sharer.
    void deliver() {
        std::vector<std::size_t> remaining;
        for (const auto &r : records_)
            if (r.role != PairRole::check_k) remaining.push_back(r.position);

        std::uniform_int_distribution<unsigned> pick(0, 3);
        std::size_t next_bit = 0;
        PhotonView photons;
        for (auto pos : remaining) {
            auto &rec = records_[pos];
            BitPair bits;
            if (rec.role == PairRole::check_j) {
                bits = BitPair::from_value(pick(rng_));
            } else {
                bits = {message_[next_bit], message_[next_bit + 1]};
                next_bit += 2;
            }
            rec.encoding = bits;
            rec.state = apply_local(alice_encoding_op(bits), QubitSlot::y, rec.state);
            photons.push_back(std::ref(rec.state));
        }
        const Link link{Link::Leg::second, 0};
        transcript_.append(0, Phase::deliver, Transmission{link, config_.last_sharer(), photons.size()});
        tap_link(link, photons, QubitSlot::y);
    }

    /// State of a pair just before Alice's encoding, from the sharers' ops.
    CanonicalState pre_encoding_state(std::size_t pos) const {
        std::vector<LocalOp> ops;
        for (int p : encryption_order()) ops.push_back(ops_[p][pos]);
        return compose_transforms(CanonicalState::bell(BellLabel::phi_plus), ops);
    }

    /// Only an H on the Y photon is ever applied, and only when the
    /// pre-encoding state lies in the rotation set.
    ExtractionOutcome extract_message(const std::set<int> &collaboration) {
        if (auto denial = check_collaboration(collaboration)) return *denial;
        RawMessage raw;
        for (auto &rec : records_) {
            if (rec.role == PairRole::check_k) continue;
            const auto before = pre_encoding_state(rec.position);
            ExtractionAction action{rec.position, {}};
            const bool undo_h = !before.is_bell();
            if (undo_h) {
                rec.state = apply_local(LocalOp::h, QubitSlot::y, rec.state);
                action.undone.push_back(LocalOp::h);
            }
            auto [label, collapsed] = bell_measure(rec.state, rng_);
            rec.state = collapsed;
            raw.positions.push_back(rec.position);
            raw.pairs.push_back(decode_encoding(before, label, undo_h));
            extraction_log_.push_back(std::move(action));
        }
        return raw;
    }

    AuthResult authenticate_message(const RawMessage &raw) {
        AuthRevealed reveal;
        for (const auto &r : records_) {
            if (r.role != PairRole::check_j) continue;
            reveal.positions.push_back(r.position);
            reveal.bits.push_back(*r.encoding);
        }
        transcript_.append(0, Phase::authenticate, reveal);
        return compare_auth(raw, reveal.positions, reveal.bits);
    }

    SessionResult run() {
        prepare();
        distribute();
        return finish(*this);
    }

    /// The encoding whose image of `before` (followed by H when undone) has
    /// the measured Bell label. Unique because each op row permutes labels.
    static BitPair decode_encoding(const CanonicalState &before, BellLabel measured, bool hadamard_undone) {
        for (unsigned v = 0; v < 4; ++v) {
            const auto bits = BitPair::from_value(v);
            auto s = table_transform(alice_encoding_op(bits), before);
            if (hadamard_undone) s = table_transform(LocalOp::h, s);
            if (s.is_bell() && s.bell_label() == measured) return bits;
        }
        throw std::logic_error("decode_encoding: no preimage");
    }

  private:
    std::vector<std::size_t> check_positions_;
};

inline SessionResult run_session(const ProtocolConfig &config, const Bits &message,
                                 const AdversaryStrategy &adversary = AdversaryStrategy::none()) {
    return Session(config, message, adversary).run();
}

inline SessionResult run_variant_session(const ProtocolConfig &config, const Bits &message,
                                         const AdversaryStrategy &adversary = AdversaryStrategy::none()) {
    return VariantSession(config, message, adversary).run();
}

/// Runs only the first leg and the checking round, returning the raw
/// checking statistics. Used for per-pair error-rate estimates.
inline CheckResult run_checking_only(const ProtocolConfig &config, const Bits &message,
                                     const AdversaryStrategy &adversary) {
    if (config.variant) {
        VariantSession s(config, message, adversary);
        s.prepare();
        s.distribute();
        return s.checking_round(s.checking_positions());
    }
    Session s(config, message, adversary);
    s.prepare();
    s.distribute();
    return s.checking_round(s.checking_positions());
}

} // namespace qss
