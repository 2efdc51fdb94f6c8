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

// Line-delimited JSON encoding of transcripts and session results. One record
// per line; the record layout is documented in docs/output-format.md.

#include <ostream>
#include <string>
#include <type_traits>

#include <json.hpp>

#include "qss/protocol.hpp"

namespace qss {

using Json = nlohmann::ordered_json;

inline Json to_json(const Link &link) { return Json{{"leg", to_string(link.leg)}, {"hop", link.hop}}; }

inline Json payload_to_json(const Payload &payload) {
    return std::visit(
        [](const auto &p) -> Json {
            using T = std::decay_t<decltype(p)>;
            if constexpr (std::is_same_v<T, Transmission>) {
                return {{"kind", "transmission"}, {"link", to_json(p.link)}, {"to", p.to}, {"photons", p.photons}};
            } else if constexpr (std::is_same_v<T, PositionsAnnounced>) {
                return {{"kind", "positions"}, {"positions", p.positions}};
            } else if constexpr (std::is_same_v<T, BasisAssigned>) {
                return {{"kind", "basis_assigned"}, {"position", p.position}, {"basis", to_string(p.basis)}};
            } else if constexpr (std::is_same_v<T, OutcomeAnnounced>) {
                return {{"kind", "outcome"},
                        {"position", p.position},
                        {"basis", to_string(p.basis)},
                        {"outcome", p.outcome}};
            } else if constexpr (std::is_same_v<T, OpDeclared>) {
                return {{"kind", "op_declared"}, {"position", p.position}, {"op", to_string(p.op)}};
            } else if constexpr (std::is_same_v<T, QueryOrder>) {
                return {{"kind", "query_order"}, {"position", p.position}, {"parties", p.parties}};
            } else if constexpr (std::is_same_v<T, ErrorRateAnnounced>) {
                return {{"kind", "error_rate"}, {"rate", p.rate}, {"errors", p.errors}, {"checked", p.checked}};
            } else if constexpr (std::is_same_v<T, AuthRevealed>) {
                Json bits = Json::array();
                for (auto b : p.bits) bits.push_back(to_string(b));
                return {{"kind", "auth_revealed"}, {"positions", p.positions}, {"bits", bits}};
            } else {
                return {{"kind", "aborted"}, {"reason", p.reason}};
            }
        },
        payload);
}

inline Json to_json(const Announcement &a, std::size_t index) {
    Json j{{"type", "announcement"}, {"index", index}, {"speaker", a.speaker}, {"phase", to_string(a.phase)}};
    j["payload"] = payload_to_json(a.payload);
    return j;
}

inline std::string bits_to_hex(const Bits &bits) {
    static constexpr char digits[] = "0123456789abcdef";
    std::string out;
    for (std::size_t i = 0; i < bits.size(); i += 4) {
        unsigned nibble = 0;
        for (std::size_t b = 0; b < 4; ++b) nibble = (nibble << 1) | (i + b < bits.size() ? bits[i + b] : 0u);
        out.push_back(digits[nibble]);
    }
    return out;
}

inline Json to_json(const SessionResult &r) {
    Json j{{"type", "result"},
           {"status", to_string(r.status)},
           {"transit_error_rate", r.transit_error_rate},
           {"transit_errors", r.transit_errors},
           {"transit_checked", r.transit_checked},
           {"auth_error_rate", r.auth_error_rate},
           {"auth_errors", r.auth_errors},
           {"auth_unchecked", r.auth_unchecked},
           {"recovered_bits", r.recovered_bits.size()},
           {"recovered_hex", bits_to_hex(r.recovered_bits)}};
    if (!r.abort_reason.empty()) j["abort_reason"] = r.abort_reason;
    return j;
}

/// Writes every announcement, then the result record.
inline void write_transcript_jsonl(std::ostream &out, const SessionResult &result) {
    const auto &entries = result.transcript.entries();
    for (std::size_t i = 0; i < entries.size(); ++i) out << to_json(entries[i], i).dump() << '\n';
    out << to_json(result).dump() << '\n';
}

} // namespace qss
