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

// Experiment harness behind the qss command line: table verification,
// multi-trial session runs, and per-pair error-rate estimates.

#include <algorithm>
#include <cctype>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iterator>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "qss/io.hpp"
#include "qss/protocol.hpp"

namespace qss {

// ---------------------------------------------------------------------------
// Table verification

struct TableCell {
    LocalOp op = LocalOp::u1;
    CanonicalState input;
    CanonicalState expected;
    std::optional<CanonicalState> computed;
    bool pass = false;
};

struct TableReport {
    std::vector<TableCell> cells;

    std::size_t passed() const {
        return static_cast<std::size_t>(std::count_if(cells.begin(), cells.end(), [](const auto &c) { return c.pass; }));
    }
    bool ok() const { return passed() == cells.size(); }
};

/// Checks every cell of `table` against the amplitude-level engine.
inline TableReport verify_tables(const TransformTable &table = kTransformTable) {
    TableReport report;
    for (auto op : kFiveOpSet) {
        for (std::size_t i = 0; i < 8; ++i) {
            TableCell cell;
            cell.op = op;
            cell.input = CanonicalState::from_index(i);
            cell.expected = table_transform(op, cell.input, table);
            cell.computed = classify(apply_local(op, QubitSlot::y, to_state(cell.input)));
            cell.pass = cell.computed && *cell.computed == cell.expected;
            report.cells.push_back(cell);
        }
    }
    return report;
}

inline void print_table_report(std::ostream &out, const TableReport &report) {
    out << std::left << std::setw(6) << "op";
    for (std::size_t i = 0; i < 8; ++i) out << std::setw(7) << to_string(CanonicalState::from_index(i));
    out << '\n';
    for (std::size_t row = 0; row < 5; ++row) {
        out << std::setw(6) << to_string(kFiveOpSet[row]);
        for (std::size_t col = 0; col < 8; ++col) out << std::setw(7) << (report.cells[row * 8 + col].pass ? "ok" : "FAIL");
        out << '\n';
    }
    out << '\n';
    for (const auto &c : report.cells) {
        out << to_string(c.op) << " on " << std::setw(5) << to_string(c.input) << " expected " << std::setw(6)
            << to_string(c.expected) << " computed " << std::setw(6)
            << (c.computed ? to_string(*c.computed) : std::string("none")) << (c.pass ? " pass" : " FAIL") << '\n';
    }
    out << report.passed() << "/" << report.cells.size() << " cells match\n";
}

// ---------------------------------------------------------------------------
// Statistics

struct Interval {
    double low = 0;
    double high = 0;
};

/// Wilson score interval for a binomial proportion.
inline Interval wilson_interval(std::size_t successes, std::size_t trials, double z = 1.96) {
    if (trials == 0) return {0, 1};
    const double n = double(trials);
    const double p = double(successes) / n;
    const double denom = 1 + z * z / n;
    const double centre = (p + z * z / (2 * n)) / denom;
    const double half = z * std::sqrt(p * (1 - p) / n + z * z / (4 * n * n)) / denom;
    return {std::max(0.0, centre - half), std::min(1.0, centre + half)};
}

/// Counter-based split of a master seed into per-trial seeds.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t trial) { return make_stream(master, trial)(); }

// ---------------------------------------------------------------------------
// Message sources

inline Bits parse_hex_message(std::string hex) {
    if (hex.rfind("0x", 0) == 0 || hex.rfind("0X", 0) == 0) hex = hex.substr(2);
    Bits bits;
    for (char ch : hex) {
        if (!std::isxdigit(static_cast<unsigned char>(ch))) throw ConfigError("invalid hex digit in message: " + std::string(1, ch));
        const int v = std::stoi(std::string(1, ch), nullptr, 16);
        for (int b = 3; b >= 0; --b) bits.push_back(static_cast<std::uint8_t>((v >> b) & 1));
    }
    return bits;
}

inline Bits read_message_file(const std::filesystem::path &path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read message file: " + path.string());
    Bits bits;
    for (auto it = std::istreambuf_iterator<char>(in); it != std::istreambuf_iterator<char>(); ++it) {
        const auto byte = static_cast<unsigned char>(*it);
        for (int b = 7; b >= 0; --b) bits.push_back(static_cast<std::uint8_t>((byte >> b) & 1));
    }
    return bits;
}

// ---------------------------------------------------------------------------
// Multi-trial runs

struct RunSpec {
    ProtocolConfig config;
    AdversaryStrategy adversary;
    std::size_t trials = 1;
    Bits message;
    /// Emit every trial's announcements ahead of its summary record.
    bool include_transcripts = false;

    void validate() const {
        if (trials < 1) throw ConfigError("trials must be at least 1");
        if (message.empty() || message.size() % 2 != 0) throw ConfigError("message must decode to a non-empty even bit count");
        ProtocolConfig c = config;
        c.message_pairs = message.size() / 2;
        c.validate();
    }
};

struct TrialSummary {
    std::size_t trial = 0;
    std::uint64_t seed = 0;
    SessionResult result;
    bool message_match = false;
};

struct ExperimentReport {
    std::uint64_t seed = 0;
    std::vector<TrialSummary> trials;
    std::size_t completed = 0;
    std::size_t aborted_transit = 0;
    std::size_t aborted_auth = 0;
    double detection_rate = 0;
    Interval detection_ci;
    double mean_transit_error_rate = 0;
    double mean_auth_error_rate = 0;
    double wall_seconds = 0;
};

inline ExperimentReport run_experiment(const RunSpec &spec) {
    spec.validate();
    const auto start = std::chrono::steady_clock::now();
    ExperimentReport report;
    report.seed = spec.config.seed;
    for (std::size_t t = 0; t < spec.trials; ++t) {
        ProtocolConfig config = spec.config;
        config.message_pairs = spec.message.size() / 2;
        config.seed = derive_seed(spec.config.seed, t);
        TrialSummary summary;
        summary.trial = t;
        summary.seed = config.seed;
        summary.result = config.variant ? run_variant_session(config, spec.message, spec.adversary)
                                        : run_session(config, spec.message, spec.adversary);
        summary.message_match = summary.result.recovered_bits == spec.message;
        switch (summary.result.status) {
        case SessionStatus::completed:
            ++report.completed;
            break;
        case SessionStatus::aborted_transit_check:
            ++report.aborted_transit;
            break;
        case SessionStatus::aborted_authentication:
            ++report.aborted_auth;
            break;
        }
        report.mean_transit_error_rate += summary.result.transit_error_rate;
        report.mean_auth_error_rate += summary.result.auth_error_rate;
        report.trials.push_back(std::move(summary));
    }
    const double n = double(spec.trials);
    const std::size_t detected = report.aborted_transit + report.aborted_auth;
    report.detection_rate = double(detected) / n;
    report.detection_ci = wilson_interval(detected, spec.trials);
    report.mean_transit_error_rate /= n;
    report.mean_auth_error_rate /= n;
    report.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return report;
}

inline Json trial_to_json(const TrialSummary &t) {
    const auto &r = t.result;
    Json j{{"type", "trial"},
           {"trial", t.trial},
           {"seed", t.seed},
           {"status", to_string(r.status)},
           {"transit_error_rate", r.transit_error_rate},
           {"transit_errors", r.transit_errors},
           {"transit_checked", r.transit_checked},
           {"auth_error_rate", r.auth_error_rate},
           {"auth_errors", r.auth_errors},
           {"auth_unchecked", r.auth_unchecked},
           {"recovered_hex", bits_to_hex(r.recovered_bits)},
           {"message_match", t.message_match}};
    return j;
}

inline Json aggregate_to_json(const RunSpec &spec, const ExperimentReport &report) {
    return Json{{"type", "aggregate"},
                {"seed", report.seed},
                {"parties", spec.config.n_parties},
                {"variant", spec.config.variant},
                {"adversary", to_string(spec.adversary.kind)},
                {"message_bits", spec.message.size()},
                {"check_k", spec.config.check_pairs},
                {"auth_j", spec.config.auth_pairs},
                {"threshold", spec.config.error_threshold},
                {"trials", report.trials.size()},
                {"completed", report.completed},
                {"aborted_transit_check", report.aborted_transit},
                {"aborted_authentication", report.aborted_auth},
                {"detection_rate", report.detection_rate},
                {"detection_ci_low", report.detection_ci.low},
                {"detection_ci_high", report.detection_ci.high},
                {"mean_transit_error_rate", report.mean_transit_error_rate},
                {"mean_auth_error_rate", report.mean_auth_error_rate}};
}

/// Output is a pure function of the RunSpec; wall-clock time is not written here.
inline void write_report_jsonl(std::ostream &out, const RunSpec &spec, const ExperimentReport &report) {
    for (const auto &t : report.trials) {
        if (spec.include_transcripts) {
            const auto &entries = t.result.transcript.entries();
            for (std::size_t i = 0; i < entries.size(); ++i) {
                auto j = to_json(entries[i], i);
                j["trial"] = t.trial;
                out << j.dump() << '\n';
            }
        }
        out << trial_to_json(t).dump() << '\n';
    }
    out << aggregate_to_json(spec, report).dump() << '\n';
}

// ---------------------------------------------------------------------------
// Per-pair error-rate estimate

struct ErrorRateSpec {
    AdversaryKind adversary = AdversaryKind::none;
    std::size_t pairs = 1;
    std::uint64_t seed = 0;
    bool single_basis = false;
    bool four_op_set = false;
    int parties = 3;
};

struct ErrorRateEstimate {
    ErrorRateSpec spec;
    std::size_t checked = 0;
    std::size_t errors = 0;
    double rate = 0;
    Interval ci;
};

/// Runs one three-party session whose first leg carries `pairs` checking
/// pairs (plus a single message pair) and reports the checking statistics.
inline ErrorRateEstimate estimate_error_rate(const ErrorRateSpec &spec) {
    if (spec.pairs < 1) throw ConfigError("pairs must be at least 1");
    ProtocolConfig config;
    config.n_parties = spec.parties;
    config.message_pairs = 1;
    config.check_pairs = spec.pairs;
    config.auth_pairs = 0;
    config.seed = spec.seed;
    config.single_basis = spec.single_basis;
    config.four_op_set = spec.four_op_set;
    AdversaryStrategy adversary;
    switch (spec.adversary) {
    case AdversaryKind::none:
        break;
    case AdversaryKind::intercept_resend:
        adversary = AdversaryStrategy::intercept_resend();
        break;
    case AdversaryKind::insider_fake_sequence:
        adversary = AdversaryStrategy::insider();
        break;
    }
    const auto check = run_checking_only(config, Bits{0, 0}, adversary);
    ErrorRateEstimate out;
    out.spec = spec;
    out.checked = check.checked;
    out.errors = check.errors;
    out.rate = check.error_rate;
    out.ci = wilson_interval(check.errors, check.checked);
    return out;
}

inline Json to_json(const ErrorRateEstimate &e) {
    return Json{{"type", "error_rate"},
                {"adversary", to_string(e.spec.adversary)},
                {"parties", e.spec.parties},
                {"pairs", e.checked},
                {"errors", e.errors},
                {"rate", e.rate},
                {"ci_low", e.ci.low},
                {"ci_high", e.ci.high},
                {"seed", e.spec.seed},
                {"single_basis", e.spec.single_basis},
                {"four_op_set", e.spec.four_op_set}};
}

} // namespace qss
