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

// qss: command-line front end.
//
//   qss verify-tables
//   qss run --parties INT (--message-hex STR | --message-file PATH) --check-k INT --auth-j INT
//           --threshold FLOAT --adversary {none,intercept-resend,insider} [--variant]
//           --trials INT --seed INT --out PATH
//   qss error-rate --adversary {none,intercept-resend,insider} --pairs INT --seed INT
//           [--single-basis] [--four-op-set]
//
// Exit codes: 0 success, 1 verification failure, 2 configuration error.

#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "qss/experiment.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitVerifyFailed = 1;
constexpr int kExitConfig = 2;

const std::map<std::string, qss::AdversaryKind> kAdversaries{
    {"none", qss::AdversaryKind::none},
    {"intercept-resend", qss::AdversaryKind::intercept_resend},
    {"insider", qss::AdversaryKind::insider_fake_sequence},
};

struct RunOptions {
    int parties = 3;
    std::string message_hex;
    std::string message_file;
    std::size_t check_k = 64;
    std::size_t auth_j = 32;
    double threshold = 0.02;
    qss::AdversaryKind adversary = qss::AdversaryKind::none;
    bool variant = false;
    std::size_t trials = 1;
    std::uint64_t seed = 0;
    std::string out;
    std::optional<int> tap_hop;
    bool tap_second_leg = false;
    bool transcripts = false;
};

struct ErrorRateOptions {
    qss::AdversaryKind adversary = qss::AdversaryKind::none;
    std::size_t pairs = 100000;
    std::uint64_t seed = 0;
    bool single_basis = false;
    bool four_op_set = false;
};

int cmd_verify_tables() {
    const auto report = qss::verify_tables();
    qss::print_table_report(std::cout, report);
    return report.ok() ? kExitOk : kExitVerifyFailed;
}

qss::RunSpec build_run_spec(const RunOptions &o) {
    qss::RunSpec spec;
    spec.message = o.message_file.empty() ? qss::parse_hex_message(o.message_hex)
                                          : qss::read_message_file(o.message_file);
    spec.trials = o.trials;
    spec.include_transcripts = o.transcripts;
    spec.config.n_parties = o.parties;
    spec.config.message_pairs = spec.message.size() / 2;
    spec.config.check_pairs = o.check_k;
    spec.config.auth_pairs = o.auth_j;
    spec.config.error_threshold = o.threshold;
    spec.config.variant = o.variant;
    spec.config.seed = o.seed;
    switch (o.adversary) {
    case qss::AdversaryKind::none:
        break;
    case qss::AdversaryKind::intercept_resend: {
        std::vector<qss::Link> targets;
        if (o.tap_hop) targets.push_back({qss::Link::Leg::first, *o.tap_hop});
        if (o.tap_second_leg) targets.push_back({qss::Link::Leg::second, 0});
        spec.adversary = qss::AdversaryStrategy::intercept_resend(targets);
        break;
    }
    case qss::AdversaryKind::insider_fake_sequence:
        spec.adversary = qss::AdversaryStrategy::insider();
        break;
    }
    spec.validate();
    return spec;
}

int cmd_run(const RunOptions &o) {
    const auto spec = build_run_spec(o);
    const auto report = qss::run_experiment(spec);
    if (o.out.empty()) {
        qss::write_report_jsonl(std::cout, spec, report);
    } else {
        std::ofstream out(o.out, std::ios::binary);
        if (!out) throw std::runtime_error("cannot open output file: " + o.out);
        qss::write_report_jsonl(out, spec, report);
        if (!out) throw std::runtime_error("failed writing output file: " + o.out);
    }
    std::cerr << report.trials.size() << " trials, " << report.completed << " completed, detection rate "
              << report.detection_rate << ", " << report.wall_seconds << " s\n";
    return kExitOk;
}

int cmd_error_rate(const ErrorRateOptions &o) {
    qss::ErrorRateSpec spec;
    spec.adversary = o.adversary;
    spec.pairs = o.pairs;
    spec.seed = o.seed;
    spec.single_basis = o.single_basis;
    spec.four_op_set = o.four_op_set;
    std::cout << qss::to_json(qss::estimate_error_rate(spec)).dump() << '\n';
    return kExitOk;
}

} // namespace

int main(int argc, char **argv) {
    CLI::App app{"Multiparty quantum secret sharing of direct communication: exact protocol simulator"};
    app.require_subcommand(1);

    app.add_subcommand("verify-tables", "Check the op/state transform tables against the amplitude engine");

    RunOptions run;
    auto *run_cmd = app.add_subcommand("run", "Run protocol sessions and write JSON-lines records");
    run_cmd->add_option("--parties", run.parties, "Number of parties including the sender")->check(CLI::Range(3, 64));
    auto *hex = run_cmd->add_option("--message-hex", run.message_hex, "Message as hex digits");
    auto *file = run_cmd->add_option("--message-file", run.message_file, "Message as a raw binary file");
    hex->excludes(file);
    run_cmd->add_option("--check-k", run.check_k, "Checking pairs for the transit check");
    run_cmd->add_option("--auth-j", run.auth_j, "Checking pairs for message authentication");
    run_cmd->add_option("--threshold", run.threshold, "Abort threshold on error rates")->check(CLI::Range(0.0, 1.0));
    run_cmd->add_option("--adversary", run.adversary, "Adversary strategy")
        ->transform(CLI::CheckedTransformer(kAdversaries, CLI::ignore_case));
    run_cmd->add_flag("--variant", run.variant, "Use the reversed-direction protocol");
    run_cmd->add_option("--trials", run.trials, "Independent sessions")->check(CLI::PositiveNumber);
    run_cmd->add_option("--seed", run.seed, "Master seed");
    run_cmd->add_option("--out", run.out, "Output path (stdout when omitted)");
    run_cmd->add_option("--tap-hop", run.tap_hop, "Intercept-resend on this first-leg hop");
    run_cmd->add_flag("--tap-second-leg", run.tap_second_leg, "Intercept-resend on the delivery link");
    run_cmd->add_flag("--transcripts", run.transcripts, "Include every announcement in the output");

    ErrorRateOptions er;
    auto *er_cmd = app.add_subcommand("error-rate", "Estimate the per-checking-pair error rate");
    er_cmd->add_option("--adversary", er.adversary, "Adversary strategy")
        ->transform(CLI::CheckedTransformer(kAdversaries, CLI::ignore_case));
    er_cmd->add_option("--pairs", er.pairs, "Checking pairs to simulate")->check(CLI::PositiveNumber);
    er_cmd->add_option("--seed", er.seed, "Seed");
    er_cmd->add_flag("--single-basis", er.single_basis, "Check in the diagonal basis only");
    er_cmd->add_flag("--four-op-set", er.four_op_set, "Restrict sharer ops to U1..U4");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp &e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp &e) {
        return app.exit(e);
    } catch (const CLI::ParseError &e) {
        app.exit(e);
        return kExitConfig;
    }

    try {
        if (app.got_subcommand("verify-tables")) return cmd_verify_tables();
        if (app.got_subcommand("run")) {
            if (run.message_hex.empty() && run.message_file.empty()) {
                std::cerr << "error: one of --message-hex or --message-file is required\n";
                return kExitConfig;
            }
            return cmd_run(run);
        }
        return cmd_error_rate(er);
    } catch (const qss::ConfigError &e) {
        std::cerr << "configuration error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const std::exception &e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitConfig;
    }
}
