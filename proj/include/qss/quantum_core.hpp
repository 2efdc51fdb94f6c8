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

/// Exact two-photon state algebra: Bell and rotation states, the five local
/// encryption unitaries, projective measurements, and the symbolic transform
/// table that the protocols use in place of amplitude arithmetic.
///
/// Amplitudes are ordered |00>, |01>, |10>, |11> with the X photon in the
/// high (first) slot and the Y photon in the low (second) slot.

#include <array>
#include <cmath>
#include <complex>
#include <concepts>
#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <utility>

namespace qss {

using Amplitude = std::complex<double>;
using RandomStream = std::mt19937_64;

inline constexpr double kInvSqrt2 = 0.70710678118654752440;
inline constexpr double kClassifyTolerance = 1e-9;
inline constexpr double kIdentityTolerance = 1e-12;

/// Seeds an independent stream from a master seed and a stream index.
inline RandomStream make_stream(std::uint64_t seed, std::uint64_t stream = 0) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
    return RandomStream(seq);
}

enum class BellLabel : std::uint8_t { phi_plus, phi_minus, psi_plus, psi_minus };
enum class RotationLabel : std::uint8_t { xi, eta, chi, zeta };
enum class Family : std::uint8_t { bell, rotation };
enum class LocalOp : std::uint8_t { u1, u2, u3, u4, h };
enum class MeasBasis : std::uint8_t { diagonal, rectilinear };
enum class QubitSlot : std::uint8_t { x, y };

inline constexpr std::array<BellLabel, 4> kBellLabels{BellLabel::phi_plus, BellLabel::phi_minus,
                                                      BellLabel::psi_plus, BellLabel::psi_minus};
inline constexpr std::array<RotationLabel, 4> kRotationLabels{RotationLabel::xi, RotationLabel::eta,
                                                              RotationLabel::chi, RotationLabel::zeta};
inline constexpr std::array<LocalOp, 5> kFiveOpSet{LocalOp::u1, LocalOp::u2, LocalOp::u3, LocalOp::u4,
                                                   LocalOp::h};
inline constexpr std::array<LocalOp, 4> kFourOpSet{LocalOp::u1, LocalOp::u2, LocalOp::u3, LocalOp::u4};

constexpr MeasBasis other_basis(MeasBasis b) {
    return b == MeasBasis::diagonal ? MeasBasis::rectilinear : MeasBasis::diagonal;
}

inline std::string to_string(BellLabel l) {
    static constexpr std::array<const char *, 4> names{"phi+", "phi-", "psi+", "psi-"};
    return names[static_cast<std::size_t>(l)];
}
inline std::string to_string(RotationLabel l) {
    static constexpr std::array<const char *, 4> names{"xi", "eta", "chi", "zeta"};
    return names[static_cast<std::size_t>(l)];
}
inline std::string to_string(LocalOp op) {
    static constexpr std::array<const char *, 5> names{"U1", "U2", "U3", "U4", "H"};
    return names[static_cast<std::size_t>(op)];
}
inline std::string to_string(MeasBasis b) { return b == MeasBasis::diagonal ? "diagonal" : "rectilinear"; }
inline std::string to_string(QubitSlot s) { return s == QubitSlot::x ? "X" : "Y"; }

/// A normalized two-photon pure state.
class TwoQubitState {
  public:
    using Amplitudes = std::array<Amplitude, 4>;

    constexpr TwoQubitState() : amps_{Amplitude{1.0}, {}, {}, {}} {}
    constexpr explicit TwoQubitState(const Amplitudes &amps) : amps_(amps) {}

    constexpr const Amplitude &operator[](std::size_t i) const { return amps_[i]; }
    constexpr Amplitude &operator[](std::size_t i) { return amps_[i]; }
    constexpr const Amplitudes &amplitudes() const { return amps_; }

    double norm_squared() const {
        double total = 0;
        for (const auto &a : amps_) total += std::norm(a);
        return total;
    }

    TwoQubitState operator-() const {
        return TwoQubitState({-amps_[0], -amps_[1], -amps_[2], -amps_[3]});
    }

    /// Largest componentwise amplitude difference.
    double max_distance(const TwoQubitState &other) const {
        double d = 0;
        for (std::size_t i = 0; i < 4; ++i) d = std::max(d, std::abs(amps_[i] - other.amps_[i]));
        return d;
    }

  private:
    Amplitudes amps_;
};

inline Amplitude inner_product(const TwoQubitState &a, const TwoQubitState &b) {
    Amplitude acc{};
    for (std::size_t i = 0; i < 4; ++i) acc += std::conj(a[i]) * b[i];
    return acc;
}

/// One of the eight canonical states (four Bell, four rotation) with a global sign.
struct CanonicalState {
    Family family = Family::bell;
    std::uint8_t label = 0;
    int sign = 1;

    static constexpr CanonicalState bell(BellLabel l, int sign = 1) {
        return {Family::bell, static_cast<std::uint8_t>(l), sign};
    }
    static constexpr CanonicalState rotation(RotationLabel l, int sign = 1) {
        return {Family::rotation, static_cast<std::uint8_t>(l), sign};
    }

    constexpr bool is_bell() const { return family == Family::bell; }
    constexpr BellLabel bell_label() const { return static_cast<BellLabel>(label); }
    constexpr RotationLabel rotation_label() const { return static_cast<RotationLabel>(label); }
    constexpr CanonicalState with_sign(int s) const { return {family, label, s}; }
    /// Column index 0..7 in the transform table: Bell states first.
    constexpr std::size_t index() const { return (family == Family::bell ? 0 : 4) + label; }

    static constexpr CanonicalState from_index(std::size_t i, int sign = 1) {
        return {i < 4 ? Family::bell : Family::rotation, static_cast<std::uint8_t>(i % 4), sign};
    }

    friend constexpr bool operator==(const CanonicalState &, const CanonicalState &) = default;
};

inline std::string to_string(const CanonicalState &c) {
    std::string name = c.is_bell() ? to_string(c.bell_label()) : to_string(c.rotation_label());
    return c.sign < 0 ? "-" + name : name;
}

inline TwoQubitState bell_state(BellLabel label) {
    const double s = kInvSqrt2;
    switch (label) {
    case BellLabel::phi_plus:
        return TwoQubitState({s, 0, 0, s});
    case BellLabel::phi_minus:
        return TwoQubitState({s, 0, 0, -s});
    case BellLabel::psi_plus:
        return TwoQubitState({0, s, s, 0});
    case BellLabel::psi_minus:
        return TwoQubitState({0, -s, s, 0});
    }
    return {};
}

/// The two Bell states a rotation state is an equal-weight combination of,
/// with the relative sign of the second component.
struct BellPairing {
    BellLabel first;
    BellLabel second;
    int second_sign;
};

constexpr BellPairing rotation_components(RotationLabel label) {
    switch (label) {
    case RotationLabel::xi:
        return {BellLabel::phi_minus, BellLabel::psi_plus, +1};
    case RotationLabel::eta:
        return {BellLabel::phi_plus, BellLabel::psi_minus, -1};
    case RotationLabel::chi:
        return {BellLabel::psi_minus, BellLabel::phi_plus, +1};
    case RotationLabel::zeta:
        return {BellLabel::psi_plus, BellLabel::phi_minus, -1};
    }
    return {BellLabel::phi_plus, BellLabel::phi_plus, 1};
}

/// Built from the defining Bell combination rather than a product-basis expansion.
inline TwoQubitState rotation_state(RotationLabel label) {
    const auto parts = rotation_components(label);
    const auto a = bell_state(parts.first);
    const auto b = bell_state(parts.second);
    TwoQubitState::Amplitudes out{};
    for (std::size_t i = 0; i < 4; ++i) out[i] = (a[i] + double(parts.second_sign) * b[i]) * kInvSqrt2;
    return TwoQubitState(out);
}

inline TwoQubitState to_state(const CanonicalState &c) {
    auto s = c.is_bell() ? bell_state(c.bell_label()) : rotation_state(c.rotation_label());
    return c.sign < 0 ? -s : s;
}

using Matrix2 = std::array<std::array<Amplitude, 2>, 2>;

inline Matrix2 op_matrix(LocalOp op) {
    const double s = kInvSqrt2;
    switch (op) {
    case LocalOp::u1:
        return {{{1, 0}, {0, 1}}};
    case LocalOp::u2:
        return {{{1, 0}, {0, -1}}};
    case LocalOp::u3:
        return {{{0, 1}, {1, 0}}};
    case LocalOp::u4:
        return {{{0, 1}, {-1, 0}}};
    case LocalOp::h:
        return {{{s, s}, {s, -s}}};
    }
    return {};
}

inline Matrix2 adjoint(const Matrix2 &m) {
    return {{{std::conj(m[0][0]), std::conj(m[1][0])}, {std::conj(m[0][1]), std::conj(m[1][1])}}};
}

/// Applies a single-photon matrix to one slot of the pair.
inline TwoQubitState apply_matrix(const Matrix2 &m, QubitSlot slot, const TwoQubitState &state) {
    TwoQubitState out = state;
    for (std::size_t other = 0; other < 2; ++other) {
        // Indices of the two amplitudes that differ only in the target slot.
        const std::size_t i0 = slot == QubitSlot::y ? 2 * other : other;
        const std::size_t i1 = slot == QubitSlot::y ? 2 * other + 1 : other + 2;
        out[i0] = m[0][0] * state[i0] + m[0][1] * state[i1];
        out[i1] = m[1][0] * state[i0] + m[1][1] * state[i1];
    }
    return out;
}

inline TwoQubitState apply_local(LocalOp op, QubitSlot slot, const TwoQubitState &state) {
    return apply_matrix(op_matrix(op), slot, state);
}

inline TwoQubitState apply_local_adjoint(LocalOp op, QubitSlot slot, const TwoQubitState &state) {
    return apply_matrix(adjoint(op_matrix(op)), slot, state);
}

/// Exact-sign match against the eight canonical states.
inline std::optional<CanonicalState> classify(const TwoQubitState &state) {
    for (std::size_t i = 0; i < 8; ++i) {
        for (int sign : {1, -1}) {
            const auto candidate = CanonicalState::from_index(i, sign);
            if (state.max_distance(to_state(candidate)) < kClassifyTolerance) return candidate;
        }
    }
    return std::nullopt;
}

inline bool states_equal_up_to_phase(const TwoQubitState &a, const TwoQubitState &b) {
    return std::abs(inner_product(a, b)) > 1.0 - kClassifyTolerance;
}

// Symbolic transform table. Rows are indexed by LocalOp, columns by
// CanonicalState::index(); each cell is the image of the unsigned column state
// under the op acting on the Y photon.
using TransformTable = std::array<std::array<CanonicalState, 8>, 5>;

namespace detail {
constexpr CanonicalState B(BellLabel l, int s = 1) { return CanonicalState::bell(l, s); }
constexpr CanonicalState R(RotationLabel l, int s = 1) { return CanonicalState::rotation(l, s); }
using BL = BellLabel;
using RL = RotationLabel;
} // namespace detail

inline constexpr TransformTable kTransformTable = [] {
    using namespace detail;
    return TransformTable{{
        // U1
        {B(BL::phi_plus), B(BL::phi_minus), B(BL::psi_plus), B(BL::psi_minus), R(RL::xi), R(RL::eta),
         R(RL::chi), R(RL::zeta)},
        // U2
        {B(BL::phi_minus), B(BL::phi_plus), B(BL::psi_minus), B(BL::psi_plus), R(RL::chi), R(RL::zeta, -1),
         R(RL::xi), R(RL::eta, -1)},
        // U3
        {B(BL::psi_plus), B(BL::psi_minus, -1), B(BL::phi_plus), B(BL::phi_minus, -1), R(RL::eta), R(RL::xi),
         R(RL::zeta), R(RL::chi)},
        // U4
        {B(BL::psi_minus), B(BL::psi_plus, -1), B(BL::phi_minus), B(BL::phi_plus, -1), R(RL::zeta, -1),
         R(RL::chi), R(RL::eta, -1), R(RL::xi)},
        // H
        {R(RL::xi), R(RL::eta), R(RL::chi), R(RL::zeta), B(BL::phi_plus), B(BL::phi_minus), B(BL::psi_plus),
         B(BL::psi_minus)},
    }};
}();

inline CanonicalState table_transform(LocalOp op, const CanonicalState &input,
                                      const TransformTable &table = kTransformTable) {
    const auto &cell = table[static_cast<std::size_t>(op)][input.index()];
    return cell.with_sign(cell.sign * input.sign);
}

/// Folds a sequence of Y-photon ops (in application order) over a canonical state.
inline CanonicalState compose_transforms(CanonicalState state, std::span<const LocalOp> ops,
                                         const TransformTable &table = kTransformTable) {
    for (auto op : ops) state = table_transform(op, state, table);
    return state;
}

// ---------------------------------------------------------------------------
// Measurement

inline std::array<double, 4> bell_probabilities(const TwoQubitState &state) {
    std::array<double, 4> p{};
    for (std::size_t i = 0; i < 4; ++i) p[i] = std::norm(inner_product(bell_state(kBellLabels[i]), state));
    return p;
}

inline std::array<Amplitude, 2> basis_vector(MeasBasis basis, int outcome) {
    if (basis == MeasBasis::diagonal) return outcome == 0 ? std::array<Amplitude, 2>{1, 0} : std::array<Amplitude, 2>{0, 1};
    return outcome == 0 ? std::array<Amplitude, 2>{kInvSqrt2, kInvSqrt2}
                        : std::array<Amplitude, 2>{kInvSqrt2, -kInvSqrt2};
}

/// Unnormalized post-measurement state for `outcome` on `slot` in `basis`.
inline TwoQubitState project(const TwoQubitState &state, QubitSlot slot, MeasBasis basis, int outcome) {
    const auto v = basis_vector(basis, outcome);
    Matrix2 proj{};
    for (std::size_t r = 0; r < 2; ++r)
        for (std::size_t c = 0; c < 2; ++c) proj[r][c] = v[r] * std::conj(v[c]);
    return apply_matrix(proj, slot, state);
}

inline std::array<double, 2> single_probabilities(const TwoQubitState &state, QubitSlot slot, MeasBasis basis) {
    return {project(state, slot, basis, 0).norm_squared(), project(state, slot, basis, 1).norm_squared()};
}

template <std::uniform_random_bit_generator Rng>
std::pair<BellLabel, TwoQubitState> bell_measure(const TwoQubitState &state, Rng &rng) {
    const auto p = bell_probabilities(state);
    double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
    std::size_t pick = 3;
    for (std::size_t i = 0; i < 4; ++i) {
        if (p[i] <= 0.0) continue;
        if (u < p[i]) {
            pick = i;
            break;
        }
        u -= p[i];
        pick = i;
    }
    return {kBellLabels[pick], bell_state(kBellLabels[pick])};
}

template <std::uniform_random_bit_generator Rng>
std::pair<int, TwoQubitState> measure_single(const TwoQubitState &state, QubitSlot slot, MeasBasis basis,
                                             Rng &rng) {
    const double p0 = project(state, slot, basis, 0).norm_squared();
    const double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
    const int outcome = u < p0 ? 0 : 1;
    auto collapsed = project(state, slot, basis, outcome);
    const double norm = std::sqrt(collapsed.norm_squared());
    TwoQubitState::Amplitudes amps = collapsed.amplitudes();
    for (auto &a : amps) a /= norm;
    return {outcome, TwoQubitState(amps)};
}

/// Outcome the partner photon must give in `partner_basis` once `measured_slot`
/// has yielded `outcome` in `basis`, or empty when it is not deterministic.
inline std::optional<int> correlated_outcome(const TwoQubitState &state, QubitSlot measured_slot, MeasBasis basis,
                                             int outcome, MeasBasis partner_basis) {
    const auto collapsed = project(state, measured_slot, basis, outcome);
    const double weight = collapsed.norm_squared();
    if (weight < kClassifyTolerance) return std::nullopt;
    const auto partner = measured_slot == QubitSlot::y ? QubitSlot::x : QubitSlot::y;
    const double p0 = project(collapsed, partner, partner_basis, 0).norm_squared() / weight;
    if (p0 > 1.0 - kClassifyTolerance) return 0;
    if (p0 < kClassifyTolerance) return 1;
    return std::nullopt;
}

} // namespace qss
