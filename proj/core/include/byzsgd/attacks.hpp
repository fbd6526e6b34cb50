#pragma once

#include <cstddef>
#include <optional>
#include <string_view>
#include <vector>

#include "byzsgd/param_vector.hpp"
#include "byzsgd/rng.hpp"

namespace byzsgd {

enum class AttackKind { None, RandomVector, ReversedAmplified, Omission, Delay };
enum class AttackSurface { Gradients, Models, Both };

std::string_view to_string(AttackKind kind) noexcept;
std::optional<AttackKind> parse_attack_kind(std::string_view name) noexcept;
std::string_view to_string(AttackSurface surface) noexcept;
std::optional<AttackSurface> parse_attack_surface(std::string_view name) noexcept;

/// Behaviour of the Byzantine nodes. Targets are the Byzantine nodes; they
/// run the protocol honestly and rewrite (or withhold, or delay) what they send.
struct AttackSpec {
    AttackKind kind = AttackKind::None;
    /// ReversedAmplified factor.
    double scale = -100.0;
    /// RandomVector standard deviation.
    double sigma = 1.0;
    /// Extra simulated seconds added to every message of a Delay attacker.
    double delay = 0.0;
    std::vector<std::size_t> worker_targets;
    std::vector<std::size_t> server_targets;
    AttackSurface applies_to = AttackSurface::Both;

    bool targets_worker(std::size_t index) const noexcept;
    bool targets_server(std::size_t index) const noexcept;
    bool hits_gradients() const noexcept { return applies_to != AttackSurface::Models; }
    bool hits_models() const noexcept { return applies_to != AttackSurface::Gradients; }

    /// Targets must be distinct, in range, and within the declared f bounds.
    void validate(std::size_t n_w, std::size_t f_w, std::size_t n_ps, std::size_t f_ps) const;
};

/// Rewrites an honest payload. Omission is not a payload transformation and
/// is rejected; Delay and None leave the payload untouched.
ParamVector corrupt(const ParamVector& honest, const AttackSpec& spec, Rng& rng);

} // namespace byzsgd
