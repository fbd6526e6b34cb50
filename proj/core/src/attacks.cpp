#include "byzsgd/attacks.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "byzsgd/error.hpp"

namespace byzsgd {

std::string_view to_string(AttackKind kind) noexcept {
    switch (kind) {
    case AttackKind::None: return "none";
    case AttackKind::RandomVector: return "random_vector";
    case AttackKind::ReversedAmplified: return "reversed_amplified";
    case AttackKind::Omission: return "omission";
    case AttackKind::Delay: return "delay";
    }
    return "unknown";
}

std::optional<AttackKind> parse_attack_kind(std::string_view name) noexcept {
    for (auto kind : {AttackKind::None, AttackKind::RandomVector, AttackKind::ReversedAmplified, AttackKind::Omission,
                      AttackKind::Delay})
        if (to_string(kind) == name)
            return kind;
    return std::nullopt;
}

std::string_view to_string(AttackSurface surface) noexcept {
    switch (surface) {
    case AttackSurface::Gradients: return "gradients";
    case AttackSurface::Models: return "models";
    case AttackSurface::Both: return "both";
    }
    return "unknown";
}

std::optional<AttackSurface> parse_attack_surface(std::string_view name) noexcept {
    for (auto s : {AttackSurface::Gradients, AttackSurface::Models, AttackSurface::Both})
        if (to_string(s) == name)
            return s;
    return std::nullopt;
}

bool AttackSpec::targets_worker(std::size_t index) const noexcept {
    return std::find(worker_targets.begin(), worker_targets.end(), index) != worker_targets.end();
}

bool AttackSpec::targets_server(std::size_t index) const noexcept {
    return std::find(server_targets.begin(), server_targets.end(), index) != server_targets.end();
}

void AttackSpec::validate(std::size_t n_w, std::size_t f_w, std::size_t n_ps, std::size_t f_ps) const {
    auto check = [](const std::vector<std::size_t>& targets, std::size_t n, std::size_t f, const char* who) {
        std::vector<std::size_t> sorted = targets;
        std::sort(sorted.begin(), sorted.end());
        if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
            throw Error(Errc::InvalidConfig, std::string("duplicate ") + who + " attack target");
        if (!sorted.empty() && sorted.back() >= n)
            throw Error(Errc::InvalidConfig, std::string(who) + " attack target out of range");
        if (sorted.size() > f)
            throw Error(Errc::InvalidConfig, std::string("more ") + who + " attack targets (" +
                                                 std::to_string(sorted.size()) + ") than the declared f=" +
                                                 std::to_string(f));
    };
    check(worker_targets, n_w, f_w, "worker");
    check(server_targets, n_ps, f_ps, "server");
    if (kind == AttackKind::RandomVector && (!(sigma >= 0.0) || !std::isfinite(sigma)))
        throw Error(Errc::InvalidConfig, "random_vector attack requires a finite sigma >= 0");
    if (kind == AttackKind::ReversedAmplified && !std::isfinite(scale))
        throw Error(Errc::InvalidConfig, "reversed_amplified attack requires a finite scale");
    if (kind == AttackKind::Delay && (!(delay >= 0.0) || !std::isfinite(delay)))
        throw Error(Errc::InvalidConfig, "delay attack requires a finite delay >= 0");
}

ParamVector corrupt(const ParamVector& honest, const AttackSpec& spec, Rng& rng) {
    switch (spec.kind) {
    case AttackKind::None:
    case AttackKind::Delay:
        return honest;
    case AttackKind::ReversedAmplified:
        return honest * spec.scale;
    case AttackKind::RandomVector: {
        ParamVector out(honest.dim());
        for (double& x : out)
            x = spec.sigma * rng.normal();
        return out;
    }
    case AttackKind::Omission:
        break;
    }
    throw Error(Errc::InvalidArgument, "omission is applied by withholding messages, not by corrupting payloads");
}

} // namespace byzsgd
