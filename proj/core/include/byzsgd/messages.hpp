#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

#include "byzsgd/param_vector.hpp"

namespace byzsgd {

enum class Role : std::uint8_t { Worker, Server };

struct NodeId {
    Role role = Role::Worker;
    std::uint32_t index = 0;

    static NodeId worker(std::uint32_t i) noexcept { return {Role::Worker, i}; }
    static NodeId server(std::uint32_t i) noexcept { return {Role::Server, i}; }

    friend auto operator<=>(const NodeId&, const NodeId&) = default;
};

/// "w3" / "s1".
std::string to_string(NodeId id);
std::optional<NodeId> parse_node_id(std::string_view text) noexcept;

enum class MessageKind : std::uint8_t {
    ModelBroadcast,
    GradientSubmit,
    ModelExchange,
    PrimaryAnnounce,
    /// Self-addressed timer used by the crash-failover detector.
    Timeout,
};

std::string_view to_string(MessageKind kind) noexcept;

struct ProtocolMessage {
    MessageKind kind = MessageKind::ModelBroadcast;
    std::size_t step = 0;
    NodeId sender{};
    ParamVector payload;
};

} // namespace byzsgd
