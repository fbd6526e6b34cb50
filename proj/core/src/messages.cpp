#include "byzsgd/messages.hpp"

namespace byzsgd {

std::string to_string(NodeId id) {
    return (id.role == Role::Worker ? "w" : "s") + std::to_string(id.index);
}

std::optional<NodeId> parse_node_id(std::string_view text) noexcept {
    if (text.size() < 2 || (text[0] != 'w' && text[0] != 's'))
        return std::nullopt;
    std::uint64_t value = 0;
    for (char c : text.substr(1)) {
        if (c < '0' || c > '9')
            return std::nullopt;
        value = value * 10 + static_cast<std::uint64_t>(c - '0');
        if (value > 0xFFFFFFFFu)
            return std::nullopt;
    }
    return NodeId{text[0] == 'w' ? Role::Worker : Role::Server, static_cast<std::uint32_t>(value)};
}

std::string_view to_string(MessageKind kind) noexcept {
    switch (kind) {
    case MessageKind::ModelBroadcast: return "model_broadcast";
    case MessageKind::GradientSubmit: return "gradient_submit";
    case MessageKind::ModelExchange: return "model_exchange";
    case MessageKind::PrimaryAnnounce: return "primary_announce";
    case MessageKind::Timeout: return "timeout";
    }
    return "unknown";
}

} // namespace byzsgd
