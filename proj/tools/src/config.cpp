#include "byzsgd_cli/config.hpp"

#include <fstream>
#include <initializer_list>
#include <stdexcept>
#include <type_traits>
#include <sstream>
#include <string_view>

namespace byzsgd::cli {

using nlohmann::json;

namespace {

[[noreturn]] void parse_fail(const std::string& what) { throw Error(Errc::ParseError, what); }

void require_object(const json& j, const std::string& where) {
    if (!j.is_object())
        parse_fail(where + " must be an object");
}

void reject_unknown(const json& j, const std::string& where, std::initializer_list<std::string_view> allowed) {
    require_object(j, where);
    for (const auto& [key, value] : j.items()) {
        bool known = false;
        for (auto a : allowed)
            known = known || key == a;
        if (!known)
            parse_fail("unknown key '" + key + "' in " + where);
    }
}

template <class T>
void read(const json& j, const char* key, T& target, const std::string& where) {
    const auto it = j.find(key);
    if (it == j.end())
        return;
    try {
        if constexpr (std::is_same_v<T, bool>) {
            if (!it->is_boolean())
                parse_fail(where + "." + key + " must be true or false");
        } else if constexpr (std::is_unsigned_v<T>) {
            if (!it->is_number_unsigned())
                parse_fail(where + "." + key + " must be a non-negative integer");
        } else if constexpr (std::is_floating_point_v<T>) {
            if (!it->is_number())
                parse_fail(where + "." + key + " must be a number");
        }
        target = it->get<T>();
    } catch (const json::exception& e) {
        parse_fail(where + "." + key + ": " + e.what());
    }
}

std::string read_name(const json& j, const char* key, const std::string& where) {
    const auto& v = j.at(key);
    if (!v.is_string())
        parse_fail(where + "." + key + " must be a string");
    return v.get<std::string>();
}

template <class Parser>
auto read_enum(const json& j, const char* key, const std::string& where, Parser parser) {
    const std::string name = read_name(j, key, where);
    auto value = parser(name);
    if (!value)
        parse_fail("unknown " + where + "." + key + " '" + name + "'");
    return *value;
}

void read_indices(const json& j, const char* key, std::vector<std::size_t>& target, const std::string& where) {
    const auto it = j.find(key);
    if (it == j.end())
        return;
    if (!it->is_array())
        parse_fail(where + "." + key + " must be an array of indices");
    target.clear();
    for (const auto& v : *it) {
        if (!v.is_number_unsigned())
            parse_fail(where + "." + key + " must be an array of indices");
        target.push_back(v.get<std::size_t>());
    }
}

NodeId read_node(const json& j, const char* key, const std::string& where) {
    const std::string name = read_name(j, key, where);
    const auto id = parse_node_id(name);
    if (!id)
        parse_fail(where + "." + key + " '" + name + "' is not a node id like w3 or s0");
    return *id;
}

void parse_cluster(const json& j, ClusterConfig& c) {
    const std::string where = "cluster";
    reject_unknown(j, where, {"mode", "n_w", "f_w", "n_ps", "f_ps", "q_w", "q_ps", "gar", "krum_m", "synchronous"});
    if (j.contains("mode"))
        c.mode = read_enum(j, "mode", where, parse_mode);
    read(j, "n_w", c.n_w, where);
    read(j, "f_w", c.f_w, where);
    read(j, "n_ps", c.n_ps, where);
    read(j, "f_ps", c.f_ps, where);
    read(j, "q_w", c.q_w, where);
    read(j, "q_ps", c.q_ps, where);
    if (j.contains("gar"))
        c.gar = read_enum(j, "gar", where, parse_gar_rule);
    read(j, "krum_m", c.krum_m, where);
    read(j, "synchronous", c.synchronous, where);
}

void parse_task(const json& j, TaskConfig& t) {
    const std::string where = "task";
    reject_unknown(j, where, {"kind", "dim", "samples", "noise_sigma", "hidden_width", "num_classes", "batch_size"});
    if (j.contains("kind"))
        t.kind = read_enum(j, "kind", where, parse_task_kind);
    read(j, "dim", t.dim, where);
    read(j, "samples", t.samples, where);
    read(j, "noise_sigma", t.noise_sigma, where);
    read(j, "hidden_width", t.hidden_width, where);
    read(j, "num_classes", t.num_classes, where);
    read(j, "batch_size", t.batch_size, where);
}

void parse_attack(const json& j, AttackSpec& a) {
    const std::string where = "attack";
    reject_unknown(j, where, {"kind", "scale", "sigma", "delay", "worker_targets", "server_targets", "applies_to"});
    if (j.contains("kind"))
        a.kind = read_enum(j, "kind", where, parse_attack_kind);
    read(j, "scale", a.scale, where);
    read(j, "sigma", a.sigma, where);
    read(j, "delay", a.delay, where);
    read_indices(j, "worker_targets", a.worker_targets, where);
    read_indices(j, "server_targets", a.server_targets, where);
    if (j.contains("applies_to"))
        a.applies_to = read_enum(j, "applies_to", where, parse_attack_surface);
}

void parse_schedule(const json& j, LrSchedule& s) {
    const std::string where = "schedule";
    reject_unknown(j, where, {"kind", "gamma0", "decay_T"});
    if (j.contains("kind")) {
        const std::string name = read_name(j, "kind", where);
        if (name == "constant")
            s.kind = ScheduleKind::Constant;
        else if (name == "inverse_decay")
            s.kind = ScheduleKind::InverseDecay;
        else
            parse_fail("unknown schedule.kind '" + name + "'");
    }
    read(j, "gamma0", s.gamma0, where);
    read(j, "decay_T", s.decay_T, where);
}

void parse_delays(const json& j, DelayModel& d) {
    const std::string where = "delays";
    reject_unknown(j, where, {"kind", "base", "jitter", "compute_time", "adversarial"});
    if (j.contains("kind"))
        d.kind = read_enum(j, "kind", where, parse_delay_kind);
    read(j, "base", d.base, where);
    read(j, "jitter", d.jitter, where);
    read(j, "compute_time", d.compute_time, where);
    if (const auto it = j.find("adversarial"); it != j.end()) {
        if (!it->is_array())
            parse_fail("delays.adversarial must be an array");
        for (const auto& entry : *it) {
            const std::string w = "delays.adversarial[]";
            reject_unknown(entry, w, {"sender", "receiver", "step", "extra"});
            for (const char* key : {"sender", "receiver", "step", "extra"})
                if (!entry.contains(key))
                    parse_fail(w + " is missing '" + key + "'");
            LinkStep link{read_node(entry, "sender", w), read_node(entry, "receiver", w), 0};
            read(entry, "step", link.step, w);
            SimTime extra = 0.0;
            read(entry, "extra", extra, w);
            d.adversarial_extra[link] = extra;
        }
    }
}

void parse_crashes(const json& j, std::vector<CrashEvent>& crashes) {
    if (!j.is_array())
        parse_fail("crashes must be an array");
    for (const auto& entry : j) {
        const std::string w = "crashes[]";
        reject_unknown(entry, w, {"server", "after_step"});
        CrashEvent c;
        read(entry, "server", c.server, w);
        read(entry, "after_step", c.after_step, w);
        crashes.push_back(c);
    }
}

void parse_variance(const json& j, VarianceSetup& v) {
    const std::string where = "variance";
    reject_unknown(j, where, {"n", "f", "rules", "kappa", "steps", "worker_batch", "oracle_batch"});
    read(j, "n", v.n, where);
    read(j, "f", v.f, where);
    read(j, "kappa", v.kappa, where);
    read(j, "steps", v.steps, where);
    read(j, "worker_batch", v.worker_batch, where);
    read(j, "oracle_batch", v.oracle_batch, where);
    if (const auto it = j.find("rules"); it != j.end()) {
        if (!it->is_array())
            parse_fail("variance.rules must be an array of rule names");
        v.rules.clear();
        for (const auto& r : *it) {
            if (!r.is_string())
                parse_fail("variance.rules must be an array of rule names");
            const auto rule = parse_gar_rule(r.get<std::string>());
            if (!rule)
                parse_fail("unknown rule '" + r.get<std::string>() + "' in variance.rules");
            v.rules.push_back(*rule);
        }
    }
}

} // namespace

ExperimentFile parse_experiment(const json& doc) {
    reject_unknown(doc, "experiment file",
                   {"cluster", "task", "attack", "schedule", "delays", "crashes", "seed", "max_steps",
                    "metrics_every", "alignment_every", "alignment_k", "crash_timeout", "livelock_horizon",
                    "divergence_threshold", "variance"});
    ExperimentFile file;
    ExperimentConfig& e = file.experiment;
    if (doc.contains("cluster"))
        parse_cluster(doc["cluster"], e.cluster);
    if (doc.contains("task"))
        parse_task(doc["task"], e.task);
    if (doc.contains("attack"))
        parse_attack(doc["attack"], e.attack);
    if (doc.contains("schedule"))
        parse_schedule(doc["schedule"], e.schedule);
    if (doc.contains("delays"))
        parse_delays(doc["delays"], e.delays);
    if (doc.contains("crashes"))
        parse_crashes(doc["crashes"], e.crashes);
    const std::string top = "experiment";
    read(doc, "seed", e.seed, top);
    read(doc, "max_steps", e.max_steps, top);
    read(doc, "metrics_every", e.metrics_every, top);
    read(doc, "alignment_every", e.alignment_every, top);
    read(doc, "alignment_k", e.alignment_k, top);
    read(doc, "crash_timeout", e.crash_timeout, top);
    read(doc, "livelock_horizon", e.livelock_horizon, top);
    read(doc, "divergence_threshold", e.divergence_threshold, top);
    if (doc.contains("variance"))
        parse_variance(doc["variance"], file.variance);
    file.variance.schedule = e.schedule;
    file.variance.seed = e.seed;
    e.validate();
    return file;
}

ExperimentFile parse_experiment_text(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& err) {
        parse_fail(std::string("invalid JSON: ") + err.what());
    }
    return parse_experiment(doc);
}

ExperimentFile load_experiment_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw std::runtime_error("cannot open config '" + path.string() + "'");
    std::ostringstream text;
    text << in.rdbuf();
    return parse_experiment_text(text.str());
}

} // namespace byzsgd::cli
