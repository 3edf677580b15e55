#include "sgcl/config.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "sgcl/hash.hpp"

namespace sgcl {

namespace {

std::string trim(const std::string& s) {
    size_t b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    size_t e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

int to_int(const std::string& key, const std::string& v) {
    int out = 0;
    auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc{} || p != v.data() + v.size())
        fail_usage("config key '" + key + "': expected integer, got '" + v + "'");
    return out;
}

uint64_t to_u64(const std::string& key, const std::string& v) {
    uint64_t out = 0;
    auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc{} || p != v.data() + v.size())
        fail_usage("config key '" + key + "': expected unsigned integer, got '" + v + "'");
    return out;
}

double to_double(const std::string& key, const std::string& v) {
    try {
        size_t pos = 0;
        double out = std::stod(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return out;
    } catch (const std::exception&) {
        fail_usage("config key '" + key + "': expected number, got '" + v + "'");
    }
}

bool to_bool(const std::string& key, const std::string& v) {
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    fail_usage("config key '" + key + "': expected boolean, got '" + v + "'");
}

std::vector<int> to_int_list(const std::string& key, const std::string& v) {
    std::vector<int> out;
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (item.empty()) continue;
        out.push_back(to_int(key, item));
    }
    if (out.empty()) fail_usage("config key '" + key + "': empty list");
    return out;
}

std::string fmt_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.10g", v);
    return std::string(buf);
}

std::string fmt_list(const std::vector<int>& v) {
    std::string out;
    for (size_t i = 0; i < v.size(); ++i) {
        if (i) out += ",";
        out += std::to_string(v[i]);
    }
    return out;
}

using Setter = std::function<void(AppConfig&, const std::string& key, const std::string& value)>;
using Getter = std::function<std::string(const AppConfig&)>;

struct KeySpec {
    Setter set;
    Getter get;
};

// One table drives parsing, canonical serialization and therefore the hash.
const std::map<std::string, KeySpec>& key_table() {
    static const std::map<std::string, KeySpec> table = [] {
        std::map<std::string, KeySpec> t;
        auto add_int = [&](const std::string& key, auto member) {
            t[key] = {[member](AppConfig& c, const std::string& k, const std::string& v) {
                          c.*member = to_int(k, v);
                      },
                      [member](const AppConfig& c) { return std::to_string(c.*member); }};
        };
        (void)add_int;

        auto add = [&](const std::string& key, Setter s, Getter g) {
            t[key] = {std::move(s), std::move(g)};
        };

#define INT_KEY(name, field)                                                     \
    add(name,                                                                    \
        [](AppConfig& c, const std::string& k, const std::string& v) {           \
            c.field = to_int(k, v);                                              \
        },                                                                       \
        [](const AppConfig& c) { return std::to_string(c.field); })
#define DBL_KEY(name, field)                                                     \
    add(name,                                                                    \
        [](AppConfig& c, const std::string& k, const std::string& v) {           \
            c.field = to_double(k, v);                                           \
        },                                                                       \
        [](const AppConfig& c) { return fmt_double(c.field); })
#define BOOL_KEY(name, field)                                                    \
    add(name,                                                                    \
        [](AppConfig& c, const std::string& k, const std::string& v) {           \
            c.field = to_bool(k, v);                                             \
        },                                                                       \
        [](const AppConfig& c) { return c.field ? "true" : "false"; })

        INT_KEY("data.grid_width", gen.grid_width);
        INT_KEY("data.grid_height", gen.grid_height);
        INT_KEY("data.min_objects", gen.min_objects);
        INT_KEY("data.max_objects", gen.max_objects);
        INT_KEY("data.label_count", gen.label_count);
        INT_KEY("data.attribute_count", gen.attribute_count);
        INT_KEY("data.min_pixels", gen.min_pixels);
        INT_KEY("data.placement_retries", gen.placement_retries);
        DBL_KEY("data.near_fraction", gen.near_fraction);
        DBL_KEY("data.axis_dominance", gen.axis_dominance);

        INT_KEY("banner.theta_bins", banner.theta_bins);
        add("banner.levels",
            [](AppConfig& c, const std::string& k, const std::string& v) {
                c.banner.levels = to_int_list(k, v);
            },
            [](const AppConfig& c) { return fmt_list(c.banner.levels); });

        BOOL_KEY("graph.prune_far", prune_far);
        INT_KEY("graph.max_paths_per_k", max_paths_per_k);

        INT_KEY("model.embed_dim", encoder.embed_dim);
        INT_KEY("model.gnn_layers", encoder.gnn_layers);
        INT_KEY("model.f_hidden", encoder.f_hidden);
        INT_KEY("model.projection_dim", encoder.projection_dim);
        DBL_KEY("model.temperature", encoder.temperature);
        BOOL_KEY("model.learnable_temperature", encoder.learnable_temperature);
        INT_KEY("model.crop_size", encoder.crop_size);
        INT_KEY("model.conv1_channels", encoder.conv1_channels);
        INT_KEY("model.conv2_channels", encoder.conv2_channels);
        INT_KEY("model.label_embed_dim", encoder.label_embed_dim);

        INT_KEY("train.epochs", train.epochs);
        INT_KEY("train.batch_size", train.batch_size);
        DBL_KEY("train.lr", train.lr);
        DBL_KEY("train.beta1", train.beta1);
        DBL_KEY("train.beta2", train.beta2);
        DBL_KEY("train.adam_eps", train.adam_eps);
        DBL_KEY("train.weight_decay", train.weight_decay);
        DBL_KEY("train.label_smoothing", train.label_smoothing);
        add("train.k_set",
            [](AppConfig& c, const std::string& k, const std::string& v) {
                c.train.k_set = to_int_list(k, v);
            },
            [](const AppConfig& c) { return fmt_list(c.train.k_set); });
        INT_KEY("train.path_budget", train.path_budget);
        add("train.seed",
            [](AppConfig& c, const std::string& k, const std::string& v) {
                c.train.seed = to_u64(k, v);
            },
            [](const AppConfig& c) { return std::to_string(c.train.seed); });
        DBL_KEY("train.val_fraction", train.val_fraction);
        BOOL_KEY("train.save_optimizer_state", train.save_optimizer_state);
        add("train.banner_cache",
            [](AppConfig& c, const std::string&, const std::string& v) {
                c.train.banner_cache = v;
            },
            [](const AppConfig& c) { return c.train.banner_cache; });
        DBL_KEY("train.weight_node", train.weights.node);
        DBL_KEY("train.weight_edge", train.weights.edge);
        DBL_KEY("train.weight_graph", train.weights.graph);
        DBL_KEY("train.weight_attr", train.weights.attr);
        DBL_KEY("train.weight_dir", train.weights.dir);
        DBL_KEY("train.weight_sfb", train.weights.sfb);

        INT_KEY("eval.top_k", eval.top_k);
        INT_KEY("eval.eval_seeds", eval.eval_seeds);
        INT_KEY("eval.path_budget", eval.path_budget);
        add("eval.k_set",
            [](AppConfig& c, const std::string& k, const std::string& v) {
                c.eval.k_set = to_int_list(k, v);
            },
            [](const AppConfig& c) { return fmt_list(c.eval.k_set); });
        INT_KEY("eval.probe_seeds", eval.probe_seeds);
        INT_KEY("eval.probe_epochs", eval.probe_epochs);
        DBL_KEY("eval.probe_lr", eval.probe_lr);
        INT_KEY("eval.probe_max_examples", eval.probe_max_examples);

#undef INT_KEY
#undef DBL_KEY
#undef BOOL_KEY
        return t;
    }();
    return table;
}

}  // namespace

void AppConfig::validate() const {
    gen.validate();
    banner.validate();
    train.validate();
    eval.validate();
    if (max_paths_per_k < 1) fail_usage("graph.max_paths_per_k must be positive");
    // Encoder dims that depend on the corpus are checked by encoder_for().
}

AppConfig default_config() { return AppConfig{}; }

AppConfig parse_config_text(const std::string& text) {
    AppConfig cfg;
    const auto& table = key_table();
    std::istringstream in(text);
    std::string line, section;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        line = trim(line);
        if (line.empty() || line[0] == '#' || line[0] == ';') continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                fail_usage("config line " + std::to_string(line_no) + ": malformed section");
            section = trim(line.substr(1, line.size() - 2));
            continue;
        }
        size_t eq = line.find('=');
        if (eq == std::string::npos)
            fail_usage("config line " + std::to_string(line_no) + ": expected key=value");
        std::string key = trim(line.substr(0, eq));
        std::string value = trim(line.substr(eq + 1));
        if (section.empty())
            fail_usage("config line " + std::to_string(line_no) + ": key '" + key +
                       "' outside any section");
        const std::string full = section + "." + key;
        auto it = table.find(full);
        if (it == table.end()) fail_usage("unknown config key: " + full);
        it->second.set(cfg, full, value);
    }
    // eval shares the run seed: one seed drives every named sub-stream
    cfg.eval.seed = cfg.train.seed;
    return cfg;
}

AppConfig load_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail_data("cannot read config file: " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config_text(ss.str());
}

std::string serialize_config(const AppConfig& cfg) {
    std::string out;
    std::string current_section;
    for (const auto& [key, spec] : key_table()) {
        const std::string section = key.substr(0, key.find('.'));
        if (section != current_section) {
            if (!out.empty()) out += "\n";
            out += "[" + section + "]\n";
            current_section = section;
        }
        out += key.substr(key.find('.') + 1) + " = " + spec.get(cfg) + "\n";
    }
    return out;
}

uint64_t config_hash(const AppConfig& cfg) { return fnv1a64(serialize_config(cfg)); }

}  // namespace sgcl
