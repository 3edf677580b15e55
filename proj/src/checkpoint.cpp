#include "sgcl/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include "sgcl/hash.hpp"

static_assert(std::endian::native == std::endian::little,
              "checkpoint payload assumes a little-endian host");

namespace sgcl {

namespace {

struct TensorEntry {
    std::string name;
    std::vector<int> shape;
    uint64_t offset = 0;

    size_t count() const {
        size_t n = 1;
        for (int d : shape) n *= static_cast<size_t>(d);
        return n;
    }
};

void append_entry(std::ostringstream& header, std::vector<float>& payload,
                  const std::string& name, const std::vector<int>& shape,
                  const std::vector<float>& data) {
    header << "tensor " << name << " " << shape.size();
    for (int d : shape) header << " " << d;
    header << " " << payload.size() * sizeof(float) << "\n";
    payload.insert(payload.end(), data.begin(), data.end());
}

}  // namespace

void save_checkpoint(const std::string& path, const ad::ParamStore& params,
                     const ad::AdamW* opt, uint64_t config_hash) {
    std::ostringstream header;
    std::vector<float> payload;
    header << "SGCLCKPT 1\n";
    header << "config_hash " << hex64(config_hash) << "\n";
    header << "step " << (opt ? opt->step_count() : 0) << "\n";
    header << "optimizer_state " << (opt ? 1 : 0) << "\n";

    auto& store = const_cast<ad::ParamStore&>(params);
    for (size_t i = 0; i < store.size(); ++i) {
        const auto& p = store[i];
        append_entry(header, payload, p.name, p.value.shape, p.value.data);
    }
    if (opt) {
        auto* o = const_cast<ad::AdamW*>(opt);
        o->ensure_state(store);
        for (size_t i = 0; i < store.size(); ++i) {
            const auto& p = store[i];
            append_entry(header, payload, p.name + ".adam_m", p.value.shape, o->moment1(i));
            append_entry(header, payload, p.name + ".adam_v", p.value.shape, o->moment2(i));
        }
    }
    header << "end_header\n";

    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) fail_data("cannot write checkpoint: " + path);
    const std::string h = header.str();
    out.write(h.data(), static_cast<std::streamsize>(h.size()));
    out.write(reinterpret_cast<const char*>(payload.data()),
              static_cast<std::streamsize>(payload.size() * sizeof(float)));
    if (!out) fail_data("write failure on checkpoint: " + path);
}

namespace {

struct ParsedHeader {
    CheckpointMeta meta;
    std::vector<TensorEntry> entries;
    std::streampos payload_start;
};

ParsedHeader parse_header(std::ifstream& in, const std::string& path) {
    ParsedHeader ph;
    std::string line;
    if (!std::getline(in, line) || line != "SGCLCKPT 1")
        fail_data("not a checkpoint file: " + path);
    while (std::getline(in, line)) {
        if (line == "end_header") {
            ph.payload_start = in.tellg();
            return ph;
        }
        std::istringstream ls(line);
        std::string key;
        ls >> key;
        if (key == "config_hash") {
            std::string hexv;
            ls >> hexv;
            ph.meta.config_hash = parse_hex64(hexv);
        } else if (key == "step") {
            ls >> ph.meta.step;
        } else if (key == "optimizer_state") {
            int v = 0;
            ls >> v;
            ph.meta.has_optimizer_state = v != 0;
        } else if (key == "tensor") {
            TensorEntry e;
            size_t ndims = 0;
            ls >> e.name >> ndims;
            if (ndims > 8) fail_data("bad tensor rank in checkpoint: " + path);
            e.shape.resize(ndims);
            for (auto& d : e.shape) ls >> d;
            ls >> e.offset;
            if (!ls) fail_data("bad tensor entry in checkpoint: " + path);
            ph.entries.push_back(std::move(e));
        } else {
            fail_data("unknown checkpoint header key '" + key + "' in " + path);
        }
    }
    fail_data("truncated checkpoint header: " + path);
}

std::vector<float> read_tensor(std::ifstream& in, std::streampos payload_start,
                               const TensorEntry& e, const std::string& path) {
    std::vector<float> data(e.count());
    in.seekg(payload_start + static_cast<std::streamoff>(e.offset));
    in.read(reinterpret_cast<char*>(data.data()),
            static_cast<std::streamsize>(data.size() * sizeof(float)));
    if (!in) fail_data("truncated checkpoint payload: " + path);
    return data;
}

}  // namespace

CheckpointMeta read_checkpoint_meta(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail_data("cannot read checkpoint: " + path);
    return parse_header(in, path).meta;
}

CheckpointMeta load_checkpoint(const std::string& path, ad::ParamStore& params,
                               ad::AdamW* opt) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail_data("cannot read checkpoint: " + path);
    ParsedHeader ph = parse_header(in, path);

    auto find_entry = [&](const std::string& name) -> const TensorEntry* {
        for (const auto& e : ph.entries)
            if (e.name == name) return &e;
        return nullptr;
    };

    for (size_t i = 0; i < params.size(); ++i) {
        auto& p = params[i];
        const TensorEntry* e = find_entry(p.name);
        if (!e) fail_data("checkpoint is missing tensor '" + p.name + "': " + path);
        if (e->shape != p.value.shape)
            fail_data("checkpoint shape mismatch for '" + p.name + "': " + path);
        p.value.data = read_tensor(in, ph.payload_start, *e, path);
    }

    if (opt) {
        opt->ensure_state(params);
        opt->set_step_count(ph.meta.step);
        if (ph.meta.has_optimizer_state) {
            for (size_t i = 0; i < params.size(); ++i) {
                const auto& p = params[i];
                const TensorEntry* em = find_entry(p.name + ".adam_m");
                const TensorEntry* ev = find_entry(p.name + ".adam_v");
                if (!em || !ev)
                    fail_data("checkpoint is missing optimizer state for '" + p.name + "'");
                opt->moment1(i) = read_tensor(in, ph.payload_start, *em, path);
                opt->moment2(i) = read_tensor(in, ph.payload_start, *ev, path);
            }
        }
    }
    return ph.meta;
}

}  // namespace sgcl
