#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sgcl/force.hpp"
#include "sgcl/graph.hpp"
#include "sgcl/optim.hpp"
#include "sgcl/scene.hpp"
#include "sgcl/tensor.hpp"

namespace sgcl {

struct EncoderConfig {
    int embed_dim = 64;        // d
    int gnn_layers = 2;        // L
    int f_hidden = 128;        // edge-descriptor MLP hidden width
    int projection_dim = 64;   // contrastive projection width
    double temperature = 0.07;
    bool learnable_temperature = false;
    int crop_size = 16;        // object crops resized to crop_size^2
    int conv1_channels = 8;
    int conv2_channels = 16;
    int label_embed_dim = 16;
    // Vocabulary and descriptor dimensions, fixed by the corpus + banner.
    int label_count = 6;
    int attribute_count = 4;
    int theta_bins = 64;
    int level_count = 2;

    int banner_flat_dim() const { return theta_bins * level_count; }
    void validate() const;
    uint64_t hash() const;  // architecture fingerprint for checkpoints
};

// Object crop: mask bounding box resized (nearest neighbor) to a
// crop_size x crop_size float grid. Translation of the object inside the
// scene leaves the crop unchanged. Throws "degenerate mask" on empty masks.
std::vector<float> crop_mask(const BinaryMask& mask, int crop_size);

// Everything a forward pass needs, precomputed once per scene.
struct SceneInputs {
    std::string scene_id;
    int n_objects = 0;
    std::vector<std::vector<float>> crops;  // crop_size^2 per object
    std::vector<int> label_ids;
    std::vector<int> attribute_ids;
    std::vector<std::pair<int, int>> edges;          // (i, j), i < j
    std::vector<std::vector<float>> banner_flat;     // per edge
    std::vector<int> dir_targets;                    // dominant bin per edge
    std::vector<std::vector<std::pair<int, int>>> adjacency;
};

SceneInputs make_scene_inputs(const Scene& scene, const SceneGraph& graph,
                              const EncoderConfig& cfg);

namespace model {

// Parameter registration in a fixed order; `init` draws Xavier-uniform
// weights from the named "init" sub-stream of the run seed.
template <typename S>
struct NetT {
    EncoderConfig cfg;
    ad::ParamStoreT<S> params;
};

template <typename S>
void register_params(NetT<S>& net) {
    const auto& c = net.cfg;
    c.validate();
    auto& p = net.params;
    p.create("visual.conv1.w", {c.conv1_channels, 1 * 3 * 3});
    p.create("visual.conv1.b", {c.conv1_channels});
    p.create("visual.conv2.w", {c.conv2_channels, c.conv1_channels * 3 * 3});
    p.create("visual.conv2.b", {c.conv2_channels});
    p.create("visual.label_embed", {c.label_count, c.label_embed_dim});
    const int conv_out = c.conv2_channels * (c.crop_size / 4) * (c.crop_size / 4);
    p.create("visual.fc.w", {c.embed_dim, conv_out + c.label_embed_dim});
    p.create("visual.fc.b", {c.embed_dim});
    p.create("edge_mlp.w1", {c.f_hidden, c.banner_flat_dim()});
    p.create("edge_mlp.b1", {c.f_hidden});
    p.create("edge_mlp.w2", {c.embed_dim, c.f_hidden});
    p.create("edge_mlp.b2", {c.embed_dim});
    for (int l = 0; l < c.gnn_layers; ++l) {
        const std::string base = "gnn.layer" + std::to_string(l);
        p.create(base + ".w_self", {c.embed_dim, c.embed_dim});
        p.create(base + ".w_neigh", {c.embed_dim, c.embed_dim});
    }
    p.create("proj.visual.w", {c.projection_dim, c.embed_dim});
    p.create("proj.visual.b", {c.projection_dim});
    p.create("proj.node.w", {c.projection_dim, c.embed_dim});
    p.create("proj.node.b", {c.projection_dim});
    p.create("proj.path.w", {c.projection_dim, 2 * c.embed_dim});
    p.create("proj.path.b", {c.projection_dim});
    p.create("proj.edge_pair.w", {c.projection_dim, 2 * c.embed_dim});
    p.create("proj.edge_pair.b", {c.projection_dim});
    p.create("proj.edge_desc.w", {c.projection_dim, c.embed_dim});
    p.create("proj.edge_desc.b", {c.projection_dim});
    p.create("head.attr.w", {c.attribute_count, c.embed_dim});
    p.create("head.attr.b", {c.attribute_count});
    p.create("head.dir.w", {c.theta_bins, c.embed_dim});
    p.create("head.dir.b", {c.theta_bins});
    p.create("head.sfb.w", {c.banner_flat_dim(), c.embed_dim});
    p.create("head.sfb.b", {c.banner_flat_dim()});
    if (c.learnable_temperature) p.create("temperature.log_tau", {1});
}

template <typename S>
NetT<S> build_net(const EncoderConfig& cfg) {
    NetT<S> net;
    net.cfg = cfg;
    register_params(net);
    return net;
}

template <typename S>
void init_net(NetT<S>& net, uint64_t run_seed) {
    ad::init_xavier_uniform(net.params, substream_seed(run_seed, "init"));
    if (net.cfg.learnable_temperature)
        net.params.at("temperature.log_tau").value.data[0] =
            static_cast<S>(std::log(net.cfg.temperature));
}

template <typename S>
using VarOf = typename ad::TapeT<S>::Var;

template <typename S>
VarOf<S> linear_rows(ad::TapeT<S>& t, VarOf<S> x, ad::ParameterT<S>& w,
                     ad::ParameterT<S>& b) {
    return t.add_rowvec(t.matmul_nt(x, t.param(w)), t.param(b));
}

template <typename S>
VarOf<S> linear_vec(ad::TapeT<S>& t, VarOf<S> v, ad::ParameterT<S>& w,
                    ad::ParameterT<S>& b) {
    const int in = t.shape(v)[0];
    auto m = t.reshape(v, {1, in});
    auto out = linear_rows(t, m, w, b);
    return t.reshape(out, {t.shape(out)[1]});
}

template <typename S>
std::vector<S> to_scalar(const std::vector<float>& v) {
    return std::vector<S>(v.begin(), v.end());
}

// Conv stack over one crop, concatenated with the label embedding and
// projected to embed_dim. The VisualEmbedding of the toolkit.
template <typename S>
VarOf<S> encode_object_visual(ad::TapeT<S>& t, NetT<S>& net,
                              const std::vector<float>& crop, int label_id) {
    const auto& c = net.cfg;
    if (label_id < 0 || label_id >= c.label_count)
        fail_data("label id out of vocabulary: " + std::to_string(label_id));
    auto& p = net.params;
    auto img = t.constant(ad::TensorT<S>::from({1, c.crop_size, c.crop_size},
                                               to_scalar<S>(crop)));
    // conv1 3x3 same-pad, relu, 2x2 mean pool
    auto col1 = t.im2col(img, 3, 3, 1);
    auto c1 = t.add_colvec(t.matmul(t.param(p.at("visual.conv1.w")), col1),
                           t.param(p.at("visual.conv1.b")));
    auto a1 = t.avgpool2x2(t.relu(t.reshape(c1, {c.conv1_channels, c.crop_size, c.crop_size})));
    // conv2 3x3 same-pad, relu, 2x2 mean pool
    const int h2 = c.crop_size / 2;
    auto col2 = t.im2col(a1, 3, 3, 1);
    auto c2 = t.add_colvec(t.matmul(t.param(p.at("visual.conv2.w")), col2),
                           t.param(p.at("visual.conv2.b")));
    auto a2 = t.avgpool2x2(t.relu(t.reshape(c2, {c.conv2_channels, h2, h2})));
    const int conv_out = c.conv2_channels * (c.crop_size / 4) * (c.crop_size / 4);
    auto flat = t.reshape(a2, {conv_out});
    auto lab = t.select_row(t.param(p.at("visual.label_embed")), label_id);
    auto cat = t.concat_vec({flat, lab});
    return linear_vec(t, cat, p.at("visual.fc.w"), p.at("visual.fc.b"));
}

// 2-layer MLP over the flattened banner. Inputs are scaled by theta_bins so
// the average bin mass enters at O(1).
template <typename S>
VarOf<S> embed_edge(ad::TapeT<S>& t, NetT<S>& net, const std::vector<float>& banner_flat) {
    const auto& c = net.cfg;
    if (static_cast<int>(banner_flat.size()) != c.banner_flat_dim())
        fail_internal("banner dimension mismatch: got " +
                      std::to_string(banner_flat.size()) + ", config wants " +
                      std::to_string(c.banner_flat_dim()));
    auto& p = net.params;
    auto x = t.constant(ad::TensorT<S>::from({c.banner_flat_dim()}, to_scalar<S>(banner_flat)));
    auto x1 = t.scale(x, static_cast<double>(c.theta_bins));
    auto h = t.relu(linear_vec(t, x1, p.at("edge_mlp.w1"), p.at("edge_mlp.b1")));
    return linear_vec(t, h, p.at("edge_mlp.w2"), p.at("edge_mlp.b2"));
}

template <typename S>
struct SceneEncoding {
    VarOf<S> h0;                         // (n, d) visual embeddings
    VarOf<S> h_final;                    // (n, d) after L message-passing layers
    std::vector<VarOf<S>> edge_embed;    // per edge, (d)
    VarOf<S> edge_matrix;                // (m, d); invalid when no edges
    const SceneInputs* inputs = nullptr;
};

// One message-passing layer: h_i' = relu(W_self h_i + sum_j W_neigh h_j (*) f_ij),
// neighbors visited in ascending id order.
template <typename S>
VarOf<S> message_passing_layer(ad::TapeT<S>& t, NetT<S>& net, VarOf<S> h,
                               const SceneInputs& in,
                               const std::vector<VarOf<S>>& edge_embed, int layer) {
    auto& p = net.params;
    const std::string base = "gnn.layer" + std::to_string(layer);
    auto self = t.matmul_nt(h, t.param(p.at(base + ".w_self")));
    auto neigh = t.matmul_nt(h, t.param(p.at(base + ".w_neigh")));
    const int d = net.cfg.embed_dim;
    std::vector<VarOf<S>> rows;
    rows.reserve(in.n_objects);
    for (int i = 0; i < in.n_objects; ++i) {
        VarOf<S> acc = t.select_row(self, i);
        for (const auto& [j, ei] : in.adjacency[i]) {
            auto msg = t.mul(t.select_row(neigh, j), edge_embed[ei]);
            acc = t.add(acc, msg);
        }
        (void)d;
        rows.push_back(acc);
    }
    return t.relu(t.concat_axis0(rows));
}

template <typename S>
SceneEncoding<S> encode_scene(ad::TapeT<S>& t, NetT<S>& net, const SceneInputs& in) {
    if (in.n_objects <= 0) fail_data("scene has no objects");
    SceneEncoding<S> enc;
    enc.inputs = &in;

    std::vector<VarOf<S>> vis;
    vis.reserve(in.n_objects);
    for (int i = 0; i < in.n_objects; ++i)
        vis.push_back(encode_object_visual(t, net, in.crops[i], in.label_ids[i]));
    enc.h0 = t.concat_axis0(vis);

    enc.edge_embed.reserve(in.edges.size());
    for (const auto& bf : in.banner_flat)
        enc.edge_embed.push_back(embed_edge(t, net, bf));
    if (!enc.edge_embed.empty()) enc.edge_matrix = t.concat_axis0(enc.edge_embed);

    auto h = enc.h0;
    for (int l = 0; l < net.cfg.gnn_layers; ++l)
        h = message_passing_layer(t, net, h, in, enc.edge_embed, l);
    enc.h_final = h;
    return enc;
}

// Mean of path node embeddings || mean of path edge embeddings, projected and
// l2-normalized. Sums run in ascending id order so orientation cannot matter.
template <typename S>
VarOf<S> embed_path(ad::TapeT<S>& t, NetT<S>& net, const SceneEncoding<S>& enc,
                    const HopPath& path) {
    const auto& in = *enc.inputs;
    std::vector<int> node_ids = path.node_sequence;
    std::sort(node_ids.begin(), node_ids.end());
    for (int v : node_ids)
        if (v < 0 || v >= in.n_objects) fail_internal("path references missing node");
    std::vector<int> edge_ids = path.edge_sequence;
    std::sort(edge_ids.begin(), edge_ids.end());
    for (int e : edge_ids)
        if (e < 0 || e >= static_cast<int>(enc.edge_embed.size()))
            fail_internal("path references missing edge");

    VarOf<S> nsum = t.select_row(enc.h_final, node_ids[0]);
    for (size_t i = 1; i < node_ids.size(); ++i)
        nsum = t.add(nsum, t.select_row(enc.h_final, node_ids[i]));
    auto nmean = t.scale(nsum, 1.0 / static_cast<double>(node_ids.size()));

    VarOf<S> esum = enc.edge_embed[edge_ids[0]];
    for (size_t i = 1; i < edge_ids.size(); ++i)
        esum = t.add(esum, enc.edge_embed[edge_ids[i]]);
    auto emean = t.scale(esum, 1.0 / static_cast<double>(edge_ids.size()));

    auto cat = t.concat_vec({nmean, emean});
    auto proj = linear_vec(t, cat, net.params.at("proj.path.w"), net.params.at("proj.path.b"));
    return t.l2_normalize(proj);
}

template <typename S>
VarOf<S> project_visual(ad::TapeT<S>& t, NetT<S>& net, VarOf<S> h0_rows) {
    return linear_rows(t, h0_rows, net.params.at("proj.visual.w"), net.params.at("proj.visual.b"));
}

template <typename S>
VarOf<S> project_node(ad::TapeT<S>& t, NetT<S>& net, VarOf<S> h_rows) {
    return linear_rows(t, h_rows, net.params.at("proj.node.w"), net.params.at("proj.node.b"));
}

using Net = NetT<float>;

}  // namespace model

}  // namespace sgcl
