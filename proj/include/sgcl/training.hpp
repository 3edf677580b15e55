#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "sgcl/losses.hpp"
#include "sgcl/scene_io.hpp"

namespace sgcl {

struct TrainConfig {
    int epochs = 10;
    int batch_size = 32;  // scenes per batch
    double lr = 3e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double adam_eps = 1e-8;
    double weight_decay = 0.01;
    double label_smoothing = 0.3;
    std::vector<int> k_set = {2, 3};
    int path_budget = 4;  // sampled paths per (scene, k) per epoch
    LossWeights weights;
    uint64_t seed = 7;
    double val_fraction = 0.10;
    bool save_optimizer_state = true;
    std::string banner_cache;  // optional directory

    void validate() const;
};

struct SceneData {
    SceneGraph graph;
    SceneInputs inputs;
};

std::vector<SceneData> prepare_scene_data(const Corpus& corpus,
                                          const GraphConfig& graph_cfg,
                                          const EncoderConfig& enc_cfg,
                                          const std::string& banner_cache = "");

// Deterministic 90/10-style split: indices shuffled by the "split" stream,
// the tail becoming validation.
std::pair<std::vector<size_t>, std::vector<size_t>> split_corpus(
    size_t n, double val_fraction, uint64_t seed);

// Fills vocabulary/descriptor dimensions from the corpus + banner config.
EncoderConfig finalize_encoder_config(EncoderConfig enc, const SceneGenConfig& gen,
                                      const BannerConfig& banner);

uint64_t model_config_hash(const EncoderConfig& enc, const BannerConfig& banner);

struct EpochRow {
    int epoch = 0;
    LossBreakdown train;
    LossBreakdown val;
};

void write_loss_table(const std::string& path, const std::vector<EpochRow>& rows);

struct TrainResult {
    std::vector<EpochRow> rows;
    model::Net net;
    uint64_t model_hash = 0;
    std::vector<std::string> checkpoint_paths;  // epoch 0 .. epochs
};

// Full epoch loop: per-epoch path sampling, batched contrastive + head
// losses, AdamW updates, per-epoch checkpoints and a Table-1-shaped loss log.
// Deterministic for a fixed (corpus, config, seed).
TrainResult train_model(const std::vector<SceneData>& data,
                        const EncoderConfig& enc_cfg, const BannerConfig& banner,
                        const TrainConfig& tc, const std::string& out_dir,
                        bool verbose = true);

namespace model {

struct BatchItem {
    const SceneInputs* inputs = nullptr;
    std::vector<HopPath> paths;  // sampled paths (all hop counts merged)
};

// Assembles the six components over one batch of scenes. Positive pairs sit
// on the diagonals; negatives are every other pair in the batch. Returns the
// breakdown and (through total_out) the scalar to differentiate.
template <typename S>
LossBreakdown compute_batch_loss(ad::TapeT<S>& t, NetT<S>& net,
                                 const std::vector<BatchItem>& batch,
                                 double label_smoothing, const LossWeights& w,
                                 VarOf<S>* total_out) {
    if (batch.empty()) fail_data("empty batch");
    const double eps = label_smoothing;

    std::vector<SceneEncoding<S>> encs;
    encs.reserve(batch.size());
    for (const auto& item : batch) encs.push_back(encode_scene(t, net, *item.inputs));

    // -- gather contrastive sides across the batch
    std::vector<VarOf<S>> vis_proj_rows, node_proj_rows;
    std::vector<VarOf<S>> pair_cat_rows, edge_desc_rows;
    std::vector<VarOf<S>> anchor_rows, path_rows;
    std::vector<VarOf<S>> attr_logit_rows, dir_logit_rows, sfb_recon_rows;
    std::vector<int> attr_targets, dir_targets;
    std::vector<S> sfb_targets;

    for (size_t s = 0; s < batch.size(); ++s) {
        const auto& in = *batch[s].inputs;
        auto& enc = encs[s];
        auto vproj = project_visual(t, net, enc.h0);
        auto nproj = project_node(t, net, enc.h_final);
        vis_proj_rows.push_back(vproj);
        node_proj_rows.push_back(nproj);

        for (size_t e = 0; e < in.edges.size(); ++e) {
            auto cat = t.concat_vec({t.select_row(enc.h0, in.edges[e].first),
                                     t.select_row(enc.h0, in.edges[e].second)});
            pair_cat_rows.push_back(cat);
        }
        if (!in.edges.empty()) {
            edge_desc_rows.push_back(linear_rows(t, enc.edge_matrix,
                                                 net.params.at("proj.edge_desc.w"),
                                                 net.params.at("proj.edge_desc.b")));
            dir_logit_rows.push_back(linear_rows(t, enc.edge_matrix,
                                                 net.params.at("head.dir.w"),
                                                 net.params.at("head.dir.b")));
            sfb_recon_rows.push_back(linear_rows(t, enc.edge_matrix,
                                                 net.params.at("head.sfb.w"),
                                                 net.params.at("head.sfb.b")));
            for (size_t e = 0; e < in.edges.size(); ++e) {
                dir_targets.push_back(in.dir_targets[e]);
                for (float v : in.banner_flat[e]) sfb_targets.push_back(static_cast<S>(v));
            }
        }

        for (const auto& p : batch[s].paths) {
            anchor_rows.push_back(t.select_row(vproj, p.node_sequence.front()));
            path_rows.push_back(embed_path(t, net, enc, p));
        }

        attr_logit_rows.push_back(linear_rows(t, enc.h_final,
                                              net.params.at("head.attr.w"),
                                              net.params.at("head.attr.b")));
        for (int a : in.attribute_ids) attr_targets.push_back(a);
    }

    std::array<VarOf<S>, 6> comps;
    std::array<bool, 6> present{};

    // node: visual embedding vs final node embedding, both projected
    {
        auto v = t.concat_axis0(vis_proj_rows);
        auto h = t.concat_axis0(node_proj_rows);
        comps[0] = graph_contrastive_loss(t, net, v, h, eps);
        present[0] = true;
    }
    // edge: concatenated endpoint visuals vs edge-descriptor embedding
    if (!pair_cat_rows.empty()) {
        auto a = linear_rows(t, t.concat_axis0(pair_cat_rows),
                             net.params.at("proj.edge_pair.w"),
                             net.params.at("proj.edge_pair.b"));
        auto b = t.concat_axis0(edge_desc_rows);
        comps[1] = graph_contrastive_loss(t, net, a, b, eps);
        present[1] = true;
    }
    // graph: anchor visual vs multi-hop path embedding (the core objective)
    if (!path_rows.empty()) {
        auto v = t.concat_axis0(anchor_rows);
        auto u = t.concat_axis0(path_rows);
        comps[2] = graph_contrastive_loss(t, net, v, u, eps);
        present[2] = true;
    }
    // attr: attribute classification from final node embeddings
    {
        auto logits = t.concat_axis0(attr_logit_rows);
        comps[3] = softmax_cross_entropy(
            t, logits, smoothed_targets<S>(attr_targets, net.cfg.attribute_count, eps));
        present[3] = true;
    }
    // dir: dominant-direction classification from edge embeddings
    if (!dir_logit_rows.empty()) {
        auto logits = t.concat_axis0(dir_logit_rows);
        comps[4] = softmax_cross_entropy(
            t, logits, smoothed_targets<S>(dir_targets, net.cfg.theta_bins, eps));
        present[4] = true;
    }
    // sfb: banner reconstruction from edge embeddings
    if (!sfb_recon_rows.empty()) {
        auto recon = t.concat_axis0(sfb_recon_rows);
        const int m = t.shape(recon)[0];
        comps[5] = mse_loss(t, recon,
                            ad::TensorT<S>::from({m, net.cfg.banner_flat_dim()},
                                                 std::move(sfb_targets)));
        present[5] = true;
    }

    // weighted total over present components
    VarOf<S> total;
    const auto wa = w.as_array();
    std::array<double, 6> values{};
    for (int c = 0; c < 6; ++c) {
        if (!present[c]) continue;
        values[c] = static_cast<double>(t.value(comps[c]).data[0]);
        auto weighted = t.scale(comps[c], wa[c]);
        total = total.valid() ? t.add(total, weighted) : weighted;
    }
    if (total_out) *total_out = total;
    return LossBreakdown::from_components(values, present, w);
}

}  // namespace model

}  // namespace sgcl
