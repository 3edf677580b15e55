#include "sgcl/training.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numeric>

#include "sgcl/checkpoint.hpp"

namespace sgcl {

namespace fs = std::filesystem;

void TrainConfig::validate() const {
    if (epochs < 0) fail_usage("epochs must be >= 0");
    if (batch_size < 1) fail_usage("batch_size must be >= 1");
    if (lr < 1e-5 || lr > 1e-3)
        fail_usage("lr outside the validated range [1e-5, 1e-3]");
    if (label_smoothing < 0.0 || label_smoothing >= 1.0)
        fail_usage("label_smoothing must be in [0, 1)");
    if (k_set.empty()) fail_usage("k_set must be nonempty");
    for (int k : k_set)
        if (k < 2) fail_usage("k values must be >= 2");
    if (path_budget < 1) fail_usage("path_budget must be >= 1");
    if (val_fraction < 0.0 || val_fraction >= 1.0)
        fail_usage("val_fraction must be in [0, 1)");
}

std::vector<SceneData> prepare_scene_data(const Corpus& corpus,
                                          const GraphConfig& graph_cfg,
                                          const EncoderConfig& enc_cfg,
                                          const std::string& banner_cache) {
    std::vector<SceneData> out;
    out.reserve(corpus.scenes.size());
    for (const auto& scene : corpus.scenes) {
        SceneData d;
        d.graph = build_graph(scene, graph_cfg, banner_cache);
        d.inputs = make_scene_inputs(scene, d.graph, enc_cfg);
        out.push_back(std::move(d));
    }
    return out;
}

std::pair<std::vector<size_t>, std::vector<size_t>> split_corpus(
    size_t n, double val_fraction, uint64_t seed) {
    std::vector<size_t> idx(n);
    std::iota(idx.begin(), idx.end(), size_t{0});
    Rng rng = substream(seed, "split");
    rng.shuffle(idx);
    size_t n_val = 0;
    if (n >= 2 && val_fraction > 0.0)
        n_val = std::max<size_t>(1, static_cast<size_t>(std::llround(n * val_fraction)));
    std::vector<size_t> train(idx.begin(), idx.end() - n_val);
    std::vector<size_t> val(idx.end() - n_val, idx.end());
    return {std::move(train), std::move(val)};
}

EncoderConfig finalize_encoder_config(EncoderConfig enc, const SceneGenConfig& gen,
                                      const BannerConfig& banner) {
    enc.label_count = gen.label_count;
    enc.attribute_count = gen.attribute_count;
    enc.theta_bins = banner.theta_bins;
    enc.level_count = static_cast<int>(banner.levels.size());
    enc.validate();
    return enc;
}

uint64_t model_config_hash(const EncoderConfig& enc, const BannerConfig& banner) {
    Fnv1a64 h;
    uint64_t e = enc.hash(), b = banner.hash();
    h.update(&e, sizeof(e));
    h.update(&b, sizeof(b));
    return h.digest();
}

void write_loss_table(const std::string& path, const std::vector<EpochRow>& rows) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) fail_data("cannot write loss table: " + path);
    out << "epoch";
    for (const char* split : {"train", "val"}) {
        for (const char* c : kLossComponentNames) out << "," << split << "_" << c;
        out << "," << split << "_total";
    }
    out << "\n";
    char buf[32];
    auto cell = [&](double v) {
        std::snprintf(buf, sizeof(buf), "%.6f", v);
        out << "," << buf;
    };
    for (const auto& r : rows) {
        out << r.epoch;
        for (const auto* b : {&r.train, &r.val}) {
            for (int c = 0; c < 6; ++c) cell(b->components[c]);
            cell(b->total);
        }
        out << "\n";
    }
    if (!out) fail_data("write failure on loss table: " + path);
}

namespace {

using model::BatchItem;

// Accumulates epoch means per component over batches that had the component.
struct EpochAccumulator {
    std::array<double, 6> sums{};
    std::array<int, 6> counts{};

    void add(const LossBreakdown& b) {
        for (int c = 0; c < 6; ++c)
            if (b.present[c]) {
                sums[c] += b.components[c];
                counts[c] += 1;
            }
    }

    LossBreakdown mean(const LossWeights& w) const {
        std::array<double, 6> comps{};
        std::array<bool, 6> present{};
        for (int c = 0; c < 6; ++c)
            if (counts[c] > 0) {
                comps[c] = sums[c] / counts[c];
                present[c] = true;
            }
        return LossBreakdown::from_components(comps, present, w);
    }
};

std::vector<BatchItem> gather_batch(const std::vector<SceneData>& data,
                                    const std::vector<size_t>& order, size_t begin,
                                    size_t end, const TrainConfig& tc, int epoch,
                                    const char* stream) {
    std::vector<BatchItem> batch;
    batch.reserve(end - begin);
    for (size_t b = begin; b < end; ++b) {
        const SceneData& d = data[order[b]];
        BatchItem item;
        item.inputs = &d.inputs;
        for (int k : tc.k_set) {
            uint64_t s = substream_seed(tc.seed, std::string(stream) + "/" +
                                                     std::to_string(epoch) + "/" +
                                                     d.inputs.scene_id + "/" +
                                                     std::to_string(k));
            try {
                auto paths = sample_paths(d.graph, k, tc.path_budget, s);
                item.paths.insert(item.paths.end(), paths.begin(), paths.end());
            } catch (const Error& e) {
                if (e.kind() != ErrorKind::data) throw;  // "no paths": skip this k
            }
        }
        batch.push_back(std::move(item));
    }
    return batch;
}

void check_components_finite(const LossBreakdown& b, int epoch, size_t batch_idx) {
    for (int c = 0; c < 6; ++c)
        if (b.present[c] && !std::isfinite(b.components[c]))
            fail_numeric("diverged: component " + std::string(kLossComponentNames[c]) +
                         " non-finite at epoch " + std::to_string(epoch) + " batch " +
                         std::to_string(batch_idx));
    if (!std::isfinite(b.total))
        fail_numeric("diverged: total loss non-finite at epoch " + std::to_string(epoch));
}

std::string ckpt_name(int epoch) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "ckpt_epoch_%03d.bin", epoch);
    return std::string(buf);
}

}  // namespace

TrainResult train_model(const std::vector<SceneData>& data,
                        const EncoderConfig& enc_cfg, const BannerConfig& banner,
                        const TrainConfig& tc, const std::string& out_dir,
                        bool verbose) {
    tc.validate();
    if (data.empty()) fail_data("training corpus is empty");
    fs::create_directories(out_dir);

    TrainResult result;
    result.net = model::build_net<float>(enc_cfg);
    model::init_net(result.net, tc.seed);
    result.model_hash = model_config_hash(enc_cfg, banner);

    ad::AdamWConfig ocfg;
    ocfg.lr = tc.lr;
    ocfg.beta1 = tc.beta1;
    ocfg.beta2 = tc.beta2;
    ocfg.eps = tc.adam_eps;
    ocfg.weight_decay = tc.weight_decay;
    ad::AdamW opt(ocfg);
    opt.ensure_state(result.net.params);

    auto [train_idx, val_idx] = split_corpus(data.size(), tc.val_fraction, tc.seed);
    if (train_idx.empty()) fail_data("training split is empty");

    auto save_ckpt = [&](int epoch) {
        const std::string path = (fs::path(out_dir) / ckpt_name(epoch)).string();
        save_checkpoint(path, result.net.params,
                        tc.save_optimizer_state ? &opt : nullptr, result.model_hash);
        result.checkpoint_paths.push_back(path);
    };
    save_ckpt(0);

    for (int epoch = 1; epoch <= tc.epochs; ++epoch) {
        std::vector<size_t> order = train_idx;
        Rng shuffle_rng = substream(tc.seed, "epoch_order/" + std::to_string(epoch));
        shuffle_rng.shuffle(order);

        EpochAccumulator train_acc;
        for (size_t begin = 0; begin < order.size(); begin += tc.batch_size) {
            const size_t end = std::min(order.size(), begin + tc.batch_size);
            auto batch = gather_batch(data, order, begin, end, tc, epoch, "paths");
            ad::Tape tape;
            ad::Var total;
            LossBreakdown b = model::compute_batch_loss(tape, result.net, batch,
                                                        tc.label_smoothing, tc.weights,
                                                        &total);
            check_components_finite(b, epoch, begin / tc.batch_size);
            result.net.params.zero_grad();
            tape.backward(total);
            opt.step(result.net.params);
            train_acc.add(b);
        }

        EpochAccumulator val_acc;
        for (size_t begin = 0; begin < val_idx.size(); begin += tc.batch_size) {
            const size_t end = std::min(val_idx.size(), begin + tc.batch_size);
            auto batch = gather_batch(data, val_idx, begin, end, tc, epoch, "valpaths");
            ad::Tape tape;
            LossBreakdown b = model::compute_batch_loss(tape, result.net, batch,
                                                        tc.label_smoothing, tc.weights,
                                                        nullptr);
            check_components_finite(b, epoch, begin / tc.batch_size);
            val_acc.add(b);
        }

        EpochRow row;
        row.epoch = epoch;
        row.train = train_acc.mean(tc.weights);
        row.val = val_acc.mean(tc.weights);
        result.rows.push_back(row);
        save_ckpt(epoch);
        write_loss_table((fs::path(out_dir) / "loss_table.csv").string(), result.rows);

        if (verbose) {
            std::printf("epoch %2d  train_total %.6f  val_total %.6f\n", epoch,
                        row.train.total, row.val.total);
            std::fflush(stdout);
        }
    }

    // epochs == 0 still leaves an (empty) loss table for downstream tooling.
    write_loss_table((fs::path(out_dir) / "loss_table.csv").string(), result.rows);
    return result;
}

}  // namespace sgcl
