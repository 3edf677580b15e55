#pragma once

#include <array>
#include <string>
#include <vector>

#include "sgcl/encoders.hpp"
#include "sgcl/tensor.hpp"

namespace sgcl {

struct LossWeights {
    double node = 1.0;
    double edge = 1.0;
    double graph = 1.0;
    double attr = 1.0;
    double dir = 1.0;
    double sfb = 1.0;

    std::array<double, 6> as_array() const { return {node, edge, graph, attr, dir, sfb}; }
};

inline const std::array<const char*, 6> kLossComponentNames = {
    "node", "edge", "graph", "attr", "dir", "sfb"};

// Per-batch (or per-epoch mean) component values; a component is absent when
// its batch had no examples, in which case the total skips it.
struct LossBreakdown {
    std::array<double, 6> components{};
    std::array<bool, 6> present{};
    double total = 0.0;

    double node() const { return components[0]; }
    double edge() const { return components[1]; }
    double graph() const { return components[2]; }
    double attr() const { return components[3]; }
    double dir() const { return components[4]; }
    double sfb() const { return components[5]; }

    // total == sum of weighted present components, recomputable.
    static LossBreakdown from_components(const std::array<double, 6>& comps,
                                         const std::array<bool, 6>& present,
                                         const LossWeights& w) {
        LossBreakdown b;
        b.components = comps;
        b.present = present;
        auto wa = w.as_array();
        for (int c = 0; c < 6; ++c)
            if (present[c]) b.total += wa[c] * comps[c];
        return b;
    }
};

namespace model {

// Smoothed target matrix for softmax cross-entropy over C classes:
// (1-eps) * one_hot + eps / C.
template <typename S>
ad::TensorT<S> smoothed_targets(const std::vector<int>& labels, int classes, double eps) {
    ad::TensorT<S> t = ad::TensorT<S>::zeros({static_cast<int>(labels.size()), classes});
    const S off = static_cast<S>(eps / classes);
    for (size_t i = 0; i < labels.size(); ++i) {
        for (int c = 0; c < classes; ++c) t.data[i * classes + c] = off;
        t.data[i * classes + labels[i]] += static_cast<S>(1.0 - eps);
    }
    return t;
}

// Mean over rows of cross-entropy between softmax(logits) and constant
// target rows: mean_i [ logsumexp(z_i) - sum_c t_ic z_ic ].
template <typename S>
VarOf<S> softmax_cross_entropy(ad::TapeT<S>& t, VarOf<S> logits,
                               ad::TensorT<S> targets) {
    const int n = t.shape(logits)[0];
    auto tv = t.constant(std::move(targets));
    auto lse = t.sum_all(t.logsumexp_rows(logits));
    auto dot = t.sum_all(t.mul(logits, tv));
    return t.scale(t.sub(lse, dot), 1.0 / static_cast<double>(n));
}

// InfoNCE over a square similarity matrix: softmax rows of sim/tau against
// (1-eps)*identity + eps/N targets. Diagonal entries are the positives.
template <typename S>
VarOf<S> info_nce(ad::TapeT<S>& t, VarOf<S> sim, double tau, double eps) {
    if (t.shape(sim).size() != 2 || t.shape(sim)[0] != t.shape(sim)[1])
        fail_internal("info_nce expects a square similarity matrix");
    const int n = t.shape(sim)[0];
    if (n == 0) fail_data("empty batch");
    if (tau <= 0.0) fail_usage("temperature must be positive");
    std::vector<int> diag(n);
    for (int i = 0; i < n; ++i) diag[i] = i;
    auto z = t.scale(sim, 1.0 / tau);
    return softmax_cross_entropy(t, z, smoothed_targets<S>(diag, n, eps));
}

// Learnable-temperature variant: z = sim * exp(-log_tau).
template <typename S>
VarOf<S> info_nce_learnable(ad::TapeT<S>& t, VarOf<S> sim, VarOf<S> log_tau, double eps) {
    const int n = t.shape(sim)[0];
    if (n == 0) fail_data("empty batch");
    std::vector<int> diag(n);
    for (int i = 0; i < n; ++i) diag[i] = i;
    auto inv_tau = t.exp_elem(t.scale(log_tau, -1.0));
    auto z = t.scale_by(sim, inv_tau);
    return softmax_cross_entropy(t, z, smoothed_targets<S>(diag, n, eps));
}

// Bidirectional contrastive objective over matched rows of V and U:
// info_nce(cos(V,U)) + info_nce(cos(U,V)).
template <typename S>
VarOf<S> graph_contrastive_loss(ad::TapeT<S>& t, NetT<S>& net, VarOf<S> v_rows,
                                VarOf<S> u_rows, double eps) {
    auto sim = t.cosine_similarity_matrix(v_rows, u_rows);
    auto sim_t = t.transpose(sim);
    if (net.cfg.learnable_temperature) {
        auto log_tau = t.param(net.params.at("temperature.log_tau"));
        return t.add(info_nce_learnable(t, sim, log_tau, eps),
                     info_nce_learnable(t, sim_t, log_tau, eps));
    }
    return t.add(info_nce(t, sim, net.cfg.temperature, eps),
                 info_nce(t, sim_t, net.cfg.temperature, eps));
}

template <typename S>
VarOf<S> mse_loss(ad::TapeT<S>& t, VarOf<S> pred, ad::TensorT<S> target) {
    const double n = static_cast<double>(pred.valid() ? t.value(pred).numel() : 1);
    auto diff = t.sub(pred, t.constant(std::move(target)));
    return t.scale(t.sum_all(t.mul(diff, diff)), 1.0 / n);
}

}  // namespace model

}  // namespace sgcl
