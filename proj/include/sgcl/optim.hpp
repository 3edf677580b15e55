#pragma once

#include <cmath>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "sgcl/rng.hpp"
#include "sgcl/tensor.hpp"

namespace sgcl::ad {

// Named parameters in registration order (iteration order is part of the
// determinism contract: init, optimizer steps and checkpoints all walk it).
template <typename S>
class ParamStoreT {
public:
    ParameterT<S>& create(const std::string& name, std::vector<int> shape) {
        if (index_.count(name)) fail_internal("duplicate parameter: " + name);
        auto p = std::make_unique<ParameterT<S>>();
        p->name = name;
        p->value = TensorT<S>::zeros(std::move(shape));
        p->value.requires_grad = true;
        p->value.grad.assign(p->value.data.size(), S(0));
        index_[name] = params_.size();
        params_.push_back(std::move(p));
        return *params_.back();
    }

    ParameterT<S>* find(const std::string& name) {
        auto it = index_.find(name);
        return it == index_.end() ? nullptr : params_[it->second].get();
    }
    const ParameterT<S>* find(const std::string& name) const {
        auto it = index_.find(name);
        return it == index_.end() ? nullptr : params_[it->second].get();
    }

    ParameterT<S>& at(const std::string& name) {
        auto* p = find(name);
        if (!p) fail_internal("unknown parameter: " + name);
        return *p;
    }

    size_t size() const { return params_.size(); }
    ParameterT<S>& operator[](size_t i) { return *params_[i]; }
    const ParameterT<S>& operator[](size_t i) const { return *params_[i]; }

    void zero_grad() {
        for (auto& p : params_)
            std::fill(p->value.grad.begin(), p->value.grad.end(), S(0));
    }

    int64_t total_elements() const {
        int64_t n = 0;
        for (const auto& p : params_) n += p->value.numel();
        return n;
    }

private:
    std::vector<std::unique_ptr<ParameterT<S>>> params_;
    std::map<std::string, size_t> index_;
};

// Xavier-uniform for matrices and higher (fan_in + fan_out over the last two
// meanings: rows = fan_out, cols = fan_in of a (out, in) weight); zeros for
// 1-D biases. Walks parameters in registration order.
template <typename S>
void init_xavier_uniform(ParamStoreT<S>& store, uint64_t seed) {
    Rng rng(seed);
    for (size_t i = 0; i < store.size(); ++i) {
        auto& p = store[i];
        const auto& sh = p.value.shape;
        if (sh.size() < 2) {
            std::fill(p.value.data.begin(), p.value.data.end(), S(0));
            continue;
        }
        const double fan_out = sh[0];
        double fan_in = 1.0;
        for (size_t d = 1; d < sh.size(); ++d) fan_in *= sh[d];
        const double limit = std::sqrt(6.0 / (fan_in + fan_out));
        for (auto& v : p.value.data)
            v = static_cast<S>(rng.uniform_real(-limit, limit));
    }
}

struct AdamWConfig {
    double lr = 3e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double weight_decay = 0.01;
};

// AdamW with decoupled weight decay applied before the moment update:
// p <- p - lr*wd*p, then the bias-corrected Adam step.
template <typename S>
class AdamWT {
public:
    explicit AdamWT(AdamWConfig cfg = {}) : cfg_(cfg) {}

    AdamWConfig& config() { return cfg_; }
    const AdamWConfig& config() const { return cfg_; }
    int64_t step_count() const { return step_; }
    void set_step_count(int64_t t) { step_ = t; }

    void step(ParamStoreT<S>& store) {
        ensure_state(store);
        ++step_;
        const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(step_));
        const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(step_));
        for (size_t i = 0; i < store.size(); ++i) {
            auto& p = store[i];
            auto& m = m_[i];
            auto& v = v_[i];
            auto& w = p.value.data;
            const auto& g = p.value.grad;
            for (size_t k = 0; k < w.size(); ++k) {
                const double gk = static_cast<double>(g[k]);
                if (!std::isfinite(gk)) fail_numeric("diverged: non-finite gradient in " + p.name);
                double wk = static_cast<double>(w[k]);
                wk -= cfg_.lr * cfg_.weight_decay * wk;
                m[k] = static_cast<S>(cfg_.beta1 * m[k] + (1.0 - cfg_.beta1) * gk);
                v[k] = static_cast<S>(cfg_.beta2 * v[k] + (1.0 - cfg_.beta2) * gk * gk);
                const double mhat = m[k] / bc1;
                const double vhat = v[k] / bc2;
                wk -= cfg_.lr * mhat / (std::sqrt(vhat) + cfg_.eps);
                w[k] = static_cast<S>(wk);
            }
        }
    }

    // Moment buffers use the tensor scalar type so checkpoints round-trip
    // them losslessly.
    std::vector<S>& moment1(size_t i) { return m_[i]; }
    std::vector<S>& moment2(size_t i) { return v_[i]; }
    void ensure_state(const ParamStoreT<S>& store) {
        if (m_.size() == store.size()) return;
        m_.resize(store.size());
        v_.resize(store.size());
        for (size_t i = 0; i < store.size(); ++i) {
            m_[i].resize(store[i].value.data.size(), S(0));
            v_[i].resize(store[i].value.data.size(), S(0));
        }
    }

private:
    AdamWConfig cfg_;
    int64_t step_ = 0;
    std::vector<std::vector<S>> m_, v_;
};

using ParamStore = ParamStoreT<float>;
using AdamW = AdamWT<float>;

}  // namespace sgcl::ad
