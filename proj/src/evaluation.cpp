#include "sgcl/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <numeric>

#include <json.hpp>

#include "sgcl/hash.hpp"

namespace sgcl {

namespace fs = std::filesystem;
using nlohmann::json;

void EvalConfig::validate() const {
    if (top_k < 1) fail_usage("top_k must be >= 1");
    if (eval_seeds < 1) fail_usage("eval_seeds must be >= 1");
    if (path_budget < 1) fail_usage("eval path_budget must be >= 1");
    if (k_set.empty()) fail_usage("eval k_set must be nonempty");
    if (probe_seeds < 1 || probe_epochs < 1) fail_usage("probe settings must be positive");
    if (probe_lr <= 0.0) fail_usage("probe_lr must be positive");
    if (probe_max_examples < 10) fail_usage("probe_max_examples too small");
    for (double t : relevance_thresholds)
        if (t <= 0.0 || t >= 1.0) fail_usage("relevance thresholds must be in (0,1)");
}

// --- retrieval ---------------------------------------------------------------

std::vector<RankedResult> retrieve(const RetrievalIndex& index,
                                   const std::vector<float>& query,
                                   const std::string& exclude_id, int top_k) {
    if (index.scene_ids.empty()) fail_data("empty index");
    if (top_k < 1) fail_usage("top_k must be >= 1");

    std::vector<RankedResult> all;
    all.reserve(index.scene_ids.size());
    for (size_t i = 0; i < index.scene_ids.size(); ++i) {
        if (index.scene_ids[i] == exclude_id) continue;
        const auto& e = index.embeddings[i];
        if (e.size() != query.size()) fail_data("index/query dimension mismatch");
        double dot = 0.0;
        for (size_t d = 0; d < e.size(); ++d)
            dot += static_cast<double>(e[d]) * query[d];
        all.push_back({index.scene_ids[i], dot});
    }
    std::sort(all.begin(), all.end(), [](const RankedResult& a, const RankedResult& b) {
        if (a.similarity != b.similarity) return a.similarity > b.similarity;
        return a.scene_id < b.scene_id;
    });
    if (static_cast<int>(all.size()) > top_k) all.resize(top_k);
    return all;
}

double ndcg_at_k(const std::vector<double>& ranked_relevances,
                 std::vector<double> ideal_relevances, int k) {
    if (k < 1) fail_usage("ndcg k must be >= 1");
    auto dcg = [k](const std::vector<double>& rel) {
        double acc = 0.0;
        const int n = std::min<int>(k, static_cast<int>(rel.size()));
        for (int i = 0; i < n; ++i) {
            if (rel[i] < 0.0) fail_data("relevance gains must be nonnegative");
            acc += rel[i] / std::log2(static_cast<double>(i) + 2.0);
        }
        return acc;
    };
    std::sort(ideal_relevances.begin(), ideal_relevances.end(), std::greater<>());
    const double idcg = dcg(ideal_relevances);
    if (idcg == 0.0) return 0.0;
    return dcg(ranked_relevances) / idcg;
}

// --- relevance oracle ----------------------------------------------------------

RelevanceOracle RelevanceOracle::build(const Corpus& corpus,
                                       const std::vector<size_t>& scene_indices) {
    RelevanceOracle o;
    o.triples_.reserve(scene_indices.size());
    for (size_t idx : scene_indices) {
        const Scene& s = corpus.scenes.at(idx);
        std::vector<std::array<int, 3>> t;
        t.reserve(s.oracle_relations.size());
        for (const auto& r : s.oracle_relations)
            t.push_back({s.objects[r.subject_id].label_id, r.relation_id,
                         s.objects[r.object_id].label_id});
        std::sort(t.begin(), t.end());
        o.triples_.push_back(std::move(t));
    }
    return o;
}

double RelevanceOracle::jaccard(size_t a, size_t b) const {
    const auto& ta = triples_.at(a);
    const auto& tb = triples_.at(b);
    if (ta.empty() && tb.empty()) return 1.0;  // both relation-free: identical
    size_t inter = 0;
    size_t i = 0, j = 0;
    while (i < ta.size() && j < tb.size()) {
        if (ta[i] == tb[j]) {
            ++inter;
            ++i;
            ++j;
        } else if (ta[i] < tb[j]) {
            ++i;
        } else {
            ++j;
        }
    }
    const size_t uni = ta.size() + tb.size() - inter;
    return static_cast<double>(inter) / static_cast<double>(uni);
}

int RelevanceOracle::grade(size_t a, size_t b,
                           const std::array<double, 3>& th) const {
    const double jac = jaccard(a, b);
    return (jac > th[0]) + (jac > th[1]) + (jac > th[2]);
}

// --- index construction ----------------------------------------------------------

namespace {

std::vector<float> l2_normalized(std::vector<double> v) {
    double norm = 0.0;
    for (double x : v) norm += x * x;
    norm = std::sqrt(norm);
    std::vector<float> out(v.size());
    const double denom = norm + 1e-8;
    for (size_t i = 0; i < v.size(); ++i)
        out[i] = static_cast<float>(v[i] / denom);
    return out;
}

// Sampled paths for one scene across every configured k ("no paths" skipped).
std::vector<HopPath> sample_scene_paths(const SceneData& d, const EvalConfig& cfg,
                                        const std::string& stream_prefix) {
    std::vector<HopPath> paths;
    for (int k : cfg.k_set) {
        uint64_t s = substream_seed(cfg.seed, stream_prefix + "/" + d.inputs.scene_id +
                                                  "/" + std::to_string(k));
        try {
            auto p = sample_paths(d.graph, k, cfg.path_budget, s);
            paths.insert(paths.end(), p.begin(), p.end());
        } catch (const Error& e) {
            if (e.kind() != ErrorKind::data) throw;
        }
    }
    return paths;
}

std::vector<std::vector<float>> path_embeddings_for_scene(
    const SceneData& d, model::Net& net, const std::vector<HopPath>& paths) {
    ad::Tape tape;
    auto enc = model::encode_scene(tape, net, d.inputs);
    std::vector<std::vector<float>> out;
    out.reserve(paths.size());
    for (const auto& p : paths) {
        auto u = model::embed_path(tape, net, enc, p);
        out.push_back(tape.value(u).data);
    }
    return out;
}

}  // namespace

RetrievalIndex build_learned_index(const std::vector<SceneData>& data,
                                   const std::vector<size_t>& scene_indices,
                                   model::Net& net, const EvalConfig& cfg,
                                   int seed_index) {
    RetrievalIndex index;
    const std::string prefix = "eval/" + std::to_string(seed_index);
    for (size_t idx : scene_indices) {
        const SceneData& d = data.at(idx);
        auto paths = sample_scene_paths(d, cfg, prefix);
        if (paths.empty()) continue;  // no k-hop structure: not indexable
        auto embs = path_embeddings_for_scene(d, net, paths);
        std::vector<double> mean(embs[0].size(), 0.0);
        for (const auto& e : embs)
            for (size_t j = 0; j < e.size(); ++j) mean[j] += e[j];
        for (auto& v : mean) v /= static_cast<double>(embs.size());
        index.scene_ids.push_back(d.inputs.scene_id);
        index.embeddings.push_back(l2_normalized(std::move(mean)));
    }
    return index;
}

RetrievalIndex build_sfb_index(const std::vector<SceneData>& data,
                               const std::vector<size_t>& scene_indices) {
    RetrievalIndex index;
    for (size_t idx : scene_indices) {
        const SceneData& d = data.at(idx);
        if (d.inputs.banner_flat.empty()) continue;
        std::vector<double> mean(d.inputs.banner_flat[0].size(), 0.0);
        for (const auto& b : d.inputs.banner_flat)
            for (size_t j = 0; j < b.size(); ++j) mean[j] += b[j];
        for (auto& v : mean) v /= static_cast<double>(d.inputs.banner_flat.size());
        index.scene_ids.push_back(d.inputs.scene_id);
        index.embeddings.push_back(l2_normalized(std::move(mean)));
    }
    return index;
}

// --- CBGR -------------------------------------------------------------------------

namespace {

// NDCG per query of one index against the graded oracle.
std::vector<double> ndcg_per_query(const RetrievalIndex& index,
                                   const RelevanceOracle& oracle,
                                   const std::map<std::string, size_t>& oracle_pos,
                                   const EvalConfig& cfg) {
    std::vector<double> out;
    out.reserve(index.scene_ids.size());
    for (size_t q = 0; q < index.scene_ids.size(); ++q) {
        const auto& qid = index.scene_ids[q];
        auto ranked = retrieve(index, index.embeddings[q], qid, cfg.top_k);
        const size_t qpos = oracle_pos.at(qid);
        std::vector<double> rel;
        rel.reserve(ranked.size());
        for (const auto& r : ranked)
            rel.push_back(oracle.grade(qpos, oracle_pos.at(r.scene_id),
                                       cfg.relevance_thresholds));
        std::vector<double> ideal;
        ideal.reserve(index.scene_ids.size() - 1);
        for (size_t c = 0; c < index.scene_ids.size(); ++c) {
            if (c == q) continue;
            ideal.push_back(oracle.grade(qpos, oracle_pos.at(index.scene_ids[c]),
                                         cfg.relevance_thresholds));
        }
        out.push_back(ndcg_at_k(rel, std::move(ideal), cfg.top_k));
    }
    return out;
}

double mean_of(const std::vector<double>& v) {
    if (v.empty()) return 0.0;
    double acc = 0.0;
    for (double x : v) acc += x;
    return acc / static_cast<double>(v.size());
}

}  // namespace

CbgrReport evaluate_cbgr(const Corpus& corpus, const std::vector<SceneData>& data,
                         const std::vector<size_t>& heldout, model::Net& trained,
                         model::Net& random_init, const EvalConfig& cfg) {
    cfg.validate();
    if (heldout.size() < 6) fail_data("insufficient corpus for retrieval evaluation");

    RelevanceOracle oracle = RelevanceOracle::build(corpus, heldout);
    std::map<std::string, size_t> oracle_pos;
    for (size_t i = 0; i < heldout.size(); ++i)
        oracle_pos[corpus.scenes[heldout[i]].scene_id] = i;

    CbgrReport report;
    CbgrMethodResult learned{"learned", 0.0, {}, {}};
    CbgrMethodResult random{"random_init", 0.0, {}, {}};
    CbgrMethodResult raw{"raw_sfb", 0.0, {}, {}};

    RetrievalIndex sfb_index = build_sfb_index(data, heldout);
    if (sfb_index.scene_ids.size() < 6) fail_data("insufficient corpus for retrieval evaluation");
    report.query_ids = sfb_index.scene_ids;
    auto raw_q = ndcg_per_query(sfb_index, oracle, oracle_pos, cfg);

    std::vector<std::vector<double>> learned_q_acc, random_q_acc;
    for (int s = 0; s < cfg.eval_seeds; ++s) {
        auto li = build_learned_index(data, heldout, trained, cfg, s);
        auto ri = build_learned_index(data, heldout, random_init, cfg, s);
        auto lq = ndcg_per_query(li, oracle, oracle_pos, cfg);
        auto rq = ndcg_per_query(ri, oracle, oracle_pos, cfg);
        learned.per_seed.push_back(mean_of(lq));
        random.per_seed.push_back(mean_of(rq));
        learned_q_acc.push_back(std::move(lq));
        random_q_acc.push_back(std::move(rq));
    }
    // The raw descriptor index ignores sampling seeds; replicate for symmetry.
    for (int s = 0; s < cfg.eval_seeds; ++s) raw.per_seed.push_back(mean_of(raw_q));

    auto average_queries = [&](const std::vector<std::vector<double>>& per_seed) {
        std::vector<double> out(per_seed[0].size(), 0.0);
        for (const auto& v : per_seed)
            for (size_t i = 0; i < v.size(); ++i) out[i] += v[i];
        for (auto& x : out) x /= static_cast<double>(per_seed.size());
        return out;
    };
    learned.per_query = average_queries(learned_q_acc);
    random.per_query = average_queries(random_q_acc);
    raw.per_query = raw_q;

    learned.mean_ndcg = mean_of(learned.per_seed);
    random.mean_ndcg = mean_of(random.per_seed);
    raw.mean_ndcg = mean_of(raw.per_seed);

    report.methods = {std::move(learned), std::move(random), std::move(raw)};
    return report;
}

void write_cbgr_report(const std::string& out_dir, const CbgrReport& report) {
    fs::create_directories(out_dir);
    {
        std::ofstream out(fs::path(out_dir) / "cbgr_report.csv", std::ios::trunc);
        out << "query";
        for (const auto& m : report.methods) out << ",ndcg5_" << m.method;
        out << "\n";
        char buf[32];
        for (size_t q = 0; q < report.query_ids.size(); ++q) {
            out << report.query_ids[q];
            for (const auto& m : report.methods) {
                std::snprintf(buf, sizeof(buf), "%.6f",
                              q < m.per_query.size() ? m.per_query[q] : 0.0);
                out << "," << buf;
            }
            out << "\n";
        }
    }
    json summary;
    for (const auto& m : report.methods) {
        summary["mean_ndcg5"][m.method] = m.mean_ndcg;
        summary["per_seed"][m.method] = m.per_seed;
    }
    summary["queries"] = report.query_ids.size();
    std::ofstream out(fs::path(out_dir) / "cbgr_summary.json", std::ios::trunc);
    out << summary.dump(2) << "\n";
}

// --- SRR probe -----------------------------------------------------------------

namespace {

struct ProbeExample {
    std::vector<float> features;
    int label = 0;
};

// Frozen pair features: [h_subject ; h_object] from the final GNN layer.
std::vector<ProbeExample> probe_examples(const Corpus& corpus,
                                         const std::vector<SceneData>& data,
                                         const std::vector<size_t>& indices,
                                         model::Net& net) {
    std::vector<ProbeExample> out;
    for (size_t idx : indices) {
        const Scene& scene = corpus.scenes.at(idx);
        const SceneData& d = data.at(idx);
        ad::Tape tape;
        auto enc = model::encode_scene(tape, net, d.inputs);
        const auto& h = tape.value(enc.h_final);
        const int dim = h.shape[1];
        auto row = [&](int i) {
            return std::vector<float>(h.data.begin() + static_cast<size_t>(i) * dim,
                                      h.data.begin() + static_cast<size_t>(i + 1) * dim);
        };
        for (const auto& r : scene.oracle_relations) {
            ProbeExample e;
            e.features = row(r.subject_id);
            auto obj = row(r.object_id);
            e.features.insert(e.features.end(), obj.begin(), obj.end());
            e.label = r.relation_id;
            out.push_back(std::move(e));
        }
    }
    return out;
}

struct ProbeScores {
    double top1 = 0.0;
    double top2 = 0.0;
    std::vector<double> class_top1;
    std::vector<double> class_top2;
    std::vector<int> class_support;
};

ProbeScores run_probe(const std::vector<ProbeExample>& train,
                      const std::vector<ProbeExample>& test, int classes,
                      uint64_t seed, const EvalConfig& cfg) {
    const int dim = static_cast<int>(train.at(0).features.size());
    const int n = static_cast<int>(train.size());

    ad::ParamStore params;
    auto& w = params.create("probe.w", {classes, dim});
    auto& b = params.create("probe.b", {classes});
    ad::init_xavier_uniform(params, seed);

    ad::Tensor x = ad::Tensor::zeros({n, dim});
    std::vector<int> labels(n);
    for (int i = 0; i < n; ++i) {
        std::copy(train[i].features.begin(), train[i].features.end(),
                  x.data.begin() + static_cast<size_t>(i) * dim);
        labels[i] = train[i].label;
    }
    ad::Tensor targets = model::smoothed_targets<float>(labels, classes, 0.0);

    ad::AdamWConfig ocfg;
    ocfg.lr = cfg.probe_lr;
    ocfg.weight_decay = 0.0;
    ad::AdamW opt(ocfg);
    opt.ensure_state(params);

    for (int epoch = 0; epoch < cfg.probe_epochs; ++epoch) {
        ad::Tape tape;
        auto xv = tape.constant(x);
        auto logits = tape.add_rowvec(tape.matmul_nt(xv, tape.param(w)), tape.param(b));
        auto loss = model::softmax_cross_entropy(tape, logits, targets);
        params.zero_grad();
        tape.backward(loss);
        opt.step(params);
    }

    ProbeScores s;
    s.class_top1.assign(classes, 0.0);
    s.class_top2.assign(classes, 0.0);
    s.class_support.assign(classes, 0);
    int hit1 = 0, hit2 = 0;
    std::vector<double> logits(classes);
    for (const auto& e : test) {
        for (int c = 0; c < classes; ++c) {
            double acc = b.value.data[c];
            const float* wr = &w.value.data[static_cast<size_t>(c) * dim];
            for (int d2 = 0; d2 < dim; ++d2) acc += static_cast<double>(wr[d2]) * e.features[d2];
            logits[c] = acc;
        }
        int best = 0, second = -1;
        for (int c = 1; c < classes; ++c)
            if (logits[c] > logits[best]) best = c;
        for (int c = 0; c < classes; ++c) {
            if (c == best) continue;
            if (second < 0 || logits[c] > logits[second]) second = c;
        }
        s.class_support[e.label] += 1;
        if (e.label == best) {
            ++hit1;
            ++hit2;
            s.class_top1[e.label] += 1.0;
            s.class_top2[e.label] += 1.0;
        } else if (e.label == second) {
            ++hit2;
            s.class_top2[e.label] += 1.0;
        }
    }
    for (int c = 0; c < classes; ++c) {
        if (s.class_support[c] == 0) continue;
        s.class_top1[c] /= s.class_support[c];
        s.class_top2[c] /= s.class_support[c];
    }
    s.top1 = test.empty() ? 0.0 : static_cast<double>(hit1) / test.size();
    s.top2 = test.empty() ? 0.0 : static_cast<double>(hit2) / test.size();
    return s;
}

std::vector<ProbeExample> cap_examples(std::vector<ProbeExample> v, size_t cap,
                                       uint64_t seed) {
    if (v.size() <= cap) return v;
    Rng rng(seed);
    auto keep = rng.sample_indices(v.size(), cap);
    std::vector<ProbeExample> out;
    out.reserve(cap);
    for (size_t i : keep) out.push_back(std::move(v[i]));
    return out;
}

}  // namespace

SrrReport linear_probe_srr(const Corpus& corpus, const std::vector<SceneData>& data,
                           const std::vector<size_t>& train_idx,
                           const std::vector<size_t>& test_idx, model::Net& trained,
                           model::Net& random_init, const EvalConfig& cfg) {
    cfg.validate();
    SrrReport report;

    struct MethodInput {
        std::string name;
        model::Net* net;
    };
    std::vector<MethodInput> methods = {{"trained", &trained}, {"random_init", &random_init}};

    // Majority baseline + excluded classes come from the trained-feature pass
    // but depend only on labels, so any pass would do.
    bool label_stats_done = false;

    for (auto& m : methods) {
        auto train_ex = cap_examples(probe_examples(corpus, data, train_idx, *m.net),
                                     static_cast<size_t>(cfg.probe_max_examples),
                                     substream_seed(cfg.seed, "probe_subsample"));
        auto test_ex = probe_examples(corpus, data, test_idx, *m.net);
        if (train_ex.empty() || test_ex.empty())
            fail_data("no probe examples (corpus too small)");

        std::vector<int> train_support(kRelationCount, 0);
        for (const auto& e : train_ex) train_support[e.label] += 1;

        if (!label_stats_done) {
            label_stats_done = true;
            int majority = 0;
            for (int c = 1; c < kRelationCount; ++c)
                if (train_support[c] > train_support[majority]) majority = c;
            report.majority_class = majority;
            int hits = 0, total = 0;
            for (const auto& e : test_ex) {
                ++total;
                hits += e.label == majority;
            }
            report.majority_accuracy = total ? static_cast<double>(hits) / total : 0.0;
            for (int c = 0; c < kRelationCount; ++c)
                if (train_support[c] == 0) report.excluded_classes.push_back(c);
        }

        // Classes absent from the training split cannot be probed; drop their
        // test rows and report them as excluded.
        std::vector<ProbeExample> kept_test;
        kept_test.reserve(test_ex.size());
        for (auto& e : test_ex)
            if (train_support[e.label] > 0) kept_test.push_back(std::move(e));

        SrrMethodResult r;
        r.method = m.name;
        std::vector<ProbeScores> seeds;
        for (int s = 0; s < cfg.probe_seeds; ++s) {
            uint64_t seed = substream_seed(cfg.seed, "probe/" + m.name + "/" + std::to_string(s));
            seeds.push_back(run_probe(train_ex, kept_test, kRelationCount, seed, cfg));
            r.per_seed_top1.push_back(seeds.back().top1);
        }
        for (const auto& s : seeds) {
            r.overall_top1 += s.top1 / cfg.probe_seeds;
            r.overall_top2 += s.top2 / cfg.probe_seeds;
        }
        for (int c = 0; c < kRelationCount; ++c) {
            if (train_support[c] == 0) continue;
            SrrClassRow row;
            row.relation_id = c;
            row.name = relation_name(static_cast<Relation>(c));
            row.support_train = train_support[c];
            row.support_test = seeds[0].class_support[c];
            for (const auto& s : seeds) {
                row.top1 += s.class_top1[c] / cfg.probe_seeds;
                row.top2 += s.class_top2[c] / cfg.probe_seeds;
            }
            r.per_class.push_back(std::move(row));
        }
        report.methods.push_back(std::move(r));
    }
    return report;
}

void write_srr_report(const std::string& out_dir, const SrrReport& report) {
    fs::create_directories(out_dir);
    {
        std::ofstream out(fs::path(out_dir) / "srr_report.csv", std::ios::trunc);
        out << "method,relation,support_train,support_test,top1,top2\n";
        char buf[64];
        for (const auto& m : report.methods)
            for (const auto& row : m.per_class) {
                std::snprintf(buf, sizeof(buf), "%.6f,%.6f", row.top1, row.top2);
                out << m.method << "," << row.name << "," << row.support_train << ","
                    << row.support_test << "," << buf << "\n";
            }
    }
    json summary;
    for (const auto& m : report.methods) {
        summary["overall_top1"][m.method] = m.overall_top1;
        summary["overall_top2"][m.method] = m.overall_top2;
        summary["per_seed_top1"][m.method] = m.per_seed_top1;
    }
    summary["majority_accuracy"] = report.majority_accuracy;
    summary["majority_class"] = relation_name(static_cast<Relation>(report.majority_class));
    json excluded = json::array();
    for (int c : report.excluded_classes)
        excluded.push_back(relation_name(static_cast<Relation>(c)));
    summary["excluded_classes"] = excluded;
    std::ofstream out(fs::path(out_dir) / "srr_summary.json", std::ios::trunc);
    out << summary.dump(2) << "\n";
}

// --- embedding export -------------------------------------------------------------

ExportMode export_mode_from_name(const std::string& name) {
    if (name == "object") return ExportMode::object;
    if (name == "path") return ExportMode::path;
    if (name == "graph") return ExportMode::graph;
    fail_usage("unknown export mode: " + name + " (expected object|path|graph)");
}

namespace {

std::string path_signature(const HopPath& p) {
    std::string s = "k" + std::to_string(p.hops) + ":";
    for (size_t i = 0; i < p.node_sequence.size(); ++i) {
        if (i) s += "-";
        s += std::to_string(p.node_sequence[i]);
    }
    return s;
}

void put_record(std::ofstream& out, const std::string& scene_id,
                const std::string& key, const std::vector<float>& vec) {
    auto put_str = [&](const std::string& s) {
        uint16_t len = static_cast<uint16_t>(s.size());
        out.write(reinterpret_cast<const char*>(&len), sizeof(len));
        out.write(s.data(), len);
    };
    put_str(scene_id);
    put_str(key);
    out.write(reinterpret_cast<const char*>(vec.data()),
              static_cast<std::streamsize>(vec.size() * sizeof(float)));
}

std::vector<float> normalized_value(const std::vector<float>& v) {
    std::vector<double> d(v.begin(), v.end());
    return l2_normalized(std::move(d));
}

}  // namespace

void export_embeddings(const Corpus& corpus, const std::vector<SceneData>& data,
                       model::Net& net, ExportMode mode, const EvalConfig& cfg,
                       const std::string& out_path, uint64_t model_hash) {
    cfg.validate();
    std::vector<EmbeddingRecord> records;

    for (size_t idx = 0; idx < data.size(); ++idx) {
        const SceneData& d = data[idx];
        if (mode == ExportMode::object) {
            ad::Tape tape;
            auto enc = model::encode_scene(tape, net, d.inputs);
            auto proj = model::project_visual(tape, net, enc.h0);
            auto norm = tape.l2_normalize(proj);
            const auto& v = tape.value(norm);
            const int dim = v.shape[1];
            for (int i = 0; i < d.inputs.n_objects; ++i)
                records.push_back({d.inputs.scene_id, std::to_string(i),
                                   std::vector<float>(v.data.begin() + static_cast<size_t>(i) * dim,
                                                      v.data.begin() + static_cast<size_t>(i + 1) * dim)});
        } else {
            auto paths = sample_scene_paths(d, cfg, "export");
            if (paths.empty()) continue;
            auto embs = path_embeddings_for_scene(d, net, paths);
            if (mode == ExportMode::path) {
                for (size_t p = 0; p < paths.size(); ++p)
                    records.push_back({d.inputs.scene_id, path_signature(paths[p]),
                                       std::move(embs[p])});
            } else {
                std::vector<double> mean(embs[0].size(), 0.0);
                for (const auto& e : embs)
                    for (size_t j = 0; j < e.size(); ++j) mean[j] += e[j];
                for (auto& v : mean) v /= static_cast<double>(embs.size());
                records.push_back({d.inputs.scene_id, "graph", l2_normalized(std::move(mean))});
            }
        }
    }
    if (records.empty()) fail_data("nothing to export");

    const uint32_t dim = static_cast<uint32_t>(records[0].vector.size());
    std::ofstream out(out_path, std::ios::binary | std::ios::trunc);
    if (!out) fail_data("cannot write embedding table: " + out_path);
    out.write("SGEB", 4);
    uint16_t version = 1;
    out.write(reinterpret_cast<const char*>(&version), sizeof(version));
    uint8_t mode_byte = static_cast<uint8_t>(mode);
    out.write(reinterpret_cast<const char*>(&mode_byte), sizeof(mode_byte));
    out.write(reinterpret_cast<const char*>(&dim), sizeof(dim));
    uint64_t count = records.size();
    out.write(reinterpret_cast<const char*>(&count), sizeof(count));
    for (const auto& r : records) put_record(out, r.scene_id, r.key, r.vector);
    if (!out) fail_data("write failure on embedding table: " + out_path);

    json manifest{{"mode", mode == ExportMode::object ? "object"
                           : mode == ExportMode::path ? "path"
                                                      : "graph"},
                  {"dim", dim},
                  {"count", count},
                  {"model_hash", hex64(model_hash)},
                  {"corpus_hash", hex64(corpus.manifest.corpus_hash)},
                  {"eval_seed", cfg.seed}};
    std::ofstream mout(out_path + ".manifest.json", std::ios::trunc);
    mout << manifest.dump(2) << "\n";
}

std::vector<EmbeddingRecord> read_embedding_table(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail_data("cannot read embedding table: " + path);
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, "SGEB", 4) != 0)
        fail_data("bad embedding table magic: " + path);
    uint16_t version = 0;
    uint8_t mode = 0;
    uint32_t dim = 0;
    uint64_t count = 0;
    in.read(reinterpret_cast<char*>(&version), sizeof(version));
    in.read(reinterpret_cast<char*>(&mode), sizeof(mode));
    in.read(reinterpret_cast<char*>(&dim), sizeof(dim));
    in.read(reinterpret_cast<char*>(&count), sizeof(count));
    if (!in || version != 1 || dim == 0 || dim > (1u << 20))
        fail_data("bad embedding table header: " + path);

    std::vector<EmbeddingRecord> records;
    records.reserve(count);
    auto get_str = [&]() {
        uint16_t len = 0;
        in.read(reinterpret_cast<char*>(&len), sizeof(len));
        std::string s(len, '\0');
        in.read(s.data(), len);
        return s;
    };
    for (uint64_t i = 0; i < count; ++i) {
        EmbeddingRecord r;
        r.scene_id = get_str();
        r.key = get_str();
        r.vector.resize(dim);
        in.read(reinterpret_cast<char*>(r.vector.data()),
                static_cast<std::streamsize>(dim * sizeof(float)));
        if (!in) fail_data("truncated embedding table: " + path);
        records.push_back(std::move(r));
    }
    return records;
}

}  // namespace sgcl
