#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "sgcl/training.hpp"

namespace sgcl {

struct EvalConfig {
    int top_k = 5;
    int eval_seeds = 3;      // index-construction sampling seeds to average
    int path_budget = 4;     // sampled paths per (scene, k) for indexing
    std::vector<int> k_set = {2, 3};
    uint64_t seed = 7;
    int probe_seeds = 5;
    int probe_epochs = 150;
    double probe_lr = 0.05;
    int probe_max_examples = 8000;
    std::array<double, 3> relevance_thresholds = {0.2, 0.5, 0.8};

    void validate() const;
};

// --- retrieval -------------------------------------------------------------

struct RetrievalIndex {
    std::vector<std::string> scene_ids;              // unique
    std::vector<std::vector<float>> embeddings;      // unit-norm rows
};

struct RankedResult {
    std::string scene_id;
    double similarity = 0.0;
};

// Descending cosine similarity, ties broken by ascending scene_id; the query
// scene id is excluded from candidates.
std::vector<RankedResult> retrieve(const RetrievalIndex& index,
                                   const std::vector<float>& query,
                                   const std::string& exclude_id, int top_k = 5);

// DCG = sum_i rel_i / log2(i+1) over the first k ranks; NDCG = DCG / IDCG
// with the 0/0 case defined as 0. `ideal` is sorted descending internally.
double ndcg_at_k(const std::vector<double>& ranked_relevances,
                 std::vector<double> ideal_relevances, int k = 5);

// --- graded relevance oracle ------------------------------------------------

// Relevance between scenes from the multiset Jaccard of their oracle relation
// triples abstracted to (subject label, relation, object label). Grades 0..3
// at the configured thresholds; a scene vs itself grades 3.
class RelevanceOracle {
public:
    static RelevanceOracle build(const Corpus& corpus,
                                 const std::vector<size_t>& scene_indices);

    double jaccard(size_t a, size_t b) const;  // positions within build() order
    int grade(size_t a, size_t b, const std::array<double, 3>& thresholds) const;
    size_t size() const { return triples_.size(); }

private:
    std::vector<std::vector<std::array<int, 3>>> triples_;  // sorted multisets
};

// --- index construction ------------------------------------------------------

// Graph-level embedding: l2-normalized mean of sampled k-hop path embeddings.
// Scenes without any path (for every k) are skipped.
RetrievalIndex build_learned_index(const std::vector<SceneData>& data,
                                   const std::vector<size_t>& scene_indices,
                                   model::Net& net, const EvalConfig& cfg,
                                   int seed_index);

// Raw-descriptor baseline: l2-normalized mean of flattened edge banners.
RetrievalIndex build_sfb_index(const std::vector<SceneData>& data,
                               const std::vector<size_t>& scene_indices);

// --- content-based graph retrieval -------------------------------------------

struct CbgrMethodResult {
    std::string method;
    double mean_ndcg = 0.0;                // averaged over eval seeds
    std::vector<double> per_seed;
    std::vector<double> per_query;         // averaged over seeds, query order
};

struct CbgrReport {
    std::vector<std::string> query_ids;
    std::vector<CbgrMethodResult> methods;  // learned, random_init, raw_sfb
};

// Runs retrieval for every held-out query against the three index modes.
// Throws "insufficient corpus" when fewer than 6 scenes are indexed.
CbgrReport evaluate_cbgr(const Corpus& corpus, const std::vector<SceneData>& data,
                         const std::vector<size_t>& heldout, model::Net& trained,
                         model::Net& random_init, const EvalConfig& cfg);

void write_cbgr_report(const std::string& out_dir, const CbgrReport& report);

// --- linear-probe spatial relationship recognition ---------------------------

struct SrrClassRow {
    int relation_id = 0;
    std::string name;
    int support_train = 0;
    int support_test = 0;
    double top1 = 0.0;  // averaged over probe seeds
    double top2 = 0.0;
};

struct SrrMethodResult {
    std::string method;
    double overall_top1 = 0.0;
    double overall_top2 = 0.0;
    std::vector<double> per_seed_top1;
    std::vector<SrrClassRow> per_class;
};

struct SrrReport {
    std::vector<SrrMethodResult> methods;  // trained, random_init
    double majority_accuracy = 0.0;
    int majority_class = 0;
    std::vector<int> excluded_classes;     // absent from the train split
};

// Probe: one linear layer + softmax over frozen pair features (concatenated
// endpoint node embeddings, subject first), trained on the train split and
// scored on the held-out split.
SrrReport linear_probe_srr(const Corpus& corpus, const std::vector<SceneData>& data,
                           const std::vector<size_t>& train_idx,
                           const std::vector<size_t>& test_idx, model::Net& trained,
                           model::Net& random_init, const EvalConfig& cfg);

void write_srr_report(const std::string& out_dir, const SrrReport& report);

// --- embedding export ---------------------------------------------------------

enum class ExportMode { object, path, graph };

ExportMode export_mode_from_name(const std::string& name);

// Binary table: 'SGEB' u16 version, u8 mode, u32 dim, u64 count, then
// records (u16 scene-id length, bytes, u16 key length, bytes, dim f32).
// Accompanied by <path>.manifest.json. Re-export is bit-identical.
void export_embeddings(const Corpus& corpus, const std::vector<SceneData>& data,
                       model::Net& net, ExportMode mode, const EvalConfig& cfg,
                       const std::string& out_path, uint64_t model_hash);

struct EmbeddingRecord {
    std::string scene_id;
    std::string key;  // object id or path signature
    std::vector<float> vector;
};

std::vector<EmbeddingRecord> read_embedding_table(const std::string& path);

}  // namespace sgcl
