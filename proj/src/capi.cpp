#include "dfsel.h"

#include <cstring>
#include <fstream>
#include <string>

#include "dfsel/dataset.hpp"
#include "dfsel/evaluate.hpp"
#include "dfsel/features.hpp"
#include "dfsel/heuristic.hpp"
#include "dfsel/qnet.hpp"
#include "dfsel/sim.hpp"
#include "dfsel/sparse.hpp"
#include "dfsel/tree.hpp"

struct dfsel_matrix {
    dfsel::SparseMatrix m;
};
struct dfsel_dataset {
    dfsel::Dataset d;
};
struct dfsel_tree {
    dfsel::DecisionTree t;
};
struct dfsel_qmodel {
    dfsel::QModel m;
};

namespace {

thread_local std::string g_last_error;

void set_error(const std::string& msg) { g_last_error = msg; }

template <typename Fn>
dfsel_status guarded(Fn&& fn) {
    try {
        fn();
        return DFSEL_OK;
    } catch (const dfsel::ParseError& e) {
        set_error(e.what());
        return DFSEL_ERR_PARSE;
    } catch (const dfsel::IoError& e) {
        set_error(e.what());
        return DFSEL_ERR_IO;
    } catch (const dfsel::DimensionError& e) {
        set_error(e.what());
        return DFSEL_ERR_DIMENSION;
    } catch (const std::invalid_argument& e) {
        set_error(e.what());
        return DFSEL_ERR_INVALID_ARGUMENT;
    } catch (const std::exception& e) {
        set_error(e.what());
        return DFSEL_ERR_INTERNAL;
    }
}

dfsel_status require(bool ok, const char* msg) {
    if (ok) return DFSEL_OK;
    set_error(msg);
    return DFSEL_ERR_INVALID_ARGUMENT;
}

dfsel::SimConfig to_config(const dfsel_sim_config* cfg) {
    dfsel::SimConfig c;
    if (cfg) {
        c.num_pes = cfg->num_pes;
        c.mem_block_rows = cfg->mem_block_rows;
        c.resident_blocks = cfg->resident_blocks;
        c.miss_penalty_cycles = cfg->miss_penalty_cycles;
    }
    return c;
}

void fill_result(const dfsel::SimResult& r, dfsel_sim_result* out) {
    out->dataflow = static_cast<int>(r.dataflow);
    out->latency_cycles = r.latency_cycles;
    out->pe_utilization = r.pe_utilization;
    out->total_work_cycles = r.total_work_cycles;
    out->result_nnz = r.result.nnz();
}

dfsel::FeatureVector to_features(const double raw[DFSEL_FEATURE_COUNT]) {
    dfsel::FeatureVector f;
    for (int i = 0; i < dfsel::feature::kCount; ++i) f[i] = raw[i];
    return f;
}

dfsel::TreeParams to_tree_params(const dfsel_tree_params* params, const dfsel::Dataset* train) {
    dfsel::TreeParams p;
    if (params) {
        p.max_depth = params->max_depth;
        p.min_samples_leaf = params->min_samples_leaf;
        if (params->use_all_features) {
            p.feature_subset.resize(dfsel::feature::kCount);
            for (int i = 0; i < dfsel::feature::kCount; ++i) p.feature_subset[i] = i;
        }
        if (!params->auto_class_weights) {
            for (int c = 0; c < 3; ++c) p.class_weights[c] = params->class_weights[c];
            return p;
        }
    }
    if (train) p.class_weights = dfsel::class_weights(*train);
    return p;
}

dfsel::DqnHyper to_hyper(const dfsel_dqn_hyper* hyper) {
    dfsel::DqnHyper h;
    if (hyper) {
        h.epsilon_start = hyper->epsilon_start;
        h.epsilon_decay = hyper->epsilon_decay;
        h.epsilon_min = hyper->epsilon_min;
        if (hyper->replay_capacity < 1)
            throw std::invalid_argument("replay_capacity must be >= 1");
        h.replay_capacity = static_cast<std::size_t>(hyper->replay_capacity);
        h.batch_size = hyper->batch_size;
        h.learning_rate = hyper->learning_rate;
        h.reward_weight = hyper->reward_weight;
        h.episodes = hyper->episodes;
        h.hidden_dim = hyper->hidden_dim;
        h.seed = hyper->seed;
    }
    return h;
}

void write_text_file(const char* path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw dfsel::IoError(std::string("cannot open '") + path + "' for writing");
    out << text;
    if (!out) throw dfsel::IoError(std::string("write to '") + path + "' failed");
}

}  // namespace

extern "C" {

const char* dfsel_last_error(void) { return g_last_error.c_str(); }

const char* dfsel_feature_name(int index) {
    if (index < 0 || index >= dfsel::feature::kCount) return nullptr;
    return dfsel::feature::names()[static_cast<size_t>(index)].c_str();
}

void dfsel_sim_config_default(dfsel_sim_config* cfg) {
    if (!cfg) return;
    dfsel::SimConfig c;
    cfg->num_pes = c.num_pes;
    cfg->mem_block_rows = c.mem_block_rows;
    cfg->resident_blocks = c.resident_blocks;
    cfg->miss_penalty_cycles = c.miss_penalty_cycles;
}

dfsel_status dfsel_simulate(const dfsel_matrix* a, const dfsel_matrix* b, int dataflow,
                            const dfsel_sim_config* cfg, dfsel_sim_result* out) {
    if (auto s = require(a && b && out, "null argument")) return s;
    if (auto s = require(dataflow >= -1 && dataflow <= 2, "dataflow must be -1, 0, 1 or 2"))
        return s;
    return guarded([&] {
        const dfsel::SimConfig c = to_config(cfg);
        if (dataflow < 0) {
            auto rs = dfsel::simulate_all(a->m, b->m, c);
            for (int d = 0; d < 3; ++d) fill_result(rs[d], &out[d]);
            return;
        }
        using dfsel::Layout;
        dfsel::SimResult r;
        switch (dataflow) {
            case 0:
                r = dfsel::simulate_inner(dfsel::convert(a->m, Layout::CSR),
                                          dfsel::convert(b->m, Layout::CSC), c);
                break;
            case 1:
                r = dfsel::simulate_outer(dfsel::convert(a->m, Layout::CSC),
                                          dfsel::convert(b->m, Layout::CSR), c);
                break;
            default:
                r = dfsel::simulate_rowwise(dfsel::convert(a->m, Layout::CSR),
                                            dfsel::convert(b->m, Layout::CSR), c);
                break;
        }
        fill_result(r, out);
    });
}

dfsel_status dfsel_matrix_read_mtx(const char* path, dfsel_matrix** out) {
    if (auto s = require(path && out, "null argument")) return s;
    return guarded([&] { *out = new dfsel_matrix{dfsel::read_matrix_market_file(path)}; });
}

dfsel_status dfsel_matrix_parse_mtx(const char* text, dfsel_matrix** out) {
    if (auto s = require(text && out, "null argument")) return s;
    return guarded(
        [&] { *out = new dfsel_matrix{dfsel::parse_matrix_market(std::string(text))}; });
}

dfsel_status dfsel_matrix_write_mtx(const dfsel_matrix* m, const char* path) {
    if (auto s = require(m && path, "null argument")) return s;
    return guarded([&] { dfsel::write_matrix_market_file(m->m, path); });
}

dfsel_status dfsel_matrix_random(int64_t rows, int64_t cols, double density, const char* pattern,
                                 uint64_t seed, dfsel_matrix** out) {
    if (auto s = require(pattern && out, "null argument")) return s;
    return guarded([&] {
        *out = new dfsel_matrix{
            dfsel::random_sparse(rows, cols, density, dfsel::pattern_from_name(pattern), seed)};
    });
}

dfsel_status dfsel_trim_to_fit(const dfsel_matrix* a, const dfsel_matrix* b, dfsel_matrix** a_out,
                               dfsel_matrix** b_out) {
    if (auto s = require(a && b && a_out && b_out, "null argument")) return s;
    return guarded([&] {
        auto [ta, tb] = dfsel::trim_to_fit(a->m, b->m);
        *a_out = new dfsel_matrix{std::move(ta)};
        *b_out = new dfsel_matrix{std::move(tb)};
    });
}

int64_t dfsel_matrix_rows(const dfsel_matrix* m) { return m ? m->m.rows : -1; }
int64_t dfsel_matrix_cols(const dfsel_matrix* m) { return m ? m->m.cols : -1; }
int64_t dfsel_matrix_nnz(const dfsel_matrix* m) { return m ? m->m.nnz() : -1; }
void dfsel_matrix_free(dfsel_matrix* m) { delete m; }

dfsel_status dfsel_extract_features(const dfsel_matrix* a, const dfsel_matrix* b,
                                    const dfsel_sim_config* cfg,
                                    double out[DFSEL_FEATURE_COUNT]) {
    if (auto s = require(a && b && out, "null argument")) return s;
    return guarded([&] {
        const dfsel::FeatureVector f = dfsel::extract_features(a->m, b->m, to_config(cfg));
        for (int i = 0; i < dfsel::feature::kCount; ++i) out[i] = f[i];
    });
}

dfsel_status dfsel_scaler_apply_file(const char* scaler_path,
                                     const double raw[DFSEL_FEATURE_COUNT],
                                     double out[DFSEL_FEATURE_COUNT]) {
    if (auto s = require(scaler_path && raw && out, "null argument")) return s;
    return guarded([&] {
        const dfsel::Scaler scaler = dfsel::load_scaler(scaler_path);
        const dfsel::FeatureVector scaled = scaler.apply(to_features(raw));
        for (int i = 0; i < dfsel::feature::kCount; ++i) out[i] = scaled[i];
    });
}

dfsel_status dfsel_dataset_build(const char* manifest_path, const dfsel_sim_config* cfg,
                                 int64_t block_rows, int64_t block_cols, int jobs,
                                 dfsel_dataset** out) {
    if (auto s = require(manifest_path && out, "null argument")) return s;
    return guarded([&] {
        auto pairs = dfsel::load_manifest(manifest_path);
        *out = new dfsel_dataset{
            dfsel::build_dataset(pairs, to_config(cfg), {block_rows, block_cols}, jobs)};
    });
}

dfsel_status dfsel_dataset_load_csv(const char* path, dfsel_dataset** out) {
    if (auto s = require(path && out, "null argument")) return s;
    return guarded([&] { *out = new dfsel_dataset{dfsel::load_dataset_csv(path)}; });
}

dfsel_status dfsel_dataset_save_csv(const dfsel_dataset* d, const char* path) {
    if (auto s = require(d && path, "null argument")) return s;
    return guarded([&] { dfsel::save_dataset_csv(d->d, path); });
}

dfsel_status dfsel_dataset_split(const dfsel_dataset* d, double train_fraction, uint64_t seed,
                                 dfsel_dataset** train_out, dfsel_dataset** eval_out) {
    if (auto s = require(d && train_out && eval_out, "null argument")) return s;
    return guarded([&] {
        auto [train, eval] = dfsel::split_train_eval(d->d, train_fraction, seed);
        *train_out = new dfsel_dataset{std::move(train)};
        *eval_out = new dfsel_dataset{std::move(eval)};
    });
}

int64_t dfsel_dataset_rows(const dfsel_dataset* d) {
    return d ? static_cast<int64_t>(d->d.rows.size()) : -1;
}
void dfsel_dataset_free(dfsel_dataset* d) { delete d; }

void dfsel_tree_params_default(dfsel_tree_params* params) {
    if (!params) return;
    params->max_depth = 9;
    params->min_samples_leaf = 1;
    params->use_all_features = 0;
    params->auto_class_weights = 1;
    params->class_weights[0] = params->class_weights[1] = params->class_weights[2] = 1.0;
}

dfsel_status dfsel_tree_train(const dfsel_dataset* train, const dfsel_tree_params* params,
                              dfsel_tree** out) {
    if (auto s = require(train && out, "null argument")) return s;
    return guarded(
        [&] { *out = new dfsel_tree{dfsel::fit_tree(train->d, to_tree_params(params, &train->d))}; });
}

dfsel_status dfsel_tree_save(const dfsel_tree* t, const char* path) {
    if (auto s = require(t && path, "null argument")) return s;
    return guarded([&] { dfsel::save_tree(t->t, path); });
}

dfsel_status dfsel_tree_load(const char* path, dfsel_tree** out) {
    if (auto s = require(path && out, "null argument")) return s;
    return guarded([&] { *out = new dfsel_tree{dfsel::load_tree(path)}; });
}

dfsel_status dfsel_tree_predict(const dfsel_tree* t, const double raw[DFSEL_FEATURE_COUNT],
                                int* label_out) {
    if (auto s = require(t && raw && label_out, "null argument")) return s;
    return guarded([&] { *label_out = static_cast<int>(t->t.predict_raw(to_features(raw))); });
}

dfsel_status dfsel_tree_accuracy(const dfsel_tree* t, const dfsel_dataset* d, double* out) {
    if (auto s = require(t && d && out, "null argument")) return s;
    return guarded([&] {
        if (d->d.rows.empty()) throw std::invalid_argument("accuracy of an empty dataset");
        std::int64_t correct = 0;
        for (const auto& r : d->d.rows)
            if (t->t.predict_raw(r.features) == r.label) ++correct;
        *out = static_cast<double>(correct) / static_cast<double>(d->d.rows.size());
    });
}

dfsel_status dfsel_tree_importance(const dfsel_tree* t, const dfsel_dataset* train,
                                   double out[DFSEL_FEATURE_COUNT]) {
    if (auto s = require(t && train && out, "null argument")) return s;
    return guarded([&] {
        auto imp = dfsel::feature_importance(t->t, train->d);
        for (int i = 0; i < dfsel::feature::kCount; ++i) out[i] = imp[i];
    });
}

dfsel_status dfsel_tree_export_rules(const dfsel_tree* t, int depth_limit, const char* path) {
    if (auto s = require(t && path, "null argument")) return s;
    return guarded([&] { write_text_file(path, dfsel::export_rules(t->t, depth_limit)); });
}

void dfsel_tree_free(dfsel_tree* t) { delete t; }

dfsel_status dfsel_cross_validate(const dfsel_dataset* d, int k,
                                  const dfsel_tree_params* params, uint64_t seed,
                                  double* fold_acc, int max_folds, double* mean_out) {
    if (auto s = require(d && mean_out, "null argument")) return s;
    return guarded([&] {
        // per-fold class weights are always refitted inside kfold_cv
        const dfsel::TreeParams p = to_tree_params(params, nullptr);
        const dfsel::CvResult cv = dfsel::kfold_cv(d->d, k, p, seed);
        if (fold_acc) {
            for (int f = 0; f < max_folds && f < static_cast<int>(cv.fold_accuracy.size()); ++f)
                fold_acc[f] = cv.fold_accuracy[static_cast<size_t>(f)];
        }
        *mean_out = cv.mean_accuracy;
    });
}

void dfsel_dqn_hyper_default(dfsel_dqn_hyper* hyper) {
    if (!hyper) return;
    dfsel::DqnHyper h;
    hyper->epsilon_start = h.epsilon_start;
    hyper->epsilon_decay = h.epsilon_decay;
    hyper->epsilon_min = h.epsilon_min;
    hyper->replay_capacity = static_cast<int64_t>(h.replay_capacity);
    hyper->batch_size = h.batch_size;
    hyper->learning_rate = h.learning_rate;
    hyper->reward_weight = h.reward_weight;
    hyper->episodes = h.episodes;
    hyper->hidden_dim = h.hidden_dim;
    hyper->seed = h.seed;
}

dfsel_status dfsel_qmodel_train(const dfsel_dataset* train, const dfsel_dqn_hyper* hyper,
                                dfsel_qmodel** out) {
    if (auto s = require(train && out, "null argument")) return s;
    return guarded([&] { *out = new dfsel_qmodel{dfsel::train_dqn(train->d, to_hyper(hyper))}; });
}

dfsel_status dfsel_qmodel_save(const dfsel_qmodel* m, const char* path) {
    if (auto s = require(m && path, "null argument")) return s;
    return guarded([&] { dfsel::save_qmodel(m->m, path); });
}

dfsel_status dfsel_qmodel_load(const char* path, dfsel_qmodel** out) {
    if (auto s = require(path && out, "null argument")) return s;
    return guarded([&] { *out = new dfsel_qmodel{dfsel::load_qmodel(path)}; });
}

dfsel_status dfsel_qmodel_predict(const dfsel_qmodel* m, const double raw[DFSEL_FEATURE_COUNT],
                                  int* label_out) {
    if (auto s = require(m && raw && label_out, "null argument")) return s;
    return guarded([&] { *label_out = static_cast<int>(m->m.predict_raw(to_features(raw))); });
}

dfsel_status dfsel_qmodel_accuracy(const dfsel_qmodel* m, const dfsel_dataset* d, double* out) {
    if (auto s = require(m && d && out, "null argument")) return s;
    return guarded([&] {
        if (d->d.rows.empty()) throw std::invalid_argument("accuracy of an empty dataset");
        std::int64_t correct = 0;
        for (const auto& r : d->d.rows)
            if (m->m.predict_raw(r.features) == r.label) ++correct;
        *out = static_cast<double>(correct) / static_cast<double>(d->d.rows.size());
    });
}

int64_t dfsel_qmodel_param_count(const dfsel_qmodel* m) { return m ? m->m.net.param_count() : -1; }

void dfsel_qmodel_free(dfsel_qmodel* m) { delete m; }

int dfsel_heuristic_predict(const double scaled[DFSEL_FEATURE_COUNT]) {
    return static_cast<int>(dfsel::heuristic_predict(to_features(scaled)));
}

dfsel_status dfsel_heuristic_write_rules(const char* path) {
    if (auto s = require(path != nullptr, "null argument")) return s;
    return guarded([&] { write_text_file(path, dfsel::heuristic_rules_text()); });
}

dfsel_status dfsel_evaluate(const char* selector, const char* model_path,
                            const dfsel_dataset* eval, const char* report_csv_path,
                            dfsel_metrics* out) {
    if (auto s = require(selector && eval && out, "null argument")) return s;
    return guarded([&] {
        const std::string kind(selector);
        dfsel::Selector sel;
        dfsel::DecisionTree tree;
        dfsel::QModel qmodel;
        if (kind == "dt") {
            if (!model_path) throw std::invalid_argument("selector 'dt' needs a model file");
            tree = dfsel::load_tree(model_path);
            sel = [&tree](const dfsel::DatasetRow& r) { return tree.predict_raw(r.features); };
        } else if (kind == "rl") {
            if (!model_path) throw std::invalid_argument("selector 'rl' needs a model file");
            qmodel = dfsel::load_qmodel(model_path);
            sel = [&qmodel](const dfsel::DatasetRow& r) { return qmodel.predict_raw(r.features); };
        } else if (kind == "heuristic") {
            const dfsel::Dataset& ds = eval->d;
            sel = [&ds](const dfsel::DatasetRow& r) {
                return dfsel::heuristic_predict(ds.scaled(r));
            };
        } else if (kind == "oracle") {
            sel = dfsel::oracle_selector();
        } else if (kind == "ip" || kind == "op" || kind == "rw") {
            sel = dfsel::fixed_selector(dfsel::dataflow_from_name(kind));
        } else {
            throw std::invalid_argument("unknown selector '" + kind +
                                        "' (expected dt, rl, heuristic, oracle, ip, op or rw)");
        }

        const dfsel::SelectorMetrics m = dfsel::evaluate_selector(sel, eval->d);
        out->accuracy = m.accuracy;
        for (int b = 0; b < 4; ++b) {
            out->speedup_vs[b] = m.speedup_vs[b];
            out->mean_pair_speedup[b] = m.mean_pair_speedup[b];
        }
        out->total_cycles = m.total_cycles;
        if (report_csv_path) dfsel::write_report_csv(m, report_csv_path);
    });
}

dfsel_status dfsel_storage_report(const char* const* paths, int n, const char* out_csv) {
    if (auto s = require(paths && n >= 0, "null argument")) return s;
    return guarded([&] {
        std::vector<std::string> p(paths, paths + n);
        auto sizes = dfsel::storage_report(p);
        if (out_csv) dfsel::write_storage_csv(sizes, out_csv);
    });
}

dfsel_status dfsel_sweep_report(const dfsel_dataset* d, const char* out_csv) {
    if (auto s = require(d && out_csv, "null argument")) return s;
    return guarded([&] { dfsel::write_sweep_csv(d->d, out_csv); });
}

}  // extern "C"
