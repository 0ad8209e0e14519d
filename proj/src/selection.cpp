#include "sigfeat/selection.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <mutex>
#include <numeric>
#include <set>
#include <sstream>
#include <unordered_map>

namespace sigfeat {

// ---- expert weights ----------------------------------------------------------

bool WeightSelector::matches(const ProvenanceRecord& rec) const {
    if (domain && *domain != domain_name(rec.domain)) return false;
    if (transform && *transform != transform_name(rec.transform)) return false;
    if (statistic && *statistic != rec.statistic) return false;
    if (level && *level != rec.level) return false;
    return domain || transform || statistic || level;
}

std::string WeightSelector::describe() const {
    std::ostringstream os;
    bool first = true;
    auto add = [&](const std::string& k, const std::string& v) {
        os << (first ? "" : ",") << k << "=" << v;
        first = false;
    };
    if (domain) add("domain", *domain);
    if (transform) add("transform", *transform);
    if (statistic) add("statistic", *statistic);
    if (level) add("level", std::to_string(*level));
    if (first) os << "<empty>";
    return os.str();
}

double ExpertWeights::weight_for(const ProvenanceRecord& rec) const {
    double w = 1.0;
    for (const auto& e : entries)
        if (e.selector.matches(rec)) w *= e.weight;
    return w;
}

std::vector<std::size_t> ExpertWeights::unmatched(const MappingTable& table) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < entries.size(); ++i) {
        bool hit = false;
        for (const auto& rec : table.records)
            if (entries[i].selector.matches(rec)) {
                hit = true;
                break;
            }
        if (!hit) out.push_back(i);
    }
    return out;
}

void ExpertWeights::validate() const {
    for (const auto& e : entries) {
        if (!(e.weight > 0.0) || e.weight > 10.0)
            throw ConfigError("expert weight must be in (0, 10]: got " + std::to_string(e.weight));
        if (!e.selector.domain && !e.selector.transform && !e.selector.statistic && !e.selector.level)
            throw ConfigError("expert weight selector is empty");
    }
}

bool ExpertWeights::all_neutral() const {
    for (const auto& e : entries)
        if (e.weight != 1.0) return false;
    return true;
}

void SelectionConfig::validate() const {
    if (k < 2) throw ConfigError("k must be >= 2");
    if (k > 20) throw ConfigError("k capped at 20 (exhaustive search is impractical beyond)");
    if (!(tau > 0.0 && tau <= 1.0)) throw ConfigError("tau must be in (0, 1]");
    if (prefilter_p < 1) throw ConfigError("prefilter_p must be >= 1");
    if (bins == 1) throw ConfigError("bins must be 0 (auto) or >= 2");
    expert_weights.validate();
}

// ---- filter rankers ------------------------------------------------------------

std::vector<std::size_t> mrmr_rank(const std::vector<std::vector<int>>& columns,
                                   const std::vector<int>& y, std::size_t m,
                                   const std::vector<double>& relevance_weights) {
    const std::size_t n_feat = columns.size();
    m = std::min(m, n_feat);
    std::vector<double> relevance(n_feat);
    for (std::size_t f = 0; f < n_feat; ++f) {
        double w = relevance_weights.empty() ? 1.0 : relevance_weights[f];
        relevance[f] = w * mutual_information(columns[f], y);
    }

    std::vector<std::size_t> order;
    std::vector<bool> used(n_feat, false);
    std::vector<double> redundancy_sum(n_feat, 0.0);
    while (order.size() < m) {
        std::size_t best = n_feat;
        double best_score = -std::numeric_limits<double>::infinity();
        for (std::size_t f = 0; f < n_feat; ++f) {
            if (used[f]) continue;
            double score = relevance[f];
            if (!order.empty()) score -= redundancy_sum[f] / static_cast<double>(order.size());
            if (score > best_score) {
                best_score = score;
                best = f;
            }
        }
        if (best == n_feat) break;
        used[best] = true;
        order.push_back(best);
        for (std::size_t f = 0; f < n_feat; ++f)
            if (!used[f]) redundancy_sum[f] += mutual_information(columns[f], columns[best]);
    }
    return order;
}

double rough_set_gamma(const std::vector<std::vector<int>>& columns,
                       const std::vector<std::size_t>& subset, const std::vector<int>& y) {
    if (y.empty()) return 0.0;
    const std::size_t n = y.size();
    // group rows by their value tuple under the subset
    std::unordered_map<std::string, std::pair<int, bool>> groups;  // tuple -> (class, pure)
    std::vector<std::string> keys(n);
    for (std::size_t i = 0; i < n; ++i) {
        std::string key;
        for (auto f : subset) {
            key += std::to_string(columns[f][i]);
            key += ',';
        }
        keys[i] = std::move(key);
        auto [it, inserted] = groups.try_emplace(keys[i], std::make_pair(y[i], true));
        if (!inserted && it->second.first != y[i]) it->second.second = false;
    }
    std::size_t positive = 0;
    for (std::size_t i = 0; i < n; ++i)
        if (groups[keys[i]].second) ++positive;
    return static_cast<double>(positive) / static_cast<double>(n);
}

std::vector<std::size_t> mrms_rank(const std::vector<std::vector<int>>& columns,
                                   const std::vector<int>& y, std::size_t m,
                                   const std::vector<double>& relevance_weights) {
    const std::size_t n_feat = columns.size();
    m = std::min(m, n_feat);
    std::vector<double> gamma_single(n_feat);
    for (std::size_t f = 0; f < n_feat; ++f) gamma_single[f] = rough_set_gamma(columns, {f}, y);

    auto weighted_gamma = [&](std::size_t f) {
        double w = relevance_weights.empty() ? 1.0 : relevance_weights[f];
        return w * gamma_single[f];
    };

    std::vector<std::size_t> order;
    std::vector<bool> used(n_feat, false);
    std::vector<double> significance_sum(n_feat, 0.0);
    while (order.size() < m) {
        std::size_t best = n_feat;
        double best_score = -std::numeric_limits<double>::infinity();
        for (std::size_t f = 0; f < n_feat; ++f) {
            if (used[f]) continue;
            double score = weighted_gamma(f);
            if (!order.empty()) score += significance_sum[f] / static_cast<double>(order.size());
            if (score > best_score) {
                best_score = score;
                best = f;
            }
        }
        if (best == n_feat) break;
        used[best] = true;
        order.push_back(best);
        for (std::size_t f = 0; f < n_feat; ++f)
            if (!used[f])
                significance_sum[f] += rough_set_gamma(columns, {f, best}, y) - gamma_single[best];
    }
    return order;
}

// ---- fold view -----------------------------------------------------------------

FoldView FoldView::make(const FeaturePool& pool, const SignalDataset& dataset, const FoldPlan& plan,
                        int fold) {
    FoldView view;
    view.fold = fold;
    view.pool = &pool;

    std::map<std::int64_t, int> label_of;
    for (const auto& inst : dataset.instances) label_of[inst.instance_id] = inst.label;

    auto fill = [&](Role role, std::vector<std::size_t>& rows, std::vector<int>& labels) {
        for (auto id : plan.ids_with_role(fold, role)) {
            rows.push_back(pool.row_of(id));
            labels.push_back(label_of.at(id));
        }
    };
    fill(Role::Train, view.train_rows, view.y_train);
    fill(Role::Eval, view.eval_rows, view.y_eval);
    fill(Role::Test, view.test_rows, view.y_test);

    Matrix train(view.train_rows.size(), pool.values.cols);
    for (std::size_t r = 0; r < view.train_rows.size(); ++r)
        for (std::size_t c = 0; c < pool.values.cols; ++c)
            train.at(r, c) = pool.values.at(view.train_rows[r], c);
    Standardizer st = Standardizer::fit(train);
    view.std_values = st.apply(pool.values);
    return view;
}

Matrix FoldView::rows_cols(const std::vector<std::size_t>& rows,
                           const std::vector<std::size_t>& cols) const {
    Matrix out(rows.size(), cols.size());
    for (std::size_t r = 0; r < rows.size(); ++r)
        for (std::size_t c = 0; c < cols.size(); ++c) out.at(r, c) = std_values.at(rows[r], cols[c]);
    return out;
}

std::vector<double> FoldView::column_for_key(const std::string& key) const {
    for (const auto& rec : pool->table.records)
        if (rec.canonical_key() == key) return pool->values.column(static_cast<std::size_t>(rec.feature_id));
    throw InternalError("fold " + std::to_string(fold) + " has no column for key " + key);
}

// ---- wrapper ------------------------------------------------------------------

double wrapper_score(const FoldView& view, const std::vector<std::size_t>& columns,
                     const WrapperSpecs& specs, Metric metric) {
    if (columns.empty()) throw InternalError("wrapper_score: empty subset");
    Matrix X_train = view.rows_cols(view.train_rows, columns);
    Matrix X_eval = view.rows_cols(view.eval_rows, columns);
    double best = -1.0;
    for (const auto& spec : specs.specs) {
        Model m = train(spec, X_train, view.y_train);
        MetricReport r = evaluate(m, X_eval, view.y_eval, metric);
        best = std::max(best, r.value);
    }
    return best;
}

namespace {

std::string ids_key(std::vector<std::int64_t> ids) {
    std::sort(ids.begin(), ids.end());
    std::string s;
    for (auto id : ids) {
        s += std::to_string(id);
        s += ',';
    }
    return s;
}

WrapperSpecs tune_wrapper_specs(const FoldView& view, const std::vector<std::size_t>& columns,
                                const SelectionConfig& config, std::uint64_t seed) {
    Matrix X_train = view.rows_cols(view.train_rows, columns);
    Matrix X_eval = view.rows_cols(view.eval_rows, columns);
    WrapperSpecs specs;
    int i = 0;
    for (ClassifierKind kind :
         {ClassifierKind::RandomForest, ClassifierKind::SvmLinear, ClassifierKind::SvmRbf}) {
        specs.specs[static_cast<std::size_t>(i)] =
            tune(kind, X_train, view.y_train, X_eval, view.y_eval, config.tuning, config.metric,
                 derive_seed(seed, 0xb00b5 + static_cast<std::uint64_t>(i)));
        ++i;
    }
    return specs;
}

// tie chain shared by the exhaustive winner and the Fe1/Fe2 argmax:
// higher primary, then higher secondary, then fewer features, then
// lexicographically smaller id/key set.
template <typename SetT>
bool better_candidate(double primary_a, double secondary_a, const SetT& set_a, double primary_b,
                      double secondary_b, const SetT& set_b) {
    if (primary_a != primary_b) return primary_a > primary_b;
    if (secondary_a != secondary_b) return secondary_a > secondary_b;
    if (set_a.size() != set_b.size()) return set_a.size() < set_b.size();
    return set_a < set_b;
}

}  // namespace

LevelSelection select_for_level(const FeaturePool& pool, int level, const FoldView& view,
                                const SelectionConfig& config, std::uint64_t seed, unsigned threads) {
    LevelSelection out;
    out.rankings.fold = view.fold;
    out.rankings.level = level;

    // eligible columns: everything not flagged constant on this fold's Train
    std::vector<std::size_t> eligible;
    for (const auto& rec : pool.table.records) {
        bool constant = std::find(rec.flags.begin(), rec.flags.end(), "constant_train") != rec.flags.end();
        if (!constant) eligible.push_back(static_cast<std::size_t>(rec.feature_id));
    }
    if (eligible.empty()) throw DataError("no usable feature columns (all constant on Train)");

    // discretize on Train
    std::size_t bins = config.bins > 0 ? config.bins : auto_bin_count(view.train_rows.size());
    std::vector<std::vector<int>> disc(eligible.size());
    std::vector<double> mi(eligible.size());
    std::vector<double> train_vals(view.train_rows.size());
    for (std::size_t e = 0; e < eligible.size(); ++e) {
        for (std::size_t r = 0; r < view.train_rows.size(); ++r)
            train_vals[r] = pool.values.at(view.train_rows[r], eligible[e]);
        Discretizer d = Discretizer::fit(train_vals, bins);
        disc[e] = d.apply(train_vals);
        mi[e] = mutual_information(disc[e], view.y_train);
    }

    // stage 1: univariate prefilter to top-P
    std::vector<std::size_t> pre_idx(eligible.size());
    std::iota(pre_idx.begin(), pre_idx.end(), 0);
    std::stable_sort(pre_idx.begin(), pre_idx.end(), [&](std::size_t a, std::size_t b) {
        if (mi[a] != mi[b]) return mi[a] > mi[b];
        return eligible[a] < eligible[b];
    });
    if (pre_idx.size() > config.prefilter_p) pre_idx.resize(config.prefilter_p);
    std::sort(pre_idx.begin(), pre_idx.end());  // keep id order for rankers

    std::vector<std::vector<int>> cols;
    std::vector<double> weights;
    std::vector<std::size_t> col_feature;  // ranker column -> feature id
    for (auto e : pre_idx) {
        cols.push_back(disc[e]);
        col_feature.push_back(eligible[e]);
        weights.push_back(
            config.expert_weights.weight_for(pool.table.by_id(static_cast<std::int64_t>(eligible[e]))));
    }

    // stage 2: the two filter rankers
    std::size_t m = std::min<std::size_t>(2 * config.k, cols.size());
    auto mrmr = mrmr_rank(cols, view.y_train, m, weights);
    auto mrms = mrms_rank(cols, view.y_train, m, weights);
    for (auto c : mrmr)
        out.rankings.mrmr_order.push_back(pool.table.by_id(static_cast<std::int64_t>(col_feature[c])).canonical_key());
    for (auto c : mrms)
        out.rankings.mrms_order.push_back(pool.table.by_id(static_cast<std::int64_t>(col_feature[c])).canonical_key());

    // stage 3: union, ordered by feature id
    std::set<std::size_t> union_set;
    for (auto c : mrmr) union_set.insert(col_feature[c]);
    for (auto c : mrms) union_set.insert(col_feature[c]);
    std::vector<std::size_t> union_cols(union_set.begin(), union_set.end());
    for (auto f : union_cols)
        out.rankings.union_keys.push_back(pool.table.by_id(static_cast<std::int64_t>(f)).canonical_key());

    // fixed per-pass classifier specs, tuned once on the union set
    out.wrapper_specs = tune_wrapper_specs(view, union_cols, config, derive_seed(seed, 77));

    std::unordered_map<std::string, double> memo;
    auto scored = [&](const std::vector<std::int64_t>& ids) {
        std::string key = ids_key(ids);
        auto it = memo.find(key);
        if (it != memo.end()) return it->second;
        std::vector<std::size_t> cs(ids.begin(), ids.end());
        double s = wrapper_score(view, cs, out.wrapper_specs, config.metric);
        memo.emplace(std::move(key), s);
        return s;
    };

    // stage 4: wrapper-greedy forward selection down to k
    std::vector<std::int64_t> ranked;
    std::vector<std::size_t> remaining = union_cols;
    while (ranked.size() < config.k && !remaining.empty()) {
        std::size_t best_f = 0;
        double best_s = -std::numeric_limits<double>::infinity();
        std::size_t best_pos = 0;
        for (std::size_t p = 0; p < remaining.size(); ++p) {
            std::vector<std::int64_t> trial = ranked;
            trial.push_back(static_cast<std::int64_t>(remaining[p]));
            double s = scored(trial);
            if (s > best_s) {
                best_s = s;
                best_f = remaining[p];
                best_pos = p;
            }
        }
        ranked.push_back(static_cast<std::int64_t>(best_f));
        remaining.erase(remaining.begin() + static_cast<std::ptrdiff_t>(best_pos));
    }
    out.ranked_ids = ranked;
    for (auto id : ranked) out.rankings.wrapper_ranked.push_back(pool.table.by_id(id).canonical_key());

    // stage 5: exhaustive 2^k - 1 subset evaluation (budgeted)
    const std::size_t kk = ranked.size();
    const std::uint64_t n_subsets = (kk >= 63) ? std::numeric_limits<std::uint64_t>::max()
                                               : ((1ULL << kk) - 1);
    std::vector<std::int64_t> winner_ids;
    double winner_score = -std::numeric_limits<double>::infinity();

    if (n_subsets <= config.c) {
        out.subset_scores.assign(n_subsets + 1, 0.0);
        std::mutex memo_mutex;
        parallel_for(n_subsets, threads, [&](std::size_t i) {
            std::uint64_t mask = i + 1;
            std::vector<std::size_t> cs;
            std::vector<std::int64_t> ids;
            for (std::size_t b = 0; b < kk; ++b)
                if (mask & (1ULL << b)) {
                    cs.push_back(static_cast<std::size_t>(ranked[b]));
                    ids.push_back(ranked[b]);
                }
            {
                std::lock_guard<std::mutex> lock(memo_mutex);
                auto it = memo.find(ids_key(ids));
                if (it != memo.end()) {
                    out.subset_scores[mask] = it->second;
                    return;
                }
            }
            double s = wrapper_score(view, cs, out.wrapper_specs, config.metric);
            out.subset_scores[mask] = s;
            std::lock_guard<std::mutex> lock(memo_mutex);
            memo.emplace(ids_key(ids), s);
        });
        for (std::uint64_t mask = 1; mask <= n_subsets; ++mask) {
            std::vector<std::int64_t> ids;
            for (std::size_t b = 0; b < kk; ++b)
                if (mask & (1ULL << b)) ids.push_back(ranked[b]);
            std::sort(ids.begin(), ids.end());
            double s = out.subset_scores[mask];
            if (winner_ids.empty() ||
                better_candidate(s, s, ids, winner_score, winner_score, winner_ids))
                if (winner_ids.empty() || s > winner_score ||
                    (s == winner_score && (ids.size() < winner_ids.size() ||
                                           (ids.size() == winner_ids.size() && ids < winner_ids)))) {
                    winner_score = s;
                    winner_ids = ids;
                }
        }
    } else {
        // budget exceeded: the greedy path's prefixes stand in for the search
        out.greedy_fallback = true;
        for (std::size_t len = 1; len <= ranked.size(); ++len) {
            std::vector<std::int64_t> prefix(ranked.begin(),
                                             ranked.begin() + static_cast<std::ptrdiff_t>(len));
            double s = scored(prefix);
            std::sort(prefix.begin(), prefix.end());
            if (winner_ids.empty() || s > winner_score ||
                (s == winner_score && (prefix.size() < winner_ids.size() ||
                                       (prefix.size() == winner_ids.size() && prefix < winner_ids)))) {
                winner_score = s;
                winner_ids = prefix;
            }
        }
    }

    out.best_subset_score = winner_score;
    for (auto id : winner_ids) {
        out.best_subset.keys.push_back(pool.table.by_id(id).canonical_key());
        out.best_subset.records.push_back(pool.table.by_id(id));
    }
    // keys sorted together with their records
    std::vector<std::size_t> order(out.best_subset.keys.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return out.best_subset.keys[a] < out.best_subset.keys[b];
    });
    CandidateSubset sorted_subset;
    for (auto o : order) {
        sorted_subset.keys.push_back(out.best_subset.keys[o]);
        sorted_subset.records.push_back(out.best_subset.records[o]);
    }
    out.best_subset = std::move(sorted_subset);
    return out;
}

// ---- cross-fold evaluation -----------------------------------------------------

namespace {

// Materialize a candidate subset on a fold: existing keys map to pool
// columns; ratio features missing from this fold's inventory are rebuilt
// from their parents' columns. Columns are standardized by Train statistics.
Matrix materialize_subset(const FoldView& view, const CandidateSubset& subset,
                          const std::vector<std::size_t>& rows) {
    const FeaturePool& pool = *view.pool;
    std::unordered_map<std::string, std::size_t> col_of;
    for (const auto& rec : pool.table.records)
        col_of[rec.canonical_key()] = static_cast<std::size_t>(rec.feature_id);

    Matrix out(rows.size(), subset.keys.size());
    for (std::size_t c = 0; c < subset.keys.size(); ++c) {
        std::vector<double> column(pool.values.rows);
        auto it = col_of.find(subset.keys[c]);
        if (it != col_of.end()) {
            column = pool.values.column(it->second);
        } else {
            const ProvenanceRecord& rec = subset.records[c];
            if (rec.statistic != "ratio" || rec.parent_keys.size() != 2)
                throw InternalError("cannot materialize key on fold " + std::to_string(view.fold) +
                                    ": " + subset.keys[c]);
            auto pa = col_of.find(rec.parent_keys[0]);
            auto pb = col_of.find(rec.parent_keys[1]);
            if (pa == col_of.end() || pb == col_of.end())
                throw InternalError("ratio parents missing on fold " + std::to_string(view.fold));
            std::vector<double> a = pool.values.column(pa->second);
            std::vector<double> b = pool.values.column(pb->second);
            for (std::size_t r = 0; r < column.size(); ++r)
                column[r] = std::abs(b[r]) < 1e-12 ? 0.0 : a[r] / b[r];
        }
        // standardize with Train statistics of this very column
        double mean = 0.0;
        for (auto r : view.train_rows) mean += column[r];
        mean /= static_cast<double>(view.train_rows.size());
        double var = 0.0;
        for (auto r : view.train_rows) var += (column[r] - mean) * (column[r] - mean);
        var /= static_cast<double>(view.train_rows.size());
        double sd = var > 0.0 ? std::sqrt(var) : 1.0;
        for (std::size_t r = 0; r < rows.size(); ++r) out.at(r, c) = (column[rows[r]] - mean) / sd;
    }
    return out;
}

double eval_subset_on_fold(const FoldView& view, const CandidateSubset& subset,
                           const WrapperSpecs& specs, Metric metric) {
    Matrix X_train = materialize_subset(view, subset, view.train_rows);
    Matrix X_eval = materialize_subset(view, subset, view.eval_rows);
    double best = -1.0;
    for (const auto& spec : specs.specs) {
        Model m = train(spec, X_train, view.y_train);
        best = std::max(best, evaluate(m, X_eval, view.y_eval, metric).value);
    }
    return best;
}

SubsetOutcome make_outcome(const CandidateSubset& subset, const std::vector<double>& eval_by_fold) {
    SubsetOutcome o;
    o.subset = subset;
    o.eval_by_fold = eval_by_fold;
    o.best_fold_value = *std::max_element(eval_by_fold.begin(), eval_by_fold.end());
    o.min_fold_value = *std::min_element(eval_by_fold.begin(), eval_by_fold.end());
    o.mean_fold_value = std::accumulate(eval_by_fold.begin(), eval_by_fold.end(), 0.0) /
                        static_cast<double>(eval_by_fold.size());
    return o;
}

void final_test_reports(SubsetOutcome& outcome, const std::vector<FoldView>& views,
                        const SelectionConfig& config, std::uint64_t seed) {
    for (const auto& view : views) {
        Matrix X_train = materialize_subset(view, outcome.subset, view.train_rows);
        Matrix X_eval = materialize_subset(view, outcome.subset, view.eval_rows);

        // pick the classifier by eval performance, retrain on Train+Eval
        ClassifierSpec best_spec;
        double best_eval = -1.0;
        int i = 0;
        for (ClassifierKind kind :
             {ClassifierKind::RandomForest, ClassifierKind::SvmLinear, ClassifierKind::SvmRbf}) {
            ClassifierSpec spec =
                tune(kind, X_train, view.y_train, X_eval, view.y_eval, config.tuning, config.metric,
                     derive_seed(seed, 0xf17a1 + static_cast<std::uint64_t>(i) +
                                           (static_cast<std::uint64_t>(view.fold) << 8)));
            Model m = train(spec, X_train, view.y_train);
            double v = evaluate(m, X_eval, view.y_eval, config.metric).value;
            if (v > best_eval) {
                best_eval = v;
                best_spec = spec;
            }
            ++i;
        }

        std::vector<std::size_t> train_eval_rows = view.train_rows;
        train_eval_rows.insert(train_eval_rows.end(), view.eval_rows.begin(), view.eval_rows.end());
        std::vector<int> y_train_eval = view.y_train;
        y_train_eval.insert(y_train_eval.end(), view.y_eval.begin(), view.y_eval.end());

        Matrix X_fit = materialize_subset(view, outcome.subset, train_eval_rows);
        Matrix X_test = materialize_subset(view, outcome.subset, view.test_rows);
        Model final_model = train(best_spec, X_fit, y_train_eval);
        outcome.test_by_fold.push_back(evaluate(final_model, X_test, view.y_test, config.metric));
        outcome.test_classifier_by_fold.push_back(classifier_kind_name(best_spec.kind));
    }
}

}  // namespace

RecommendationResult recommend(const SignalDataset& dataset, const FoldPlan& fold_plan,
                               const SelectionConfig& sel_config, const FeatureConfig& feat_config,
                               std::uint64_t seed, unsigned threads) {
    sel_config.validate();
    RecommendationResult result;
    result.seed = seed;
    result.metric = sel_config.metric;

    for (int level = 1; level <= 3; ++level) {
        std::vector<FeaturePool> pools;
        std::vector<FoldView> views;
        std::vector<LevelSelection> selections;
        pools.reserve(static_cast<std::size_t>(fold_plan.n_folds));
        for (int f = 0; f < fold_plan.n_folds; ++f) {
            pools.push_back(build_feature_pool(dataset, fold_plan, f, level, feat_config, threads));
            ++result.pools_built_by_level[static_cast<std::size_t>(level - 1)];
            result.selected_wavelets[f] = pools.back().selected_wavelet;
        }
        for (int f = 0; f < fold_plan.n_folds; ++f)
            views.push_back(FoldView::make(pools[static_cast<std::size_t>(f)], dataset, fold_plan, f));
        for (int f = 0; f < fold_plan.n_folds; ++f) {
            selections.push_back(select_for_level(pools[static_cast<std::size_t>(f)], level,
                                                  views[static_cast<std::size_t>(f)], sel_config,
                                                  derive_seed(seed, static_cast<std::uint64_t>(f) |
                                                                        (static_cast<std::uint64_t>(level) << 32)),
                                                  threads));
            ++result.selections_by_level[static_cast<std::size_t>(level - 1)];
            result.rankings.push_back(selections.back().rankings);
        }

        // candidate pool: the per-fold exhaustive winners, deduplicated
        std::vector<CandidateSubset> candidates;
        for (const auto& sel : selections) {
            bool dup = false;
            for (const auto& c : candidates)
                if (c == sel.best_subset) dup = true;
            if (!dup) candidates.push_back(sel.best_subset);
        }

        std::vector<SubsetOutcome> outcomes;
        for (const auto& cand : candidates) {
            std::vector<double> eval_by_fold(static_cast<std::size_t>(fold_plan.n_folds));
            for (int f = 0; f < fold_plan.n_folds; ++f)
                eval_by_fold[static_cast<std::size_t>(f)] =
                    eval_subset_on_fold(views[static_cast<std::size_t>(f)], cand,
                                        selections[static_cast<std::size_t>(f)].wrapper_specs,
                                        sel_config.metric);
            outcomes.push_back(make_outcome(cand, eval_by_fold));
        }

        // Fe1: best single-fold performance; Fe2: best worst-fold performance
        auto pick = [&](auto primary) {
            std::size_t best = 0;
            for (std::size_t i = 1; i < outcomes.size(); ++i) {
                const auto& a = outcomes[i];
                const auto& b = outcomes[best];
                double pa = primary(a), pb = primary(b);
                if (pa != pb ? pa > pb
                             : (a.mean_fold_value != b.mean_fold_value
                                    ? a.mean_fold_value > b.mean_fold_value
                                    : (a.subset.keys.size() != b.subset.keys.size()
                                           ? a.subset.keys.size() < b.subset.keys.size()
                                           : a.subset.keys < b.subset.keys)))
                    best = i;
            }
            return outcomes[best];
        };
        result.fe1 = pick([](const SubsetOutcome& o) { return o.best_fold_value; });
        result.fe2 = pick([](const SubsetOutcome& o) { return o.min_fold_value; });
        result.best_score_by_level.push_back(result.fe1.best_fold_value);
        result.level_reached = level;

        if (result.fe1.best_fold_value >= sel_config.tau || level == 3) {
            final_test_reports(result.fe1, views, sel_config, derive_seed(seed, 0xfe1));
            final_test_reports(result.fe2, views, sel_config, derive_seed(seed, 0xfe2));
            break;
        }
    }
    return result;
}

}  // namespace sigfeat
