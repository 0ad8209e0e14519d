#include "sigfeat/models.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>

namespace sigfeat {

namespace {

// ---- CART / random forest --------------------------------------------------

struct TreeBuilder {
    const Matrix& X;
    const std::vector<int>& y;
    const ClassifierSpec& spec;
    Rng& rng;
    std::size_t mtry;
    std::vector<TreeNode> nodes;

    int build(std::vector<std::size_t>& idx, int depth) {
        std::size_t count[2] = {0, 0};
        for (auto i : idx) ++count[static_cast<std::size_t>(y[i])];
        int majority = count[0] >= count[1] ? 0 : 1;

        bool pure = count[0] == 0 || count[1] == 0;
        bool depth_capped = spec.max_depth > 0 && depth >= spec.max_depth;
        if (pure || depth_capped || idx.size() < 2 * static_cast<std::size_t>(spec.min_leaf)) {
            nodes.push_back(TreeNode{-1, 0.0, -1, -1, majority});
            return static_cast<int>(nodes.size()) - 1;
        }

        // sample mtry candidate features without replacement
        std::vector<std::size_t> all_features(X.cols);
        std::iota(all_features.begin(), all_features.end(), 0);
        for (std::size_t i = 0; i < mtry && i < all_features.size(); ++i) {
            std::size_t j = i + static_cast<std::size_t>(rng.next_below(all_features.size() - i));
            std::swap(all_features[i], all_features[j]);
        }

        double best_gini = std::numeric_limits<double>::infinity();
        std::size_t best_feature = 0;
        double best_threshold = 0.0;
        std::vector<std::pair<double, int>> vals(idx.size());
        for (std::size_t fi = 0; fi < mtry && fi < all_features.size(); ++fi) {
            std::size_t f = all_features[fi];
            for (std::size_t i = 0; i < idx.size(); ++i) vals[i] = {X.at(idx[i], f), y[idx[i]]};
            std::sort(vals.begin(), vals.end());
            double left0 = 0, left1 = 0;
            double right0 = static_cast<double>(count[0]), right1 = static_cast<double>(count[1]);
            for (std::size_t i = 0; i + 1 < vals.size(); ++i) {
                if (vals[i].second == 0) {
                    ++left0;
                    --right0;
                } else {
                    ++left1;
                    --right1;
                }
                if (vals[i].first == vals[i + 1].first) continue;
                double nl = left0 + left1, nr = right0 + right1;
                if (nl < spec.min_leaf || nr < spec.min_leaf) continue;
                double gl = 1.0 - (left0 * left0 + left1 * left1) / (nl * nl);
                double gr = 1.0 - (right0 * right0 + right1 * right1) / (nr * nr);
                double gini = (nl * gl + nr * gr) / static_cast<double>(idx.size());
                if (gini < best_gini - 1e-15) {
                    best_gini = gini;
                    best_feature = f;
                    best_threshold = 0.5 * (vals[i].first + vals[i + 1].first);
                }
            }
        }
        if (!std::isfinite(best_gini)) {
            nodes.push_back(TreeNode{-1, 0.0, -1, -1, majority});
            return static_cast<int>(nodes.size()) - 1;
        }

        std::vector<std::size_t> left_idx, right_idx;
        for (auto i : idx)
            (X.at(i, best_feature) <= best_threshold ? left_idx : right_idx).push_back(i);
        if (left_idx.empty() || right_idx.empty()) {
            nodes.push_back(TreeNode{-1, 0.0, -1, -1, majority});
            return static_cast<int>(nodes.size()) - 1;
        }
        int self = static_cast<int>(nodes.size());
        nodes.push_back(TreeNode{static_cast<int>(best_feature), best_threshold, -1, -1, -1});
        int l = build(left_idx, depth + 1);
        int r = build(right_idx, depth + 1);
        nodes[static_cast<std::size_t>(self)].left = l;
        nodes[static_cast<std::size_t>(self)].right = r;
        return self;
    }
};

ForestModel train_forest(const ClassifierSpec& spec, const Matrix& X, const std::vector<int>& y) {
    ForestModel forest;
    forest.trees.resize(static_cast<std::size_t>(spec.n_trees));
    auto mtry = static_cast<std::size_t>(
        std::max(1.0, std::floor(std::sqrt(static_cast<double>(X.cols)))));
    for (int t = 0; t < spec.n_trees; ++t) {
        Rng rng(derive_seed(spec.seed, 0xf03e5700ULL + static_cast<std::uint64_t>(t)));
        std::vector<std::size_t> sample(X.rows);
        for (auto& s : sample) s = static_cast<std::size_t>(rng.next_below(X.rows));
        std::sort(sample.begin(), sample.end());
        TreeBuilder builder{X, y, spec, rng, mtry, {}};
        builder.build(sample, 0);
        forest.trees[static_cast<std::size_t>(t)] = std::move(builder.nodes);
    }
    return forest;
}

// ---- SMO solver -------------------------------------------------------------

struct SmoSolver {
    const Matrix& X;
    std::vector<int> y;  // +-1
    double C;
    bool rbf;
    double gamma;
    double tol = 1e-3;
    std::vector<double> alpha;
    std::vector<double> error;
    double b = 0.0;
    std::vector<std::vector<double>> K;
    std::size_t updates = 0;
    std::size_t update_cap = 0;

    double kernel(std::size_t i, std::size_t j) const {
        const double* a = X.row(i);
        const double* c = X.row(j);
        if (!rbf) {
            double s = 0.0;
            for (std::size_t d = 0; d < X.cols; ++d) s += a[d] * c[d];
            return s;
        }
        double s = 0.0;
        for (std::size_t d = 0; d < X.cols; ++d) {
            double diff = a[d] - c[d];
            s += diff * diff;
        }
        return std::exp(-gamma * s);
    }

    double f(std::size_t i) const {
        double s = -b;
        for (std::size_t j = 0; j < alpha.size(); ++j)
            if (alpha[j] > 0.0) s += alpha[j] * y[j] * K[j][i];
        return s;
    }

    bool take_step(std::size_t i1, std::size_t i2) {
        if (i1 == i2) return false;
        double a1 = alpha[i1], a2 = alpha[i2];
        int y1 = y[i1], y2 = y[i2];
        double e1 = error[i1], e2 = error[i2];
        double s = y1 * y2;
        double lo, hi;
        if (y1 != y2) {
            lo = std::max(0.0, a2 - a1);
            hi = std::min(C, C + a2 - a1);
        } else {
            lo = std::max(0.0, a1 + a2 - C);
            hi = std::min(C, a1 + a2);
        }
        if (lo >= hi) return false;
        double k11 = K[i1][i1], k12 = K[i1][i2], k22 = K[i2][i2];
        double eta = k11 + k22 - 2.0 * k12;
        double a2new;
        if (eta > 0.0) {
            a2new = a2 + y2 * (e1 - e2) / eta;
            a2new = std::clamp(a2new, lo, hi);
        } else {
            // objective at bounds
            double f1 = y1 * e1 - a1 * k11 - s * a2 * k12;
            double f2 = y2 * e2 - a2 * k22 - s * a1 * k12;
            double l1 = a1 + s * (a2 - lo);
            double h1 = a1 + s * (a2 - hi);
            double obj_lo = l1 * f1 + lo * f2 + 0.5 * l1 * l1 * k11 + 0.5 * lo * lo * k22 + s * lo * l1 * k12;
            double obj_hi = h1 * f1 + hi * f2 + 0.5 * h1 * h1 * k11 + 0.5 * hi * hi * k22 + s * hi * h1 * k12;
            if (obj_lo < obj_hi - 1e-12)
                a2new = lo;
            else if (obj_lo > obj_hi + 1e-12)
                a2new = hi;
            else
                a2new = a2;
        }
        if (std::abs(a2new - a2) < 1e-12 * (a2new + a2 + 1e-12)) return false;
        double a1new = a1 + s * (a2 - a2new);

        double b1 = e1 + y1 * (a1new - a1) * k11 + y2 * (a2new - a2) * k12 + b;
        double b2 = e2 + y1 * (a1new - a1) * k12 + y2 * (a2new - a2) * k22 + b;
        double bnew;
        if (a1new > 0.0 && a1new < C)
            bnew = b1;
        else if (a2new > 0.0 && a2new < C)
            bnew = b2;
        else
            bnew = 0.5 * (b1 + b2);

        double db = bnew - b;
        b = bnew;
        alpha[i1] = a1new;
        alpha[i2] = a2new;
        double d1 = y1 * (a1new - a1), d2 = y2 * (a2new - a2);
        for (std::size_t i = 0; i < error.size(); ++i)
            error[i] += d1 * K[i1][i] + d2 * K[i2][i] - db;
        ++updates;
        return true;
    }

    bool examine(std::size_t i2) {
        double e2 = error[i2];
        double r2 = e2 * y[i2];
        if ((r2 < -tol && alpha[i2] < C) || (r2 > tol && alpha[i2] > 0.0)) {
            // second choice: max |e1 - e2| over non-bound alphas, tie -> lower index
            std::size_t best = i2;
            double best_gap = -1.0;
            for (std::size_t i = 0; i < alpha.size(); ++i) {
                if (alpha[i] <= 0.0 || alpha[i] >= C) continue;
                double gap = std::abs(error[i] - e2);
                if (gap > best_gap) {
                    best_gap = gap;
                    best = i;
                }
            }
            if (best != i2 && take_step(best, i2)) return true;
            for (std::size_t off = 0; off < alpha.size(); ++off) {
                std::size_t i = off;
                if (alpha[i] > 0.0 && alpha[i] < C && take_step(i, i2)) return true;
            }
            for (std::size_t i = 0; i < alpha.size(); ++i)
                if (take_step(i, i2)) return true;
        }
        return false;
    }

    void solve() {
        const std::size_t n = X.rows;
        alpha.assign(n, 0.0);
        error.assign(n, 0.0);
        K.assign(n, std::vector<double>(n, 0.0));
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = i; j < n; ++j) K[i][j] = K[j][i] = kernel(i, j);
        for (std::size_t i = 0; i < n; ++i) error[i] = -static_cast<double>(y[i]);
        update_cap = 10000 * n;

        bool examine_all = true;
        std::size_t changed = 1;
        while ((changed > 0 || examine_all) && updates < update_cap) {
            changed = 0;
            if (examine_all) {
                for (std::size_t i = 0; i < n; ++i) changed += examine(i) ? 1 : 0;
            } else {
                for (std::size_t i = 0; i < n; ++i)
                    if (alpha[i] > 0.0 && alpha[i] < C) changed += examine(i) ? 1 : 0;
            }
            if (examine_all)
                examine_all = false;
            else if (changed == 0)
                examine_all = true;
        }
    }
};

SvmModel train_svm(const ClassifierSpec& spec, const Matrix& X, const std::vector<int>& y) {
    SmoSolver solver{X, {}, spec.C, spec.kind == ClassifierKind::SvmRbf, spec.gamma};
    solver.y.resize(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) solver.y[i] = y[i] == 1 ? 1 : -1;
    solver.solve();

    SvmModel model;
    model.rbf = solver.rbf;
    model.gamma = spec.gamma;
    model.bias = solver.b;
    model.C = spec.C;
    model.alphas = solver.alpha;
    model.train_y = solver.y;
    for (std::size_t i = 0; i < X.rows; ++i) {
        if (solver.alpha[i] > 0.0) {
            model.support_vectors.emplace_back(X.row(i), X.row(i) + X.cols);
            model.coeffs.push_back(solver.alpha[i] * solver.y[i]);
        }
    }
    return model;
}

}  // namespace

std::string classifier_kind_name(ClassifierKind k) {
    switch (k) {
        case ClassifierKind::RandomForest: return "random_forest";
        case ClassifierKind::SvmLinear: return "svm_linear";
        case ClassifierKind::SvmRbf: return "svm_rbf";
    }
    return "?";
}

std::string metric_name(Metric m) {
    switch (m) {
        case Metric::Accuracy: return "accuracy";
        case Metric::Sensitivity: return "sensitivity";
        case Metric::Specificity: return "specificity";
    }
    return "?";
}

Metric metric_from_name(const std::string& s) {
    if (s == "accuracy") return Metric::Accuracy;
    if (s == "sensitivity") return Metric::Sensitivity;
    if (s == "specificity") return Metric::Specificity;
    throw ConfigError("unknown metric: " + s);
}

MetricReport MetricReport::from_predictions(const std::vector<int>& predicted,
                                            const std::vector<int>& actual, Metric metric) {
    if (predicted.size() != actual.size()) throw InternalError("metric: prediction size mismatch");
    MetricReport r;
    r.metric = metric;
    for (std::size_t i = 0; i < predicted.size(); ++i) {
        if (actual[i] == 0)
            predicted[i] == 0 ? ++r.tp : ++r.fn;
        else
            predicted[i] == 1 ? ++r.tn : ++r.fp;
    }
    auto total = static_cast<double>(r.tp + r.fp + r.tn + r.fn);
    switch (metric) {
        case Metric::Accuracy:
            r.value = total > 0 ? static_cast<double>(r.tp + r.tn) / total : 0.0;
            break;
        case Metric::Sensitivity:
            r.value = (r.tp + r.fn) > 0 ? static_cast<double>(r.tp) / static_cast<double>(r.tp + r.fn) : 0.0;
            break;
        case Metric::Specificity:
            r.value = (r.tn + r.fp) > 0 ? static_cast<double>(r.tn) / static_cast<double>(r.tn + r.fp) : 0.0;
            break;
    }
    return r;
}

int ForestModel::predict(const double* x) const {
    std::size_t votes[2] = {0, 0};
    for (const auto& tree : trees) {
        int node = 0;
        while (tree[static_cast<std::size_t>(node)].feature >= 0) {
            const auto& nd = tree[static_cast<std::size_t>(node)];
            node = x[static_cast<std::size_t>(nd.feature)] <= nd.threshold ? nd.left : nd.right;
        }
        ++votes[static_cast<std::size_t>(tree[static_cast<std::size_t>(node)].label)];
    }
    return votes[0] >= votes[1] ? 0 : 1;
}

double SvmModel::decision(const double* x, std::size_t dim) const {
    double s = -bias;
    for (std::size_t v = 0; v < support_vectors.size(); ++v) {
        const auto& sv = support_vectors[v];
        double k;
        if (!rbf) {
            k = 0.0;
            for (std::size_t d = 0; d < dim; ++d) k += sv[d] * x[d];
        } else {
            double sq = 0.0;
            for (std::size_t d = 0; d < dim; ++d) {
                double diff = sv[d] - x[d];
                sq += diff * diff;
            }
            k = std::exp(-gamma * sq);
        }
        s += coeffs[v] * k;
    }
    return s;
}

int SvmModel::predict(const double* x, std::size_t dim) const { return decision(x, dim) >= 0.0 ? 1 : 0; }

int Model::predict(const double* x) const {
    if (std::holds_alternative<ForestModel>(impl)) return std::get<ForestModel>(impl).predict(x);
    return std::get<SvmModel>(impl).predict(x, n_features);
}

std::vector<int> Model::predict_all(const Matrix& X) const {
    if (X.cols != n_features) throw DataError("predict: column count mismatch");
    std::vector<int> out(X.rows);
    for (std::size_t i = 0; i < X.rows; ++i) out[i] = predict(X.row(i));
    return out;
}

Standardizer Standardizer::fit(const Matrix& X) {
    Standardizer s;
    s.mean.assign(X.cols, 0.0);
    s.std_dev.assign(X.cols, 1.0);
    if (X.rows == 0) return s;
    for (std::size_t c = 0; c < X.cols; ++c) {
        double m = 0.0;
        for (std::size_t r = 0; r < X.rows; ++r) m += X.at(r, c);
        m /= static_cast<double>(X.rows);
        double var = 0.0;
        for (std::size_t r = 0; r < X.rows; ++r) {
            double d = X.at(r, c) - m;
            var += d * d;
        }
        var /= static_cast<double>(X.rows);
        s.mean[c] = m;
        s.std_dev[c] = var > 0.0 ? std::sqrt(var) : 1.0;
    }
    return s;
}

Matrix Standardizer::apply(const Matrix& X) const {
    Matrix out(X.rows, X.cols);
    for (std::size_t r = 0; r < X.rows; ++r)
        for (std::size_t c = 0; c < X.cols; ++c) out.at(r, c) = (X.at(r, c) - mean[c]) / std_dev[c];
    return out;
}

Model train(const ClassifierSpec& spec, const Matrix& X, const std::vector<int>& y) {
    if (X.rows != y.size()) throw InternalError("train: row/label mismatch");
    if (X.rows == 0) throw DataError("train: empty training set");
    for (double v : X.data)
        if (!std::isfinite(v)) throw DataError("train: non-finite feature value");
    bool has0 = false, has1 = false;
    for (int label : y) (label == 0 ? has0 : has1) = true;
    if (!has0 || !has1) throw DataError("train: single-class training set");

    Model model;
    model.spec = spec;
    model.n_features = X.cols;
    if (spec.kind == ClassifierKind::RandomForest)
        model.impl = train_forest(spec, X, y);
    else
        model.impl = train_svm(spec, X, y);
    return model;
}

MetricReport evaluate(const Model& model, const Matrix& X, const std::vector<int>& y, Metric metric) {
    return MetricReport::from_predictions(model.predict_all(X), y, metric);
}

ClassifierSpec tune(ClassifierKind kind, const Matrix& X_train, const std::vector<int>& y_train,
                    const Matrix& X_eval, const std::vector<int>& y_eval, const TuningBudget& budget,
                    Metric metric, std::uint64_t seed) {
    std::vector<ClassifierSpec> grid;
    if (kind == ClassifierKind::RandomForest) {
        for (int trees : budget.rf_trees)
            for (int depth : budget.rf_depths) {
                ClassifierSpec s;
                s.kind = kind;
                s.n_trees = trees;
                s.max_depth = depth;
                s.seed = seed;
                grid.push_back(s);
            }
    } else if (kind == ClassifierKind::SvmLinear) {
        for (double C : budget.svm_C) {
            ClassifierSpec s;
            s.kind = kind;
            s.C = C;
            s.seed = seed;
            grid.push_back(s);
        }
    } else {
        for (double C : budget.svm_C)
            for (double gamma : budget.svm_gamma) {
                ClassifierSpec s;
                s.kind = kind;
                s.C = C;
                s.gamma = gamma;
                s.seed = seed;
                grid.push_back(s);
            }
    }

    // Deterministic budget: wall_clock_s maps to nominal work units rather
    // than a measured clock, so identical runs pick identical specs.
    const double nominal_units_per_second = 2.0e7;
    double budget_units = budget.wall_clock_s * nominal_units_per_second;
    auto nominal_cost = [&](const ClassifierSpec& s) {
        double n = static_cast<double>(X_train.rows);
        double d = static_cast<double>(std::max<std::size_t>(X_train.cols, 1));
        switch (s.kind) {
            case ClassifierKind::RandomForest:
                return static_cast<double>(s.n_trees) * n * std::log2(n + 1.0) * std::sqrt(d);
            case ClassifierKind::SvmLinear: return 20.0 * n * n * d;
            case ClassifierKind::SvmRbf: return 40.0 * n * n * d;
        }
        return n * d;
    };

    ClassifierSpec best = grid.front();
    double best_value = -1.0;
    double used = 0.0;
    for (std::size_t gi = 0; gi < grid.size(); ++gi) {
        if (gi > 0 && used + nominal_cost(grid[gi]) > budget_units) break;
        used += nominal_cost(grid[gi]);
        Model m = train(grid[gi], X_train, y_train);
        MetricReport r = evaluate(m, X_eval, y_eval, metric);
        if (r.value > best_value) {
            best_value = r.value;
            best = grid[gi];
        }
    }
    return best;
}

// ---- PCA ---------------------------------------------------------------;

namespace {

// Cyclic Jacobi eigendecomposition for symmetric matrices.
void jacobi_eigen(std::vector<std::vector<double>>& a, std::vector<double>& eigenvalues,
                  std::vector<std::vector<double>>& eigenvectors) {
    const std::size_t n = a.size();
    eigenvectors.assign(n, std::vector<double>(n, 0.0));
    for (std::size_t i = 0; i < n; ++i) eigenvectors[i][i] = 1.0;
    for (int sweep = 0; sweep < 100; ++sweep) {
        double off = 0.0;
        for (std::size_t p = 0; p < n; ++p)
            for (std::size_t q = p + 1; q < n; ++q) off += a[p][q] * a[p][q];
        if (off < 1e-22) break;
        for (std::size_t p = 0; p < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                if (std::abs(a[p][q]) < 1e-300) continue;
                double theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                double t = (theta >= 0.0 ? 1.0 : -1.0) /
                           (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                double c = 1.0 / std::sqrt(t * t + 1.0);
                double s = t * c;
                for (std::size_t k = 0; k < n; ++k) {
                    double akp = a[k][p], akq = a[k][q];
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    double apk = a[p][k], aqk = a[q][k];
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    double vkp = eigenvectors[k][p], vkq = eigenvectors[k][q];
                    eigenvectors[k][p] = c * vkp - s * vkq;
                    eigenvectors[k][q] = s * vkp + c * vkq;
                }
            }
        }
    }
    eigenvalues.resize(n);
    for (std::size_t i = 0; i < n; ++i) eigenvalues[i] = a[i][i];
}

}  // namespace

PcaProjection fit_pca(const Matrix& X_train) {
    const std::size_t n = X_train.rows;
    const std::size_t d = X_train.cols;
    if (n == 0 || d == 0) throw DataError("pca: empty matrix");

    PcaProjection proj;
    proj.mean.assign(d, 0.0);
    for (std::size_t r = 0; r < n; ++r)
        for (std::size_t c = 0; c < d; ++c) proj.mean[c] += X_train.at(r, c);
    for (auto& m : proj.mean) m /= static_cast<double>(n);

    Matrix centered(n, d);
    for (std::size_t r = 0; r < n; ++r)
        for (std::size_t c = 0; c < d; ++c) centered.at(r, c) = X_train.at(r, c) - proj.mean[c];

    std::vector<double> eigenvalues;
    std::vector<std::vector<double>> eigenvectors;
    bool use_gram = n < d;
    std::size_t m = use_gram ? n : d;
    std::vector<std::vector<double>> cov(m, std::vector<double>(m, 0.0));
    if (!use_gram) {
        for (std::size_t i = 0; i < d; ++i)
            for (std::size_t j = i; j < d; ++j) {
                double s = 0.0;
                for (std::size_t r = 0; r < n; ++r) s += centered.at(r, i) * centered.at(r, j);
                cov[i][j] = cov[j][i] = s / static_cast<double>(n);
            }
    } else {
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = i; j < n; ++j) {
                double s = 0.0;
                for (std::size_t c = 0; c < d; ++c) s += centered.at(i, c) * centered.at(j, c);
                cov[i][j] = cov[j][i] = s / static_cast<double>(n);
            }
    }
    jacobi_eigen(cov, eigenvalues, eigenvectors);

    std::vector<std::size_t> order(m);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return eigenvalues[a] > eigenvalues[b]; });

    double max_ev = eigenvalues.empty() ? 0.0 : std::max(0.0, eigenvalues[order[0]]);
    for (std::size_t oi = 0; oi < m; ++oi) {
        double ev = eigenvalues[order[oi]];
        if (ev <= 1e-10 * std::max(max_ev, 1e-300)) break;
        std::vector<double> comp(d, 0.0);
        if (!use_gram) {
            for (std::size_t c = 0; c < d; ++c) comp[c] = eigenvectors[c][order[oi]];
        } else {
            // map Gram eigenvector u to covariance eigenvector X^T u / norm
            for (std::size_t c = 0; c < d; ++c) {
                double s = 0.0;
                for (std::size_t r = 0; r < n; ++r) s += centered.at(r, c) * eigenvectors[r][order[oi]];
                comp[c] = s;
            }
        }
        double norm = std::sqrt(std::inner_product(comp.begin(), comp.end(), comp.begin(), 0.0));
        if (norm <= 0.0) break;
        for (auto& v : comp) v /= norm;
        proj.components.push_back(std::move(comp));
        proj.explained_variance.push_back(ev);
    }
    proj.effective_rank = proj.components.size();
    return proj;
}

Matrix PcaProjection::project(const Matrix& X, std::size_t n_components) const {
    std::size_t k = std::min(n_components, components.size());
    Matrix out(X.rows, k);
    for (std::size_t r = 0; r < X.rows; ++r)
        for (std::size_t c = 0; c < k; ++c) {
            double s = 0.0;
            for (std::size_t d = 0; d < X.cols; ++d) s += (X.at(r, d) - mean[d]) * components[c][d];
            out.at(r, c) = s;
        }
    return out;
}

PcaBaselineResult pca_baseline(const Matrix& X_train, const std::vector<int>& y_train,
                               const Matrix& X_eval, const std::vector<int>& y_eval,
                               const std::vector<std::size_t>& n_components_list, Metric metric) {
    if (n_components_list.empty()) throw ConfigError("pca_baseline: empty component list");
    PcaProjection proj = fit_pca(X_train);

    PcaBaselineResult result;
    double best_value = -1.0;
    for (std::size_t requested : n_components_list) {
        std::size_t used = std::min(requested, proj.effective_rank);
        if (used == 0) throw DataError("pca_baseline: degenerate training matrix (rank 0)");
        Matrix train_p = proj.project(X_train, used);
        Matrix eval_p = proj.project(X_eval, used);
        for (ClassifierKind kind : {ClassifierKind::SvmLinear, ClassifierKind::SvmRbf}) {
            ClassifierSpec spec;
            spec.kind = kind;
            spec.C = 1.0;
            spec.gamma = 0.1;
            Model m = train(spec, train_p, y_train);
            PcaBaselineRow row;
            row.requested_components = requested;
            row.used_components = used;
            row.kind = kind;
            row.report = evaluate(m, eval_p, y_eval, metric);
            if (row.report.value > best_value) {
                best_value = row.report.value;
                result.best = row;
            }
            result.rows.push_back(std::move(row));
        }
    }
    return result;
}

}  // namespace sigfeat
