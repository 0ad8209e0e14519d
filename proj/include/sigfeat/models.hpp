#pragma once

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include "sigfeat/common.hpp"

namespace sigfeat {

enum class ClassifierKind { RandomForest, SvmLinear, SvmRbf };

std::string classifier_kind_name(ClassifierKind k);

struct ClassifierSpec {
    ClassifierKind kind = ClassifierKind::RandomForest;
    int n_trees = 50;
    int max_depth = 8;  // 0 = unlimited
    int min_leaf = 1;
    double C = 1.0;
    double gamma = 0.1;
    std::uint64_t seed = 0;
};

enum class Metric { Accuracy, Sensitivity, Specificity };

std::string metric_name(Metric m);
Metric metric_from_name(const std::string& s);

// Confusion counts with class 0 as the positive class (the failure class in
// prognostics data), so sensitivity is the recall of class 0.
struct MetricReport {
    Metric metric = Metric::Accuracy;
    double value = 0.0;
    std::size_t tp = 0, fp = 0, tn = 0, fn = 0;

    static MetricReport from_predictions(const std::vector<int>& predicted,
                                         const std::vector<int>& actual, Metric metric);
};

// ---- trained models --------------------------------------------------------

struct TreeNode {
    int feature = -1;  // -1 = leaf
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    int label = 0;
};

struct ForestModel {
    std::vector<std::vector<TreeNode>> trees;
    int predict(const double* x) const;
};

struct SvmModel {
    bool rbf = false;
    double gamma = 0.0;
    double bias = 0.0;
    std::vector<std::vector<double>> support_vectors;
    std::vector<double> coeffs;  // alpha_i * y_i
    // dual state kept for the feasibility checks
    std::vector<double> alphas;
    std::vector<int> train_y;  // +-1
    double C = 0.0;

    double decision(const double* x, std::size_t dim) const;
    int predict(const double* x, std::size_t dim) const;
};

struct Model {
    ClassifierSpec spec;
    std::size_t n_features = 0;
    std::variant<ForestModel, SvmModel> impl;

    int predict(const double* x) const;
    std::vector<int> predict_all(const Matrix& X) const;
};

// Per-column affine scaling fit on the training fold only.
struct Standardizer {
    std::vector<double> mean;
    std::vector<double> std_dev;

    static Standardizer fit(const Matrix& X);
    Matrix apply(const Matrix& X) const;
};

Model train(const ClassifierSpec& spec, const Matrix& X, const std::vector<int>& y);

MetricReport evaluate(const Model& model, const Matrix& X, const std::vector<int>& y, Metric metric);

struct TuningBudget {
    double wall_clock_s = 10.0;
    // explicit grids evaluated in declaration order
    std::vector<double> svm_C = {0.1, 1.0, 10.0};
    std::vector<double> svm_gamma = {0.01, 0.1, 1.0};
    std::vector<int> rf_trees = {50, 200};
    std::vector<int> rf_depths = {8, 0};
};

// Grid points are evaluated in fixed order until a deterministic work budget
// derived from wall_clock_s is exhausted; at least one point always runs.
ClassifierSpec tune(ClassifierKind kind, const Matrix& X_train, const std::vector<int>& y_train,
                    const Matrix& X_eval, const std::vector<int>& y_eval, const TuningBudget& budget,
                    Metric metric, std::uint64_t seed);

// ---- PCA baseline ----------------------------------------------------------

struct PcaProjection {
    std::vector<double> mean;
    std::vector<std::vector<double>> components;  // row per component
    std::vector<double> explained_variance;       // non-increasing
    std::size_t effective_rank = 0;

    Matrix project(const Matrix& X, std::size_t n_components) const;
};

PcaProjection fit_pca(const Matrix& X_train);

struct PcaBaselineRow {
    std::size_t requested_components = 0;
    std::size_t used_components = 0;
    ClassifierKind kind = ClassifierKind::SvmLinear;
    MetricReport report;
};

struct PcaBaselineResult {
    PcaBaselineRow best;
    std::vector<PcaBaselineRow> rows;
};

PcaBaselineResult pca_baseline(const Matrix& X_train, const std::vector<int>& y_train,
                               const Matrix& X_eval, const std::vector<int>& y_eval,
                               const std::vector<std::size_t>& n_components_list, Metric metric);

}  // namespace sigfeat
