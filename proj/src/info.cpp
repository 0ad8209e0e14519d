#include "sigfeat/info.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace sigfeat {

Discretizer Discretizer::fit(const std::vector<double>& train_values, std::size_t bins) {
    if (bins < 2) throw ConfigError("discretize: need at least 2 bins");
    Discretizer d;
    if (train_values.empty()) return d;
    std::vector<double> sorted = train_values;
    std::sort(sorted.begin(), sorted.end());
    const std::size_t n = sorted.size();
    for (std::size_t b = 1; b < bins; ++b) {
        std::size_t pos = b * n / bins;
        if (pos == 0 || pos >= n) continue;
        double edge = sorted[pos - 1];
        if (edge < sorted[n - 1] && (d.upper_edges.empty() || edge > d.upper_edges.back()))
            d.upper_edges.push_back(edge);
    }
    return d;
}

int Discretizer::bin_of(double v) const {
    // first bin whose upper edge admits v
    auto it = std::lower_bound(upper_edges.begin(), upper_edges.end(), v);
    return static_cast<int>(it - upper_edges.begin());
}

std::vector<int> Discretizer::apply(const std::vector<double>& values) const {
    std::vector<int> out(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) out[i] = bin_of(values[i]);
    return out;
}

std::size_t auto_bin_count(std::size_t n_train) {
    auto b = static_cast<std::size_t>(std::floor(std::sqrt(static_cast<double>(n_train) / 5.0)));
    return std::max<std::size_t>(2, std::min<std::size_t>(16, b));
}

double mutual_information(const std::vector<int>& x, const std::vector<int>& y) {
    if (x.size() != y.size()) throw InternalError("mutual_information: length mismatch");
    if (x.empty()) return 0.0;
    std::map<int, std::size_t> cx, cy;
    std::map<std::pair<int, int>, std::size_t> cxy;
    for (std::size_t i = 0; i < x.size(); ++i) {
        ++cx[x[i]];
        ++cy[y[i]];
        ++cxy[{x[i], y[i]}];
    }
    const double n = static_cast<double>(x.size());
    double mi = 0.0;
    for (const auto& [ab, count] : cxy) {
        double pab = static_cast<double>(count) / n;
        double pa = static_cast<double>(cx[ab.first]) / n;
        double pb = static_cast<double>(cy[ab.second]) / n;
        mi += pab * (std::log(pab) - std::log(pa) - std::log(pb));
    }
    return mi;
}

double discrete_entropy(const std::vector<int>& x) {
    if (x.empty()) return 0.0;
    std::map<int, std::size_t> counts;
    for (int v : x) ++counts[v];
    const double n = static_cast<double>(x.size());
    double h = 0.0;
    for (const auto& [v, count] : counts) {
        double p = static_cast<double>(count) / n;
        h -= p * std::log(p);
    }
    return h;
}

}  // namespace sigfeat
