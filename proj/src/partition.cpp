#include "sigfeat/partition.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>

#include "sigfeat/transforms.hpp"

namespace sigfeat {

namespace {

double sq_dist(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        double d = a[i] - b[i];
        s += d * d;
    }
    return s;
}

struct KMeansRun {
    std::vector<int> assignment;
    double objective = std::numeric_limits<double>::infinity();
};

KMeansRun kmeans_once(const std::vector<std::vector<double>>& x, int k, Rng& rng, int max_iter) {
    const std::size_t n = x.size();
    const std::size_t dim = x[0].size();

    // ++-style init: first centroid uniform, rest proportional to D^2
    std::vector<std::vector<double>> centroids;
    centroids.push_back(x[rng.next_below(n)]);
    std::vector<double> d2(n);
    while (static_cast<int>(centroids.size()) < k) {
        double total = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            double best = std::numeric_limits<double>::infinity();
            for (const auto& c : centroids) best = std::min(best, sq_dist(x[i], c));
            d2[i] = best;
            total += best;
        }
        std::size_t pick = 0;
        if (total > 0.0) {
            double r = rng.next_double() * total;
            double acc = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                acc += d2[i];
                if (acc >= r) {
                    pick = i;
                    break;
                }
            }
        } else {
            pick = rng.next_below(n);
        }
        centroids.push_back(x[pick]);
    }

    std::vector<int> assign(n, 0);
    for (int it = 0; it < max_iter; ++it) {
        bool changed = false;
        for (std::size_t i = 0; i < n; ++i) {
            int best_c = 0;
            double best_d = std::numeric_limits<double>::infinity();
            for (int c = 0; c < k; ++c) {
                double d = sq_dist(x[i], centroids[static_cast<std::size_t>(c)]);
                if (d < best_d) {
                    best_d = d;
                    best_c = c;
                }
            }
            if (assign[i] != best_c) {
                assign[i] = best_c;
                changed = true;
            }
        }
        // recompute centroids; empty clusters grab the point farthest from
        // its centroid so every cluster stays non-empty
        std::vector<std::vector<double>> sums(static_cast<std::size_t>(k),
                                              std::vector<double>(dim, 0.0));
        std::vector<std::size_t> counts(static_cast<std::size_t>(k), 0);
        for (std::size_t i = 0; i < n; ++i) {
            auto c = static_cast<std::size_t>(assign[i]);
            ++counts[c];
            for (std::size_t d = 0; d < dim; ++d) sums[c][d] += x[i][d];
        }
        for (int c = 0; c < k; ++c) {
            auto cu = static_cast<std::size_t>(c);
            if (counts[cu] == 0) {
                std::size_t farthest = 0;
                double far_d = -1.0;
                for (std::size_t i = 0; i < n; ++i) {
                    if (counts[static_cast<std::size_t>(assign[i])] <= 1) continue;
                    double d = sq_dist(x[i], centroids[static_cast<std::size_t>(assign[i])]);
                    if (d > far_d) {
                        far_d = d;
                        farthest = i;
                    }
                }
                --counts[static_cast<std::size_t>(assign[farthest])];
                for (std::size_t d = 0; d < dim; ++d)
                    sums[static_cast<std::size_t>(assign[farthest])][d] -= x[farthest][d];
                assign[farthest] = c;
                counts[cu] = 1;
                sums[cu] = x[farthest];
                changed = true;
            }
            for (std::size_t d = 0; d < dim; ++d)
                centroids[cu][d] = sums[cu][d] / static_cast<double>(counts[cu]);
        }
        if (!changed) break;
    }

    KMeansRun run;
    run.assignment = assign;
    run.objective = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        run.objective += sq_dist(x[i], centroids[static_cast<std::size_t>(assign[i])]);
    return run;
}

}  // namespace

std::string role_name(Role r) {
    switch (r) {
        case Role::Train: return "train";
        case Role::Eval: return "eval";
        case Role::Test: return "test";
    }
    return "?";
}

Role role_from_name(const std::string& s) {
    if (s == "train") return Role::Train;
    if (s == "eval") return Role::Eval;
    if (s == "test") return Role::Test;
    throw DataError("unknown role: " + s);
}

std::vector<std::int64_t> FoldPlan::ids_with_role(int fold, Role role) const {
    std::vector<std::int64_t> out;
    for (const auto& [id, r] : assignments[static_cast<std::size_t>(fold)])
        if (r == role) out.push_back(id);
    return out;
}

int choose_fold_count(const SignalDataset& dataset) {
    std::size_t min_class = std::min(dataset.count_label(0), dataset.count_label(1));
    if (min_class >= 25) return 5;
    if (min_class >= 9) return 3;
    return 2;
}

double silhouette_score(const std::vector<std::vector<double>>& vectors,
                        const std::vector<int>& assignment) {
    const std::size_t n = vectors.size();
    if (n != assignment.size()) throw InternalError("silhouette: size mismatch");
    std::set<int> clusters(assignment.begin(), assignment.end());
    if (clusters.size() < 2) throw DataError("silhouette: need at least 2 clusters");
    int max_c = *std::max_element(assignment.begin(), assignment.end());
    std::vector<std::size_t> counts(static_cast<std::size_t>(max_c) + 1, 0);
    for (int c : assignment) ++counts[static_cast<std::size_t>(c)];

    double total = 0.0;
    std::vector<double> dist_sum(counts.size());
    for (std::size_t i = 0; i < n; ++i) {
        std::fill(dist_sum.begin(), dist_sum.end(), 0.0);
        for (std::size_t j = 0; j < n; ++j) {
            if (i == j) continue;
            dist_sum[static_cast<std::size_t>(assignment[j])] +=
                std::sqrt(sq_dist(vectors[i], vectors[j]));
        }
        auto own = static_cast<std::size_t>(assignment[i]);
        if (counts[own] <= 1) continue;  // singleton convention: s(i) = 0
        double a = dist_sum[own] / static_cast<double>(counts[own] - 1);
        double b = std::numeric_limits<double>::infinity();
        for (std::size_t c = 0; c < counts.size(); ++c) {
            if (c == own || counts[c] == 0) continue;
            b = std::min(b, dist_sum[c] / static_cast<double>(counts[c]));
        }
        double denom = std::max(a, b);
        if (denom > 0.0) total += (b - a) / denom;
    }
    return total / static_cast<double>(n);
}

ClusteringResult cluster_instances(const std::vector<std::vector<double>>& vectors,
                                   const std::vector<std::int64_t>& instance_ids, int k_min, int k_max,
                                   std::uint64_t seed, const KMeansOptions& opts) {
    const std::size_t n = vectors.size();
    if (n < 3) throw DataError("cluster_instances: need at least 3 instances");
    if (vectors.size() != instance_ids.size()) throw InternalError("cluster_instances: id mismatch");
    k_min = std::max(k_min, 2);
    k_max = std::min<int>(k_max, static_cast<int>(n) - 1);
    if (k_max < k_min) k_max = k_min;

    // silhouette subsample for large n (seeded, shared across k values)
    std::vector<std::size_t> sil_idx(n);
    std::iota(sil_idx.begin(), sil_idx.end(), 0);
    if (n > opts.silhouette_sample_cap) {
        Rng rng(derive_seed(seed, 0x51100));
        rng.shuffle(sil_idx);
        sil_idx.resize(opts.silhouette_sample_cap);
        std::sort(sil_idx.begin(), sil_idx.end());
    }

    ClusteringResult best;
    double best_sil = -std::numeric_limits<double>::infinity();
    for (int k = k_min; k <= k_max; ++k) {
        KMeansRun best_run;
        for (int r = 0; r < opts.restarts; ++r) {
            Rng rng(derive_seed(seed, (static_cast<std::uint64_t>(k) << 16) | static_cast<std::uint64_t>(r)));
            KMeansRun run = kmeans_once(vectors, k, rng, opts.max_iterations);
            if (run.objective < best_run.objective) best_run = std::move(run);
        }
        std::vector<std::vector<double>> sub_vecs;
        std::vector<int> sub_assign;
        sub_vecs.reserve(sil_idx.size());
        for (std::size_t idx : sil_idx) {
            sub_vecs.push_back(vectors[idx]);
            sub_assign.push_back(best_run.assignment[idx]);
        }
        double sil = 0.0;
        if (std::set<int>(sub_assign.begin(), sub_assign.end()).size() >= 2)
            sil = silhouette_score(sub_vecs, sub_assign);
        if (sil > best_sil) {
            best_sil = sil;
            best.k_clusters = k;
            best.assignment.clear();
            for (std::size_t i = 0; i < n; ++i) best.assignment[instance_ids[i]] = best_run.assignment[i];
            best.silhouette = sil;
        }
    }
    return best;
}

std::vector<double> instance_summary_vector(const SignalInstance& instance, double rate_hz) {
    const auto& x = instance.samples;
    const auto n = static_cast<double>(x.size());
    double mean = std::accumulate(x.begin(), x.end(), 0.0) / n;
    double m2 = 0.0, m3 = 0.0, m4 = 0.0, rms = 0.0;
    double mn = x[0], mx = x[0];
    std::size_t zero_cross = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        double d = x[i] - mean;
        m2 += d * d;
        m3 += d * d * d;
        m4 += d * d * d * d;
        rms += x[i] * x[i];
        mn = std::min(mn, x[i]);
        mx = std::max(mx, x[i]);
        if (i > 0 && ((x[i - 1] >= 0.0) != (x[i] >= 0.0))) ++zero_cross;
    }
    m2 /= n;
    m3 /= n;
    m4 /= n;
    double sd = std::sqrt(m2);
    double skew = m2 > 0.0 ? m3 / (m2 * sd) : 0.0;
    double kurt = m2 > 0.0 ? m4 / (m2 * m2) - 3.0 : 0.0;

    std::vector<double> v = {mean,
                             sd,
                             std::sqrt(rms / n),
                             mn,
                             mx,
                             skew,
                             kurt,
                             static_cast<double>(zero_cross) / n};

    // energies of 8 octave-spaced bands up to Nyquist
    Spectrum spec = stft_magnitude(x, rate_hz, next_pow2(x.size()), FftWindow::Hann);
    double nyq = rate_hz / 2.0;
    for (int band = 1; band <= 8; ++band) {
        double lo = band == 1 ? 0.0 : nyq / std::pow(2.0, 9 - band);
        double hi = nyq / std::pow(2.0, 8 - band);
        double e = 0.0;
        for (std::size_t k = 0; k < spec.magnitudes.size(); ++k) {
            double f = static_cast<double>(k) * spec.bin_hz;
            if (f >= lo && (f < hi || (band == 8 && f <= hi))) e += spec.magnitudes[k] * spec.magnitudes[k];
        }
        v.push_back(e);
    }
    return v;
}

FoldPlan build_fold_plan(const SignalDataset& dataset, const ClusteringResult& clustering, int n_folds,
                         std::uint64_t seed) {
    if (n_folds < 2) throw ConfigError("build_fold_plan: n_folds must be >= 2");
    for (int label : {0, 1}) {
        std::size_t cnt = dataset.count_label(label);
        if (cnt < static_cast<std::size_t>(n_folds))
            throw DataError("class " + std::to_string(label) + " has " + std::to_string(cnt) +
                            " instances, fewer than " + std::to_string(n_folds) + " folds");
    }

    // cells: (cluster, class) -> shuffled instance ids
    std::map<std::pair<int, int>, std::vector<std::int64_t>> cells;
    for (const auto& inst : dataset.instances) {
        auto it = clustering.assignment.find(inst.instance_id);
        int cluster = it == clustering.assignment.end() ? 0 : it->second;
        cells[{cluster, inst.label}].push_back(inst.instance_id);
    }
    {
        std::uint64_t stream = 1;
        for (auto& [key, ids] : cells) {
            std::sort(ids.begin(), ids.end());
            Rng rng(derive_seed(seed, stream++));
            rng.shuffle(ids);
        }
    }

    // Deal each cluster's members into n_folds test shares round-robin. The
    // cluster's starting offset is chosen to keep per-class test totals
    // balanced across folds (contiguous dealing keeps per-cluster and
    // per-cell shares within one of proportional).
    std::set<int> cluster_set;
    for (const auto& [key, ids] : cells) cluster_set.insert(key.first);
    std::map<std::int64_t, int> test_fold_of;
    std::vector<std::array<std::size_t, 2>> class_test_count(static_cast<std::size_t>(n_folds), {0, 0});

    for (int cluster : cluster_set) {
        std::vector<std::pair<std::int64_t, int>> members;  // (id, label), classes concatenated
        for (int label : {0, 1}) {
            auto it = cells.find({cluster, label});
            if (it == cells.end()) continue;
            for (auto id : it->second) members.emplace_back(id, label);
        }
        // pick the offset whose dealing best balances the per-class totals
        int best_offset = 0;
        double best_score = std::numeric_limits<double>::infinity();
        for (int off = 0; off < n_folds; ++off) {
            auto counts = class_test_count;
            for (std::size_t i = 0; i < members.size(); ++i) {
                int f = (static_cast<int>(i) + off) % n_folds;
                ++counts[static_cast<std::size_t>(f)][static_cast<std::size_t>(members[i].second)];
            }
            double score = 0.0;
            for (int lab = 0; lab < 2; ++lab) {
                std::size_t mx = 0, mnv = std::numeric_limits<std::size_t>::max();
                for (int f = 0; f < n_folds; ++f) {
                    mx = std::max(mx, counts[static_cast<std::size_t>(f)][static_cast<std::size_t>(lab)]);
                    mnv = std::min(mnv, counts[static_cast<std::size_t>(f)][static_cast<std::size_t>(lab)]);
                }
                score += static_cast<double>(mx - mnv);
            }
            if (score < best_score) {
                best_score = score;
                best_offset = off;
            }
        }
        for (std::size_t i = 0; i < members.size(); ++i) {
            int f = (static_cast<int>(i) + best_offset) % n_folds;
            test_fold_of[members[i].first] = f;
            ++class_test_count[static_cast<std::size_t>(f)][static_cast<std::size_t>(members[i].second)];
        }
    }

    // Guarantee every fold's test share holds both classes: swap two
    // same-cluster, different-class instances between folds (preserves
    // per-cluster per-fold counts and the tests-exactly-once property).
    std::map<std::int64_t, std::pair<int, int>> cell_of;  // id -> (cluster, label)
    for (const auto& [key, ids] : cells)
        for (auto id : ids) cell_of[id] = key;
    for (int f = 0; f < n_folds; ++f) {
        for (int lab = 0; lab < 2; ++lab) {
            if (class_test_count[static_cast<std::size_t>(f)][static_cast<std::size_t>(lab)] > 0) continue;
            bool fixed = false;
            // donor fold g with >= 2 of lab; swap with a non-lab member of f in the same cluster
            for (int g = 0; g < n_folds && !fixed; ++g) {
                if (g == f || class_test_count[static_cast<std::size_t>(g)][static_cast<std::size_t>(lab)] < 2)
                    continue;
                for (auto& [id_a, fa] : test_fold_of) {
                    if (fa != g || cell_of[id_a].second != lab) continue;
                    for (auto& [id_b, fb] : test_fold_of) {
                        if (fb != f || cell_of[id_b].second == lab) continue;
                        if (cell_of[id_b].first != cell_of[id_a].first) continue;
                        if (class_test_count[static_cast<std::size_t>(f)]
                                            [static_cast<std::size_t>(1 - lab)] < 2)
                            continue;
                        std::swap(fa, fb);
                        ++class_test_count[static_cast<std::size_t>(f)][static_cast<std::size_t>(lab)];
                        --class_test_count[static_cast<std::size_t>(g)][static_cast<std::size_t>(lab)];
                        --class_test_count[static_cast<std::size_t>(f)][static_cast<std::size_t>(1 - lab)];
                        ++class_test_count[static_cast<std::size_t>(g)][static_cast<std::size_t>(1 - lab)];
                        fixed = true;
                        break;
                    }
                    if (fixed) break;
                }
            }
            if (!fixed)
                throw DataError("cannot place class " + std::to_string(lab) + " in test of fold " +
                                std::to_string(f));
        }
    }

    // Per fold: remaining instances split Train:Eval = 3:1 per cell, dealt
    // round-robin with a rotating per-class offset so small cells still
    // reach Eval.
    FoldPlan plan;
    plan.n_folds = n_folds;
    plan.seed = seed;
    plan.assignments.resize(static_cast<std::size_t>(n_folds));
    for (int f = 0; f < n_folds; ++f) {
        auto& amap = plan.assignments[static_cast<std::size_t>(f)];
        std::array<std::size_t, 2> class_pos = {0, 0};
        for (const auto& [key, ids] : cells) {
            auto lab = static_cast<std::size_t>(key.second);
            for (auto id : ids) {
                if (test_fold_of[id] == f) {
                    amap[id] = Role::Test;
                } else {
                    amap[id] = (class_pos[lab] % 4 == 3) ? Role::Eval : Role::Train;
                    ++class_pos[lab];
                }
            }
        }
        // class presence in Train and Eval, stealing from the larger role
        for (int lab = 0; lab < 2; ++lab) {
            for (Role need : {Role::Train, Role::Eval}) {
                bool present = false;
                for (const auto& [id, role] : amap)
                    if (role == need && cell_of[id].second == lab) present = true;
                if (present) continue;
                Role donor_role = need == Role::Train ? Role::Eval : Role::Train;
                std::int64_t donor = -1;
                std::size_t donor_count = 0;
                for (const auto& [id, role] : amap)
                    if (role == donor_role && cell_of[id].second == lab) {
                        ++donor_count;
                        if (donor < 0) donor = id;
                    }
                if (donor < 0 || donor_count < 2)
                    throw DataError("fold " + std::to_string(f) + ": class " + std::to_string(lab) +
                                    " cannot cover role " + role_name(need));
                amap[donor] = need;
            }
        }
    }
    return plan;
}

}  // namespace sigfeat
