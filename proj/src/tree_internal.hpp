#pragma once

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

#include "creditlift/rng.hpp"

// Presorted recursive-partitioning core shared by the regression tree (variance
// reduction) and the causal tree (treated-vs-control effect heterogeneity).
// Deterministic: exhaustive scan over midpoints of sorted unique values, ties
// broken by lowest feature index then lowest threshold.

namespace creditlift::detail {

struct TreeNode {
    int feature = -1;  // -1 marks a leaf
    double threshold = 0.0;
    double value = 0.0;
    int left = -1;
    int right = -1;
};

struct Tree {
    std::vector<TreeNode> nodes;

    template <typename Row>
    double predict(const Row& x) const {
        int cur = 0;
        while (nodes[cur].feature >= 0)
            cur = x(nodes[cur].feature) <= nodes[cur].threshold ? nodes[cur].left : nodes[cur].right;
        return nodes[cur].value;
    }
};

// Row indices sorted per feature, feature f occupying [f*n, (f+1)*n), with the
// feature values carried in lockstep so node scans read sequentially. Ties are
// ordered by row index so the layout is reproducible.
struct SortedSpans {
    std::vector<int> order;
    std::vector<double> values;
};

inline SortedSpans presort_features(const Eigen::MatrixXd& X) {
    const int n = static_cast<int>(X.rows());
    const int p = static_cast<int>(X.cols());
    SortedSpans spans;
    spans.order.resize(static_cast<std::size_t>(p) * n);
    spans.values.resize(static_cast<std::size_t>(p) * n);
    for (int f = 0; f < p; ++f) {
        int* ord = spans.order.data() + static_cast<std::size_t>(f) * n;
        double* val = spans.values.data() + static_cast<std::size_t>(f) * n;
        std::iota(ord, ord + n, 0);
        const auto col = X.col(f);
        std::sort(ord, ord + n, [&](int a, int b) {
            if (col(a) != col(b)) return col(a) < col(b);
            return a < b;
        });
        for (int i = 0; i < n; ++i) val[i] = col(ord[i]);
    }
    return spans;
}

enum class SplitKind { variance, effect };

struct TreeParams {
    int max_depth = 6;
    int min_leaf = 5;       // variance: per-child rows; effect: per-child rows of EACH class
    int mtry = 0;           // 0 or >= p means scan every feature
    std::uint64_t seed = 0; // feeds per-node feature subsampling only
    SplitKind kind = SplitKind::variance;
};

class TreeBuilder {
public:
    // cls empty => all rows class 0 (plain regression). Rows with w <= 0 are
    // dropped up front; each feature span keeps its sorted order and carries
    // weight, weighted target, and class in lockstep so node scans stream.
    TreeBuilder(const Eigen::VectorXd& y, const Eigen::VectorXd& w,
                const SortedSpans& master, const std::vector<int>& cls, TreeParams prm)
        : prm_(prm), rng_(prm.seed) {
        const int nm = static_cast<int>(w.size());
        p_ = static_cast<int>(master.order.size() / static_cast<std::size_t>(nm));
        n_ = 0;
        std::vector<char> keep(nm);
        for (int r = 0; r < nm; ++r) {
            keep[r] = w(r) > 0 ? 1 : 0;
            n_ += keep[r];
        }
        const std::size_t cap = static_cast<std::size_t>(p_) * n_;
        ord_.resize(cap);
        val_.resize(cap);
        wgt_.resize(cap);
        wy_.resize(cap);
        cls01_.resize(cap);
        for (int f = 0; f < p_; ++f) {
            const int* mord = master.order.data() + static_cast<std::size_t>(f) * nm;
            const double* mval = master.values.data() + static_cast<std::size_t>(f) * nm;
            std::size_t k = static_cast<std::size_t>(f) * n_;
            for (int i = 0; i < nm; ++i) {
                const int r = mord[i];
                if (!keep[r]) continue;
                ord_[k] = r;
                val_[k] = mval[i];
                wgt_[k] = w(r);
                wy_[k] = w(r) * y(r);
                cls01_[k] = cls.empty() ? 0 : static_cast<char>(cls[r]);
                ++k;
            }
        }
        scratch_.resize(n_);
        scratch_val_.resize(n_);
        scratch_wgt_.resize(n_);
        scratch_wy_.resize(n_);
        scratch_cls_.resize(n_);
        go_left_.assign(nm, 0);
        use_mtry_ = prm_.mtry > 0 && prm_.mtry < p_;
        if (use_mtry_) all_features_.resize(p_);
    }

    Tree build() {
        Tree tree;
        tree.nodes.reserve(64);
        build_node(tree, 0, n_, 0);
        return tree;
    }

private:
    struct Stats {
        double w[2] = {0, 0};
        double s[2] = {0, 0};
        int n[2] = {0, 0};
        void add(int c, double wi, double wyi) {
            w[c] += wi;
            s[c] += wyi;
            ++n[c];
        }
        int rows() const { return n[0] + n[1]; }
        double wsum() const { return w[0] + w[1]; }
        double ssum() const { return s[0] + s[1]; }
    };

    double leaf_value(const Stats& st) const {
        if (prm_.kind == SplitKind::variance) return st.wsum() > 0 ? st.ssum() / st.wsum() : 0.0;
        const double m1 = st.w[1] > 0 ? st.s[1] / st.w[1] : 0.0;
        const double m0 = st.w[0] > 0 ? st.s[0] / st.w[0] : 0.0;
        return m1 - m0;
    }

    bool child_ok(const Stats& st) const {
        if (prm_.kind == SplitKind::variance) return st.rows() >= prm_.min_leaf && st.wsum() > 0;
        return st.n[0] >= prm_.min_leaf && st.n[1] >= prm_.min_leaf && st.w[0] > 0 && st.w[1] > 0;
    }

    double split_score(const Stats& l, const Stats& r) const {
        if (prm_.kind == SplitKind::variance)
            return l.ssum() * l.ssum() / l.wsum() + r.ssum() * r.ssum() / r.wsum();
        const double dl = l.s[1] / l.w[1] - l.s[0] / l.w[0];
        const double dr = r.s[1] / r.w[1] - r.s[0] / r.w[0];
        const double nl = l.rows(), nr = r.rows();
        return nl * nr / (nl + nr) * (dl - dr) * (dl - dr);
    }

    bool can_split(const Stats& st, int depth) const {
        if (depth >= prm_.max_depth) return false;
        if (prm_.kind == SplitKind::variance) return st.rows() >= 2 * prm_.min_leaf;
        return st.n[0] >= 2 * prm_.min_leaf && st.n[1] >= 2 * prm_.min_leaf;
    }

    int build_node(Tree& tree, int lo, int hi, int depth) {
        Stats total;
        {
            // feature 0 span holds the same row set
            const double* wgt = wgt_.data();
            const double* wy = wy_.data();
            const char* cl = cls01_.data();
            for (int i = lo; i < hi; ++i) total.add(cl[i], wgt[i], wy[i]);
        }
        const int node_id = static_cast<int>(tree.nodes.size());
        tree.nodes.emplace_back();
        tree.nodes[node_id].value = leaf_value(total);
        if (!can_split(total, depth)) return node_id;

        int best_f = -1;
        int best_pos = -1;
        double best_thr = 0.0;
        double best_score = -std::numeric_limits<double>::infinity();
        // Variance splits depend only on totals, so min_leaf turns into loop
        // bounds and the candidate window is scanned branch-lean.
        const auto scan_variance = [&](int f) {
            const std::size_t off = static_cast<std::size_t>(f) * n_;
            const double* val = val_.data() + off;
            const double* wgt = wgt_.data() + off;
            const double* wy = wy_.data() + off;
            const double tw = total.wsum();
            const double ts = total.ssum();
            double wl = 0.0, sl = 0.0;
            const int ml = std::max(1, prm_.min_leaf);
            const int first = lo + ml - 1;
            const int last = hi - 1 - ml;
            for (int i = lo; i < first; ++i) {
                wl += wgt[i];
                sl += wy[i];
            }
            for (int i = first; i <= last; ++i) {
                wl += wgt[i];
                sl += wy[i];
                if (!(val[i] < val[i + 1])) continue;
                const double wr = tw - wl;
                const double sr = ts - sl;
                const double score = sl * sl / wl + sr * sr / wr;
                if (score > best_score) {
                    best_score = score;
                    best_f = f;
                    best_pos = i;
                    best_thr = val[i] + 0.5 * (val[i + 1] - val[i]);
                }
            }
        };
        const auto scan_effect = [&](int f) {
            const std::size_t off = static_cast<std::size_t>(f) * n_;
            const double* val = val_.data() + off;
            const double* wgt = wgt_.data() + off;
            const double* wy = wy_.data() + off;
            const char* cl = cls01_.data() + off;
            Stats left;
            for (int i = lo; i < hi - 1; ++i) {
                left.add(cl[i], wgt[i], wy[i]);
                const double xv = val[i];
                const double xn = val[i + 1];
                if (!(xv < xn)) continue;
                Stats right;
                for (int c = 0; c < 2; ++c) {
                    right.w[c] = total.w[c] - left.w[c];
                    right.s[c] = total.s[c] - left.s[c];
                    right.n[c] = total.n[c] - left.n[c];
                }
                if (!child_ok(left) || !child_ok(right)) continue;
                const double score = split_score(left, right);
                if (score > best_score) {
                    best_score = score;
                    best_f = f;
                    best_pos = i;
                    best_thr = xv + 0.5 * (xn - xv);
                }
            }
        };
        const auto scan_feature = [&](int f) {
            if (prm_.kind == SplitKind::variance)
                scan_variance(f);
            else
                scan_effect(f);
        };
        if (use_mtry_) {
            std::iota(all_features_.begin(), all_features_.end(), 0);
            for (int i = 0; i < prm_.mtry; ++i) {
                const int j = i + static_cast<int>(rng_.uniform_int(static_cast<std::uint64_t>(p_ - i)));
                std::swap(all_features_[i], all_features_[j]);
            }
            std::sort(all_features_.begin(), all_features_.begin() + prm_.mtry);
            for (int i = 0; i < prm_.mtry; ++i) scan_feature(all_features_[i]);
        } else {
            for (int f = 0; f < p_; ++f) scan_feature(f);
        }
        if (best_f < 0) return node_id;

        // The best feature's span is sorted, so rows at or left of best_pos are
        // exactly the left child; mark them, stable-partition every span, then
        // clear the marks for the next node.
        const int n_left = best_pos - lo + 1;
        {
            const int* bord = ord_.data() + static_cast<std::size_t>(best_f) * n_;
            for (int i = lo; i <= best_pos; ++i) go_left_[bord[i]] = 1;
        }
        for (int f = 0; f < p_; ++f) {
            const std::size_t off = static_cast<std::size_t>(f) * n_;
            int* ord = ord_.data() + off;
            double* val = val_.data() + off;
            double* wgt = wgt_.data() + off;
            double* wy = wy_.data() + off;
            char* cl = cls01_.data() + off;
            int a = 0, b = 0;
            for (int i = lo; i < hi; ++i) {
                const int r = ord[i];
                if (go_left_[r]) {
                    const int d = lo + a;
                    ord[d] = r;
                    val[d] = val[i];
                    wgt[d] = wgt[i];
                    wy[d] = wy[i];
                    cl[d] = cl[i];
                    ++a;
                } else {
                    scratch_[b] = r;
                    scratch_val_[b] = val[i];
                    scratch_wgt_[b] = wgt[i];
                    scratch_wy_[b] = wy[i];
                    scratch_cls_[b] = cl[i];
                    ++b;
                }
            }
            const int d = lo + a;
            std::copy(scratch_.begin(), scratch_.begin() + b, ord + d);
            std::copy(scratch_val_.begin(), scratch_val_.begin() + b, val + d);
            std::copy(scratch_wgt_.begin(), scratch_wgt_.begin() + b, wgt + d);
            std::copy(scratch_wy_.begin(), scratch_wy_.begin() + b, wy + d);
            std::copy(scratch_cls_.begin(), scratch_cls_.begin() + b, cl + d);
        }
        const int mid = lo + n_left;
        {
            const int* bord = ord_.data() + static_cast<std::size_t>(best_f) * n_;
            for (int i = lo; i < mid; ++i) go_left_[bord[i]] = 0;
        }
        tree.nodes[node_id].feature = best_f;
        tree.nodes[node_id].threshold = best_thr;
        tree.nodes[node_id].left = build_node(tree, lo, mid, depth + 1);
        tree.nodes[node_id].right = build_node(tree, mid, hi, depth + 1);
        return node_id;
    }

    TreeParams prm_;
    int n_;
    int p_;
    std::vector<int> ord_;
    std::vector<double> val_;
    std::vector<double> wgt_;
    std::vector<double> wy_;
    std::vector<char> cls01_;
    Rng rng_;
    std::vector<int> scratch_;
    std::vector<double> scratch_val_;
    std::vector<double> scratch_wgt_;
    std::vector<double> scratch_wy_;
    std::vector<char> scratch_cls_;
    std::vector<char> go_left_;
    std::vector<int> all_features_;
    bool use_mtry_ = false;
};

}  // namespace creditlift::detail
