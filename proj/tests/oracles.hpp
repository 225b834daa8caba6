#pragma once

// Straightforward reference implementations used only by the tests. They
// share no code with the library beyond plain data types.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <numeric>
#include <optional>
#include <random>
#include <vector>

namespace oracle {

using Vec = std::vector<double>;
using Mat = std::vector<Vec>;  // row-major rows

inline double sorted_median(Vec v) {
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 ? v[n / 2] : (v[n / 2 - 1] + v[n / 2]) / 2.0;
}

inline Vec column(const Mat& rows, std::size_t j) {
    Vec out;
    for (const Vec& r : rows) out.push_back(r[j]);
    return out;
}

inline Vec coordinate_median(const Mat& rows) {
    Vec out;
    for (std::size_t j = 0; j < rows[0].size(); ++j) out.push_back(sorted_median(column(rows, j)));
    return out;
}

inline Vec trimmed_mean(const Mat& rows, std::size_t k) {
    Vec out;
    for (std::size_t j = 0; j < rows[0].size(); ++j) {
        Vec c = column(rows, j);
        std::sort(c.begin(), c.end());
        double s = 0.0;
        for (std::size_t i = k; i < c.size() - k; ++i) s += c[i];
        out.push_back(s / static_cast<double>(c.size() - 2 * k));
    }
    return out;
}

inline double sq_dist(const Vec& a, const Vec& b) {
    double s = 0.0;
    for (std::size_t j = 0; j < a.size(); ++j) s += (a[j] - b[j]) * (a[j] - b[j]);
    return s;
}

// Scores every candidate by enumerating all neighbour subsets of size
// n - k - 2 and keeping the cheapest one.
inline std::size_t krum_brute_force(const Mat& rows, std::size_t k) {
    const std::size_t n = rows.size();
    const std::size_t m = n - k - 2;
    std::size_t best = 0;
    double best_score = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n; ++i) {
        std::vector<std::size_t> others;
        for (std::size_t j = 0; j < n; ++j)
            if (j != i) others.push_back(j);
        double score = std::numeric_limits<double>::infinity();
        for (unsigned mask = 0; mask < (1u << others.size()); ++mask) {
            if (static_cast<std::size_t>(__builtin_popcount(mask)) != m) continue;
            double s = 0.0;
            for (std::size_t b = 0; b < others.size(); ++b)
                if (mask & (1u << b)) s += sq_dist(rows[i], rows[others[b]]);
            score = std::min(score, s);
        }
        if (score < best_score) {
            best_score = score;
            best = i;
        }
    }
    return best;
}

// Cluster partition by explicit density reachability; labels are canonical
// (first-appearance order), -1 = noise.
inline std::vector<int> dbscan_reachability(const Vec& v, double eps, std::size_t min_pts) {
    const std::size_t n = v.size();
    auto nb = [&](std::size_t i) {
        std::size_t c = 0;
        for (double x : v) c += std::abs(x - v[i]) <= eps;
        return c;
    };
    std::vector<bool> core(n);
    for (std::size_t i = 0; i < n; ++i) core[i] = nb(i) >= min_pts;
    // connected components of cores
    std::vector<int> comp(n, -1);
    int next = 0;
    for (std::size_t i = 0; i < n; ++i) {
        if (!core[i] || comp[i] >= 0) continue;
        std::vector<std::size_t> stack{i};
        comp[i] = next;
        while (!stack.empty()) {
            const std::size_t a = stack.back();
            stack.pop_back();
            for (std::size_t b = 0; b < n; ++b) {
                if (core[b] && comp[b] < 0 && std::abs(v[a] - v[b]) <= eps) {
                    comp[b] = next;
                    stack.push_back(b);
                }
            }
        }
        ++next;
    }
    // border points join the component of some core within eps
    std::vector<int> out(n, -1);
    for (std::size_t i = 0; i < n; ++i) {
        if (core[i]) {
            out[i] = comp[i];
            continue;
        }
        for (std::size_t b = 0; b < n; ++b) {
            if (core[b] && std::abs(v[i] - v[b]) <= eps) {
                out[i] = comp[b];
                break;
            }
        }
    }
    return out;
}

// Two labelings describe the same partition (noise must match exactly).
inline bool same_partition(const std::vector<int>& a, const std::vector<int>& b) {
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if ((a[i] < 0) != (b[i] < 0)) return false;
        for (std::size_t j = 0; j < a.size(); ++j) {
            if (a[i] < 0 || a[j] < 0) continue;
            if ((a[i] == a[j]) != (b[i] == b[j])) return false;
        }
    }
    return true;
}

struct Confusion {
    std::size_t tp = 0, fp = 0, tn = 0, fn = 0;
};

// flagged: 1 malicious, 0 benign, -1 not evaluated
inline Confusion tally(const std::vector<int>& flagged, const std::vector<bool>& truth) {
    Confusion c;
    for (std::size_t i = 0; i < flagged.size(); ++i) {
        if (flagged[i] < 0) continue;
        if (truth[i] && flagged[i] == 1) ++c.tp;
        if (truth[i] && flagged[i] == 0) ++c.fn;
        if (!truth[i] && flagged[i] == 1) ++c.fp;
        if (!truth[i] && flagged[i] == 0) ++c.tn;
    }
    return c;
}

// ---- models ---------------------------------------------------------------

inline Mat softmax(const Mat& z) {
    Mat p = z;
    for (Vec& r : p) {
        const double mx = *std::max_element(r.begin(), r.end());
        double s = 0.0;
        for (double& x : r) s += (x = std::exp(x - mx));
        for (double& x : r) x /= s;
    }
    return p;
}

// Softmax regression with flat params W (F x M) then b (M).
struct Softmax {
    std::size_t f, m;

    Mat logits(const Vec& w, const Mat& x) const {
        Mat z(x.size(), Vec(m));
        for (std::size_t i = 0; i < x.size(); ++i)
            for (std::size_t c = 0; c < m; ++c) {
                double s = w[f * m + c];
                for (std::size_t j = 0; j < f; ++j) s += x[i][j] * w[j * m + c];
                z[i][c] = s;
            }
        return z;
    }

    // gradient of mean_i -sum_c t_ic log p_ic, for targets whose rows sum to one
    Vec gradient(const Vec& w, const Mat& x, const Mat& t) const {
        const Mat p = softmax(logits(w, x));
        Vec g(w.size(), 0.0);
        const double inv = 1.0 / static_cast<double>(x.size());
        for (std::size_t i = 0; i < x.size(); ++i)
            for (std::size_t c = 0; c < m; ++c) {
                const double d = (p[i][c] - t[i][c]) * inv;
                for (std::size_t j = 0; j < f; ++j) g[j * m + c] += x[i][j] * d;
                g[f * m + c] += d;
            }
        return g;
    }
};

// One-hidden-layer tanh net with flat params W1 (F x H), b1, W2 (H x M), b2.
struct TanhMlp {
    std::size_t f, h, m;

    Vec gradient(const Vec& w, const Mat& x, const Mat& t) const {
        const std::size_t o_b1 = f * h, o_w2 = o_b1 + h, o_b2 = o_w2 + h * m;
        const std::size_t n = x.size();
        Mat a(n, Vec(h)), z(n, Vec(m));
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t k = 0; k < h; ++k) {
                double s = w[o_b1 + k];
                for (std::size_t j = 0; j < f; ++j) s += x[i][j] * w[j * h + k];
                a[i][k] = std::tanh(s);
            }
            for (std::size_t c = 0; c < m; ++c) {
                double s = w[o_b2 + c];
                for (std::size_t k = 0; k < h; ++k) s += a[i][k] * w[o_w2 + k * m + c];
                z[i][c] = s;
            }
        }
        const Mat p = softmax(z);
        Vec g(w.size(), 0.0);
        const double inv = 1.0 / static_cast<double>(n);
        for (std::size_t i = 0; i < n; ++i) {
            Vec dz(m), da(h, 0.0);
            for (std::size_t c = 0; c < m; ++c) dz[c] = (p[i][c] - t[i][c]) * inv;
            for (std::size_t k = 0; k < h; ++k)
                for (std::size_t c = 0; c < m; ++c) {
                    g[o_w2 + k * m + c] += a[i][k] * dz[c];
                    da[k] += w[o_w2 + k * m + c] * dz[c];
                }
            for (std::size_t c = 0; c < m; ++c) g[o_b2 + c] += dz[c];
            for (std::size_t k = 0; k < h; ++k) {
                const double dpre = da[k] * (1.0 - a[i][k] * a[i][k]);
                for (std::size_t j = 0; j < f; ++j) g[j * h + k] += x[i][j] * dpre;
                g[o_b1 + k] += dpre;
            }
        }
        return g;
    }
};

// Plain SGD on (X, softmax(Y)) for `steps` steps.
template <class Model>
Vec unroll(const Model& model, Vec w, const Mat& x, const Mat& y_logits, std::size_t steps, double lr) {
    const Mat t = softmax(y_logits);
    for (std::size_t s = 0; s < steps; ++s) {
        const Vec g = model.gradient(w, x, t);
        for (std::size_t j = 0; j < w.size(); ++j) w[j] -= lr * g[j];
    }
    return w;
}

template <class Model>
double matching_objective(const Model& model, const Vec& w0, const Vec& target, const Mat& x, const Mat& y,
                          std::size_t steps, double lr) {
    return sq_dist(unroll(model, w0, x, y, steps, lr), target);
}

// Central differences of f over every entry of `p`.
inline Vec central_difference(const std::function<double(const Mat&)>& f, Mat p, double h) {
    Vec out;
    for (std::size_t i = 0; i < p.size(); ++i)
        for (std::size_t j = 0; j < p[i].size(); ++j) {
            const double keep = p[i][j];
            p[i][j] = keep + h;
            const double up = f(p);
            p[i][j] = keep - h;
            const double down = f(p);
            p[i][j] = keep;
            out.push_back((up - down) / (2.0 * h));
        }
    return out;
}

// Max relative error over entries where |analytic| exceeds `floor`.
inline double max_relative_error(const Vec& analytic, const Vec& numeric, double floor = 1e-8) {
    double worst = 0.0;
    for (std::size_t i = 0; i < analytic.size(); ++i) {
        if (std::abs(analytic[i]) <= floor) continue;
        const double denom = std::max(std::abs(analytic[i]), std::abs(numeric[i]));
        worst = std::max(worst, std::abs(analytic[i] - numeric[i]) / denom);
    }
    return worst;
}

inline Mat random_matrix(std::mt19937_64& rng, std::size_t rows, std::size_t cols, double scale = 1.0) {
    std::normal_distribution<double> nd(0.0, scale);
    Mat out(rows, Vec(cols));
    for (Vec& r : out)
        for (double& x : r) x = nd(rng);
    return out;
}

}  // namespace oracle
