#include "latlab/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace latlab {

CfrtReport cfrt_from_predictions(const CfrtPredictions& preds, Attribute target, double flip_threshold) {
    if (preds.items.empty()) throw std::invalid_argument("cfrt: empty counterfactual set");
    const auto& universe = preds.attributes;
    if (std::find(universe.begin(), universe.end(), target) == universe.end()) {
        throw std::invalid_argument("cfrt: attribute '" + attribute_name(target) + "' not in the set");
    }
    for (size_t s = 0; s < preds.items.size(); ++s) {
        for (Attribute a : universe) {
            if (!preds.items[s].has_counterfactual[static_cast<size_t>(a)]) {
                throw std::invalid_argument("cfrt: sample " + std::to_string(s) +
                                            " is missing the counterfactual for '" + attribute_name(a) + "'");
            }
        }
    }

    CfrtReport report;
    report.attribute = target;
    report.flip_threshold = flip_threshold;
    report.tau = preds.tau;
    const auto ti = static_cast<size_t>(target);

    double sum = 0.0;
    for (const auto& item : preds.items) {
        const Classification& base = item.neutral;
        const Classification& cf_target = item.counterfactual[ti];

        CfrtSample s;
        s.delta_target = std::abs(base.attr_probs[ti] - cf_target.attr_probs[ti]);
        s.max_other = 0.0;
        for (Attribute j : universe) {
            if (j == target) continue;
            const Classification& cf_j = item.counterfactual[static_cast<size_t>(j)];
            s.max_other = std::max(s.max_other, std::abs(base.attr_probs[ti] - cf_j.attr_probs[ti]));
        }
        s.margin_ok = s.delta_target > s.max_other;

        const auto argmax = [](const std::array<double, 4>& p) {
            int best = 0;
            for (int j = 1; j < 4; ++j)
                if (p[static_cast<size_t>(j)] > p[static_cast<size_t>(best)]) best = j;
            return best;
        };
        s.content_ok = argmax(base.content_probs) == argmax(cf_target.content_probs);

        s.others_ok = true;
        for (Attribute k : universe) {
            if (k == target) continue;
            const auto ki = static_cast<size_t>(k);
            const bool base_on = base.attr_probs[ki] >= flip_threshold;
            const bool cf_on = cf_target.attr_probs[ki] >= flip_threshold;
            if (base_on != cf_on) {
                s.others_ok = false;
                break;
            }
        }

        s.indicator = s.margin_ok && s.content_ok && s.others_ok;
        sum += s.indicator ? 1.0 : 0.0;
        report.breakdown.push_back(s);
    }
    report.score = sum / static_cast<double>(preds.items.size());
    return report;
}

CfrtReport cfrt(const CounterfactualSet& cf_set, const ClassifierModel& classifier, Attribute target,
                double flip_threshold) {
    if (cf_set.items.empty()) throw std::invalid_argument("cfrt: empty counterfactual set");
    for (size_t s = 0; s < cf_set.items.size(); ++s) {
        for (Attribute a : cf_set.attributes) {
            if (!cf_set.items[s].has_counterfactual[static_cast<size_t>(a)]) {
                throw std::invalid_argument("cfrt: sample " + std::to_string(s) +
                                            " is missing the counterfactual for '" + attribute_name(a) + "'");
            }
        }
    }
    CfrtPredictions preds;
    preds.attributes = cf_set.attributes;
    preds.tau = cf_set.tau;
    for (const auto& item : cf_set.items) {
        CfrtPredictions::Item p;
        p.neutral = classify(classifier, item.neutral);
        for (Attribute a : cf_set.attributes) {
            const auto ai = static_cast<size_t>(a);
            p.has_counterfactual[ai] = true;
            p.counterfactual[ai] = classify(classifier, item.counterfactual[ai]);
        }
        preds.items.push_back(std::move(p));
    }
    return cfrt_from_predictions(preds, target, flip_threshold);
}

CosineMatrix cosine_matrix(const Trajectory& traj) {
    CosineMatrix m;
    for (int k = 0; k < 9; ++k) m.grid[static_cast<size_t>(k)] = 5 * (k + 1);

    std::array<const Tensor*, 9> z{};
    for (int k = 0; k < 9; ++k) {
        const int tau = m.grid[static_cast<size_t>(k)];
        const auto it = std::find_if(traj.points.begin(), traj.points.end(),
                                     [tau](const TrajectoryPoint& p) { return p.tau == tau; });
        if (it == traj.points.end()) {
            throw std::invalid_argument("cosine_matrix: trajectory has no point at tau=" + std::to_string(tau));
        }
        z[static_cast<size_t>(k)] = &it->z0;
    }

    std::array<Tensor, 9> delta;
    std::array<double, 9> norm{};
    for (int k = 0; k < 9; ++k) {
        delta[static_cast<size_t>(k)] = sub(*z[static_cast<size_t>(k)], traj.z_orig);
        norm[static_cast<size_t>(k)] = l2_norm(delta[static_cast<size_t>(k)]);
    }
    for (int i = 0; i < 9; ++i) {
        for (int j = 0; j < 9; ++j) {
            const bool ok = norm[static_cast<size_t>(i)] >= 1e-12 && norm[static_cast<size_t>(j)] >= 1e-12;
            m.defined[static_cast<size_t>(i)][static_cast<size_t>(j)] = ok;
            if (!ok) continue;
            m.value[static_cast<size_t>(i)][static_cast<size_t>(j)] =
                (i == j) ? 1.0
                         : dot(delta[static_cast<size_t>(i)], delta[static_cast<size_t>(j)]) /
                               (norm[static_cast<size_t>(i)] * norm[static_cast<size_t>(j)]);
        }
    }
    return m;
}

double perceptual_distance(const Tensor& a, const Tensor& b, const ClassifierModel& classifier) {
    if (!a.same_shape(b)) throw std::invalid_argument("perceptual_distance: shape mismatch");
    const auto fa = features(classifier, a);
    const auto fb = features(classifier, b);
    double sum = 0.0;
    for (size_t layer = 0; layer < fa.size(); ++layer) {
        sum += l2_norm(sub(fa[layer].v, fb[layer].v));
    }
    return sum / static_cast<double>(fa.size());
}

// Cyclic Jacobi for symmetric matrices; eigenpairs returned descending.
static void jacobi_eigen_sym(Tensor a, std::vector<double>& vals, Tensor& vecs) {
    const int64_t n = a.rows();
    vecs = Tensor({n, n});
    for (int64_t i = 0; i < n; ++i) vecs.at2(i, i) = 1.0;

    double off = 0.0, diag = 0.0;
    for (int64_t i = 0; i < n; ++i)
        for (int64_t j = 0; j < n; ++j) (i == j ? diag : off) += a.at2(i, j) * a.at2(i, j);
    const double tol = 1e-26 * std::max(1.0, diag + off);

    for (int sweep = 0; sweep < 100; ++sweep) {
        double off_now = 0.0;
        for (int64_t i = 0; i < n; ++i)
            for (int64_t j = i + 1; j < n; ++j) off_now += 2.0 * a.at2(i, j) * a.at2(i, j);
        if (off_now <= tol) break;
        for (int64_t p = 0; p < n - 1; ++p) {
            for (int64_t q = p + 1; q < n; ++q) {
                const double apq = a.at2(p, q);
                if (std::abs(apq) < 1e-300) continue;
                const double theta = (a.at2(q, q) - a.at2(p, p)) / (2.0 * apq);
                const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                                 (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                for (int64_t k = 0; k < n; ++k) {
                    const double akp = a.at2(k, p), akq = a.at2(k, q);
                    a.at2(k, p) = c * akp - s * akq;
                    a.at2(k, q) = s * akp + c * akq;
                }
                for (int64_t k = 0; k < n; ++k) {
                    const double apk = a.at2(p, k), aqk = a.at2(q, k);
                    a.at2(p, k) = c * apk - s * aqk;
                    a.at2(q, k) = s * apk + c * aqk;
                }
                for (int64_t k = 0; k < n; ++k) {
                    const double vkp = vecs.at2(k, p), vkq = vecs.at2(k, q);
                    vecs.at2(k, p) = c * vkp - s * vkq;
                    vecs.at2(k, q) = s * vkp + c * vkq;
                }
            }
        }
    }
    vals.resize(static_cast<size_t>(n));
    std::vector<int64_t> order(static_cast<size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    std::vector<double> d(static_cast<size_t>(n));
    for (int64_t i = 0; i < n; ++i) d[static_cast<size_t>(i)] = a.at2(i, i);
    std::stable_sort(order.begin(), order.end(),
                     [&](int64_t x, int64_t y) { return d[static_cast<size_t>(x)] > d[static_cast<size_t>(y)]; });
    Tensor sorted({n, n});
    for (int64_t c = 0; c < n; ++c) {
        vals[static_cast<size_t>(c)] = d[static_cast<size_t>(order[static_cast<size_t>(c)])];
        for (int64_t r = 0; r < n; ++r) sorted.at2(r, c) = vecs.at2(r, order[static_cast<size_t>(c)]);
    }
    vecs = std::move(sorted);
}

PcaResult pca_project(const std::vector<Tensor>& latents, int k) {
    if (k < 1) throw std::invalid_argument("pca_project: k must be >= 1");
    const auto n = static_cast<int64_t>(latents.size());
    if (n < k + 1) {
        throw std::invalid_argument("pca_project: need at least " + std::to_string(k + 1) + " latents, got " +
                                    std::to_string(n));
    }
    const int64_t d = latents.front().size();
    Tensor x({n, d});
    for (int64_t i = 0; i < n; ++i) {
        if (latents[static_cast<size_t>(i)].size() != d)
            throw std::invalid_argument("pca_project: latent sizes differ");
        for (int64_t j = 0; j < d; ++j) x.at2(i, j) = latents[static_cast<size_t>(i)][j];
    }
    for (int64_t j = 0; j < d; ++j) {
        double mean = 0.0;
        for (int64_t i = 0; i < n; ++i) mean += x.at2(i, j);
        mean /= static_cast<double>(n);
        for (int64_t i = 0; i < n; ++i) x.at2(i, j) -= mean;
    }

    // Dual PCA: eigendecompose the N x N Gram matrix, then map back to pixel
    // space for directions and loadings.
    const Tensor gram = matmul(x, x, false, true);
    std::vector<double> vals;
    Tensor vecs;
    jacobi_eigen_sym(gram, vals, vecs);

    PcaResult res;
    res.coords = Tensor({n, k});
    res.directions = Tensor({k, d});
    res.explained_variance.assign(static_cast<size_t>(k), 0.0);
    const double rank_tol = 1e-12 * std::max(1.0, vals.empty() ? 0.0 : vals[0]);
    for (int c = 0; c < k; ++c) {
        const double lambda = vals[static_cast<size_t>(c)];
        if (lambda <= rank_tol) continue;   // beyond the data rank: zeros
        const double root = std::sqrt(lambda);
        Tensor dir({d});
        for (int64_t j = 0; j < d; ++j) {
            double s = 0.0;
            for (int64_t i = 0; i < n; ++i) s += x.at2(i, j) * vecs.at2(i, c);
            dir[j] = s / root;
        }
        // Sign convention: the largest-magnitude loading is positive.
        int64_t arg = 0;
        for (int64_t j = 1; j < d; ++j)
            if (std::abs(dir[j]) > std::abs(dir[arg])) arg = j;
        const double flip = dir[arg] < 0.0 ? -1.0 : 1.0;
        for (int64_t j = 0; j < d; ++j) res.directions.at2(c, j) = flip * dir[j];
        for (int64_t i = 0; i < n; ++i) res.coords.at2(i, c) = flip * root * vecs.at2(i, c);
        res.explained_variance[static_cast<size_t>(c)] = lambda / static_cast<double>(n - 1);
    }
    return res;
}

double spearman_rank_correlation(const std::vector<double>& a, const std::vector<double>& b,
                                 bool& defined) {
    if (a.size() != b.size() || a.size() < 2) {
        throw std::invalid_argument("spearman_rank_correlation: need two equal-length series");
    }
    const auto ranks = [](const std::vector<double>& v) {
        const size_t n = v.size();
        std::vector<size_t> order(n);
        std::iota(order.begin(), order.end(), size_t{0});
        std::stable_sort(order.begin(), order.end(), [&](size_t x, size_t y) { return v[x] < v[y]; });
        std::vector<double> r(n);
        size_t i = 0;
        while (i < n) {
            size_t j = i;
            while (j + 1 < n && v[order[j + 1]] == v[order[i]]) ++j;
            const double avg = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
            for (size_t k = i; k <= j; ++k) r[order[k]] = avg;
            i = j + 1;
        }
        return r;
    };
    const std::vector<double> ra = ranks(a);
    const std::vector<double> rb = ranks(b);
    const double n = static_cast<double>(a.size());
    double ma = 0.0, mb = 0.0;
    for (size_t i = 0; i < a.size(); ++i) {
        ma += ra[i];
        mb += rb[i];
    }
    ma /= n;
    mb /= n;
    double cov = 0.0, va = 0.0, vb = 0.0;
    for (size_t i = 0; i < a.size(); ++i) {
        cov += (ra[i] - ma) * (rb[i] - mb);
        va += (ra[i] - ma) * (ra[i] - ma);
        vb += (rb[i] - mb) * (rb[i] - mb);
    }
    if (va <= 0.0 || vb <= 0.0) {
        defined = false;
        return 0.0;
    }
    defined = true;
    return cov / std::sqrt(va * vb);
}

static PerceptualReport evaluate_points(const Trajectory& traj, const std::vector<double>& positions,
                                        const std::vector<const Tensor*>& latents,
                                        const ClassifierModel& classifier, Attribute style) {
    if (!traj.plan.style_spec.contains(style)) {
        throw std::invalid_argument("evaluate_trajectory: attribute '" + attribute_name(style) +
                                    "' is not part of the trajectory's style prompt");
    }
    PerceptualReport report;
    report.style = style;
    report.position = positions;
    for (const Tensor* z : latents) {
        report.distance.push_back(perceptual_distance(*z, traj.z_orig, classifier));
        report.style_prob.push_back(classify(classifier, *z).attr_probs[static_cast<size_t>(style)]);
    }
    report.spearman_rho = spearman_rank_correlation(report.position, report.style_prob, report.rho_defined);
    return report;
}

PerceptualReport evaluate_trajectory(const Trajectory& traj, const ClassifierModel& classifier,
                                     Attribute style) {
    std::vector<double> positions;
    std::vector<const Tensor*> latents;
    for (const auto& p : traj.points) {
        positions.push_back(static_cast<double>(p.tau));
        latents.push_back(&p.z0);
    }
    return evaluate_points(traj, positions, latents, classifier, style);
}

PerceptualReport evaluate_curve_samples(const Trajectory& traj, const CurveSamples& samples,
                                        const ClassifierModel& classifier, Attribute style) {
    std::vector<const Tensor*> latents;
    for (const auto& z : samples.latents) latents.push_back(&z);
    return evaluate_points(traj, samples.u, latents, classifier, style);
}

} // namespace latlab
