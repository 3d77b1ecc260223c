#pragma once

#include <sss/dataset.hpp>
#include <sss/errors.hpp>
#include <sss/graph.hpp>
#include <sss/rng.hpp>
#include <sss/stability.hpp>

#include <Eigen/Dense>

#include <algorithm>
#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

namespace sss {

/// A linear-Gaussian SEM with known structure.
struct GroundTruth {
    Dag dag;
    Eigen::MatrixXd coefficients;  // (from, to)
    Eigen::VectorXd noise_variances;
    std::vector<std::string> names;
    ConstraintSet constraints;

    int size() const { return dag.size(); }

    void validate() const {
        const int n = dag.size();
        if (coefficients.rows() != n || coefficients.cols() != n || noise_variances.size() != n ||
            static_cast<int>(names.size()) != n) {
            throw StructuralError("ground truth components disagree on the variable count");
        }
        if ((noise_variances.array() <= 0.0).any()) {
            throw ConfigError("noise variances must be positive");
        }
        for (int i = 0; i < n; ++i) {
            for (int j = 0; j < n; ++j) {
                if (!dag.has_arc(i, j) && coefficients(i, j) != 0.0) {
                    throw StructuralError("coefficient set on a pair that is not an arc");
                }
            }
        }
        constraints.validate(n);
        for (const auto& [a, b] : constraints.pairs()) {
            if (dag.has_arc(a, b)) {
                throw ContractError("ground truth arc " + names[a] + "->" + names[b] + " violates a constraint");
            }
        }
    }
};

/// Coefficients uniform on [-1.5, -0.5] U [0.5, 1.5], unit noise variances.
inline GroundTruth make_ground_truth(Dag dag, std::vector<std::string> names, ConstraintSet constraints, Rng& rng) {
    const int n = dag.size();
    GroundTruth gt;
    gt.coefficients = Eigen::MatrixXd::Zero(n, n);
    for (const auto& [a, b] : dag.arcs()) {
        const double magnitude = 0.5 + uniform01(rng);
        gt.coefficients(a, b) = coin(rng) ? magnitude : -magnitude;
    }
    gt.noise_variances = Eigen::VectorXd::Ones(n);
    gt.dag = std::move(dag);
    gt.names = std::move(names);
    gt.constraints = std::move(constraints);
    gt.validate();
    return gt;
}

/// Arc structure of the waste incinerator network; nothing directly causes the filter state.
inline GroundTruth waste_incinerator(Rng& rng) {
    const std::vector<std::string> names{"B", "W", "F", "C", "E", "D", "L", "Min", "Mout"};
    enum { B, W, F, C, E, D, L, Min, Mout };
    const Dag dag = Dag::from_arcs(9, {{B, C}, {W, C}, {F, E}, {W, E}, {E, D}, {B, D}, {D, L}, {D, Mout},
                                       {Min, Mout}, {W, Min}});
    ConstraintSet constraints;
    for (int v = 0; v < 9; ++v) {
        if (v != F) {
            constraints.forbid(v, F);
        }
    }
    return make_ground_truth(dag, names, std::move(constraints), rng);
}

/// (I-B)^-1 Psi (I-B)^-T.
inline Eigen::MatrixXd implied_covariance(const GroundTruth& gt) {
    const int n = gt.size();
    const Eigen::MatrixXd inv = (Eigen::MatrixXd::Identity(n, n) - gt.coefficients.transpose()).inverse();
    return inv * gt.noise_variances.asDiagonal() * inv.transpose();
}

inline Eigen::MatrixXd generate_samples(const GroundTruth& gt, Eigen::Index rows, Rng& rng) {
    if (rows < 1) {
        throw ConfigError("at least one sample row is required");
    }
    const int n = gt.size();
    const auto order = topological_order(gt.dag);
    const Eigen::VectorXd sd = gt.noise_variances.array().sqrt();
    Eigen::MatrixXd x(rows, n);
    for (Eigen::Index r = 0; r < rows; ++r) {
        for (int i : order) {
            double v = sd(i) * standard_normal(rng);
            for (int p = 0; p < n; ++p) {
                if (gt.dag.has_arc(p, i)) {
                    v += gt.coefficients(p, i) * x(r, p);
                }
            }
            x(r, i) = v;
        }
    }
    return x;
}

inline Dataset generate_data(const GroundTruth& gt, Eigen::Index rows, Rng& rng) {
    return Dataset(generate_samples(gt, rows, rng), gt.names);
}

struct TruePositives {
    std::set<std::pair<int, int>> edges;  // a < b
    std::set<std::pair<int, int>> paths;  // ordered
};

inline TruePositives true_positives(const GroundTruth& gt) {
    const Cpdag cpdag = cons_dag2cpdag(gt.dag, gt.constraints);
    const int n = gt.size();
    TruePositives out;
    for (const auto& e : cpdag.edges()) {
        out.edges.emplace(std::min(e.from, e.to), std::max(e.from, e.to));
    }
    const auto closure = compelled_closure(cpdag);
    for (int a = 0; a < n; ++a) {
        for (int b = 0; b < n; ++b) {
            if (closure[static_cast<std::size_t>(a) * n + b]) {
                out.paths.emplace(a, b);
            }
        }
    }
    return out;
}

struct RocPoint {
    double fpr;
    double tpr;

    bool operator==(const RocPoint&) const = default;
};

struct RocCurve {
    std::vector<RocPoint> points;
    double auc = 0.0;
};

/// ROC by sweeping the threshold over every distinct score plus {0, 1}; AUC by the trapezoid rule.
inline RocCurve roc(const std::vector<double>& scores, const std::vector<bool>& positive) {
    if (scores.size() != positive.size()) {
        throw StructuralError("scores and labels differ in length");
    }
    const auto n_pos = static_cast<std::size_t>(std::count(positive.begin(), positive.end(), true));
    const std::size_t n_neg = positive.size() - n_pos;
    if (n_pos == 0 || n_neg == 0) {
        throw UndefinedRateError("ROC needs at least one positive and one negative");
    }
    std::vector<double> thresholds(scores);
    thresholds.push_back(0.0);
    thresholds.push_back(1.0);
    std::sort(thresholds.begin(), thresholds.end(), std::greater<>());
    thresholds.erase(std::unique(thresholds.begin(), thresholds.end()), thresholds.end());

    RocCurve curve;
    curve.points.push_back({0.0, 0.0});
    for (double t : thresholds) {
        std::size_t tp = 0;
        std::size_t fp = 0;
        for (std::size_t k = 0; k < scores.size(); ++k) {
            if (scores[k] >= t) {
                (positive[k] ? tp : fp) += 1;
            }
        }
        curve.points.push_back({static_cast<double>(fp) / n_neg, static_cast<double>(tp) / n_pos});
    }
    curve.points.push_back({1.0, 1.0});
    curve.points.erase(std::unique(curve.points.begin(), curve.points.end()), curve.points.end());
    for (std::size_t k = 1; k < curve.points.size(); ++k) {
        const auto& p = curve.points[k - 1];
        const auto& q = curve.points[k];
        curve.auc += (q.fpr - p.fpr) * (q.tpr + p.tpr) / 2.0;
    }
    return curve;
}

/// Scored candidates for one stability graph against the truth.
struct ScoredPairs {
    std::vector<std::pair<int, int>> pairs;
    std::vector<double> scores;
    std::vector<bool> positive;
};

/// Ordered pairs (a, b) for which some constraint-allowed directed path a ~> b exists.
inline std::vector<std::uint8_t> allowed_paths(int n, const ConstraintSet& constraints) {
    Bits allowed(genotype_length(n), 0);
    for (std::size_t s = 0; s < allowed.size(); ++s) {
        const auto [a, b] = slot_pair(n, s);
        allowed[s] = constraints.forbids(a, b) ? 0 : 1;
    }
    std::vector<std::uint8_t> out(static_cast<std::size_t>(n) * n, 0);
    for (int a = 0; a < n; ++a) {
        for (int b = 0; b < n; ++b) {
            if (a != b && detail::reaches(allowed, n, a, b)) {
                out[static_cast<std::size_t>(a) * n + b] = 1;
            }
        }
    }
    return out;
}

inline ScoredPairs score_pairs(const StabilityGraph& g, int pi_bic, const TruePositives& truth,
                               const ConstraintSet& constraints) {
    ScoredPairs out;
    const int n = g.variables();
    const auto possible = allowed_paths(n, constraints);
    for (std::size_t k = 0; k < g.pairs().size(); ++k) {
        const auto [a, b] = g.pairs()[k];
        bool is_positive;
        if (g.kind() == StabilityKind::edge) {
            is_positive = truth.edges.count({a, b}) != 0;
        } else {
            if (!possible[static_cast<std::size_t>(a) * n + b]) {
                continue;
            }
            is_positive = truth.paths.count({a, b}) != 0;
        }
        out.pairs.emplace_back(a, b);
        out.scores.push_back(relevance_score(g, k, pi_bic));
        out.positive.push_back(is_positive);
    }
    return out;
}

struct BenchmarkParams {
    int reps = 10;
    Eigen::Index samples = 400;
    StabilityParams stability;
};

// A curve is empty when the truth leaves positives or negatives empty (e.g. no compelled paths).
struct SchemeResult {
    int pi_bic = 0;
    std::optional<RocCurve> edge;
    std::optional<RocCurve> path;
};

struct BenchmarkReport {
    std::vector<SchemeResult> individual;
    SchemeResult averaging;
    std::vector<int> failed_subsets;
};

inline SchemeResult evaluate_scheme(const StabilityGraph& edges, const StabilityGraph& paths, const BicCurve& bic,
                                    const GroundTruth& gt, const TruePositives& truth) {
    SchemeResult r;
    r.pi_bic = pick_pi_bic(bic);
    const auto e = score_pairs(edges, r.pi_bic, truth, gt.constraints);
    const auto p = score_pairs(paths, r.pi_bic, truth, gt.constraints);
    auto curve = [](const ScoredPairs& s) -> std::optional<RocCurve> {
        const auto pos = std::count(s.positive.begin(), s.positive.end(), true);
        if (pos == 0 || pos == static_cast<std::ptrdiff_t>(s.positive.size())) {
            return std::nullopt;
        }
        return roc(s.scores, s.positive);
    };
    r.edge = curve(e);
    r.path = curve(p);
    return r;
}

/// Repeats (generate data, run_search) and scores recovery per repetition and on the averaged
/// stability graphs.
inline BenchmarkReport run_benchmark(const GroundTruth& gt, const BenchmarkParams& params, std::uint64_t seed) {
    gt.validate();
    if (params.reps < 1) {
        throw ConfigError("at least one repetition is required");
    }
    const TruePositives truth = true_positives(gt);
    BenchmarkReport report;
    std::vector<StabilityGraph> edge_graphs;
    std::vector<StabilityGraph> path_graphs;
    std::vector<BicCurve> curves;
    for (int rep = 0; rep < params.reps; ++rep) {
        Rng data_rng = derive_stream(seed, static_cast<std::uint64_t>(rep), 1);
        const Dataset data = generate_data(gt, params.samples, data_rng);
        const std::uint64_t search_seed = mix64(seed ^ mix64(static_cast<std::uint64_t>(rep) + 0x51ed27ULL));
        const SearchResult result = run_search(data, gt.constraints, params.stability, search_seed);
        report.individual.push_back(evaluate_scheme(result.edges, result.paths, result.bic, gt, truth));
        report.failed_subsets.push_back(result.failed_subsets);
        edge_graphs.push_back(result.edges);
        path_graphs.push_back(result.paths);
        curves.push_back(result.bic);
    }
    report.averaging = evaluate_scheme(StabilityGraph::average(edge_graphs), StabilityGraph::average(path_graphs),
                                       BicCurve::average(curves), gt, truth);
    return report;
}

} // namespace sss
