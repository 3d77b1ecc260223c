#pragma once

#include <sss/dataset.hpp>
#include <sss/errors.hpp>
#include <sss/graph.hpp>
#include <sss/moea.hpp>
#include <sss/rng.hpp>

#include <Eigen/Dense>

#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <limits>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <utility>
#include <vector>

namespace sss {

/// Half-size subsample without replacement; row indices returned in ascending order.
inline std::vector<Eigen::Index> subsample_rows(Eigen::Index rows, int columns, Rng& rng) {
    if (rows < 2 * (static_cast<Eigen::Index>(columns) + 2)) {
        throw ConfigError("subsampling needs at least 2(p+2) = " + std::to_string(2 * (columns + 2)) +
                          " rows, have " + std::to_string(rows));
    }
    std::vector<Eigen::Index> idx(static_cast<std::size_t>(rows));
    for (Eigen::Index r = 0; r < rows; ++r) {
        idx[static_cast<std::size_t>(r)] = r;
    }
    const auto take = static_cast<std::size_t>(rows / 2);
    for (std::size_t i = 0; i < take; ++i) {
        std::swap(idx[i], idx[i + uniform_index(rng, idx.size() - i)]);
    }
    idx.resize(take);
    std::sort(idx.begin(), idx.end());
    return idx;
}

inline Dataset subsample(const Dataset& d, Rng& rng) {
    return d.select_rows(subsample_rows(d.rows(), d.columns(), rng));
}

enum class StabilityKind { edge, causal_path };

/// Selection probability per (complexity level, pair). Edge graphs index unordered pairs a < b,
/// causal-path graphs index ordered pairs a != b.
class StabilityGraph {
public:
    StabilityGraph() = default;
    StabilityGraph(StabilityKind kind, int n)
        : kind_(kind), n_(n), pairs_(make_pairs(kind, n)),
          probs_(Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(max_complexity(n) + 1),
                                       static_cast<Eigen::Index>(pairs_.size()))),
          counts_(max_complexity(n) + 1, 0) {}

    StabilityKind kind() const { return kind_; }
    int variables() const { return n_; }
    std::size_t levels() const { return counts_.size(); }
    const std::vector<std::pair<int, int>>& pairs() const { return pairs_; }
    const Eigen::MatrixXd& probs() const { return probs_; }
    const std::vector<int>& counts() const { return counts_; }

    double prob(std::size_t level, std::size_t pair) const {
        return probs_(static_cast<Eigen::Index>(level), static_cast<Eigen::Index>(pair));
    }

    std::size_t pair_index(int a, int b) const {
        if (a < 0 || b < 0 || a >= n_ || b >= n_ || a == b) {
            throw StructuralError("pair (" + std::to_string(a) + ", " + std::to_string(b) + ") is not valid");
        }
        if (kind_ == StabilityKind::causal_path) {
            return pair_slot(n_, a, b);
        }
        if (a > b) {
            std::swap(a, b);
        }
        // Row-major upper triangle.
        return static_cast<std::size_t>(a) * (2 * n_ - a - 1) / 2 + static_cast<std::size_t>(b - a - 1);
    }

    /// Builds a graph from integer hit counts: probs = hits / counts per level.
    static StabilityGraph from_counts(StabilityKind kind, int n, const std::vector<std::vector<int>>& hits,
                                      std::vector<int> counts) {
        StabilityGraph g(kind, n);
        if (hits.size() != g.levels() || counts.size() != g.levels()) {
            throw StructuralError("hit table does not match complexity range");
        }
        for (std::size_t c = 0; c < g.levels(); ++c) {
            if (hits[c].size() != g.pairs_.size()) {
                throw StructuralError("hit row does not match pair count");
            }
            if (counts[c] == 0) {
                continue;
            }
            for (std::size_t k = 0; k < g.pairs_.size(); ++k) {
                g.probs_(static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(k)) =
                    static_cast<double>(hits[c][k]) / counts[c];
            }
        }
        g.counts_ = std::move(counts);
        return g;
    }

    /// Element-wise mean over graphs populated at each level; counts are summed.
    static StabilityGraph average(const std::vector<StabilityGraph>& graphs) {
        if (graphs.empty()) {
            throw StructuralError("cannot average an empty list of stability graphs");
        }
        StabilityGraph out(graphs.front().kind_, graphs.front().n_);
        for (std::size_t c = 0; c < out.levels(); ++c) {
            int contributing = 0;
            for (const auto& g : graphs) {
                if (g.kind_ != out.kind_ || g.n_ != out.n_) {
                    throw StructuralError("stability graphs differ in kind or size");
                }
                if (g.counts_[c] > 0) {
                    out.probs_.row(static_cast<Eigen::Index>(c)) += g.probs_.row(static_cast<Eigen::Index>(c));
                    out.counts_[c] += g.counts_[c];
                    ++contributing;
                }
            }
            if (contributing > 0) {
                out.probs_.row(static_cast<Eigen::Index>(c)) /= contributing;
            }
        }
        return out;
    }

private:
    static std::vector<std::pair<int, int>> make_pairs(StabilityKind kind, int n) {
        std::vector<std::pair<int, int>> out;
        if (kind == StabilityKind::edge) {
            for (int a = 0; a < n; ++a) {
                for (int b = a + 1; b < n; ++b) {
                    out.emplace_back(a, b);
                }
            }
        } else {
            for (std::size_t s = 0; s < genotype_length(n); ++s) {
                out.push_back(slot_pair(n, s));
            }
        }
        return out;
    }

    StabilityKind kind_ = StabilityKind::edge;
    int n_ = 0;
    std::vector<std::pair<int, int>> pairs_;
    Eigen::MatrixXd probs_;
    std::vector<int> counts_;
};

/// Mean BIC of the archived model per complexity level.
struct BicCurve {
    std::vector<double> mean_bic;
    std::vector<int> n_models;

    static BicCurve average(const std::vector<BicCurve>& curves) {
        if (curves.empty()) {
            throw StructuralError("cannot average an empty list of BIC curves");
        }
        BicCurve out;
        const std::size_t levels = curves.front().mean_bic.size();
        out.mean_bic.assign(levels, 0.0);
        out.n_models.assign(levels, 0);
        for (std::size_t c = 0; c < levels; ++c) {
            int contributing = 0;
            for (const auto& curve : curves) {
                if (curve.n_models.at(c) > 0) {
                    out.mean_bic[c] += curve.mean_bic[c];
                    out.n_models[c] += curve.n_models[c];
                    ++contributing;
                }
            }
            if (contributing > 0) {
                out.mean_bic[c] /= contributing;
            }
        }
        return out;
    }
};

struct StabilityParams {
    int subsets = 100;
    SearchParams search;
    int workers = 1;
    // Abort when more than this fraction of subsets fail to fit.
    double max_failure_fraction = 0.2;
};

struct SearchResult {
    StabilityGraph edges;
    StabilityGraph paths;
    BicCurve bic;
    int subsets = 0;
    int failed_subsets = 0;
};

namespace detail {

struct SubsetOutcome {
    bool failed = false;
    // Per level: edge presence over unordered pairs, path presence over ordered pairs.
    std::vector<std::optional<std::pair<std::vector<std::uint8_t>, std::vector<std::uint8_t>>>> levels;
    std::vector<double> bic;
};

inline SubsetOutcome summarize_archive(const ComplexityArchive& archive, const ConstraintSet& constraints, int n) {
    SubsetOutcome out;
    out.levels.resize(archive.levels());
    out.bic.assign(archive.levels(), std::numeric_limits<double>::quiet_NaN());
    const StabilityGraph edge_layout(StabilityKind::edge, n);
    for (std::size_t c = 0; c < archive.levels(); ++c) {
        if (!archive.has(c)) {
            continue;
        }
        const ScoredModel& m = *archive.at(c);
        const Cpdag cpdag = cons_dag2cpdag(m.dag, constraints);
        std::vector<std::uint8_t> edges(edge_layout.pairs().size(), 0);
        for (std::size_t k = 0; k < edges.size(); ++k) {
            const auto [a, b] = edge_layout.pairs()[k];
            edges[k] = cpdag.has_edge(a, b) ? 1 : 0;
        }
        const auto closure = compelled_closure(cpdag);
        std::vector<std::uint8_t> paths(genotype_length(n), 0);
        for (std::size_t s = 0; s < paths.size(); ++s) {
            const auto [a, b] = slot_pair(n, s);
            paths[s] = closure[static_cast<std::size_t>(a) * n + b];
        }
        out.levels[c].emplace(std::move(edges), std::move(paths));
        out.bic[c] = m.bic;
    }
    return out;
}

} // namespace detail

/// Runs one subset search per index in [0, subsets) and aggregates the archived models into edge
/// and causal-path stability graphs. Subset j draws from stream (seed, j), so results do not
/// depend on the worker count.
inline SearchResult run_search(const Dataset& d, const ConstraintSet& constraints, const StabilityParams& params,
                               std::uint64_t seed) {
    params.search.validate();
    if (params.subsets < 1) {
        throw ConfigError("at least one subset is required");
    }
    const int n = d.columns();
    constraints.validate(n);
    if (d.rows() < 2 * (static_cast<Eigen::Index>(n) + 2)) {
        throw ConfigError("dataset needs at least 2(p+2) rows for half-size subsampling");
    }
    const auto J = static_cast<std::size_t>(params.subsets);
    std::vector<detail::SubsetOutcome> outcomes(J);

    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    auto work = [&] {
        for (std::size_t j = next++; j < J; j = next++) {
            try {
                Rng rng = derive_stream(seed, j);
                const Dataset sub = subsample(d, rng);
                try {
                    const auto archive = search_subset(sub, constraints, params.search, rng);
                    outcomes[j] = detail::summarize_archive(archive, constraints, n);
                } catch (const DegenerateDataError&) {
                    outcomes[j].failed = true;
                }
            } catch (...) {
                const std::lock_guard lock(error_mutex);
                if (!error) {
                    error = std::current_exception();
                }
            }
        }
    };
    const int workers = std::max(1, std::min(params.workers, params.subsets));
    if (workers == 1) {
        work();
    } else {
        std::vector<std::jthread> pool;
        for (int w = 0; w < workers; ++w) {
            pool.emplace_back(work);
        }
    }
    if (error) {
        std::rethrow_exception(error);
    }

    SearchResult result;
    result.subsets = params.subsets;
    const std::size_t levels = max_complexity(n) + 1;
    std::vector<std::vector<int>> edge_hits(levels, std::vector<int>(static_cast<std::size_t>(n) * (n - 1) / 2, 0));
    std::vector<std::vector<int>> path_hits(levels, std::vector<int>(genotype_length(n), 0));
    std::vector<int> counts(levels, 0);
    std::vector<double> bic_sum(levels, 0.0);
    std::vector<int> bic_n(levels, 0);
    for (const auto& o : outcomes) {
        if (o.failed) {
            ++result.failed_subsets;
            continue;
        }
        for (std::size_t c = 0; c < levels; ++c) {
            if (!o.levels[c]) {
                continue;
            }
            ++counts[c];
            const auto& [edges, paths] = *o.levels[c];
            for (std::size_t k = 0; k < edges.size(); ++k) {
                edge_hits[c][k] += edges[k];
            }
            for (std::size_t k = 0; k < paths.size(); ++k) {
                path_hits[c][k] += paths[k];
            }
            if (std::isfinite(o.bic[c])) {
                bic_sum[c] += o.bic[c];
                ++bic_n[c];
            }
        }
    }
    if (result.failed_subsets > params.max_failure_fraction * params.subsets) {
        throw RunQualityError(std::to_string(result.failed_subsets) + " of " + std::to_string(params.subsets) +
                              " subsets failed to fit");
    }
    result.edges = StabilityGraph::from_counts(StabilityKind::edge, n, edge_hits, counts);
    result.paths = StabilityGraph::from_counts(StabilityKind::causal_path, n, path_hits, counts);
    result.bic.mean_bic.assign(levels, 0.0);
    result.bic.n_models = bic_n;
    for (std::size_t c = 0; c < levels; ++c) {
        if (bic_n[c] > 0) {
            result.bic.mean_bic[c] = bic_sum[c] / bic_n[c];
        }
    }
    return result;
}

/// Complexity level with the lowest mean BIC; ties go to the smaller level.
inline int pick_pi_bic(const BicCurve& curve) {
    int best = -1;
    for (std::size_t c = 0; c < curve.mean_bic.size(); ++c) {
        if (curve.n_models.at(c) <= 0) {
            continue;
        }
        if (best < 0 || curve.mean_bic[c] < curve.mean_bic[static_cast<std::size_t>(best)]) {
            best = static_cast<int>(c);
        }
    }
    if (best < 0) {
        throw ConfigError("BIC curve has no populated level");
    }
    return best;
}

struct Thresholds {
    double pi_sel = 0.6;
    int pi_bic = 0;

    void validate(std::size_t max_level) const {
        if (!(pi_sel > 0.0 && pi_sel < 1.0)) {
            throw ConfigError("pi_sel must lie strictly between 0 and 1");
        }
        if (pi_bic < 0 || static_cast<std::size_t>(pi_bic) > max_level) {
            throw ConfigError("pi_bic outside the complexity range");
        }
    }
};

/// Highest selection probability over levels 0..pi_bic inclusive.
inline double relevance_score(const StabilityGraph& g, std::size_t pair, int pi_bic) {
    if (pi_bic < 0 || static_cast<std::size_t>(pi_bic) >= g.levels()) {
        throw ConfigError("pi_bic outside the complexity range");
    }
    double best = 0.0;
    for (std::size_t c = 0; c <= static_cast<std::size_t>(pi_bic); ++c) {
        if (g.counts()[c] > 0) {
            best = std::max(best, g.prob(c, pair));
        }
    }
    return best;
}

struct RelevantRelation {
    int a;
    int b;
    double score;
};

inline std::vector<RelevantRelation> relevant_relations(const StabilityGraph& g, const Thresholds& thr) {
    std::vector<RelevantRelation> out;
    for (std::size_t k = 0; k < g.pairs().size(); ++k) {
        const double s = relevance_score(g, k, thr.pi_bic);
        if (s >= thr.pi_sel) {
            out.push_back({g.pairs()[k].first, g.pairs()[k].second, s});
        }
    }
    return out;
}

struct InferredEdge {
    int from;
    int to;
    bool directed;
    double reliability;
};

struct InferredModel {
    std::vector<std::string> nodes;
    std::vector<InferredEdge> edges;
};

/// Relevant edges, oriented by background knowledge first and by one-sided relevant causal paths second.
inline InferredModel infer_model(const StabilityGraph& edge, const StabilityGraph& path,
                                 const ConstraintSet& constraints, const Thresholds& thr,
                                 std::vector<std::string> names = {}) {
    if (edge.kind() != StabilityKind::edge || path.kind() != StabilityKind::causal_path) {
        throw StructuralError("infer_model expects an edge graph and a causal-path graph");
    }
    const int n = edge.variables();
    thr.validate(edge.levels() - 1);
    constraints.validate(n);
    if (names.empty()) {
        for (int i = 0; i < n; ++i) {
            names.push_back(std::to_string(i));
        }
    }
    InferredModel model;
    model.nodes = std::move(names);
    auto path_relevant = [&](int a, int b) {
        return relevance_score(path, path.pair_index(a, b), thr.pi_bic) >= thr.pi_sel;
    };
    for (const auto& rel : relevant_relations(edge, thr)) {
        const int a = rel.a;
        const int b = rel.b;
        const bool a_to_b_allowed = !constraints.forbids(a, b);
        const bool b_to_a_allowed = !constraints.forbids(b, a);
        InferredEdge e{a, b, false, rel.score};
        if (a_to_b_allowed && !b_to_a_allowed) {
            e.directed = true;
        } else if (b_to_a_allowed && !a_to_b_allowed) {
            e = {b, a, true, rel.score};
        } else if (a_to_b_allowed && b_to_a_allowed) {
            const bool ab = path_relevant(a, b);
            const bool ba = path_relevant(b, a);
            if (ab && !ba) {
                e.directed = true;
            } else if (ba && !ab) {
                e = {b, a, true, rel.score};
            }
        }
        model.edges.push_back(e);
    }
    return model;
}

} // namespace sss
