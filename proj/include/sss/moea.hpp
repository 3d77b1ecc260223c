#pragma once

#include <sss/dataset.hpp>
#include <sss/errors.hpp>
#include <sss/graph.hpp>
#include <sss/rng.hpp>
#include <sss/sem.hpp>

#include <algorithm>
#include <functional>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <span>
#include <utility>
#include <vector>

namespace sss {

/// The two minimized objectives. chi2 is +inf for models that could not be fitted.
struct Objectives {
    double chi2 = 0.0;
    int complexity = 0;

    bool operator==(const Objectives&) const = default;
};

inline bool dominates(const Objectives& a, const Objectives& b) {
    const bool no_worse = a.chi2 <= b.chi2 && a.complexity <= b.complexity;
    const bool better = a.chi2 < b.chi2 || a.complexity < b.complexity;
    return no_worse && better;
}

struct ScoredModel {
    Dag dag;
    Objectives objectives;
    double bic = std::numeric_limits<double>::infinity();
    int rank = 1;
    double crowding = 0.0;
};

struct ObjectivesOf {
    const Objectives& operator()(const ScoredModel& m) const { return m.objectives; }
    const Objectives& operator()(const Objectives& o) const { return o; }
};

using Front = std::vector<std::size_t>;

/// Fast non-dominated sort: O(MN^2) partition into fronts of indices into `pop`.
template <class T, class Proj = ObjectivesOf>
std::vector<Front> fast_non_dominated_sort(std::span<const T> pop, Proj proj = {}) {
    const std::size_t n = pop.size();
    std::vector<std::vector<std::size_t>> dominated(n);
    std::vector<std::size_t> domination_count(n, 0);
    std::vector<Front> fronts(1);
    for (std::size_t p = 0; p < n; ++p) {
        for (std::size_t q = 0; q < n; ++q) {
            if (p == q) {
                continue;
            }
            if (dominates(proj(pop[p]), proj(pop[q]))) {
                dominated[p].push_back(q);
            } else if (dominates(proj(pop[q]), proj(pop[p]))) {
                ++domination_count[p];
            }
        }
        if (domination_count[p] == 0) {
            fronts[0].push_back(p);
        }
    }
    for (std::size_t k = 0; !fronts[k].empty(); ++k) {
        Front next;
        for (std::size_t p : fronts[k]) {
            for (std::size_t q : dominated[p]) {
                if (--domination_count[q] == 0) {
                    next.push_back(q);
                }
            }
        }
        std::sort(next.begin(), next.end());
        fronts.push_back(std::move(next));
    }
    fronts.pop_back();
    return fronts;
}

/// Crowding distance of each member of one front (same order as `front`).
/// An objective with zero range contributes nothing.
template <class T, class Proj = ObjectivesOf>
std::vector<double> crowding_distance(std::span<const T> front, Proj proj = {}) {
    constexpr double inf = std::numeric_limits<double>::infinity();
    const std::size_t n = front.size();
    std::vector<double> distance(n, 0.0);
    if (n <= 2) {
        std::fill(distance.begin(), distance.end(), inf);
        return distance;
    }
    auto accumulate_objective = [&](auto value) {
        std::vector<std::size_t> order(n);
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::stable_sort(order.begin(), order.end(),
                         [&](std::size_t a, std::size_t b) { return value(front[a]) < value(front[b]); });
        distance[order.front()] = inf;
        distance[order.back()] = inf;
        const double lo = value(front[order.front()]);
        const double hi = value(front[order.back()]);
        const double range = hi - lo;
        if (!(range > 0.0) || !std::isfinite(range)) {
            return;
        }
        for (std::size_t k = 1; k + 1 < n; ++k) {
            const double gap = value(front[order[k + 1]]) - value(front[order[k - 1]]);
            if (std::isfinite(gap)) {
                distance[order[k]] += gap / range;
            }
        }
    };
    accumulate_objective([&](const T& m) { return proj(m).chi2; });
    accumulate_objective([&](const T& m) { return static_cast<double>(proj(m).complexity); });
    return distance;
}

/// Lower rank wins, then larger crowding distance, then a coin flip.
inline std::size_t binary_tournament(std::span<const ScoredModel> pop, Rng& rng) {
    const std::size_t a = uniform_index(rng, pop.size());
    const std::size_t b = uniform_index(rng, pop.size());
    if (pop[a].rank != pop[b].rank) {
        return pop[a].rank < pop[b].rank ? a : b;
    }
    if (pop[a].crowding != pop[b].crowding) {
        return pop[a].crowding > pop[b].crowding ? a : b;
    }
    return coin(rng) ? a : b;
}

/// With probability `rate`, swap the genotype tails after the midpoint.
inline std::pair<Bits, Bits> one_point_crossover(const Bits& a, const Bits& b, double rate, Rng& rng) {
    if (a.size() != b.size()) {
        throw StructuralError("crossover parents differ in genotype length");
    }
    std::pair<Bits, Bits> children{a, b};
    if (coin(rng, rate)) {
        const std::size_t cut = a.size() / 2;
        std::swap_ranges(children.first.begin() + static_cast<std::ptrdiff_t>(cut), children.first.end(),
                         children.second.begin() + static_cast<std::ptrdiff_t>(cut));
    }
    return children;
}

inline std::pair<Bits, Bits> one_point_crossover(const Dag& a, const Dag& b, double rate, Rng& rng) {
    if (a.size() != b.size()) {
        throw StructuralError("crossover parents differ in variable count");
    }
    return one_point_crossover(a.bits(), b.bits(), rate, rng);
}

inline Bits bit_flip_mutation(Bits x, double rate, Rng& rng) {
    for (auto& bit : x) {
        if (coin(rng, rate)) {
            bit = bit ? 0 : 1;
        }
    }
    return x;
}

struct SearchParams {
    int generations = 20;
    int population = 100;
    double crossover_rate = 0.85;
    double mutation_rate = 0.075;

    void validate() const {
        if (generations < 1 || population < 1) {
            throw ConfigError("generations and population must be at least 1");
        }
        if (!(crossover_rate >= 0.0 && crossover_rate <= 1.0) || !(mutation_rate >= 0.0 && mutation_rate <= 1.0)) {
            throw ConfigError("crossover and mutation rates must lie in [0, 1]");
        }
    }
};

/// Lowest-chi2 model seen at each complexity level 0..n(n-1)/2.
class ComplexityArchive {
public:
    ComplexityArchive() = default;
    explicit ComplexityArchive(int n) : best_(max_complexity(n) + 1) {}

    // Keeps the incumbent on ties.
    bool offer(const ScoredModel& m) {
        const auto c = static_cast<std::size_t>(m.objectives.complexity);
        if (c >= best_.size()) {
            throw StructuralError("model complexity exceeds archive range");
        }
        auto& slot = best_[c];
        if (!slot || m.objectives.chi2 < slot->objectives.chi2) {
            slot = m;
            return true;
        }
        return false;
    }

    std::size_t levels() const { return best_.size(); }
    const std::optional<ScoredModel>& at(std::size_t c) const { return best_.at(c); }
    bool has(std::size_t c) const { return c < best_.size() && best_[c].has_value(); }

private:
    std::vector<std::optional<ScoredModel>> best_;
};

// Called after each generation's environmental selection with the combined population and its fronts.
using GenerationObserver = std::function<void(int generation, std::span<const ScoredModel> combined,
                                              const std::vector<Front>& fronts)>;

namespace detail {

class Scorer {
public:
    explicit Scorer(const CovMatrix& cov) : cov_(cov) {}

    ScoredModel score(Dag dag) {
        auto it = cache_.find(dag.bits());
        if (it == cache_.end()) {
            double chi2 = std::numeric_limits<double>::infinity();
            double bic = std::numeric_limits<double>::infinity();
            try {
                const FitResult fit = ml_fit(dag, cov_);
                chi2 = fit.chi2;
                bic = fit.bic;
            } catch (const DegenerateDataError&) {
                // Unfittable genotypes stay in the population as +inf sentinels.
            }
            it = cache_.emplace(dag.bits(), std::make_pair(chi2, bic)).first;
        }
        ScoredModel m;
        m.objectives = {it->second.first, complexity(dag)};
        m.bic = it->second.second;
        m.dag = std::move(dag);
        return m;
    }

private:
    const CovMatrix& cov_;
    std::map<Bits, std::pair<double, double>> cache_;
};

// Assigns rank and crowding to every member of `pop`; returns the fronts.
inline std::vector<Front> rank_population(std::vector<ScoredModel>& pop) {
    auto fronts = fast_non_dominated_sort(std::span<const ScoredModel>(pop));
    for (std::size_t k = 0; k < fronts.size(); ++k) {
        std::vector<ScoredModel> members;
        members.reserve(fronts[k].size());
        for (std::size_t i : fronts[k]) {
            members.push_back(pop[i]);
        }
        const auto dist = crowding_distance(std::span<const ScoredModel>(members));
        for (std::size_t m = 0; m < fronts[k].size(); ++m) {
            pop[fronts[k][m]].rank = static_cast<int>(k) + 1;
            pop[fronts[k][m]].crowding = dist[m];
        }
    }
    return fronts;
}

} // namespace detail

/// NSGA-II over Dag genotypes on one data subsample, minimizing (chi2, complexity).
/// Every scored model feeds the returned archive.
inline ComplexityArchive search_subset(const Dataset& data, const ConstraintSet& constraints,
                                       const SearchParams& params, Rng& rng,
                                       const GenerationObserver& observer = {}) {
    params.validate();
    const int n = data.columns();
    constraints.validate(n);
    const CovMatrix cov = sample_covariance(data);
    detail::Scorer scorer(cov);
    ComplexityArchive archive(n);

    archive.offer(scorer.score(Dag(n)));
    archive.offer(scorer.score(random_complete_dag(n, constraints, rng)));

    const auto pop_size = static_cast<std::size_t>(params.population);
    std::vector<ScoredModel> pop;
    pop.reserve(pop_size);
    for (std::size_t i = 0; i < pop_size; ++i) {
        pop.push_back(scorer.score(random_dag(n, constraints, rng)));
        archive.offer(pop.back());
    }
    detail::rank_population(pop);

    for (int gen = 0; gen < params.generations; ++gen) {
        std::vector<std::size_t> pool(pop_size);
        for (auto& slot : pool) {
            slot = binary_tournament(pop, rng);
        }
        std::vector<ScoredModel> combined = pop;
        combined.reserve(2 * pop_size);
        for (std::size_t k = 0; combined.size() < 2 * pop_size; k += 2) {
            const auto& mother = pop[pool[k % pop_size]].dag;
            const auto& father = pop[pool[(k + 1) % pop_size]].dag;
            auto [left, right] = one_point_crossover(mother, father, params.crossover_rate, rng);
            for (Bits* child : {&left, &right}) {
                if (combined.size() == 2 * pop_size) {
                    break;
                }
                Bits mutated = bit_flip_mutation(std::move(*child), params.mutation_rate, rng);
                combined.push_back(scorer.score(repair(std::move(mutated), n, constraints, rng)));
                archive.offer(combined.back());
            }
        }

        const auto fronts = detail::rank_population(combined);
        if (observer) {
            observer(gen, combined, fronts);
        }

        std::vector<ScoredModel> next;
        next.reserve(pop_size);
        for (const auto& front : fronts) {
            if (next.size() + front.size() <= pop_size) {
                for (std::size_t i : front) {
                    next.push_back(combined[i]);
                }
                continue;
            }
            Front last = front;
            std::stable_sort(last.begin(), last.end(),
                             [&](std::size_t a, std::size_t b) { return combined[a].crowding > combined[b].crowding; });
            for (std::size_t i : last) {
                if (next.size() == pop_size) {
                    break;
                }
                next.push_back(combined[i]);
            }
            break;
        }
        pop = std::move(next);
    }
    return archive;
}

} // namespace sss
