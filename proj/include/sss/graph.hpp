#pragma once

#include <sss/errors.hpp>
#include <sss/rng.hpp>

#include <algorithm>
#include <cstdint>
#include <functional>
#include <queue>
#include <set>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

namespace sss {

using Bits = std::vector<std::uint8_t>;

// Slot of ordered pair (i, j), i != j, in an n(n-1) genotype.
inline std::size_t pair_slot(int n, int i, int j) {
    return static_cast<std::size_t>(i) * static_cast<std::size_t>(n - 1) +
           static_cast<std::size_t>(j < i ? j : j - 1);
}

inline std::size_t genotype_length(int n) {
    return static_cast<std::size_t>(n) * static_cast<std::size_t>(n > 0 ? n - 1 : 0);
}

inline std::size_t max_complexity(int n) {
    return genotype_length(n) / 2;
}

inline std::pair<int, int> slot_pair(int n, std::size_t slot) {
    const int i = static_cast<int>(slot / static_cast<std::size_t>(n - 1));
    int j = static_cast<int>(slot % static_cast<std::size_t>(n - 1));
    if (j >= i) {
        ++j;
    }
    return {i, j};
}

inline void check_length(const Bits& bits, int n) {
    if (n < 0 || bits.size() != genotype_length(n)) {
        throw StructuralError("genotype length " + std::to_string(bits.size()) + " does not match n(n-1) for n=" +
                              std::to_string(n));
    }
}

/// Background knowledge: a set of forbidden direct causes, (a, b) meaning a -/-> b.
class ConstraintSet {
public:
    ConstraintSet() = default;

    void forbid(int cause, int effect) {
        if (cause < 0 || effect < 0) {
            throw StructuralError("negative variable index in constraint");
        }
        if (cause == effect) {
            throw StructuralError("constraint may not relate a variable to itself");
        }
        forbidden_.emplace(cause, effect);
    }

    bool forbids(int cause, int effect) const {
        return forbidden_.count({cause, effect}) != 0;
    }

    bool empty() const { return forbidden_.empty(); }
    std::size_t size() const { return forbidden_.size(); }

    const std::set<std::pair<int, int>>& pairs() const { return forbidden_; }

    void validate(int n) const {
        for (const auto& [a, b] : forbidden_) {
            if (a >= n || b >= n) {
                throw StructuralError("constraint references variable outside [0, " + std::to_string(n) + ")");
            }
        }
    }

    bool operator==(const ConstraintSet&) const = default;

private:
    std::set<std::pair<int, int>> forbidden_;
};

/// Acyclic directed graph stored as the ordered-pair genotype.
class Dag {
public:
    Dag() = default;
    explicit Dag(int n) : n_(n), bits_(genotype_length(n), 0) {
        if (n < 0) {
            throw StructuralError("negative variable count");
        }
    }

    // Validates every Dag invariant against `constraints`.
    static Dag from_bits(Bits bits, int n, const ConstraintSet& constraints = {});
    static Dag from_arcs(int n, const std::vector<std::pair<int, int>>& arcs, const ConstraintSet& constraints = {});

    int size() const { return n_; }
    const Bits& bits() const { return bits_; }

    bool has_arc(int from, int to) const { return from != to && bits_[pair_slot(n_, from, to)] != 0; }
    bool adjacent(int a, int b) const { return has_arc(a, b) || has_arc(b, a); }

    std::size_t arc_count() const {
        return static_cast<std::size_t>(std::count(bits_.begin(), bits_.end(), std::uint8_t{1}));
    }

    std::vector<std::pair<int, int>> arcs() const {
        std::vector<std::pair<int, int>> out;
        for (std::size_t s = 0; s < bits_.size(); ++s) {
            if (bits_[s]) {
                out.push_back(slot_pair(n_, s));
            }
        }
        return out;
    }

    std::vector<int> parents(int node) const {
        std::vector<int> out;
        for (int p = 0; p < n_; ++p) {
            if (has_arc(p, node)) {
                out.push_back(p);
            }
        }
        return out;
    }

    bool operator==(const Dag&) const = default;
    auto operator<=>(const Dag&) const = default;

private:
    int n_ = 0;
    Bits bits_;
};

enum class EdgeLabel : std::uint8_t { compelled, reversible };

struct CpdagEdge {
    int from;
    int to;
    EdgeLabel label;

    bool operator==(const CpdagEdge&) const = default;
    auto operator<=>(const CpdagEdge&) const = default;
};

/// Partially directed graph: compelled edges keep their direction, reversible ones are stored with from < to.
class Cpdag {
public:
    Cpdag() = default;
    explicit Cpdag(int n) : n_(n), marks_(static_cast<std::size_t>(n) * static_cast<std::size_t>(n), kNone) {}

    int size() const { return n_; }

    void add(int from, int to, EdgeLabel label) {
        check(from);
        check(to);
        if (label == EdgeLabel::compelled) {
            mark(from, to) = kArrow;
            mark(to, from) = kTail;
        } else {
            mark(from, to) = kLine;
            mark(to, from) = kLine;
        }
    }

    bool has_edge(int a, int b) const { return mark(a, b) != kNone; }
    bool compelled(int from, int to) const { return mark(from, to) == kArrow; }
    bool reversible(int a, int b) const { return mark(a, b) == kLine; }

    std::vector<CpdagEdge> edges() const {
        std::vector<CpdagEdge> out;
        for (int i = 0; i < n_; ++i) {
            for (int j = 0; j < n_; ++j) {
                if (mark(i, j) == kArrow) {
                    out.push_back({i, j, EdgeLabel::compelled});
                } else if (i < j && mark(i, j) == kLine) {
                    out.push_back({i, j, EdgeLabel::reversible});
                }
            }
        }
        return out;
    }

    bool operator==(const Cpdag&) const = default;

private:
    static constexpr std::uint8_t kNone = 0;
    static constexpr std::uint8_t kArrow = 1;  // row -> column
    static constexpr std::uint8_t kTail = 2;   // column -> row
    static constexpr std::uint8_t kLine = 3;

    void check(int v) const {
        if (v < 0 || v >= n_) {
            throw StructuralError("node index " + std::to_string(v) + " out of range");
        }
    }
    std::uint8_t& mark(int a, int b) { return marks_[static_cast<std::size_t>(a) * n_ + b]; }
    std::uint8_t mark(int a, int b) const { return marks_[static_cast<std::size_t>(a) * n_ + b]; }

    int n_ = 0;
    std::vector<std::uint8_t> marks_;
};

namespace detail {

inline std::vector<std::vector<int>> children_lists(const Bits& bits, int n) {
    std::vector<std::vector<int>> out(n);
    for (std::size_t s = 0; s < bits.size(); ++s) {
        if (bits[s]) {
            const auto [i, j] = slot_pair(n, s);
            out[i].push_back(j);
        }
    }
    return out;
}

// Whether `to` is reachable from `from` along set bits.
inline bool reaches(const Bits& bits, int n, int from, int to) {
    std::vector<std::uint8_t> seen(n, 0);
    std::vector<int> stack{from};
    seen[from] = 1;
    while (!stack.empty()) {
        const int v = stack.back();
        stack.pop_back();
        if (v == to) {
            return true;
        }
        for (int w = 0; w < n; ++w) {
            if (w != v && !seen[w] && bits[pair_slot(n, v, w)]) {
                seen[w] = 1;
                stack.push_back(w);
            }
        }
    }
    return false;
}

} // namespace detail

// Kahn's algorithm.
inline bool is_acyclic(const Bits& bits, int n) {
    check_length(bits, n);
    const auto children = detail::children_lists(bits, n);
    std::vector<int> in_degree(n, 0);
    for (const auto& kids : children) {
        for (int c : kids) {
            ++in_degree[c];
        }
    }
    std::vector<int> stack;
    for (int v = 0; v < n; ++v) {
        if (in_degree[v] == 0) {
            stack.push_back(v);
        }
    }
    int removed = 0;
    while (!stack.empty()) {
        const int v = stack.back();
        stack.pop_back();
        ++removed;
        for (int c : children[v]) {
            if (--in_degree[c] == 0) {
                stack.push_back(c);
            }
        }
    }
    return removed == n;
}

inline Dag Dag::from_bits(Bits bits, int n, const ConstraintSet& constraints) {
    check_length(bits, n);
    constraints.validate(n);
    for (auto& b : bits) {
        if (b > 1) {
            throw StructuralError("genotype entries must be 0 or 1");
        }
    }
    for (int i = 0; i < n; ++i) {
        for (int j = i + 1; j < n; ++j) {
            if (bits[pair_slot(n, i, j)] && bits[pair_slot(n, j, i)]) {
                throw ContractError("both directions set between " + std::to_string(i) + " and " + std::to_string(j));
            }
        }
    }
    for (const auto& [a, b] : constraints.pairs()) {
        if (bits[pair_slot(n, a, b)]) {
            throw ContractError("arc " + std::to_string(a) + "->" + std::to_string(b) + " violates a constraint");
        }
    }
    if (!is_acyclic(bits, n)) {
        throw ContractError("genotype contains a directed cycle");
    }
    Dag g;
    g.n_ = n;
    g.bits_ = std::move(bits);
    return g;
}

inline Dag Dag::from_arcs(int n, const std::vector<std::pair<int, int>>& arcs, const ConstraintSet& constraints) {
    Bits bits(genotype_length(n), 0);
    for (const auto& [a, b] : arcs) {
        if (a < 0 || b < 0 || a >= n || b >= n || a == b) {
            throw StructuralError("arc (" + std::to_string(a) + ", " + std::to_string(b) + ") is not a valid pair");
        }
        bits[pair_slot(n, a, b)] = 1;
    }
    return from_bits(std::move(bits), n, constraints);
}

/// Random constraint-consistent Dag: each ordered pair, visited in shuffled order, is kept with
/// probability 0.5 when it is allowed, its reverse is absent and it closes no cycle.
inline Dag random_dag(int n, const ConstraintSet& constraints, Rng& rng) {
    if (n < 2) {
        throw ConfigError("random_dag needs at least two variables");
    }
    constraints.validate(n);
    std::vector<std::size_t> order(genotype_length(n));
    for (std::size_t s = 0; s < order.size(); ++s) {
        order[s] = s;
    }
    shuffle(order, rng);
    Bits bits(order.size(), 0);
    for (std::size_t s : order) {
        if (!coin(rng)) {
            continue;
        }
        const auto [i, j] = slot_pair(n, s);
        if (constraints.forbids(i, j) || bits[pair_slot(n, j, i)] || detail::reaches(bits, n, j, i)) {
            continue;
        }
        bits[s] = 1;
    }
    return Dag::from_bits(std::move(bits), n, constraints);
}

/// Orientation of the complete graph along a random order that honors one-way constraints;
/// pairs forbidden in the order's direction are left unconnected.
inline Dag random_complete_dag(int n, const ConstraintSet& constraints, Rng& rng) {
    constraints.validate(n);
    // a -/-> b puts b before a.
    std::vector<std::vector<int>> before(n);
    std::vector<int> pending(n, 0);
    for (const auto& [a, b] : constraints.pairs()) {
        if (!constraints.forbids(b, a)) {
            before[b].push_back(a);
            ++pending[a];
        }
    }
    std::vector<int> order;
    std::vector<std::uint8_t> placed(n, 0);
    while (static_cast<int>(order.size()) < n) {
        std::vector<int> ready;
        for (int v = 0; v < n; ++v) {
            if (!placed[v] && pending[v] == 0) {
                ready.push_back(v);
            }
        }
        if (ready.empty()) {
            // Cyclic precedence: release any remaining node.
            for (int v = 0; v < n; ++v) {
                if (!placed[v]) {
                    ready.push_back(v);
                }
            }
        }
        const int v = ready[uniform_index(rng, ready.size())];
        placed[v] = 1;
        order.push_back(v);
        for (int w : before[v]) {
            --pending[w];
        }
    }
    Bits bits(genotype_length(n), 0);
    for (int a = 0; a < n; ++a) {
        for (int b = a + 1; b < n; ++b) {
            const int u = order[a];
            const int v = order[b];
            if (!constraints.forbids(u, v)) {
                bits[pair_slot(n, u, v)] = 1;
            }
        }
    }
    return Dag::from_bits(std::move(bits), n, constraints);
}

/// Restores Dag invariants by clearing bits only: constraint violations first, then one side of
/// every two-way pair, then any arc closing a cycle (visited in shuffled order).
inline Dag repair(Bits bits, int n, const ConstraintSet& constraints, Rng& rng) {
    check_length(bits, n);
    constraints.validate(n);
    for (auto& b : bits) {
        b = b ? 1 : 0;
    }
    for (const auto& [a, b] : constraints.pairs()) {
        bits[pair_slot(n, a, b)] = 0;
    }
    for (int i = 0; i < n; ++i) {
        for (int j = i + 1; j < n; ++j) {
            auto& fwd = bits[pair_slot(n, i, j)];
            auto& rev = bits[pair_slot(n, j, i)];
            if (fwd && rev) {
                (coin(rng) ? fwd : rev) = 0;
            }
        }
    }
    if (is_acyclic(bits, n)) {
        return Dag::from_bits(std::move(bits), n, constraints);
    }
    std::vector<std::size_t> set_slots;
    for (std::size_t s = 0; s < bits.size(); ++s) {
        if (bits[s]) {
            set_slots.push_back(s);
        }
    }
    shuffle(set_slots, rng);
    Bits kept(bits.size(), 0);
    for (std::size_t s : set_slots) {
        const auto [i, j] = slot_pair(n, s);
        if (!detail::reaches(kept, n, j, i)) {
            kept[s] = 1;
        }
    }
    return Dag::from_bits(std::move(kept), n, constraints);
}

/// Topological order with ties broken by ascending index.
inline std::vector<int> topological_order(const Dag& g) {
    const int n = g.size();
    std::vector<int> in_degree(n, 0);
    for (const auto& [a, b] : g.arcs()) {
        ++in_degree[b];
    }
    std::priority_queue<int, std::vector<int>, std::greater<>> ready;
    for (int v = 0; v < n; ++v) {
        if (in_degree[v] == 0) {
            ready.push(v);
        }
    }
    std::vector<int> order;
    order.reserve(n);
    while (!ready.empty()) {
        const int v = ready.top();
        ready.pop();
        order.push_back(v);
        for (int w = 0; w < n; ++w) {
            if (g.has_arc(v, w) && --in_degree[w] == 0) {
                ready.push(w);
            }
        }
    }
    return order;
}

/// Total order over arcs: repeatedly take the lowest-ranked node y that still has an unordered
/// incoming arc, then the highest-ranked parent x of y among unordered arcs x->y.
inline std::vector<std::pair<int, int>> order_edges(const Dag& g) {
    const int n = g.size();
    const auto topo = topological_order(g);
    std::vector<int> rank(n);
    for (int r = 0; r < n; ++r) {
        rank[topo[r]] = r;
    }
    std::vector<std::pair<int, int>> ordered;
    ordered.reserve(g.arc_count());
    for (int y : topo) {
        std::vector<int> pa = g.parents(y);
        std::sort(pa.begin(), pa.end(), [&](int a, int b) { return rank[a] > rank[b]; });
        for (int x : pa) {
            ordered.emplace_back(x, y);
        }
    }
    return ordered;
}

/// Constrained DAG-to-CPDAG conversion: arcs matching a constraint are pre-labeled compelled,
/// then the compelled/reversible sweep labels the rest in edge order.
inline Cpdag cons_dag2cpdag(const Dag& g, const ConstraintSet& constraints = {}) {
    const int n = g.size();
    constraints.validate(n);
    for (const auto& [a, b] : constraints.pairs()) {
        if (g.has_arc(a, b)) {
            throw ContractError("DAG contains arc " + std::to_string(a) + "->" + std::to_string(b) +
                                " forbidden by a constraint");
        }
    }

    enum : std::uint8_t { kUnknown, kCompelled, kReversible };
    const auto ordered = order_edges(g);
    std::vector<std::uint8_t> label(static_cast<std::size_t>(n) * n, kUnknown);
    auto at = [&](int x, int y) -> std::uint8_t& { return label[static_cast<std::size_t>(x) * n + y]; };

    for (const auto& [x, y] : ordered) {
        if (constraints.forbids(y, x)) {
            at(x, y) = kCompelled;
        }
    }

    auto label_into = [&](int y, std::uint8_t value, bool only_unknown) {
        for (int z = 0; z < n; ++z) {
            if (g.has_arc(z, y) && (!only_unknown || at(z, y) == kUnknown)) {
                at(z, y) = value;
            }
        }
    };

    for (const auto& [x, y] : ordered) {
        if (at(x, y) != kUnknown) {
            continue;
        }
        bool done = false;
        for (int w = 0; w < n && !done; ++w) {
            if (!g.has_arc(w, x) || at(w, x) != kCompelled) {
                continue;
            }
            if (!g.has_arc(w, y)) {
                at(x, y) = kCompelled;
                label_into(y, kCompelled, false);
                done = true;
            } else {
                at(w, y) = kCompelled;
            }
        }
        if (done) {
            continue;
        }
        bool v_structure = false;
        for (int z = 0; z < n; ++z) {
            if (z != x && g.has_arc(z, y) && !g.adjacent(z, x)) {
                v_structure = true;
                break;
            }
        }
        at(x, y) = v_structure ? kCompelled : kReversible;
        label_into(y, v_structure ? kCompelled : kReversible, true);
    }

    Cpdag out(n);
    for (const auto& [x, y] : ordered) {
        if (at(x, y) == kCompelled) {
            out.add(x, y, EdgeLabel::compelled);
        } else {
            out.add(std::min(x, y), std::max(x, y), EdgeLabel::reversible);
        }
    }
    return out;
}

/// Whether `dst` is reachable from `src` along compelled edges.
inline bool directed_reachable(const Cpdag& c, int src, int dst) {
    const int n = c.size();
    if (src < 0 || dst < 0 || src >= n || dst >= n) {
        throw StructuralError("node index out of range");
    }
    if (src == dst) {
        throw StructuralError("directed_reachable needs distinct endpoints");
    }
    std::vector<std::uint8_t> seen(n, 0);
    std::vector<int> stack{src};
    seen[src] = 1;
    while (!stack.empty()) {
        const int v = stack.back();
        stack.pop_back();
        for (int w = 0; w < n; ++w) {
            if (!seen[w] && c.compelled(v, w)) {
                if (w == dst) {
                    return true;
                }
                seen[w] = 1;
                stack.push_back(w);
            }
        }
    }
    return false;
}

/// Reachability over compelled edges for every ordered pair; row-major n*n, diagonal false.
inline std::vector<std::uint8_t> compelled_closure(const Cpdag& c) {
    const int n = c.size();
    std::vector<std::uint8_t> reach(static_cast<std::size_t>(n) * n, 0);
    for (int s = 0; s < n; ++s) {
        std::vector<int> stack{s};
        std::vector<std::uint8_t> seen(n, 0);
        seen[s] = 1;
        while (!stack.empty()) {
            const int v = stack.back();
            stack.pop_back();
            for (int w = 0; w < n; ++w) {
                if (!seen[w] && c.compelled(v, w)) {
                    seen[w] = 1;
                    reach[static_cast<std::size_t>(s) * n + w] = 1;
                    stack.push_back(w);
                }
            }
        }
    }
    return reach;
}

// (x, y, z) with x -> y <- z, x < z, x and z non-adjacent.
inline std::set<std::tuple<int, int, int>> v_structures(const Dag& g) {
    std::set<std::tuple<int, int, int>> out;
    const int n = g.size();
    for (int y = 0; y < n; ++y) {
        const auto pa = g.parents(y);
        for (std::size_t a = 0; a < pa.size(); ++a) {
            for (std::size_t b = a + 1; b < pa.size(); ++b) {
                if (!g.adjacent(pa[a], pa[b])) {
                    out.emplace(std::min(pa[a], pa[b]), y, std::max(pa[a], pa[b]));
                }
            }
        }
    }
    return out;
}

/// Every DAG with g's skeleton and v-structures, by exhaustive orientation. Small n only.
inline std::vector<Dag> enumerate_equivalence_class(const Dag& g) {
    const int n = g.size();
    if (n > 5) {
        throw RefusalError("equivalence-class enumeration is limited to n <= 5");
    }
    std::vector<std::pair<int, int>> skeleton;
    for (const auto& [a, b] : g.arcs()) {
        skeleton.emplace_back(std::min(a, b), std::max(a, b));
    }
    const auto reference = v_structures(g);
    std::vector<Dag> members;
    const std::uint32_t total = 1u << skeleton.size();
    for (std::uint32_t mask = 0; mask < total; ++mask) {
        Bits bits(genotype_length(n), 0);
        for (std::size_t e = 0; e < skeleton.size(); ++e) {
            const auto [a, b] = skeleton[e];
            if (mask & (1u << e)) {
                bits[pair_slot(n, b, a)] = 1;
            } else {
                bits[pair_slot(n, a, b)] = 1;
            }
        }
        if (!is_acyclic(bits, n)) {
            continue;
        }
        Dag candidate = Dag::from_bits(std::move(bits), n);
        if (v_structures(candidate) == reference) {
            members.push_back(std::move(candidate));
        }
    }
    std::sort(members.begin(), members.end());
    return members;
}

} // namespace sss
