#include "oracles.hpp"

#include <sss/graph.hpp>

#include <gtest/gtest.h>

using namespace sss;

namespace {

Bits random_bits(int n, double density, Rng& rng) {
    Bits bits(genotype_length(n), 0);
    for (auto& b : bits) {
        b = coin(rng, density) ? 1 : 0;
    }
    return bits;
}

bool is_subgraph(const Bits& sub, const Bits& super) {
    for (std::size_t s = 0; s < sub.size(); ++s) {
        if (sub[s] && !super[s]) {
            return false;
        }
    }
    return true;
}

} // namespace

TEST(IsAcyclic, EmptyGraph) {
    EXPECT_TRUE(is_acyclic(Bits(genotype_length(3), 0), 3));
}

TEST(IsAcyclic, TwoCycle) {
    Bits bits(genotype_length(2), 0);
    bits[pair_slot(2, 0, 1)] = 1;
    bits[pair_slot(2, 1, 0)] = 1;
    EXPECT_FALSE(is_acyclic(bits, 2));
}

TEST(IsAcyclic, LengthMismatchIsStructuralError) {
    EXPECT_THROW(is_acyclic(Bits(5, 0), 3), StructuralError);
}

TEST(IsAcyclic, AgreesWithTransitiveClosure) {
    Rng rng(11);
    for (int trial = 0; trial < 100; ++trial) {
        const Bits bits = random_bits(6, 0.12, rng);
        EXPECT_EQ(is_acyclic(bits, 6), oracle::acyclic(bits, 6)) << "trial " << trial;
    }
}

TEST(PairSlot, RoundTrips) {
    for (int n = 2; n <= 7; ++n) {
        for (std::size_t s = 0; s < genotype_length(n); ++s) {
            const auto [i, j] = slot_pair(n, s);
            EXPECT_NE(i, j);
            EXPECT_EQ(pair_slot(n, i, j), s);
        }
    }
}

TEST(Dag, FromBitsRejectsViolations) {
    ConstraintSet c;
    c.forbid(0, 1);
    EXPECT_THROW(Dag::from_arcs(2, {{0, 1}}, c), ContractError);
    EXPECT_THROW(Dag::from_arcs(3, {{0, 1}, {1, 2}, {2, 0}}), ContractError);
    EXPECT_THROW(Dag::from_arcs(2, {{0, 1}, {1, 0}}), ContractError);
    EXPECT_THROW(Dag::from_arcs(2, {{0, 2}}), StructuralError);
}

TEST(ConstraintSet, RejectsSelfPairs) {
    ConstraintSet c;
    EXPECT_THROW(c.forbid(1, 1), StructuralError);
    c.forbid(0, 4);
    EXPECT_THROW(c.validate(3), StructuralError);
}

TEST(RandomDag, HonorsConstraint) {
    ConstraintSet c;
    c.forbid(0, 1);
    Rng rng(3);
    int reverse_seen = 0;
    for (int k = 0; k < 1000; ++k) {
        const Dag g = random_dag(2, c, rng);
        EXPECT_FALSE(g.has_arc(0, 1));
        reverse_seen += g.has_arc(1, 0);
    }
    EXPECT_GT(reverse_seen, 0);
}

TEST(RandomDag, AlwaysAcyclic) {
    Rng rng(5);
    for (int k = 0; k < 1000; ++k) {
        const Dag g = random_dag(9, {}, rng);
        EXPECT_TRUE(oracle::acyclic(g.bits(), 9));
    }
}

TEST(RandomDag, DeterministicForSeed) {
    Rng a(77);
    Rng b(77);
    EXPECT_EQ(random_dag(4, {}, a), random_dag(4, {}, b));
}

TEST(RandomDag, RejectsTinyGraphs) {
    Rng rng(1);
    EXPECT_THROW(random_dag(1, {}, rng), ConfigError);
}

TEST(RandomCompleteDag, IsCompleteAndConsistent) {
    ConstraintSet c;
    c.forbid(0, 3);
    c.forbid(2, 1);
    Rng rng(9);
    for (int k = 0; k < 50; ++k) {
        const Dag g = random_complete_dag(5, c, rng);
        EXPECT_EQ(g.arc_count(), max_complexity(5));
        EXPECT_FALSE(g.has_arc(0, 3));
        EXPECT_FALSE(g.has_arc(2, 1));
    }
}

TEST(Repair, ValidInputUnchanged) {
    Rng rng(2);
    const Dag g = Dag::from_arcs(4, {{0, 1}, {1, 2}, {0, 3}});
    EXPECT_EQ(repair(g.bits(), 4, {}, rng), g);
}

TEST(Repair, TwoWayPairKeepsOne) {
    Rng rng(4);
    for (int k = 0; k < 50; ++k) {
        Bits bits(genotype_length(2), 1);
        const Dag g = repair(bits, 2, {}, rng);
        EXPECT_EQ(g.arc_count(), 1u);
    }
}

TEST(Repair, CorruptedVectorsBecomeValidSubgraphs) {
    Rng rng(8);
    ConstraintSet c;
    c.forbid(2, 4);
    for (int k = 0; k < 500; ++k) {
        const Bits raw = random_bits(6, 0.4, rng);
        const Dag g = repair(raw, 6, c, rng);
        EXPECT_TRUE(oracle::acyclic(g.bits(), 6));
        EXPECT_TRUE(is_subgraph(g.bits(), raw));
        EXPECT_FALSE(g.has_arc(2, 4));
    }
}

TEST(Repair, Idempotent) {
    Rng rng(21);
    for (int k = 0; k < 200; ++k) {
        const Dag once = repair(random_bits(5, 0.5, rng), 5, {}, rng);
        EXPECT_EQ(repair(once.bits(), 5, {}, rng), once);
    }
}

TEST(Repair, LengthMismatch) {
    Rng rng(1);
    EXPECT_THROW(repair(Bits(3, 0), 3, {}, rng), StructuralError);
}

TEST(Cpdag, EdgelessStaysEdgeless) {
    EXPECT_TRUE(cons_dag2cpdag(Dag(5)).edges().empty());
}

TEST(Cpdag, CompleteDagIsAllReversible) {
    Rng rng(6);
    const Dag g = random_complete_dag(6, {}, rng);
    const auto edges = cons_dag2cpdag(g).edges();
    EXPECT_EQ(edges.size(), 15u);
    for (const auto& e : edges) {
        EXPECT_EQ(e.label, EdgeLabel::reversible);
    }
}

TEST(Cpdag, ColliderIsCompelled) {
    // A=0, B=1, C=2: A -> C <- B.
    const Dag g = Dag::from_arcs(3, {{0, 2}, {1, 2}});
    const Cpdag c = cons_dag2cpdag(g);
    EXPECT_TRUE(c.compelled(0, 2));
    EXPECT_TRUE(c.compelled(1, 2));
    for (const auto& [arc, label] : oracle::class_labels(g)) {
        EXPECT_EQ(label, EdgeLabel::compelled);
    }
}

TEST(Cpdag, ConstraintDirectsCompleteTwoNodeGraph) {
    ConstraintSet c;
    c.forbid(0, 1);
    const Cpdag out = cons_dag2cpdag(Dag::from_arcs(2, {{1, 0}}, c), c);
    EXPECT_TRUE(out.compelled(1, 0));
    EXPECT_FALSE(out.reversible(0, 1));
}

TEST(Cpdag, ViolatingDagIsContractError) {
    ConstraintSet c;
    c.forbid(0, 1);
    EXPECT_THROW(cons_dag2cpdag(Dag::from_arcs(2, {{0, 1}}), c), ContractError);
}

TEST(Cpdag, MatchesEquivalenceClassOnAllSmallDags) {
    for (int n = 2; n <= 4; ++n) {
        for (const auto& g : oracle::all_dags(n)) {
            const Cpdag c = cons_dag2cpdag(g);
            for (const auto& [arc, label] : oracle::class_labels(g)) {
                const auto [a, b] = arc;
                if (label == EdgeLabel::compelled) {
                    EXPECT_TRUE(c.compelled(a, b));
                } else {
                    EXPECT_TRUE(c.reversible(a, b));
                }
            }
            EXPECT_EQ(c.edges().size(), g.arc_count());
        }
    }
}

TEST(Cpdag, ConstrainedOutputNeverContradictsConstraint) {
    Rng rng(31);
    for (int k = 0; k < 300; ++k) {
        const int n = 2 + static_cast<int>(uniform_index(rng, 4));
        const int a = static_cast<int>(uniform_index(rng, n));
        int b = static_cast<int>(uniform_index(rng, n - 1));
        b += b >= a;
        ConstraintSet c;
        c.forbid(a, b);
        const Dag g = random_dag(n, c, rng);
        const Cpdag out = cons_dag2cpdag(g, c);
        if (g.adjacent(a, b)) {
            EXPECT_TRUE(out.compelled(b, a));
        }
        for (const auto& e : out.edges()) {
            EXPECT_TRUE(g.adjacent(e.from, e.to));
        }
        EXPECT_EQ(out.edges().size(), g.arc_count());
    }
}

TEST(DirectedReachable, CompelledChain) {
    Cpdag c(3);
    c.add(0, 1, EdgeLabel::compelled);
    c.add(1, 2, EdgeLabel::compelled);
    EXPECT_TRUE(directed_reachable(c, 0, 2));
    EXPECT_FALSE(directed_reachable(c, 2, 0));
}

TEST(DirectedReachable, AllReversibleHasNoPaths) {
    Rng rng(12);
    const Cpdag c = cons_dag2cpdag(random_complete_dag(5, {}, rng));
    for (int a = 0; a < 5; ++a) {
        for (int b = 0; b < 5; ++b) {
            if (a != b) {
                EXPECT_FALSE(directed_reachable(c, a, b));
            }
        }
    }
}

TEST(DirectedReachable, Errors) {
    Cpdag c(3);
    EXPECT_THROW(directed_reachable(c, 0, 3), StructuralError);
    EXPECT_THROW(directed_reachable(c, 1, 1), StructuralError);
}

TEST(DirectedReachable, AgreesWithMatrixPowerOracle) {
    Rng rng(13);
    for (int k = 0; k < 200; ++k) {
        const int n = 3 + static_cast<int>(uniform_index(rng, 5));
        ConstraintSet c;
        if (coin(rng)) {
            c.forbid(0, n - 1);
        }
        const Cpdag cp = cons_dag2cpdag(random_dag(n, c, rng), c);
        const auto reach = oracle::compelled_power_reach(cp);
        const auto closure = compelled_closure(cp);
        for (int a = 0; a < n; ++a) {
            for (int b = 0; b < n; ++b) {
                if (a == b) {
                    continue;
                }
                EXPECT_EQ(directed_reachable(cp, a, b), reach[a][b]);
                EXPECT_EQ(closure[static_cast<std::size_t>(a) * n + b] != 0, reach[a][b]);
            }
        }
    }
}

TEST(EquivalenceClass, Chain) {
    const auto members = enumerate_equivalence_class(Dag::from_arcs(3, {{0, 1}, {1, 2}}));
    ASSERT_EQ(members.size(), 3u);
    const std::vector<Dag> expected{Dag::from_arcs(3, {{0, 1}, {1, 2}}), Dag::from_arcs(3, {{1, 0}, {1, 2}}),
                                    Dag::from_arcs(3, {{1, 0}, {2, 1}})};
    for (const auto& e : expected) {
        EXPECT_NE(std::find(members.begin(), members.end(), e), members.end());
    }
}

TEST(EquivalenceClass, ColliderAndEmpty) {
    EXPECT_EQ(enumerate_equivalence_class(Dag::from_arcs(3, {{0, 2}, {1, 2}})).size(), 1u);
    EXPECT_EQ(enumerate_equivalence_class(Dag(4)).size(), 1u);
}

TEST(EquivalenceClass, RefusesLargeGraphs) {
    EXPECT_THROW(enumerate_equivalence_class(Dag(6)), RefusalError);
}

TEST(EquivalenceClass, FourNodeDagCount) {
    EXPECT_EQ(oracle::all_dags(4).size(), 543u);
}
