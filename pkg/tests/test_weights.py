import random
from fractions import Fraction

import pytest

from cartproj._simplex import solve_feasibility
from cartproj.errors import BudgetError, InfeasibleInstanceError
from cartproj.exactlin import BlockStructure, RationalMatrix
from cartproj.mstar import DimensionVector
from cartproj.weights import (
    WeightsInstance,
    decompose_point,
    enumerate_tuples,
    enumerate_vertices,
    enumerate_weight_vectors,
    find_weights,
    membership,
    tight_subsets,
    verify_vertex_claim,
    violated_conditions,
)
from helpers import random_point_in_polyhedron, random_weights_instance

F = Fraction


def pair_instance(s, d):
    return WeightsInstance(
        pi=RationalMatrix([[1, 1]]),
        blocks=BlockStructure(block_sizes=(1, 1), target_dim=1),
        s=F(s),
        d=DimensionVector(tuple(F(v) for v in d)),
    )


def test_solve_feasibility_basic():
    one = F(1)
    x = solve_feasibility([[one, one]], [F(2)])
    assert x is not None and x[0] + x[1] == 2 and all(v >= 0 for v in x)
    # x1 + x2 = 1, x1 - x2 = 3 forces a negative coordinate: infeasible in x >= 0
    assert solve_feasibility([[one, one], [one, -one]], [F(1), F(3)]) is None
    # negative right-hand side is normalized internally
    x = solve_feasibility([[-one, F(0)]], [F(-2)])
    assert x == [F(2), F(0)]


def test_enumerate_tuples_pair():
    inst = pair_instance("1", ("1/2", "1/2"))
    tuples = [t.selections for t in enumerate_tuples(inst)]
    # the two columns are equal 1-vectors, so only the singletons qualify
    assert ((0,), ()) in tuples
    assert ((), (0,)) in tuples
    assert ((0,), (0,)) not in tuples
    assert len(tuples) == 2


def test_enumerate_tuples_zero_target_includes_empty():
    inst = pair_instance("0", ("0", "0"))
    tuples = [t.selections for t in enumerate_tuples(inst)]
    assert ((), ()) in tuples


def test_enumerate_tuples_identity_pair():
    inst = WeightsInstance(
        pi=RationalMatrix.identity(2),
        blocks=BlockStructure(block_sizes=(1, 1), target_dim=2),
        s=F(2),
        d=DimensionVector((F(1), F(1))),
    )
    tuples = [t.selections for t in enumerate_tuples(inst)]
    assert tuples == [((0,), (0,))]


def test_enumerate_weight_vectors_pair():
    inst = pair_instance("1", ("1/2", "1/2"))
    vectors = enumerate_weight_vectors(inst)
    assert sorted(wv.vector for wv in vectors) == [
        (F(0), F(1)),
        (F(0), F(1)),
        (F(1), F(0)),
        (F(1), F(0)),
    ]
    # counts equal to s gives the same vector for every pivot
    assert {wv.pivot for wv in vectors} == {0, 1}
    assert all(sum(wv.vector) == inst.s for wv in vectors)


def test_enumerate_weight_vectors_fractional():
    inst = pair_instance("1/2", ("1/2", "0"))
    vectors = enumerate_weight_vectors(inst)
    by = {(wv.source.selections, wv.pivot): wv.vector for wv in vectors}
    # pivot at the selected block shrinks it; the other pivot goes negative
    assert by[(((0,), ()), 0)] == (F(1, 2), F(0))
    assert (((0,), ()), 1) not in by


def test_find_weights_pair():
    inst = pair_instance("1", ("1/2", "1/2"))
    a = find_weights(inst)
    assert a.total() == 1
    assert a.combined() == (F(1, 2), F(1, 2))
    agg = {}
    for wv, alpha in a.entries:
        agg[wv.vector] = agg.get(wv.vector, F(0)) + alpha
    assert agg == {(F(1), F(0)): F(1, 2), (F(0), F(1)): F(1, 2)}


def test_find_weights_one_sided():
    inst = pair_instance("1", ("1", "0"))
    a = find_weights(inst)
    assert a.combined() == (F(1), F(0))
    assert a.total() == 1


def test_find_weights_single_block():
    inst = WeightsInstance(
        pi=RationalMatrix.identity(2),
        blocks=BlockStructure(block_sizes=(2,), target_dim=2),
        s=F(3, 2),
        d=DimensionVector((F(3, 2),)),
    )
    a = find_weights(inst)
    assert a.total() == 1
    assert a.combined() == (F(3, 2),)


def test_find_weights_infeasible_names_subset():
    inst = pair_instance("1", ("0", "0"))
    with pytest.raises(InfeasibleInstanceError) as err:
        find_weights(inst)
    assert err.value.subset == (0, 1)
    assert violated_conditions(inst) == [(0, 1)]


def test_find_weights_zero_target():
    inst = pair_instance("0", ("0", "0"))
    a = find_weights(inst)
    assert a.total() == 1
    assert a.combined() == (F(0), F(0))


def test_enumerate_vertices_pair():
    inst = pair_instance("1", ("1/2", "1/2"))
    assert enumerate_vertices(inst) == [(F(0), F(1)), (F(1), F(0))]


def test_enumerate_vertices_single_block():
    inst = WeightsInstance(
        pi=RationalMatrix.identity(2),
        blocks=BlockStructure(block_sizes=(2,), target_dim=2),
        s=F(3, 2),
        d=DimensionVector((F(2),)),
    )
    assert enumerate_vertices(inst) == [(F(3, 2),)]


def test_enumerate_vertices_zero_target_origin():
    inst = pair_instance("0", ("0", "0"))
    assert enumerate_vertices(inst) == [(F(0), F(0))]


def test_enumerate_vertices_block_cap():
    blocks = BlockStructure(block_sizes=(1,) * 5, target_dim=1)
    inst = WeightsInstance(
        pi=RationalMatrix([[1] * 5]),
        blocks=blocks,
        s=F(1),
        d=DimensionVector((F(1),) * 5),
    )
    with pytest.raises(BudgetError):
        enumerate_vertices(inst)


def test_verify_vertex_claim_pair():
    rep = verify_vertex_claim(pair_instance("1", ("1/2", "1/2")))
    assert rep.ok
    assert len(rep.matched) == 2


def test_membership_and_decompose_pair():
    inst = pair_instance("1", ("1/2", "1/2"))
    # every enumerated weight vector lies in the polyhedron
    for wv in enumerate_weight_vectors(inst):
        assert membership(inst, wv.vector)
        dec = decompose_point(inst, wv.vector)
        assert dec is not None
    assert not membership(inst, (F(1, 4), F(1, 4)))
    assert decompose_point(inst, (F(1, 4), F(1, 4))) is None
    dec = decompose_point(inst, (F(2), F(1)))
    assert dec is not None
    total = sum((a for _, a in dec.convex), F(0))
    assert total == 1
    assert all(b >= 0 for b in dec.cone)


def test_weight_vectors_all_in_polyhedron_randomized():
    rng = random.Random(4242)
    for _ in range(40):
        inst = random_weights_instance(rng)
        for wv in enumerate_weight_vectors(inst):
            assert membership(inst, wv.vector)


def test_vertex_claim_randomized():
    rng = random.Random(31337)
    for _ in range(60):
        inst = random_weights_instance(rng)
        rep = verify_vertex_claim(inst)
        assert rep.ok, f"unmatched vertices {rep.unmatched} on {inst}"


def test_two_sided_decomposition_randomized():
    rng = random.Random(2718)
    for _ in range(25):
        inst = random_weights_instance(rng)
        n = inst.blocks.n
        for _ in range(8):
            point = tuple(F(rng.randint(-1, 8), rng.randint(1, 3)) for _ in range(n))
            inside = membership(inst, point)
            witness = decompose_point(inst, point)
            assert inside == (witness is not None)


def test_tight_subsets_lattice_at_positive_vertices():
    rng = random.Random(555)
    for _ in range(60):
        inst = random_weights_instance(rng)
        for vertex in enumerate_vertices(inst):
            if any(c == 0 for c in vertex):
                continue
            tight = set(tight_subsets(inst, vertex))
            for a in tight:
                for b in tight:
                    assert tuple(sorted(set(a) | set(b))) in tight
                    inter = tuple(sorted(set(a) & set(b)))
                    if inter:
                        assert inter in tight


def test_points_in_polyhedron_have_weights():
    rng = random.Random(777)
    for _ in range(20):
        inst = random_weights_instance(rng)
        vertices = enumerate_vertices(inst)
        if not vertices:
            continue
        point = random_point_in_polyhedron(rng, inst, vertices)
        shifted = WeightsInstance(
            pi=inst.pi, blocks=inst.blocks, s=inst.s, d=DimensionVector(point)
        )
        a = find_weights(shifted)
        assert a.total() == 1
        assert all(c <= p for c, p in zip(a.combined(), point))
