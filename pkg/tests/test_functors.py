import numpy as np
import pytest

from coverembed import (
    DisconnectedError,
    ValidationError,
    cover_at,
    from_matrix,
    from_points_euclidean,
    fuzzy_simplex,
    fuzzy_union_membership,
    geodesic_metric,
    is_flag_cover,
    iso_cluster,
    l_k_linkage,
    maximal_linkage,
    membership_matrix,
    refines,
    single_linkage,
    vl_k_linkage,
)

from oracles import (
    oracle_max_cliques,
    oracle_maximal_j_connected,
    oracle_minimax_path,
    random_space,
    threshold_edges,
)

CHAIN = from_matrix([[0, 1, 3], [1, 0, 2], [3, 2, 0]])


# -- single linkage ------------------------------------------------------------


def test_single_linkage_chain():
    h = single_linkage(CHAIN)
    assert h.scales == (0.0, 1.0, 2.0)
    assert [c.blocks for c in h.covers] == [
        ((0,), (1,), (2,)),
        ((0, 1), (2,)),
        ((0, 1, 2),),
    ]


def test_single_linkage_all_identical_points():
    h = single_linkage(from_matrix(np.zeros((4, 4))))
    assert h.scales == (0.0,)
    assert h.covers[0].blocks == ((0, 1, 2, 3),)


def test_single_linkage_two_points():
    h = single_linkage(from_matrix([[0, 5], [5, 0]]))
    assert h.scales == (0.0, 5.0)


# -- maximal linkage -----------------------------------------------------------


def test_maximal_linkage_chain_overlap():
    h = maximal_linkage(CHAIN)
    assert cover_at(h, 2.5).blocks == ((0, 1), (1, 2))
    assert cover_at(h, 3.0).blocks == ((0, 1, 2),)
    assert cover_at(h, 0.5).blocks == ((0,), (1,), (2,))


def test_maximal_linkage_matches_clique_oracle():
    rng = np.random.default_rng(11)
    for _ in range(8):
        space = random_space(rng, n=6)
        h = maximal_linkage(space)
        for delta in h.scales:
            expected = oracle_max_cliques(6, threshold_edges(space.d, delta))
            assert cover_at(h, delta).blocks == tuple(expected)


# -- bounded-hop linkage ---------------------------------------------------------


def test_l_k_rejects_zero():
    with pytest.raises(ValidationError):
        l_k_linkage(CHAIN, 0)


def test_l_1_equals_maximal_linkage():
    rng = np.random.default_rng(12)
    for _ in range(6):
        space = random_space(rng, n=5)
        assert l_k_linkage(space, 1) == maximal_linkage(space)


def test_l_3_chain_connects_ends_at_two():
    h = l_k_linkage(CHAIN, 3)
    assert cover_at(h, 2.0).blocks == ((0, 1, 2),)
    assert cover_at(h, 1.5).blocks == ((0, 1), (2,))


def test_l_k_at_least_n_equals_single_linkage():
    rng = np.random.default_rng(13)
    for _ in range(6):
        space = random_space(rng, n=5)
        assert l_k_linkage(space, 5) == single_linkage(space)
        assert l_k_linkage(space, 9) == single_linkage(space)


def test_l_k_relation_matches_path_oracle():
    rng = np.random.default_rng(14)
    for _ in range(4):
        space = random_space(rng, n=5)
        for k in (2, 3):
            h = l_k_linkage(space, k)
            w = membership_matrix(h)
            for i in range(5):
                for j in range(i + 1, 5):
                    want = oracle_minimax_path(space.d, i, j, max_hops=k - 1)
                    assert -np.log(w.w[i, j]) == pytest.approx(want, abs=1e-12)


# -- vertex-connectivity linkage ---------------------------------------------------


def test_vl_1_equals_single_linkage():
    rng = np.random.default_rng(15)
    for _ in range(6):
        space = random_space(rng, n=5)
        assert vl_k_linkage(space, 1) == single_linkage(space)


def test_vl_2_four_cycle_is_one_block():
    # 4-cycle: edges (0,1),(1,2),(2,3),(3,0) short, diagonals long
    d = np.full((4, 4), 5.0)
    np.fill_diagonal(d, 0.0)
    for i, j in ((0, 1), (1, 2), (2, 3), (3, 0)):
        d[i, j] = d[j, i] = 1.0
    space = from_matrix(d)
    h = vl_k_linkage(space, 2)
    assert cover_at(h, 1.0).blocks == ((0, 1, 2, 3),)
    assert cover_at(h, 0.5).blocks == ((0,), (1,), (2,), (3,))


def test_vl_k_at_least_n_equals_maximal_linkage():
    rng = np.random.default_rng(16)
    for _ in range(5):
        space = random_space(rng, n=5)
        assert vl_k_linkage(space, 5) == maximal_linkage(space)


def test_vl_k_blocks_match_subset_oracle():
    rng = np.random.default_rng(17)
    for _ in range(3):
        space = random_space(rng, n=6)
        for k in (2, 3):
            h = vl_k_linkage(space, k)
            for delta in h.scales:
                expected = oracle_maximal_j_connected(
                    6, threshold_edges(space.d, delta), k
                )
                assert cover_at(h, delta).blocks == tuple(expected)


# -- geodesic metric and iso_cluster ------------------------------------------------


def test_geodesic_collinear_path_through_middle():
    space = from_points_euclidean([[0.0], [1.0], [2.0]])
    geo = geodesic_metric(space, 1.0)
    assert geo.d[0, 2] == pytest.approx(2.0)


def test_geodesic_identity_at_full_cap():
    rng = np.random.default_rng(18)
    space = from_points_euclidean(rng.normal(size=(5, 2)))
    geo = geodesic_metric(space, float(space.d.max()))
    assert np.allclose(geo.d, space.d)


def test_geodesic_disconnection_policies():
    space = from_points_euclidean([[0.0], [1.0], [10.0], [11.0]])
    with pytest.raises(DisconnectedError) as err:
        geodesic_metric(space, 2.0)
    assert err.value.components == [(0, 1), (2, 3)]
    capped = geodesic_metric(space, 2.0, disconnected="cap")
    assert capped.d[0, 2] == pytest.approx(3.0 * 1.0)


def test_iso_cluster_reduces_to_maximal_linkage_at_full_cap():
    rng = np.random.default_rng(19)
    space = from_points_euclidean(rng.normal(size=(5, 2)))
    assert iso_cluster(space, float(space.d.max())) == maximal_linkage(space)


def test_iso_cluster_collinear_membership():
    space = from_points_euclidean([[0.0], [1.0], [2.0]])
    w = membership_matrix(iso_cluster(space, 1.0))
    assert w.w[0, 2] == pytest.approx(np.exp(-2.0))


def test_iso_cluster_circle_geodesics_are_chord_sums():
    n, r = 16, 1.0
    theta = 2 * np.pi * np.arange(n) / n
    space = from_points_euclidean(np.column_stack([r * np.cos(theta), r * np.sin(theta)]))
    chord = 2 * r * np.sin(np.pi / n)
    geo = geodesic_metric(space, chord * 1.0001)
    hops = np.abs(np.arange(n)[:, None] - np.arange(n)[None, :])
    hops = np.minimum(hops, n - hops)
    assert np.allclose(geo.d, chord * hops, atol=1e-12)


# -- fuzzy simplex ---------------------------------------------------------------


def test_fuzzy_two_points_full_membership():
    for dist in (0.5, 1.0, 7.0):
        w = fuzzy_union_membership(from_matrix([[0, dist], [dist, 0]]))
        assert w.w[0, 1] == 1.0


def test_fuzzy_collinear_union_formula():
    space = from_points_euclidean([[0.0], [1.0], [3.0]])
    w = fuzzy_union_membership(space)
    expected = 1.0 - (1.0 - np.exp(-2.0)) * (1.0 - np.exp(-1.0))
    assert w.w[0, 2] == pytest.approx(expected, rel=1e-15)


def test_fuzzy_symmetric_triple():
    d = np.full((3, 3), 2.0)
    np.fill_diagonal(d, 0.0)
    w = fuzzy_union_membership(from_matrix(d))
    off = w.w[~np.eye(3, dtype=bool)]
    assert np.unique(off).size == 1


def test_fuzzy_needs_two_points():
    with pytest.raises(ValidationError):
        fuzzy_simplex(from_matrix([[0.0]]))


def test_fuzzy_hierarchy_consistent_with_membership():
    rng = np.random.default_rng(20)
    space = random_space(rng, n=5)
    h, w = fuzzy_simplex(space)
    again = membership_matrix(h)
    assert np.allclose(again.w, w.w, rtol=1e-12)


def test_fuzzy_membership_permutation_equivariant():
    rng = np.random.default_rng(21)
    space = random_space(rng, n=6)
    perm = rng.permutation(6)
    w = fuzzy_union_membership(space).w
    w_perm = fuzzy_union_membership(space.permuted(perm)).w
    assert np.array_equal(w_perm, w[np.ix_(perm, perm)])


# -- cross-constructor invariants ----------------------------------------------------


def _hierarchies(space, k):
    return {
        "sl": single_linkage(space),
        "ml": maximal_linkage(space),
        "lk": l_k_linkage(space, k),
        "vlk": vl_k_linkage(space, k),
    }


def test_refinement_spectrum_on_random_spaces():
    rng = np.random.default_rng(22)
    for _ in range(5):
        space = random_space(rng, n=6)
        for k in (1, 2, 3, 6):
            hs = _hierarchies(space, k)
            deltas = sorted(set().union(*(h.scales for h in hs.values())))
            for delta in deltas:
                ml = cover_at(hs["ml"], delta)
                sl = cover_at(hs["sl"], delta)
                assert refines(ml, cover_at(hs["lk"], delta))
                assert refines(cover_at(hs["lk"], delta), sl)
                assert refines(ml, cover_at(hs["vlk"], delta))
                assert refines(cover_at(hs["vlk"], delta), sl)


def test_all_constructors_produce_flag_coarsening_hierarchies():
    rng = np.random.default_rng(23)
    space = random_space(rng, n=5)
    built = [
        single_linkage(space),
        maximal_linkage(space),
        l_k_linkage(space, 2),
        vl_k_linkage(space, 2),
        iso_cluster(space, float(space.d.max())),
        fuzzy_simplex(space)[0],
    ]
    for h in built:
        h.validate_coarsening()
        for cover in h.covers:
            assert is_flag_cover(cover)


def test_single_linkage_respects_point_collapse():
    # quotient a random space by gluing points 0 and 1 (shortest-path closure)
    rng = np.random.default_rng(24)
    for _ in range(4):
        space = random_space(rng, n=5)
        glued = space.d.copy()
        glued[0, 1] = glued[1, 0] = 0.0
        for k in range(5):
            glued = np.minimum(glued, glued[:, k, None] + glued[None, k, :])
        keep = [0, 2, 3, 4]  # drop index 1, now identified with 0
        quotient = from_matrix(glued[np.ix_(keep, keep)])
        qmap = {0: 0, 1: 0, 2: 1, 3: 2, 4: 3}
        hx = single_linkage(space)
        hq = single_linkage(quotient)
        for delta in sorted(set(hx.scales) | set(hq.scales)):
            q_blocks = [set(b) for b in cover_at(hq, delta).blocks]
            for block in cover_at(hx, delta).blocks:
                image = {qmap[v] for v in block}
                assert any(image <= qb for qb in q_blocks)


def test_uniform_shift_moves_covers_rigidly():
    rng = np.random.default_rng(25)
    space = random_space(rng, n=5)
    eps = 0.35
    shifted = space.shifted(eps)
    for build in (single_linkage, maximal_linkage):
        h = build(space)
        h_shift = build(shifted)
        for delta in list(h.scales) + [max(h.scales) + 1.0]:
            assert cover_at(h_shift, delta + eps) == cover_at(h, delta)
