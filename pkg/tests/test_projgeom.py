import random

import pytest

from pgconics.galois import Field
from pgconics.projgeom import (AmbientMismatch, IncidenceIndex, ProjectiveSpace,
                               Subspace, affine_filter, gaussian_binomial,
                               matrix_inverse, mat_mul, meet, nullspace, rref,
                               scan_heavy_planes, span)


@pytest.fixture(scope="module")
def pg4(gf7):
    return ProjectiveSpace(4, gf7)


@pytest.fixture(scope="module")
def pg3(gf7):
    return ProjectiveSpace(3, gf7)


def test_point_counts(pg4, gf9):
    assert pg4.npoints == 2801
    assert len(pg4.points()) == 2801
    assert len(set(pg4.points())) == 2801
    assert ProjectiveSpace(3, gf9).npoints == 820


@pytest.mark.parametrize("q,n,d", [
    (7, 2, 0), (7, 2, 1), (7, 3, 0), (7, 3, 1), (7, 3, 2),
    (9, 2, 0), (9, 2, 1), (9, 3, 1),
])
def test_subspace_counts_match_gaussian_binomial(q, n, d):
    field = Field(q) if q != 9 else Field(3, 2)
    space = ProjectiveSpace(n, field)
    subs = list(space.subspaces(d))
    assert len(subs) == gaussian_binomial(n + 1, d + 1, q)
    assert len({s.rows for s in subs}) == len(subs)


def test_lines_of_pg37_count(pg3):
    assert sum(1 for _ in pg3.lines()) == 2850


def test_planes_through_fixed_line(pg4):
    line = span(pg4, [(1, 0, 0, 0, 0), (0, 1, 0, 0, 0)])
    planes = set()
    for p in pg4.points():
        if not line.contains(p):
            planes.add(span(pg4, [line, p]).rows)
    assert len(planes) == 57  # q^2 + q + 1


def test_span_examples(pg4):
    pt = (1, 2, 3, 4, 5)
    single = span(pg4, [pt])
    assert single.dim == 0
    assert single.contains(pg4.normalize(pt))
    plane = span(pg4, [(1, 0, 0, 0, 0), (0, 1, 0, 0, 0), (0, 0, 1, 0, 0)])
    assert plane.dim == 2
    other = span(pg4, [(1, 0, 0, 0, 0), (0, 1, 0, 0, 0), (0, 0, 0, 1, 0)])
    assert meet(plane, other).dim == 1
    assert span(pg4, [plane, other]).dim == 3


def test_meet_examples(pg4, pg3):
    plane = span(pg4, [(1, 0, 0, 0, 0), (0, 1, 0, 0, 0), (0, 0, 1, 0, 0)])
    assert meet(plane, plane) == plane
    l1 = span(pg3, [(1, 0, 0, 0), (0, 1, 0, 0)])
    l2 = span(pg3, [(0, 0, 1, 0), (0, 0, 0, 1)])
    assert meet(l1, l2) is None


def test_modular_law_random_pairs(pg4):
    rng = random.Random(20240817)
    checked = 0
    while checked < 10_000:
        d1, d2 = rng.randint(0, 3), rng.randint(0, 3)
        v1 = [tuple(rng.randrange(7) for _ in range(5)) for _ in range(d1 + 1)]
        v2 = [tuple(rng.randrange(7) for _ in range(5)) for _ in range(d2 + 1)]
        try:
            a = Subspace.from_vectors(pg4, v1)
            b = Subspace.from_vectors(pg4, v2)
        except ValueError:
            continue
        m = meet(a, b)
        s = span(pg4, [a, b])
        assert a.dim + b.dim == s.dim + (m.dim if m else -1)
        checked += 1


def test_canonicalization_idempotent():
    field = Field(3)
    space = ProjectiveSpace(3, field)
    for d in (0, 1, 2):
        for s in space.subspaces(d):
            red, _ = rref(field, s.rows)
            assert red == s.rows


def test_subspace_point_enumeration(pg4):
    plane = span(pg4, [(1, 0, 0, 0, 0), (0, 1, 0, 0, 0), (0, 0, 1, 0, 0)])
    pts = plane.points()
    assert len(pts) == 57
    assert len(set(pts)) == 57
    assert all(plane.contains(p) for p in pts)


def test_affine_filter(pg4):
    h = pg4.hyperplane(4)
    assert affine_filter(h, h) == "contained"
    contained_plane = span(pg4, [(1, 0, 0, 0, 0), (0, 1, 0, 0, 0), (0, 0, 1, 0, 0)])
    assert affine_filter(contained_plane, h) == "contained"
    affine_plane = span(pg4, [(1, 0, 0, 0, 0), (0, 1, 0, 0, 0), (0, 0, 0, 0, 1)])
    assert affine_filter(affine_plane, h) == "meets_in_lower"
    assert meet(affine_plane, h).dim == 1
    affine_line = span(pg4, [(1, 0, 0, 0, 0), (0, 0, 0, 0, 1)])
    assert affine_filter(affine_line, h) == "meets_in_lower"
    assert meet(affine_line, h).dim == 0


def test_ambient_mismatch(pg4, pg3):
    l3 = span(pg3, [(1, 0, 0, 0), (0, 1, 0, 0)])
    l4 = span(pg4, [(1, 0, 0, 0, 0), (0, 1, 0, 0, 0)])
    with pytest.raises(AmbientMismatch):
        meet(l3, l4)
    with pytest.raises(AmbientMismatch):
        span(pg4, [l3])


def test_matrix_inverse(gf7):
    m = ((1, 2, 3, 0), (0, 1, 4, 2), (5, 0, 1, 1), (3, 3, 0, 2))
    inv = matrix_inverse(gf7, m)
    ident = tuple(tuple(1 if i == j else 0 for j in range(4)) for i in range(4))
    assert mat_mul(gf7, m, inv) == ident
    singular = ((1, 2, 3, 0), (0, 1, 4, 2), (5, 0, 1, 1), (3, 3, 0, 1))
    assert matrix_inverse(gf7, singular) is None


def test_nullspace_orthogonality(gf7):
    rows = ((1, 2, 3, 4, 5), (0, 1, 0, 2, 0))
    for v in nullspace(gf7, rows):
        for r in rows:
            assert gf7.dot(r, v) == 0


def test_text_roundtrip(pg4):
    plane = span(pg4, [(1, 2, 3, 4, 5), (0, 1, 0, 1, 0), (0, 0, 1, 1, 1)])
    assert Subspace.from_text(pg4, plane.to_text()) == plane
    with pytest.raises(ValueError):
        Subspace.from_text(pg4, "2,0,0,0,0;0,1,0,0,0")  # not canonical


def test_incidence_index():
    space = ProjectiveSpace(2, Field(3))
    idx = IncidenceIndex(space, 1)
    assert len(idx.subspaces) == 13
    for pid, p in enumerate(space.points()):
        incident = [sid for sid in range(len(idx.subspaces))
                    if idx.is_incident(sid, pid)]
        assert len(incident) == 4  # q + 1 lines through a point
        assert incident == idx.point_subs[pid]
        for sid in incident:
            assert idx.subspaces[sid].contains(p)


def test_scan_heavy_planes_finds_planted_plane(pg4, gf7):
    plane = span(pg4, [(1, 0, 0, 0, 0), (0, 1, 0, 0, 0), (0, 0, 0, 0, 1)])
    # six points of the plane with no three collinear: a conic-style graph
    pts = [pg4.normalize((1, t, 0, 0, gf7.mul(t, t))) for t in range(6)]
    assert all(plane.contains(p) for p in pts)
    # pad with points off the plane
    pts += [(1, 1, 1, 0, 1), (1, 2, 0, 1, 1)]
    scan = scan_heavy_planes(pg4, pts, 5)
    assert scan.collinear_triple is None
    found = [(pl, mem) for pl, mem in scan.planes if len(mem) >= 5]
    assert len(found) == 1
    assert found[0][0].rows == plane.rows
    assert found[0][1] == (0, 1, 2, 3, 4, 5)
