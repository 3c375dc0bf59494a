import itertools
import random

import pytest

from pgconics.projgeom import (Subspace, matrix_inverse, points_array, rref,
                               span)
from pgconics.bruckbose import build_C, random_tangent_conic
from pgconics.reconstruct import (CheckViolation, PipelineState, Spread,
                                  align_spreads, classical_spread,
                                  displace_point, full_pipeline, make_frame,
                                  on_klein_quadric, perturb_spread_by_regulus,
                                  plucker, regulus_from, run_stages)


def records_by_name(records):
    return {r.name: r for r in records}


# ---------------------------------------------------------------------------
# round trip and stage counts


def test_roundtrip_all_stages_pass(run7):
    records, state = run7
    assert [r.verdict for r in records] == ["pass"] * 9
    assert [r.name for r in records] == [
        "axioms", "parallel_classes", "infinity_data", "t_infinity",
        "assemble_spread", "regulus_closure", "klein_regularity",
        "rebuild_arc", "uniqueness"]


def test_roundtrip_counts_q7(run7):
    rec = records_by_name(run7[0])
    assert rec["axioms"].counts["planes"] == 56
    assert rec["axioms"].counts["points_on_two_planes"] == 1176
    assert rec["axioms"].counts["points_on_no_plane"] == 1176
    assert rec["parallel_classes"].counts == {
        "classes": 8, "class_size": 7, "same_class_pairs": 168,
        "cross_class_pairs_sharing_one": 1372}
    assert rec["infinity_data"].counts["completion_points"] == 4
    assert rec["infinity_data"].counts["free_points"] == 4
    assert rec["infinity_data"].counts["simple_points"] == 392
    assert rec["infinity_data"].counts["trace_lines"] == 56
    assert rec["infinity_data"].counts["lines_per_completion"] == 14
    assert rec["t_infinity"].counts == {"axis_points": 8, "planes_through_axis": 49}
    assert rec["assemble_spread"].counts["lines"] == 50
    assert rec["assemble_spread"].counts["points_covered"] == 400
    assert rec["regulus_closure"].counts == {
        "pairs": 1176, "passes": 1176, "distinct_reguli": 56,
        "opposites_with_one_trace_line": 56}
    assert rec["klein_regularity"].counts["span_dim"] == 3
    assert rec["klein_regularity"].counts["section_size"] == 50
    assert rec["rebuild_arc"].counts["conic_fit"] == 1
    assert rec["rebuild_arc"].counts["matches_input_conic"] == 1
    assert rec["uniqueness"].counts["lines_disjoint_outside"] == 2352
    assert rec["uniqueness"].counts["incompatible"] == 2352
    assert rec["uniqueness"].counts["spread_matches_classical"] == 1


def test_reconstructed_spread_equals_classical(run7, frame7):
    _, state = run7
    assert state.spread.rows_set() == {l.rows for l in frame7.spread}


def test_determinism(frame7, conic7, c7):
    r1, s1 = full_pipeline(c7, frame=frame7, conic=conic7, expect_classical=True)
    r2, s2 = full_pipeline(c7, frame=frame7, conic=conic7, expect_classical=True)
    assert [(r.name, r.verdict, r.counts) for r in r1] == \
        [(r.name, r.verdict, r.counts) for r in r2]
    assert s1.spread.rows_set() == s2.spread.rows_set()


# ---------------------------------------------------------------------------
# lemma-level invariants, exhaustive at q = 7


def test_plane_intersection_trichotomy(run7, frame7):
    """Two planes meet in one point, or in a line carrying exactly one point;
    same-class pairs meet exactly in their shared completion point."""
    _, state = run7
    planes = state.planes
    cset = set(state.C)
    for a, b in itertools.combinations(range(len(planes)), 2):
        pa, pb = planes[a], planes[b]
        m = pa.plane.meet(pb.plane)
        assert m is not None
        same_class = pa.class_id == pb.class_id
        if same_class:
            assert m.dim == 0
            pt = m.rows[0]
            assert pt[4] == 0 and pt[:4] == pa.completion == pb.completion
        elif m.dim == 0:
            assert m.rows[0] in cset
        else:
            assert m.dim == 1
            on_c = [p for p in m.points() if p in cset]
            assert len(on_c) == 1
            comp5 = frame7.space4.normalize(pa.completion + (0,))
            assert m.contains(comp5)
            assert pa.completion == pb.completion


def test_three_space_confinement(run7, frame7):
    """Planes spanning a 3-space: its points are exactly theirs, no third plane."""
    _, state = run7
    planes = state.planes
    f = frame7.base
    pairs = 0
    for a, b in itertools.combinations(range(len(planes)), 2):
        pa, pb = planes[a], planes[b]
        m = pa.plane.meet(pb.plane)
        if m is None or m.dim != 1:
            continue
        sigma3 = span(frame7.space4, [pa.plane, pb.plane])
        assert sigma3.dim == 3
        dual = sigma3.dual()[0]
        inside = {i for i, p in enumerate(state.C) if f.dot(dual, p) == 0}
        assert inside == set(pa.members) | set(pb.members)
        third = [i for i, info in enumerate(planes)
                 if info.plane.is_subspace_of(sigma3)]
        assert sorted(third) == sorted([a, b])
        pairs += 1
    assert pairs == 196  # (q+1)/2 completion points x q^2 cross pairs


def test_planes_at_infinity_through_axis(run7, frame7):
    """Each plane of the hyperplane at infinity through the axis holds exactly
    q trace lines, concurrent in a completion point, from one parallel class."""
    _, state = run7
    axis = state.axis
    sigma = frame7.sigma
    planes_thru_axis = set()
    for p in sigma.points():
        if not axis.contains(p):
            planes_thru_axis.add(span(sigma, [axis, p]).rows)
    assert len(planes_thru_axis) == 8  # q + 1
    for rows in planes_thru_axis:
        plane = Subspace(sigma, rows)
        carried = [i for i, info in enumerate(state.planes)
                   if info.cline.is_subspace_of(plane)]
        assert len(carried) == 7  # q trace lines
        completions = {state.planes[i].completion for i in carried}
        assert len(completions) == 1
        classes = {state.planes[i].class_id for i in carried}
        assert len(classes) == 1


def test_transversal_points_lie_on_common_plane(run7, frame7):
    """A line meeting the axis meets q trace lines; their points are coplanar."""
    _, state = run7
    axis = state.axis
    sigma = frame7.sigma
    spread = state.spread
    line_of_point = {}
    for l in spread.lines:
        for p in l.points():
            line_of_point[p] = l.rows
    axis_pts = set(axis.points())
    seen = {axis.rows}
    checked = 0
    for V in sorted(axis_pts):
        for X in sigma.points():
            if X in axis_pts:
                continue
            line = span(sigma, [V, X])
            if line.rows in seen:
                continue
            seen.add(line.rows)
            cids = set()
            for p in line.points():
                rows = line_of_point[p]
                if rows == axis.rows:
                    continue
                cids.add(spread.provenance[rows])
            assert len(cids) == 7  # q distinct trace lines met
            members = sorted(cids)
            plane = span(frame7.space4, [state.C[i] for i in members[:3]])
            assert plane.dim == 2
            assert all(plane.contains(state.C[i]) for i in members)
            assert any(set(members) <= set(info.members) for info in state.planes)
            checked += 1
    assert checked == 448  # (q+1)(q^2+q) lines meeting the axis


# ---------------------------------------------------------------------------
# reguli and the Klein correspondence


def test_regulus_from_classical_lines(frame7):
    lines = [Subspace(frame7.sigma, l.rows) for l in frame7.spread]
    reg = regulus_from(frame7.sigma, lines[0], lines[1], lines[2])
    rows = {l.rows for l in lines}
    assert all(l.rows in rows for l in reg.lines)
    assert len(reg.lines) == len(reg.opposite) == 8
    # (q+1)^2 distinct intersection points
    pts = set()
    for a in reg.lines:
        for b in reg.opposite:
            m = a.meet(b)
            assert m is not None and m.dim == 0
            pts.add(m.rows[0])
    assert len(pts) == 64
    # idempotence: the regulus of three regulus lines is the same regulus
    again = regulus_from(frame7.sigma, *reg.lines[:3])
    assert {l.rows for l in again.lines} == {l.rows for l in reg.lines}


def test_regulus_rejects_meeting_lines(frame7):
    sigma = frame7.sigma
    l1 = span(sigma, [(1, 0, 0, 0), (0, 1, 0, 0)])
    l2 = span(sigma, [(1, 0, 0, 0), (0, 0, 1, 0)])
    l3 = span(sigma, [(0, 0, 1, 0), (0, 0, 0, 1)])
    from pgconics.reconstruct import NotSkew
    with pytest.raises(NotSkew):
        regulus_from(sigma, l1, l2, l3)


def test_plucker_images_on_quadric(frame7):
    f = frame7.base
    for line in frame7.spread:
        p = plucker(f, line)
        assert on_klein_quadric(f, p)


def test_klein_rejects_hall_perturbation(run7, frame7, c7):
    _, state = run7
    pert, reg = perturb_spread_by_regulus(frame7.sigma, state.spread)
    st = PipelineState(frame7, c7)
    st._C_arr = points_array(st.C)
    st.spread = pert
    recs = run_stages(st, include={"regulus_closure", "klein_regularity"})
    by = records_by_name(recs)
    assert by["regulus_closure"].verdict == "fail"
    assert by["klein_regularity"].verdict == "fail"


def test_dual_regularity_oracles_agree(run7, frame7, c7):
    """Klein verdict equals regulus-closure verdict on every tested spread."""
    _, state = run7
    spreads = [classical_spread(frame7), state.spread,
               perturb_spread_by_regulus(frame7.sigma, state.spread)[0]]
    for spread in spreads:
        st = PipelineState(frame7, c7)
        st._C_arr = points_array(st.C)
        st.spread = spread
        recs = run_stages(st, include={"regulus_closure", "klein_regularity"})
        by = records_by_name(recs)
        assert (by["regulus_closure"].verdict == "pass") == \
            (by["klein_regularity"].verdict == "pass")


# ---------------------------------------------------------------------------
# negative controls and alignment


def test_displaced_point_fails_axioms(frame7, c7):
    bad = displace_point(frame7, c7, seed=1)
    records, _ = full_pipeline(bad, frame=frame7)
    by = records_by_name(records)
    assert by["axioms"].verdict == "fail"
    assert by["axioms"].witness
    assert by["parallel_classes"].verdict == "skipped"


def test_corrupted_points_against_classical_spread(frame7, c7):
    bad = displace_point(frame7, c7, seed=2)
    st = PipelineState(frame7, bad)
    st._C_arr = points_array(st.C)
    st.spread = classical_spread(frame7)
    st.assume_regular = True
    recs = run_stages(st, include={"rebuild_arc"})
    assert recs[0].verdict == "fail"
    assert "NotAnArc" in recs[0].witness


def test_alignment_of_transformed_input(frame7, conic7, c7):
    f = frame7.base
    rng = random.Random(31)
    while True:
        A = tuple(tuple(rng.randrange(7) for _ in range(4)) for _ in range(4))
        if matrix_inverse(f, A) is not None:
            break

    def apply5(p):
        img = tuple(f.dot(p[:4], col) for col in zip(*A)) + (p[4],)
        return frame7.space4.normalize(img)

    c2 = sorted(apply5(p) for p in c7)
    records, state = full_pipeline(c2, frame=frame7)
    by = records_by_name(records)
    assert all(r.verdict == "pass" for r in records)
    assert by["rebuild_arc"].counts["conic_fit"] == 1
    classical = {l.rows for l in frame7.spread}
    if state.spread.rows_set() != classical:
        assert by["rebuild_arc"].counts["alignment_identity"] == 0


def test_align_spreads_maps_line_sets(frame7):
    f = frame7.base
    sigma = frame7.sigma
    rng = random.Random(8)
    while True:
        M = tuple(tuple(rng.randrange(7) for _ in range(4)) for _ in range(4))
        if matrix_inverse(f, M) is not None:
            break

    def map_line(line):
        rows, _ = rref(f, [tuple(f.dot(r, col) for col in zip(*M)) for r in line.rows])
        return Subspace(sigma, rows)

    reg_lines = [Subspace(sigma, l.rows) for l in frame7.spread]
    moved = [map_line(l) for l in reg_lines]
    spread = Spread(lines=tuple(moved), axis=map_line(reg_lines[0]), provenance={})
    A = align_spreads(sigma, spread, reg_lines)
    tgt = {l.rows for l in reg_lines}
    for l in moved:
        rows, _ = rref(f, [tuple(f.dot(r, col) for col in zip(*A)) for r in l.rows])
        assert rows in tgt


# ---------------------------------------------------------------------------
# exploratory mode


def test_exploratory_q5_runs_all_stages():
    frame = make_frame(5)
    conic = random_tangent_conic(frame, 0)
    C = build_C(frame, conic)
    records, _ = full_pipeline(C, frame=frame, conic=conic, exploratory=True,
                               expect_classical=True)
    assert all(r.verdict in ("pass", "warn", "skipped") for r in records)
    assert len(records) == 9


def test_exploratory_q3_downgrades_to_warnings():
    frame = make_frame(3)
    conic = random_tangent_conic(frame, 0)
    C = build_C(frame, conic)
    records, _ = full_pipeline(C, frame=frame, exploratory=True)
    by = records_by_name(records)
    assert by["axioms"].verdict == "warn"
    assert by["parallel_classes"].verdict == "skipped"


def test_strict_mode_raises_nothing_but_records(frame7, c7):
    bad = displace_point(frame7, c7, seed=3)
    records, _ = full_pipeline(bad, frame=frame7)
    assert any(r.verdict == "fail" for r in records)
