"""Conics, arcs and tangency in a projective plane of odd order.

A quadratic form is kept as a symmetric 3x3 matrix M (odd order makes the
symmetric representative canonical); a point P is on the conic iff
P M P^T = 0 and the tangent line at a conic point has dual coordinates M P.
"""

from __future__ import annotations

import itertools

from .projgeom import Subspace, nullspace, rref, span


class DegenerateInput(ValueError):
    """Input points do not determine a unique nondegenerate conic."""


class PointNotOnConic(ValueError):
    pass


class NotAnArc(ValueError):
    """A point set that should be an arc has three collinear points."""

    def __init__(self, message, witness=None):
        super().__init__(message)
        self.witness = witness


class CompletionNotUnique(ValueError):
    """Arc completion did not produce a single point (corrupted input)."""


def _det3(f, m):
    a, b, c = m[0]
    d, e, g = m[1]
    h, i, j = m[2]
    t1 = f.mul(a, f.sub(f.mul(e, j), f.mul(g, i)))
    t2 = f.mul(b, f.sub(f.mul(d, j), f.mul(g, h)))
    t3 = f.mul(c, f.sub(f.mul(d, i), f.mul(e, h)))
    return f.add(f.sub(t1, t2), t3)


class QuadraticForm:
    """Symmetric 3x3 quadratic form over the plane's field."""

    __slots__ = ("space", "matrix", "_points", "_tangent_duals")

    def __init__(self, space, matrix):
        if space.n != 2:
            raise ValueError("quadratic forms live in a projective plane")
        f = space.field
        matrix = tuple(tuple(x for x in row) for row in matrix)
        for i in range(3):
            for j in range(3):
                if matrix[i][j] != matrix[j][i]:
                    raise ValueError("matrix must be symmetric")
        self.space = space
        self.matrix = matrix
        self._points = None
        self._tangent_duals = None

    @classmethod
    def from_coefficients(cls, space, coeffs):
        """Build from (a, b, c, d, e, f) in a x^2 + b y^2 + c z^2 + d xy + e xz + f yz."""
        fld = space.field
        half = fld.inv(2 % fld.p if fld.k == 1 else 2)
        a, b, c, d, e, ff = coeffs
        m = (
            (a, fld.mul(half, d), fld.mul(half, e)),
            (fld.mul(half, d), b, fld.mul(half, ff)),
            (fld.mul(half, e), fld.mul(half, ff), c),
        )
        return cls(space, m)

    def coefficients(self):
        m, f = self.matrix, self.space.field
        return (m[0][0], m[1][1], m[2][2],
                f.add(m[0][1], m[0][1]), f.add(m[0][2], m[0][2]),
                f.add(m[1][2], m[1][2]))

    def evaluate(self, pt):
        f = self.space.field
        mp = tuple(f.dot(row, pt) for row in self.matrix)
        return f.dot(pt, mp)

    def polar_dual(self, pt):
        """Dual coordinates M.P of the polar line of pt."""
        f = self.space.field
        return tuple(f.dot(row, pt) for row in self.matrix)

    def is_nondegenerate(self):
        return _det3(self.space.field, self.matrix) != 0

    def points(self):
        if self._points is None:
            self._points = [p for p in self.space.points() if self.evaluate(p) == 0]
        return self._points

    def tangent_duals(self):
        """Dual vectors of the q+1 tangent lines, indexed like points()."""
        if self._tangent_duals is None:
            self._tangent_duals = [self.polar_dual(p) for p in self.points()]
        return self._tangent_duals

    def normalized_key(self):
        """Scalar-invariant fingerprint: first nonzero matrix entry scaled to 1."""
        flat = [x for row in self.matrix for x in row]
        return self.space.normalize(flat)

    def __eq__(self, other):
        return (isinstance(other, QuadraticForm) and self.space == other.space
                and self.normalized_key() == other.normalized_key())

    def __hash__(self):
        return hash((self.space.n, self.normalized_key()))

    def __repr__(self):
        return f"QuadraticForm({self.matrix})"


def _monomial_row(f, pt):
    x, y, z = pt
    return (f.mul(x, x), f.mul(y, y), f.mul(z, z),
            f.mul(x, y), f.mul(x, z), f.mul(y, z))


def conic_through_5(space, points):
    """The unique nondegenerate conic through 5 points in general position.

    Raises DegenerateInput when 3 of the points are collinear or the linear
    system does not have a one-dimensional solution space.
    """
    if len(points) != 5:
        raise DegenerateInput(f"need exactly 5 points, got {len(points)}")
    ok, witness = is_arc(space, points)
    if not ok:
        raise DegenerateInput(f"three collinear points: {witness}")
    f = space.field
    rows = [_monomial_row(f, p) for p in points]
    sol = nullspace(f, rows)
    if len(sol) != 1:
        raise DegenerateInput(f"solution space has dimension {len(sol)}")
    coeffs = space_normalize6(space, sol[0])
    form = QuadraticForm.from_coefficients(space, coeffs)
    if not form.is_nondegenerate():
        raise DegenerateInput("five points lie on a degenerate conic")
    return form


def space_normalize6(space, vec):
    f = space.field
    for x in vec:
        if x:
            inv = f.inv(x)
            return tuple(f.mul(inv, y) for y in vec)
    raise DegenerateInput("zero solution vector")


def tangent_line(form, pt):
    """The tangent line of a nondegenerate conic at one of its points."""
    if form.evaluate(pt) != 0:
        raise PointNotOnConic(f"{pt} is not on the conic")
    if not form.is_nondegenerate():
        raise DegenerateInput("tangents require a nondegenerate form")
    dual = form.polar_dual(pt)
    return Subspace(form.space, nullspace(form.space.field, [dual]))


def is_arc(space, points):
    """(True, None) if no three of the points are collinear, else (False, triple)."""
    f = space.field
    for triple in itertools.combinations(points, 3):
        m = (triple[0], triple[1], triple[2])
        if len(m[0]) == 3:
            collinear = _det3(f, m) == 0
        else:
            red, _ = rref(f, m)
            collinear = len(red) <= 2
        if collinear:
            return False, triple
    return True, None


def is_arc_by_directions(space, points):
    """Secant-direction variant of the arc test (per-point duplicate secants)."""
    pts = list(points)
    for i, p in enumerate(pts):
        seen = {}
        for j, x in enumerate(pts):
            if j == i:
                continue
            line = span(space, [p, x]).rows
            if line in seen:
                return False, (p, pts[seen[line]], x)
            seen[line] = j
    return True, None


def complete_q_arc(space, arc):
    """The unique point completing a q-arc of PG(2,q), q odd, to a conic.

    Fits the conic through the first five arc points, checks the whole arc
    lies on it, and returns the one conic point not in the arc.
    """
    q = space.field.q
    arc = [space.normalize(p) for p in arc]
    if len(set(arc)) != q:
        raise NotAnArc(f"expected {q} distinct points, got {len(set(arc))}")
    ok, witness = is_arc(space, arc)
    if not ok:
        raise NotAnArc(f"three collinear points: {witness}", witness)
    form = conic_through_5(space, arc[:5])
    on = set(form.points())
    arcset = set(arc)
    if not arcset <= on or len(on) != q + 1:
        raise CompletionNotUnique(
            f"arc does not extend to a single conic (|conic|={len(on)})")
    extra = on - arcset
    if len(extra) != 1:
        raise CompletionNotUnique(f"{len(extra)} completion candidates")
    return next(iter(extra)), form


def complete_q_arc_by_secants(space, arc):
    """Independent completion oracle: the point lying on no secant of the arc."""
    arc = [space.normalize(p) for p in arc]
    arcset = set(arc)
    on_secant = set(arcset)
    for a, b in itertools.combinations(arc, 2):
        on_secant.update(span(space, [a, b]).points())
    candidates = [p for p in space.points() if p not in on_secant]
    if len(candidates) != 1:
        raise CompletionNotUnique(f"{len(candidates)} secant-free points")
    return candidates[0]


def classify_vs_conic(form, pt):
    """"on", "exterior" (2 tangents through pt) or "interior" (0 tangents)."""
    f = form.space.field
    if form.evaluate(pt) == 0:
        return "on"
    hits = sum(1 for dual in form.tangent_duals() if f.dot(dual, pt) == 0)
    if hits == 2:
        return "exterior"
    if hits == 0:
        return "interior"
    raise DegenerateInput(f"point on {hits} tangents; form is not a conic")


def tangent_counts(form):
    """Map point -> number of tangent lines of the conic through it."""
    f = form.space.field
    counts = {p: 0 for p in form.space.points()}
    for dual in form.tangent_duals():
        for p in Subspace(form.space, nullspace(f, [dual])).points():
            counts[p] += 1
    return counts
