"""Points, subspaces, incidence and enumeration for PG(n,q), n <= 5.

Points are normalized homogeneous tuples (first nonzero coordinate 1).
Subspaces carry a reduced-row-echelon basis over the field, so equality and
hashing are structural.  Enumeration is deterministic: pivot-column patterns
in lexicographic order, free entries in ascending code order.
"""

from __future__ import annotations

import itertools

import numpy as np


class AmbientMismatch(ValueError):
    """Operands live in different ambient projective spaces."""


def gaussian_binomial(n, k, q):
    """Number of k-dimensional subspaces of an n-dimensional GF(q) vector space."""
    if k < 0 or k > n:
        return 0
    num = den = 1
    for i in range(k):
        num *= q ** (n - i) - 1
        den *= q ** (i + 1) - 1
    return num // den


# ---------------------------------------------------------------------------
# row reduction over a table-driven field


def rref(field, rows):
    """Reduced row echelon form; returns (rows_tuple, pivot_columns)."""
    m = [list(r) for r in rows]
    if not m:
        return (), ()
    w = len(m[0])
    pivots = []
    r = 0
    for c in range(w):
        pr = None
        for i in range(r, len(m)):
            if m[i][c]:
                pr = i
                break
        if pr is None:
            continue
        m[r], m[pr] = m[pr], m[r]
        inv = field.inv(m[r][c])
        if inv != 1:
            m[r] = [field.mul(inv, x) for x in m[r]]
        for i in range(len(m)):
            if i != r and m[i][c]:
                f = m[i][c]
                mi, mr = m[i], m[r]
                m[i] = [field.sub(mi[j], field.mul(f, mr[j])) for j in range(w)]
        pivots.append(c)
        r += 1
        if r == len(m):
            break
    return tuple(tuple(row) for row in m[:r]), tuple(pivots)


def nullspace(field, rows):
    """Canonical basis of {x : rows . x = 0}, as RREF rows."""
    red, pivots = rref(field, rows)
    w = len(rows[0])
    free = [c for c in range(w) if c not in pivots]
    basis = []
    for f in free:
        v = [0] * w
        v[f] = 1
        for i, c in enumerate(pivots):
            v[c] = field.neg(red[i][f])
        basis.append(v)
    red2, _ = rref(field, basis) if basis else ((), ())
    return red2


def matrix_inverse(field, rows):
    """Inverse of a square matrix over the field, or None if singular."""
    n = len(rows)
    aug = [list(r) + [1 if i == j else 0 for j in range(n)] for i, r in enumerate(rows)]
    red, pivots = rref(field, aug)
    if pivots != tuple(range(n)):
        return None
    return tuple(tuple(row[n:]) for row in red)


def mat_mul(field, a, b):
    bt = list(zip(*b))
    return tuple(tuple(field.dot(ra, cb) for cb in bt) for ra in a)


def mat_vec(field, m, v):
    return tuple(field.dot(row, v) for row in m)


def vec_mat(field, v, m):
    return tuple(field.dot(v, col) for col in zip(*m))


# ---------------------------------------------------------------------------


class ProjectiveSpace:
    """PG(n, field); point list and point-id index are built lazily."""

    def __init__(self, n, field):
        self.n = n
        self.field = field
        self._points = None
        self._index = None

    @property
    def npoints(self):
        q = self.field.q
        return (q ** (self.n + 1) - 1) // (q - 1)

    def normalize(self, vec):
        """Canonical representative: first nonzero coordinate scaled to 1."""
        for i, x in enumerate(vec):
            if x:
                if x == 1:
                    return tuple(vec)
                inv = self.field.inv(x)
                mul = self.field._mul[inv]
                return tuple(vec[:i]) + (1,) + tuple(mul[y] for y in vec[i + 1:])
        raise ValueError("zero vector is not a projective point")

    def points(self):
        if self._points is None:
            q = self.field.q
            pts = []
            for lead in range(self.n + 1):
                tail = self.n - lead
                for rest in itertools.product(range(q), repeat=tail):
                    pts.append((0,) * lead + (1,) + rest)
            self._points = pts
        return self._points

    def point_index(self):
        if self._index is None:
            self._index = {p: i for i, p in enumerate(self.points())}
        return self._index

    def point_id(self, pt):
        return self.point_index()[pt]

    def subspaces(self, d):
        """All d-dimensional projective subspaces, each exactly once.

        Deterministic order: pivot patterns lexicographically, then free
        entries in ascending code order.
        """
        if d < 0 or d > self.n:
            return
        k = d + 1
        w = self.n + 1
        q = self.field.q
        for pivots in itertools.combinations(range(w), k):
            pivset = set(pivots)
            # free slots: (row, col) with col > pivot of row, col not a pivot
            slots = [(i, c) for i, p in enumerate(pivots)
                     for c in range(p + 1, w) if c not in pivset]
            base = [[0] * w for _ in range(k)]
            for i, p in enumerate(pivots):
                base[i][p] = 1
            for values in itertools.product(range(q), repeat=len(slots)):
                rows = [row[:] for row in base]
                for (i, c), v in zip(slots, values):
                    rows[i][c] = v
                yield Subspace(self, tuple(tuple(r) for r in rows))

    def lines(self):
        return self.subspaces(1)

    def hyperplane(self, coord):
        """The coordinate hyperplane {x_coord = 0}."""
        rows = [tuple(1 if j == c else 0 for j in range(self.n + 1))
                for c in range(self.n + 1) if c != coord]
        return Subspace(self, tuple(rows))

    def __eq__(self, other):
        return (isinstance(other, ProjectiveSpace) and self.n == other.n
                and self.field == other.field)

    def __hash__(self):
        return hash((self.n, self.field))

    def __repr__(self):
        return f"PG({self.n},{self.field.q})"


class Subspace:
    """Projective subspace given by its canonical RREF basis rows."""

    __slots__ = ("space", "rows")

    def __init__(self, space, rows):
        self.space = space
        self.rows = rows

    @classmethod
    def from_vectors(cls, space, vectors):
        red, _ = rref(space.field, vectors)
        if not red:
            raise ValueError("no nonzero vectors given")
        return cls(space, red)

    @property
    def dim(self):
        return len(self.rows) - 1

    def contains(self, pt):
        f = self.space.field
        v = list(pt)
        for row in self.rows:
            c = next(i for i, x in enumerate(row) if x)
            if v[c]:
                coef = v[c]
                v = [f.sub(v[j], f.mul(coef, row[j])) for j in range(len(v))]
        return not any(v)

    def is_subspace_of(self, other):
        return all(other.contains(r) for r in self.rows)

    def points(self):
        """All points of the subspace (q^(d+1)-1)/(q-1) of them), normalized."""
        f = self.space.field
        q = f.q
        k = len(self.rows)
        rows = self.rows
        out = []
        add, mul = f._add, f._mul
        for lead in range(k):
            for rest in itertools.product(range(q), repeat=k - lead - 1):
                v = list(rows[lead])
                for j, c in enumerate(rest):
                    if c:
                        row = rows[lead + 1 + j]
                        mc = mul[c]
                        v = [add[x][mc[y]] for x, y in zip(v, row)]
                out.append(self.space.normalize(v))
        return out

    def dual(self):
        """RREF basis of the annihilator {u : u . x = 0 for x in subspace}."""
        return nullspace(self.space.field, self.rows)

    def meet(self, other):
        if self.space != other.space:
            raise AmbientMismatch(f"{self.space} vs {other.space}")
        stacked = list(self.dual()) + list(other.dual())
        sol = nullspace(self.space.field, stacked)
        if not sol:
            return None
        return Subspace(self.space, sol)

    def to_text(self):
        return ";".join(",".join(str(x) for x in row) for row in self.rows)

    @classmethod
    def from_text(cls, space, text):
        rows = tuple(tuple(int(x) for x in part.split(","))
                     for part in text.strip().split(";"))
        red, _ = rref(space.field, rows)
        if red != rows:
            raise ValueError(f"rows are not in canonical form: {text!r}")
        return cls(space, rows)

    def __eq__(self, other):
        return (isinstance(other, Subspace) and self.space == other.space
                and self.rows == other.rows)

    def __hash__(self):
        return hash((self.space.n, self.rows))

    def __lt__(self, other):
        return self.rows < other.rows

    def __repr__(self):
        return f"Subspace[{self.space}]({self.to_text()})"


def span(space, parts):
    """Smallest subspace containing the given points and/or subspaces."""
    if not parts:
        raise ValueError("span of nothing")
    vectors = []
    for part in parts:
        if isinstance(part, Subspace):
            if part.space != space:
                raise AmbientMismatch(f"{part.space} vs {space}")
            vectors.extend(part.rows)
        else:
            if len(part) != space.n + 1:
                raise AmbientMismatch(f"point {part} not in {space}")
            vectors.append(tuple(part))
    return Subspace.from_vectors(space, vectors)


def meet(a, b):
    """Intersection of two subspaces; None when empty."""
    return a.meet(b)


def enumerate_subspaces(space, d):
    """Stream every d-dimensional subspace of the space, each exactly once."""
    return space.subspaces(d)


def affine_filter(s, hyperplane):
    """Classify s as "contained" in the hyperplane or "meets_in_lower"."""
    if s.space != hyperplane.space:
        raise AmbientMismatch(f"{s.space} vs {hyperplane.space}")
    if hyperplane.dim != s.space.n - 1:
        raise ValueError("second argument must be a hyperplane")
    return "contained" if s.is_subspace_of(hyperplane) else "meets_in_lower"


class IncidenceIndex:
    """Materialized incidence tables between points and d-subspaces.

    Bitmask per subspace of incident point ids, and the per-point list of
    subspace ids.  Built single-threaded, then shared read-only.
    """

    def __init__(self, space, d=1):
        self.space = space
        self.d = d
        self.subspaces = list(space.subspaces(d))
        self.sub_id = {s.rows: i for i, s in enumerate(self.subspaces)}
        index = space.point_index()
        self.masks = []
        self.point_subs = [[] for _ in range(space.npoints)]
        for sid, s in enumerate(self.subspaces):
            mask = 0
            for p in s.points():
                pid = index[p]
                mask |= 1 << pid
                self.point_subs[pid].append(sid)
            self.masks.append(mask)

    def is_incident(self, sid, pid):
        return bool(self.masks[sid] >> pid & 1)


# ---------------------------------------------------------------------------
# vectorized helpers for the enumeration-heavy pipeline


def points_array(pts):
    return np.array(pts, dtype=np.int16)


def reduce_rows_np(field, basis_rows, arr):
    """Eliminate the RREF basis rows from every row of arr (residues mod span)."""
    out = arr
    for row in basis_rows:
        c = next(i for i, x in enumerate(row) if x)
        coef = out[:, c]
        out = field.sub_np[out, field.mul_np[coef[:, None],
                                             np.asarray(row, dtype=np.int16)[None, :]]]
    return out


def normalize_rows_np(field, arr):
    """Scale each nonzero row so its first nonzero entry is 1.

    Returns (normalized array, boolean mask of zero rows).
    """
    nz = arr != 0
    zero_rows = ~nz.any(axis=1)
    first = np.where(zero_rows, 0, nz.argmax(axis=1))
    lead = arr[np.arange(len(arr)), first]
    lead = np.where(lead == 0, 1, lead)
    scaled = field.mul_np[field.inv_np[lead][:, None], arr]
    return scaled, zero_rows


def group_rows(arr):
    """Group identical rows; returns (unique_rows, inverse, counts)."""
    a = np.ascontiguousarray(arr)
    view = a.view([("", a.dtype)] * a.shape[1]).ravel()
    uniq, inverse, counts = np.unique(view, return_inverse=True, return_counts=True)
    return uniq.view(a.dtype).reshape(-1, a.shape[1]), inverse, counts


class HeavyPlaneScan:
    """Result of scan_heavy_planes: the planes, plus any anomalies found."""

    __slots__ = ("planes", "collinear_triple", "pair_conflict", "uncovered_pairs")

    def __init__(self, planes, collinear_triple, pair_conflict, uncovered_pairs):
        self.planes = planes
        self.collinear_triple = collinear_triple
        self.pair_conflict = pair_conflict
        self.uncovered_pairs = uncovered_pairs


def scan_heavy_planes(space, pts, threshold):
    """Planes meeting a point set in >= threshold points, by pair-seeded spans.

    For each point pair not yet known to lie in a found plane, all remaining
    points are reduced modulo the pair's line; equal canonical residues mean
    a common plane through the pair.  Avoids enumerating every plane of the
    ambient space.

    Returns a HeavyPlaneScan with:
      planes            list of (Subspace, member index tuple), dedup'd
      collinear_triple  indices of three collinear input points, or None
      pair_conflict     (i, j, plane_a, plane_b) if a pair lies in two found
                        planes, else None
      uncovered_pairs   count of pairs lying in no found plane
    """
    field = space.field
    n = len(pts)
    arr = points_array(pts)
    pair_plane = {}
    planes = []
    collinear = None
    conflict = None
    for i in range(n):
        for j in range(i + 1, n):
            if (i, j) in pair_plane:
                continue
            basis, _ = rref(field, (pts[i], pts[j]))
            res = reduce_rows_np(field, basis, arr)
            norm, zero = normalize_rows_np(field, res)
            for k in np.flatnonzero(zero):
                if k != i and k != j:
                    return HeavyPlaneScan(planes, (i, j, int(k)), None, None)
            _, inverse, counts = group_rows(norm)
            heavy = np.flatnonzero(counts >= threshold - 2)
            for g in heavy:
                members = [int(k) for k in np.flatnonzero(inverse == g)
                           if k != i and k != j]
                if len(members) < threshold - 2:
                    continue
                rows, _ = rref(field, list(basis) + [tuple(int(x) for x in norm[members[0]])])
                plane = Subspace(space, rows)
                pid = len(planes)
                mem = tuple(sorted(members + [i, j]))
                for a, b in itertools.combinations(mem, 2):
                    prev = pair_plane.get((a, b))
                    if prev is not None and planes[prev][0] != plane:
                        return HeavyPlaneScan(planes, None, (a, b, prev, pid), None)
                    pair_plane[(a, b)] = pid
                planes.append((plane, mem))
    uncovered = n * (n - 1) // 2 - len(pair_plane)
    return HeavyPlaneScan(planes, collinear, conflict, uncovered)
