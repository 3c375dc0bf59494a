"""Exact arithmetic in GF(p^k) for odd prime powers, plus canonical quadratic extensions.

Elements of GF(p^k) are encoded as integers 0..q-1: the base-p digits of the
code are the coefficients of the element in the polynomial basis, little-endian
(code = c0 + c1*p + ... + c_{k-1}*p^{k-1}).  All arithmetic is table driven, so
it is exact and uniform across prime and prime-power orders.

A quadratic extension GF(q^2) = GF(q)[w], w^2 = s*w + t, encodes x = x0 + x1*w
as the integer x0 + q*x1 where x0, x1 are GF(q) codes.  The embedded copy of
GF(q) is therefore exactly the codes 0..q-1.
"""

from __future__ import annotations

import itertools

import numpy as np


class FieldMismatch(ValueError):
    """Operands belong to different fields."""


class DivisionByZero(ZeroDivisionError):
    """Division or inversion of the zero element."""


def is_prime(n):
    if n < 2:
        return False
    for d in range(2, int(n ** 0.5) + 1):
        if n % d == 0:
            return False
    return True


# ---------------------------------------------------------------------------
# polynomial helpers over GF(p); polynomials are little-endian int lists


def _poly_trim(a):
    while a and a[-1] == 0:
        a.pop()
    return a


def _poly_mul(a, b, p):
    out = [0] * (len(a) + len(b) - 1) if a and b else []
    for i, ai in enumerate(a):
        if ai == 0:
            continue
        for j, bj in enumerate(b):
            out[i + j] = (out[i + j] + ai * bj) % p
    return _poly_trim(out)


def _poly_mod(a, m, p):
    # m monic
    a = list(a)
    dm = len(m) - 1
    while len(a) > dm:
        lead = a[-1]
        if lead:
            shift = len(a) - 1 - dm
            for i, mi in enumerate(m):
                a[shift + i] = (a[shift + i] - lead * mi) % p
        a.pop()
    return _poly_trim(a)


def _poly_divides(d, a, p):
    """True if monic d divides a over GF(p)."""
    return not _poly_mod(a, d, p)


def is_irreducible(modulus, p):
    """Trial-division irreducibility test for a monic polynomial over GF(p)."""
    m = _poly_trim(list(modulus))
    k = len(m) - 1
    if k < 1 or m[-1] != 1:
        return False
    if k == 1:
        return True
    # no monic factor of degree 1..k//2
    for d in range(1, k // 2 + 1):
        for low in itertools.product(range(p), repeat=d):
            cand = list(low) + [1]
            if _poly_divides(cand, m, p):
                return False
    return True


def default_modulus(p, k):
    """Lexicographically least monic irreducible of degree k over GF(p).

    "Least" by the base-p integer encoding of the non-leading coefficients,
    so the choice is deterministic across runs.
    """
    for code in range(p ** k):
        low = []
        c = code
        for _ in range(k):
            low.append(c % p)
            c //= p
        cand = low + [1]
        if is_irreducible(cand, p):
            return tuple(cand)
    raise ValueError(f"no irreducible polynomial of degree {k} over GF({p})")


# ---------------------------------------------------------------------------


class Field:
    """GF(p^k) with dense operation tables; elements are int codes 0..q-1."""

    def __init__(self, p, k=1, modulus=None):
        if not is_prime(p):
            raise ValueError(f"characteristic {p} is not prime")
        if k < 1:
            raise ValueError("extension degree must be >= 1")
        if modulus is None:
            modulus = default_modulus(p, k)
        modulus = tuple(int(c) % p for c in modulus)
        if len(modulus) != k + 1 or modulus[-1] != 1:
            raise ValueError(f"modulus must be monic of degree {k}")
        if not is_irreducible(list(modulus), p):
            raise ValueError(f"modulus {modulus} is reducible over GF({p})")
        self.p = p
        self.k = k
        self.q = p ** k
        self.modulus = modulus
        self.token = f"GF({self.q};{','.join(map(str, modulus))})"
        self._build_poly_tables()
        self._finish_tables()

    @classmethod
    def _quadratic(cls, base, s, t):
        """GF(q^2) over an existing GF(q), w^2 = s*w + t; codes are x0 + q*x1."""
        self = cls.__new__(cls)
        q = base.q
        self.p = base.p
        self.k = 2 * base.k
        self.q = q * q
        self.modulus = None
        self.token = f"{base.token}[w;{s},{t}]"
        add = [[0] * self.q for _ in range(self.q)]
        mul = [[0] * self.q for _ in range(self.q)]
        badd, bmul = base._add, base._mul
        for a in range(self.q):
            a0, a1 = a % q, a // q
            rowa, rowm = add[a], mul[a]
            for b in range(self.q):
                b0, b1 = b % q, b // q
                rowa[b] = badd[a0][b0] + q * badd[a1][b1]
                # (a0+a1w)(b0+b1w), w^2 = sw + t
                cross = bmul[a1][b1]
                c0 = badd[bmul[a0][b0]][bmul[t][cross]]
                c1 = badd[badd[bmul[a0][b1]][bmul[a1][b0]]][bmul[s][cross]]
                rowm[b] = c0 + q * c1
        self._add = add
        self._mul = mul
        self._finish_tables()
        return self

    def _build_poly_tables(self):
        p, k, q = self.p, self.k, self.q

        def decode(c):
            out = []
            for _ in range(k):
                out.append(c % p)
                c //= p
            return _poly_trim(out)

        def encode(poly):
            return sum(ci * p ** i for i, ci in enumerate(poly))

        polys = [decode(c) for c in range(q)]
        self._add = [
            [encode([(x + y) % p for x, y in itertools.zip_longest(pa, pb, fillvalue=0)])
             for pb in polys]
            for pa in polys
        ]
        mod = list(self.modulus)
        self._mul = [
            [encode(_poly_mod(_poly_mul(pa, pb, p), mod, p)) for pb in polys]
            for pa in polys
        ]

    def _finish_tables(self):
        q = self.q
        add, mul = self._add, self._mul
        self._neg = [add[a].index(0) for a in range(q)]
        self._inv = [0] * q
        for a in range(1, q):
            self._inv[a] = mul[a].index(1)
        self._sub = [[add[a][self._neg[b]] for b in range(q)] for a in range(q)]
        dtype = np.int16
        self.add_np = np.array(add, dtype=dtype)
        self.sub_np = np.array(self._sub, dtype=dtype)
        self.mul_np = np.array(mul, dtype=dtype)
        self.neg_np = np.array(self._neg, dtype=dtype)
        self.inv_np = np.array(self._inv, dtype=dtype)

    # -- scalar operations ---------------------------------------------------

    def add(self, a, b):
        return self._add[a][b]

    def sub(self, a, b):
        return self._sub[a][b]

    def mul(self, a, b):
        return self._mul[a][b]

    def neg(self, a):
        return self._neg[a]

    def inv(self, a):
        if a == 0:
            raise DivisionByZero(f"inverse of zero in {self.token}")
        return self._inv[a]

    def div(self, a, b):
        if b == 0:
            raise DivisionByZero(f"division by zero in {self.token}")
        return self._mul[a][self._inv[b]]

    def pow(self, a, e):
        if e < 0:
            a = self.inv(a)
            e = -e
        r = 1
        mul = self._mul
        while e:
            if e & 1:
                r = mul[r][a]
            a = mul[a][a]
            e >>= 1
        return r

    def dot(self, u, v):
        r = 0
        add, mul = self._add, self._mul
        for x, y in zip(u, v):
            r = add[r][mul[x][y]]
        return r

    def elements(self):
        return range(self.q)

    def coeffs(self, a):
        """Coefficient vector of an element over GF(p), little-endian, length k."""
        p = self.p
        out = []
        for _ in range(self.k):
            out.append(a % p)
            a //= p
        return tuple(out)

    def __call__(self, value):
        return FieldElement(self, int(value) % self.q if self.k == 1 else int(value))

    def __eq__(self, other):
        return isinstance(other, Field) and self.token == other.token

    def __hash__(self):
        return hash(self.token)

    def __repr__(self):
        return self.token


class FieldElement:
    """Operator-friendly wrapper around an int-coded field element."""

    __slots__ = ("field", "code")

    def __init__(self, field, code):
        if not 0 <= code < field.q:
            raise ValueError(f"code {code} out of range for {field.token}")
        self.field = field
        self.code = code

    def _coerce(self, other):
        if isinstance(other, FieldElement):
            if other.field != self.field:
                raise FieldMismatch(f"{self.field.token} vs {other.field.token}")
            return other.code
        if isinstance(other, int):
            return other % self.field.q if self.field.k == 1 else other
        return NotImplemented

    def __add__(self, other):
        c = self._coerce(other)
        return FieldElement(self.field, self.field.add(self.code, c))

    __radd__ = __add__

    def __sub__(self, other):
        c = self._coerce(other)
        return FieldElement(self.field, self.field.sub(self.code, c))

    def __rsub__(self, other):
        c = self._coerce(other)
        return FieldElement(self.field, self.field.sub(c, self.code))

    def __mul__(self, other):
        c = self._coerce(other)
        return FieldElement(self.field, self.field.mul(self.code, c))

    __rmul__ = __mul__

    def __truediv__(self, other):
        c = self._coerce(other)
        return FieldElement(self.field, self.field.div(self.code, c))

    def __rtruediv__(self, other):
        c = self._coerce(other)
        return FieldElement(self.field, self.field.div(c, self.code))

    def __neg__(self):
        return FieldElement(self.field, self.field.neg(self.code))

    def __pow__(self, e):
        return FieldElement(self.field, self.field.pow(self.code, e))

    def inverse(self):
        return FieldElement(self.field, self.field.inv(self.code))

    def __eq__(self, other):
        if isinstance(other, FieldElement):
            return self.field == other.field and self.code == other.code
        if isinstance(other, int):
            return self.code == (other % self.field.q if self.field.k == 1 else other)
        return NotImplemented

    def __hash__(self):
        return hash((self.field.token, self.code))

    def __int__(self):
        return self.code

    def __repr__(self):
        return f"{self.field.token}:{self.code}"


def field_arith(a, b, op):
    """Dispatch a named field operation on wrapped elements.

    op is one of add, sub, mul, div, neg, inv, pow; for neg/inv the second
    operand is ignored, for pow it is a plain integer exponent.
    """
    if not isinstance(a, FieldElement):
        raise TypeError("field_arith expects FieldElement operands")
    f = a.field
    if op in ("neg",):
        return -a
    if op in ("inv",):
        return a.inverse()
    if op == "pow":
        return a ** int(b)
    if isinstance(b, FieldElement) and b.field != f:
        raise FieldMismatch(f"{f.token} vs {b.field.token}")
    table = {"add": a.__add__, "sub": a.__sub__, "mul": a.__mul__, "div": a.__truediv__}
    try:
        fn = table[op]
    except KeyError:
        raise ValueError(f"unknown operation {op!r}") from None
    return fn(b)


def quadratic_character(field, a):
    """Classify a as "square", "nonsquare" or "zero" in a field of odd order."""
    if field.q % 2 == 0:
        raise ValueError("quadratic character requires odd order")
    a = int(a)
    if a == 0:
        return "zero"
    return "square" if field.pow(a, (field.q - 1) // 2) == 1 else "nonsquare"


class QuadExtension:
    """GF(q^2) = GF(q)[w] with w^2 = s*w + t for the canonical irreducible (s,t).

    (s, t) is the first pair, in ascending s*q + t order, for which
    X^2 - s*X - t has no root in GF(q).  embed/compose/decompose convert
    between GF(q) codes and GF(q^2) codes; embed(a) == a by construction.
    """

    def __init__(self, base, s=None, t=None):
        self.base = base
        q = base.q
        if s is None or t is None:
            s, t = self._canonical_pair(base)
        if any(base.sub(base.mul(x, x), base.add(base.mul(s, x), t)) == 0
               for x in range(q)):
            raise ValueError(f"w^2 = {s}w + {t} is reducible over {base.token}")
        self.s = s
        self.t = t
        self.ext = Field._quadratic(base, s, t)
        self.omega = q  # code of (0, 1)

    @staticmethod
    def _canonical_pair(base):
        q = base.q
        for n in range(q * q):
            s, t = divmod(n, q)
            if all(base.sub(base.mul(x, x), base.add(base.mul(s, x), t)) != 0
                   for x in range(q)):
                return s, t
        raise ValueError(f"no irreducible quadratic over {base.token}")

    def embed(self, a):
        """GF(q) code -> GF(q^2) code."""
        return int(a)

    def decompose(self, x):
        """GF(q^2) code -> (x0, x1) with x = x0 + x1*w."""
        return x % self.base.q, x // self.base.q

    def compose(self, x0, x1):
        return x0 + self.base.q * x1

    def frobenius(self, x):
        return self.ext.pow(x, self.base.q)

    def is_embedded(self, x):
        return x < self.base.q

    def __repr__(self):
        return f"QuadExtension({self.base.token}; w^2={self.s}w+{self.t})"


def verify_field_axioms(field):
    """Exhaustive table check of the field axioms; returns a dict of booleans.

    Meant for small q (the tables are q x q); associativity and
    distributivity are checked over all q^3 triples via numpy broadcasting.
    """
    q = field.q
    add, mul = field.add_np, field.mul_np
    checks = {}
    checks["add_commutative"] = bool((add == add.T).all())
    checks["mul_commutative"] = bool((mul == mul.T).all())
    checks["add_associative"] = bool((add[add, :] == add[:, add]).all())
    checks["mul_associative"] = bool((mul[mul, :] == mul[:, mul]).all())
    checks["distributive"] = bool(
        (mul[:, add] == add[mul[:, :, None], mul[:, None, :]]).all()
    )
    checks["add_identity"] = bool((add[0] == np.arange(q)).all())
    checks["mul_identity"] = bool((mul[1] == np.arange(q)).all())
    checks["add_inverse"] = all((add[a] == 0).sum() == 1 for a in range(q))
    checks["mul_inverse"] = all((mul[a] == 1).sum() == 1 for a in range(1, q))
    checks["no_zero_divisors"] = bool((mul[1:, 1:] != 0).all())
    return checks
