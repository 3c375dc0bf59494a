"""Points, subspaces, span/meet and enumeration in PG(n,q).

Counts are compared against Gaussian binomial coefficients, and the span/meet
pair is shown to satisfy the modular dimension law.
"""

from pgconics import Field, ProjectiveSpace, gaussian_binomial, meet, span

f7 = Field(7)
pg4 = ProjectiveSpace(4, f7)
pg3 = ProjectiveSpace(3, f7)

print("points of PG(4,7):", pg4.npoints)
print("lines of PG(3,7): ", sum(1 for _ in pg3.lines()),
      " (Gaussian binomial:", gaussian_binomial(4, 2, 7), ")")

plane = span(pg4, [(1, 0, 0, 0, 0), (0, 1, 0, 0, 0), (0, 0, 1, 0, 0)])
other = span(pg4, [(1, 0, 0, 0, 0), (0, 1, 0, 0, 0), (0, 0, 0, 1, 0)])
common = meet(plane, other)
total = span(pg4, [plane, other])
print("\ntwo planes of PG(4,7):")
print("  meet dimension:", common.dim, " span dimension:", total.dim)
print("  modular law: 2 + 2 ==", total.dim, "+", common.dim)

hyper = pg4.hyperplane(4)
print("\nhyperplane x4 = 0 has", len(hyper.points()), "points")
print("subspace text form of the meet:", common.to_text())

# deterministic enumeration: the first three lines of PG(3,7)
for i, line in zip(range(3), pg3.lines()):
    print("line", i, "->", line.to_text())
