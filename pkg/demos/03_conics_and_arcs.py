"""Conics, tangent lines, arc completion and point classification in PG(2,q).

The running example is the parabola-style conic x^2 = yz over GF(7): its
eight points are (t, t^2, 1) for t in GF(7) plus (0, 1, 0).
"""

from collections import Counter

from pgconics import (Field, ProjectiveSpace, classify_vs_conic, complete_q_arc,
                      complete_q_arc_by_secants, conic_through_5, is_arc,
                      tangent_line)

f7 = Field(7)
plane = ProjectiveSpace(2, f7)
points = [plane.normalize((t, f7.mul(t, t), 1)) for t in range(7)] + [(0, 1, 0)]

form = conic_through_5(plane, points[:5])
print("fitted form coefficients (x2,y2,z2,xy,xz,yz):", form.coefficients())
print("conic points:", len(form.points()), " arc:", is_arc(plane, form.points())[0])

t = tangent_line(form, (0, 0, 1))
print("tangent at (0,0,1):", t.to_text(), "-> the line y = 0")

# drop a point and let both completion algorithms put it back
arc = points[1:]
fitted, _ = complete_q_arc(plane, arc)
filtered = complete_q_arc_by_secants(plane, arc)
print("dropped", points[0], "-> conic fit returns", fitted,
      "; secant filter returns", filtered)

dist = Counter(classify_vs_conic(form, p) for p in plane.points())
print("classification over all 57 points:", dict(dist))
print("expected: on = q+1 = 8, exterior = q(q+1)/2 = 28, interior = q(q-1)/2 = 21")
