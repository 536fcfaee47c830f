"""Shared test utilities: brute-force oracles kept independent of the solvers."""

import numpy as np


def brute_force_distances(s, queries, box, step=1e-3, chunk_rows=60):
    """Grid-search distances from each query to the set.

    Scans an axis-aligned grid of the given step over ``box`` in row chunks,
    keeps grid points satisfying every constraint, and returns the minimum
    Euclidean distance per query.  Deliberately ignorant of projections.
    """
    (xlo, xhi), (ylo, yhi) = box
    xs = np.arange(xlo, xhi + 0.5 * step, step)
    ys = np.arange(ylo, yhi + 0.5 * step, step)
    qs = np.asarray(queries, dtype=float)
    best = np.full(len(qs), np.inf)
    for i0 in range(0, len(xs), chunk_rows):
        xc = xs[i0 : i0 + chunk_rows]
        X, Y = np.meshgrid(xc, ys, indexing="ij")
        pts = np.column_stack([X.ravel(), Y.ravel()])
        mask = np.ones(len(pts), dtype=bool)
        for g in s.constraints:
            mask &= g.evaluate_many(pts) <= 0.0
        feas = pts[mask]
        if len(feas) == 0:
            continue
        for qi, q in enumerate(qs):
            d2 = (feas[:, 0] - q[0]) ** 2 + (feas[:, 1] - q[1]) ** 2
            m = float(np.sqrt(d2.min()))
            if m < best[qi]:
                best[qi] = m
    return best


def poly_multiply(p, q):
    """Exponent-map convolution product, independent of the library's algebra."""
    from cycproj.poly import Polynomial

    out = {}
    for mp in p.terms:
        for mq in q.terms:
            e = tuple(a + b for a, b in zip(mp.exponents, mq.exponents))
            out[e] = out.get(e, 0.0) + mp.coefficient * mq.coefficient
    return Polynomial(p.dimension, out)
