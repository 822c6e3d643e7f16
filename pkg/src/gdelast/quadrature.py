"""Reference quadrature rules.

Triangles use the 6-point degree-4 rule on the unit reference triangle
``(0,0), (1,0), (0,1)``; quadrilaterals use tensor Gauss rules on ``[-1,1]^2``;
edges use Gauss rules on ``[0,1]``.
"""

from functools import lru_cache

import numpy as np
from numpy.polynomial.legendre import leggauss


@lru_cache(maxsize=None)
def triangle_rule():
    a, b = 0.445948490915965, 0.091576213509771
    wa, wb = 0.223381589678011, 0.109951743655322
    pts = np.array(
        [[a, a], [1 - 2 * a, a], [a, 1 - 2 * a], [b, b], [1 - 2 * b, b], [b, 1 - 2 * b]]
    )
    w = 0.5 * np.array([wa, wa, wa, wb, wb, wb])
    return pts, w


@lru_cache(maxsize=None)
def square_rule(m: int = 3):
    x, w = leggauss(m)
    X, Y = np.meshgrid(x, x, indexing="ij")
    return np.column_stack([X.ravel(), Y.ravel()]), np.outer(w, w).ravel()


@lru_cache(maxsize=None)
def line_rule(m: int = 3):
    x, w = leggauss(m)
    return 0.5 * (x + 1.0), 0.5 * w


def bilinear_shape(xi: np.ndarray):
    """Q1 shape functions and reference gradients at points ``xi`` (shape ``(n, 2)``).

    Corner order is counterclockwise from ``(-1,-1)``.
    """
    s = np.array([-1.0, 1.0, 1.0, -1.0])
    t = np.array([-1.0, -1.0, 1.0, 1.0])
    x, y = xi[:, :1], xi[:, 1:]
    N = 0.25 * (1 + s * x) * (1 + t * y)
    dN = np.stack([0.25 * s * (1 + t * y), 0.25 * t * (1 + s * x)], axis=-1)
    return N, dN


def map_quadrilateral(corners: np.ndarray, m: int = 3):
    """Gauss points/weights of the bilinear image of ``[-1,1]^2`` on ``corners`` (4x2)."""
    xi, w = square_rule(m)
    N, dN = bilinear_shape(xi)
    pts = N @ corners
    J = np.einsum("qki,kj->qji", dN, corners)
    det = J[:, 0, 0] * J[:, 1, 1] - J[:, 0, 1] * J[:, 1, 0]
    return pts, w * det


@lru_cache(maxsize=None)
def triangle_fragment_rule(m: int = 3):
    """Quadrature on the three vertex fragments of the reference triangle.

    Returns ``(points, weights, owner)`` where ``owner`` is the local vertex.
    """
    v = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
    c = v.mean(axis=0)
    pts, ws, own = [], [], []
    for i in range(3):
        corners = np.array([v[i], 0.5 * (v[i] + v[(i + 1) % 3]), c, 0.5 * (v[i] + v[(i - 1) % 3])])
        p, w = map_quadrilateral(corners, m)
        pts.append(p)
        ws.append(w)
        own.append(np.full(len(w), i))
    return np.vstack(pts), np.concatenate(ws), np.concatenate(own)


@lru_cache(maxsize=None)
def square_fragment_rule(m: int = 3):
    """Quadrature on the four corner sub-squares of ``[-1,1]^2``."""
    corners = np.array([[-1.0, -1.0], [1.0, -1.0], [1.0, 1.0], [-1.0, 1.0]])
    xi, w = square_rule(m)
    pts, ws, own = [], [], []
    for i, c in enumerate(corners):
        pts.append(0.5 * (xi + c))
        ws.append(0.25 * w)
        own.append(np.full(len(w), i))
    return np.vstack(pts), np.concatenate(ws), np.concatenate(own)
