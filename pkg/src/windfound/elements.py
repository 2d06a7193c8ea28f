"""Element kernels: 8-node isoparametric bricks and mapped infinite elements.

All routines are vectorized over elements; coordinates arrive as
(n_elem, n_node, 3) arrays.
"""
from __future__ import annotations

import numpy as np

# Natural coordinates of the hex8 nodes, bottom face first, counter-clockwise.
HEX_NODES = np.array(
    [
        [-1, -1, -1], [1, -1, -1], [1, 1, -1], [-1, 1, -1],
        [-1, -1, 1], [1, -1, 1], [1, 1, 1], [-1, 1, 1],
    ],
    dtype=float,
)
QUAD_NODES = HEX_NODES[:4, :2]

_G = 1.0 / np.sqrt(3.0)
HEX_GAUSS = np.array([[a * _G, b * _G, c * _G] for c in (-1, 1) for b in (-1, 1) for a in (-1, 1)])
HEX_WEIGHTS = np.ones(8)


class ElementGeometryError(ValueError):
    """Non-positive Jacobian at an integration point."""

    def __init__(self, element: int, detj: float):
        super().__init__(f"element {element} has non-positive Jacobian {detj:.3e}")
        self.element = element


def hex_shape(xi: np.ndarray) -> np.ndarray:
    """Shape functions at natural points (..., 3) -> (..., 8)."""
    xi = np.asarray(xi, dtype=float)
    return 0.125 * np.prod(1.0 + xi[..., None, :] * HEX_NODES, axis=-1)


def hex_shape_grad(xi: np.ndarray) -> np.ndarray:
    """Natural derivatives (..., 8, 3)."""
    xi = np.asarray(xi, dtype=float)
    t = 1.0 + xi[..., None, :] * HEX_NODES
    g = np.empty(xi.shape[:-1] + (8, 3))
    g[..., 0] = HEX_NODES[:, 0] * t[..., 1] * t[..., 2]
    g[..., 1] = HEX_NODES[:, 1] * t[..., 0] * t[..., 2]
    g[..., 2] = HEX_NODES[:, 2] * t[..., 0] * t[..., 1]
    return 0.125 * g


def quad_shape(xi: np.ndarray) -> np.ndarray:
    xi = np.asarray(xi, dtype=float)
    return 0.25 * np.prod(1.0 + xi[..., None, :] * QUAD_NODES, axis=-1)


def quad_shape_grad(xi: np.ndarray) -> np.ndarray:
    xi = np.asarray(xi, dtype=float)
    t = 1.0 + xi[..., None, :] * QUAD_NODES
    g = np.empty(xi.shape[:-1] + (4, 2))
    g[..., 0] = QUAD_NODES[:, 0] * t[..., 1]
    g[..., 1] = QUAD_NODES[:, 1] * t[..., 0]
    return 0.25 * g


def strain_matrix(dndx: np.ndarray) -> np.ndarray:
    """Build B (..., 6, 3*nn) from physical gradients (..., nn, 3)."""
    nn = dndx.shape[-2]
    B = np.zeros(dndx.shape[:-2] + (6, 3 * nn))
    dx, dy, dz = dndx[..., 0], dndx[..., 1], dndx[..., 2]
    B[..., 0, 0::3] = dx
    B[..., 1, 1::3] = dy
    B[..., 2, 2::3] = dz
    B[..., 3, 0::3] = dy
    B[..., 3, 1::3] = dx
    B[..., 4, 1::3] = dz
    B[..., 4, 2::3] = dy
    B[..., 5, 0::3] = dz
    B[..., 5, 2::3] = dx
    return B


def jacobians(X: np.ndarray, dN: np.ndarray):
    """Jacobian, determinant and physical gradients.

    Args:
        X: (ne, nn, 3) nodal coordinates.
        dN: (ng, nn, 3) natural gradients at the integration points.
    """
    J = np.einsum("gak,eai->egki", dN, X)
    detJ = np.linalg.det(J)
    dndx = np.einsum("egik,gak->egai", np.linalg.inv(J), dN)
    return J, detJ, dndx


def hex_kinematics(X: np.ndarray, bbar: bool = False, points: np.ndarray = HEX_GAUSS,
                   weights: np.ndarray = HEX_WEIGHTS, first_id: int = 0):
    """Strain matrices and integration weights for hex8 elements.

    With ``bbar`` the volumetric part of B is replaced by its element average
    (mean dilatation), which removes volumetric locking under isochoric flow.

    Returns:
        B (ne, ng, 6, 24) and wdet (ne, ng).
    """
    dN = hex_shape_grad(points)
    _, detJ, dndx = jacobians(X, dN)
    if np.any(detJ <= 0):
        e, g = np.unravel_index(np.argmin(detJ), detJ.shape)
        raise ElementGeometryError(first_id + int(e), float(detJ[e, g]))
    wdet = detJ * weights
    B = strain_matrix(dndx)
    if bbar:
        vol = wdet.sum(axis=1)
        mean = np.einsum("eg,egai->eai", wdet, dndx) / vol[:, None, None]
        diff = (mean[:, None] - dndx) / 3.0  # (ne, ng, 8, 3)
        corr = diff.reshape(diff.shape[0], diff.shape[1], 24)
        B[:, :, :3, :] += corr[:, :, None, :]
    return B, wdet


def infinite_mapping(zeta: np.ndarray):
    """Mapping functions for the decay direction and their derivatives.

    The inner node sits at zeta=-1, the geometric node at zeta=0 (twice the
    pole distance), infinity at zeta=+1.
    """
    zeta = np.asarray(zeta, dtype=float)
    m0 = -2.0 * zeta / (1.0 - zeta)
    m1 = (1.0 + zeta) / (1.0 - zeta)
    dm0 = -2.0 / (1.0 - zeta) ** 2
    dm1 = 2.0 / (1.0 - zeta) ** 2
    return m0, m1, dm0, dm1


def infinite_rule(n_face: int = 2, n_decay: int = 3):
    g, w = np.polynomial.legendre.leggauss(n_face)
    gz, wz = np.polynomial.legendre.leggauss(n_decay)
    pts = np.array([[a, b, c] for c in gz for b in g for a in g])
    wts = np.array([wa * wb * wc for wc in wz for wb in w for wa in w])
    return pts, wts


def infinite_kinematics(X: np.ndarray, first_id: int = 0, rule=None):
    """Strain matrices for mapped infinite elements.

    Args:
        X: (ne, 8, 3) coordinates; nodes 0-3 carry displacement on the inner
            face, nodes 4-7 are the geometric nodes on the rays from the pole.

    Returns:
        B (ne, ng, 6, 12) acting on the 4 inner-face nodes, and wdet (ne, ng).
    """
    pts, wts = rule if rule is not None else infinite_rule()
    Nq = quad_shape(pts[:, :2])  # (ng, 4)
    dNq = quad_shape_grad(pts[:, :2])  # (ng, 4, 2)
    zeta = pts[:, 2]
    m0, m1, dm0, dm1 = infinite_mapping(zeta)
    inner, outer = X[:, :4], X[:, 4:]
    # geometry: x = sum_a Nq_a (m0 x_a + m1 x_{a+4})
    # dx/dxi_k for k in (xi, eta): dNq_a/dk (m0 x_a + m1 x_a+4)
    # dx/dzeta: Nq_a (dm0 x_a + dm1 x_a+4)
    P = m0[None, :, None, None] * inner[:, None] + m1[None, :, None, None] * outer[:, None]
    dP = dm0[None, :, None, None] * inner[:, None] + dm1[None, :, None, None] * outer[:, None]
    J = np.empty((X.shape[0], pts.shape[0], 3, 3))
    J[:, :, 0, :] = np.einsum("ga,egai->egi", dNq[:, :, 0], P)
    J[:, :, 1, :] = np.einsum("ga,egai->egi", dNq[:, :, 1], P)
    J[:, :, 2, :] = np.einsum("ga,egai->egi", Nq, dP)
    detJ = np.linalg.det(J)
    if np.any(detJ <= 0):
        e, g = np.unravel_index(np.argmin(detJ), detJ.shape)
        raise ElementGeometryError(first_id + int(e), float(detJ[e, g]))
    # displacement interpolation: N_a = Nq_a * (1 - zeta) / 2
    decay = 0.5 * (1.0 - zeta)
    dNu = np.empty((pts.shape[0], 4, 3))
    dNu[:, :, 0] = dNq[:, :, 0] * decay[:, None]
    dNu[:, :, 1] = dNq[:, :, 1] * decay[:, None]
    dNu[:, :, 2] = -0.5 * Nq
    dndx = np.einsum("egik,gak->egai", np.linalg.inv(J), dNu)
    return strain_matrix(dndx), detJ * wts


def inverse_map(X: np.ndarray, point: np.ndarray, tol: float = 1e-12, max_iter: int = 50):
    """Natural coordinates of a physical point inside one hex element."""
    xi = np.zeros(3)
    for _ in range(max_iter):
        N = hex_shape(xi)
        r = point - N @ X
        J = hex_shape_grad(xi).T @ X  # (3, 3) rows: d x / d xi_k
        step = np.linalg.solve(J.T, r)
        xi = xi + step
        if np.linalg.norm(step) < tol:
            break
    return xi


def quad_face_integrals(XY: np.ndarray) -> np.ndarray:
    """Integrals of bilinear shape functions over planar quads (nq, 4, 2)."""
    g = np.array([[-_G, -_G], [_G, -_G], [_G, _G], [-_G, _G]])
    N = quad_shape(g)
    dN = quad_shape_grad(g)
    J = np.einsum("gak,eai->egki", dN, XY)
    detJ = np.linalg.det(J)
    return np.einsum("eg,ga->ea", detJ, N)
