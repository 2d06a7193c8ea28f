import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from windfound.elements import (
    HEX_NODES,
    ElementGeometryError,
    hex_kinematics,
    hex_shape,
    infinite_kinematics,
    inverse_map,
    quad_face_integrals,
)
from windfound.fem import FEModel
from windfound.materials import ElasticMaterial, elastic_stiffness, table1_materials
from windfound.mesh import GeometryParams, generate_half_model

MAT = ElasticMaterial(E=1e7, nu=0.3, rho=1.0)
D = elastic_stiffness(MAT)


def unit_hex(scale=1.0, shift=(0.0, 0.0, 0.0)):
    return (0.5 * (HEX_NODES + 1.0)) * scale + np.asarray(shift)


def patch_mesh(n=2, jitter=0.15, seed=0):
    """n^3 bricks on the unit cube with interior nodes moved at random."""
    rng = np.random.default_rng(seed)
    g = np.linspace(0.0, 1.0, n + 1)
    X = np.array([[x, y, z] for z in g for y in g for x in g])
    interior = np.all((X > 0) & (X < 1), axis=1)
    X[interior] += rng.uniform(-jitter, jitter, size=(interior.sum(), 3)) / n
    idx = lambda i, j, k: i + (n + 1) * (j + (n + 1) * k)  # noqa: E731
    conn = []
    for k in range(n):
        for j in range(n):
            for i in range(n):
                conn.append([idx(i, j, k), idx(i + 1, j, k), idx(i + 1, j + 1, k), idx(i, j + 1, k),
                             idx(i, j, k + 1), idx(i + 1, j, k + 1), idx(i + 1, j + 1, k + 1), idx(i, j + 1, k + 1)])
    return X, np.array(conn), interior


def assemble(X, conn, bbar):
    B, w = hex_kinematics(X[conn], bbar=bbar)
    Ke = np.einsum("egia,ij,egjb,eg->eab", B, D, B, w)
    K = np.zeros((3 * len(X), 3 * len(X)))
    dofs = (3 * conn[:, :, None] + np.arange(3)).reshape(len(conn), 24)
    for e in range(len(conn)):
        K[np.ix_(dofs[e], dofs[e])] += Ke[e]
    return K, B, dofs


def linear_field(X, seed=1):
    rng = np.random.default_rng(seed)
    G = rng.normal(size=(3, 3)) * 1e-3
    return (X @ G.T + rng.normal(size=3) * 1e-3).ravel(), G


class TestHexElement:
    @pytest.mark.parametrize("bbar", [False, True])
    def test_rigid_body_modes(self, bbar):
        X = unit_hex(2.0) + np.random.default_rng(2).uniform(-0.1, 0.1, (8, 3))
        K, _, _ = assemble(X, np.arange(8)[None], bbar)
        ev = np.linalg.eigvalsh(K)
        tol = 1e-10 * ev.max()
        assert np.sum(np.abs(ev) < tol) == 6
        assert np.all(ev[6:] > tol)

    @pytest.mark.parametrize("bbar", [False, True])
    def test_patch_residual(self, bbar):
        X, conn, interior = patch_mesh()
        K, _, _ = assemble(X, conn, bbar)
        u, _ = linear_field(X)
        f = K @ u
        free = np.repeat(interior, 3)
        ref = np.abs(K).max() * np.abs(u).max()
        assert np.abs(f[free]).max() < 1e-10 * ref

    @pytest.mark.parametrize("bbar", [False, True])
    def test_patch_constant_stress(self, bbar):
        X, conn, interior = patch_mesh()
        K, B, dofs = assemble(X, conn, bbar)
        u, G = linear_field(X)
        fixed = ~np.repeat(interior, 3)
        free = ~fixed
        sol = u.copy()
        sol[free] = np.linalg.solve(K[np.ix_(free, free)], -K[np.ix_(free, fixed)] @ u[fixed])
        assert np.abs(sol - u).max() < 1e-10 * np.abs(u).max()
        eps = np.einsum("egij,ej->egi", B, sol[dofs])
        e = 0.5 * (G + G.T)
        expect = np.array([e[0, 0], e[1, 1], e[2, 2], 2 * e[0, 1], 2 * e[1, 2], 2 * e[0, 2]])
        assert np.abs(eps - expect).max() < 1e-10 * np.abs(expect).max()

    def test_bbar_volumetric_strain_constant(self):
        X = unit_hex() + np.random.default_rng(3).uniform(-0.1, 0.1, (8, 3))
        B, w = hex_kinematics(X[None], bbar=True)
        u = np.random.default_rng(4).normal(size=24)
        vol = (B[0, :, :3, :] @ u).sum(axis=1)
        assert np.ptp(vol) < 1e-12 * np.abs(vol).max()

    def test_volume(self):
        _, w = hex_kinematics(unit_hex(2.0)[None])
        assert w.sum() == pytest.approx(8.0)

    def test_inverted_element_named(self):
        X = unit_hex()[[1, 0, 3, 2, 5, 4, 7, 6]]
        with pytest.raises(ElementGeometryError, match="element 7"):
            hex_kinematics(X[None], first_id=7)

    def test_linear_in_displacement(self):
        X, conn, _ = patch_mesh(n=1, jitter=0.0)
        K, _, _ = assemble(X, conn, True)
        rng = np.random.default_rng(5)
        a, b = rng.normal(size=(2, 24))
        assert np.allclose(K @ (2.5 * a + b), 2.5 * K @ a + K @ b, rtol=1e-12, atol=1e-8)


class TestShapeFunctions:
    @settings(max_examples=50, deadline=None)
    @given(st.lists(st.floats(-1, 1), min_size=3, max_size=3))
    def test_partition_of_unity(self, xi):
        assert hex_shape(np.array(xi)).sum() == pytest.approx(1.0)

    @settings(max_examples=50, deadline=None)
    @given(st.lists(st.floats(-0.95, 0.95), min_size=3, max_size=3))
    def test_inverse_map_round_trip(self, xi):
        X = unit_hex(0.7) + np.random.default_rng(6).uniform(-0.05, 0.05, (8, 3))
        p = hex_shape(np.array(xi)) @ X
        assert np.allclose(inverse_map(X, p), xi, atol=1e-10)

    def test_quad_face_integrals_sum_to_area(self):
        XY = np.array([[[0, 0], [2, 0], [2, 1], [0, 1]]], dtype=float)
        w = quad_face_integrals(XY)
        assert w.sum() == pytest.approx(2.0)
        assert np.allclose(w, 0.5)


class TestInfiniteElement:
    def element(self):
        inner = np.array([[1, -0.5, -0.5], [1, 0.5, -0.5], [1, 0.5, 0.5], [1, -0.5, 0.5]], dtype=float)
        return np.vstack([inner, 2 * inner])[None]

    def test_stiffness_symmetric_psd(self):
        B, w = infinite_kinematics(self.element())
        K = np.einsum("egia,ij,egjb,eg->eab", B, D, B, w)[0]
        assert np.allclose(K, K.T, rtol=1e-12, atol=1e-9 * np.abs(K).max())
        assert np.linalg.eigvalsh(K).min() > -1e-9 * np.abs(K).max()

    def test_finite_energy_of_decaying_field(self):
        B, w = infinite_kinematics(self.element())
        assert np.all(w > 0) and np.isfinite(w).all()

    def test_reversed_rays_rejected(self):
        X = self.element()[:, [4, 5, 6, 7, 0, 1, 2, 3]]
        with pytest.raises(ElementGeometryError):
            infinite_kinematics(X)


def test_half_space_surface_load():
    """Flexible circular load on the infinite-element model vs the half space."""
    geom = GeometryParams(element_size_near=0.3, element_size_far=1.2, include_structure=False)
    mats = table1_materials()
    mats["soil"] = mats["soil"].elastic()
    model = FEModel(generate_half_model(geom), mats)
    p = 1e4
    f = model.surface_pressure_vector(p, geom.base_radius)
    a = math.sqrt(2 * -f[2::3].sum() / p / math.pi)  # radius of the loaded (faceted) area
    assert model.solve_increment(f).converged
    centre = np.flatnonzero(np.linalg.norm(model.mesh.nodes, axis=1) < 1e-9)[0]
    soil = mats["soil"]
    w0 = 2 * p * a * (1 - soil.nu ** 2) / soil.E
    assert -model.u[3 * centre + 2] == pytest.approx(w0, rel=0.10)
