"""Material parameters and constitutive laws.

Steel and concrete are linear elastic. Soil follows Mohr-Coulomb perfect
plasticity, integrated with an implicit return map in principal stress space
(main plane, two edges, apex).

Voigt convention used throughout the package::

    strain = (exx, eyy, ezz, gxy, gyz, gxz)   # engineering shear
    stress = (sxx, syy, szz, sxy, syz, sxz)

Tension is positive.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

ELASTIC, MAIN_PLANE, RIGHT_EDGE, LEFT_EDGE, APEX = 0, 1, 2, 3, 4
REGION_NAMES = {
    ELASTIC: "elastic",
    MAIN_PLANE: "main_plane",
    RIGHT_EDGE: "right_edge",
    LEFT_EDGE: "left_edge",
    APEX: "apex",
}

# Voigt index -> tensor index pairs
_VOIGT_PAIRS = ((0, 0), (1, 1), (2, 2), (0, 1), (1, 2), (0, 2))


class ReturnMapError(RuntimeError):
    """Raised when no return region can be assigned to a trial stress."""


@dataclass(frozen=True)
class ElasticMaterial:
    """Isotropic linear elastic material.

    Args:
        E: Young's modulus (Pa).
        nu: Poisson ratio.
        rho: Density (kg/m^3).
        yield_strength: Steel yield strength (Pa), used for utilization only.
        fcuk: Concrete characteristic cube strength (Pa).
        eps_cu: Concrete ultimate compressive strain.
        eps_tu: Concrete ultimate tensile strain.
    """

    E: float
    nu: float
    rho: float
    yield_strength: float | None = None
    fcuk: float | None = None
    eps_cu: float | None = None
    eps_tu: float | None = None
    name: str = ""

    def __post_init__(self):
        if not self.E > 0:
            raise ValueError(f"E must be positive, got {self.E}")
        if not 0.0 <= self.nu < 0.5:
            raise ValueError(f"Poisson ratio must lie in [0, 0.5), got {self.nu}")
        if not self.rho > 0:
            raise ValueError(f"density must be positive, got {self.rho}")

    @property
    def plastic(self) -> bool:
        return False


@dataclass(frozen=True)
class MohrCoulombSoil:
    """Mohr-Coulomb soil with perfect plasticity.

    Angles are in degrees. ``plastic=False`` turns the soil into a linear
    elastic material with the same moduli (used by elastic oracle runs).
    """

    E: float
    nu: float
    cohesion: float
    friction_angle: float
    dilation_angle: float = 0.0
    rho: float = 2030.0
    water_content: float | None = None
    nonuniformity: float | None = None
    plastic: bool = True
    name: str = "soil"

    def __post_init__(self):
        if not self.E > 0:
            raise ValueError(f"E must be positive, got {self.E}")
        if not 0.0 <= self.nu < 0.5:
            raise ValueError(f"Poisson ratio must lie in [0, 0.5), got {self.nu}")
        if self.cohesion < 0:
            raise ValueError(f"cohesion must be >= 0, got {self.cohesion}")
        if not 0.0 <= self.friction_angle < 90.0:
            raise ValueError(f"friction angle must lie in [0, 90), got {self.friction_angle}")
        if not 0.0 <= self.dilation_angle <= self.friction_angle:
            raise ValueError(
                f"dilation angle must lie in [0, friction angle], got {self.dilation_angle}"
            )
        if not self.rho > 0:
            raise ValueError(f"density must be positive, got {self.rho}")

    @property
    def sin_phi(self) -> float:
        return math.sin(math.radians(self.friction_angle))

    @property
    def cos_phi(self) -> float:
        return math.cos(math.radians(self.friction_angle))

    @property
    def sin_psi(self) -> float:
        return math.sin(math.radians(self.dilation_angle))

    @property
    def tol_yield(self) -> float:
        scale = 2.0 * self.cohesion * self.cos_phi
        return 1e-6 * (scale if scale > 0 else self.E * 1e-6)

    @property
    def apex_stress(self) -> float:
        """Hydrostatic stress at the cone apex, c*cot(phi)."""
        if self.friction_angle == 0.0:
            return math.inf
        return self.cohesion * self.cos_phi / self.sin_phi

    def associated(self) -> "MohrCoulombSoil":
        return replace(self, dilation_angle=self.friction_angle)

    def elastic(self) -> "MohrCoulombSoil":
        return replace(self, plastic=False)


@dataclass
class GaussPointState:
    """Stress and plastic history at one integration point."""

    stress: np.ndarray = field(default_factory=lambda: np.zeros(6))
    plastic_strain: np.ndarray = field(default_factory=lambda: np.zeros(6))
    eq_plastic_strain: float = 0.0


def stress_from_strain(strain, E):
    """Uniaxial Hooke's law, sigma = E * eps."""
    return E * strain


def lame(E: float, nu: float) -> tuple[float, float]:
    lam = E * nu / ((1.0 + nu) * (1.0 - 2.0 * nu))
    mu = E / (2.0 * (1.0 + nu))
    return lam, mu


def elastic_stiffness(mat) -> np.ndarray:
    """6x6 isotropic elasticity matrix mapping engineering strain to stress."""
    if not 0.0 <= mat.nu < 0.5:
        raise ValueError(f"Poisson ratio must lie in [0, 0.5), got {mat.nu}")
    lam, mu = lame(mat.E, mat.nu)
    D = np.zeros((6, 6))
    D[:3, :3] = lam
    D[[0, 1, 2], [0, 1, 2]] += 2.0 * mu
    D[[3, 4, 5], [3, 4, 5]] = mu
    return D


def elastic_compliance(mat) -> np.ndarray:
    return np.linalg.inv(elastic_stiffness(mat))


def voigt_to_tensor(v: np.ndarray) -> np.ndarray:
    """Stress-like Voigt vectors (..., 6) to symmetric tensors (..., 3, 3)."""
    v = np.asarray(v, dtype=float)
    t = np.empty(v.shape[:-1] + (3, 3))
    for k, (i, j) in enumerate(_VOIGT_PAIRS):
        t[..., i, j] = v[..., k]
        t[..., j, i] = v[..., k]
    return t


def tensor_to_voigt(t: np.ndarray) -> np.ndarray:
    return np.stack([t[..., i, j] for i, j in _VOIGT_PAIRS], axis=-1)


def principal_stresses(stress: np.ndarray) -> np.ndarray:
    """Principal values sorted descending, shape (..., 3)."""
    return np.linalg.eigvalsh(voigt_to_tensor(stress))[..., ::-1]


def mc_yield(stress, soil: MohrCoulombSoil):
    """Mohr-Coulomb yield function; negative inside the elastic domain."""
    s = principal_stresses(np.asarray(stress, dtype=float))
    s1, s3 = s[..., 0], s[..., 2]
    return (s1 - s3) + (s1 + s3) * soil.sin_phi - 2.0 * soil.cohesion * soil.cos_phi


def _principal_moduli(soil):
    lam, mu = lame(soil.E, soil.nu)
    return lam * np.ones((3, 3)) + 2.0 * mu * np.eye(3), lam, mu


def _plane_vectors(soil):
    sf, sp = soil.sin_phi, soil.sin_psi
    # yield gradients and flow directions for the main plane and both edges
    F = {
        "main": np.array([1 + sf, 0.0, -(1 - sf)]),
        "right": np.array([0.0, 1 + sf, -(1 - sf)]),
        "left": np.array([1 + sf, -(1 - sf), 0.0]),
    }
    G = {
        "main": np.array([1 + sp, 0.0, -(1 - sp)]),
        "right": np.array([0.0, 1 + sp, -(1 - sp)]),
        "left": np.array([1 + sp, -(1 - sp), 0.0]),
    }
    return F, G


def _ordered(s, tol):
    return (s[:, 0] - s[:, 1] >= -tol) & (s[:, 1] - s[:, 2] >= -tol)


def return_map_principal(x: np.ndarray, soil: MohrCoulombSoil):
    """Return map on principal trial stresses.

    Args:
        x: (n, 3) trial principal stresses sorted descending.
        soil: Soil parameters.

    Returns:
        (s, J, region): returned principal stresses (n, 3), the Jacobian
        ds/dx (n, 3, 3) and the region code per point.
    """
    x = np.asarray(x, dtype=float)
    n = x.shape[0]
    if not np.all(np.isfinite(x)):
        raise ReturnMapError("non-finite trial stress")
    De, _, _ = _principal_moduli(soil)
    F, G = _plane_vectors(soil)
    k = 2.0 * soil.cohesion * soil.cos_phi
    tol = soil.tol_yield
    ord_tol = 1e-12 * max(1.0, float(np.max(np.abs(x))) if n else 1.0)

    s = x.copy()
    J = np.broadcast_to(np.eye(3), (n, 3, 3)).copy()
    region = np.zeros(n, dtype=np.int8)
    if not soil.plastic or n == 0:
        return s, J, region

    f_tr = x @ F["main"] - k
    active = np.flatnonzero(f_tr > 0.0)
    if active.size == 0:
        return s, J, region
    xa = x[active]

    # main plane
    r_main = De @ G["main"]
    a_main = F["main"] @ r_main
    dg = (xa @ F["main"] - k) / a_main
    s_main = xa - dg[:, None] * r_main
    ok_main = _ordered(s_main, ord_tol)
    J_main = np.eye(3) - np.outer(r_main, F["main"]) / a_main

    s_out = s_main.copy()
    J_out = np.broadcast_to(J_main, (active.size, 3, 3)).copy()
    reg = np.full(active.size, MAIN_PLANE, dtype=np.int8)
    unresolved = ~ok_main

    # edges: two active planes, linear system for the two multipliers
    edge_res = {}
    for name in ("right", "left"):
        R = np.column_stack([r_main, De @ G[name]])
        Fm = np.vstack([F["main"], F[name]])
        A = Fm @ R
        Ainv = np.linalg.inv(A)
        rhs = xa @ Fm.T - k
        gam = rhs @ Ainv.T
        s_e = xa - gam @ R.T
        valid = np.all(gam >= -ord_tol, axis=1) & _ordered(s_e, ord_tol)
        edge_res[name] = (s_e, np.eye(3) - R @ Ainv @ Fm, valid)

    prefer_right = s_main[:, 1] > s_main[:, 0]
    for name, code, pref in (
        ("right", RIGHT_EDGE, prefer_right),
        ("left", LEFT_EDGE, ~prefer_right),
        ("right", RIGHT_EDGE, ~prefer_right),
        ("left", LEFT_EDGE, prefer_right),
    ):
        s_e, J_e, valid = edge_res[name]
        pick = unresolved & pref & valid
        s_out[pick] = s_e[pick]
        J_out[pick] = J_e
        reg[pick] = code
        unresolved &= ~pick

    if np.any(unresolved):
        p_apex = soil.apex_stress
        if not math.isfinite(p_apex):
            raise ReturnMapError("trial stress beyond all return regions and the yield cone has no apex")
        pick = unresolved & (xa.mean(axis=1) >= p_apex - ord_tol)
        s_out[pick] = p_apex
        J_out[pick] = 0.0
        reg[pick] = APEX
        unresolved &= ~pick
        if np.any(unresolved):
            bad = xa[unresolved][0]
            raise ReturnMapError(f"could not classify return region for principal trial stress {bad}")

    s[active] = s_out
    J[active] = J_out
    region[active] = reg
    return s, J, region


def _sym_outer_voigt(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Voigt components of sym(a x b) for batches of vectors (..., 3)."""
    t = 0.5 * (a[..., :, None] * b[..., None, :] + b[..., :, None] * a[..., None, :])
    return tensor_to_voigt(t)


def return_map_batch(stress_trial: np.ndarray, soil: MohrCoulombSoil, need_tangent: bool = True):
    """Vectorized Mohr-Coulomb return map.

    Args:
        stress_trial: (n, 6) elastic trial stresses.
        soil: Soil parameters.
        need_tangent: Skip the consistent tangent when False.

    Returns:
        stress (n, 6), plastic strain increment (n, 6, engineering shear),
        consistent tangent (n, 6, 6) or None, region codes (n,).
    """
    stress_trial = np.atleast_2d(np.asarray(stress_trial, dtype=float))
    n = stress_trial.shape[0]
    D = elastic_stiffness(soil)
    stress = stress_trial.copy()
    dep = np.zeros((n, 6))
    tangent = np.broadcast_to(D, (n, 6, 6)).copy() if need_tangent else None
    region = np.zeros(n, dtype=np.int8)
    if not soil.plastic or n == 0:
        return stress, dep, tangent, region
    if not np.all(np.isfinite(stress_trial)):
        raise ReturnMapError("non-finite trial stress")

    # cheap screening before the eigen-decomposition
    f = mc_yield(stress_trial, soil)
    idx = np.flatnonzero(f > 0.0)
    if idx.size == 0:
        return stress, dep, tangent, region

    w, V = np.linalg.eigh(voigt_to_tensor(stress_trial[idx]))
    x = w[:, ::-1]
    V = V[:, :, ::-1]
    s, Jp, reg = return_map_principal(x, soil)

    t = np.einsum("nia,na,nja->nij", V, s, V)
    new = tensor_to_voigt(t)
    stress[idx] = new
    dep[idx] = (stress_trial[idx] - new) @ np.linalg.inv(D).T
    region[idx] = reg

    if need_tangent:
        lam, mu = lame(soil.E, soil.nu)
        nvec = [V[:, :, a] for a in range(3)]
        m_diag = [_sym_outer_voigt(nvec[a], nvec[a]) for a in range(3)]
        A = np.zeros((idx.size, 6, 6))
        for a in range(3):
            for b in range(3):
                A += Jp[:, a, b][:, None, None] * m_diag[a][:, :, None] * m_diag[b][:, None, :]
        scale = np.maximum(np.abs(x).max(axis=1), 1.0)
        for a, b in ((0, 1), (1, 2), (0, 2)):
            dx = x[:, a] - x[:, b]
            close = np.abs(dx) <= 1e-9 * scale
            coef = np.where(
                close,
                Jp[:, a, a] - Jp[:, a, b],
                (s[:, a] - s[:, b]) / np.where(close, 1.0, dx),
            )
            m_ab = _sym_outer_voigt(nvec[a], nvec[b])
            A += 2.0 * coef[:, None, None] * m_ab[:, :, None] * m_ab[:, None, :]
        trace_part = np.einsum("nab->na", Jp)
        vol = sum(trace_part[:, a][:, None] * m_diag[a] for a in range(3))
        C = 2.0 * mu * A
        C[:, :, :3] += lam * vol[:, :, None]
        tangent[idx] = C
    return stress, dep, tangent, region


def equivalent_plastic_increment(dep: np.ndarray) -> np.ndarray:
    """sqrt(2/3 de:de) for engineering-shear Voigt increments."""
    dep = np.atleast_2d(dep)
    sq = np.sum(dep[:, :3] ** 2, axis=1) + 0.5 * np.sum(dep[:, 3:] ** 2, axis=1)
    return np.sqrt(2.0 / 3.0 * sq)


def mc_return_map(stress_trial, state: GaussPointState, soil: MohrCoulombSoil):
    """Single-point return map.

    Returns:
        (stress, updated state, 6x6 consistent tangent). The input state is
        not modified.
    """
    stress, dep, tangent, _ = return_map_batch(np.asarray(stress_trial, float)[None, :], soil)
    new_state = GaussPointState(
        stress=stress[0].copy(),
        plastic_strain=state.plastic_strain + dep[0],
        eq_plastic_strain=state.eq_plastic_strain + float(equivalent_plastic_increment(dep)[0]),
    )
    return stress[0], new_state, tangent[0]


@dataclass(frozen=True)
class MaterialCorrection:
    """A documented departure from the printed material table."""

    key: str
    printed: str
    used: float
    reason: str


TABLE1_CORRECTIONS = (
    MaterialCorrection(
        "concrete.E", "32.3 MPa", 32.3e9,
        "MPa is physically impossible for concrete with f_cu,k = 27.7 MPa; read as GPa",
    ),
    MaterialCorrection(
        "concrete.rho", "0.0234 g/m^3", 2340.0, "read as 2.34 g/cm^3",
    ),
    MaterialCorrection(
        "ring_steel.E", "203.8 MPa", 203.8e9, "read as GPa for steel",
    ),
    MaterialCorrection(
        "ring_steel", "sigma_s/rho rows listed under soil", 237.6e6,
        "rows read as the foundation-ring steel block misaligned by the table layout",
    ),
    MaterialCorrection(
        "soil.friction_angle", "psi 23.2", 23.2,
        "read as friction angle phi; dilation defaults to 0 (non-associated)",
    ),
)


def table1_materials() -> dict:
    """Material set of the 1:10 model with the documented corrections applied."""
    return {
        "tower_steel": ElasticMaterial(
            E=212.8e9, nu=0.31, rho=7850.0, yield_strength=349.2e6, name="tower_steel"
        ),
        "concrete": ElasticMaterial(
            E=32.3e9, nu=0.23, rho=2340.0, fcuk=27.7e6, eps_cu=3300e-6, eps_tu=100e-6,
            name="concrete",
        ),
        "ring_steel": ElasticMaterial(
            E=203.8e9, nu=0.31, rho=7850.0, yield_strength=237.6e6, name="ring_steel"
        ),
        "soil": MohrCoulombSoil(
            E=8.35e6, nu=0.33, cohesion=17.6e3, friction_angle=23.2, dilation_angle=0.0,
            rho=2030.0, water_content=16.7, nonuniformity=10.2,
        ),
    }
