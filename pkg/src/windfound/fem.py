"""Quasi-static nonlinear finite-element system.

:class:`FEModel` owns the mesh, materials, committed state and the sparse
system. Each Newton iteration re-evaluates stresses from the last committed
state (backward-Euler return map), reassembles the tangent and solves with a
sparse direct LU factorization.
"""
from __future__ import annotations

import copy
import logging
import math
import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

try:
    import pymetis
except ImportError:  # pragma: no cover - optional accelerator
    pymetis = None

from .elements import (
    hex_kinematics,
    hex_shape,
    hex_shape_grad,
    infinite_kinematics,
    inverse_map,
    jacobians,
    quad_face_integrals,
    strain_matrix,
    ElementGeometryError,
)
from .materials import (
    MohrCoulombSoil,
    elastic_stiffness,
    equivalent_plastic_increment,
    return_map_batch,
)
from .mesh import Mesh

log = logging.getLogger(__name__)

GRAVITY = 9.81
INTERFACE_MODES = ("contact", "tied")


class LinearSolverError(RuntimeError):
    """Sparse factorization or back-substitution failed."""


@dataclass
class SolverSettings:
    residual_tol: float = 1e-6
    displacement_tol: float = 1e-8
    max_iterations: int = 25
    max_cutbacks: int = 6
    cutback_factor: float = 0.5
    symmetrize: bool = False

    def __post_init__(self):
        if not (self.residual_tol > 0 and self.displacement_tol > 0):
            raise ValueError("solver tolerances must be positive")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")
        if self.max_cutbacks < 0:
            raise ValueError("max_cutbacks must be >= 0")
        if not 0.0 < self.cutback_factor < 1.0:
            raise ValueError("cutback_factor must lie in (0, 1)")


@dataclass
class IncrementResult:
    converged: bool
    status: str
    iterations: int
    residual_history: list = field(default_factory=list)
    message: str = ""


@dataclass
class LoadCase:
    """Loads on the whole (full) foundation; SI units.

    ``fz`` is compression positive, ``fr`` acts along +x at the tower-stub
    top, ``mr`` is the overturning moment about +y at the tower base.
    ``g1`` overrides the self-weight of the meshed structure when given;
    ``g2`` is the backfill weight applied as pressure on the slab top.
    """

    fz: float = 0.0
    fr: float = 0.0
    mr: float = 0.0
    g1: float | None = None
    g2: float = 0.0
    soil_gravity: bool = True
    structure_gravity: bool = True

    def scaled_horizontal(self, fr: float, mr: float) -> "LoadCase":
        return LoadCase(self.fz, fr, mr, self.g1, self.g2, self.soil_gravity, self.structure_gravity)


class _Group:
    """Hex elements sharing one material."""

    def __init__(self, name, material, elem_ids, conn, X, bbar, dof_of):
        self.name = name
        self.material = material
        self.elem_ids = elem_ids
        self.conn = conn
        self.B, self.wdet = hex_kinematics(X, bbar=bbar, first_id=int(elem_ids[0]) if len(elem_ids) else 0)
        self.dofs = dof_of(conn)
        self.D = elastic_stiffness(material)
        self.plastic = isinstance(material, MohrCoulombSoil) and material.plastic
        self.Ke_elastic = np.einsum("egia,ij,egjb,eg->eab", self.B, self.D, self.B, self.wdet, optimize=True)
        ne, ng = self.wdet.shape
        self.stress = np.zeros((ne, ng, 6))
        self.strain = np.zeros((ne, ng, 6))
        self.plastic_strain = np.zeros((ne, ng, 6))
        self.eq_plastic = np.zeros((ne, ng))
        self.X = X

    @property
    def n(self):
        return len(self.elem_ids)


class FEModel:
    """Finite-element model of the foundation system.

    Args:
        mesh: Mesh from :func:`windfound.mesh.generate_half_model`.
        materials: Mapping of material name to material object; needs the
            names used in ``mesh.hex_material``.
        interface: ``contact`` (no tension, Coulomb friction) or ``tied``.
        penalty_factor: Interface stiffness as a multiple of the axial
            stiffness E_oed / h of the top soil layer.
        bbar: Mean-dilatation brick formulation for the soil.
    """

    def __init__(self, mesh: Mesh, materials: dict, interface: str = "contact",
                 penalty_factor: float = 100.0, bbar: bool = True, gravity: float = GRAVITY):
        if interface not in INTERFACE_MODES:
            raise ValueError(f"interface must be one of {INTERFACE_MODES}")
        self.mesh = mesh
        self.materials = materials
        self.interface_mode = interface
        self.penalty_factor = penalty_factor
        self.gravity = gravity
        self.ndof = 3 * mesh.n_nodes
        self.soil = materials["soil"]

        self.groups = []
        for name in sorted(set(mesh.hex_material.tolist())):
            ids = np.flatnonzero(mesh.hex_material == name)
            conn = mesh.hexes[ids]
            mat = materials[name]
            self.groups.append(_Group(name, mat, ids, conn, mesh.nodes[conn],
                                      bbar and isinstance(mat, MohrCoulombSoil), self._dofs))

        # infinite elements: elastic soil, displacement dofs on the inner face only
        self.inf_conn = mesh.infinite[:, :4]
        if len(mesh.infinite):
            Binf, winf = infinite_kinematics(mesh.nodes[mesh.infinite])
            D = elastic_stiffness(self.soil)
            self.inf_Ke = np.einsum("egia,ij,egjb,eg->eab", Binf, D, Binf, winf, optimize=True)
        else:
            self.inf_Ke = np.zeros((0, 12, 12))
        self.inf_dofs = self._dofs(self.inf_conn)

        # interface
        self.pair_soil = mesh.interface_soil
        self.pair_found = mesh.interface_found
        self.pair_area = mesh.interface_area
        npair = len(self.pair_soil)
        z_soil = np.array(mesh.info.get("z_soil", [-1.0, 0.0]))
        h_top = float(z_soil[-1] - z_soil[-2]) if len(z_soil) > 1 else 1.0
        s = self.soil
        e_oed = s.E * (1 - s.nu) / ((1 + s.nu) * (1 - 2 * s.nu))
        self.k_normal = penalty_factor * e_oed / h_top
        self.k_tangent = self.k_normal
        self.friction = math.tan(math.radians(s.friction_angle))
        self.pair_dofs = np.hstack([self._dofs(self.pair_soil[:, None]), self._dofs(self.pair_found[:, None])]) \
            if npair else np.zeros((0, 6), dtype=np.int64)
        self.pair_traction = np.zeros((npair, 2))
        self.pair_slip = np.zeros((npair, 2))
        self.pair_pressure = np.zeros(npair)
        self.pair_gap = np.zeros(npair)

        # constraints
        fixed = np.zeros(self.ndof, dtype=bool)
        for name in ("fixed", "infinite_outer"):
            ids = np.asarray(mesh.node_sets.get(name, []), dtype=np.int64)
            for c in range(3):
                fixed[3 * ids + c] = True
        roller = np.asarray(mesh.node_sets.get("roller", []), dtype=np.int64)
        fixed[3 * roller] = True
        fixed[3 * roller + 1] = True
        sym = np.asarray(mesh.node_sets.get("symmetry", []), dtype=np.int64)
        fixed[3 * sym + 1] = True
        self.fixed = fixed
        self.free = np.flatnonzero(~fixed)
        self.reduced = -np.ones(self.ndof, dtype=np.int64)
        self.reduced[self.free] = np.arange(self.free.size)
        self._build_pattern()

        self.u = np.zeros(self.ndof)
        self.f_ext = np.zeros(self.ndof)
        self.f_int = np.zeros(self.ndof)
        self._factor = None
        self._factor_key = None
        self.geostatic_load = None
        self.stats = {"factorizations": 0, "solves": 0, "evaluations": 0}
        self._load_patterns()

    # ------------------------------------------------------------------ setup
    @staticmethod
    def _dofs(conn):
        conn = np.asarray(conn, dtype=np.int64)
        return (3 * conn[..., None] + np.arange(3)).reshape(conn.shape[0], 3 * conn.shape[1])

    def _build_pattern(self):
        blocks = [g.dofs for g in self.groups] + [self.inf_dofs, self.pair_dofs]
        rows, cols = [], []
        for d in blocks:
            nd = d.shape[1]
            rows.append(np.repeat(d, nd, axis=1).ravel())
            cols.append(np.tile(d, (1, nd)).ravel())
        rows = np.concatenate(rows)
        cols = np.concatenate(cols)
        r, c = self.reduced[rows], self.reduced[cols]
        keep = (r >= 0) & (c >= 0)
        n = self.free.size
        key = r[keep] * n + c[keep]
        uniq, inv = np.unique(key, return_inverse=True)
        self._keep = keep
        self._inv = inv
        self._nnz = uniq.size
        self._csr_rows = uniq // n
        self._csr_cols = uniq % n
        indptr = np.zeros(n + 1, dtype=np.int64)
        np.add.at(indptr, self._csr_rows + 1, 1)
        self._indptr = np.cumsum(indptr)
        self._ordering = self._fill_reducing_order()

    def _fill_reducing_order(self):
        """Nested-dissection permutation of the free dofs, or None."""
        n = self.free.size
        if pymetis is None or n < 64:
            return None
        G = sp.csr_matrix((np.ones(self._nnz), self._csr_cols, self._indptr), shape=(n, n))
        G = (G + G.T).tocsr()
        G.setdiag(0)
        G.eliminate_zeros()
        adj = pymetis.CSRAdjacency(G.indptr.astype(np.int64), G.indices.astype(np.int64))
        perm = np.asarray(pymetis.nested_dissection(adjacency=adj)[0], dtype=np.int64)
        if perm.size != n or np.unique(perm).size != n:
            return None
        return perm

    def _load_patterns(self):
        mesh = self.mesh
        nn = mesh.n_nodes
        self.nodal_volume_weight = {}
        soil_w = np.zeros(nn)
        struct_w = np.zeros(nn)
        N = hex_shape(np.array([[a, b, c] for c in (-1, 1) for b in (-1, 1) for a in (-1, 1)]) / math.sqrt(3.0))
        for g in self.groups:
            w = np.einsum("eg,ga->ea", g.wdet, N) * g.material.rho * self.gravity
            target = soil_w if isinstance(g.material, MohrCoulombSoil) else struct_w
            np.add.at(target, g.conn, w)
        self.soil_weight_nodal = soil_w
        self.struct_weight_nodal = struct_w
        self.struct_weight = float(struct_w.sum())

        self.pattern_vertical = np.zeros(self.ndof)
        self.pattern_horizontal = np.zeros(self.ndof)
        self.pattern_couple = np.zeros(self.ndof)
        self.pattern_backfill = np.zeros(self.ndof)
        faces = mesh.face_sets.get("tower_top")
        if faces is not None and len(faces):
            w = np.zeros(nn)
            np.add.at(w, faces, quad_face_integrals(mesh.nodes[faces][:, :, :2]))
            w /= w.sum()
            x = mesh.nodes[:, 0]
            self.pattern_vertical[2::3] = -w
            self.pattern_horizontal[0::3] = w
            # moment about +y of a vertical force f_z at x is -x f_z
            self.pattern_couple[2::3] = -w * x / np.sum(w * x * x)
        faces = mesh.face_sets.get("backfill")
        if faces is not None and len(faces):
            w = np.zeros(nn)
            np.add.at(w, faces, np.abs(quad_face_integrals(mesh.nodes[faces][:, :, :2])))
            self.pattern_backfill[2::3] = -w / w.sum()
        self.load_scale = 0.5 if mesh.half else 1.0

    def surface_pressure_vector(self, pressure: float, radius: float, face_set: str = "soil_top"):
        """Downward pressure on the faces of ``face_set`` within ``radius`` of the axis."""
        faces = self.mesh.face_sets[face_set]
        xy = self.mesh.nodes[faces][:, :, :2]
        inside = np.hypot(xy[..., 0], xy[..., 1]).max(axis=1) <= radius + 1e-9
        w = np.zeros(self.mesh.n_nodes)
        np.add.at(w, faces[inside], np.abs(quad_face_integrals(xy[inside])))
        f = np.zeros(self.ndof)
        f[2::3] = -pressure * w
        return f

    def load_vector(self, load: LoadCase) -> np.ndarray:
        """External force vector for ``load`` (half loads on a half model)."""
        s = self.load_scale
        f = np.zeros(self.ndof)
        if load.soil_gravity:
            if self.geostatic_load is not None:
                f += self.geostatic_load
            else:
                f[2::3] -= self.soil_weight_nodal
        if load.structure_gravity:
            factor = 1.0
            if load.g1 is not None and load.g1 > 0 and self.struct_weight > 0:
                factor = s * load.g1 / self.struct_weight
            f[2::3] -= factor * self.struct_weight_nodal
        L = self.mesh.geometry.stub_height
        f += s * load.fz * self.pattern_vertical
        f += s * load.fr * self.pattern_horizontal
        f += s * (load.mr - load.fr * L) * self.pattern_couple
        f += s * load.g2 * self.pattern_backfill
        return f

    def initialize_geostatic(self, k0: float | None = None) -> np.ndarray:
        """Install the at-rest soil stress field and its far-field support.

        Soil stresses become sigma_v = -gamma * depth below the local ground
        surface and sigma_h = k0 * sigma_v (default 1 - sin(phi)). The
        truncated far field carries the same stress, so the tractions it
        exerts on the outer faces are added to the soil weight to form the
        geostatic load. The initial stresses balance it at zero displacement
        except next to the pit wall, where the ground surface steps down and
        the first equilibrium iteration of the gravity step settles the small
        out-of-balance. Must be called on an unloaded model.
        """
        if np.any(self.u) or np.any(self.f_ext):
            raise RuntimeError("geostatic initialisation needs an unloaded model")
        soil = self.soil
        k0 = 1.0 - soil.sin_phi if k0 is None else k0
        gamma = soil.rho * self.gravity
        geom = self.mesh.geometry
        fint = np.zeros(self.ndof)
        for g in self.groups:
            if not isinstance(g.material, MohrCoulombSoil):
                continue
            P = self.gauss_points(g)
            r = np.hypot(P[..., 0], P[..., 1])
            surface = np.where(r >= geom.base_radius - 1e-9, geom.embedment_depth, 0.0)
            sv = -gamma * np.maximum(surface - P[..., 2], 0.0)
            sig = np.zeros(P.shape[:2] + (6,))
            sig[..., 0] = sig[..., 1] = k0 * sv
            sig[..., 2] = sv
            g.stress = sig
            g.strain = np.zeros_like(sig)
            np.add.at(fint, g.dofs, np.einsum("egia,egi,eg->ea", g.B, sig, g.wdet, optimize=True))
        grav = np.zeros(self.ndof)
        grav[2::3] = -self.soil_weight_nodal
        outer = [np.unique(self.inf_conn)] + [np.asarray(self.mesh.node_sets.get(k, []), dtype=np.int64)
                                               for k in ("bottom", "lateral")]
        outer = np.unique(np.concatenate(outer))
        dofs = self._dofs(outer[:, None]).ravel()
        load = grav.copy()
        load[dofs] += fint[dofs] - grav[dofs]
        self.geostatic_load = load
        self.f_ext = load.copy()
        self.f_int = fint
        return load

    # ------------------------------------------------------------- evaluation
    def _interface(self, u, need_tangent):
        npair = len(self.pair_soil)
        if npair == 0:
            return np.zeros((0, 6)), np.zeros((0, 6, 6)), {}
        d = u[self.pair_dofs[:, 3:]] - u[self.pair_dofs[:, :3]]
        gap = d[:, 2]
        slip = d[:, :2]
        A = self.pair_area
        kn, kt, mu = self.k_normal, self.k_tangent, self.friction
        K = np.zeros((npair, 3, 3))
        if self.interface_mode == "tied":
            p = -kn * gap
            t = kt * slip
            K[:, 0, 0] = K[:, 1, 1] = kt
            K[:, 2, 2] = kn
            status = np.zeros(npair, dtype=np.int8)
        else:
            closed = gap <= 0.0
            p = kn * np.maximum(-gap, 0.0)
            t_tr = self.pair_traction + kt * (slip - self.pair_slip)
            norm = np.linalg.norm(t_tr, axis=1)
            limit = mu * p
            slipping = closed & (norm > limit)
            stick = closed & ~slipping
            t = np.where(stick[:, None], t_tr, 0.0)
            e = t_tr / np.where(norm > 0, norm, 1.0)[:, None]
            t[slipping] = limit[slipping, None] * e[slipping]
            K[closed, 2, 2] = kn
            K[stick, 0, 0] = K[stick, 1, 1] = kt
            if np.any(slipping):
                i = np.flatnonzero(slipping)
                ee = e[i]
                fac = (limit[i] * kt / norm[i])[:, None, None]
                K[i, :2, :2] = fac * (np.eye(2) - ee[:, :, None] * ee[:, None, :])
                K[i, :2, 2] = -mu * kn * ee
            status = np.where(~closed, 0, np.where(stick, 1, 2)).astype(np.int8)
        fvec = np.zeros((npair, 6))
        ff = np.column_stack([t, -p]) * A[:, None]
        fvec[:, 3:] = ff
        fvec[:, :3] = -ff
        Kp = np.zeros((npair, 6, 6))
        if need_tangent:
            KA = K * A[:, None, None]
            Kp[:, :3, :3] = KA
            Kp[:, 3:, 3:] = KA
            Kp[:, :3, 3:] = -KA
            Kp[:, 3:, :3] = -KA
        trial = {"gap": gap, "slip": slip, "pressure": p, "traction": t, "status": status}
        return fvec, Kp, trial

    def evaluate(self, u, need_tangent=True):
        """Internal forces, tangent data and trial states at displacement ``u``."""
        self.stats["evaluations"] += 1
        fint = np.zeros(self.ndof)
        kdata = []
        trial = []
        any_plastic = False
        for g in self.groups:
            ue = u[g.dofs]
            eps = np.einsum("egij,ej->egi", g.B, ue)
            sig_tr = g.stress + (eps - g.strain) @ g.D.T
            if g.plastic:
                flat = sig_tr.reshape(-1, 6)
                sig, dep, tan, region = return_map_batch(flat, g.material, need_tangent)
                sig = sig.reshape(sig_tr.shape)
                dep = dep.reshape(sig_tr.shape)
                region = region.reshape(sig_tr.shape[:2])
            else:
                sig, dep, tan, region = sig_tr, None, None, None
            fe = np.einsum("egia,egi,eg->ea", g.B, sig, g.wdet, optimize=True)
            np.add.at(fint, g.dofs, fe)
            if need_tangent:
                Ke = g.Ke_elastic
                if region is not None:
                    pe = np.flatnonzero(np.any(region > 0, axis=1))
                    if pe.size:
                        any_plastic = True
                        Ke = Ke.copy()
                        C = tan.reshape(sig_tr.shape[:2] + (6, 6))[pe]
                        Ke[pe] = np.einsum("egia,egij,egjb,eg->eab", g.B[pe], C, g.B[pe], g.wdet[pe], optimize=True)
                kdata.append(Ke.ravel())
            trial.append((eps, sig, dep, region))
        if len(self.inf_conn):
            fe = np.einsum("eab,eb->ea", self.inf_Ke, u[self.inf_dofs])
            np.add.at(fint, self.inf_dofs, fe)
            if need_tangent:
                kdata.append(self.inf_Ke.ravel())
        fpair, Kp, itrial = self._interface(u, need_tangent)
        if len(fpair):
            np.add.at(fint, self.pair_dofs, fpair)
            if need_tangent:
                kdata.append(Kp.ravel())
        K = None
        key = None
        if need_tangent:
            data = np.concatenate(kdata)[self._keep]
            vals = np.bincount(self._inv, weights=data, minlength=self._nnz)
            n = self.free.size
            K = sp.csr_matrix((vals, self._csr_cols, self._indptr), shape=(n, n))
            status = itrial.get("status")
            if not any_plastic and (status is None or not np.any(status == 2)):
                key = (self.interface_mode, status.tobytes() if status is not None else b"")
        return fint, K, {"groups": trial, "interface": itrial, "tangent_key": key}

    # ----------------------------------------------------------------- solve
    def _factorize(self, A):
        perm = self._ordering
        with warnings.catch_warnings():
            warnings.simplefilter("error")
            if perm is None:
                return spla.splu(A.tocsc(), permc_spec="MMD_AT_PLUS_A"), None
            P = A[perm][:, perm].tocsc()
            lu = spla.splu(P, permc_spec="NATURAL", diag_pivot_thresh=0.1,
                           options={"SymmetricMode": True})
            return lu, perm

    def _solve(self, K, r, key, symmetrize):
        if key is not None and key == self._factor_key and self._factor is not None:
            lu, perm, A = self._factor
        else:
            A = 0.5 * (K + K.T) if symmetrize else K
            try:
                lu, perm = self._factorize(A)
            except (RuntimeError, Warning) as exc:
                raise LinearSolverError(str(exc)) from exc
            self.stats["factorizations"] += 1
            self._factor, self._factor_key = (lu, perm, A), key
        self.stats["solves"] += 1
        x = self._backsolve(lu, perm, r)
        # one step of iterative refinement; fall back to partial pivoting
        rn = np.linalg.norm(r)
        res = r - A @ x
        if rn > 0 and np.linalg.norm(res) > 1e-10 * rn:
            x = x + self._backsolve(lu, perm, res)
            res = r - A @ x
            if np.linalg.norm(res) > 1e-8 * rn or not np.all(np.isfinite(x)):
                try:
                    with warnings.catch_warnings():
                        warnings.simplefilter("error")
                        lu = spla.splu(A.tocsc(), permc_spec="MMD_AT_PLUS_A")
                except (RuntimeError, Warning) as exc:
                    raise LinearSolverError(str(exc)) from exc
                self.stats["factorizations"] += 1
                self._factor = (lu, None, A)
                x = lu.solve(r)
        if not np.all(np.isfinite(x)):
            raise LinearSolverError("non-finite solution from the sparse solver")
        return x

    @staticmethod
    def _backsolve(lu, perm, r):
        if perm is None:
            return lu.solve(r)
        x = np.empty_like(r)
        x[perm] = lu.solve(r[perm])
        return x

    def solve_increment(self, df_ext: np.ndarray, settings: SolverSettings | None = None) -> IncrementResult:
        """Newton iteration for one load increment.

        Each Newton step is followed by a backtracking line search on the
        residual norm, which tames contact status chatter. On success the
        new state is committed; otherwise the committed state is left
        untouched and the iteration history is returned.
        """
        settings = settings or SolverSettings()
        target = self.f_ext + df_ext
        free = self.free
        du = np.zeros(self.ndof)
        history = []
        last_step = 0.0
        first = None

        def residual(d):
            fint, K, trial = self.evaluate(self.u + d)
            r = (target - fint)[free]
            return fint, K, trial, r, float(np.linalg.norm(r))

        fint, K, trial, r, rn = residual(du)
        for it in range(1, settings.max_iterations + 1):
            ref = max(float(np.linalg.norm(target[free])), float(np.linalg.norm(fint[free])), 1e-8)
            history.append(rn / ref)
            if not math.isfinite(rn):
                return IncrementResult(False, "diverged", it, history, "non-finite residual")
            unorm = float(np.linalg.norm(self.u + du))
            if rn <= settings.residual_tol * ref and (
                it == 1 or last_step <= settings.displacement_tol * max(unorm, 1e-30)
                or rn <= 1e-3 * settings.residual_tol * ref
            ):
                self._commit(self.u + du, target, fint, trial)
                return IncrementResult(True, "converged", it, history)
            if first is None:
                first = rn
            elif rn > 1e8 * max(first, ref):
                return IncrementResult(False, "diverged", it, history, "residual blow-up")
            try:
                step = self._solve(K, r, trial["tangent_key"], settings.symmetrize)
            except LinearSolverError as exc:
                return IncrementResult(False, "breakdown", it, history, str(exc))
            best = None
            for alpha in (1.0, 0.5, 0.25, 0.125):
                cand = du.copy()
                cand[free] += alpha * step
                out = residual(cand)
                if math.isfinite(out[4]) and (best is None or out[4] < best[1][4]):
                    best = (alpha, out, cand)
                if out[4] < rn:
                    break
            if best is None:
                return IncrementResult(False, "diverged", it, history, "non-finite residual")
            alpha, (fint, K, trial, r, rn), du = best
            last_step = alpha * float(np.linalg.norm(step))
        return IncrementResult(False, "max_iterations", settings.max_iterations, history,
                               "Newton iteration limit reached")

    def _commit(self, u, target, fint, trial):
        self.u = u.copy()
        self.f_ext = target.copy()
        self.f_int = fint
        for g, (eps, sig, dep, region) in zip(self.groups, trial["groups"]):
            g.strain = eps
            g.stress = sig
            if dep is not None:
                g.plastic_strain = g.plastic_strain + dep
                inc = equivalent_plastic_increment(dep.reshape(-1, 6)).reshape(g.eq_plastic.shape)
                g.eq_plastic = g.eq_plastic + inc
        it = trial["interface"]
        if it:
            self.pair_traction = it["traction"].copy()
            self.pair_slip = it["slip"].copy()
            self.pair_pressure = it["pressure"].copy()
            self.pair_gap = it["gap"].copy()

    def apply_load(self, f_target: np.ndarray, settings: SolverSettings | None = None,
                   first_fraction: float = 1.0):
        """Move the committed external load to ``f_target`` with cutbacks.

        Returns:
            (reached, log) where log lists one entry per attempted increment.
        """
        settings = settings or SolverSettings()
        start = self.f_ext.copy()
        total = f_target - start
        done = 0.0
        step = first_fraction
        cuts = 0
        entries = []
        while done < 1.0 - 1e-12:
            step = min(step, 1.0 - done)
            res = self.solve_increment(step * total, settings)
            entries.append({"fraction": done + step, "step": step, "status": res.status,
                            "iterations": res.iterations})
            if res.converged:
                done += step
                if cuts:
                    step = min(step / settings.cutback_factor, 1.0)
                    cuts = max(cuts - 1, 0)
            else:
                if res.status == "breakdown" and not settings.symmetrize:
                    log.debug("linear solver breakdown at fraction %.4f", done + step)
                cuts += 1
                if cuts > settings.max_cutbacks:
                    return False, entries
                step *= settings.cutback_factor
        return True, entries

    # ----------------------------------------------------------- snapshots
    def snapshot(self):
        grp = [(g.stress.copy(), g.strain.copy(), g.plastic_strain.copy(), g.eq_plastic.copy()) for g in self.groups]
        return {
            "u": self.u.copy(), "f_ext": self.f_ext.copy(), "f_int": self.f_int.copy(), "groups": grp,
            "pair": (self.pair_traction.copy(), self.pair_slip.copy(), self.pair_pressure.copy(), self.pair_gap.copy()),
        }

    def restore(self, snap):
        self.u = snap["u"].copy()
        self.f_ext = snap["f_ext"].copy()
        self.f_int = snap["f_int"].copy()
        for g, (s, e, p, q) in zip(self.groups, snap["groups"]):
            g.stress, g.strain, g.plastic_strain, g.eq_plastic = s.copy(), e.copy(), p.copy(), q.copy()
        t, sl, pr, gp = snap["pair"]
        self.pair_traction, self.pair_slip, self.pair_pressure, self.pair_gap = t.copy(), sl.copy(), pr.copy(), gp.copy()

    # --------------------------------------------------------------- queries
    def reactions(self) -> np.ndarray:
        """Nodal reactions at constrained dofs (zero elsewhere)."""
        r = self.f_int - self.f_ext
        r[self.free] = 0.0
        return r

    def element_field(self, name: str, reduce: str = "mean") -> np.ndarray:
        """Per-element scalar over all hexes (nan where not defined)."""
        out = np.full(len(self.mesh.hexes), np.nan)
        for g in self.groups:
            if name == "eq_plastic":
                v = g.eq_plastic
            elif name == "szz":
                v = g.stress[..., 2]
            else:
                raise KeyError(name)
            out[g.elem_ids] = v.mean(axis=1) if reduce == "mean" else v.max(axis=1)
        return out

    def soil_group(self) -> _Group:
        for g in self.groups:
            if isinstance(g.material, MohrCoulombSoil):
                return g
        raise KeyError("no soil elements")

    def gauss_points(self, group: _Group) -> np.ndarray:
        from .elements import HEX_GAUSS
        N = hex_shape(HEX_GAUSS)
        return np.einsum("ga,eai->egi", N, group.X)

    def locate_all(self, point, regions, tol: float = 1e-6) -> list:
        """All (element id, natural coordinates) in ``regions`` containing ``point``.

        Points on shared faces or edges return every adjacent element, in
        ascending element order.
        """
        point = np.asarray(point, float)
        ids = self.mesh.region_ids(*regions)
        X = self.mesh.nodes[self.mesh.hexes[ids]]
        lo, hi = X.min(axis=1) - 1e-9, X.max(axis=1) + 1e-9
        cand = np.flatnonzero(np.all((point >= lo) & (point <= hi), axis=1))
        found = []
        for c in cand:
            xi = inverse_map(X[c], point)
            if np.max(np.abs(xi)) - 1.0 <= tol:
                found.append((int(ids[c]), np.clip(xi, -1.0, 1.0)))
        if not found:
            raise LookupError(f"point {tuple(point)} lies outside regions {regions}")
        return sorted(found, key=lambda t: t[0])

    def locate(self, point, regions) -> tuple[int, np.ndarray]:
        """Element id and natural coordinates of ``point`` in ``regions``."""
        return self.locate_all(point, regions)[0]

    def strain_at(self, elem: int, xi: np.ndarray, u: np.ndarray | None = None) -> np.ndarray:
        u = self.u if u is None else u
        conn = self.mesh.hexes[elem]
        X = self.mesh.nodes[conn]
        _, _, dndx = jacobians(X[None], hex_shape_grad(np.asarray(xi)[None]))
        B = strain_matrix(dndx)[0, 0]
        return B @ u[self._dofs(conn[None])[0]]
