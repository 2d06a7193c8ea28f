"""Static, time-history and pushover drivers plus derived quantities."""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .elements import quad_shape
from .fem import FEModel, LoadCase, SolverSettings
from .loads import SimplifiedLoad, WindSeries
from .materials import MohrCoulombSoil, table1_materials
from .mesh import GeometryParams, Mesh, generate_half_model

log = logging.getLogger(__name__)

STRUCTURE_REGIONS = ("slab", "pedestal", "ring", "tower")
AMPLIFICATION_FLOOR = 0.01
AMPLIFICATION_THRESHOLD = 1.05


class AnalysisError(RuntimeError):
    """A driver could not establish its initial state."""


class SensorError(LookupError):
    def __init__(self, sensor: str, point):
        super().__init__(f"sensor {sensor} at {tuple(np.round(point, 6))} lies outside the mesh")
        self.sensor = sensor


def build_model(geometry: GeometryParams | None = None, materials: dict | None = None,
                interface: str = "contact", penalty_factor: float = 100.0, bbar: bool = True,
                mesh: Mesh | None = None) -> FEModel:
    mesh = mesh if mesh is not None else generate_half_model(geometry or GeometryParams())
    return FEModel(mesh, materials or table1_materials(), interface=interface,
                   penalty_factor=penalty_factor, bbar=bbar)


def load_case(loads: SimplifiedLoad, fr: float | None = None, arm: float | None = None,
              soil_gravity: bool = True, structure_gravity: bool = True) -> LoadCase:
    """LoadCase with Fr overridden and, when ``arm`` is given, Mr = Fr * arm."""
    fr = loads.Fr if fr is None else fr
    mr = loads.Mr if arm is None else fr * arm
    return LoadCase(fz=loads.Fz, fr=fr, mr=mr, g1=loads.G1 if loads.G1 > 0 else None, g2=loads.G2,
                    soil_gravity=soil_gravity, structure_gravity=structure_gravity)


# --------------------------------------------------------------------- sensors
class SensorProbe:
    """Pre-located virtual instruments for one model.

    Pressures interpolate the nodal interface pressure over the slab base;
    strains are evaluated from the element displacement field.
    """

    def __init__(self, model: FEModel):
        self.model = model
        mesh = model.mesh
        lay = mesh.sensors
        self.columns = []
        self._pressure = []
        pair_of = -np.ones(mesh.n_nodes, dtype=np.int64)
        pair_of[model.pair_found] = np.arange(len(model.pair_found))
        for label, pt in zip(lay.pressure_labels, lay.pressure_points):
            e, xi = self._locate(label, pt, ("slab",))
            base = mesh.hexes[e][:4]
            idx = pair_of[base]
            if np.any(idx < 0):
                raise SensorError(label, pt)
            self._pressure.append((idx, quad_shape(xi[:2])))
            self.columns.append(label)
        self._strain = []
        # strain gauges on element faces read the mean of the adjacent elements
        for label, pt in zip(lay.plate_strain_labels, lay.plate_strain_points):
            self._strain.append((label, self._locate(label, pt, ("slab",), every=True), 0))
        for label, pt in zip(("ring_windward", "ring_leeward"), lay.ring_strain_points):
            self._strain.append((label, self._locate(label, pt, ("ring",), every=True), 2))
        for b, pt in zip((0, 45, 90, 135, 180), lay.tower_section_points):
            label = f"tower_{b}"
            self._strain.append((label, self._locate(label, pt, ("tower",), every=True), 2))
        self.columns += [s[0] for s in self._strain]
        self.columns += ["ux_top", "settlement", "tilt"]
        top = mesh.node_sets.get("foundation_top")
        if top is None or len(top) == 0:
            raise SensorError("foundation_top", lay.foundation_top_point)
        self._top = int(top[0])
        self._base_nodes = model.pair_found
        self._base_xy = mesh.nodes[self._base_nodes][:, :2]

    def _locate(self, label, pt, regions, every=False):
        try:
            if every:
                return self.model.locate_all(np.asarray(pt, float), regions)
            return self.model.locate(np.asarray(pt, float), regions)
        except LookupError:
            raise SensorError(label, pt) from None

    def read(self, u: np.ndarray | None = None, pressure: np.ndarray | None = None) -> np.ndarray:
        m = self.model
        u = m.u if u is None else u
        p = m.pair_pressure if pressure is None else pressure
        out = [float(w @ p[idx]) for idx, w in self._pressure]
        for _, hits, comp in self._strain:
            out.append(float(np.mean([m.strain_at(e, xi, u)[comp] for e, xi in hits])))
        out.append(float(u[3 * self._top]))
        out.append(float(-u[3 * self._top + 2]))
        w = u[3 * self._base_nodes + 2]
        A = np.column_stack([np.ones(len(w)), self._base_xy])
        coef = np.linalg.lstsq(A, w, rcond=None)[0]
        out.append(float(-coef[1]))
        return np.array(out)

    def as_dict(self, values: np.ndarray) -> dict:
        return dict(zip(self.columns, map(float, values)))


def extract_sensors(model: FEModel, probe: SensorProbe | None = None) -> dict:
    probe = probe or SensorProbe(model)
    return probe.as_dict(probe.read())


# ----------------------------------------------------------------- equilibrium
def base_equilibrium(model: FEModel) -> dict:
    """Compare interface resultants with the loads applied to the structure."""
    mesh = model.mesh
    sids = mesh.region_ids(*STRUCTURE_REGIONS)
    nodes = np.unique(mesh.hexes[sids])
    X = mesh.nodes[nodes]
    f = model.f_ext.reshape(-1, 3)[nodes]
    V = -f[:, 2].sum()
    H = f[:, 0].sum()
    M = float(np.sum(X[:, 2] * f[:, 0] - X[:, 0] * f[:, 2]))
    A = model.pair_area
    xb = mesh.nodes[model.pair_found][:, 0]
    Nz = float(np.sum(model.pair_pressure * A))
    Tx = float(np.sum(model.pair_traction[:, 0] * A))
    Mb = float(np.sum(xb * model.pair_pressure * A))
    R = mesh.geometry.base_radius
    scale = max(abs(V), 1e-12)
    return {
        "applied_vertical": V, "applied_horizontal": H, "applied_moment": M,
        "base_normal": Nz, "base_shear": Tx, "base_moment": Mb,
        "vertical_error": abs(Nz - V) / scale,
        "horizontal_error": abs(Tx - H) / max(abs(H), 1e-3 * scale),
        "moment_error": abs(Mb - M) / max(abs(M), 1e-3 * scale * R),
    }


def max_equilibrium_error(eq: dict) -> float:
    return max(eq["vertical_error"], eq["horizontal_error"], eq["moment_error"])


# ----------------------------------------------------------------- static
@dataclass
class StaticResult:
    converged: bool
    status: str
    fraction: float
    sensors: dict
    baseline_sensors: dict
    sigma_v: np.ndarray
    gauss_points: np.ndarray
    equilibrium: dict
    log: list = field(default_factory=list)


def _soil_sigma_v(model: FEModel) -> np.ndarray:
    return model.soil_group().stress[..., 2].ravel().copy()


def gravity_step(model: FEModel, loads: SimplifiedLoad, settings: SolverSettings,
                 soil_gravity: bool = True, structure_gravity: bool = True) -> list:
    """Self-weights, backfill and Fz: the pre-wind reference state.

    Soil self-weight enters through the at-rest initial stress field.
    """
    if soil_gravity and model.geostatic_load is None:
        model.initialize_geostatic()
    f = model.load_vector(load_case(loads, fr=0.0, arm=0.0, soil_gravity=soil_gravity,
                                    structure_gravity=structure_gravity))
    ok, entries = model.apply_load(f, settings)
    if not ok:
        raise AnalysisError(f"gravity step did not converge ({entries[-1]['status'] if entries else 'no step'})")
    return entries


def _last_fraction(entries):
    done = [e["fraction"] for e in entries if e["status"] == "converged"]
    return done[-1] if done else 0.0


def run_static(model: FEModel, loads: SimplifiedLoad, settings: SolverSettings | None = None,
               arm: float | None = None, probe: SensorProbe | None = None) -> StaticResult:
    """Gravity step followed by (Fr, Mr) in one load increment with cutbacks."""
    settings = settings or SolverSettings()
    entries = gravity_step(model, loads, settings)
    probe = probe or SensorProbe(model)
    baseline = probe.read()
    f = model.load_vector(load_case(loads, arm=arm))
    ok, more = model.apply_load(f, settings)
    entries = entries + more
    soil = model.soil_group()
    return StaticResult(
        converged=ok,
        status="converged" if ok else "not_converged",
        fraction=1.0 if ok else _last_fraction(more),
        sensors=probe.as_dict(probe.read()),
        baseline_sensors=probe.as_dict(baseline),
        sigma_v=_soil_sigma_v(model),
        gauss_points=model.gauss_points(soil).reshape(-1, 3),
        equilibrium=base_equilibrium(model),
        log=entries,
    )


# ------------------------------------------------------------- time history
@dataclass
class TimeHistoryResult:
    """Sensor deltas from the pre-wind baseline, one row per completed sample.

    ``baseline`` is the zeroed reference row (identically zero).
    """

    times: np.ndarray
    forces: np.ndarray
    columns: list
    records: np.ndarray
    baseline: np.ndarray
    envelope: np.ndarray
    gauss_points: np.ndarray
    completed: bool
    n_samples: int
    equilibrium_error: float
    log: list = field(default_factory=list)
    message: str = ""

    def column(self, name: str) -> np.ndarray:
        return self.records[:, self.columns.index(name)]


def run_time_history(model: FEModel, series: WindSeries, loads: SimplifiedLoad, arm: float | None = None,
                     settings: SolverSettings | None = None, probe: SensorProbe | None = None) -> TimeHistoryResult:
    """One converged quasi-static solve per sample of ``series``.

    Mr follows Fr through ``arm`` (defaults to the stub height, which puts
    the horizontal force at the tower-stub top).
    """
    settings = settings or SolverSettings()
    arm = model.mesh.geometry.stub_height if arm is None else arm
    entries = gravity_step(model, loads, settings)
    probe = probe or SensorProbe(model)
    base = probe.read()
    envelope = np.zeros_like(_soil_sigma_v(model))
    rows, eq_err, message = [], 0.0, ""
    n = len(series.samples)
    for k, fr in enumerate(series.samples):
        f = model.load_vector(load_case(loads, fr=float(fr), arm=arm))
        ok, more = model.apply_load(f, settings)
        for e in more:
            e["sample"] = k
        entries += more
        if not ok:
            message = f"non-convergence at sample {k} (t={k * series.dt:g} s)"
            log.warning(message)
            break
        rows.append(probe.read() - base)
        np.maximum(envelope, np.abs(_soil_sigma_v(model)), out=envelope)
        eq_err = max(eq_err, max_equilibrium_error(base_equilibrium(model)))
    done = len(rows)
    recs = np.array(rows) if rows else np.zeros((0, len(probe.columns)))
    return TimeHistoryResult(
        times=series.times[:done],
        forces=np.asarray(series.samples[:done], dtype=float),
        columns=list(probe.columns),
        records=recs,
        baseline=np.zeros(len(probe.columns)),
        envelope=envelope,
        gauss_points=model.gauss_points(model.soil_group()).reshape(-1, 3),
        completed=done == n,
        n_samples=done,
        equilibrium_error=eq_err,
        log=entries,
        message=message,
    )


# ------------------------------------------------------------- amplification
@dataclass
class AmplificationField:
    ratio: np.ndarray
    points: np.ndarray
    floor: float
    windward_peak: float
    leeward_peak: float
    center_value: float
    lateral_extent: float
    depth_extent: float
    base_radius: float

    @property
    def lateral_extent_R(self) -> float:
        return self.lateral_extent / self.base_radius

    @property
    def depth_extent_R(self) -> float:
        return self.depth_extent / self.base_radius

    def summary(self) -> dict:
        return {
            "windward_peak": self.windward_peak,
            "leeward_peak": self.leeward_peak,
            "center_value": self.center_value,
            "lateral_extent_m": self.lateral_extent,
            "lateral_extent_R": self.lateral_extent_R,
            "depth_extent_m": self.depth_extent,
            "depth_extent_R": self.depth_extent_R,
            "stress_floor_Pa": self.floor,
        }


def compute_amplification(dynamic: TimeHistoryResult, static: StaticResult, base_radius: float,
                          floor_ratio: float = AMPLIFICATION_FLOOR,
                          threshold: float = AMPLIFICATION_THRESHOLD) -> AmplificationField:
    """Peak dynamic over static vertical soil stress at each Gauss point.

    Edge zones are the soil within 0.25 R (plan) of the base edge on the
    load diameter and within R below the base.
    """
    if dynamic.envelope.shape != static.sigma_v.shape or not np.allclose(dynamic.gauss_points, static.gauss_points):
        raise ValueError("dynamic and static results come from different meshes")
    s = np.abs(static.sigma_v)
    floor = floor_ratio * float(s.max()) if s.size else 0.0
    ok = s > floor
    A = np.full(s.shape, np.nan)
    A[ok] = dynamic.envelope[ok] / s[ok]
    P = static.gauss_points
    R = base_radius
    below = (P[:, 2] <= 0.0) & (P[:, 2] >= -R)

    def zone_peak(xc):
        m = ok & below & (np.hypot(P[:, 0] - xc, P[:, 1]) <= 0.25 * R)
        return float(np.nanmax(A[m])) if np.any(m) else float("nan")

    d = np.linalg.norm(P - np.array([0.0, 0.0, -0.5 * R]), axis=1)
    d[~ok] = np.inf
    center = float(A[int(np.argmin(d))])
    hot = ok & (A > threshold)
    lateral = float(np.hypot(P[hot, 0], P[hot, 1]).max()) if np.any(hot) else 0.0
    depth = float((-P[hot, 2]).max()) if np.any(hot) else 0.0
    return AmplificationField(A, P, floor, zone_peak(-R), zone_peak(R), center, lateral, max(depth, 0.0), R)


# ----------------------------------------------------------------- pushover
@dataclass
class PushoverResult:
    direction: str
    loads: np.ndarray
    displacements: np.ndarray
    ultimate_load: float
    collapsed: bool
    status: str
    eq_plastic: np.ndarray
    uplift: np.ndarray
    pair_xy: np.ndarray
    equilibrium_error: float
    log: list = field(default_factory=list)

    def summary(self) -> dict:
        return {
            "direction": self.direction,
            "ultimate_load_N": self.ultimate_load,
            "collapsed": self.collapsed,
            "status": self.status,
            "steps": int(len(self.loads) - 1),
            "max_uplift_m": float(self.uplift.max()) if self.uplift.size else 0.0,
            "max_eq_plastic": float(np.nanmax(self.eq_plastic)) if np.any(np.isfinite(self.eq_plastic)) else 0.0,
        }


def run_pushover(model: FEModel, loads: SimplifiedLoad, increment: float = 100.0, arm: float | None = None,
                 settings: SolverSettings | None = None, direction: str = "horizontal",
                 load_cap: float = math.inf, soil_gravity: bool = True,
                 structure_gravity: bool = True) -> PushoverResult:
    """Ramp Fr (with Mr = Fr * arm) or Fz until Newton stops converging.

    Each step adds ``increment``; a failed step is retried at
    ``cutback_factor`` times the size, and collapse is declared once the
    step would fall below ``increment * cutback_factor**max_cutbacks``. The
    ultimate load is the last converged level.
    """
    if direction not in ("horizontal", "vertical"):
        raise ValueError("direction must be 'horizontal' or 'vertical'")
    if not increment > 0:
        raise ValueError("increment must be positive")
    settings = settings or SolverSettings()
    arm = model.mesh.geometry.stub_height if arm is None else arm
    try:
        entries = gravity_step(model, loads, settings, soil_gravity, structure_gravity)
    except AnalysisError as exc:
        raise AnalysisError(f"pushover initial state: {exc}") from exc
    top = int(model.mesh.node_sets["foundation_top"][0])
    comp = 0 if direction == "horizontal" else 2
    u0 = model.u[3 * top + comp]
    start = loads.Fr if direction == "horizontal" else 0.0

    def vector(level):
        if direction == "horizontal":
            case = load_case(loads, fr=level, arm=arm, soil_gravity=soil_gravity,
                             structure_gravity=structure_gravity)
        else:
            case = load_case(loads, fr=0.0, arm=0.0, soil_gravity=soil_gravity,
                             structure_gravity=structure_gravity)
            case.fz += level
        return model.load_vector(case)

    level = 0.0
    if direction == "horizontal" and start > 0:
        ok, more = model.apply_load(vector(start), settings)
        entries += more
        if not ok:
            raise AnalysisError("pushover initial state: base horizontal load did not converge")
        level = start
    sign = 1.0 if direction == "horizontal" else -1.0
    curve_f = [level]
    curve_u = [sign * (model.u[3 * top + comp] - u0)]
    min_step = increment * settings.cutback_factor ** settings.max_cutbacks
    step = increment
    streak = 0
    collapsed = False
    eq_err = max_equilibrium_error(base_equilibrium(model))
    while level < load_cap - 1e-9 * increment:
        trial = min(step, load_cap - level)
        res = model.solve_increment(vector(level + trial) - model.f_ext, settings)
        entries.append({"fraction": level + trial, "step": trial, "status": res.status,
                        "iterations": res.iterations})
        if res.converged:
            level += trial
            curve_f.append(level)
            curve_u.append(sign * (model.u[3 * top + comp] - u0))
            eq_err = max(eq_err, max_equilibrium_error(base_equilibrium(model)))
            streak += 1
            if step < increment and streak >= 2:
                step = min(increment, step / settings.cutback_factor)
                streak = 0
            continue
        streak = 0
        step *= settings.cutback_factor
        if step < min_step * (1 - 1e-12):
            collapsed = True
            break
    return PushoverResult(
        direction=direction,
        loads=np.array(curve_f),
        displacements=np.array(curve_u),
        ultimate_load=level,
        collapsed=collapsed,
        status="collapse" if collapsed else "no collapse within cap",
        eq_plastic=model.element_field("eq_plastic", reduce="max"),
        uplift=np.maximum(model.pair_gap, 0.0),
        pair_xy=model.mesh.nodes[model.pair_found][:, :2],
        equilibrium_error=eq_err,
        log=entries,
    )


def bearing_capacity_oracle(soil: MohrCoulombSoil, shape_factor: float = 1.2) -> dict:
    """Cohesive bearing pressure c N_c s_c for a surface circular footing."""
    phi = math.radians(soil.friction_angle)
    nq = math.exp(math.pi * math.tan(phi)) * math.tan(math.pi / 4 + phi / 2) ** 2
    nc = (nq - 1.0) / math.tan(phi) if phi > 0 else math.pi + 2.0
    return {"N_q": nq, "N_c": nc, "s_c": shape_factor, "q_ult": soil.cohesion * nc * shape_factor}
