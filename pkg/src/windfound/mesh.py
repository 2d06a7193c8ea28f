"""Half-symmetric hexahedral mesh of the foundation, soil and tower stub.

The plan view is a half disc (y >= 0) meshed as an O-grid: a small square
core surrounded by polar rings. Bodies are extruded from that plan mesh:

* soil from z = -H up to the base plane z = 0, plus an embedment annulus
  (r >= R) from z = 0 to the ground surface;
* the concrete slab (r <= R), the pedestal (r <= r_ped) with the embedded
  steel foundation ring, and the thin-walled tower stub.

Soil and foundation nodes on the base plane are coincident but distinct;
they are paired for the interface. The far field is closed by one layer of
mapped infinite elements.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, asdict

import numpy as np

from .elements import (
    HEX_GAUSS,
    ElementGeometryError,
    hex_shape_grad,
    infinite_kinematics,
    jacobians,
    quad_face_integrals,
)

REGION_MATERIAL = {
    "soil": "soil",
    "embedment": "soil",
    "slab": "concrete",
    "pedestal": "concrete",
    "ring": "ring_steel",
    "tower": "tower_steel",
}
FAR_FIELD_MODES = ("infinite", "lateral", "bottom", "fixed")
GAUGE_EDGE_OFFSET = 0.05
TOWER_GAUGE_HEIGHT = 0.05
BEARINGS = (0.0, 45.0, 90.0, 135.0, 180.0)


class MeshError(ValueError):
    """Invalid geometry or grading request."""


@dataclass(frozen=True)
class GeometryParams:
    """Model-scale geometry (m).

    ``domain_radius_factor`` and ``depth_factor`` give the soil domain in
    multiples of the base radius. ``far_field`` selects the truncation:
    ``infinite`` (infinite elements on the lateral and bottom faces, pole at
    the base centre), ``lateral`` (horizontal infinite skirt, fixed bottom),
    ``bottom`` (infinite elements below, lateral face on horizontal rollers)
    or ``fixed`` (fixed bottom, lateral rollers).
    """

    base_radius: float = 0.9
    base_thickness: float = 0.14
    pedestal_radius: float = 0.3
    pedestal_height: float = 0.16
    tower_outer_radius: float = 0.2
    wall_thickness: float = 0.003
    stub_height: float = 1.0
    embedment_depth: float = 0.25
    domain_radius_factor: float = 4.0
    depth_factor: float = 4.0
    element_size_near: float = 0.15
    element_size_far: float = 0.6
    far_field: str = "infinite"
    include_structure: bool = True

    def __post_init__(self):
        positive = (
            "base_radius", "base_thickness", "pedestal_radius", "pedestal_height",
            "tower_outer_radius", "wall_thickness", "stub_height",
            "element_size_near", "element_size_far",
        )
        for name in positive:
            if not getattr(self, name) > 0:
                raise MeshError(f"geometry.{name} must be positive")
        if self.embedment_depth < 0:
            raise MeshError("geometry.embedment_depth must be >= 0")
        if self.domain_radius_factor < 3.0:
            raise MeshError("soil domain radius must be at least 3 base radii")
        if self.depth_factor < 3.0:
            raise MeshError("soil depth must be at least 3 base radii")
        if self.wall_thickness < 1e-3:
            raise MeshError("tower wall must be at least 1 mm thick")
        if not self.wall_thickness < self.tower_outer_radius < self.pedestal_radius < self.base_radius:
            raise MeshError("need wall < tower radius < pedestal radius < base radius")
        if self.base_radius <= GAUGE_EDGE_OFFSET:
            raise MeshError("base radius must exceed the 5 cm gauge edge offset")
        if self.far_field not in FAR_FIELD_MODES:
            raise MeshError(f"far_field must be one of {FAR_FIELD_MODES}")
        if self.element_size_near > self.domain_radius or self.element_size_far > self.domain_radius:
            raise MeshError("element size exceeds the soil domain")
        if self.element_size_far < self.element_size_near:
            raise MeshError("far-field element size must not be smaller than the near-field size")

    @property
    def domain_radius(self) -> float:
        return self.domain_radius_factor * self.base_radius

    @property
    def soil_depth(self) -> float:
        return self.depth_factor * self.base_radius

    @property
    def pedestal_top(self) -> float:
        return self.base_thickness + self.pedestal_height

    @property
    def tower_inner_radius(self) -> float:
        return self.tower_outer_radius - self.wall_thickness


@dataclass(frozen=True)
class SensorLayout:
    """Virtual instrument positions (m), windward edge at x = -R.

    Pressure gauges are listed by bearing from the windward direction
    (0, 45, 90, 135, 180 degrees) followed by the centre gauge.
    """

    pressure_points: np.ndarray
    pressure_labels: tuple
    plate_strain_points: np.ndarray
    plate_strain_labels: tuple
    ring_strain_points: np.ndarray
    tower_section_points: np.ndarray
    tower_section_height: float
    foundation_top_point: np.ndarray


def gauge_positions(geom: GeometryParams) -> SensorLayout:
    R = geom.base_radius
    if R <= GAUGE_EDGE_OFFSET:
        raise MeshError("base radius must exceed 5 cm")
    rg = R - GAUGE_EDGE_OFFSET
    pts = [_bearing_point(rg, b) for b in BEARINGS] + [(0.0, 0.0, 0.0)]
    labels = tuple(f"P{int(b)}" for b in BEARINGS) + ("P_center",)
    zt = geom.base_thickness
    x_in = geom.pedestal_radius + GAUGE_EDGE_OFFSET
    plate = [(-rg, 0.0, zt), (-x_in, 0.0, zt), (x_in, 0.0, zt), (rg, 0.0, zt)]
    r_mid = geom.tower_outer_radius - 0.5 * geom.wall_thickness
    z_ring = geom.base_thickness + 0.5 * geom.pedestal_height
    ring = [(-r_mid, 0.0, z_ring), (r_mid, 0.0, z_ring)]
    z_tower = geom.pedestal_top + TOWER_GAUGE_HEIGHT
    tower = [_bearing_point(r_mid, b, z_tower) for b in BEARINGS]
    return SensorLayout(
        pressure_points=np.array(pts, dtype=float),
        pressure_labels=labels,
        plate_strain_points=np.array(plate, dtype=float),
        plate_strain_labels=("JY-1#", "JY-2#", "JY-3#", "JY-4#"),
        ring_strain_points=np.array(ring, dtype=float),
        tower_section_points=np.array(tower, dtype=float),
        tower_section_height=TOWER_GAUGE_HEIGHT,
        foundation_top_point=np.array([0.0, 0.0, geom.pedestal_top]),
    )


def _bearing_point(r, bearing_deg, z=0.0):
    # bearing 0 = windward (-x), 180 = leeward (+x)
    if bearing_deg == 0.0:
        return (-r, 0.0, z)
    if bearing_deg == 180.0:
        return (r, 0.0, z)
    if bearing_deg == 90.0:
        return (0.0, r, z)
    b = math.radians(bearing_deg)
    return (-r * math.cos(b), r * math.sin(b), z)


@dataclass
class Mesh:
    """Half (or mirrored full) model discretization."""

    nodes: np.ndarray
    hexes: np.ndarray
    hex_region: np.ndarray
    hex_material: np.ndarray
    infinite: np.ndarray
    infinite_pole: np.ndarray
    interface_soil: np.ndarray
    interface_found: np.ndarray
    interface_area: np.ndarray
    interface_normal: np.ndarray
    node_sets: dict
    face_sets: dict
    geometry: GeometryParams
    sensors: SensorLayout
    half: bool = True
    info: dict = field(default_factory=dict)

    @property
    def n_nodes(self) -> int:
        return self.nodes.shape[0]

    def region_ids(self, *regions) -> np.ndarray:
        return np.flatnonzero(np.isin(self.hex_region, regions))


def _graded(a, b, h_a, h_b):
    """Points from a to b (inclusive) with sizes grading linearly h_a -> h_b."""
    L = b - a
    if L <= 0:
        return np.array([a])
    if abs(h_b - h_a) < 1e-12 * max(h_a, h_b):
        n = max(1, int(round(L / h_a)))
        return np.linspace(a, b, n + 1)
    k = (h_b - h_a) / L
    total = math.log(h_b / h_a) / k
    n = max(1, int(round(total)))
    c = np.linspace(0.0, total, n + 1)
    pts = a + (h_a * np.exp(k * c) - h_a) / k
    pts[-1] = b
    return pts


def _split(a, b, h):
    n = max(1, int(math.ceil((b - a) / h - 1e-9)))
    return np.linspace(a, b, n + 1)


def _angular_divisions(geom: GeometryParams) -> int:
    n = int(round(math.pi * geom.base_radius / (4.0 * geom.element_size_near)))
    return 4 * max(1, n)


def _radial_stations(geom: GeometryParams):
    R, h = geom.base_radius, geom.element_size_near
    if geom.include_structure:
        breaks = [
            geom.tower_inner_radius,
            geom.tower_outer_radius,
            geom.pedestal_radius,
            R - GAUGE_EDGE_OFFSET,
            R,
        ]
        first = geom.tower_inner_radius
    else:
        first = min(0.5 * R, 2.0 * h)
        breaks = [first, R]
    radii = [breaks[0]]
    for a, b in zip(breaks[:-1], breaks[1:]):
        radii.extend(_split(a, b, h)[1:])
    radii.extend(_graded(R, geom.domain_radius, h, geom.element_size_far)[1:])
    return first, np.array(radii)


def _planar_mesh(n_theta: int, core_radius: float, radii: np.ndarray):
    """Half-disc O-grid. Returns points (np, 2) and CCW quads (nq, 4)."""
    nc = n_theta // 2
    s = 0.5 * core_radius
    pid = {}
    pts = []

    def add(key, xy):
        pid[key] = len(pts)
        pts.append(xy)

    half = nc // 2
    for j in range(half + 1):
        for i in range(nc + 1):
            add(("c", i, j), (-s + 2.0 * s * i / nc, s * j / half))
    # core boundary walked from angle 0 to pi
    boundary = []
    for j in range(half + 1):
        boundary.append(("c", nc, j))
    for i in range(nc - 1, -1, -1):
        boundary.append(("c", i, half))
    for j in range(half - 1, -1, -1):
        boundary.append(("c", 0, j))
    assert len(boundary) == n_theta + 1
    for k in range(n_theta + 1):
        for m, r in enumerate(radii):
            if k == 0:
                xy = (r, 0.0)
            elif k == n_theta:
                xy = (-r, 0.0)
            elif 2 * k == n_theta:
                xy = (0.0, r)
            else:
                t = math.pi * k / n_theta
                xy = (r * math.cos(t), r * math.sin(t))
            add(("r", k, m), xy)

    quads = []
    for j in range(half):
        for i in range(nc):
            quads.append((pid[("c", i, j)], pid[("c", i + 1, j)], pid[("c", i + 1, j + 1)], pid[("c", i, j + 1)]))
    ring_keys = [boundary] + [[("r", k, m) for k in range(n_theta + 1)] for m in range(len(radii))]
    for m in range(len(ring_keys) - 1):
        inner, outer = ring_keys[m], ring_keys[m + 1]
        for k in range(n_theta):
            quads.append((pid[inner[k]], pid[outer[k]], pid[outer[k + 1]], pid[inner[k + 1]]))
    P = np.array(pts, dtype=float)
    Q = np.array(quads, dtype=np.int64)
    # enforce counter-clockwise orientation
    a = _quad_signed_area(P[Q])
    flip = a < 0
    Q[flip] = Q[flip][:, ::-1]
    rim = np.array([pid[("r", k, len(radii) - 1)] for k in range(n_theta + 1)])
    return P, Q, rim


def _quad_signed_area(XY):
    x, y = XY[..., 0], XY[..., 1]
    return 0.5 * np.sum(x * np.roll(y, -1, axis=-1) - np.roll(x, -1, axis=-1) * y, axis=-1)


class _NodeTable:
    def __init__(self):
        self.ids = {}
        self.xyz = []

    def get(self, key, xyz):
        nid = self.ids.get(key)
        if nid is None:
            nid = len(self.xyz)
            self.ids[key] = nid
            self.xyz.append(xyz)
        return nid


def generate_half_model(geom: GeometryParams | None = None) -> Mesh:
    """Build the half-symmetric mesh (y >= 0)."""
    geom = geom or GeometryParams()
    R = geom.base_radius
    eps = 1e-9
    n_theta = _angular_divisions(geom)
    core_r, radii = _radial_stations(geom)
    P, Q, rim = _planar_mesh(n_theta, core_r, radii)
    pr = np.hypot(P[:, 0], P[:, 1])
    q_rmax = pr[Q].max(axis=1)
    q_rmin = pr[Q].min(axis=1)

    h = geom.element_size_near
    H = geom.soil_depth
    z_soil = -_graded(0.0, H, 0.5 * h, geom.element_size_far)[::-1]
    z_soil[-1] = 0.0
    z_emb = _split(0.0, geom.embedment_depth, h)[1:] if geom.embedment_depth > 0 else np.array([])

    nt = _NodeTable()
    hexes, regions = [], []

    def brick(quad, lo, hi):
        return [lo[p] for p in quad] + [hi[p] for p in quad]

    # soil nodes, bottom-up
    soil_levels = []
    for z in z_soil:
        soil_levels.append({p: nt.get(("S", p, float(z)), (P[p, 0], P[p, 1], z)) for p in range(len(P))})
    outer_pts = [p for p in range(len(P)) if pr[p] >= R - eps]
    emb_levels = [soil_levels[-1]]
    for z in z_emb:
        emb_levels.append({p: nt.get(("S", p, float(z)), (P[p, 0], P[p, 1], z)) for p in outer_pts})
    for lo, hi in zip(soil_levels[:-1], soil_levels[1:]):
        for q in Q:
            hexes.append(brick(q, lo, hi))
            regions.append("soil")
    emb_quads = Q[q_rmin >= R - eps]
    for lo, hi in zip(emb_levels[:-1], emb_levels[1:]):
        for q in emb_quads:
            hexes.append(brick(q, lo, hi))
            regions.append("embedment")

    found_levels = {}
    load_nodes = np.array([], dtype=np.int64)
    face_sets = {}
    interface = []
    if geom.include_structure:
        tb, top = geom.base_thickness, geom.pedestal_top
        z_slab = _split(0.0, tb, h)
        z_ped = _split(tb, top, h)
        if len(z_ped) < 3:
            z_ped = np.linspace(tb, top, 3)
        z_tow = np.concatenate([[top], top + _tower_levels(geom)])
        slab_quads = Q[q_rmax <= R + eps]
        ped_mask = q_rmax <= geom.pedestal_radius + eps
        band = (q_rmin >= geom.tower_inner_radius - eps) & (q_rmax <= geom.tower_outer_radius + eps)

        def level(z, pts_):
            d = found_levels.setdefault(float(z), {})
            for p in pts_:
                if p not in d:
                    d[p] = nt.get(("F", p, float(z)), (P[p, 0], P[p, 1], z))
            return d

        slab_pts = np.unique(slab_quads)
        ped_pts = np.unique(Q[ped_mask])
        tow_pts = np.unique(Q[band])
        for z0, z1 in zip(z_slab[:-1], z_slab[1:]):
            lo, hi = level(z0, slab_pts), level(z1, slab_pts)
            for q in slab_quads:
                hexes.append(brick(q, lo, hi))
                regions.append("slab")
        for z0, z1 in zip(z_ped[:-1], z_ped[1:]):
            lo, hi = level(z0, ped_pts), level(z1, ped_pts)
            for q, is_ring in zip(Q[ped_mask], band[ped_mask]):
                hexes.append(brick(q, lo, hi))
                regions.append("ring" if is_ring else "pedestal")
        for z0, z1 in zip(z_tow[:-1], z_tow[1:]):
            lo, hi = level(z0, tow_pts), level(z1, tow_pts)
            for q in Q[band]:
                hexes.append(brick(q, lo, hi))
                regions.append("tower")
        load_nodes = np.array([found_levels[float(z_tow[-1])][p] for p in tow_pts])
        top_faces = Q[band]
        face_sets["tower_top"] = np.array([[found_levels[float(z_tow[-1])][p] for p in q] for q in top_faces])
        backfill = Q[(q_rmax <= R + eps) & (q_rmin >= geom.pedestal_radius - eps)]
        face_sets["backfill"] = np.array([[found_levels[float(tb)][p] for p in q] for q in backfill])
        base = found_levels[0.0]
        areas = np.zeros(len(P))
        np.add.at(areas, slab_quads, quad_face_integrals(P[slab_quads]))
        for p in slab_pts:
            interface.append((soil_levels[-1][p], base[p], areas[p]))
    face_sets["soil_top"] = np.array([[soil_levels[-1][p] for p in q] for q in Q])

    # infinite elements
    inf_elems, poles = [], []
    rim_levels = [lv for lv in soil_levels] + emb_levels[1:]
    spherical = geom.far_field in ("infinite", "bottom")
    if geom.far_field in ("infinite", "lateral"):
        for lo, hi in zip(rim_levels[:-1], rim_levels[1:]):
            for k in range(n_theta):
                inner = [lo[rim[k]], lo[rim[k + 1]], hi[rim[k + 1]], hi[rim[k]]]
                inf_elems.append(inner)
                poles.append(None if spherical else "axis")
    if spherical:
        for q in Q:
            inner = [soil_levels[0][p] for p in q[::-1]]
            inf_elems.append(inner)
            poles.append(None)

    nodes = np.array(nt.xyz, dtype=float)
    inf_full, inf_pole = [], []
    outer_ids = {}
    xyz = list(map(tuple, nodes))
    for inner, pole_kind in zip(inf_elems, poles):
        outer = []
        pole_pts = []
        for nid in inner:
            x = nodes[nid]
            pole = np.array([0.0, 0.0, x[2]]) if pole_kind == "axis" else np.zeros(3)
            key = (nid, pole_kind)
            if key not in outer_ids:
                outer_ids[key] = len(xyz)
                xyz.append(tuple(pole + 2.0 * (x - pole)))
            outer.append(outer_ids[key])
            pole_pts.append(pole)
        inf_full.append(inner + outer)
        inf_pole.append(np.mean(pole_pts, axis=0))
    nodes = np.array(xyz, dtype=float)

    hexes = np.array(hexes, dtype=np.int64)
    regions = np.array(regions)
    materials = np.array([REGION_MATERIAL[r] for r in regions])
    n_soil_nodes = len(nt.xyz)
    sym = np.flatnonzero(np.abs(nodes[:n_soil_nodes, 1]) == 0.0)
    bottom = np.array(sorted(soil_levels[0].values()))
    lateral = np.array(sorted({lv[rim[k]] for lv in rim_levels for k in range(n_theta + 1)}))
    fixed = []
    roller = np.zeros(0, dtype=np.int64)
    if geom.far_field in ("lateral", "fixed"):
        fixed.extend(bottom.tolist())
    if geom.far_field in ("bottom", "fixed"):
        # truncated lateral face: horizontal restraint, free to settle
        roller = np.setdiff1d(lateral, fixed)
    node_sets = {
        "symmetry": sym,
        "bottom": bottom,
        "lateral": lateral,
        "fixed": np.array(sorted(set(fixed)), dtype=np.int64),
        "roller": roller.astype(np.int64),
        "infinite_outer": np.array(sorted(outer_ids.values()), dtype=np.int64),
        "load": load_nodes,
    }
    if geom.include_structure:
        node_sets["foundation_top"] = np.array([found_levels[float(geom.pedestal_top)][_center_point(P)]])

    if interface:
        it = np.array(interface)
        isoil, ifound, iarea = it[:, 0].astype(np.int64), it[:, 1].astype(np.int64), it[:, 2]
    else:
        isoil = ifound = np.zeros(0, dtype=np.int64)
        iarea = np.zeros(0)
    normal = np.tile([0.0, 0.0, 1.0], (len(isoil), 1))
    return Mesh(
        nodes=nodes,
        hexes=hexes,
        hex_region=regions,
        hex_material=materials,
        infinite=np.array(inf_full, dtype=np.int64).reshape(-1, 8),
        infinite_pole=np.array(inf_pole, dtype=float).reshape(-1, 3),
        interface_soil=isoil,
        interface_found=ifound,
        interface_area=iarea,
        interface_normal=normal,
        node_sets=node_sets,
        face_sets=face_sets,
        geometry=geom,
        sensors=gauge_positions(geom),
        half=True,
        info={"n_theta": n_theta, "radii": radii.tolist(), "z_soil": z_soil.tolist()},
    )


def _tower_levels(geom):
    L = geom.stub_height
    rest = _split(TOWER_GAUGE_HEIGHT, L, max(geom.element_size_near, 0.1))
    return np.concatenate([[TOWER_GAUGE_HEIGHT], rest[1:]]) if L > TOWER_GAUGE_HEIGHT else np.array([L])


def _center_point(P):
    return int(np.argmin(np.hypot(P[:, 0], P[:, 1])))


_MIRROR_PERM = [1, 0, 3, 2, 5, 4, 7, 6]


def mirror_full(mesh: Mesh) -> Mesh:
    """Reflect a half model about y = 0 into the full model."""
    nodes = mesh.nodes
    on_plane = nodes[:, 1] == 0.0
    new_ids = np.arange(mesh.n_nodes)
    extra = np.flatnonzero(~on_plane)
    new_ids[extra] = mesh.n_nodes + np.arange(extra.size)
    mirrored = nodes[extra] * np.array([1.0, -1.0, 1.0])
    all_nodes = np.vstack([nodes, mirrored])

    hexes = np.vstack([mesh.hexes, new_ids[mesh.hexes][:, _MIRROR_PERM]])
    inf = np.vstack([mesh.infinite, new_ids[mesh.infinite][:, _MIRROR_PERM]])
    poles = np.vstack([mesh.infinite_pole, mesh.infinite_pole * np.array([1.0, -1.0, 1.0])])
    pairs_off = ~on_plane[mesh.interface_found]
    area = np.where(pairs_off, mesh.interface_area, 2.0 * mesh.interface_area)
    isoil = np.concatenate([mesh.interface_soil, new_ids[mesh.interface_soil[pairs_off]]])
    ifound = np.concatenate([mesh.interface_found, new_ids[mesh.interface_found[pairs_off]]])
    iarea = np.concatenate([area, mesh.interface_area[pairs_off]])
    node_sets = {}
    for name, ids in mesh.node_sets.items():
        if name == "symmetry":
            node_sets[name] = np.zeros(0, dtype=np.int64)
            continue
        ids = np.asarray(ids, dtype=np.int64)
        node_sets[name] = np.unique(np.concatenate([ids, new_ids[ids]]))
    face_sets = {k: np.vstack([v, new_ids[v][:, ::-1]]) for k, v in mesh.face_sets.items()}
    return Mesh(
        nodes=all_nodes,
        hexes=hexes,
        hex_region=np.concatenate([mesh.hex_region, mesh.hex_region]),
        hex_material=np.concatenate([mesh.hex_material, mesh.hex_material]),
        infinite=inf,
        infinite_pole=poles,
        interface_soil=isoil,
        interface_found=ifound,
        interface_area=iarea,
        interface_normal=np.tile([0.0, 0.0, 1.0], (len(isoil), 1)),
        node_sets=node_sets,
        face_sets=face_sets,
        geometry=mesh.geometry,
        sensors=mesh.sensors,
        half=False,
        info=dict(mesh.info),
    )


@dataclass
class MeshDiagnostics:
    ok: bool
    n_nodes: int
    n_hex: int
    n_infinite: int
    min_jacobian: float
    min_jacobian_element: int
    max_aspect_ratio: float
    min_aspect_ratio: float
    orphan_references: list
    unreferenced_nodes: list
    symmetry_offplane: int
    max_interface_gap: float
    messages: list

    def as_dict(self):
        return asdict(self)


def validate_mesh(mesh: Mesh) -> MeshDiagnostics:
    """Check element geometry, references, symmetry plane and interface pairs."""
    msgs = []
    nn = mesh.n_nodes
    conn = [mesh.hexes.ravel(), mesh.infinite.ravel(), mesh.interface_soil, mesh.interface_found]
    refs = np.concatenate([np.asarray(c, dtype=np.int64).ravel() for c in conn])
    bad_refs = sorted(set(refs[(refs < 0) | (refs >= nn)].tolist()))
    if bad_refs:
        msgs.append(f"{len(bad_refs)} element references to missing nodes")
    used = np.zeros(nn, dtype=bool)
    good = refs[(refs >= 0) & (refs < nn)]
    used[good] = True
    unref = np.flatnonzero(~used).tolist()
    if unref:
        msgs.append(f"{len(unref)} nodes not referenced by any element")

    min_j, min_e = math.inf, -1
    max_ar, min_ar = 0.0, math.inf
    if not bad_refs and mesh.hexes.size:
        X = mesh.nodes[mesh.hexes]
        _, detJ, _ = jacobians(X, hex_shape_grad(HEX_GAUSS))
        e = int(np.argmin(detJ.min(axis=1)))
        min_j, min_e = float(detJ.min()), e
        edges = [(0, 1), (1, 2), (2, 3), (3, 0), (4, 5), (5, 6), (6, 7), (7, 4), (0, 4), (1, 5), (2, 6), (3, 7)]
        lens = np.stack([np.linalg.norm(X[:, a] - X[:, b], axis=1) for a, b in edges], axis=1)
        ar = lens.max(axis=1) / np.maximum(lens.min(axis=1), 1e-300)
        max_ar, min_ar = float(ar.max()), float(ar.min())
    if not bad_refs and mesh.infinite.size:
        try:
            infinite_kinematics(mesh.nodes[mesh.infinite])
        except ElementGeometryError as exc:
            msgs.append(f"infinite {exc}")
            min_j = min(min_j, -1.0)
    if min_j <= 0:
        msgs.append(f"non-positive Jacobian (element {min_e})")

    sym = np.asarray(mesh.node_sets.get("symmetry", []), dtype=np.int64)
    off = int(np.count_nonzero(mesh.nodes[sym[sym < nn], 1] != 0.0)) if sym.size else 0
    if off:
        msgs.append(f"{off} symmetry nodes off the y=0 plane")
    gap = 0.0
    if mesh.interface_soil.size and not bad_refs:
        gap = float(np.max(np.linalg.norm(mesh.nodes[mesh.interface_soil] - mesh.nodes[mesh.interface_found], axis=1)))
        if gap > 1e-9:
            msgs.append(f"interface pair gap {gap:.3e} m")
    ok = not msgs
    return MeshDiagnostics(
        ok=ok,
        n_nodes=nn,
        n_hex=int(mesh.hexes.shape[0]),
        n_infinite=int(mesh.infinite.shape[0]),
        min_jacobian=min_j,
        min_jacobian_element=min_e,
        max_aspect_ratio=max_ar,
        min_aspect_ratio=min_ar,
        orphan_references=bad_refs,
        unreferenced_nodes=unref,
        symmetry_offplane=off,
        max_interface_gap=gap,
        messages=msgs,
    )


def write_mesh_text(mesh: Mesh, path) -> None:
    """Plain-text export: node table followed by element tables."""
    with open(path, "w") as fh:
        fh.write(f"# nodes {mesh.n_nodes}\n# id x y z\n")
        for i, (x, y, z) in enumerate(mesh.nodes):
            fh.write(f"{i} {float(x)!r} {float(y)!r} {float(z)!r}\n")
        fh.write(f"# hex8 {len(mesh.hexes)}\n# id region material n0..n7\n")
        for i, (conn, reg, mat) in enumerate(zip(mesh.hexes, mesh.hex_region, mesh.hex_material)):
            fh.write(f"{i} {reg} {mat} " + " ".join(map(str, conn)) + "\n")
        fh.write(f"# infinite {len(mesh.infinite)}\n# id n0..n7 pole_x pole_y pole_z\n")
        for i, (conn, pole) in enumerate(zip(mesh.infinite, mesh.infinite_pole)):
            fh.write(f"{i} " + " ".join(map(str, conn)) + " " + " ".join(repr(float(v)) for v in pole) + "\n")
        fh.write(f"# interface {len(mesh.interface_soil)}\n# soil_node foundation_node area\n")
        for s, f, a in zip(mesh.interface_soil, mesh.interface_found, mesh.interface_area):
            fh.write(f"{s} {f} {float(a)!r}\n")


def read_mesh_text(path):
    """Read back the tables written by :func:`write_mesh_text`."""
    sections = {}
    current = None
    with open(path) as fh:
        for line in fh:
            if line.startswith("# ") and len(line.split()) == 3 and line.split()[2].isdigit():
                current = line.split()[1]
                sections[current] = []
            elif line.startswith("#"):
                continue
            else:
                sections[current].append(line.split())
    nodes = np.array([[float(v) for v in row[1:]] for row in sections["nodes"]]).reshape(-1, 3)
    hexes = np.array([[int(v) for v in row[3:]] for row in sections["hex8"]], dtype=np.int64).reshape(-1, 8)
    regions = [row[1] for row in sections["hex8"]]
    inf = np.array([[int(v) for v in row[1:9]] for row in sections["infinite"]], dtype=np.int64).reshape(-1, 8)
    return {"nodes": nodes, "hexes": hexes, "regions": regions, "infinite": inf}
