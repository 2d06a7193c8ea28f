import numpy as np
import pytest

from windfound.mesh import GeometryParams, Mesh, gauge_positions

# coarse "desk" meshes keep the FE-level tests at a few seconds each
COARSE = GeometryParams(element_size_near=0.3, element_size_far=0.9)
DESK = GeometryParams(element_size_near=0.25, element_size_far=1.0)


def two_element_mesh(material="soil"):
    """Two stacked unit bricks with the bottom face clamped."""
    X = np.array([[x, y, z] for z in (0.0, 1.0, 2.0) for y in (0.0, 1.0) for x in (0.0, 1.0)])
    X[[9, 10], :2] += [[0.1, -0.05], [0.05, 0.1]]  # distort the middle layer a little
    hexes = np.array([[0, 1, 3, 2, 4, 5, 7, 6], [4, 5, 7, 6, 8, 9, 11, 10]])
    empty = np.zeros(0, dtype=np.int64)
    geom = GeometryParams()
    return Mesh(
        nodes=X,
        hexes=hexes,
        hex_region=np.array(["soil", "soil"]),
        hex_material=np.array([material, material]),
        infinite=np.zeros((0, 8), dtype=np.int64),
        infinite_pole=np.zeros((0, 3)),
        interface_soil=empty,
        interface_found=empty,
        interface_area=np.zeros(0),
        interface_normal=np.zeros((0, 3)),
        node_sets={"fixed": np.array([0, 1, 2, 3])},
        face_sets={},
        geometry=geom,
        sensors=gauge_positions(geom),
        half=False,
        info={"z_soil": [0.0, 1.0]},
    )


@pytest.fixture
def two_elements():
    return two_element_mesh()


# one line per acceptance criterion, echoed after the run
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
