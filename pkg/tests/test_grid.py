import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dtnlab.errors import (
    Disconnected,
    DomainError,
    EmptyInterface,
    FaceAlreadyLabeled,
    SignChangeWithoutSeparator,
)
from dtnlab.grid import (
    DIRICHLET,
    NEUMANN,
    OMEGA1,
    OMEGA2,
    SIGMA,
    build_interval,
    build_mask_domain,
    build_rectangle,
    circle,
    lshape_mask,
    partition_by_line,
    partition_by_sign,
    periodic_identification,
    torus,
)


def test_interval_examples():
    d = build_interval(4, 1.0, "dirichlet", "dirichlet")
    assert d.n_lattice == 5 and d.spacing == (0.25,)
    d = build_interval(2, 1.0, "neumann", "neumann")
    assert d.n_lattice == 3
    assert list(d.labels[[0, 2]]) == [NEUMANN, NEUMANN]
    d = build_interval(2000, 2.0, "dirichlet", "neumann")
    assert d.labels[0] == DIRICHLET and d.labels[-1] == NEUMANN


@pytest.mark.parametrize("args", [(1, 1.0), (4, 0.0), (4, -1.0)])
def test_interval_rejects_degenerate(args):
    with pytest.raises(DomainError):
        build_interval(*args, "dirichlet", "dirichlet")


def test_rectangle_counts():
    d = build_rectangle(4, 4, 1.0, 1.0, "dirichlet")
    assert d.n_lattice == 25
    assert len(d.free_vertices()) == 9
    d = build_rectangle(60, 36, 1.0, 0.6, "dirichlet")
    assert d.spacing == pytest.approx((1 / 60, 0.6 / 36))


def test_rectangle_half_paired_sides_rejected():
    with pytest.raises(FaceAlreadyLabeled):
        build_rectangle(8, 8, 1, 1, {"left": "dirichlet", "bottom": "dirichlet", "right": None, "top": None})


def test_rectangle_dirichlet_wins_corners():
    d = build_rectangle(4, 4, 1, 1, {"left": "neumann", "right": "neumann", "bottom": "dirichlet", "top": "neumann"})
    grid = d.labels.reshape(d.shape)
    assert grid[0, 0] == DIRICHLET and grid[0, -1] == NEUMANN


def test_mask_domains():
    d = build_mask_domain(lshape_mask(4), 0.125, "dirichlet")
    assert d.n_lattice == 81 and int(d.vertex_mask.sum()) == 81 - 16
    # two blocks joined by a one-cell neck
    mask = np.zeros((11, 5), dtype=bool)
    mask[:4, :] = True
    mask[7:, :] = True
    mask[3:8, 1:3] = True
    build_mask_domain(mask, 0.1, "neumann")
    apart = np.zeros((9, 4), dtype=bool)
    apart[:3] = True
    apart[6:] = True
    with pytest.raises(Disconnected):
        build_mask_domain(apart, 0.1, "dirichlet")


def test_line_partition_interval():
    d = build_interval(8, 2.0, "dirichlet", "dirichlet")
    p = partition_by_line(d, 0, 4)
    assert list(p.sigma) == [4]
    assert d.coords()[4, 0] == pytest.approx(1.0)


def test_line_partition_excludes_dirichlet_endpoints():
    d = build_rectangle(6, 4, 1.0, 1.0, "dirichlet")
    p = partition_by_line(d, 0, 3)
    assert len(p.sigma) == 3
    n = build_rectangle(6, 4, 1.0, 1.0, "neumann")
    assert len(partition_by_line(n, 0, 3).sigma) == 5


def test_line_partition_outside_domain():
    d = build_rectangle(6, 4, 1.0, 1.0, "dirichlet")
    with pytest.raises(DomainError):
        partition_by_line(d, 0, 0)
    with pytest.raises(DomainError):
        partition_by_line(d, 1, 7)


def test_line_partition_all_dirichlet_line():
    # a strip one cell wide has only boundary vertices, so a cut across it
    # leaves no free Sigma vertex
    d = build_mask_domain(np.ones((5, 2), dtype=bool), 0.25, "dirichlet")
    with pytest.raises(EmptyInterface):
        partition_by_line(d, 0, 2)


def test_flip_swaps_sides_and_keeps_sigma():
    d = build_rectangle(10, 6, 1.0, 1.0, "neumann")
    a = partition_by_line(d, 1, 2)
    b = partition_by_line(d, 1, 2, flip=True)
    np.testing.assert_array_equal(a.sigma, b.sigma)
    np.testing.assert_array_equal(a.swapped().side, b.side)


@settings(max_examples=40, deadline=None)
@given(st.integers(2, 12), st.integers(2, 12), st.integers(0, 1), st.data())
def test_line_partitions_are_separators(nx, ny, axis, data):
    bc = data.draw(st.sampled_from(["dirichlet", "neumann"]))
    d = build_rectangle(nx, ny, 1.0, 1.0, bc)
    index = data.draw(st.integers(1, (nx, ny)[axis] - 1))
    try:
        p = partition_by_line(d, axis, index)
    except EmptyInterface:
        return
    e = d.edges()
    su, sv = p.side[e[:, 0]], p.side[e[:, 1]]
    assert not np.any((su == OMEGA1) & (sv == OMEGA2) | (su == OMEGA2) & (sv == OMEGA1))
    assert not np.any(d.labels[p.sigma] == DIRICHLET)


def test_sign_partition_examples():
    d = build_interval(2, 1.0, "neumann", "neumann")
    p = partition_by_sign(d, [1.0, 0.0, -1.0], 1e-8)
    assert list(p.sigma) == [1]
    assert list(p.side) == [OMEGA1, SIGMA, OMEGA2]
    with pytest.raises(SignChangeWithoutSeparator):
        partition_by_sign(d, [1.0, 0.5, -1.0], 1e-8)


def test_sign_partition_rectangle_mode_midline():
    d = build_rectangle(10, 8, 1.0, 0.6, "dirichlet")
    x, y = d.coords().T
    vals = np.sin(np.pi * x) * np.sin(2 * np.pi * y / 0.6)
    p = partition_by_sign(d, vals, 1e-9)
    ys = y[p.sigma]
    np.testing.assert_allclose(ys, 0.3)
    assert len(p.sigma) == 9


def test_periodic_examples():
    c = circle(6, 1.0)
    assert c.periodic_pairs.tolist() == [[0, 6]]
    t = torus(4)
    assert t.periodic_axes == (0, 1)
    with pytest.raises(FaceAlreadyLabeled):
        periodic_identification(build_interval(4, 1.0, "dirichlet", "dirichlet"), 0)


def test_unrolling_count():
    for dom in (circle(7), torus(5)):
        rep = dom.quotient()
        classes = len(np.unique(rep[dom.vertex_mask.ravel()]))
        gamma1 = np.unique(rep[dom.seam_vertices()])
        assert classes + len(dom.seam_vertices()) - len(gamma1) == int(dom.vertex_mask.sum())
