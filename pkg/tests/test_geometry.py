import math

import numpy as np
import pytest
import shapely
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.spatial import ConvexHull

from starnav.errors import GeometryError, NoValidCenter
from starnav.geometry import (
    Circle,
    ConvexAtom,
    ConvexPolygon,
    DiscPolygon,
    Polygon,
    clearance,
    cluster_intersecting,
    contains,
    convex_decomposition,
    convex_hull,
    distance,
    from_region,
    inflate,
    intersects,
    kernel,
    monotone_chain,
    starshaped_hull,
    triangulate,
)
from starnav.geometry.primitives import AtomBatch

SQUARE = [(0, 0), (1, 0), (1, 1), (0, 1)]
ELL = [(0, 0), (2, 0), (2, 1), (1, 1), (1, 2), (0, 2)]

coord = st.floats(-3.0, 3.0, allow_nan=False)
point = st.tuples(coord, coord)


def regular(c, r, k, phase=0.0):
    th = phase + 2 * np.pi * np.arange(k) / k
    return np.asarray(c) + r * np.stack([np.cos(th), np.sin(th)], axis=1)


@st.composite
def convex_polys(draw):
    c = draw(point)
    r = draw(st.floats(0.1, 1.5))
    k = draw(st.integers(3, 8))
    phase = draw(st.floats(0, 1))
    return ConvexPolygon(regular(c, r, k, phase))


@st.composite
def regions(draw):
    kind = draw(st.sampled_from(["circle", "convex", "ell", "disc"]))
    c = np.array(draw(point))
    if kind == "circle":
        return Circle(c, draw(st.floats(0.05, 1.5)))
    if kind == "convex":
        return draw(convex_polys())
    s = draw(st.floats(0.3, 1.5))
    ell = Polygon(c + s * np.asarray(ELL, float))
    if kind == "ell":
        return ell
    return inflate(ell, draw(st.floats(0.01, 0.5)))


def shapely_signed(region, P):
    """Reference signed distance through shapely (fine arc resolution)."""
    g = region.to_shapely(256)
    pts = shapely.points(P)
    d = shapely.distance(g.boundary, pts)
    return np.where(shapely.contains(g, pts), -d, d)


# membership and distance


def test_membership_examples():
    c = Circle((0, 0), 1)
    assert contains(c, (0, 0), closed=True)
    assert not contains(c, (1, 0), closed=False)
    assert contains(c, (1, 0), closed=True)
    assert contains(ConvexPolygon(SQUARE), (0.5, 0.5))


def test_distance_examples():
    c = Circle((0, 0), 1)
    assert distance(c, (3, 0)) == pytest.approx(2.0)
    assert distance(c, (0, 0)) == pytest.approx(-1.0)
    assert distance(ConvexPolygon(SQUARE), (2, 2)) == pytest.approx(math.sqrt(2))
    # dense boundary sampling agrees
    t = np.linspace(0, 1, 4001)
    B = np.concatenate([np.stack([t, 0 * t], 1), np.stack([1 + 0 * t, t], 1), np.stack([t, 1 + 0 * t], 1)])
    assert np.min(np.hypot(*(B - (2, 2)).T)) == pytest.approx(math.sqrt(2), abs=1e-9)


@settings(max_examples=60)
@given(regions(), st.lists(point, min_size=1, max_size=20))
def test_signed_distance_matches_shapely(region, pts):
    P = np.array(pts, float)
    ref = shapely_signed(region, P)
    got = region.distance(P)
    outside = ref > 1e-6
    # outside: the Euclidean distance; inside: negative
    assert np.allclose(got[outside], ref[outside], atol=1e-3 * max(1.0, getattr(region, "radius", 1.0)))
    assert np.all(got[ref < -1e-3] < 0)


def test_bad_shapes_are_rejected():
    with pytest.raises(GeometryError):
        Circle((0, 0), 0.0)
    with pytest.raises(GeometryError):
        ConvexPolygon(ELL)
    with pytest.raises(GeometryError):
        Polygon([(0, 0), (1, 1), (1, 0), (0, 1)])
    with pytest.raises(GeometryError):
        inflate(Circle((0, 0), 1), -0.1)


# inflation


def test_inflate_examples():
    c = inflate(Circle((0, 0), 1), 0.5)
    assert isinstance(c, Circle) and c.radius == 1.5 and np.all(c.center == 0)
    sq = ConvexPolygon(SQUARE)
    assert inflate(sq, 0.0) is sq
    D = inflate(sq, 0.3)
    exact = 1 + 4 * 0.3 + math.pi * 0.09
    assert D.area() == pytest.approx(exact, abs=1e-4)
    # Monte-Carlo membership
    rng = np.random.default_rng(0)
    Q = rng.uniform(-0.3, 1.3, (200000, 2))
    frac = np.mean(D.contains(Q))
    assert frac * 1.6 ** 2 == pytest.approx(exact, abs=1e-2)


@settings(max_examples=60)
@given(regions(), st.floats(0.0, 1.0), st.lists(point, min_size=1, max_size=10))
def test_inflation_shifts_outside_distance(region, rho, pts):
    P = np.array(pts, float)
    d0 = region.distance(P)
    d1 = inflate(region, rho).distance(P)
    far = d0 > 0
    assert np.allclose(d1[far], d0[far] - rho, atol=1e-9)


# intersection and clustering


def test_intersection_examples():
    assert not intersects(Circle((0, 0), 1), Circle((3, 0), 1))
    assert intersects(Circle((0, 0), 1), Circle((1.5, 0), 1))
    sq = ConvexPolygon(SQUARE)
    c = Circle((1.2, 0.5), 0.3)
    assert distance(sq, c.center) == pytest.approx(0.2)
    assert intersects(sq, c)


def test_clusters():
    disjoint = [Circle((0, 0), 1), Circle((3, 0), 1), Circle((6, 0), 1)]
    assert [len(g) for g in cluster_intersecting(disjoint)] == [1, 1, 1]
    chain = [Circle((0, 0), 1), Circle((1.8, 0), 1), Circle((3.6, 0), 1)]
    assert not intersects(chain[0], chain[2])
    assert [len(g) for g in cluster_intersecting(chain)] == [3]


@settings(max_examples=40)
@given(st.lists(regions(), min_size=1, max_size=7))
def test_clusters_are_connected_components(obs):
    groups = cluster_intersecting(obs)
    assert sorted(id(o) for g in groups for o in g) == sorted(id(o) for o in obs)
    ref = [o.to_shapely(64) for o in obs]
    for a in range(len(groups)):
        for b in range(a + 1, len(groups)):
            for x in groups[a]:
                for y in groups[b]:
                    gx, gy = ref[obs.index(x)], ref[obs.index(y)]
                    assert gx.distance(gy) > 1e-6


# hulls


def test_convex_hull_examples():
    sq = ConvexPolygon(SQUARE)
    assert convex_hull(sq) is sq
    H = convex_hull(Polygon(ELL))
    assert sorted(map(tuple, H.vertices.round(12).tolist())) == sorted([(0, 0), (2, 0), (2, 1), (1, 2), (0, 2)])
    two = convex_hull([Circle((0, 0), 1), Circle((2, 0), 1)])
    assert isinstance(two, DiscPolygon)
    assert two.area() == pytest.approx(math.pi + 4.0, abs=1e-3)
    Q = np.random.default_rng(1).uniform(-1, 3, (5000, 2))
    union = Circle((0, 0), 1).contains(Q) | Circle((2, 0), 1).contains(Q)
    assert np.all(two.contains(Q)[union])


@settings(max_examples=60)
@given(st.lists(st.tuples(st.integers(-300, 300), st.integers(-300, 300)), min_size=3, max_size=40, unique=True))
def test_monotone_chain_matches_qhull(pts):
    P = np.array(pts, float) / 100.0
    H = monotone_chain(P)
    try:
        ref = ConvexHull(P)
    except Exception:
        return  # degenerate (collinear) input
    if ref.volume < 1e-9:
        return
    assert len(H) >= 3
    assert shapely.Polygon(H).area == pytest.approx(ref.volume, rel=1e-9, abs=1e-12)
    # counter-clockwise
    assert shapely.Polygon(H).exterior.is_ccw


def test_kernel_of_ell_and_star():
    K = kernel(np.asarray(ELL, float))
    assert shapely.Polygon(K).area == pytest.approx(1.0)
    assert shapely.Polygon(K).buffer(1e-9).contains(shapely.Point(0.5, 0.5))
    # a comb has an empty kernel
    comb = np.array([(0, 0), (5, 0), (5, 3), (4, 3), (4, 1), (3, 1), (3, 3), (2, 3), (2, 1), (1, 1), (1, 3), (0, 3)], float)
    assert len(kernel(comb)) == 0


@settings(max_examples=40)
@given(st.integers(5, 14), st.integers(0, 10 ** 6))
def test_kernel_points_see_every_vertex(k, seed):
    rng = np.random.default_rng(seed)
    th = np.sort(rng.uniform(0, 2 * np.pi, k))
    V = np.stack([np.cos(th), np.sin(th)], 1) * rng.uniform(0.3, 1.0, (k, 1))
    poly = shapely.Polygon(V)
    if not poly.is_valid or not poly.exterior.is_ccw:
        return
    K = kernel(V)
    if len(K) == 0:
        return
    c = np.asarray(shapely.Polygon(K).centroid.coords[0])
    grown = poly.buffer(1e-9)
    for v in V:
        assert grown.covers(shapely.LineString([c, v]))


# decomposition


@pytest.mark.parametrize("V", [SQUARE, ELL, [(0, 0), (4, 0), (4, 1), (3, 1), (3, 3), (1, 3), (1, 1), (0, 1)]])
def test_triangulation_and_decomposition_cover_the_polygon(V):
    V = np.asarray(V, float)
    area = shapely.Polygon(V).area
    tris = triangulate(V)
    assert len(tris) == len(V) - 2
    assert sum(shapely.Polygon(V[list(t)]).area for t in tris) == pytest.approx(area)
    pieces = convex_decomposition(V)
    assert sum(shapely.Polygon(p).area for p in pieces) == pytest.approx(area)
    for p in pieces:
        ConvexPolygon(p)  # raises when not convex
    assert shapely.union_all([shapely.Polygon(p) for p in pieces]).symmetric_difference(shapely.Polygon(V)).area < 1e-9


# atom batches (compiled kernel against the per-atom reference)


@settings(max_examples=50)
@given(st.lists(regions(), min_size=1, max_size=6), st.lists(point, min_size=1, max_size=30))
def test_atom_batch_matches_single_atoms(obs, pts):
    atoms = [a for o in obs for a in o.atoms()]
    P = np.array(pts, float)
    D = AtomBatch(atoms).distances(P)
    ref = np.column_stack([a.distance(P) for a in atoms])
    assert np.allclose(D, ref, atol=1e-12)
    # the atom minimum is exact outside; inside a union the depth can exceed any single piece
    got, ref = AtomBatch(atoms).clearance(P), clearance(obs, P)
    out = ref >= 0
    assert np.allclose(got[out], ref[out], atol=1e-12)
    deep = ref < -1e-12
    assert np.all(got[deep] < 0) and np.all(got[~out] >= ref[~out] - 1e-12)


def test_atom_batch_degenerate_atoms():
    atoms = [ConvexAtom([(0, 0)], 0.5), ConvexAtom([(2, 0), (3, 0)], 0.25)]
    P = np.array([(0, 0), (1, 0), (2.5, 1), (4, 0)], float)
    D = AtomBatch(atoms).distances(P)
    assert np.allclose(D[:, 0], [-0.5, 0.5, math.hypot(2.5, 1) - 0.5, 3.5])
    assert np.allclose(D[:, 1], [1.75, 0.75, 0.75, 0.75])
    assert AtomBatch([]).distances(P).shape == (4, 0)


# star obstacles


def test_convex_regions_are_their_own_star():
    c = from_region(Circle((1, 2), 0.5))
    assert np.allclose(c.center, (1, 2))
    assert c.gamma(np.array([2.0, 2.0])) == pytest.approx(2.0)
    sq = from_region(ConvexPolygon(SQUARE))
    assert np.allclose(sq.center, (0.5, 0.5))
    assert sq.area() == pytest.approx(1.0)


def _ray_crossings(shape, c, angles, far=20.0):
    out = []
    for a in angles:
        ray = shapely.LineString([c, c + far * np.array([math.cos(a), math.sin(a)])])
        out.append(len(shapely.get_parts(ray.intersection(shape.exterior))))
    return np.array(out)


def test_two_circle_star_is_starshaped_about_its_center():
    star = starshaped_hull([Circle((0, 0), 1), Circle((1.5, 0), 1)])
    shape = star.to_shapely(2880)
    assert shape.is_valid
    # both circles lie inside: gamma <= 1 on their boundaries
    B = np.concatenate([regular((0, 0), 1, 720), regular((1.5, 0), 1, 720)])
    assert np.max(star.gamma(B)) <= 1.0 + 1e-9
    crossings = _ray_crossings(shape, star.center, np.linspace(0, 2 * np.pi, 720, endpoint=False))
    assert np.all(crossings == 1)


def test_starshaped_hull_excludes_points_and_respects_budget():
    ell = Polygon(ELL)
    inner = (1.6, 1.6)  # inside the convex hull, outside the L
    star = starshaped_hull([ell], excluded_points=[inner, (5.0, 5.0)])
    assert star.gamma(np.array(inner)) >= 1.0
    assert np.all(star.gamma(np.array(ELL, float) * 0.999 + 0.0005) <= 1.0 + 1e-9)
    with pytest.raises(NoValidCenter):
        starshaped_hull([Circle((0, 0), 1), Circle((1.5, 0), 1)], expired=lambda: True)


@settings(max_examples=25)
@given(st.integers(2, 4), st.integers(0, 10 ** 6))
def test_random_cluster_star_properties(n, seed):
    rng = np.random.default_rng(seed)
    obs = [Circle((0, 0), rng.uniform(0.3, 1.0))]
    for _ in range(n - 1):
        a = rng.uniform(0, 2 * np.pi)
        r = rng.uniform(0.3, 1.0)
        obs.append(Circle(obs[-1].center + 0.9 * (obs[-1].radius + r) * np.array([math.cos(a), math.sin(a)]), r))
    try:
        star = starshaped_hull(obs)
    except NoValidCenter:
        return
    shape = star.to_shapely(1440)
    crossings = _ray_crossings(shape, star.center, np.linspace(0, 2 * np.pi, 360, endpoint=False))
    assert np.all(crossings == 1)
    for o in obs:
        B = o.to_shapely(64).exterior.coords
        assert np.all(star.gamma(np.array(B)) <= 1.0 + 1e-6)
