# coding=utf8
"""Triangulations with tagged boundaries.

Channel parts are triangulated with Triangle (constrained Delaunay with a
minimum angle) and refined toward a size function, ligament tubes are
mapped structured grids along the centerline. Up to x = -CORE_EXTENT the
half mesh does not depend on the truncation abscissa; a structured strip
carries it out to x = -R. The full domain mesh is the reflection of the
half domain mesh across x = 0.
"""
from types import MappingProxyType

import numpy as np
import triangle
from scipy.spatial import cKDTree

__all__ = [
    'Mesh',
    'build_mesh',
    'channel_mesh',
    'junction_mesh',
    'MeshError',
    'WALL',
    'TRUNCATION_LEFT',
    'TRUNCATION_RIGHT',
    'SIGMA',
    'SYMMETRY',
    'CAP',
    'ARC',
    'TAG_NAMES',
]

WALL = 1
TRUNCATION_LEFT = 2
TRUNCATION_RIGHT = 3
SIGMA = 4
SYMMETRY = 5
# auxiliary domains
CAP = 6
ARC = 7

TAG_NAMES = MappingProxyType({
    WALL: 'WALL',
    TRUNCATION_LEFT: 'TRUNCATION_LEFT',
    TRUNCATION_RIGHT: 'TRUNCATION_RIGHT',
    SIGMA: 'SIGMA',
    SYMMETRY: 'SYMMETRY',
    CAP: 'CAP',
    ARC: 'ARC',
})

CHANNEL_REGION = 0
GEOMETRIC_TOL = 1e-9
MIN_ANGLE = 30
# area refinement toward the size function
REFINE_PASSES = 8
AREA_SLACK = 1.5
# channel triangulated on x >= -CORE_EXTENT, structured strip beyond
CORE_EXTENT = 1.
STRIP_STEPS = 2


class MeshError(Exception):
    """Class for mesh construction errors."""
    pass


class Mesh(object):
    """Conforming triangulation with tagged boundary edges.

    Attributes
    ----------
    nodes : numpy.ndarray, shape (n_nodes, 2)
    triangles : numpy.ndarray, shape (n_triangles, 3)
        Positively oriented vertex triples.
    boundary_edges : numpy.ndarray, shape (n_edges, 2)
        Boundary edges oriented with the domain on their left.
    boundary_tags : numpy.ndarray, shape (n_edges,)
    regions : numpy.ndarray, shape (n_triangles,)
        0 for channels, k + 1 for the k-th ligament.
    info : dict
        Construction parameters: h, levels, R, ...
    """

    def __init__(self, nodes, triangles, boundary_edges, boundary_tags,
                 regions=None, info=None):
        nodes = np.array(nodes, dtype=float)
        triangles = np.array(triangles, dtype=np.int64)

        signed = _signed_areas(nodes, triangles)
        flip = signed < 0
        triangles[flip] = triangles[flip][:, ::-1]

        if regions is None:
            regions = np.zeros(len(triangles), dtype=np.int64)

        self.nodes = nodes
        self.triangles = triangles
        self.boundary_edges = np.array(boundary_edges, dtype=np.int64)
        self.boundary_tags = np.array(boundary_tags, dtype=np.int64)
        self.regions = np.array(regions, dtype=np.int64)
        self.info = dict(info or {})

        for array in (self.nodes, self.triangles, self.boundary_edges,
                      self.boundary_tags, self.regions):
            array.flags.writeable = False

    def __repr__(self):
        return 'Mesh(nodes={}, triangles={}, boundary_edges={})'.format(
            len(self.nodes), len(self.triangles), len(self.boundary_edges))

    @property
    def n_nodes(self):
        return len(self.nodes)

    @property
    def n_triangles(self):
        return len(self.triangles)

    @property
    def h(self):
        return self.info.get('h')

    def areas(self):
        return _signed_areas(self.nodes, self.triangles)

    def area(self):
        return float(self.areas().sum())

    def quality(self):
        """Return 4√3·area / Σ edge² per triangle, 1 for equilateral."""
        p = self.nodes[self.triangles]
        edges = p[:, [1, 2, 0]] - p
        squares = np.sum(edges ** 2, axis=(1, 2))
        return 4 * np.sqrt(3) * self.areas() / squares

    def edges_with_tag(self, tag):
        return self.boundary_edges[self.boundary_tags == tag]

    def nodes_with_tag(self, tag):
        return np.unique(self.edges_with_tag(tag))

    def tags(self):
        """Return {tag name: edge count}."""
        names, counts = np.unique(self.boundary_tags, return_counts=True)
        return {TAG_NAMES[int(n)]: int(c) for n, c in zip(names, counts)}

    def region_nodes(self, region):
        return np.unique(self.triangles[self.regions == region])

    def signature(self):
        """Identify meshes built from the same half mesh."""
        keys = ('h', 'levels', 'n_layers', 'half_nodes')
        return tuple(self.info.get(key) for key in keys)

    def check_quality(self, threshold):
        """Raise MeshError if any triangle has a quality below threshold."""
        quality = self.quality()
        worst = int(np.argmin(quality))
        if quality[worst] < threshold:
            center = self.nodes[self.triangles[worst]].mean(axis=0)
            msg = ('Degenerate triangle of quality {:.3g} near '
                   '({:.6f}, {:.6f})')
            raise MeshError(msg.format(quality[worst], *center))
        return float(quality[worst])

    def check_conforming(self, tol=GEOMETRIC_TOL):
        """Check that the triangulation has no hanging nodes.

        Raises
        ------
        MeshError
            On inverted triangles, duplicated nodes, edges shared by more
            than two triangles or nodes lying inside boundary edges.
        """
        if np.any(self.areas() <= 0):
            raise MeshError('Mesh has inverted or flat triangles')

        pairs = cKDTree(self.nodes).query_pairs(tol, output_type='ndarray')
        if len(pairs):
            msg = 'Duplicated node at ({:.6f}, {:.6f})'
            raise MeshError(msg.format(*self.nodes[pairs[0, 0]]))

        keys = np.sort(_triangle_edges(self.triangles), axis=1)
        _, counts = np.unique(keys, axis=0, return_counts=True)
        if np.any(counts > 2):
            raise MeshError('Edge shared by more than two triangles')

        degree = np.bincount(self.boundary_edges.ravel(),
                             minlength=self.n_nodes)
        bad = np.flatnonzero((degree != 0) & (degree != 2))
        if bad.size:
            msg = 'Boundary is not a union of loops at ({:.6f}, {:.6f})'
            raise MeshError(msg.format(*self.nodes[bad[0]]))

        vertices = np.unique(self.boundary_edges)
        tree = cKDTree(self.nodes[vertices])
        for a, b in self.boundary_edges:
            pa, pb = self.nodes[a], self.nodes[b]
            length = np.linalg.norm(pb - pa)
            for k in tree.query_ball_point((pa + pb) / 2, length / 2 + tol):
                v = vertices[k]
                if v in (a, b):
                    continue
                if _segment_distance(self.nodes[v], pa, pb) < tol:
                    msg = 'Hanging node at ({:.6f}, {:.6f})'
                    raise MeshError(msg.format(*self.nodes[v]))

    def mirror(self):
        """Return the union of the mesh and its reflection across x = 0.

        Nodes on the axis are shared, the half mesh nodes keep their
        indices and the reflected copies follow them.
        """
        if not np.any(self.boundary_tags == SIGMA) and \
                not np.any(self.boundary_tags == SYMMETRY):
            raise MeshError('Only half meshes ending on x = 0 can be mirrored')

        n = self.n_nodes
        on_axis = np.abs(self.nodes[:, 0]) <= GEOMETRIC_TOL
        index = np.empty(n, dtype=np.int64)
        index[on_axis] = np.flatnonzero(on_axis)
        index[~on_axis] = n + np.arange(np.count_nonzero(~on_axis))

        reflected = self.nodes[~on_axis] * np.array([-1., 1.])
        nodes = np.vstack([self.nodes, reflected])
        triangles = np.vstack([self.triangles,
                               index[self.triangles][:, ::-1]])
        regions = np.concatenate([self.regions, self.regions])

        info = dict(self.info, domain='full', half_nodes=n)
        edges = _boundary_edges(triangles)
        tags = _tag_waveguide(nodes, edges, info['R'], info['ligaments'])
        return Mesh(nodes, triangles, edges, tags, regions=regions,
                    info=info)


def _signed_areas(nodes, triangles):
    p = nodes[triangles]
    u = p[:, 1] - p[:, 0]
    v = p[:, 2] - p[:, 0]
    return 0.5 * (u[:, 0] * v[:, 1] - u[:, 1] * v[:, 0])


def _segment_distance(point, a, b):
    ab = b - a
    t = np.dot(point - a, ab) / np.dot(ab, ab)
    if t <= 0 or t >= 1:
        return np.inf
    return np.linalg.norm(a + t * ab - point)


def _triangle_edges(triangles):
    return triangles[:, [0, 1, 1, 2, 2, 0]].reshape(-1, 2)


def _boundary_edges(triangles):
    """Edges used by exactly one triangle, domain on the left."""
    edges = _triangle_edges(triangles)
    keys = np.sort(edges, axis=1)
    _, inverse, counts = np.unique(keys, axis=0, return_inverse=True,
                                   return_counts=True)
    return edges[counts[inverse.reshape(-1)] == 1]


def _tag_waveguide(nodes, edges, R, ligaments, tol=GEOMETRIC_TOL):
    x = nodes[edges, 0]
    tags = np.full(len(edges), WALL, dtype=np.int64)
    tags[np.all(np.abs(x + R) < tol, axis=1)] = TRUNCATION_LEFT
    tags[np.all(np.abs(x - R) < tol, axis=1)] = TRUNCATION_RIGHT
    tags[np.all(np.abs(x) < tol, axis=1)] = SIGMA if ligaments else SYMMETRY
    return tags


def _merge_nodes(nodes, triangles, tol=GEOMETRIC_TOL):
    """Merge coincident nodes and drop unused ones."""
    pairs = cKDTree(nodes).query_pairs(tol, output_type='ndarray')
    parent = np.arange(len(nodes))
    if len(pairs):
        parent[pairs.max(axis=1)] = pairs.min(axis=1)
        while True:
            grand = parent[parent]
            if np.array_equal(grand, parent):
                break
            parent = grand
    triangles = parent[triangles]
    used = np.unique(triangles)
    remap = np.full(len(nodes), -1, dtype=np.int64)
    remap[used] = np.arange(len(used))
    return nodes[used], remap[triangles]


def _sample_curve(curve, size, start=None, end=None, n_probe=4001):
    """Sample a parametric curve t -> point, t in [0, 1], with a spacing
    following the size function."""
    t = np.linspace(0, 1, n_probe)
    points = curve(t)
    step = np.linalg.norm(np.diff(points, axis=0), axis=1)
    middle = (points[1:] + points[:-1]) / 2
    cumulative = np.concatenate([[0.], np.cumsum(step / size(middle))])
    count = max(1, int(np.ceil(cumulative[-1] - 1e-9)))
    targets = np.linspace(0, cumulative[-1], count + 1)
    samples = curve(np.interp(targets, cumulative, t))
    samples[0] = points[0] if start is None else start
    samples[-1] = points[-1] if end is None else end
    return samples


def _segment(a, b):
    a, b = np.asarray(a, dtype=float), np.asarray(b, dtype=float)
    return lambda t: a[None, :] + np.asarray(t)[:, None] * (b - a)[None, :]


def _sample_segment(a, b, size):
    a, b = np.asarray(a, dtype=float), np.asarray(b, dtype=float)
    return _sample_curve(_segment(a, b), size, start=a, end=b)


def _size_function(h, h_fine, centers, grading):
    """Local size min(h, h_fine + grading·distance to the centers)."""
    centers = np.atleast_2d(np.asarray(centers, dtype=float))

    def size(points):
        distance = np.min(np.linalg.norm(
            points[:, None, :] - centers[None, :, :], axis=2), axis=1)
        return np.minimum(h, h_fine + grading * distance)

    return size


def _loop(pieces):
    """Chain sampled pieces into a closed vertex loop."""
    loop = [pieces[0]]
    for piece in pieces[1:]:
        loop.append(piece[1:])
    loop = np.vstack(loop)
    if np.allclose(loop[0], loop[-1], atol=GEOMETRIC_TOL, rtol=0):
        loop = loop[:-1]
    return loop


def _triangulate(vertices, max_area, size=None, min_angle=MIN_ANGLE):
    """Constrained Delaunay triangulation of a closed vertex loop.

    Boundary vertices are kept as given. With a size function the result
    is refined until every triangle is at most ~ size(centroid)² in area.
    """
    n = len(vertices)
    segments = np.column_stack([np.arange(n), (np.arange(n) + 1) % n])
    flags = 'pq{}Ya{:.12f}Q'.format(min_angle, max_area)
    result = triangle.triangulate(
        {'vertices': vertices, 'segments': segments}, flags)
    if 'triangles' not in result or not len(result['triangles']):
        raise MeshError('Triangulation of the channel failed')

    for _ in range(REFINE_PASSES if size is not None else 0):
        nodes, triangles = result['vertices'], result['triangles']
        centroids = nodes[triangles].mean(axis=1)
        target = np.minimum(max_area, np.sqrt(3) / 4 * size(centroids) ** 2)
        areas = np.abs(_signed_areas(nodes, triangles))
        if np.all(areas <= AREA_SLACK * target):
            break
        result = triangle.triangulate(
            {'vertices': nodes, 'segments': result['segments'],
             'triangles': triangles,
             'triangle_max_area': np.ascontiguousarray(target)},
            'rpq{}YaQ'.format(min_angle))
    return result['vertices'], result['triangles']


def _channel_part(x_left, x_right, h, clusters, size):
    """Triangulate [x_left, x_right] x [0, 1] keeping the given clusters of
    ordinates on the right edge as vertices."""
    pieces = [_sample_segment((x_left, 0.), (x_right, 0.), size)]
    y = 0.
    for cluster in sorted(clusters, key=lambda c: c[0]):
        cluster = np.asarray(cluster, dtype=float)
        pieces.append(_sample_segment((x_right, y), (x_right, cluster[0]),
                                      size))
        # the first fixed vertex closes the previous piece
        pieces.append(np.column_stack([np.full(len(cluster), x_right),
                                       cluster]))
        y = cluster[-1]
    pieces.append(_sample_segment((x_right, y), (x_right, 1.), size))
    pieces.append(_sample_segment((x_right, 1.), (x_left, 1.), size))
    pieces.append(_sample_segment((x_left, 1.), (x_left, 0.), size))

    return _triangulate(_loop(pieces), max_area=np.sqrt(3) / 4 * h ** 2,
                        size=size)


def _strip_part(x_left, x_right, ordinates, h):
    """Structured grid of [x_left, x_right] x [0, 1] on the ordinates of
    the neighbouring channel edge, columns about h/STRIP_STEPS apart."""
    n_x = max(1, int(np.ceil(STRIP_STEPS * (x_right - x_left) / h)))
    x = np.linspace(x_left, x_right, n_x + 1)
    x[-1] = x_right
    nodes = np.stack(np.meshgrid(x, ordinates, indexing='ij'), axis=-1)

    index = np.arange(nodes.shape[0] * nodes.shape[1]).reshape(
        nodes.shape[:2])
    a = index[:-1, :-1].ravel()
    b = index[1:, :-1].ravel()
    c = index[1:, 1:].ravel()
    d = index[:-1, 1:].ravel()
    triangles = np.vstack([np.column_stack([a, b, c]),
                           np.column_stack([a, c, d])])
    return nodes.reshape(-1, 2), triangles


def _tube_part(centerline, n_layers, ds):
    spec = centerline.spec
    n_s = max(2, int(np.ceil(spec.length / ds)))
    s = np.linspace(0, spec.length, n_s + 1)
    t = np.linspace(-spec.width / 2, spec.width / 2, n_layers + 1)

    points = centerline.point(s)
    normals = centerline.normal(s)
    nodes = points[:, None, :] + t[None, :, None] * normals[:, None, :]
    # the end sections lie exactly on x = -1/2 and x = 0
    nodes[0, :, 0] = -0.5
    nodes[0, :, 1] = spec.y_attach + t
    nodes[-1, :, 0] = 0.

    index = np.arange(nodes.shape[0] * nodes.shape[1]).reshape(
        nodes.shape[:2])
    a = index[:-1, :-1].ravel()
    b = index[1:, :-1].ravel()
    c = index[1:, 1:].ravel()
    d = index[:-1, 1:].ravel()
    triangles = np.vstack([np.column_stack([a, b, c]),
                           np.column_stack([a, c, d])])
    return nodes.reshape(-1, 2), triangles, spec.y_attach + t


def build_mesh(geometry, h=0.05, junction_refine=3, n_layers=3,
               min_quality=0.2, grading=0.3):
    """Triangulate a waveguide geometry.

    Parameters
    ----------
    geometry : modeconv.geometry.WaveguideGeometry
    h : float
        Characteristic size in the channels.
    junction_refine : int
        Number of halvings of h at the attachment points.
    n_layers : int
        Element layers across every ligament, at least 3.
    min_quality : float
        Quality threshold, see Mesh.quality.
    grading : float
        Growth rate of the local size away from the attachment points.

    Returns
    -------
    mesh : Mesh
        Half or full domain mesh, following geometry.domain.

    Raises
    ------
    MeshError
        On degenerate triangles or invalid parameters.
    """
    if h <= 0:
        raise MeshError('Mesh size must be positive, got {}'.format(h))
    if n_layers < 3:
        msg = 'At least 3 layers across ligaments are required, got {}'
        raise MeshError(msg.format(n_layers))

    curves = geometry.centerlines()
    x_right = -geometry.x0

    h_fine = h * 2. ** (-junction_refine)
    for spec in geometry.ligaments:
        h_fine = min(h_fine, spec.width / n_layers)

    centers = [(x_right, spec.y_attach) for spec in geometry.ligaments]
    if centers:
        size = _size_function(h, h_fine, centers, grading)
    else:
        size = _size_function(h, h, [(x_right, 0.5)], 0.)

    tubes = []
    for curve in curves:
        spec = curve.spec
        ds = min(h, 2 * spec.width / n_layers)
        if curve.curvature_max > 0:
            ds = min(ds, 0.05 / curve.curvature_max)
        tubes.append(_tube_part(curve, n_layers, ds))

    x_core = -min(geometry.R, CORE_EXTENT)
    nodes, triangles = _channel_part(
        x_core, x_right, h, [tube[2] for tube in tubes], size)
    nodes = [nodes]
    triangles = [triangles]
    if geometry.R > CORE_EXTENT + GEOMETRIC_TOL:
        edge = np.abs(nodes[0][:, 0] - x_core) < GEOMETRIC_TOL
        strip_nodes, strip_triangles = _strip_part(
            -geometry.R, x_core, np.sort(nodes[0][edge, 1]), h)
        triangles.append(strip_triangles + len(nodes[0]))
        nodes.append(strip_nodes)
    regions = [np.full(sum(len(part) for part in triangles),
                       CHANNEL_REGION)]
    offset = sum(len(part) for part in nodes)
    for k, (tube_nodes, tube_triangles, _) in enumerate(tubes):
        nodes.append(tube_nodes)
        triangles.append(tube_triangles + offset)
        regions.append(np.full(len(tube_triangles), k + 1))
        offset += len(tube_nodes)

    nodes, triangles = _merge_nodes(np.vstack(nodes), np.vstack(triangles))
    regions = np.concatenate(regions)

    info = {
        'h': h,
        'levels': junction_refine,
        'n_layers': n_layers,
        'R': geometry.R,
        'x0': geometry.x0,
        'ligaments': len(geometry.ligaments),
        'domain': 'half',
    }
    info['half_nodes'] = len(nodes)

    edges = _boundary_edges(triangles)
    tags = _tag_waveguide(nodes, edges, geometry.R, len(geometry.ligaments))
    mesh = Mesh(nodes, triangles, edges, tags, regions=regions, info=info)
    mesh.check_quality(min_quality)

    if geometry.domain == 'full':
        mesh = mesh.mirror()
    return mesh


def channel_mesh(R, y_source, h=0.05, levels=3, grading=0.3, refine_radius=0.,
                 refine_h=None):
    """Mesh of the half channel [-R, -1/2] x [0, 1] with a vertex at the
    wall point (-1/2, y_source) and refinement around it.

    Within refine_radius of the source point the local size is at most
    refine_h, then grows at the given grading.
    """
    if not 0 < y_source < 1:
        msg = 'Source ordinate must lie in (0, 1), got {}'
        raise MeshError(msg.format(y_source))
    x_right = -0.5
    center = np.array([x_right, y_source])
    h_fine = h * 2. ** (-levels)
    graded = _size_function(h, h_fine, [center], grading)
    if refine_h is None:
        size = graded
    else:
        def size(points):
            distance = np.linalg.norm(points - center[None, :], axis=1)
            return np.minimum(graded(points), refine_h + grading *
                              np.maximum(distance - refine_radius, 0.))
    nodes, triangles = _channel_part(-R, x_right, h, [[y_source]], size)
    nodes, triangles = _merge_nodes(nodes, triangles)

    edges = _boundary_edges(triangles)
    tags = np.full(len(edges), WALL, dtype=np.int64)
    x = nodes[edges, 0]
    tags[np.all(np.abs(x + R) < GEOMETRIC_TOL, axis=1)] = TRUNCATION_LEFT
    info = {'h': h, 'levels': levels, 'R': R, 'source': y_source,
            'refine_radius': refine_radius, 'refine_h': refine_h}
    return Mesh(nodes, triangles, edges, tags, info=info)


def junction_mesh(rho, L, h=0.05, levels=3, grading=0.25):
    """Mesh of the truncated junction of a unit strip with a half plane.

    The half disk |ξ| < rho, ξ_x < 0 is joined to the strip
    [0, L] x (-1/2, 1/2). Boundary tags: ARC for the circular part, CAP for
    the strip end, WALL elsewhere.
    """
    if rho <= 1 or L <= 0:
        msg = 'Invalid junction truncation: rho = {}, L = {}'
        raise MeshError(msg.format(rho, L))

    corners = np.array([[0., -0.5], [0., 0.5]])
    h_fine = h * 2. ** (-levels)

    def size(points):
        distance = np.min(np.linalg.norm(
            points[:, None, :] - corners[None, :, :], axis=2), axis=1)
        coarse = np.maximum(h, 0.1 * np.linalg.norm(points, axis=1))
        return np.minimum(coarse, h_fine + grading * distance)

    def arc(t):
        angle = np.pi / 2 + np.pi * np.asarray(t)
        return rho * np.column_stack([np.cos(angle), np.sin(angle)])

    pieces = [
        _sample_segment((0., -0.5), (L, -0.5), size),
        _sample_segment((L, -0.5), (L, 0.5), size),
        _sample_segment((L, 0.5), (0., 0.5), size),
        _sample_segment((0., 0.5), (0., rho), size),
        _sample_curve(arc, size, start=(0., rho), end=(0., -rho)),
        _sample_segment((0., -rho), (0., -0.5), size),
    ]
    nodes, triangles = _triangulate(_loop(pieces),
                                    max_area=(0.1 * rho) ** 2, size=size)
    nodes, triangles = _merge_nodes(nodes, triangles)

    edges = _boundary_edges(triangles)
    p = nodes[edges]
    radius = np.linalg.norm(p, axis=2)
    tags = np.full(len(edges), WALL, dtype=np.int64)
    on_arc = (np.all(np.abs(radius - rho) < 1e-9 * rho, axis=1) &
              ~np.all(np.abs(p[:, :, 0]) < GEOMETRIC_TOL, axis=1))
    tags[on_arc] = ARC
    tags[np.all(np.abs(p[:, :, 0] - L) < GEOMETRIC_TOL, axis=1)] = CAP
    info = {'h': h, 'levels': levels, 'rho': rho, 'L': L}
    return Mesh(nodes, triangles, edges, tags, info=info)
