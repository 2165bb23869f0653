"""Latent-position models and random graph generators.

Latent points live on a compact manifold (sphere, unit square, or circle)
and are drawn i.i.d. from a uniform or tilted density.  Graphs over the
points come in two flavors: deterministic connectivity graphs with edges
between points within a radius, and Bernoulli graphs where each pair is an
independent edge with probability ``rho * w(z_i, z_j)`` for a bounded
kernel w.  Everything is a pure function of (configuration, seed).
"""

from __future__ import annotations

import abc
import math
from dataclasses import dataclass

import numpy as np

from .errors import DensityMisconfiguredError, InvalidParameterError
from .rng import RngSeed, Xoshiro256StarStar

_REJECTION_ATTEMPT_CAP = 1_000_000
_ON_MANIFOLD_TOLERANCE = 1e-12


# ---------------------------------------------------------------------------
# Manifolds
# ---------------------------------------------------------------------------


class Manifold(abc.ABC):
    """A compact homogeneous submanifold with closed-form geodesics."""

    kind: str

    @property
    @abc.abstractmethod
    def ambient_dim(self) -> int: ...

    @property
    @abc.abstractmethod
    def intrinsic_dim(self) -> int: ...

    @property
    @abc.abstractmethod
    def diameter(self) -> float:
        """Largest geodesic distance between two points."""

    @property
    @abc.abstractmethod
    def euclidean_diameter(self) -> float:
        """Largest ambient (chordal) distance between two points."""

    @abc.abstractmethod
    def sample_uniform(self, rng: Xoshiro256StarStar, count: int) -> np.ndarray: ...

    @abc.abstractmethod
    def geodesic_matrix(self, xs: np.ndarray, ys: np.ndarray) -> np.ndarray: ...

    @abc.abstractmethod
    def on_manifold(self, points: np.ndarray, tol: float = _ON_MANIFOLD_TOLERANCE) -> bool: ...

    @abc.abstractmethod
    def coordinate_range(self, axis: int) -> tuple[float, float]:
        """Range of one ambient coordinate over the manifold."""

    @abc.abstractmethod
    def region_anchors(self) -> tuple[np.ndarray, np.ndarray]:
        """Two well-separated reference points for two-region placement."""


@dataclass(frozen=True)
class Sphere(Manifold):
    """Round sphere of the given radius embedded in R^3."""

    radius: float = 1.0
    kind = "sphere"

    def __post_init__(self):
        if self.radius <= 0:
            raise InvalidParameterError(f"radius must be positive: {self.radius}")

    @property
    def ambient_dim(self) -> int:
        return 3

    @property
    def intrinsic_dim(self) -> int:
        return 2

    @property
    def diameter(self) -> float:
        return math.pi * self.radius

    @property
    def euclidean_diameter(self) -> float:
        return 2.0 * self.radius

    def sample_uniform(self, rng: Xoshiro256StarStar, count: int) -> np.ndarray:
        points = np.empty((count, 3))
        filled = 0
        while filled < count:
            draws = rng.normals(3 * (count - filled)).reshape(-1, 3)
            norms = np.linalg.norm(draws, axis=1)
            good = norms > 1e-12
            kept = draws[good] / norms[good, None] * self.radius
            points[filled : filled + kept.shape[0]] = kept
            filled += kept.shape[0]
        return points

    def geodesic_matrix(self, xs: np.ndarray, ys: np.ndarray) -> np.ndarray:
        cosines = (xs @ ys.T) / (self.radius * self.radius)
        return self.radius * np.arccos(np.clip(cosines, -1.0, 1.0))

    def on_manifold(self, points: np.ndarray, tol: float = _ON_MANIFOLD_TOLERANCE) -> bool:
        norms = np.linalg.norm(np.atleast_2d(points), axis=1)
        return bool(np.all(np.abs(norms - self.radius) <= tol * max(1.0, self.radius)))

    def coordinate_range(self, axis: int) -> tuple[float, float]:
        return (-self.radius, self.radius)

    def region_anchors(self) -> tuple[np.ndarray, np.ndarray]:
        return (
            np.array([self.radius, 0.0, 0.0]),
            np.array([-self.radius, 0.0, 0.0]),
        )


@dataclass(frozen=True)
class UnitSquare(Manifold):
    """The unit square [0,1]^2 with straight-line geodesics."""

    kind = "unit_square"

    @property
    def ambient_dim(self) -> int:
        return 2

    @property
    def intrinsic_dim(self) -> int:
        return 2

    @property
    def diameter(self) -> float:
        return math.sqrt(2.0)

    @property
    def euclidean_diameter(self) -> float:
        return math.sqrt(2.0)

    def sample_uniform(self, rng: Xoshiro256StarStar, count: int) -> np.ndarray:
        return rng.uniforms(2 * count).reshape(count, 2)

    def geodesic_matrix(self, xs: np.ndarray, ys: np.ndarray) -> np.ndarray:
        return np.sqrt(pairwise_squared_distances(xs, ys))

    def on_manifold(self, points: np.ndarray, tol: float = _ON_MANIFOLD_TOLERANCE) -> bool:
        pts = np.atleast_2d(points)
        return bool(np.all(pts >= -tol) and np.all(pts <= 1.0 + tol))

    def coordinate_range(self, axis: int) -> tuple[float, float]:
        return (0.0, 1.0)

    def region_anchors(self) -> tuple[np.ndarray, np.ndarray]:
        return (np.array([0.25, 0.25]), np.array([0.75, 0.75]))


@dataclass(frozen=True)
class Circle(Manifold):
    """Circle of the given radius embedded in R^2; geodesics are arcs."""

    radius: float = 1.0
    kind = "circle"

    def __post_init__(self):
        if self.radius <= 0:
            raise InvalidParameterError(f"radius must be positive: {self.radius}")

    @property
    def ambient_dim(self) -> int:
        return 2

    @property
    def intrinsic_dim(self) -> int:
        return 1

    @property
    def diameter(self) -> float:
        return math.pi * self.radius

    @property
    def euclidean_diameter(self) -> float:
        return 2.0 * self.radius

    def sample_uniform(self, rng: Xoshiro256StarStar, count: int) -> np.ndarray:
        angles = 2.0 * math.pi * rng.uniforms(count)
        return self.radius * np.column_stack([np.cos(angles), np.sin(angles)])

    def geodesic_matrix(self, xs: np.ndarray, ys: np.ndarray) -> np.ndarray:
        cosines = (xs @ ys.T) / (self.radius * self.radius)
        return self.radius * np.arccos(np.clip(cosines, -1.0, 1.0))

    def on_manifold(self, points: np.ndarray, tol: float = _ON_MANIFOLD_TOLERANCE) -> bool:
        norms = np.linalg.norm(np.atleast_2d(points), axis=1)
        return bool(np.all(np.abs(norms - self.radius) <= tol * max(1.0, self.radius)))

    def coordinate_range(self, axis: int) -> tuple[float, float]:
        return (-self.radius, self.radius)

    def region_anchors(self) -> tuple[np.ndarray, np.ndarray]:
        return (np.array([self.radius, 0.0]), np.array([-self.radius, 0.0]))


def make_manifold(kind: str, radius: float = 1.0) -> Manifold:
    """Build a manifold by kind name: sphere, unit_square, or circle."""
    if kind == "sphere":
        return Sphere(radius)
    if kind == "unit_square":
        return UnitSquare()
    if kind == "circle":
        return Circle(radius)
    raise InvalidParameterError(f"unknown manifold kind: {kind!r}")


def pairwise_squared_distances(xs: np.ndarray, ys: np.ndarray, chunk: int = 512) -> np.ndarray:
    """Squared Euclidean distances between two point sets, computed in chunks."""
    xs = np.atleast_2d(np.asarray(xs, dtype=np.float64))
    ys = np.atleast_2d(np.asarray(ys, dtype=np.float64))
    out = np.empty((xs.shape[0], ys.shape[0]))
    for start in range(0, xs.shape[0], chunk):
        stop = min(start + chunk, xs.shape[0])
        diff = xs[start:stop, None, :] - ys[None, :, :]
        out[start:stop] = np.einsum("ijk,ijk->ij", diff, diff)
    return out


def true_geodesic(manifold: Manifold, x: np.ndarray, y: np.ndarray) -> float:
    """Geodesic distance between two points of the manifold."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if not (manifold.on_manifold(x, tol=1e-8) and manifold.on_manifold(y, tol=1e-8)):
        raise InvalidParameterError("points must lie on the manifold")
    return float(manifold.geodesic_matrix(x[None, :], y[None, :])[0, 0])


# ---------------------------------------------------------------------------
# Densities and placement
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Density:
    """Sampling density over a manifold, relative to the uniform measure.

    ``uniform`` has relative weight 1 everywhere.  ``tilted`` has relative
    weight 1 + strength * coordinate[axis], which must stay positive over
    the manifold; draws use rejection against the uniform proposal.
    """

    kind: str = "uniform"
    axis: int = 0
    strength: float = 0.0

    def __post_init__(self):
        if self.kind not in ("uniform", "tilted"):
            raise InvalidParameterError(f"unknown density kind: {self.kind!r}")
        if self.kind == "uniform" and self.strength != 0.0:
            raise InvalidParameterError("uniform density takes no strength")

    def weight_bounds(self, manifold: Manifold) -> tuple[float, float]:
        """(lower, upper) bounds of the relative weight over the manifold."""
        if self.kind == "uniform":
            return (1.0, 1.0)
        if not 0 <= self.axis < manifold.ambient_dim:
            raise DensityMisconfiguredError(
                f"tilt axis {self.axis} outside ambient dimension {manifold.ambient_dim}"
            )
        lo, hi = manifold.coordinate_range(self.axis)
        candidates = (1.0 + self.strength * lo, 1.0 + self.strength * hi)
        bounds = (min(candidates), max(candidates))
        if bounds[0] <= 0.0:
            raise DensityMisconfiguredError(
                f"tilted density is not positive on the manifold: lower bound {bounds[0]}"
            )
        return bounds

    def relative_weight(self, points: np.ndarray) -> np.ndarray:
        if self.kind == "uniform":
            return np.ones(points.shape[0])
        return 1.0 + self.strength * points[:, self.axis]


@dataclass(frozen=True)
class Placement:
    """How target points are placed: i.i.d. from the density, or from two
    geodesic balls around fixed anchors (for figure-style layouts)."""

    mode: str = "iid"
    region_radius: float | None = None

    def __post_init__(self):
        if self.mode not in ("iid", "two_regions"):
            raise InvalidParameterError(f"unknown placement mode: {self.mode!r}")
        if self.region_radius is not None and self.region_radius <= 0:
            raise InvalidParameterError("region_radius must be positive when given")


@dataclass(frozen=True)
class LatentConfiguration:
    """Latent points split into two target groups and auxiliary points.

    Attributes:
        xs: First target group, shape (n, d).
        ys: Second target group, shape (m, d).
        zs: Auxiliary points, shape (N - n - m, d).
        manifold: The manifold all points lie on.
    """

    xs: np.ndarray
    ys: np.ndarray
    zs: np.ndarray
    manifold: Manifold

    def __post_init__(self):
        for name in ("xs", "ys", "zs"):
            arr = np.asarray(getattr(self, name), dtype=np.float64)
            if arr.ndim != 2 and not (name == "zs" and arr.size == 0):
                raise InvalidParameterError(f"{name} must be a 2-d point array")
            arr = arr.reshape(-1, self.manifold.ambient_dim)
            if arr.size and not self.manifold.on_manifold(arr):
                raise InvalidParameterError(f"{name} contains points off the manifold")
            arr = arr.copy()
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        if self.xs.shape[0] == 0 or self.ys.shape[0] == 0:
            raise InvalidParameterError("both target groups must be nonempty")

    @property
    def n(self) -> int:
        return int(self.xs.shape[0])

    @property
    def m(self) -> int:
        return int(self.ys.shape[0])

    @property
    def total(self) -> int:
        return self.n + self.m + int(self.zs.shape[0])

    def all_points(self) -> np.ndarray:
        """All points stacked with targets first: xs, then ys, then zs."""
        return np.vstack([self.xs, self.ys, self.zs])


def _sample_from_density(
    manifold: Manifold,
    density: Density,
    count: int,
    rng: Xoshiro256StarStar,
    region: tuple[np.ndarray, float] | None = None,
) -> np.ndarray:
    """Rejection sampling from the density, optionally restricted to a
    geodesic ball (anchor, radius)."""
    if count == 0:
        return np.empty((0, manifold.ambient_dim))
    _, upper = density.weight_bounds(manifold)
    points = np.empty((count, manifold.ambient_dim))
    for idx in range(count):
        for attempt in range(_REJECTION_ATTEMPT_CAP):
            proposal = manifold.sample_uniform(rng, 1)
            if density.kind != "uniform":
                accept = rng.uniform() * upper
                if accept >= float(density.relative_weight(proposal)[0]):
                    continue
            if region is not None:
                anchor, radius = region
                dist = float(manifold.geodesic_matrix(proposal, anchor[None, :])[0, 0])
                if dist > radius:
                    continue
            points[idx] = proposal[0]
            break
        else:
            raise DensityMisconfiguredError(
                f"rejection sampling exceeded {_REJECTION_ATTEMPT_CAP} attempts per point"
            )
    return points


def sample_latents(
    manifold: Manifold,
    density: Density,
    n: int,
    m: int,
    total: int,
    seed: RngSeed,
    placement: Placement = Placement(),
) -> LatentConfiguration:
    """Draw n + m target points and total - n - m auxiliary points.

    Consumes one stream seeded by ``seed`` in the fixed order xs, ys, zs, so
    the result is bit-reproducible.  Auxiliary points are always i.i.d. from
    the density; target points follow the placement.
    """
    if n < 1 or m < 1:
        raise InvalidParameterError(f"both target groups must be nonempty: n={n}, m={m}")
    if n + m > total:
        raise InvalidParameterError(f"n + m = {n + m} exceeds total point count {total}")
    rng = Xoshiro256StarStar(seed)
    if placement.mode == "two_regions":
        radius = placement.region_radius or manifold.diameter / 4.0
        anchor_a, anchor_b = manifold.region_anchors()
        xs = _sample_from_density(manifold, density, n, rng, region=(anchor_a, radius))
        ys = _sample_from_density(manifold, density, m, rng, region=(anchor_b, radius))
    else:
        xs = _sample_from_density(manifold, density, n, rng)
        ys = _sample_from_density(manifold, density, m, rng)
    zs = _sample_from_density(manifold, density, total - n - m, rng)
    return LatentConfiguration(xs=xs, ys=ys, zs=zs, manifold=manifold)


# ---------------------------------------------------------------------------
# Connectivity kernels
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class LocalKernel:
    """Hard connectivity within radius h (edge iff distance <= h)."""

    h: float

    def __post_init__(self):
        if self.h <= 0:
            raise InvalidParameterError(f"connectivity radius must be positive: {self.h}")


@dataclass(frozen=True)
class GaussianPowerKernel:
    """Kernel w(x, y) = exp(-||x - y||^p / sigma) on ambient distances.

    ``sigma`` divides the p-th power of the distance directly, so with
    p = 2 the kernel is exp(-squared_distance / sigma).
    """

    p: float = 2.0
    sigma: float = 1.0

    def __post_init__(self):
        if self.p < 1:
            raise InvalidParameterError(f"power must be >= 1: {self.p}")
        if not self.sigma > 0:
            raise InvalidParameterError(f"sigma must be positive: {self.sigma}")

    def evaluate(self, xs: np.ndarray, ys: np.ndarray) -> np.ndarray:
        squared = pairwise_squared_distances(xs, ys)
        if self.p == 2.0:
            exponents = squared / self.sigma
        else:
            exponents = np.sqrt(np.maximum(squared, 0.0)) ** self.p / self.sigma
        return np.exp(-exponents)

    def bounds(self, manifold: Manifold) -> tuple[float, float]:
        """(w_min, w_max) over pairs of points of the manifold."""
        w_min = math.exp(-manifold.euclidean_diameter**self.p / self.sigma)
        return (w_min, 1.0)


@dataclass(frozen=True)
class NonlocalKernel:
    """Bernoulli edge model: pair (i, j) is an edge w.p. rho * w(z_i, z_j).

    ``rho`` in [0, 1]; zero is allowed and produces an empty graph, though
    estimators that divide by rho require it positive.
    """

    rho: float
    form: GaussianPowerKernel

    def __post_init__(self):
        if not 0.0 <= self.rho <= 1.0:
            raise InvalidParameterError(f"rho must lie in [0, 1]: {self.rho}")


def dense_rho(value: float) -> float:
    """Dense sparsity preset: rho constant in N."""
    if not 0.0 < value <= 1.0:
        raise InvalidParameterError(f"dense rho must lie in (0, 1]: {value}")
    return value


def sparse_log_rho(c: float, total: int) -> float:
    """Relatively sparse preset: rho = min(1, c * log(N) / N)."""
    if c <= 0:
        raise InvalidParameterError(f"sparse rho coefficient must be positive: {c}")
    if total < 2:
        raise InvalidParameterError(f"total must be >= 2: {total}")
    return min(1.0, c * math.log(total) / total)


# ---------------------------------------------------------------------------
# Graphs
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Graph:
    """Undirected simple graph stored as sorted neighbor lists."""

    node_count: int
    neighbors: tuple[np.ndarray, ...]

    def __post_init__(self):
        if self.node_count < 1 or len(self.neighbors) != self.node_count:
            raise InvalidParameterError("neighbor lists must cover every node")

    @classmethod
    def from_edges(cls, node_count: int, edges) -> "Graph":
        """Build from an iterable of (i, j) pairs; direction and duplicates
        are ignored."""
        if node_count < 1:
            raise InvalidParameterError(f"node_count must be positive: {node_count}")
        adjacency: list[set[int]] = [set() for _ in range(node_count)]
        for i, j in edges:
            i, j = int(i), int(j)
            if i == j:
                raise InvalidParameterError(f"self-loop at node {i}")
            if not (0 <= i < node_count and 0 <= j < node_count):
                raise InvalidParameterError(f"edge ({i}, {j}) outside node range")
            adjacency[i].add(j)
            adjacency[j].add(i)
        lists = tuple(np.array(sorted(nbrs), dtype=np.int64) for nbrs in adjacency)
        return cls(node_count=node_count, neighbors=lists)

    @classmethod
    def from_adjacency_mask(cls, mask: np.ndarray) -> "Graph":
        """Build from a symmetric boolean matrix; the diagonal is ignored."""
        mask = np.asarray(mask, dtype=bool)
        if mask.ndim != 2 or mask.shape[0] != mask.shape[1]:
            raise InvalidParameterError("adjacency mask must be square")
        if not np.array_equal(mask, mask.T):
            raise InvalidParameterError("adjacency mask must be symmetric")
        mask = mask.copy()
        np.fill_diagonal(mask, False)
        lists = tuple(np.flatnonzero(mask[i]).astype(np.int64) for i in range(mask.shape[0]))
        return cls(node_count=mask.shape[0], neighbors=lists)

    @property
    def edge_count(self) -> int:
        return sum(arr.size for arr in self.neighbors) // 2

    def degree(self, node: int) -> int:
        return int(self.neighbors[node].size)

    def has_edge(self, i: int, j: int) -> bool:
        arr = self.neighbors[i]
        pos = int(np.searchsorted(arr, j))
        return pos < arr.size and int(arr[pos]) == j

    def edges(self):
        """Yield edges (i, j) with i < j in ascending lexicographic order."""
        for i in range(self.node_count):
            for j in self.neighbors[i]:
                if i < j:
                    yield (i, int(j))

    def to_dense(self) -> np.ndarray:
        """Dense symmetric 0/1 float adjacency matrix."""
        out = np.zeros((self.node_count, self.node_count))
        for i, nbrs in enumerate(self.neighbors):
            out[i, nbrs] = 1.0
        return out

    def __eq__(self, other) -> bool:
        if not isinstance(other, Graph):
            return NotImplemented
        return self.node_count == other.node_count and all(
            np.array_equal(a, b) for a, b in zip(self.neighbors, other.neighbors)
        )


def eps_graph(latents: LatentConfiguration, h: float) -> Graph:
    """Connectivity graph with an edge iff ambient distance <= h (closed ball)."""
    if h <= 0:
        raise InvalidParameterError(f"connectivity radius must be positive: {h}")
    points = latents.all_points()
    squared = pairwise_squared_distances(points, points)
    mask = squared <= h * h
    np.fill_diagonal(mask, False)
    return Graph.from_adjacency_mask(mask)


def sample_kernel_graph(
    latents: LatentConfiguration, kernel: NonlocalKernel, seed: RngSeed
) -> Graph:
    """Draw each unordered pair as an independent Bernoulli edge.

    Pair (i, j) with i < j is an edge with probability rho * w(z_i, z_j).
    Pairs are visited in ascending row-major order and consume one uniform
    each, so the draw is bit-reproducible given the seed.
    """
    points = latents.all_points()
    count = points.shape[0]
    weights = kernel.form.evaluate(points, points)
    probabilities = kernel.rho * weights
    if float(probabilities.max()) > 1.0 + 1e-12:
        raise InvalidParameterError("edge probability rho * w exceeds 1")
    rows, cols = np.triu_indices(count, k=1)
    rng = Xoshiro256StarStar(seed)
    draws = rng.uniforms(rows.size)
    picked = draws < probabilities[rows, cols]
    return Graph.from_edges(count, zip(rows[picked], cols[picked]))


def true_kernel_matrix(latents: LatentConfiguration, kernel: NonlocalKernel) -> np.ndarray:
    """Matrix of kernel values w(z_i, z_j) over all points, diagonal included."""
    points = latents.all_points()
    weights = kernel.form.evaluate(points, points)
    return 0.5 * (weights + weights.T)


def h_schedule(total: int, k: int, c0: float) -> float:
    """Connectivity radius h = (c0 * (log N)^2 / N)^(1/k) for N points.

    Shrinks slowly enough that the expected neighborhood size N h^k keeps
    growing like log^2 N, which keeps the graph connected as N grows.
    """
    if total < 2:
        raise InvalidParameterError(f"total must be >= 2: {total}")
    if k < 1:
        raise InvalidParameterError(f"intrinsic dimension must be >= 1: {k}")
    if c0 <= 0:
        raise InvalidParameterError(f"c0 must be positive: {c0}")
    return float((c0 * math.log(total) ** 2 / total) ** (1.0 / k))


# ---------------------------------------------------------------------------
# Serialization
# ---------------------------------------------------------------------------


def graph_to_edgelist(graph: Graph) -> str:
    """Edge-list text: first line "N E", then one "i j" line per edge with
    0-based i < j in ascending lexicographic order."""
    lines = [f"{graph.node_count} {graph.edge_count}"]
    lines.extend(f"{i} {j}" for i, j in graph.edges())
    return "\n".join(lines) + "\n"


def graph_from_edgelist(text: str) -> Graph:
    """Parse the edge-list format produced by :func:`graph_to_edgelist`."""
    lines = [line for line in text.splitlines() if line.strip()]
    if not lines:
        raise InvalidParameterError("empty edge-list text")
    try:
        node_count, edge_count = (int(tok) for tok in lines[0].split())
    except ValueError as exc:
        raise InvalidParameterError(f"malformed header line: {lines[0]!r}") from exc
    if len(lines) - 1 != edge_count:
        raise InvalidParameterError(
            f"header declares {edge_count} edges but {len(lines) - 1} lines follow"
        )
    edges = []
    for line in lines[1:]:
        try:
            i, j = (int(tok) for tok in line.split())
        except ValueError as exc:
            raise InvalidParameterError(f"malformed edge line: {line!r}") from exc
        if not i < j:
            raise InvalidParameterError(f"edge lines must have i < j: {line!r}")
        edges.append((i, j))
    return Graph.from_edges(node_count, edges)


def latents_to_csv(config: LatentConfiguration) -> str:
    """CSV with header index,role,coord0,...  Roles are x, y, z by block."""
    dim = config.manifold.ambient_dim
    header = "index,role," + ",".join(f"coord{d}" for d in range(dim))
    lines = [header]
    index = 0
    for role, block in (("x", config.xs), ("y", config.ys), ("z", config.zs)):
        for point in block:
            coords = ",".join(repr(float(c)) for c in point)
            lines.append(f"{index},{role},{coords}")
            index += 1
    return "\n".join(lines) + "\n"


def latents_from_csv(text: str, manifold: Manifold) -> LatentConfiguration:
    """Parse the CSV produced by :func:`latents_to_csv`."""
    lines = [line for line in text.splitlines() if line.strip()]
    if len(lines) < 2:
        raise InvalidParameterError("latents CSV needs a header and at least one point")
    blocks: dict[str, list[list[float]]] = {"x": [], "y": [], "z": []}
    for expected_index, line in enumerate(lines[1:]):
        cells = line.split(",")
        if len(cells) != 2 + manifold.ambient_dim:
            raise InvalidParameterError(f"malformed latents row: {line!r}")
        if int(cells[0]) != expected_index:
            raise InvalidParameterError(f"latents rows out of order at index {cells[0]}")
        role = cells[1]
        if role not in blocks:
            raise InvalidParameterError(f"unknown role {role!r}")
        blocks[role].append([float(c) for c in cells[2:]])
    if not blocks["x"] or not blocks["y"]:
        raise InvalidParameterError("latents CSV must contain x and y points")
    dim = manifold.ambient_dim
    return LatentConfiguration(
        xs=np.array(blocks["x"]),
        ys=np.array(blocks["y"]),
        zs=np.array(blocks["z"]).reshape(-1, dim) if blocks["z"] else np.empty((0, dim)),
        manifold=manifold,
    )
