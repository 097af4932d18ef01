"""Open subsets of R^m with the two boundary notions the stopping times need.

A Region is an intersection of simple convex shapes (balls, boxes,
half-spaces) minus a list of measure-zero barrier primitives. ``membership``
sees the full complement, barriers included; ``complement_interior`` only sees
the interior of the complement, which barriers never contribute to.
"""

from dataclasses import dataclass, field, replace
from typing import Callable, Optional, Tuple

import numpy as np

from kac_lab.common.cleaners import as_point, point_label, unit_vector
from kac_lab.exceptions import GeometryError
from kac_lab.settings.base import DELTA_GEOM


class Shape:
    """A convex open set described by signed distances to its faces (positive inside)."""

    dimension: int
    label: str

    @property
    def n_faces(self) -> int:
        raise NotImplementedError

    def face_distances(self, x: np.ndarray) -> np.ndarray:
        """Signed distances of points (..., m) to each supporting face, shape (..., n_faces)."""
        raise NotImplementedError

    def signed_distance(self, x: np.ndarray) -> np.ndarray:
        return self.face_distances(x).min(axis=-1)

    def contains(self, x: np.ndarray) -> np.ndarray:
        # open-set convention: boundary points are outside
        return self.signed_distance(x) > 0.0

    def box(self) -> Optional[Tuple[np.ndarray, np.ndarray]]:
        return None


@dataclass(frozen=True, eq=False)
class Ball(Shape):
    center: np.ndarray
    radius: float

    @property
    def dimension(self) -> int:
        return self.center.shape[0]

    @property
    def label(self) -> str:
        return "ball(c={},r={:g})".format(point_label(self.center), self.radius)

    @property
    def n_faces(self) -> int:
        return 1

    def face_distances(self, x):
        # distance to the tangent plane at the nearest boundary point
        return (self.radius - np.linalg.norm(x - self.center, axis=-1))[..., None]

    def box(self):
        return self.center - self.radius, self.center + self.radius


@dataclass(frozen=True, eq=False)
class Box(Shape):
    lo: np.ndarray
    hi: np.ndarray

    @property
    def dimension(self) -> int:
        return self.lo.shape[0]

    @property
    def label(self) -> str:
        return "box(lo={},hi={})".format(point_label(self.lo), point_label(self.hi))

    @property
    def n_faces(self) -> int:
        return 2 * self.dimension

    def face_distances(self, x):
        return np.concatenate([x - self.lo, self.hi - x], axis=-1)

    def box(self):
        return self.lo, self.hi


@dataclass(frozen=True, eq=False)
class HalfSpace(Shape):
    normal: np.ndarray
    offset: float

    @property
    def dimension(self) -> int:
        return self.normal.shape[0]

    @property
    def label(self) -> str:
        return "halfspace(n={},c={:g})".format(point_label(self.normal), self.offset)

    @property
    def n_faces(self) -> int:
        return 1

    def face_distances(self, x):
        return (x @ self.normal - self.offset)[..., None]


class BarrierPrimitive:
    """A closed Lebesgue-null obstacle removed from a region.

    Each primitive has a supporting hyperplane; the bridge-crossing
    probability over one step of a generator-Delta Brownian motion is
    exp(-d1 * d2 / h) for endpoints at signed distances d1, d2 on the same
    side, and 1 when the chord crosses, gated by whether the most likely
    crossing point lies on the primitive itself.
    """

    kind: str
    dimension: int

    def supporting_distance(self, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def gate(self, p: np.ndarray) -> np.ndarray:
        """True where a point p of the supporting hyperplane lies on the primitive."""
        raise NotImplementedError

    def contains(self, x: np.ndarray, tol: float = DELTA_GEOM) -> np.ndarray:
        on_plane = np.abs(self.supporting_distance(x)) <= tol
        return on_plane & self.gate(x)

    def sample_points(self) -> np.ndarray:
        """A few points of the primitive, for the containment precondition."""
        raise NotImplementedError

    def distance(self, x: np.ndarray) -> np.ndarray:
        """Euclidean distance from x to the primitive."""
        raise NotImplementedError

    def crossing_probability(self, x_prev: np.ndarray, x_next: np.ndarray, h: float) -> np.ndarray:
        d1 = self.supporting_distance(x_prev)
        d2 = self.supporting_distance(x_next)
        product = d1 * d2
        with np.errstate(over="ignore"):
            p = np.where(product > 0.0, np.exp(-np.maximum(product, 0.0) / h), 1.0)
        a1, a2 = np.abs(d1), np.abs(d2)
        total = a1 + a2
        weight = np.where(total > 0.0, a1 / np.where(total > 0.0, total, 1.0), 0.5)
        # reflection principle: the likeliest crossing point on the chord
        crossing_point = x_prev + weight[..., None] * (x_next - x_prev)
        return np.where(self.gate(crossing_point), p, 0.0)

    @property
    def label(self) -> str:
        raise NotImplementedError


@dataclass(frozen=True, eq=False)
class HyperplaneBarrier(BarrierPrimitive):
    normal: np.ndarray
    offset: float
    kind: str = field(default="hyperplane", init=False)

    @property
    def dimension(self) -> int:
        return self.normal.shape[0]

    @property
    def label(self) -> str:
        return "hyperplane(n={},c={:g})".format(point_label(self.normal), self.offset)

    def supporting_distance(self, x):
        return x @ self.normal - self.offset

    def gate(self, p):
        return np.ones(p.shape[:-1], dtype=bool)

    def sample_points(self):
        return (self.offset * self.normal)[None, :]

    def distance(self, x):
        return np.abs(self.supporting_distance(x))


@dataclass(frozen=True, eq=False)
class SegmentBarrier(BarrierPrimitive):
    a: np.ndarray
    b: np.ndarray
    kind: str = field(default="segment", init=False)

    def __post_init__(self):
        if self.a.shape != (2,) or self.b.shape != (2,):
            raise GeometryError("Segment barriers live in R^2")
        if np.allclose(self.a, self.b):
            raise GeometryError("Segment endpoints must differ")

    @property
    def dimension(self) -> int:
        return 2

    @property
    def label(self) -> str:
        return "segment({},{})".format(point_label(self.a), point_label(self.b))

    @property
    def direction(self) -> np.ndarray:
        return self.b - self.a

    @property
    def normal(self) -> np.ndarray:
        d = self.direction / np.linalg.norm(self.direction)
        return np.array([-d[1], d[0]])

    def supporting_distance(self, x):
        return (x - self.a) @ self.normal

    def gate(self, p):
        d = self.direction
        s = ((p - self.a) @ d) / (d @ d)
        return (s >= 0.0) & (s <= 1.0)

    def sample_points(self):
        return np.stack([self.a, 0.5 * (self.a + self.b), self.b])

    def distance(self, x):
        d = self.direction
        s = np.clip(((x - self.a) @ d) / (d @ d), 0.0, 1.0)
        nearest = self.a + s[..., None] * d
        return np.linalg.norm(x - nearest, axis=-1)


@dataclass(frozen=True, eq=False)
class DiskSlit(BarrierPrimitive):
    center: np.ndarray
    normal: np.ndarray
    radius: float
    kind: str = field(default="disk-slit", init=False)

    def __post_init__(self):
        if self.center.shape != (3,):
            raise GeometryError("Disk slits live in R^3")
        if self.radius <= 0.0:
            raise GeometryError("Disk slit radius must be positive")

    @property
    def dimension(self) -> int:
        return 3

    @property
    def label(self) -> str:
        return "disk_slit(c={},n={},r={:g})".format(
            point_label(self.center), point_label(self.normal), self.radius
        )

    def supporting_distance(self, x):
        return (x - self.center) @ self.normal

    def gate(self, p):
        rel = p - self.center
        in_plane = rel - (rel @ self.normal)[..., None] * self.normal
        return np.linalg.norm(in_plane, axis=-1) <= self.radius

    def sample_points(self):
        return self.center[None, :]

    def distance(self, x):
        rel = x - self.center
        height = rel @ self.normal
        radial = np.linalg.norm(rel - height[..., None] * self.normal, axis=-1)
        return np.hypot(np.maximum(radial - self.radius, 0.0), height)


@dataclass(frozen=True, eq=False)
class Region:
    """An open set Omega = (intersection of shapes) minus barriers.

    With no shapes the bulk is all of R^m. Instances are immutable and safe to
    share between path workers.
    """

    dimension: int
    shapes: Tuple[Shape, ...] = ()
    barriers: Tuple[BarrierPrimitive, ...] = ()
    bounding_box: Optional[Tuple[np.ndarray, np.ndarray]] = None
    name: str = ""
    delta_geom: float = DELTA_GEOM

    @property
    def region_id(self) -> str:
        if self.name:
            return self.name
        parts = [s.label for s in self.shapes] or ["R{}".format(self.dimension)]
        parts += ["minus " + b.label for b in self.barriers]
        return " ".join(parts)

    @property
    def n_faces(self) -> int:
        return sum(s.n_faces for s in self.shapes)

    def _coords(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.ndim == 0:
            x = x[None]
        if x.shape[-1] != self.dimension:
            raise GeometryError(
                "Expected points in R^{}, got shape {}".format(self.dimension, x.shape)
            )
        return x

    def bulk_distance(self, x) -> np.ndarray:
        """Smallest signed face distance over all shapes (+inf for the whole space)."""
        x = self._coords(x)
        if not self.shapes:
            return np.full(x.shape[:-1], np.inf)
        return np.min([s.signed_distance(x) for s in self.shapes], axis=0)

    def on_barrier(self, x) -> np.ndarray:
        x = self._coords(x)
        hit = np.zeros(x.shape[:-1], dtype=bool)
        for barrier in self.barriers:
            hit |= barrier.contains(x, self.delta_geom)
        return hit

    def membership(self, x) -> np.ndarray:
        x = self._coords(x)
        return (self.bulk_distance(x) > 0.0) & ~self.on_barrier(x)

    def complement_interior(self, x) -> np.ndarray:
        x = self._coords(x)
        return (self.bulk_distance(x) < -self.delta_geom) & ~self.on_barrier(x)

    def __contains__(self, x) -> bool:
        return bool(self.membership(as_point(x, self.dimension)))

    def face_distances(self, x) -> np.ndarray:
        x = self._coords(x)
        if not self.shapes:
            return np.zeros(x.shape[:-1] + (0,))
        return np.concatenate([s.face_distances(x) for s in self.shapes], axis=-1)

    def crossing_probability(self, x_prev, x_next, h: float, include_barriers: bool = True):
        """Probability that the Brownian bridge between two samples left the region.

        Faces only count where both endpoints are strictly inside them; crossed
        faces are caught by the pointwise checks. Events on different faces and
        barriers are combined as independent.
        """
        survive = np.ones(np.shape(x_prev)[:-1])
        if self.shapes:
            d1 = self.face_distances(x_prev)
            d2 = self.face_distances(x_next)
            inside = (d1 > 0.0) & (d2 > 0.0)
            p = np.where(inside, np.exp(-np.where(inside, d1 * d2, 0.0) / h), 0.0)
            survive = survive * np.prod(1.0 - p, axis=-1)
        if include_barriers:
            for barrier in self.barriers:
                survive = survive * (1.0 - barrier.crossing_probability(x_prev, x_next, h))
        return 1.0 - survive

    def sample_box(self) -> Tuple[np.ndarray, np.ndarray]:
        if self.bounding_box is None:
            raise GeometryError("Region {} has no bounding box to sample from".format(self.region_id))
        return self.bounding_box


def _intersect_boxes(boxes) -> Optional[Tuple[np.ndarray, np.ndarray]]:
    boxes = [b for b in boxes if b is not None]
    if not boxes:
        return None
    lo = np.max([b[0] for b in boxes], axis=0)
    hi = np.min([b[1] for b in boxes], axis=0)
    return lo, hi


def whole_space(dimension: int) -> Region:
    if dimension not in (1, 2, 3):
        raise GeometryError("Only dimensions 1, 2 and 3 are supported")
    return Region(dimension=dimension, name="R{}".format(dimension))


def make_ball(center, radius: float) -> Region:
    center = as_point(center)
    if radius <= 0.0:
        raise GeometryError("Ball radius must be positive, got {}".format(radius))
    shape = Ball(center, float(radius))
    return Region(center.shape[0], shapes=(shape,), bounding_box=shape.box())


def make_box(lo, hi) -> Region:
    lo, hi = as_point(lo), as_point(hi)
    if lo.shape != hi.shape:
        raise GeometryError("Box corners must have the same dimension")
    if not np.all(lo < hi):
        raise GeometryError("Degenerate box: need lo < hi componentwise, got {} and {}".format(lo, hi))
    shape = Box(lo, hi)
    return Region(lo.shape[0], shapes=(shape,), bounding_box=shape.box())


def make_halfspace(normal, offset: float) -> Region:
    shape = HalfSpace(unit_vector(normal), float(offset))
    return Region(shape.dimension, shapes=(shape,))


def intersect(*regions: Region) -> Region:
    dimension = regions[0].dimension
    if any(r.dimension != dimension for r in regions):
        raise GeometryError("Cannot intersect regions of different dimensions")
    return Region(
        dimension,
        shapes=tuple(s for r in regions for s in r.shapes),
        barriers=tuple(b for r in regions for b in r.barriers),
        bounding_box=_intersect_boxes([r.bounding_box for r in regions]),
    )


def segment(a, b) -> SegmentBarrier:
    return SegmentBarrier(as_point(a, 2), as_point(b, 2))


def hyperplane_barrier(normal, offset: float) -> HyperplaneBarrier:
    return HyperplaneBarrier(unit_vector(normal), float(offset))


def disk_slit(center, normal, radius: float) -> DiskSlit:
    return DiskSlit(as_point(center, 3), unit_vector(normal), float(radius))


def remove_barrier(region: Region, barrier: BarrierPrimitive) -> Region:
    if barrier.dimension != region.dimension:
        raise GeometryError(
            "Barrier {} lives in R^{}, region in R^{}".format(
                barrier.label, barrier.dimension, region.dimension
            )
        )
    if region.shapes and not isinstance(barrier, HyperplaneBarrier):
        # barrier must lie in the closure of the bulk
        if np.any(region.bulk_distance(barrier.sample_points()) < -region.delta_geom):
            raise GeometryError(
                "Barrier {} is not contained in the closure of {}".format(barrier.label, region.region_id)
            )
    return replace(region, barriers=region.barriers + (barrier,), name="")


def minus_segment(a, b, region: Optional[Region] = None) -> Region:
    return remove_barrier(region or whole_space(2), segment(a, b))


def make_comb(lo, hi, teeth: int, depth: float) -> Region:
    """A box with ``teeth`` evenly spaced vertical slits hanging from its top face."""
    region = make_box(lo, hi)
    if region.dimension != 2:
        raise GeometryError("Comb domains are two-dimensional")
    if teeth < 1 or not 0.0 < depth < region.bounding_box[1][1] - region.bounding_box[0][1]:
        raise GeometryError("A comb needs at least one tooth and a depth inside the box")
    (x0, y0), (x1, y1) = region.bounding_box
    for j in range(1, teeth + 1):
        x = x0 + j * (x1 - x0) / (teeth + 1)
        region = remove_barrier(region, segment((x, y1), (x, y1 - depth)))
    return region


@dataclass(frozen=True)
class Exhaustion:
    """Omega_n = Omega intersected with the n-th box or ball of a growing family."""

    parent: Region
    scheme: str = "boxes"
    scale: float = 1.0
    center: Optional[np.ndarray] = None

    def __post_init__(self):
        if self.scheme not in ("boxes", "balls"):
            raise GeometryError("Unknown exhaustion scheme {!r}".format(self.scheme))

    @property
    def generator(self) -> Callable[[int], Region]:
        return self.level

    def window(self, n: int) -> Region:
        """The ambient open set Upsilon_n."""
        center = np.zeros(self.parent.dimension) if self.center is None else as_point(self.center)
        size = n * self.scale
        if self.scheme == "boxes":
            return make_box(center - size, center + size)
        return make_ball(center, size)

    def level(self, n: int) -> Region:
        if n < 1:
            raise GeometryError("Exhaustion levels start at 1, got {}".format(n))
        window = self.window(n)
        return Region(
            self.parent.dimension,
            shapes=self.parent.shapes + window.shapes,
            barriers=self.parent.barriers,
            bounding_box=_intersect_boxes([self.parent.bounding_box, window.bounding_box]),
            name="{} cap {}".format(self.parent.region_id, window.shapes[0].label),
            delta_geom=self.parent.delta_geom,
        )

    def check_nested(self, points: np.ndarray, n: int, k: int = 1) -> bool:
        """Sampled-point inclusion Omega_n in Omega_{n+k} in Omega."""
        inner = self.level(n).membership(points)
        outer = self.level(n + k).membership(points)
        parent = self.parent.membership(points)
        return bool(np.all(~inner | outer) and np.all(~outer | parent))


def exhaust(region: Region, scheme: str, n: int, scale: float = 1.0) -> Region:
    return Exhaustion(region, scheme, scale).level(n)


def sample_uniform(region: Region, n: int, rng: np.random.Generator, box=None) -> np.ndarray:
    """Rejection-sample n points of the region from its (or the given) bounding box."""
    lo, hi = box if box is not None else region.sample_box()
    out = []
    total = 0
    while total < n:
        candidates = rng.uniform(lo, hi, size=(max(2 * (n - total), 16), region.dimension))
        keep = candidates[region.membership(candidates)]
        out.append(keep)
        total += keep.shape[0]
    return np.concatenate(out)[:n]


def uniform_sphere(dimension: int, n: int, rng: np.random.Generator) -> np.ndarray:
    """Uniform directions on the unit sphere of R^m (signs in R^1)."""
    z = rng.standard_normal((n, dimension))
    return z / np.linalg.norm(z, axis=-1, keepdims=True)


def ball_contained(region: Region, center, radius: float, margin: float = 0.0) -> bool:
    """Whether the closed ball of radius ``radius + margin`` lies inside the region."""
    center = as_point(center, region.dimension)
    reach = radius + margin
    # for interior points of these convex shapes the smallest face distance is
    # the distance to the boundary
    if region.shapes and float(region.bulk_distance(center)) <= reach:
        return False
    return all(float(b.distance(center)) > reach for b in region.barriers)
