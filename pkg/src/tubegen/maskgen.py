"""Procedural tube-mask generation.

A tube starts as control points drawn from a polygonal location prior,
ordered along the prior's principal axis, connected by a centripetal
Catmull-Rom spline, rasterized to an 8-connected 1-pixel centerline,
and thickened by disc dilation with a per-tube random radius.

The shipped priors (cvc, chest-tube, endotracheal) are illustrative
region fixtures only; they are not derived from any anatomical atlas.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .core.morphology import dilate
from .core.types import BinaryMask, RngStream
from .errors import EmptyMaskError, InvalidParameterError, SamplingFailureError

__all__ = [
    "LocationPrior",
    "TubeSpec",
    "Polyline",
    "TubeRecord",
    "sample_control_points",
    "spline_interpolate",
    "rasterize_polyline",
    "generate_fake_mask",
    "default_priors",
    "default_tube_spec",
]

ENTRY_EDGES = ("top", "bottom", "left", "right")

_POINT_BUDGET = 1000
_ATTEMPT_BUDGET = 100


def _cross(o, a, b) -> float:
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])


def _segments_cross(p1, p2, p3, p4) -> bool:
    """Proper crossing test; touching endpoints do not count."""
    d1 = _cross(p3, p4, p1)
    d2 = _cross(p3, p4, p2)
    d3 = _cross(p1, p2, p3)
    d4 = _cross(p1, p2, p4)
    return ((d1 > 0) != (d2 > 0)) and (d1 != 0 and d2 != 0) and \
           ((d3 > 0) != (d4 > 0)) and (d3 != 0 and d4 != 0)


def _point_segment_dist(pt, a, b) -> float:
    ab = b - a
    denom = float(ab @ ab)
    if denom == 0.0:
        return float(np.hypot(*(pt - a)))
    t = float(np.clip((pt - a) @ ab / denom, 0.0, 1.0))
    return float(np.hypot(*(pt - (a + t * ab))))


@dataclass(frozen=True, eq=False)
class LocationPrior:
    """Where a tube may lie: a polygon in normalized [0,1]^2 coordinates.

    Vertices are (x, y) with x across the width and y down the height.
    ``entry_edge`` optionally names the image border the tube must
    start on.
    """

    name: str
    region: np.ndarray
    entry_edge: str = None

    def __post_init__(self):
        poly = np.asarray(self.region, dtype=np.float64)
        if poly.ndim != 2 or poly.shape[1] != 2 or poly.shape[0] < 3:
            raise InvalidParameterError(
                f"prior polygon needs >= 3 (x, y) vertices, got shape {poly.shape}"
            )
        if not np.all(np.isfinite(poly)) or poly.min() < 0.0 or poly.max() > 1.0:
            raise InvalidParameterError("prior polygon vertices must lie in [0, 1]^2")
        x, y = poly[:, 0], poly[:, 1]
        area = 0.5 * abs(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1)))
        if area <= 1e-12:
            raise InvalidParameterError(f"prior polygon {self.name!r} has zero area")
        k = poly.shape[0]
        for i in range(k):
            for j in range(i + 1, k):
                if j == i or (j + 1) % k == i or (i + 1) % k == j:
                    continue
                if _segments_cross(poly[i], poly[(i + 1) % k], poly[j], poly[(j + 1) % k]):
                    raise InvalidParameterError(
                        f"prior polygon {self.name!r} is self-intersecting"
                    )
        if self.entry_edge is not None and self.entry_edge not in ENTRY_EDGES:
            raise InvalidParameterError(
                f"entry_edge must be one of {ENTRY_EDGES}, got {self.entry_edge!r}"
            )
        object.__setattr__(self, "region", poly)

    def contains(self, pt, tol: float = 1e-9) -> bool:
        """Even-odd containment, boundary-inclusive within ``tol``."""
        poly = self.region
        k = poly.shape[0]
        x, y = float(pt[0]), float(pt[1])
        inside = False
        for i in range(k):
            x1, y1 = poly[i]
            x2, y2 = poly[(i + 1) % k]
            if (y1 > y) != (y2 > y):
                xin = x1 + (y - y1) / (y2 - y1) * (x2 - x1)
                if x < xin:
                    inside = not inside
        if inside:
            return True
        p = np.array([x, y])
        return any(
            _point_segment_dist(p, poly[i], poly[(i + 1) % k]) <= tol for i in range(k)
        )

    def principal_axis(self) -> np.ndarray:
        """Unit direction of largest vertex spread, sign-stabilized."""
        centered = self.region - self.region.mean(axis=0)
        cov = centered.T @ centered
        _, vecs = np.linalg.eigh(cov)
        axis = vecs[:, -1]
        if axis[1] < 0 or (axis[1] == 0 and axis[0] < 0):
            axis = -axis
        return axis


@dataclass(frozen=True)
class TubeSpec:
    """Shape parameters for one generated tube."""

    n_control_points: int = 4
    width_range: tuple = (3, 7)
    samples_per_segment: int = 10
    max_turn_angle_deg: float = 60.0

    def __post_init__(self):
        if not isinstance(self.n_control_points, (int, np.integer)) or self.n_control_points < 2:
            raise InvalidParameterError(
                f"n_control_points must be an integer >= 2, got {self.n_control_points!r}"
            )
        try:
            w_min, w_max = (int(w) for w in self.width_range)
        except (TypeError, ValueError):
            raise InvalidParameterError(
                f"width_range must be a (w_min, w_max) pair, got {self.width_range!r}"
            ) from None
        if not 1 <= w_min <= w_max:
            raise InvalidParameterError(
                f"width_range needs 1 <= w_min <= w_max, got {self.width_range!r}"
            )
        object.__setattr__(self, "width_range", (w_min, w_max))
        if not isinstance(self.samples_per_segment, (int, np.integer)) or self.samples_per_segment < 2:
            raise InvalidParameterError(
                f"samples_per_segment must be an integer >= 2, got {self.samples_per_segment!r}"
            )
        t = float(self.max_turn_angle_deg)
        if not 0.0 < t <= 180.0:
            raise InvalidParameterError(
                f"max_turn_angle_deg must be in (0, 180], got {self.max_turn_angle_deg!r}"
            )
        object.__setattr__(self, "max_turn_angle_deg", t)


@dataclass(frozen=True, eq=False)
class Polyline:
    """An ordered run of sub-pixel (x, y) points."""

    points: np.ndarray

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=np.float64)
        if pts.ndim != 2 or pts.shape[1] != 2 or pts.shape[0] < 2:
            raise InvalidParameterError(
                f"polyline needs >= 2 (x, y) points, got shape {pts.shape}"
            )
        if not np.all(np.isfinite(pts)):
            raise InvalidParameterError("polyline points must be finite")
        steps = np.linalg.norm(np.diff(pts, axis=0), axis=1)
        if np.any(steps == 0.0):
            raise InvalidParameterError("polyline has duplicate consecutive points")
        object.__setattr__(self, "points", pts)

    def __len__(self) -> int:
        return self.points.shape[0]


@dataclass(frozen=True)
class TubeRecord:
    """Provenance of one generated tube, for the dataset manifest."""

    prior_name: str
    control_points: tuple
    dilation_radius: int
    width: int

    def to_dict(self) -> dict:
        return {
            "prior": self.prior_name,
            "control-points": [[float(x), float(y)] for x, y in self.control_points],
            "dilation-radius": self.dilation_radius,
            "width": self.width,
        }


def _edge_point(edge: str, u: float) -> np.ndarray:
    if edge == "top":
        return np.array([u, 0.0])
    if edge == "bottom":
        return np.array([u, 1.0])
    if edge == "left":
        return np.array([0.0, u])
    return np.array([1.0, u])


def _sample_in_polygon(gen: np.random.Generator, prior: LocationPrior) -> np.ndarray:
    lo = prior.region.min(axis=0)
    hi = prior.region.max(axis=0)
    for _ in range(_POINT_BUDGET):
        pt = lo + gen.random(2) * (hi - lo)
        if prior.contains(pt):
            return pt
    raise SamplingFailureError(
        f"could not place a point inside prior {prior.name!r} "
        f"after {_POINT_BUDGET} draws (point-in-polygon)"
    )


def _turn_angles_deg(pts: np.ndarray) -> np.ndarray:
    seg = np.diff(pts, axis=0)
    if seg.shape[0] < 2:
        return np.zeros(0)
    a, b = seg[:-1], seg[1:]
    cross = a[:, 0] * b[:, 1] - a[:, 1] * b[:, 0]
    dot = (a * b).sum(axis=1)
    return np.abs(np.degrees(np.arctan2(cross, dot)))


def _sample_points(gen: np.random.Generator, prior: LocationPrior, spec: TubeSpec) -> np.ndarray:
    axis = prior.principal_axis()
    n = spec.n_control_points
    violated = "max-turn-angle"
    for _ in range(_ATTEMPT_BUDGET):
        if prior.entry_edge is not None:
            entry = None
            for _ in range(_POINT_BUDGET):
                cand = _edge_point(prior.entry_edge, gen.random())
                if prior.contains(cand):
                    entry = cand
                    break
            if entry is None:
                raise SamplingFailureError(
                    f"prior {prior.name!r}: no point of edge {prior.entry_edge!r} "
                    f"lies inside the polygon (entry-edge)"
                )
            rest = [_sample_in_polygon(gen, prior) for _ in range(n - 1)]
            pts = np.vstack([entry] + rest) if rest else entry[None]
        else:
            pts = np.vstack([_sample_in_polygon(gen, prior) for _ in range(n)])
        proj = pts @ axis
        order = np.argsort(proj, kind="stable")
        if prior.entry_edge is not None:
            if order[0] == 0:
                pass
            elif order[-1] == 0:
                order = order[::-1]
            else:
                violated = "entry-point-not-extremal-on-principal-axis"
                continue
        pts = pts[order]
        if np.any(np.linalg.norm(np.diff(pts, axis=0), axis=1) == 0.0):
            violated = "distinct-control-points"
            continue
        if np.all(_turn_angles_deg(pts) <= spec.max_turn_angle_deg):
            return pts
        violated = "max-turn-angle"
    raise SamplingFailureError(
        f"prior {prior.name!r}: {_ATTEMPT_BUDGET} resampling attempts violated "
        f"constraint {violated}"
    )


def sample_control_points(prior: LocationPrior, spec: TubeSpec, rng: RngStream) -> np.ndarray:
    """Draw ordered control points in normalized [0,1]^2 coordinates.

    Points lie inside the prior polygon and ascend along its principal
    axis; with an entry edge configured, the first point sits on that
    image border. Configurations the sampler cannot satisfy within its
    attempt budget raise SamplingFailureError naming the constraint.
    """
    return _sample_points(rng.generator(), prior, spec)


def _catmull_rom_span(q0, q1, q2, q3, t0, t1, t2, t3, ts):
    """Evaluate one centripetal span at parameters ts in [t1, t2]."""
    ts = ts[:, None]

    def lerp(pa, pb, ta, tb):
        w = (ts - ta) / (tb - ta)
        return (1.0 - w) * pa + w * pb

    a1 = lerp(q0, q1, t0, t1)
    a2 = lerp(q1, q2, t1, t2)
    a3 = lerp(q2, q3, t2, t3)
    b1 = ((t2 - ts) * a1 + (ts - t0) * a2) / (t2 - t0)
    b2 = ((t3 - ts) * a2 + (ts - t1) * a3) / (t3 - t1)
    return ((t2 - ts) * b1 + (ts - t1) * b2) / (t2 - t1)


def spline_interpolate(points, samples_per_segment: int) -> Polyline:
    """Centripetal Catmull-Rom curve through every control point.

    End tangents come from reflected phantom endpoints, so two control
    points degenerate to the exact straight segment and collinear
    inputs stay collinear. Each control-point span contributes
    ``samples_per_segment`` curve points; the final control point
    closes the polyline.
    """
    pts = np.asarray(points, dtype=np.float64)
    if pts.ndim != 2 or pts.shape[1] != 2 or pts.shape[0] < 2:
        raise InvalidParameterError(
            f"need >= 2 control points of shape (n, 2), got {pts.shape}"
        )
    if not isinstance(samples_per_segment, (int, np.integer)) or samples_per_segment < 2:
        raise InvalidParameterError(
            f"samples_per_segment must be an integer >= 2, got {samples_per_segment!r}"
        )
    steps = np.linalg.norm(np.diff(pts, axis=0), axis=1)
    if np.any(steps == 0.0):
        raise InvalidParameterError("duplicate consecutive control points")
    ext = np.vstack([2 * pts[0] - pts[1], pts, 2 * pts[-1] - pts[-2]])
    knots = np.zeros(ext.shape[0])
    knots[1:] = np.cumsum(np.sqrt(np.linalg.norm(np.diff(ext, axis=0), axis=1)))
    out = []
    for i in range(1, ext.shape[0] - 2):
        ts = np.linspace(knots[i], knots[i + 1], samples_per_segment, endpoint=False)
        out.append(
            _catmull_rom_span(
                ext[i - 1], ext[i], ext[i + 1], ext[i + 2],
                knots[i - 1], knots[i], knots[i + 1], knots[i + 2], ts,
            )
        )
    out.append(pts[-1][None])
    curve = np.vstack(out)
    keep = np.ones(curve.shape[0], dtype=bool)
    keep[1:] = np.linalg.norm(np.diff(curve, axis=0), axis=1) > 0.0
    return Polyline(curve[keep])


def _bresenham(x0: int, y0: int, x1: int, y1: int):
    dx = abs(x1 - x0)
    sx = 1 if x0 < x1 else -1
    dy = -abs(y1 - y0)
    sy = 1 if y0 < y1 else -1
    err = dx + dy
    while True:
        yield x0, y0
        if x0 == x1 and y0 == y1:
            return
        e2 = 2 * err
        if e2 >= dy:
            err += dy
            x0 += sx
        if e2 <= dx:
            err += dx
            y0 += sy


def rasterize_polyline(line: Polyline, height: int, width: int) -> BinaryMask:
    """8-connected 1-pixel raster of the polyline, clipped to bounds.

    Points are (x, y) in pixel units; x indexes columns, y rows.
    """
    if height < 1 or width < 1:
        raise InvalidParameterError(f"bad raster size {height}x{width}")
    ints = np.rint(line.points).astype(np.int64)
    grid = np.zeros((height, width), dtype=np.uint8)
    hit = False
    for (x0, y0), (x1, y1) in zip(ints[:-1], ints[1:]):
        for x, y in _bresenham(int(x0), int(y0), int(x1), int(y1)):
            if 0 <= y < height and 0 <= x < width:
                grid[y, x] = 1
                hit = True
    if not hit:
        raise EmptyMaskError("polyline lies entirely outside the image bounds")
    return BinaryMask(grid)


def _to_pixels(pts: np.ndarray, height: int, width: int) -> np.ndarray:
    return pts * np.array([width - 1.0, height - 1.0])


def generate_fake_mask(priors, height: int, width: int, rng: RngStream):
    """Generate the union of one tube per (prior, spec) pair.

    Returns (mask, records); each TubeRecord keeps the control points
    in pixel coordinates plus the drawn dilation radius and nominal
    width 2*radius+1. The whole construction is a pure function of the
    RngStream.
    """
    priors = list(priors)
    if not priors:
        raise InvalidParameterError("need at least one (prior, spec) pair")
    if height < 2 or width < 2:
        raise InvalidParameterError(f"image size {height}x{width} is too small")
    gen = rng.generator()
    total = np.zeros((height, width), dtype=np.uint8)
    records = []
    for prior, spec in priors:
        pts = _sample_points(gen, prior, spec)
        px = _to_pixels(pts, height, width)
        line = spline_interpolate(px, spec.samples_per_segment)
        centerline = rasterize_polyline(line, height, width)
        w_min, w_max = spec.width_range
        r_lo, r_hi = w_min // 2, w_max // 2
        radius = int(gen.integers(r_lo, r_hi + 1))
        tube = dilate(centerline, radius)
        total |= tube.data
        records.append(
            TubeRecord(
                prior_name=prior.name,
                control_points=tuple(map(tuple, px)),
                dilation_radius=radius,
                width=2 * radius + 1,
            )
        )
    return BinaryMask(total), records


def default_priors() -> dict:
    """Illustrative location priors keyed by name.

    These polygons sketch plausible regions for a central venous
    catheter, a chest tube, and an endotracheal tube on an upright
    frontal radiograph, but they are hand-placed fixtures, not
    measurements.
    """
    return {
        "cvc": LocationPrior(
            "cvc",
            [[0.35, 0.0], [0.75, 0.0], [0.80, 0.45], [0.45, 0.55], [0.30, 0.25]],
            entry_edge="top",
        ),
        "chest-tube": LocationPrior(
            "chest-tube",
            [[0.0, 0.55], [0.45, 0.50], [0.55, 0.75], [0.30, 0.90], [0.0, 0.85]],
            entry_edge="left",
        ),
        "endotracheal": LocationPrior(
            "endotracheal",
            [[0.42, 0.0], [0.58, 0.0], [0.60, 0.60], [0.40, 0.60]],
            entry_edge="top",
        ),
    }


def default_tube_spec() -> TubeSpec:
    """The TubeSpec used when a config names a prior without overrides."""
    return TubeSpec()
