"""Synthetic time-varying fields with analytic feature loci.

Regular-grid kinds are sampled at integer grid coordinates (x fastest) and
return ``(nspace, components)`` arrays; ``t`` passed to :func:`ground_truth`
is in layer units, converted with ``spec.dt`` where a kind has physical
time. The double gyre lives on its own unstructured triangle mesh (see
:func:`double_gyre_mesh`).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

KINDS = ("moving_minimum", "double_gyre", "spiral_woven", "merger", "moving_plane",
         "line_vortex", "turbulent")

# double gyre constants
GYRE_A = 0.1
GYRE_EPS = 0.25
# period 5, i.e. eight back-and-forth swings over t in [0, 40]
GYRE_OMEGA = 2 * np.pi / 5


@dataclass(frozen=True)
class SyntheticSpec:
    """Parameters of one synthetic dataset.

    Attributes
    ----------
    kind : str
        One of :data:`KINDS`.
    dims : tuple
        Grid size (ignored for the double gyre, whose mesh is fixed).
    n_layers : int
    dt : float
        Physical time between layers.
    x0, d : tuple, optional
        Start and per-layer displacement (moving minimum, line vortex).
    alpha : float
        Plane speed for ``moving_plane``.
    sigma : float
        Standard deviation of additive Gaussian noise.
    seed : int
    scale : float
        Physical width of the grid for ``spiral_woven`` and ``merger``.
    """

    kind: str
    dims: tuple = (21, 21, 21)
    n_layers: int = 21
    dt: float = 1.0
    x0: tuple = None
    d: tuple = None
    alpha: float = 0.9
    sigma: float = 0.0
    seed: int = 0
    scale: float = 15.0
    extra: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown synthetic kind {self.kind!r}; expected one of {KINDS}")
        if self.n_layers < 1:
            raise ValueError("n_layers must be >= 1")
        if self.sigma < 0:
            raise ValueError("sigma must be >= 0")
        object.__setattr__(self, "dims", tuple(int(v) for v in self.dims))
        if any(v < 2 for v in self.dims):
            raise ValueError(f"every dimension needs at least 2 samples, got {self.dims}")
        if self.kind == "moving_plane" and len(self.dims) != 3:
            raise ValueError("moving_plane is 3D")
        if self.kind in ("line_vortex", "turbulent") and len(self.dims) != 3:
            raise ValueError(f"{self.kind} is 3D")
        if self.kind in ("spiral_woven", "merger") and len(self.dims) != 2:
            raise ValueError(f"{self.kind} is 2D")

    @property
    def center(self):
        return tuple((n - 1) / 2 for n in self.dims)

    @property
    def origin(self):
        return tuple(self.x0) if self.x0 is not None else self.center

    @property
    def direction(self):
        return tuple(self.d) if self.d is not None else (0.0,) * len(self.dims)

    @property
    def components(self):
        return {"double_gyre": 2, "turbulent": 3}.get(self.kind, 1)

    def to_dict(self):
        out = {"kind": self.kind, "dims": list(self.dims), "n_layers": self.n_layers,
               "dt": self.dt, "alpha": self.alpha, "sigma": self.sigma, "seed": self.seed,
               "scale": self.scale}
        if self.x0 is not None:
            out["x0"] = [float(v) for v in self.x0]
        if self.d is not None:
            out["d"] = [float(v) for v in self.d]
        return out


def grid_coords(dims):
    """Integer coordinates of every grid vertex, shape (len(dims), nspace), x fastest."""
    axes = np.meshgrid(*[np.arange(n, dtype=np.float64) for n in reversed(dims)], indexing="ij")
    return np.stack([a.ravel() for a in reversed(axes)])


def _woven(u, v):
    return np.cos(u) * np.sin(v)


def _physical(spec, X):
    """Grid coordinates mapped to the centred physical square of width ``scale``."""
    return [(X[i] / (spec.dims[i] - 1) - 0.5) * spec.scale for i in range(2)]


def _merger_centers(t):
    # two bumps orbit the centre while their distance breathes; they touch
    # once per period of the breathing
    r = 0.35 + 0.25 * np.cos(t)
    a = 0.5 * t
    c = np.array([np.cos(a), np.sin(a)]) * r
    return c, -c


def _turbulent_modes(seed, n=8):
    rng = np.random.default_rng([seed, 0x7B])
    k = rng.normal(size=(3, n, 3)) * 0.15
    phase = rng.uniform(0, 2 * np.pi, size=(3, n))
    amp = rng.normal(size=(3, n))
    omega = rng.normal(size=(3, n)) * 0.2
    return k, phase, amp, omega


def generate(spec, layer, mesh_vertices=None):
    """Samples of one timestep, shape ``(nspace, components)``.

    ``mesh_vertices`` are the base-mesh vertex coordinates for the double
    gyre (defaults to :func:`double_gyre_mesh`).
    """
    if not 0 <= layer < spec.n_layers:
        raise IndexError(f"layer {layer} outside [0, {spec.n_layers})")
    t = layer * spec.dt
    kind = spec.kind
    if kind == "double_gyre":
        if mesh_vertices is None:
            mesh_vertices = double_gyre_mesh(spec.seed)[0]
        u, v = double_gyre_velocity(mesh_vertices[:, 0], mesh_vertices[:, 1], t,
                                    spec.extra.get("omega", GYRE_OMEGA))
        out = np.stack([u, v], axis=1)
    else:
        X = grid_coords(spec.dims)
        if kind == "moving_minimum":
            c = np.asarray(spec.origin) + np.asarray(spec.direction) * t
            out = ((X - c[:, None]) ** 2).sum(axis=0)
        elif kind == "moving_plane":
            out = X[0] - spec.alpha * t
        elif kind == "spiral_woven":
            x, y = _physical(spec, X)
            out = _woven(x * np.cos(t) - y * np.sin(t), x * np.sin(t) + y * np.cos(t))
        elif kind == "merger":
            x, y = _physical(spec, X)
            x, y = x / spec.scale * 2, y / spec.scale * 2
            c1, c2 = _merger_centers(t)
            w = 0.3
            out = (np.exp(-((x - c1[0]) ** 2 + (y - c1[1]) ** 2) / w ** 2)
                   + np.exp(-((x - c2[0]) ** 2 + (y - c2[1]) ** 2) / w ** 2))
        elif kind == "line_vortex":
            xc, yc = line_vortex_center(spec, t)
            out = np.arctan2(X[1] - yc, X[0] - xc)
        elif kind == "turbulent":
            k, phase, amp, omega = _turbulent_modes(spec.seed)
            comps = []
            for c in range(3):
                arg = np.einsum("mi,in->mn", k[c], X) + (phase[c] + omega[c] * t)[:, None]
                comps.append(np.einsum("m,mn->n", amp[c], np.sin(arg)))
            out = np.stack(comps, axis=1)
        else:  # pragma: no cover - guarded by SyntheticSpec
            raise ValueError(kind)
    out = np.asarray(out, dtype=np.float64)
    if out.ndim == 1:
        out = out[:, None]
    if spec.sigma > 0:
        rng = np.random.default_rng([spec.seed, layer])
        out = out + rng.normal(scale=spec.sigma, size=out.shape)
    return out


def line_vortex_center(spec, t):
    x0 = spec.origin
    d = spec.direction
    return x0[0] + d[0] * t, x0[1] + d[1] * t


def double_gyre_velocity(x, y, t, omega=GYRE_OMEGA):
    """Standard double gyre on [0, 2] x [0, 1]."""
    a = GYRE_EPS * np.sin(omega * t)
    b = 1 - 2 * a
    f = a * x ** 2 + b * x
    df = 2 * a * x + b
    u = -np.pi * GYRE_A * np.sin(np.pi * f) * np.cos(np.pi * y)
    v = np.pi * GYRE_A * np.cos(np.pi * f) * np.sin(np.pi * y) * df
    return u, v


def double_gyre_centers(t, omega=GYRE_OMEGA):
    """Interior zeros of the double gyre: the two gyre centres at y = 1/2."""
    a = GYRE_EPS * np.sin(omega * t)
    b = 1 - 2 * a
    out = []
    for level in (0.5, 1.5):
        # root of a x^2 + b x = level in the form that stays exact as a -> 0
        x = 2 * level / (b + np.sqrt(b * b + 4 * a * level))
        out.append((float(x), 0.5))
    return out


def double_gyre_mesh(seed=0, n_interior=1000):
    """Delaunay triangulation of [0, 2] x [0, 1] with 1100 vertices.

    The boundary carries 100 evenly spaced vertices (33 per long side, 17
    per short side, corners shared); interior vertices are uniform random
    and kept a small distance from the boundary.
    """
    from scipy.spatial import Delaunay

    xs = np.linspace(0, 2, 34)
    ys = np.linspace(0, 1, 18)
    bottom = np.stack([xs[:-1], np.zeros(33)], axis=1)
    right = np.stack([np.full(17, 2.0), ys[:-1]], axis=1)
    top = np.stack([xs[::-1][:-1], np.ones(33)], axis=1)
    left = np.stack([np.zeros(17), ys[::-1][:-1]], axis=1)
    boundary = np.concatenate([bottom, right, top, left])
    rng = np.random.default_rng([seed, 0x6D])
    margin = 0.01
    interior = np.stack([rng.uniform(margin, 2 - margin, n_interior),
                         rng.uniform(margin, 1 - margin, n_interior)], axis=1)
    pts = np.concatenate([boundary, interior])
    tri = Delaunay(pts)
    return pts, np.sort(tri.simplices, axis=1)


def woven_critical_points(spec, t):
    """Noise-free critical points of the spiral woven field at layer time ``t``.

    ``cos(u) sin(v)`` has extrema at ``(k pi, pi/2 + m pi)`` and saddles at
    ``(pi/2 + k pi, m pi)`` in the rotated frame ``(u, v)``; returns
    ``[(grid x, grid y, type)]`` inside the grid.
    """
    tt = t * spec.dt
    half = spec.scale / 2 * np.sqrt(2) + np.pi
    kmax = int(np.ceil(half / np.pi)) + 1
    out = []
    c, s = np.cos(tt), np.sin(tt)
    for k in range(-kmax, kmax + 1):
        for m in range(-kmax, kmax + 1):
            for u, v, kind in ((k * np.pi, np.pi / 2 + m * np.pi, None),
                               (np.pi / 2 + k * np.pi, m * np.pi, "saddle-scalar")):
                if kind is None:
                    kind = "max" if np.cos(u) * np.sin(v) > 0 else "min"
                # invert the rotation (u, v) = R(t) (x, y)
                x = c * u + s * v
                y = -s * u + c * v
                gx = (x / spec.scale + 0.5) * (spec.dims[0] - 1)
                gy = (y / spec.scale + 0.5) * (spec.dims[1] - 1)
                if 0 <= gx <= spec.dims[0] - 1 and 0 <= gy <= spec.dims[1] - 1:
                    out.append((float(gx), float(gy), kind))
    return sorted(out)


def ground_truth(spec, t):
    """Analytic feature locus at layer time ``t`` in grid coordinates.

    Returns a dict whose ``"type"`` is ``point``, ``points``, ``plane`` or
    ``line``; noisy kinds report the noise-free locus and ``turbulent`` has
    none (``{"type": None}``).
    """
    kind = spec.kind
    if kind == "moving_minimum":
        c = np.asarray(spec.origin, float) + np.asarray(spec.direction, float) * t * spec.dt
        return {"type": "point", "x": tuple(float(v) for v in c)}
    if kind == "moving_plane":
        return {"type": "plane", "axis": 0, "offset": spec.alpha * t * spec.dt}
    if kind == "line_vortex":
        xc, yc = line_vortex_center(spec, t * spec.dt)
        return {"type": "line", "x": float(xc), "y": float(yc), "axis": 2}
    if kind == "double_gyre":
        omega = spec.extra.get("omega", GYRE_OMEGA)
        return {"type": "points", "points": double_gyre_centers(t * spec.dt, omega)}
    if kind == "spiral_woven":
        return {"type": "points", "points": woven_critical_points(spec, t)}
    if kind == "merger":
        c1, c2 = _merger_centers(t * spec.dt)
        pts = []
        for c in (c1, c2):
            phys = c * spec.scale / 2
            pts.append(tuple(float((p / spec.scale + 0.5) * (n - 1)) for p, n in zip(phys, spec.dims)))
        return {"type": "points", "points": sorted(pts)}
    return {"type": None}


def random_rational_direction(rng, n=3, max_q=19, bound=0.4):
    """Direction with rational components ``k/q`` so the path hits grid vertices.

    With integer x0 the minimum sits on a grid vertex at t = 0 and again at
    every multiple of the common denominator.
    """
    out = []
    for _ in range(n):
        while True:
            q = int(rng.integers(1, max_q + 1))
            k = int(rng.integers(-q, q + 1))
            fr = Fraction(k, q)
            if abs(fr) <= bound:
                out.append(float(fr))
                break
    return tuple(out)
