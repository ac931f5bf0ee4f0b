"""Streaming access to time-varying fields through a two-layer window."""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .mesh import ExtrudedPrismaticMesh, RegularSpacetimeMesh

_DTYPES = {"float32": "<f4", "float64": "<f8"}


@dataclass(frozen=True)
class RawVolumeSpec:
    """Layout of one timestep stored as a headerless little-endian volume.

    Samples are row-major with x fastest; multi-component samples are
    interleaved (component fastest). ``pattern`` holds one printf-style
    integer placeholder for the timestep, e.g. ``data-%04d.raw``.
    """

    dims: tuple
    dtype: str = "float32"
    components: int = 1
    pattern: str = "data-%04d.raw"

    def __post_init__(self):
        if self.dtype not in _DTYPES:
            raise ValueError(f"dtype must be one of {sorted(_DTYPES)}, got {self.dtype!r}")
        if self.components < 1:
            raise ValueError("components must be >= 1")
        if not self.dims or any(int(d) < 1 for d in self.dims):
            raise ValueError(f"invalid dims {self.dims}")
        try:
            self.pattern % 0
        except TypeError:
            raise ValueError(f"pattern {self.pattern!r} needs one integer placeholder") from None

    @property
    def n_samples(self):
        return int(np.prod(self.dims))

    @property
    def nbytes(self):
        return self.n_samples * np.dtype(_DTYPES[self.dtype]).itemsize * self.components

    def path(self, layer):
        return self.pattern % layer

    def read(self, layer):
        """Samples of one timestep as float64 of shape ``(n_samples, components)``."""
        path = self.path(layer)
        size = os.path.getsize(path)
        if size != self.nbytes:
            raise ValueError(f"{path}: expected {self.nbytes} bytes for dims={self.dims} "
                             f"x {self.components} {self.dtype}, found {size}")
        raw = np.fromfile(path, dtype=_DTYPES[self.dtype])
        return raw.astype(np.float64).reshape(self.n_samples, self.components)

    def write(self, layer, values):
        values = np.asarray(values, dtype=np.float64).reshape(self.n_samples, self.components)
        path = self.path(layer)
        d = os.path.dirname(path)
        if d:
            os.makedirs(d, exist_ok=True)
        values.astype(_DTYPES[self.dtype]).tofile(path)
        return path


@dataclass
class LayerData:
    """Samples of one timestep plus quantities derived from them."""

    layer: int
    values: np.ndarray  # (nspace, components)
    derived: dict = field(default_factory=dict)

    def __getitem__(self, key):
        return self.derived[key]


@dataclass
class FieldWindow:
    """Layers ``tau`` and ``tau + 1``; ``upper`` is None at the last layer."""

    tau: int
    lower: LayerData
    upper: Optional[LayerData]

    @property
    def is_last(self):
        return self.upper is None

    def layer(self, t):
        if t == self.tau:
            return self.lower
        if self.upper is not None and t == self.tau + 1:
            return self.upper
        raise KeyError(f"layer {t} is not in the window ({self.tau}, {self.tau + 1})")

    def stacked(self, key):
        """``key`` arrays of both layers concatenated (lower first)."""
        if self.upper is None:
            return self.lower[key]
        return np.concatenate([self.lower[key], self.upper[key]])


def advance(window, next_layer):
    """Slide the window by one layer; ``next_layer`` is None past the end.

    Returns the new window or None once the stream is exhausted.
    """
    if window.upper is None:
        return None
    if next_layer is not None:
        if next_layer.layer != window.tau + 2:
            raise ValueError(f"expected layer {window.tau + 2}, got {next_layer.layer}")
        if next_layer.values.shape != window.upper.values.shape:
            raise ValueError(f"layer {next_layer.layer} has shape {next_layer.values.shape}, "
                             f"expected {window.upper.values.shape}")
    return FieldWindow(window.tau + 1, window.upper, next_layer)


class FieldStream:
    """Reads layers one at a time and yields sliding two-layer windows.

    Parameters
    ----------
    reader : callable
        ``reader(layer)`` returns samples of shape ``(nspace,)`` or
        ``(nspace, components)``.
    n_layers : int
    prepare : callable, optional
        ``prepare(LayerData)`` fills ``derived``; called once per layer.
    """

    def __init__(self, reader: Callable, n_layers: int, prepare: Optional[Callable] = None):
        if n_layers < 1:
            raise ValueError("need at least one layer")
        self.reader = reader
        self.n_layers = n_layers
        self.prepare = prepare
        self.reads = 0

    def load(self, layer):
        values = np.asarray(self.reader(layer), dtype=np.float64)
        if values.ndim == 1:
            values = values[:, None]
        self.reads += 1
        data = LayerData(layer, values)
        if self.prepare is not None:
            self.prepare(data)
        return data

    def windows(self):
        first = self.load(0)
        win = FieldWindow(0, first, self.load(1) if self.n_layers > 1 else None)
        while win is not None:
            yield win
            nxt = win.tau + 2
            win = advance(win, self.load(nxt) if nxt < self.n_layers else None)

    @classmethod
    def from_arrays(cls, arrays, prepare=None):
        arrays = list(arrays)
        return cls(lambda t: arrays[t], len(arrays), prepare)

    @classmethod
    def from_raw(cls, spec: RawVolumeSpec, n_layers, prepare=None):
        return cls(spec.read, n_layers, prepare)


# ------------------------------------------------------------------ derivatives
def _grid_view(mesh, a):
    """Reshape ``(nspace, ...)`` data to ``(nz, ny, nx, ...)``."""
    return a.reshape(tuple(reversed(mesh.dims)) + a.shape[1:])


def gradient(mesh, f):
    """Per-vertex spatial gradient of a scalar field, shape ``(nspace, n)``.

    Regular grids use central differences in the interior and one-sided
    differences on the boundary with unit spacing; unstructured meshes
    average the gradients of the linear fits on incident cells.
    """
    f = np.asarray(f, dtype=np.float64).reshape(-1)
    if isinstance(mesh, RegularSpacetimeMesh):
        g = _grid_view(mesh, f)
        n = mesh.n
        return np.stack([np.gradient(g, axis=n - 1 - d).reshape(-1) for d in range(n)], axis=1)
    if isinstance(mesh, ExtrudedPrismaticMesh):
        mesh = mesh.base
    cell_g = cell_gradients(mesh, f[:, None])[:, 0, :]
    return _vertex_average(mesh, cell_g)


def cell_gradients(base, values):
    """Linear-fit gradients per cell: ``(ncells, components, n)``."""
    cells = base.cells
    x = base.vertices[cells]  # (nc, n+1, n)
    e = x[:, 1:] - x[:, :1]
    dv = values[cells[:, 1:]] - values[cells[:, :1]]  # (nc, n, comps)
    g = np.linalg.solve(e, dv)  # (nc, n, comps): d value / d x
    return np.swapaxes(g, 1, 2)


def _vertex_average(base, per_cell):
    out = np.zeros((base.nv,) + per_cell.shape[1:])
    cnt = np.zeros(base.nv)
    for j in range(base.n + 1):
        np.add.at(out, base.cells[:, j], per_cell)
        np.add.at(cnt, base.cells[:, j], 1.0)
    cnt[cnt == 0] = 1.0
    return out / cnt.reshape((-1,) + (1,) * (out.ndim - 1))


def _vertex_jacobian(mesh, v, p):
    """Central-difference Jacobian of ``v`` at lattice vertices ``p`` (m, n)."""
    n = mesh.n
    dims = np.asarray(mesh.dims)
    strides = np.asarray(mesh.strides)
    base = p @ strides
    jac = np.empty((len(p), n, n))
    for d in range(n):
        up = np.minimum(p[:, d] + 1, dims[d] - 1)
        dn = np.maximum(p[:, d] - 1, 0)
        iu = base + (up - p[:, d]) * strides[d]
        idn = base + (dn - p[:, d]) * strides[d]
        jac[:, :, d] = (v[iu] - v[idn]) / (up - dn)[:, None]
    return jac


def jacobians_at(mesh, window, key, points, support=None):
    """Spatial Jacobians of vector field ``key`` at spacetime points.

    Regular meshes difference the field at the nearest lattice vertex;
    unstructured meshes use the linear fit on one base cell containing
    ``support`` (base simplex ids). Both blend linearly between the two
    layers of the window.
    """
    points = np.atleast_2d(np.asarray(points, dtype=np.float64))
    if not len(points):
        return np.empty((0, mesh.n, mesh.n))
    w = np.clip(points[:, -1] - window.tau, 0.0, 1.0)
    layers = [window.lower] + ([window.upper] if window.upper is not None else [])
    jac = []
    for data in layers:
        v = data[key]
        if isinstance(mesh, RegularSpacetimeMesh):
            p = np.clip(np.rint(points[:, :-1]).astype(np.int64), 0, np.asarray(mesh.dims) - 1)
            jac.append(_vertex_jacobian(mesh, v, p))
        else:
            if "cell_jacobian" not in data.derived or data.derived.get("_cj_key") != key:
                data.derived["cell_jacobian"] = cell_gradients(mesh.base, v)
                data.derived["_cj_key"] = key
            cells = np.asarray([_owning_cell(mesh.base, s) for s in support], dtype=np.int64)
            jac.append(data.derived["cell_jacobian"][cells])
    if len(jac) == 1:
        return jac[0]
    return (1 - w)[:, None, None] * jac[0] + w[:, None, None] * jac[1]


def _owning_cell(base, simplex):
    """Lowest-id cell containing a base simplex given as a sorted vertex tuple."""
    simplex = tuple(int(v) for v in simplex)
    d = len(simplex) - 1
    sid = base.index[d][simplex]
    while d < base.n:
        sid = min(base.parents[d][sid])
        d += 1
    return sid


def jacobian_at(mesh, window, key, point, support=None):
    """Jacobian at a single spacetime point (see :func:`jacobians_at`)."""
    return jacobians_at(mesh, window, key, [point], None if support is None else [support])[0]
