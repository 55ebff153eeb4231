"""Uniform rectangular grids with homogeneous Dirichlet boundary.

Fields are plain ``numpy`` arrays of shape ``grid.shape`` holding values at
interior nodes; boundary values are implicitly zero.  The gradient lives on
the ``n + 1`` cell edges of each axis so that the discrete Green identity
``<lap u, u> = -|grad u|^2`` holds to rounding error.
"""
from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.sparse as sp

from .errors import InvalidParameterError

NORM_KINDS = ("L2", "Linf", "L3", "L4", "H1semi", "H2viaLap", "H3viaGradLap")


@dataclass(frozen=True)
class Grid:
    """Interior nodes of ``[0, extents[0]] x ... `` with ``n`` nodes per axis.

    Parameters
    ----------
    extents : tuple of float
        Physical side lengths (m), one per axis (1 or 2 axes).
    n : tuple of int
        Interior node counts per axis, each at least 3.
    """

    extents: tuple
    n: tuple

    def __post_init__(self):
        extents = tuple(float(e) for e in np.atleast_1d(self.extents))
        n = tuple(int(k) for k in np.atleast_1d(self.n))
        object.__setattr__(self, "extents", extents)
        object.__setattr__(self, "n", n)
        if len(extents) not in (1, 2) or len(n) != len(extents):
            raise InvalidParameterError("grid must be 1D or 2D with one n per axis")
        if any(k < 3 for k in n):
            raise InvalidParameterError(f"need at least 3 interior nodes per axis, got {n}")
        if any(not np.isfinite(e) or e <= 0 for e in extents):
            raise InvalidParameterError(f"extents must be positive, got {extents}")

    @property
    def dims(self):
        return len(self.n)

    @property
    def shape(self):
        return self.n

    @property
    def size(self):
        return int(np.prod(self.n))

    @property
    def h(self):
        return tuple(e / (k + 1) for e, k in zip(self.extents, self.n))

    @property
    def cell_volume(self):
        return float(np.prod(self.h))

    @property
    def volume(self):
        return float(np.prod(self.extents))

    def axes(self):
        """Interior node coordinates per axis."""
        return [h * np.arange(1, k + 1) for h, k in zip(self.h, self.n)]

    def coords(self):
        """Meshgrid (``ij`` indexing) of interior node coordinates."""
        return np.meshgrid(*self.axes(), indexing="ij")

    def zeros(self):
        return np.zeros(self.shape)

    def sine_mode(self, modes):
        """Product of ``sin(m pi x / L)`` over axes: a Dirichlet eigenfield."""
        modes = tuple(np.atleast_1d(modes))
        out = np.ones(self.shape)
        for axis, (x, m, L) in enumerate(zip(self.coords(), modes, self.extents)):
            out = out * np.sin(m * np.pi * x / L)
        return out

    def mode_eigenvalue(self, modes):
        """Magnitude of the discrete Laplacian eigenvalue of ``sine_mode(modes)``."""
        modes = tuple(np.atleast_1d(modes))
        return float(sum(
            2.0 / h**2 * (1.0 - np.cos(m * np.pi * h / L))
            for m, h, L in zip(modes, self.h, self.extents)
        ))

    # -- operators -------------------------------------------------------

    def _check(self, f):
        f = np.asarray(f, dtype=float)
        if f.shape != self.shape:
            raise InvalidParameterError(f"field shape {f.shape} does not match grid {self.shape}")
        return f

    def laplacian(self, f):
        """Centred second-order Laplacian with zero ghost values."""
        f = self._check(f)
        out = np.zeros_like(f)
        padded = np.pad(f, 1)
        core = tuple(slice(1, -1) for _ in range(self.dims))
        for axis, h in enumerate(self.h):
            lo = list(core)
            hi = list(core)
            lo[axis] = slice(0, -2)
            hi[axis] = slice(2, None)
            out += (padded[tuple(lo)] - 2.0 * f + padded[tuple(hi)]) / h**2
        return out

    def gradient(self, f, ghost=0.0):
        """Edge differences per axis; component ``i`` has ``n_i + 1`` entries along axis ``i``.

        ``ghost`` is the boundary value used outside the domain, or ``"edge"``
        to replicate the nearest interior value (zero boundary flux), which is
        what coefficient fields such as ``alpha`` and ``r`` need.
        """
        f = self._check(f)
        out = []
        for axis, h in enumerate(self.h):
            width = [(0, 0)] * self.dims
            width[axis] = (1, 1)
            if isinstance(ghost, str):
                if ghost != "edge":
                    raise InvalidParameterError(f"unknown ghost mode {ghost!r}")
                padded = np.pad(f, width, mode="edge")
            else:
                padded = np.pad(f, width, constant_values=float(ghost))
            out.append(np.diff(padded, axis=axis) / h)
        return out

    def edge_average(self, w):
        """Average a nodal weight onto the edges used by :meth:`gradient`."""
        w = self._check(w)
        out = []
        for axis in range(self.dims):
            width = [(0, 0)] * self.dims
            width[axis] = (1, 1)
            padded = np.pad(w, width, mode="edge")
            lo = [slice(None)] * self.dims
            hi = [slice(None)] * self.dims
            lo[axis] = slice(0, -1)
            hi[axis] = slice(1, None)
            out.append(0.5 * (padded[tuple(lo)] + padded[tuple(hi)]))
        return out

    @cached_property
    def laplacian_matrix(self):
        """Sparse CSR matrix of :meth:`laplacian` acting on row-major fields."""
        mats = []
        for h, k in zip(self.h, self.n):
            mats.append(sp.diags([1.0, -2.0, 1.0], [-1, 0, 1], shape=(k, k)) / h**2)
        if self.dims == 1:
            return mats[0].tocsr()
        i0 = sp.identity(self.n[0])
        i1 = sp.identity(self.n[1])
        return (sp.kron(mats[0], i1) + sp.kron(i0, mats[1])).tocsr()

    # -- quadrature and norms ---------------------------------------------

    def integrate(self, f):
        """Rectangle-rule integral over interior nodes."""
        return float(np.sum(f) * self.cell_volume)

    def inner(self, u, v):
        return float(np.sum(self._check(u) * self._check(v)) * self.cell_volume)

    def lp(self, f, p):
        f = np.abs(self._check(f))
        if np.isinf(p):
            return float(f.max(initial=0.0))
        return float((np.sum(f**p) * self.cell_volume) ** (1.0 / p))

    def grad_lp(self, f, p=2, ghost=0.0):
        """``L^p`` norm of the edge gradient (components pooled)."""
        comps = self.gradient(f, ghost=ghost)
        if np.isinf(p):
            return float(max(np.abs(g).max(initial=0.0) for g in comps))
        total = sum(float(np.sum(np.abs(g) ** p)) for g in comps)
        return float((total * self.cell_volume) ** (1.0 / p))

    def norm(self, f, kind="L2"):
        if kind == "L2":
            return self.lp(f, 2)
        if kind == "Linf":
            return self.lp(f, np.inf)
        if kind == "L3":
            return self.lp(f, 3)
        if kind == "L4":
            return self.lp(f, 4)
        if kind == "H1semi":
            return self.grad_lp(f, 2)
        if kind == "H2viaLap":
            return self.lp(self.laplacian(f), 2)
        if kind == "H3viaGradLap":
            return self.grad_lp(self.laplacian(f), 2)
        raise InvalidParameterError(f"unknown norm kind {kind!r}; expected one of {NORM_KINDS}")

    def weighted_l2(self, f, w):
        """``sqrt(integral of w f^2)``; ``w`` must be nonnegative."""
        f = self._check(f)
        w = self._check(w)
        if np.any(w < 0):
            raise InvalidParameterError("energy weights must be nonnegative")
        return float(np.sqrt(np.sum(w * f * f) * self.cell_volume))

    def weighted_grad_sq(self, f, w=None, ghost=0.0):
        """``integral of w |grad f|^2`` with ``w`` averaged to edges."""
        comps = self.gradient(f, ghost=ghost)
        if w is None:
            return float(sum(np.sum(g * g) for g in comps) * self.cell_volume)
        w = self._check(w)
        if np.any(w < 0):
            raise InvalidParameterError("energy weights must be nonnegative")
        weights = self.edge_average(w)
        return float(sum(np.sum(we * g * g) for we, g in zip(weights, comps)) * self.cell_volume)
