"""Lattice propagators for a scalar particle on ``U = R^d``.

The continuum state space is replaced by a periodic grid. The short-time
complex transition kernel is the Gaussian form

    (x -> x+z over tau) ~ exp(-tau * [0.5 (z/tau - nu) W (z/tau - nu) + nu0])

sampled on the grid and renormalized row by row so that every row sums to
exactly one. Moments of a kernel row give back ``nu0``, ``nu`` and
``nu2 = W^-1`` (rates, i.e. divided by the step), and diagonalizing ``nu2``
gives the weight table that enters the Lagrangian.

For the Schrodinger case ``W = i*mass`` the lattice sums are oscillatory
and do not converge absolutely, so a real regulator ``delta`` is added,
``W = delta + i*mass``, and results are extrapolated to ``delta -> 0``.

Sign convention: with ``W = +i*mass`` the kernel evolves the complex
conjugate of the usual Schrodinger wavefunction. Frequencies are unchanged.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np

from .errors import (
    BoundaryContamination,
    GridTooCoarse,
    SingularMoments,
    SingularW,
    UnregulatedW,
)
from .statespace import Kernel, StateSpace

MIN_POINTS = 8
#: relative deviation of a raw row sum from its continuum value that is still accepted
COARSE_TOL = 0.10
#: kernel magnitude the automatic regulator leaves at the grid edge
EDGE_DECAY = 1e-8
SYMMETRY_TOL = 1e-10


@dataclass(frozen=True)
class Grid:
    """Periodic grid with ``points`` per axis, centred on the origin."""

    points: int
    spacing: float
    dimension: int = 1

    def __post_init__(self):
        if self.points < MIN_POINTS:
            raise GridTooCoarse(f"grid needs at least {MIN_POINTS} points per axis, got {self.points}")
        if not self.spacing > 0:
            raise ValueError("grid spacing must be positive")
        if self.dimension < 1:
            raise ValueError("grid dimension must be at least 1")

    @classmethod
    def from_extent(cls, points: int, extent: float, dimension: int = 1) -> "Grid":
        if points < MIN_POINTS:
            raise GridTooCoarse(f"grid needs at least {MIN_POINTS} points per axis, got {points}")
        return cls(points, extent / points, dimension)

    @property
    def extent(self) -> float:
        return self.points * self.spacing

    @property
    def size(self) -> int:
        return self.points ** self.dimension

    @property
    def cell_volume(self) -> float:
        return self.spacing ** self.dimension

    @property
    def axis(self) -> np.ndarray:
        return (np.arange(self.points) - self.points // 2) * self.spacing

    def coords(self) -> np.ndarray:
        """All grid points, shape ``(size, dimension)``, row-major order."""
        mesh = np.meshgrid(*([self.axis] * self.dimension), indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=-1)

    def wrap(self, z: np.ndarray) -> np.ndarray:
        """Minimal-image displacement on the torus, in ``[-extent/2, extent/2)``."""
        half = self.extent / 2
        return (z + half) % self.extent - half

    def displacements(self) -> np.ndarray:
        """``z[i, j] = x_j - x_i`` (minimal image), shape ``(size, size, dimension)``."""
        c = self.coords()
        return self.wrap(c[None, :, :] - c[:, None, :])

    def displacements_from(self, i: int) -> np.ndarray:
        c = self.coords()
        return self.wrap(c - c[i])

    def inner_mask(self) -> np.ndarray:
        """Points whose every coordinate lies in the inner half of the axis."""
        return (np.abs(self.coords()) < self.extent / 4).all(axis=1)

    def index_of(self, x) -> int:
        x = np.atleast_1d(np.asarray(x, dtype=float))
        if x.shape != (self.dimension,):
            raise ValueError(f"point must have {self.dimension} coordinates")
        idx = np.rint(self.wrap(x) / self.spacing).astype(int) + self.points // 2
        idx %= self.points
        return int(np.ravel_multi_index(tuple(idx), (self.points,) * self.dimension))

    def state_space(self) -> StateSpace:
        return StateSpace(tuple(f"g{i}" for i in range(self.size)))


FieldValue = complex | float | np.ndarray | Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class Fields:
    """Moment fields ``nu0(x)``, ``nu(x)`` and weight table ``W(x)``.

    Each may be a constant or a callable taking grid coordinates of shape
    ``(P, d)`` and returning shape ``(P,)``, ``(P, d)`` or ``(P, d, d)``.
    """

    nu0: FieldValue = 0.0
    nu: FieldValue = 0.0
    W: FieldValue = 1.0

    @classmethod
    def free(cls, mass: float, delta: float = 0.0) -> "Fields":
        """Free particle in one dimension, ``W = delta + i*mass``."""
        return cls(0.0, 0.0, complex(delta, mass))

    def evaluate(self, coords: np.ndarray):
        coords = np.atleast_2d(coords)
        p, d = coords.shape

        def value(f, shape):
            v = f(coords) if callable(f) else f
            v = np.asarray(v, dtype=complex)
            if v.ndim == 0 and len(shape) == 2:
                v = v * np.eye(d)
            return np.broadcast_to(v, (p, *shape)).astype(complex)

        return value(self.nu0, ()), value(self.nu, (d,)), value(self.W, (d, d))

    def at(self, x) -> "MomentData":
        x = np.atleast_2d(np.asarray(x, dtype=float))
        nu0, nu, w = self.evaluate(x)
        return MomentData.from_weight(nu0[0], nu[0], w[0])


@dataclass(frozen=True, eq=False)
class MomentData:
    """Moments of one kernel row plus the weight table derived from them.

    ``M``, ``omega`` and ``W`` are ``None`` until :meth:`with_weights` is
    called (or when ``nu2`` is singular).
    """

    nu0: complex
    nu: np.ndarray
    nu2: np.ndarray
    M: np.ndarray | None = None
    omega: np.ndarray | None = None
    W: np.ndarray | None = None

    @classmethod
    def from_weight(cls, nu0, nu, W) -> "MomentData":
        W = np.atleast_2d(np.asarray(W, dtype=complex))
        try:
            nu2 = np.linalg.inv(W)
        except np.linalg.LinAlgError:
            raise SingularW("weight table is singular") from None
        m = cls(complex(nu0), np.atleast_1d(np.asarray(nu, dtype=complex)), nu2)
        return m.with_weights()

    @property
    def complete(self) -> bool:
        return self.W is not None

    def with_weights(self) -> "MomentData":
        M, omega, W = weight_matrix(self.nu2)
        return replace(self, M=M, omega=omega, W=W)


@dataclass(frozen=True, eq=False)
class GridKernel:
    """Complex transition table between grid points over one step.

    ``prenorm_sums`` keeps the raw row sums from before renormalization;
    ``aliasing`` estimates the per-step amplitude of the first alias of the
    sampled Gaussian (small means the lattice resolves the kernel).
    """

    grid: Grid
    step: float
    entries: np.ndarray
    prenorm_sums: np.ndarray | None = field(default=None, repr=False)
    aliasing: float = 0.0

    def row_sums(self) -> np.ndarray:
        return self.entries.sum(axis=1)

    def __matmul__(self, other: "GridKernel") -> "GridKernel":
        if other.grid != self.grid:
            raise ValueError("kernels are on different grids")
        return GridKernel(self.grid, self.step + other.step, self.entries @ other.entries,
                          aliasing=self.aliasing + other.aliasing)

    def as_kernel(self) -> Kernel:
        return Kernel(self.grid.state_space(), self.entries, self.step)

    def inner_block(self) -> np.ndarray:
        m = self.grid.inner_mask()
        return self.entries[np.ix_(m, m)]


def _sqrt_det(w: np.ndarray) -> np.ndarray:
    # principal root per eigenvalue; Re(eig) > 0 when Re(W) is positive definite
    return np.prod(np.sqrt(np.linalg.eigvals(w)), axis=-1)


def gaussian_step_kernel(fields: Fields, tau: float, grid: Grid) -> GridKernel:
    """Sample the short-time Gaussian kernel on ``grid`` and renormalize its rows.

    Raises
    ------
    SingularW
        ``W`` is not invertible at some grid point.
    UnregulatedW
        the symmetric real part of ``W`` is not positive definite.
    GridTooCoarse
        a raw row sum differs from its continuum value ``exp(-tau*nu0)`` by
        more than 10 %.
    """
    if not tau > 0:
        raise ValueError("step must be positive")
    d = grid.dimension
    coords = grid.coords()
    nu0, nu, w = fields.evaluate(coords)

    det = np.linalg.det(w)
    scale = np.abs(w).max(axis=(1, 2))
    if (np.abs(det) <= 1e-12 * np.maximum(scale, 1e-300) ** d).any():
        raise SingularW("weight table W is singular at some grid point")
    re_sym = 0.5 * (w.real + np.swapaxes(w.real, 1, 2))
    if (np.linalg.eigvalsh(re_sym) <= 0).any():
        raise UnregulatedW("W needs a positive-definite real part (add a regulator delta > 0)")

    y = grid.displacements() - tau * nu[:, None, :]
    q = np.einsum("ijk,ikl,ijl->ij", y, w, y)
    pref = grid.cell_volume * (2 * np.pi * tau) ** (-d / 2) * _sqrt_det(w)
    raw = pref[:, None] * np.exp(-q / (2 * tau) - tau * nu0[:, None])

    sums = raw.sum(axis=1)
    continuum = np.exp(-tau * nu0)
    dev = np.abs(sums / continuum - 1)
    if not (dev <= COARSE_TOL).all():
        worst = int(np.nanargmax(np.where(np.isfinite(dev), dev, np.inf)))
        raise GridTooCoarse(
            f"row {worst}: raw sum {sums[worst]:.6g} deviates {dev[worst]:.3g} from continuum value "
            f"{continuum[worst]:.6g} (spacing {grid.spacing:g}, step {tau:g})")

    # first alias of the sampled Gaussian sits at k = 2*pi/h
    winv_re = np.linalg.eigvalsh(0.5 * np.real(np.linalg.inv(w) + np.swapaxes(np.linalg.inv(w), 1, 2)))
    k_alias = 2 * np.pi / grid.spacing
    aliasing = float(np.exp(-0.5 * tau * k_alias ** 2 * winv_re.min()))

    entries = raw / sums[:, None]
    entries.setflags(write=False)
    sums.setflags(write=False)
    return GridKernel(grid, tau, entries, sums, aliasing)


def refine_and_compose(fields: Fields, tau: float, n: int, grid: Grid) -> GridKernel:
    """Compose ``n`` kernels of step ``tau/n`` into one kernel of step ``tau``."""
    if n < 1:
        raise ValueError("need at least one sub-step")
    k = gaussian_step_kernel(fields, tau / n, grid)
    if n == 1:
        return k
    return GridKernel(grid, tau, np.linalg.matrix_power(k.entries, n), aliasing=n * k.aliasing)


def extract_moments(k: GridKernel, x) -> MomentData:
    """Rate-scaled moments of the kernel row leaving ``x``.

    ``nu0 = (1 - sum mu)/tau``, ``nu_j = sum mu z_j / tau`` and
    ``nu2_jk = sum mu z_j z_k / tau``. The weight table is filled in when
    ``nu2`` is invertible.
    """
    i = k.grid.index_of(x)
    mu = k.entries[i]
    z = k.grid.displacements_from(i)
    tau = k.step
    m = MomentData(
        nu0=complex((1 - mu.sum()) / tau),
        nu=(mu @ z) / tau,
        nu2=np.einsum("p,pj,pk->jk", mu, z, z) / tau,
    )
    try:
        return m.with_weights()
    except SingularMoments:
        return m


def _complex_orthonormalize(vecs: np.ndarray) -> np.ndarray:
    # Gram-Schmidt under the bilinear form u.v (no conjugation)
    out = np.array(vecs, dtype=complex)
    for a in range(out.shape[1]):
        for b in range(a):
            out[:, a] -= (out[:, b] @ out[:, a]) * out[:, b]
        norm2 = out[:, a] @ out[:, a]
        if abs(norm2) < 1e-10:
            raise SingularMoments("moment table has a self-orthogonal eigenvector; not diagonalizable by M^T . M")
        out[:, a] /= np.sqrt(norm2)
    return out


def weight_matrix(nu2, *, tol: float = 1e-12):
    """Diagonalize ``nu2`` as ``M^T nu2 M = diag(1/omega)`` and form ``W = M diag(omega) M^T``.

    ``M`` satisfies ``M^T M = I`` (complex orthogonal when ``nu2`` is
    complex). ``omega`` is in ascending order of real part and each column
    of ``M`` is signed so its largest-magnitude component has a positive
    real part.
    """
    nu2 = np.atleast_2d(np.asarray(nu2))
    n = nu2.shape[0]
    if nu2.shape != (n, n):
        raise SingularMoments(f"moment table must be square, got {nu2.shape}")
    scale = float(np.abs(nu2).max())
    if scale == 0 or not np.isfinite(scale):
        raise SingularMoments("moment table is zero or non-finite")
    if np.abs(nu2 - nu2.T).max() > SYMMETRY_TOL * max(scale, 1.0):
        raise SingularMoments("moment table is not symmetric")

    if np.iscomplexobj(nu2) and np.abs(nu2.imag).max() > 0:
        vals, vecs = np.linalg.eig(nu2)
        order = np.argsort(vals.real, kind="stable")
        vals, vecs = vals[order], vecs[:, order]
        M = np.empty_like(vecs)
        # orthonormalize within clusters of (near) equal eigenvalues
        start = 0
        for stop in range(1, n + 1):
            if stop == n or abs(vals[stop] - vals[start]) > 1e-8 * scale:
                M[:, start:stop] = _complex_orthonormalize(vecs[:, start:stop])
                start = stop
    else:
        vals, M = np.linalg.eigh(np.real(nu2))
        M = M.astype(float)

    if (np.abs(vals) <= tol * scale).any():
        raise SingularMoments(f"moment table is singular (eigenvalues {vals})")
    omega = 1 / vals
    order = np.argsort(omega.real, kind="stable")
    omega, M = omega[order], M[:, order]
    for col in range(n):
        j = int(np.argmax(np.abs(M[:, col])))
        if M[j, col].real < 0:
            M[:, col] = -M[:, col]
    W = (M * omega) @ M.T
    return M, omega, W


def lagrangian(m: MomentData, v) -> complex:
    """``(i/2)(v - nu) W (v - nu) - i nu0`` for the moment data at one point."""
    if m.W is None:
        m = m.with_weights()
    y = np.atleast_1d(np.asarray(v, dtype=complex)) - m.nu
    return complex(0.5j * (y @ m.W @ y) - 1j * m.nu0)


def edge_regulator(grid: Grid, step: float, edge_decay: float = EDGE_DECAY) -> float:
    """Smallest ``delta`` for which a step-``step`` kernel decays to ``edge_decay`` at the grid edge."""
    return 2 * step * math.log(1 / edge_decay) / (grid.extent / 2) ** 2


@dataclass(frozen=True)
class GaussianPacket:
    """One-dimensional Gaussian packet; ``width`` is the standard deviation of ``|psi|^2``."""

    center: float = 0.0
    width: float = 1.0
    momentum: float = 0.0

    def _norm(self) -> float:
        return (2 * np.pi * self.width ** 2) ** -0.25

    def sample(self, x: np.ndarray) -> np.ndarray:
        y = x - self.center
        return self._norm() * np.exp(-y ** 2 / (4 * self.width ** 2) + 1j * self.momentum * x)

    def exact(self, x: np.ndarray, t: float, W: complex) -> np.ndarray:
        """Closed-form evolution under the free kernel with weight ``W`` (no lattice)."""
        s0 = self.width ** 2
        k0 = self.momentum
        st = s0 + t / (2 * W)
        q = s0 * k0 / st
        y = x - self.center
        amp = np.sqrt(s0 / st) * np.exp(1j * k0 * self.center + s0 ** 2 * k0 ** 2 / st - s0 * k0 ** 2)
        return self._norm() * amp * np.exp(1j * q * y - y ** 2 / (4 * st))

    def doubling_time(self, mass: float) -> float:
        """Time for the width of ``|psi|^2`` to double under free evolution."""
        return 2 * math.sqrt(3) * mass * self.width ** 2


def _free_mass(fields: Fields) -> tuple[float, float]:
    if callable(fields.nu0) or callable(fields.nu) or callable(fields.W):
        raise ValueError("free-particle check needs constant fields")
    if np.any(np.asarray(fields.nu0) != 0) or np.any(np.asarray(fields.nu) != 0):
        raise ValueError("free-particle check needs nu0 = 0 and nu = 0")
    w = np.asarray(fields.W, dtype=complex)
    if w.size != 1:
        raise ValueError("free-particle check is one-dimensional")
    w = complex(w.reshape(()))
    if w.imag <= 0:
        raise ValueError("free particle needs W = delta + i*mass with mass > 0")
    return w.imag, w.real


def boundary_weight(psi: np.ndarray, grid: Grid, band: float = 1 / 8) -> float:
    """Fraction of ``|psi|^2`` in the outer ``band`` of the grid on each side."""
    x = grid.axis
    w = np.abs(psi) ** 2
    return float(w[np.abs(x) > (0.5 - band) * grid.extent].sum() / w.sum())


def evolve_free(fields: Fields, psi0: np.ndarray, grid: Grid, tau: float, n_steps: int,
                delta: float | None = None) -> np.ndarray:
    """Apply ``n_steps`` free kernels of step ``tau/n_steps`` to a grid function.

    ``delta=None`` uses the regulator from ``fields`` or, when that is zero,
    :func:`edge_regulator` for the sub-step.
    """
    mass, delta0 = _free_mass(fields)
    eps = tau / n_steps
    if delta is None:
        delta = delta0 if delta0 > 0 else edge_regulator(grid, eps)
    k = gaussian_step_kernel(Fields.free(mass, delta), eps, grid)
    psi = np.asarray(psi0, dtype=complex)
    for _ in range(n_steps):
        psi = psi @ k.entries
    return psi


def schrodinger_residual(fields: Fields, packet: GaussianPacket, grid: Grid, tau: float, n_steps: int,
                         *, extrapolate: bool = True, max_boundary_weight: float = 0.01) -> float:
    """Relative L2 distance, on the inner half-grid, between lattice and closed-form evolution.

    The lattice result is computed at regulator ``delta`` and, when
    ``extrapolate`` is set, also at ``2*delta`` and linearly extrapolated to
    ``delta -> 0``. The reference is the unregulated closed form with
    ``W = i*mass``.
    """
    if grid.dimension != 1:
        raise ValueError("the Schrodinger check is one-dimensional")
    mass, _ = _free_mass(fields)
    x = grid.axis
    psi0 = packet.sample(x)
    exact = packet.exact(x, tau, 1j * mass)
    for label, psi in (("initial", psi0), ("final", exact)):
        frac = boundary_weight(psi, grid)
        if frac > max_boundary_weight:
            raise BoundaryContamination(f"{label} packet has {frac:.2%} of its weight near the boundary")
    if n_steps == 0 or tau == 0:
        psi = psi0
    else:
        _, delta0 = _free_mass(fields)
        delta = delta0 if delta0 > 0 else edge_regulator(grid, tau / n_steps)
        psi = evolve_free(fields, psi0, grid, tau, n_steps, delta)
        if extrapolate:
            psi = 2 * psi - evolve_free(fields, psi0, grid, tau, n_steps, 2 * delta)
    inner = np.abs(x) < grid.extent / 4
    return float(np.linalg.norm((psi - exact)[inner]) / np.linalg.norm(exact[inner]))


def schrodinger_scan(mass: float = 1.0, points: int = 256, extent: float = 20.0,
                     refinements: Sequence[int] = (4, 8, 16, 32), delta: float | None = None):
    """Residual against the closed form for a packet evolved until its width doubles.

    Returns rows ``(N, epsilon, delta, residual)``; ``delta`` is the smaller
    regulator of the extrapolation pair.
    """
    grid = Grid.from_extent(points, extent)
    packet = GaussianPacket(0.0, extent / 20)
    tau = packet.doubling_time(mass)
    rows = []
    for n in refinements:
        eps = tau / n
        d = edge_regulator(grid, eps) if delta is None else delta
        r = schrodinger_residual(Fields.free(mass, d), packet, grid, tau, n)
        rows.append((n, eps, d, r))
    return rows


def moment_round_trip(fields: Fields, tau: float, grid: Grid, x=0.0) -> dict:
    """Build a kernel from ``fields``, extract its moments at ``x`` and compare with the inputs."""
    k = gaussian_step_kernel(fields, tau, grid)
    got = extract_moments(k, x)
    want = fields.at(np.atleast_1d(np.asarray(x, dtype=float)))
    return {
        "nu0": (want.nu0, got.nu0),
        "nu": (want.nu, got.nu),
        "nu2": (want.nu2, got.nu2),
    }
