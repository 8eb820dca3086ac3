"""Truncated-lattice state space and Fourier multiplier calculus.

Conventions
-----------
Sites of the d-dimensional box run over {-L, ..., L}^d with N = 2L+1
points per axis.  A field value at site n is stored at array index
i_j = n_j + L along axis j; flattening in C order gives the site
bijection {-L..L}^d -> {0..N^d-1}.

The dual grid carries momenta xi_k = 2*pi*k/N, k in {-L..L}, per axis
(odd N, so the grid is symmetric inside (-pi, pi)).  The transform pair is

    Fu(xi)  = (2*pi)^(-d/2) * sum_n exp(-i n.xi) u[n]
    F*g[n]  = (2*pi)^(-d/2) * (2*pi/N)^d * sum_k exp(+i n.xi_k) g(xi_k)

realised with the FFT; with the quadrature weight (2*pi/N)^d on the
momentum side the pair is exactly unitary on the box.

Sign convention for the free operator: the kinetic term (-1/2 times the
nearest-neighbour sum) is the Fourier multiplier by

    band_energy(xi) = -sum_j cos(xi_j),

whose gradient is the group velocity velocity(xi) = sin(xi).  Energies,
spectral windows and escape regions all refer to band_energy, so packets
filtered to an energy window really do travel at velocity(xi).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "LatticeBox",
    "LatticeField",
    "MomentumGrid",
    "MomentumField",
    "EnergyWindow",
    "band_energy",
    "velocity",
    "speed_squared",
    "evaluate_symbols",
    "threshold_energies",
    "fourier_forward",
    "fourier_inverse",
    "apply_multiplier",
    "discrete_derivative",
    "smoothstep",
    "spectral_window",
    "build_wavepacket",
    "HESSIAN_MARGIN",
]

# Default lower bound kept on |cos(xi_j)| over wave-packet supports, so the
# dispersion Hessian det = prod_j cos(xi_j) stays away from zero.
HESSIAN_MARGIN = 0.2

_MAX_SITES_DEFAULT = 2**24


@dataclass(frozen=True)
class LatticeBox:
    """Truncated periodic box {-L..L}^d, lattice spacing 1, hbar = 1."""

    dimension: int
    half_width: int
    max_sites: int = _MAX_SITES_DEFAULT

    def __post_init__(self):
        if self.dimension < 1:
            raise ValueError("dimension must be >= 1")
        if self.half_width < 1:
            raise ValueError("half_width must be >= 1")
        if self.points_per_axis**self.dimension > self.max_sites:
            raise ValueError(
                f"box with {self.points_per_axis}^{self.dimension} sites exceeds "
                f"the budget of {self.max_sites}"
            )

    @property
    def points_per_axis(self) -> int:
        return 2 * self.half_width + 1

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.points_per_axis,) * self.dimension

    @property
    def total_sites(self) -> int:
        return self.points_per_axis**self.dimension

    def site_axis(self) -> np.ndarray:
        """Site coordinates -L..L along one axis, in storage order."""
        return np.arange(-self.half_width, self.half_width + 1)

    def site_index(self, n) -> int:
        """Flat index of site n under the documented C-order bijection."""
        n = np.asarray(n, dtype=int)
        if n.shape != (self.dimension,):
            raise ValueError("site has wrong dimension")
        if np.any(np.abs(n) > self.half_width):
            raise ValueError("site outside the box")
        idx = n + self.half_width
        return int(np.ravel_multi_index(tuple(idx), self.shape))

    def site_of_index(self, flat: int) -> np.ndarray:
        idx = np.unravel_index(flat, self.shape)
        return np.asarray(idx) - self.half_width


@dataclass
class LatticeField:
    """Complex-valued function on a LatticeBox."""

    box: LatticeBox
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.complex128)
        if self.values.shape != self.box.shape:
            raise ValueError(
                f"values shape {self.values.shape} does not match box {self.box.shape}"
            )

    def norm(self) -> float:
        return float(np.linalg.norm(self.values.ravel()))

    def copy(self) -> "LatticeField":
        return LatticeField(self.box, self.values.copy())

    @classmethod
    def zero(cls, box: LatticeBox) -> "LatticeField":
        return cls(box, np.zeros(box.shape, dtype=np.complex128))

    @classmethod
    def delta(cls, box: LatticeBox, site=None) -> "LatticeField":
        """Unit mass at a single site (default: the origin)."""
        f = cls.zero(box)
        n = np.zeros(box.dimension, dtype=int) if site is None else np.asarray(site)
        f.values[tuple(n + box.half_width)] = 1.0
        return f


@dataclass(frozen=True)
class MomentumGrid:
    """Uniform dual grid, per-axis momenta 2*pi*k/N with k = -L..L ascending."""

    box: LatticeBox

    @property
    def spacing(self) -> float:
        return 2.0 * np.pi / self.box.points_per_axis

    def axis(self) -> np.ndarray:
        """Momentum values along one axis, ascending, inside (-pi, pi)."""
        L = self.box.half_width
        return 2.0 * np.pi * np.arange(-L, L + 1) / self.box.points_per_axis

    def meshgrid(self) -> list[np.ndarray]:
        ax = self.axis()
        return list(np.meshgrid(*([ax] * self.box.dimension), indexing="ij"))

    def weight(self) -> float:
        """Quadrature weight per grid point making the transform unitary."""
        return self.spacing**self.box.dimension


@dataclass
class MomentumField:
    """Complex-valued function on a MomentumGrid."""

    grid: MomentumGrid
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.complex128)
        if self.values.shape != self.grid.box.shape:
            raise ValueError("values shape does not match grid")

    def norm(self) -> float:
        return float(
            np.sqrt(self.grid.weight() * np.sum(np.abs(self.values.ravel()) ** 2))
        )


# -- free-operator symbols ---------------------------------------------------


def band_energy(xi) -> np.ndarray:
    """Dispersion of the kinetic term: -sum_j cos(xi_j).

    xi has shape (..., d); the result drops the last axis.  The sign is
    fixed so that the group velocity is the gradient: d(band)/d(xi_j)
    = sin(xi_j).
    """
    xi = np.asarray(xi, dtype=float)
    return -np.sum(np.cos(xi), axis=-1)


def velocity(xi) -> np.ndarray:
    """Group velocity sin(xi), shape-preserving."""
    return np.sin(np.asarray(xi, dtype=float))


def speed_squared(xi) -> np.ndarray:
    """|velocity|^2 = sum_j sin^2(xi_j); positive off the threshold shells."""
    xi = np.asarray(xi, dtype=float)
    return np.sum(np.sin(xi) ** 2, axis=-1)


def evaluate_symbols(xi):
    """(band energy, velocity vector, speed squared) at a momentum point."""
    xi = np.asarray(xi, dtype=float)
    return band_energy(xi), velocity(xi), speed_squared(xi)


def threshold_energies(dimension: int) -> np.ndarray:
    """Energies {-d, -d+2, ..., d} where the velocity can vanish on shell."""
    return np.arange(-dimension, dimension + 1, 2, dtype=float)


def band_energy_on_grid(grid: MomentumGrid) -> np.ndarray:
    """band_energy sampled on the full grid, shape (N,)*d."""
    ax = grid.axis()
    d = grid.box.dimension
    out = np.zeros(grid.box.shape)
    for j in range(d):
        shape = [1] * d
        shape[j] = ax.size
        out -= np.cos(ax).reshape(shape)
    return out


# -- transforms and multipliers ----------------------------------------------


def _to_fft_order(values: np.ndarray, box: LatticeBox) -> np.ndarray:
    # site n stored at n+L  ->  site n stored at n mod N
    return np.roll(values, -box.half_width, axis=tuple(range(box.dimension)))


def _from_fft_order(values: np.ndarray, box: LatticeBox) -> np.ndarray:
    return np.roll(values, box.half_width, axis=tuple(range(box.dimension)))


def fourier_forward(u: LatticeField) -> MomentumField:
    """Discrete Fourier transform onto the dual grid (unitary)."""
    box = u.box
    work = np.fft.fftn(_to_fft_order(u.values, box))
    work = np.fft.fftshift(work)
    work *= (2.0 * np.pi) ** (-box.dimension / 2.0)
    return MomentumField(MomentumGrid(box), work)


def fourier_inverse(g: MomentumField) -> LatticeField:
    box = g.grid.box
    work = np.fft.ifftshift(g.values)
    work = np.fft.ifftn(work)
    work *= (2.0 * np.pi) ** (box.dimension / 2.0)
    return LatticeField(box, _from_fft_order(work, box))


def apply_multiplier(multiplier, u: LatticeField) -> LatticeField:
    """Apply a Fourier multiplier: F* (m(xi) Fu).

    `multiplier` is either an array sampled on the (ascending) momentum
    grid or a callable taking the list of per-axis meshgrid arrays.
    """
    box = u.box
    grid = MomentumGrid(box)
    if callable(multiplier):
        m = multiplier(grid.meshgrid())
    else:
        m = np.asarray(multiplier)
    if m.shape != box.shape:
        raise ValueError(f"multiplier shape {m.shape} does not match grid {box.shape}")
    if not np.all(np.isfinite(m)):
        raise ValueError("multiplier has non-finite values")
    work = np.fft.fftn(_to_fft_order(u.values, box))
    work *= np.fft.ifftshift(m)
    work = np.fft.ifftn(work)
    return LatticeField(box, _from_fft_order(work, box))


def discrete_derivative(values: np.ndarray, alpha) -> np.ndarray:
    """Iterated backward difference D_j f[n] = f[n] - f[n - e_j].

    `values` is a plain array over a site block; applying order alpha_j
    along axis j trims alpha_j entries from the *low* end of that axis,
    so the output index i corresponds to input index i + alpha_j.
    """
    alpha = np.atleast_1d(np.asarray(alpha, dtype=int))
    out = np.asarray(values, dtype=float)
    if alpha.size != out.ndim:
        raise ValueError("multi-index length must match array dimension")
    if np.any(alpha < 0):
        raise ValueError("multi-index must be nonnegative")
    for axis, order in enumerate(alpha):
        for _ in range(order):
            if out.shape[axis] < 2:
                raise ValueError("block too small for requested difference order")
            hi = [slice(None)] * out.ndim
            lo = [slice(None)] * out.ndim
            hi[axis] = slice(1, None)
            lo[axis] = slice(None, -1)
            out = out[tuple(hi)] - out[tuple(lo)]
    return out


# -- energy windows and spectral cutoffs ---------------------------------------


def smoothstep(s):
    """C-infinity step: 0 for s<=0, 1 for s>=1, with step(s)+step(1-s)=1."""
    s = np.asarray(s, dtype=float)
    scalar = s.ndim == 0
    s = np.atleast_1d(s)
    out = np.zeros_like(s)
    out[s >= 1.0] = 1.0
    mid = (s > 0.0) & (s < 1.0)
    sm = s[mid]
    out[mid] = 1.0 / (1.0 + np.exp(1.0 / sm - 1.0 / (1.0 - sm)))
    return float(out[0]) if scalar else out


@dataclass(frozen=True)
class EnergyWindow:
    """Energy interval [a, b] kept clear of the threshold energies.

    `delta` is the shell-enlargement margin: the window plus [-delta,
    delta] must still avoid every threshold.  `smoothing` is the roll-off
    width of the smoothed spectral cutoff (defaults to delta/2).
    """

    a: float
    b: float
    delta: float
    smoothing: float = field(default=0.0)

    def __post_init__(self):
        if not self.a < self.b:
            raise ValueError("window must have a < b")
        if self.delta <= 0:
            raise ValueError("margin delta must be positive")
        if self.smoothing == 0.0:
            object.__setattr__(self, "smoothing", self.delta / 2.0)
        if self.smoothing <= 0 or self.smoothing > self.delta:
            raise ValueError("smoothing width must lie in (0, delta]")

    def validate(self, dimension: int) -> None:
        thr = threshold_energies(dimension)
        gap = float(np.min(np.minimum(np.abs(thr - self.a), np.abs(thr - self.b))))
        inside = np.any((thr > self.a) & (thr < self.b))
        if inside or gap < self.delta:
            raise ValueError(
                f"window [{self.a}, {self.b}] with margin {self.delta} "
                f"meets a threshold energy of dimension {dimension}"
            )

    def enlarged(self) -> tuple[float, float]:
        return (self.a - self.delta, self.b + self.delta)

    @classmethod
    def with_auto_margin(cls, a: float, b: float, dimension: int,
                         sweep: int = 4096) -> "EnergyWindow":
        """Compute the margin from the window geometry.

        delta = min(dist(I, thresholds)/2, inf{speed_squared on the
        enlarged shell}/2), the largest margin for which the shell both
        avoids thresholds and keeps the speed bounded below by 2*delta.
        """
        thr = threshold_energies(dimension)
        if np.any((thr >= a) & (thr <= b)):
            raise ValueError("window contains a threshold energy")
        gap = float(np.min(np.minimum(np.abs(thr - a), np.abs(thr - b))))
        delta0 = gap / 2.0
        kmin = _min_speed_on_shell(a - delta0, b + delta0, dimension, sweep)
        delta = min(delta0, kmin / 2.0)
        if delta <= 0:
            raise ValueError("window admits no positive margin")
        return cls(a, b, delta)


def _min_speed_on_shell(lo: float, hi: float, dimension: int, sweep: int) -> float:
    """Grid sweep of min speed_squared over {band_energy in [lo, hi]}."""
    if dimension == 1:
        ax = np.linspace(-np.pi, np.pi, sweep, endpoint=False)
        e = -np.cos(ax)
        k = np.sin(ax) ** 2
        mask = (e >= lo) & (e <= hi)
        return float(k[mask].min()) if mask.any() else np.inf
    n = max(64, int(sweep ** (1.0 / dimension)))
    ax = np.linspace(-np.pi, np.pi, n, endpoint=False)
    mesh = np.meshgrid(*([ax] * dimension), indexing="ij")
    e = -sum(np.cos(m) for m in mesh)
    k = sum(np.sin(m) ** 2 for m in mesh)
    mask = (e >= lo) & (e <= hi)
    return float(k[mask].min()) if mask.any() else np.inf


def spectral_window(window: EnergyWindow, grid: MomentumGrid, sharp: bool = False,
                    hessian_margin: float = HESSIAN_MARGIN) -> np.ndarray:
    """Multiplier selecting the energy shell {band_energy in window}.

    sharp=True gives the indicator of the shell.  The smoothed version
    equals 1 where band_energy is inside the window and every |cos(xi_j)|
    >= hessian_margin, rolls off to 0 within the `smoothing`-enlargement,
    and vanishes where any |cos(xi_j)| <= hessian_margin/2.
    """
    window.validate(grid.box.dimension)
    e = band_energy_on_grid(grid)
    if sharp:
        return ((e >= window.a) & (e <= window.b)).astype(float)
    s = window.smoothing
    m = smoothstep((e - (window.a - s)) / s) * smoothstep(((window.b + s) - e) / s)
    half = hessian_margin / 2.0
    for ax_vals in MomentumGrid(grid.box).meshgrid():
        m = m * smoothstep((np.abs(np.cos(ax_vals)) - half) / half)
    return m


# -- wave packets --------------------------------------------------------------


def momentum_bump(xi_axes, center, width: float) -> np.ndarray:
    """Compactly supported radial bump exp(1 - 1/(1-r^2)) around `center`.

    r is the periodic distance |xi - center| / width; the bump vanishes
    identically for r >= 1.
    """
    center = np.atleast_1d(np.asarray(center, dtype=float))
    r2 = np.zeros_like(xi_axes[0])
    for j, ax_vals in enumerate(xi_axes):
        diff = np.angle(np.exp(1j * (ax_vals - center[j])))
        r2 = r2 + diff**2
    r2 = r2 / width**2
    out = np.zeros_like(r2)
    inside = r2 < 1.0
    out[inside] = np.exp(1.0 - 1.0 / (1.0 - r2[inside]))
    return out


def build_wavepacket(box: LatticeBox, xi0, width: float, window: EnergyWindow,
                     hessian_margin: float = HESSIAN_MARGIN) -> LatticeField:
    """Unit-norm field whose momentum density is a bump at xi0 inside the shell.

    Requires band_energy(xi0) in the window and |cos(xi0_j)| > hessian_margin,
    and the whole bump support must satisfy the same two conditions.
    """
    window.validate(box.dimension)
    xi0 = np.atleast_1d(np.asarray(xi0, dtype=float))
    if xi0.shape != (box.dimension,):
        raise ValueError("xi0 has wrong dimension")
    e0 = band_energy(xi0)
    if not (window.a <= e0 <= window.b):
        raise ValueError(f"band_energy(xi0) = {e0:.4f} outside window")
    if np.any(np.abs(np.cos(xi0)) < hessian_margin):
        raise ValueError("xi0 too close to a vanishing dispersion-Hessian factor")

    grid = MomentumGrid(box)
    axes = grid.meshgrid()
    bump = momentum_bump(axes, xi0, width)
    support = bump > 0.0
    e = band_energy_on_grid(grid)
    ok = (e[support] >= window.a) & (e[support] <= window.b)
    for ax_vals in axes:
        ok &= np.abs(np.cos(ax_vals[support])) >= hessian_margin
    if not np.all(ok):
        raise ValueError("width too large: bump support leaves the admissible region")

    g = MomentumField(grid, bump.astype(np.complex128))
    u = fourier_inverse(g)
    u.values /= u.norm()
    return u
