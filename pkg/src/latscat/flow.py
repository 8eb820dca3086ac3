"""Hamilton flow on R^d x T^d: integration and the quantitative probes.

The integrator is kick-drift-kick leapfrog (the Hamiltonian band(xi) +
V(x) is separable), with the step halved automatically until the energy
drift meets the configured tolerance.  Momenta are recorded unwrapped;
reduce_torus() maps back to [-pi, pi) when a torus point is wanted.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import flow_kernels
from .lattice import EnergyWindow, band_energy, speed_squared, velocity
from .potentials import PotentialSpec

__all__ = [
    "PhasePoint", "FlowParams", "Trajectory", "Region", "FlowConstants",
    "reduce_torus", "integrate_flow", "integrate_batch", "integrate_to_times",
    "window_constants", "sample_region_starts", "region_escape_probe",
    "radial_acceleration_residual", "asymptotic_momentum", "variational_probe",
    "rk4_reference", "EnergyDriftError", "EscapeReport", "AsymptoticFit",
    "VariationalReport",
]


class EnergyDriftError(RuntimeError):
    """Raised when step halving cannot reach the drift tolerance."""


def reduce_torus(xi) -> np.ndarray:
    """Reduce each momentum component to [-pi, pi); idempotent."""
    xi = np.asarray(xi, dtype=float)
    return xi - 2.0 * np.pi * np.floor((xi + np.pi) / (2.0 * np.pi))


@dataclass(frozen=True)
class PhasePoint:
    """Point of R^d x T^d; the momentum is stored reduced."""

    x: np.ndarray
    xi: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "x", np.atleast_1d(np.asarray(self.x, dtype=float)))
        object.__setattr__(self, "xi", reduce_torus(np.atleast_1d(self.xi)))
        if self.x.shape != self.xi.shape:
            raise ValueError("x and xi must have the same dimension")


@dataclass
class FlowParams:
    """Integrator configuration; step halves until drift <= tolerance."""

    potential: PotentialSpec
    step: float = 1e-2
    drift_tolerance: float = 1e-8
    max_halvings: int = 8

    def __post_init__(self):
        if self.step <= 0 or self.drift_tolerance <= 0:
            raise ValueError("step and tolerance must be positive")


@dataclass
class Trajectory:
    """Time-sampled flow solution; arrays carry a batch axis m.

    x, xi: (n_times, m, d); action u and energy: (n_times, m).  xi is
    unwrapped; energy is band_energy(xi) + V(x), conserved by the flow.
    """

    times: np.ndarray
    x: np.ndarray
    xi: np.ndarray
    u: np.ndarray
    energy: np.ndarray
    max_drift: float
    step_used: float

    @property
    def batch(self) -> int:
        return self.x.shape[1]

    @property
    def dimension(self) -> int:
        return self.x.shape[2]

    def xi_reduced(self) -> np.ndarray:
        return reduce_torus(self.xi)

    def single(self, i: int = 0) -> "Trajectory":
        return Trajectory(self.times, self.x[:, i : i + 1], self.xi[:, i : i + 1],
                          self.u[:, i : i + 1], self.energy[:, i : i + 1],
                          self.max_drift, self.step_used)


def _kernel_for(spec: PotentialSpec):
    if spec.family == "zero":
        return lambda x, xi, u, h, n, r: flow_kernels.leapfrog_power(
            x, xi, u, 0.0, 1.0, h, n, r)
    if spec.family == "power" and spec.extension_policy == "analytic":
        return lambda x, xi, u, h, n, r: flow_kernels.leapfrog_power(
            x, xi, u, spec.c, spec.mu, h, n, r)

    def run(x, xi, u, h, n, r):
        cont = spec.continuum(x.shape[1])

        def value_grad(pts):
            return cont(pts), cont.gradient(pts)

        return flow_kernels.leapfrog_generic(x, xi, u, value_grad, h, n, r)

    return run


def _integrate_once(spec, x0, xi0, u0, h, n_steps, rec_every):
    kern = _kernel_for(spec)
    return kern(np.atleast_2d(x0), np.atleast_2d(xi0), np.atleast_1d(u0),
                h, n_steps, rec_every)


def integrate_batch(x0, xi0, params: FlowParams, t_final: float,
                    record_stride: Optional[int] = None,
                    u0=None) -> Trajectory:
    """Integrate a batch of starts on a uniform record grid to t_final."""
    x0 = np.atleast_2d(np.asarray(x0, dtype=float))
    xi0 = np.atleast_2d(np.asarray(xi0, dtype=float))
    if u0 is None:
        u0 = np.zeros(x0.shape[0])
    h = params.step
    for attempt in range(params.max_halvings + 1):
        n_steps = max(1, int(round(t_final / h)))
        h_eff = t_final / n_steps
        stride = record_stride or max(1, n_steps // 2048)
        while n_steps % stride != 0:
            stride -= 1
        xs, xis, us, es, drift = _integrate_once(
            params.potential, x0, xi0, u0, h_eff, n_steps, stride)
        if drift <= params.drift_tolerance:
            times = h_eff * stride * np.arange(xs.shape[0])
            return Trajectory(times, xs, xis, us, es, drift, h_eff)
        h *= 0.5
        if record_stride is not None:
            record_stride *= 2
    raise EnergyDriftError(
        f"energy drift {drift:.3e} above {params.drift_tolerance:.1e} "
        f"after {params.max_halvings} halvings")


def integrate_flow(start: PhasePoint, params: FlowParams, t_final: float,
                   record_stride: Optional[int] = None) -> Trajectory:
    """Single-start convenience wrapper around integrate_batch."""
    return integrate_batch(start.x[None, :], start.xi[None, :], params,
                           t_final, record_stride)


def integrate_to_times(x0, xi0, params: FlowParams, times, u0=None) -> Trajectory:
    """Integrate recording exactly at the given ascending times (0 prepended).

    Each segment uses n = ceil(dt/step) substeps so the samples land on
    the requested times; drift is checked over the whole run.
    """
    times = np.asarray(times, dtype=float)
    if times.ndim != 1 or np.any(np.diff(times) <= 0) or times[0] <= 0:
        raise ValueError("times must be strictly increasing and positive")
    x0 = np.atleast_2d(np.asarray(x0, dtype=float))
    xi0 = np.atleast_2d(np.asarray(xi0, dtype=float))
    m, d = x0.shape
    if u0 is None:
        u0 = np.zeros(m)

    h = params.step
    for attempt in range(params.max_halvings + 1):
        xs = np.empty((times.size + 1, m, d))
        xis = np.empty((times.size + 1, m, d))
        us = np.empty((times.size + 1, m))
        es = np.empty((times.size + 1, m))
        x, xi, u = x0, xi0, np.asarray(u0, dtype=float)
        t_prev = 0.0
        worst = 0.0
        e_start = None
        for k, t in enumerate(times):
            dt = t - t_prev
            n = max(1, int(np.ceil(dt / h)))
            bx, bxi, bu, be, drift = _integrate_once(
                params.potential, x, xi, u, dt / n, n, n)
            if e_start is None:
                e_start = be[0]
                xs[0], xis[0], us[0], es[0] = bx[0], bxi[0], bu[0], be[0]
            worst = max(worst, float(np.max(np.abs(be[-1] - e_start))), drift)
            x, xi, u = bx[-1], bxi[-1], bu[-1]
            xs[k + 1], xis[k + 1], us[k + 1], es[k + 1] = x, xi, u, be[-1]
            t_prev = t
        if worst <= params.drift_tolerance:
            return Trajectory(np.concatenate([[0.0], times]), xs, xis, us, es,
                              worst, h)
        h *= 0.5
    raise EnergyDriftError(
        f"energy drift {worst:.3e} above {params.drift_tolerance:.1e} on schedule")


# -- regions and their constants ------------------------------------------------


@dataclass(frozen=True)
class Region:
    """Outgoing (+1) / incoming (-1) phase-space region at radius R."""

    window: EnergyWindow
    radius: float
    sign: int = +1

    def __post_init__(self):
        if self.radius <= 0:
            raise ValueError("region radius must be positive")
        if self.sign not in (+1, -1):
            raise ValueError("sign must be +1 or -1")

    def contains(self, x, xi, spec: PotentialSpec) -> np.ndarray:
        x = np.atleast_2d(np.asarray(x, dtype=float))
        xi = np.atleast_2d(np.asarray(xi, dtype=float))
        energy = band_energy(xi) + spec.continuum(x.shape[1])(x)
        radial = np.linalg.norm(x, axis=-1) >= self.radius - 1e-12
        outgoing = self.sign * np.sum(x * velocity(xi), axis=-1) >= -1e-12
        inside = (energy >= self.window.a) & (energy <= self.window.b)
        return inside & radial & outgoing


@dataclass(frozen=True)
class FlowConstants:
    """Margin delta and escape radius R0 attached to a window/potential pair."""

    delta: float
    R0: float


def window_constants(window: EnergyWindow, spec: PotentialSpec) -> FlowConstants:
    """delta from the window margin; R0 by bisection on the decay bounds."""
    delta = window.delta
    if spec.family == "zero":
        return FlowConstants(delta, 1.0)

    def ok(radius):
        sup_v, sup_xg = spec.decay_bounds(radius)
        return max(sup_v, sup_xg) <= delta

    hi = 1.0
    while not ok(hi):
        hi *= 2.0
        if hi > 1e9:
            raise ValueError("no escape radius found; potential too strong")
    lo = 0.0
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        if ok(mid):
            hi = mid
        else:
            lo = mid
    return FlowConstants(delta, max(hi, 1.0))


def sample_region_starts(region: Region, spec: PotentialSpec, n: int,
                         rng: np.random.Generator, dimension: int,
                         radius_factor: float = 2.0,
                         max_tries: int = 200000):
    """Rejection-sample n phase points inside the region.

    Radii are drawn in [R, radius_factor*R]; momenta uniformly on the
    torus, retained when the full symbol lands in the window; the
    position is reflected so the outgoing/incoming condition holds.
    """
    xs = np.empty((n, dimension))
    xis = np.empty((n, dimension))
    got = 0
    for _ in range(max_tries):
        if got == n:
            break
        xi = rng.uniform(-np.pi, np.pi, size=dimension)
        direction = rng.normal(size=dimension)
        norm = np.linalg.norm(direction)
        if norm < 1e-12:
            continue
        direction /= norm
        r = region.radius * rng.uniform(1.0, radius_factor)
        x = r * direction
        if region.sign * np.dot(x, velocity(xi)) < 0:
            x = -x
        if region.contains(x[None, :], xi[None, :], spec)[0]:
            xs[got] = x
            xis[got] = xi
            got += 1
    if got < n:
        raise RuntimeError(f"could only sample {got}/{n} region starts")
    return xs, xis


# -- probes ----------------------------------------------------------------------


@dataclass
class EscapeReport:
    n_total: int
    n_escaping: int
    min_margin: float          # min over samples/time of |x|^2 - |x0|^2 - delta t^2
    monotone_fraction: float   # fraction with d|x|^2/dt >= 0 along the run
    precondition_failures: int


def region_escape_probe(x0, xi0, region: Region, params: FlowParams,
                        t_final: float, record_stride: int = 50) -> EscapeReport:
    """Check the ballistic escape bound |x(t)|^2 >= |x0|^2 + delta t^2."""
    x0 = np.atleast_2d(np.asarray(x0, dtype=float))
    xi0 = np.atleast_2d(np.asarray(xi0, dtype=float))
    ok = region.contains(x0, xi0, params.potential)
    bad = int(np.sum(~ok))
    traj = integrate_batch(x0[ok], xi0[ok], params, t_final, record_stride)
    delta = region.window.delta
    r2 = np.sum(traj.x**2, axis=-1)              # (n_times, m)
    bound = r2[0][None, :] + delta * traj.times[:, None] ** 2
    slack = 1e-9 * (1.0 + bound)
    margins = r2 - bound
    escaped = np.all(margins >= -slack, axis=0)
    radial_speed = np.sum(traj.x * velocity(traj.xi), axis=-1)
    monotone = np.all(region.sign * radial_speed >= -1e-9, axis=0)
    return EscapeReport(
        n_total=int(x0.shape[0]),
        n_escaping=int(np.sum(escaped)),
        min_margin=float(np.min(margins)),
        monotone_fraction=float(np.mean(monotone)),
        precondition_failures=bad,
    )


def radial_acceleration_residual(traj: Trajectory, spec: PotentialSpec) -> float:
    """Max deviation of the second difference of |x(t)|^2 from its exact value.

    Along the flow, (d^2/dt^2)|x|^2 = 2*speed_squared(xi)
    - 2*sum_j x_j cos(xi_j) dV/dx_j(x); the trajectory must carry a
    uniform, dense time grid.
    """
    dt = np.diff(traj.times)
    if not np.allclose(dt, dt[0], rtol=1e-10):
        raise ValueError("residual probe needs a uniform time grid")
    h = float(dt[0])
    r2 = np.sum(traj.x**2, axis=-1)
    second = (r2[2:] - 2.0 * r2[1:-1] + r2[:-2]) / h**2
    cont = spec.continuum(traj.dimension)
    grad = cont.gradient(traj.x[1:-1])
    rhs = 2.0 * speed_squared(traj.xi[1:-1]) - 2.0 * np.sum(
        traj.x[1:-1] * np.cos(traj.xi[1:-1]) * grad, axis=-1)
    return float(np.max(np.abs(second - rhs)))


@dataclass
class AsymptoticFit:
    xi_limit: np.ndarray       # (m, d)
    xi_slope: np.ndarray       # (m,) fitted decay of |xi(t) - xi_limit|
    x_slope: np.ndarray        # (m,) fitted growth of |x(t) - t v(xi_limit)|
    status: str                # "ok", "degenerate" (free flow), "nonconvergent"


def asymptotic_momentum(traj: Trajectory, mu: float,
                        fit_range=(8.0, None)) -> AsymptoticFit:
    """Estimate the asymptotic momentum and the approach/growth exponents.

    xi_limit comes from two-point model extrapolation with the known
    decay order t^(-mu); slopes are least-squares fits in log-log over
    [fit_range[0], fit_range[1] or T/2].
    """
    T = traj.times[-1]
    i_half = int(np.searchsorted(traj.times, T / 2.0))
    tail_increment = np.linalg.norm(traj.xi[-1] - traj.xi[i_half], axis=-1)
    prev_increment = np.linalg.norm(
        traj.xi[i_half] - traj.xi[int(np.searchsorted(traj.times, T / 4.0))], axis=-1)

    factor = 2.0**mu - 1.0
    xi_limit = traj.xi[-1] + (traj.xi[-1] - traj.xi[i_half]) / factor

    if float(np.max(tail_increment)) < 1e-13:
        return AsymptoticFit(xi_limit, np.zeros(traj.batch), np.zeros(traj.batch),
                             "degenerate")
    if np.any(tail_increment > prev_increment + 1e-13):
        return AsymptoticFit(xi_limit, np.full(traj.batch, np.nan),
                             np.full(traj.batch, np.nan), "nonconvergent")

    lo = fit_range[0]
    hi = fit_range[1] if fit_range[1] is not None else T / 2.0
    sel = (traj.times >= lo) & (traj.times <= hi)
    ts = traj.times[sel]
    xi_dev = np.linalg.norm(traj.xi[sel] - xi_limit[None, :, :], axis=-1)
    ballistic = ts[:, None, None] * velocity(xi_limit)[None, :, :]
    x_dev = np.linalg.norm(traj.x[sel] - ballistic, axis=-1)

    logt = np.log(ts)
    xi_slope = np.empty(traj.batch)
    x_slope = np.empty(traj.batch)
    for i in range(traj.batch):
        xi_slope[i] = np.polyfit(logt, np.log(np.maximum(xi_dev[:, i], 1e-300)), 1)[0]
        x_slope[i] = np.polyfit(logt, np.log(np.maximum(x_dev[:, i], 1e-300)), 1)[0]
    return AsymptoticFit(xi_limit, xi_slope, x_slope, "ok")


@dataclass
class VariationalReport:
    sup_dxi_dy: float          # sup_t max-entry |d xi(t) / d y|
    sup_dxi_deta_dev: float    # sup_t max-entry |d xi(t)/d eta - identity|
    sup_x_growth: float        # sup_t |x(t) - y| / (1 + |t|)
    sup_dx_dy_dev: float       # sup_t max-entry |d x(t)/d y - identity|


def variational_probe(x0, xi0, params: FlowParams, t_final: float,
                      rel_step: float = 1e-5, record_stride: int = 100
                      ) -> VariationalReport:
    """First derivatives with respect to initial data by central differences."""
    x0 = np.asarray(x0, dtype=float)
    xi0 = np.asarray(xi0, dtype=float)
    d = x0.size
    eps_y = rel_step * max(1.0, float(np.linalg.norm(x0)))
    eps_eta = rel_step

    starts_x, starts_xi = [x0], [xi0]
    for j in range(d):
        for s in (+1.0, -1.0):
            dx = x0.copy()
            dx[j] += s * eps_y
            starts_x.append(dx)
            starts_xi.append(xi0)
    for j in range(d):
        for s in (+1.0, -1.0):
            dxi = xi0.copy()
            dxi[j] += s * eps_eta
            starts_x.append(x0)
            starts_xi.append(dxi)

    traj = integrate_batch(np.array(starts_x), np.array(starts_xi), params,
                           t_final, record_stride)
    xi_t = traj.xi
    x_t = traj.x
    eye = np.eye(d)

    dxi_dy = np.empty((traj.times.size, d, d))
    dx_dy = np.empty((traj.times.size, d, d))
    dxi_deta = np.empty((traj.times.size, d, d))
    for j in range(d):
        p, m_ = 1 + 2 * j, 2 + 2 * j
        dxi_dy[:, :, j] = (xi_t[:, p] - xi_t[:, m_]) / (2 * eps_y)
        dx_dy[:, :, j] = (x_t[:, p] - x_t[:, m_]) / (2 * eps_y)
        p, m_ = 1 + 2 * d + 2 * j, 2 + 2 * d + 2 * j
        dxi_deta[:, :, j] = (xi_t[:, p] - xi_t[:, m_]) / (2 * eps_eta)

    growth = np.linalg.norm(x_t[:, 0] - x0[None, :], axis=-1) / (1.0 + traj.times)
    return VariationalReport(
        sup_dxi_dy=float(np.max(np.abs(dxi_dy))),
        sup_dxi_deta_dev=float(np.max(np.abs(dxi_deta - eye[None]))),
        sup_x_growth=float(np.max(growth)),
        sup_dx_dy_dev=float(np.max(np.abs(dx_dy - eye[None]))),
    )


# -- independent reference integrator (test oracle) -------------------------------


def _rhs(spec: PotentialSpec, dimension: int):
    cont = spec.continuum(dimension)

    def rhs(state):
        x, xi = state[:dimension], state[dimension:]
        return np.concatenate([np.sin(xi), -cont.gradient(x)])

    return rhs


def _rk4(rhs, state, h, n):
    y = state.copy()
    for _ in range(n):
        k1 = rhs(y)
        k2 = rhs(y + 0.5 * h * k1)
        k3 = rhs(y + 0.5 * h * k2)
        k4 = rhs(y + h * k3)
        y = y + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
    return y

def rk4_reference(start: PhasePoint, spec: PotentialSpec, t_final: float,
                  step: float = 1e-3) -> tuple[np.ndarray, np.ndarray]:
    """Step-halved Richardson RK4 endpoint, independent of the leapfrog path."""
    d = start.x.size
    rhs = _rhs(spec, d)
    state = np.concatenate([start.x, start.xi])
    n = max(1, int(round(t_final / step)))
    coarse = _rk4(rhs, state, t_final / n, n)
    fine = _rk4(rhs, state, t_final / (2 * n), 2 * n)
    best = (16.0 * fine - coarse) / 15.0
    return best[:d], best[d:]
