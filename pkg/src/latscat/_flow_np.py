"""NumPy leapfrog kernels for the lattice Hamilton flow.

Equations of motion (band energy -sum cos(xi), so the velocity is its
gradient sin(xi)):

    dx/dt  = sin(xi)
    dxi/dt = -grad V(x)
    du/dt  = [band(xi) + V(x)] - x . grad V(x)

integrated with kick-drift-kick leapfrog; u by the trapezoid rule on the
synchronised samples.  xi is recorded unwrapped (the dynamics only sees
sin/cos).  The Cython twin in _flow_cy.pyx implements the same contract
for the closed-form power potential.
"""

from __future__ import annotations

import numpy as np

__all__ = ["leapfrog_power", "leapfrog_generic"]


def _power_v_and_g(x, c, mu):
    r2 = np.sum(x * x, axis=-1)
    v = c * (1.0 + r2) ** (-mu / 2.0)
    g = (-c * mu) * ((1.0 + r2) ** (-(mu + 2.0) / 2.0))[..., None] * x
    return v, g


def leapfrog_power(x0, xi0, u0, c, mu, h, n_steps, rec_every):
    """Batch leapfrog for V(x) = c*(1+|x|^2)^(-mu/2).

    x0, xi0: (m, d); u0: (m,).  Records every rec_every steps (step 0
    included; n_steps must be a multiple of rec_every).  Returns
    (xs, xis, us, energies, max_drift) with leading axis n_rec.
    """

    def value_grad(x):
        return _power_v_and_g(x, c, mu)

    return leapfrog_generic(x0, xi0, u0, value_grad, h, n_steps, rec_every)


def leapfrog_generic(x0, xi0, u0, value_grad, h, n_steps, rec_every):
    """Generic-potential twin; value_grad(x) -> (V, gradV) batched."""
    x = np.array(x0, dtype=float, copy=True)
    xi = np.array(xi0, dtype=float, copy=True)
    u = np.array(u0, dtype=float, copy=True)
    m, d = x.shape
    n_steps = int(n_steps)
    rec_every = int(rec_every)
    if n_steps % rec_every != 0:
        raise ValueError("n_steps must be a multiple of rec_every")
    n_rec = n_steps // rec_every + 1

    xs = np.empty((n_rec, m, d))
    xis = np.empty((n_rec, m, d))
    us = np.empty((n_rec, m))
    energies = np.empty((n_rec, m))

    v, g = value_grad(x)
    band = -np.sum(np.cos(xi), axis=-1)
    e = band + v
    f = e - np.sum(x * g, axis=-1)
    e0 = e.copy()
    max_drift = 0.0

    xs[0], xis[0], us[0], energies[0] = x, xi, u, e
    rec = 1
    for step in range(1, n_steps + 1):
        xi_half = xi - (0.5 * h) * g
        x = x + h * np.sin(xi_half)
        v, g = value_grad(x)
        xi = xi_half - (0.5 * h) * g

        band = -np.sum(np.cos(xi), axis=-1)
        e = band + v
        f_new = e - np.sum(x * g, axis=-1)
        u = u + (0.5 * h) * (f + f_new)
        f = f_new

        drift = float(np.max(np.abs(e - e0)))
        if drift > max_drift:
            max_drift = drift
        if step % rec_every == 0:
            xs[rec], xis[rec], us[rec], energies[rec] = x, xi, u, e
            rec += 1

    return xs, xis, us, energies, max_drift
