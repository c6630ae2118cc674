"""Time integrators for ``M a + K u = f_t(t) f_x``.

* :func:`run_cdm` -- explicit central differences (two-step sum form)
* :func:`run_trapezoidal` -- implicit Newmark, beta = 1/4, gamma = 1/2
* :func:`run_newmark_imex` -- CDM on the diagonal DOFs, trapezoidal on the cut DOFs
* :func:`run_leapfrog` -- CDM with ``m`` substeps on the cut DOFs

The explicit parts sample the force at ``t_n``; the implicit parts at
``t_{n+1}``. Observers are called as ``observer(step, t, u)`` after every
step, including step 0.
"""
from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .linalg import factorize, is_diagonal, solve_diagonal

ABORT_FACTOR = 1e12


@dataclass(frozen=True)
class NewmarkParams:
    beta: float
    gamma: float


CDM_PARAMS = NewmarkParams(0.0, 0.5)
TRAPEZOIDAL = NewmarkParams(0.25, 0.5)


class InstabilityError(ArithmeticError):
    def __init__(self, step):
        super().__init__(f"instability detected at step {step}")
        self.step = step


@dataclass
class Trajectory:
    """Result of one integration run."""

    dt: float
    t: np.ndarray
    u: np.ndarray  # final displacement
    v: np.ndarray | None  # final velocity (reconstructed for explicit DOFs)
    history: np.ndarray | None = None  # (n_steps + 1, n_dof) when requested
    wall_time: float = 0.0
    setup_time: float = 0.0
    extra: dict = field(default_factory=dict)


class _Guard:
    """Flags divergence: non-finite values, or growth beyond ``factor`` times the
    scale of the initial state. Runs started from rest only get the finiteness check,
    since a forced response from zero has no meaningful growth reference."""

    def __init__(self, factor, u0, v0=None, dt=0.0):
        self.factor = factor
        scale = float(np.max(np.abs(u0))) if len(u0) else 0.0
        if v0 is not None and len(v0):
            scale += dt * float(np.max(np.abs(v0)))
        self.ref = scale

    def check(self, step, u):
        norm = float(np.max(np.abs(u))) if len(u) else 0.0
        if not np.isfinite(norm):
            raise InstabilityError(step)
        if self.factor is not None and self.ref > 0 and norm > self.factor * self.ref:
            raise InstabilityError(step)


def _zeros_like_state(system, u0, v0):
    n = system.n_dof
    u0 = np.zeros(n) if u0 is None else np.array(u0, dtype=float)
    v0 = np.zeros(n) if v0 is None else np.array(v0, dtype=float)
    if u0.shape != (n,) or v0.shape != (n,):
        raise ValueError("initial state has the wrong length")
    return u0, v0


def _notify(observers, step, t, u):
    for obs in observers:
        obs(step, t, u)


def _mass_inverse(M):
    """Callable applying ``M^-1``: entrywise for diagonal ``M``, else one factorization."""
    if is_diagonal(M):
        m = M.diagonal()
        return lambda b: solve_diagonal(m, b)
    return factorize(M).solve


def run_cdm(system, f_t, dt, n_steps, u0=None, v0=None, observers=(), store=False,
            abort_factor=ABORT_FACTOR):
    """Explicit central difference method.

    Works with a diagonal mass (entrywise inversion) or a general SPD mass
    (factorized once before the loop).
    """
    if not dt > 0:
        raise ValueError("time step must be positive")
    u, v0 = _zeros_like_state(system, u0, v0)
    K, f_x = system.K, system.f_x
    t0 = time.perf_counter()
    minv = _mass_inverse(system.M)
    setup = time.perf_counter() - t0
    a = minv(f_t(0.0) * f_x - K @ u)
    u_prev = u - dt * v0 + 0.5 * dt * dt * a
    hist = [u.copy()] if store else None
    guard = _Guard(abort_factor, u, v0, dt)
    _notify(observers, 0, 0.0, u)
    for n in range(n_steps):
        tn = n * dt
        a = minv(f_t(tn) * f_x - K @ u)
        u_next = 2.0 * u - u_prev + dt * dt * a
        u_prev, u = u, u_next
        guard.check(n + 1, u)
        if store:
            hist.append(u.copy())
        _notify(observers, n + 1, (n + 1) * dt, u)
    wall = time.perf_counter() - t0
    # central-difference velocity needs u_{N+1}; use the backward estimate
    a = minv(f_t(n_steps * dt) * f_x - K @ u)
    v = (u - u_prev) / dt + 0.5 * dt * a
    return Trajectory(dt, np.arange(n_steps + 1) * dt, u, v,
                      np.array(hist) if store else None, wall, setup)


def run_trapezoidal(system, f_t, dt, n_steps, u0=None, v0=None, observers=(), store=False,
                    params=TRAPEZOIDAL, abort_factor=ABORT_FACTOR):
    """Implicit Newmark predictor-corrector with one factorization of ``M + beta dt^2 K``."""
    if not dt > 0:
        raise ValueError("time step must be positive")
    beta, gamma = params.beta, params.gamma
    u, v = _zeros_like_state(system, u0, v0)
    M, K, f_x = system.M, system.K, system.f_x
    t0 = time.perf_counter()
    S = factorize((M + (beta * dt * dt) * K).tocsc())
    a = _mass_inverse(M)(f_t(0.0) * f_x - K @ u)
    setup = time.perf_counter() - t0
    hist = [u.copy()] if store else None
    guard = _Guard(abort_factor, u, v, dt)
    _notify(observers, 0, 0.0, u)
    for n in range(n_steps):
        u_pred = u + dt * v + (dt * dt * (0.5 - beta)) * a
        v_pred = v + (dt * (1.0 - gamma)) * a
        a = S.solve(f_t((n + 1) * dt) * f_x - K @ u_pred)
        u = u_pred + (beta * dt * dt) * a
        v = v_pred + (gamma * dt) * a
        guard.check(n + 1, u)
        if store:
            hist.append(u.copy())
        _notify(observers, n + 1, (n + 1) * dt, u)
    wall = time.perf_counter() - t0
    return Trajectory(dt, np.arange(n_steps + 1) * dt, u, v,
                      np.array(hist) if store else None, wall, setup)


def run_newmark_imex(system, f_t, dt, n_steps, u0=None, v0=None, observers=(), store=False,
                     abort_factor=ABORT_FACTOR):
    """Newmark IMEX: CDM on ``I_d``, trapezoidal Newmark on ``I_c``.

    Each step first advances the diagonal DOFs with a CDM step, then predicts
    the cut DOFs, solves ``S a_c = f_c - K_c w`` with ``w`` holding the new
    diagonal displacements and the predicted cut displacements, and corrects.
    """
    if not dt > 0:
        raise ValueError("time step must be positive")
    beta, gamma = TRAPEZOIDAL.beta, TRAPEZOIDAL.gamma
    I_d, I_c = system.I_d, system.I_c
    has_c = len(I_c) > 0
    u, v = _zeros_like_state(system, u0, v0)
    f_d, f_c = system.f_d, system.f_c
    t0 = time.perf_counter()
    K_d = system.K_d
    m_d = system.M_dd
    if has_c:
        K_c = system.K_c
        S = factorize((system.M_cc + (beta * dt * dt) * system.K_cc).tocsc())
        # consistent start: M_cc a_c = f_c - K_c u
        a_c = _mass_inverse(system.M_cc)(f_t(0.0) * f_c - K_c @ u)
        u_c = u[I_c].copy()
        v_c = v[I_c].copy()
    setup = time.perf_counter() - t0
    u_d = u[I_d]
    a_d = solve_diagonal(m_d, f_t(0.0) * f_d - K_d @ u)
    u_d_prev = u_d - dt * v[I_d] + 0.5 * dt * dt * a_d
    w = u.copy()
    hist = [u.copy()] if store else None
    guard = _Guard(abort_factor, u, v, dt)
    _notify(observers, 0, 0.0, u)
    for n in range(n_steps):
        tn = n * dt
        # explicit diagonal block
        a_d = solve_diagonal(m_d, f_t(tn) * f_d - K_d @ u)
        u_d_next = 2.0 * u_d - u_d_prev + dt * dt * a_d
        u_d_prev, u_d = u_d, u_d_next
        w[I_d] = u_d
        if has_c:
            # implicit cut block, predicted from the fresh explicit solution
            u_pred = u_c + dt * v_c + (dt * dt * (0.5 - beta)) * a_c
            v_pred = v_c + (dt * (1.0 - gamma)) * a_c
            w[I_c] = u_pred
            a_c = S.solve(f_t(tn + dt) * f_c - K_c @ w)
            u_c = u_pred + (beta * dt * dt) * a_c
            v_c = v_pred + (gamma * dt) * a_c
            w[I_c] = u_c
        u = w.copy()
        guard.check(n + 1, u)
        if store:
            hist.append(u.copy())
        _notify(observers, n + 1, (n + 1) * dt, u)
    wall = time.perf_counter() - t0
    v = np.empty(system.n_dof)
    a_d = solve_diagonal(m_d, f_t(n_steps * dt) * f_d - K_d @ u)
    v[I_d] = (u_d - u_d_prev) / dt + 0.5 * dt * a_d
    if has_c:
        v[I_c] = v_c
    return Trajectory(dt, np.arange(n_steps + 1) * dt, u, v,
                      np.array(hist) if store else None, wall, setup)


def run_leapfrog(system, f_t, dt_coarse, m, n_steps, u0=None, v0=None, observers=(),
                 store=False, coupling="interpolated", abort_factor=ABORT_FACTOR):
    """CDM with ``m`` substeps of ``dt_coarse / m`` on the cut DOFs.

    During the substeps the diagonal-block displacements entering the
    coupling are interpolated linearly between ``t_n`` and ``t_{n+1}``
    (``coupling="interpolated"``) or held at ``t_n`` (``"frozen"``).
    """
    m = int(m)
    if m < 1:
        raise ValueError("substep ratio must be >= 1")
    if coupling not in ("interpolated", "frozen"):
        raise ValueError(f"unknown coupling {coupling!r}")
    if not dt_coarse > 0:
        raise ValueError("time step must be positive")
    dt_f = dt_coarse / m
    I_d, I_c = system.I_d, system.I_c
    has_c = len(I_c) > 0
    u, v = _zeros_like_state(system, u0, v0)
    f_d, f_c = system.f_d, system.f_c
    t0 = time.perf_counter()
    K_d, m_d = system.K_d, system.M_dd
    if has_c:
        K_cd, K_cc = system.K_cd, system.K_cc
        minv_c = _mass_inverse(system.M_cc)
        u_c = u[I_c].copy()
        a_c = minv_c(f_t(0.0) * f_c - system.K_c @ u)
        u_c_prev = u_c - dt_f * v[I_c] + 0.5 * dt_f * dt_f * a_c
    setup = time.perf_counter() - t0
    u_d = u[I_d].copy()
    a_d = solve_diagonal(m_d, f_t(0.0) * f_d - K_d @ u)
    u_d_prev = u_d - dt_coarse * v[I_d] + 0.5 * dt_coarse**2 * a_d
    hist = [u.copy()] if store else None
    guard = _Guard(abort_factor, u, v, dt_coarse)
    _notify(observers, 0, 0.0, u)
    for n in range(n_steps):
        tn = n * dt_coarse
        a_d = solve_diagonal(m_d, f_t(tn) * f_d - K_d @ u)
        u_d_next = 2.0 * u_d - u_d_prev + dt_coarse**2 * a_d
        if has_c:
            coupling_now = K_cd @ u_d
            coupling_step = (K_cd @ u_d_next - coupling_now) / m if coupling == "interpolated" else 0.0
            for k in range(m):
                a_c = minv_c(f_t(tn + k * dt_f) * f_c - (coupling_now + k * coupling_step)
                             - K_cc @ u_c)
                u_c_next = 2.0 * u_c - u_c_prev + dt_f * dt_f * a_c
                u_c_prev, u_c = u_c, u_c_next
            u[I_c] = u_c
        u_d_prev, u_d = u_d, u_d_next
        u[I_d] = u_d
        guard.check(n + 1, u)
        if store:
            hist.append(u.copy())
        _notify(observers, n + 1, (n + 1) * dt_coarse, u)
    wall = time.perf_counter() - t0
    v = np.empty(system.n_dof)
    a_d = solve_diagonal(m_d, f_t(n_steps * dt_coarse) * f_d - K_d @ u)
    v[I_d] = (u_d - u_d_prev) / dt_coarse + 0.5 * dt_coarse * a_d
    if has_c:
        a_c = minv_c(f_t(n_steps * dt_coarse) * f_c - system.K_c @ u)
        v[I_c] = (u_c - u_c_prev) / dt_f + 0.5 * dt_f * a_c
    return Trajectory(dt_coarse, np.arange(n_steps + 1) * dt_coarse, u, v,
                      np.array(hist) if store else None, wall, setup, {"m": m})


def elastic_energy(K, u):
    return 0.5 * float(u @ (K @ u))


INTEGRATORS = {
    "cdm": run_cdm,
    "trapezoidal": run_trapezoidal,
    "imex": run_newmark_imex,
}
