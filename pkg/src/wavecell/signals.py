"""Excitation signals in time and space, and the harmonic reference solution."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp


def gaussian_derivative(t, fs):
    """Derivative-of-Gaussian pulse centered at ``1/fs`` with width ``1/(2 pi fs)``."""
    t0 = 1.0 / fs
    sig = 1.0 / (2.0 * np.pi * fs)
    s = np.asarray(t, dtype=float) - t0
    return -s / (np.sqrt(2.0 * np.pi) * sig**3) * np.exp(-s * s / (2.0 * sig * sig))


def sine_burst(t, fs, n_cycles=2):
    """``sin(2 pi fs t) sin^2(pi fs t / n_c)`` on ``[0, n_c/fs]``, zero afterwards."""
    t = np.asarray(t, dtype=float)
    val = np.sin(2.0 * np.pi * fs * t) * np.sin(np.pi * fs * t / n_cycles) ** 2
    return np.where((t >= 0.0) & (t <= n_cycles / fs), val, 0.0)


def harmonic(t, fs):
    return np.sin(2.0 * np.pi * fs * np.asarray(t, dtype=float))


def gaussian_bell(x, center, sigma, amplitude=1.0):
    """Isotropic Gaussian bell in any dimension; ``x`` has shape ``(n, d)``."""
    if not sigma > 0:
        raise ValueError("sigma must be positive")
    x = np.atleast_2d(np.asarray(x, dtype=float))
    r2 = np.sum((x - np.asarray(center, dtype=float)) ** 2, axis=1)
    return amplitude * np.exp(-r2 / (2.0 * sigma * sigma))


def gaussian_bell_2d(x, y, center, sigma, amplitude=1.0):
    x, y = np.broadcast_arrays(np.asarray(x, float), np.asarray(y, float))
    pts = np.stack([x.ravel(), y.ravel()], axis=1)
    out = gaussian_bell(pts, center, sigma, amplitude).reshape(x.shape)
    return out if out.ndim else float(out)


@dataclass(frozen=True)
class TemporalSignal:
    kind: str
    fs: float
    cycles: int = 2

    def __post_init__(self):
        if self.kind not in ("gaussian_derivative", "sine_burst", "harmonic"):
            raise ValueError(f"unknown signal kind {self.kind!r}")
        if not self.fs > 0:
            raise ValueError("signal frequency must be positive")
        if self.cycles < 1:
            raise ValueError("a burst needs at least one cycle")

    def __call__(self, t):
        if self.kind == "gaussian_derivative":
            return gaussian_derivative(t, self.fs)
        if self.kind == "sine_burst":
            return sine_burst(t, self.fs, self.cycles)
        return harmonic(t, self.fs)


class ResonanceError(ArithmeticError):
    pass


def harmonic_reference(K, M, f_x, fs):
    """Amplitude ``a`` solving ``(K - omega^2 M) a = f_x`` at ``omega = 2 pi fs``.

    The reference motion is ``u(t) = a sin(omega t)``.
    """
    omega = 2.0 * np.pi * fs
    K = K.toarray() if sp.issparse(K) else np.asarray(K, dtype=float)
    M = M.toarray() if sp.issparse(M) else np.asarray(M, dtype=float)
    A = np.atleast_2d(K - omega**2 * M)
    if np.linalg.cond(A) > 1e14:
        raise ResonanceError(f"excitation at {fs} Hz hits a resonance")
    return np.linalg.solve(A, np.atleast_1d(np.asarray(f_x, dtype=float)))


def reference_state(a, fs, t):
    """``(u, v)`` of the harmonic reference at time ``t``."""
    w = 2.0 * np.pi * fs
    return a * np.sin(w * t), a * w * np.cos(w * t)
