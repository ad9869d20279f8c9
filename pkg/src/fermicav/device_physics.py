"""Fluxonium spectrum, phase matrix elements and second-order dispersive couplings.

Energies are in GHz (``h = 1``). The circuit Hamiltonian is

    H = 4 E_C N^2 - E_J cos(phi) + E_L (phi + 2 pi f)^2 / 2,   f = Phi_ext / Phi_0,

diagonalized in the harmonic-oscillator eigenbasis of the quadratic part.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

DEFAULT_BASIS = 120
CONVERGENCE_TOL = 1e-6
N_CHECKED = 8


class ConvergenceError(RuntimeError):
    """Low levels still move by more than the tolerance when the basis doubles."""

    def __init__(self, estimate: float, basis_size: int):
        super().__init__(f"levels not converged at basis {basis_size}: change {estimate:.3e} GHz on doubling")
        self.estimate = estimate
        self.basis_size = basis_size


class DegeneracyError(ValueError):
    """A detuning entering a second-order denominator vanishes."""

    def __init__(self, l: int, lp: int, value: float):
        super().__init__(f"resonant detuning Delta_{l}{lp} = {value:.3e} GHz")
        self.pair = (l, lp)


@dataclass(frozen=True)
class FluxoniumParams:
    E_C: float
    E_J: float
    E_L: float
    flux: float = 0.5

    def __post_init__(self) -> None:
        if not (self.E_C > 0 and self.E_L > 0):
            raise ValueError("E_C and E_L must be positive")
        if self.E_J < 0:
            raise ValueError("E_J must be non-negative")

    @property
    def plasma(self) -> float:
        return math.sqrt(8 * self.E_C * self.E_L)


@dataclass(frozen=True)
class QuditSpectrum:
    """Lowest levels (ascending) and the junction-phase matrix in their eigenbasis."""

    levels: np.ndarray
    phi: np.ndarray
    basis_size: int = 0
    convergence: float = 0.0

    def __post_init__(self) -> None:
        lv = np.asarray(self.levels, dtype=float)
        ph = np.asarray(self.phi, dtype=complex)
        if ph.shape != (len(lv), len(lv)):
            raise ValueError("phi must be square with one row per level")
        if np.any(np.diff(lv) < 0):
            raise ValueError("levels must be ascending")
        if np.abs(ph - ph.conj().T).max(initial=0.0) > 1e-8:
            raise ValueError("phi must be Hermitian")
        object.__setattr__(self, "levels", lv)
        object.__setattr__(self, "phi", ph)

    def abs_phi(self, l: int, lp: int) -> float:
        return float(abs(self.phi[l, lp]))

    def transitions(self) -> np.ndarray:
        return self.levels - self.levels[0]


def _ho_operators(size: int, E_C: float, E_L: float) -> tuple[np.ndarray, float]:
    """Shifted-phase operator ``phi + 2 pi f`` in the oscillator basis and its zero-point spread."""
    zpf = (2 * E_C / E_L) ** 0.25
    off = np.sqrt(np.arange(1, size))
    x = zpf * (np.diag(off, 1) + np.diag(off, -1))
    return x, zpf


def _solve(p: FluxoniumParams, size: int, n_keep: int) -> tuple[np.ndarray, np.ndarray]:
    # exp(i phi') is built on a doubled basis and truncated so its low block is accurate
    big, _ = _ho_operators(2 * size, p.E_C, p.E_L)
    w, v = np.linalg.eigh(big)
    disp = (v * np.exp(1j * w)) @ v.conj().T
    disp = disp[:size, :size]
    shift = 2 * math.pi * p.flux
    # cos(phi) = cos(phi' - 2 pi f)
    cos_phi = 0.5 * (np.exp(-1j * shift) * disp + np.exp(1j * shift) * disp.conj().T)
    x = big[:size, :size]
    h0 = np.diag(p.plasma * (np.arange(size) + 0.5))
    h = h0 - p.E_J * cos_phi
    h = 0.5 * (h + h.conj().T)
    e, vec = np.linalg.eigh(h)
    vec = vec[:, :n_keep]
    # fix eigenvector phases so the largest component is real and positive
    piv = np.argmax(np.abs(vec), axis=0)
    vec = vec * (np.abs(vec[piv, range(n_keep)]) / vec[piv, range(n_keep)])
    phi_op = x - shift * np.eye(size)
    phi = vec.conj().T @ phi_op @ vec
    return e[:n_keep], 0.5 * (phi + phi.conj().T)


def diagonalize(
    p: FluxoniumParams,
    basis_size: int = DEFAULT_BASIS,
    n_levels: int = N_CHECKED,
    tol: float = CONVERGENCE_TOL,
) -> QuditSpectrum:
    """Lowest ``n_levels`` levels and phase matrix elements.

    Convergence is checked by repeating with twice the basis; the largest
    change of the lowest ``max(n_levels, 8)`` levels is the estimate.
    """
    if basis_size < 20:
        raise ValueError("basis_size must be at least 20")
    n_chk = max(n_levels, N_CHECKED)
    e1, phi = _solve(p, basis_size, n_chk)
    e2, _ = _solve(p, 2 * basis_size, n_chk)
    est = float(np.abs(e1 - e2).max())
    if est >= tol:
        raise ConvergenceError(est, basis_size)
    return QuditSpectrum(e1[:n_levels], phi[:n_levels, :n_levels], basis_size, est)


# ---------------------------------------------------------------------------
# second-order dispersive quantities


@dataclass(frozen=True)
class DispersiveReport:
    chi_levels: np.ndarray
    lamb: np.ndarray
    flip_flop: np.ndarray
    chi_qnd: float
    detunings: np.ndarray
    chi_pair: np.ndarray

    def as_dict(self) -> dict:
        return {
            "chi_levels": self.chi_levels.tolist(),
            "lamb": self.lamb.tolist(),
            "chi_qnd": self.chi_qnd,
            "mu_01": float(self.flip_flop[0, 1]) if self.flip_flop.shape[0] > 1 else 0.0,
        }


def detunings(s: QuditSpectrum, omega: float) -> np.ndarray:
    """``Delta[l, l'] = eps_l - eps_l' - omega``."""
    e = s.levels
    return e[:, None] - e[None, :] - omega


def dispersive_report(s: QuditSpectrum, g: float, omega: float, resonance_tol: float = 1e-6) -> DispersiveReport:
    """Level shifts, Lamb shifts, flip-flop strengths and the QND strength.

    Couplings are ``g_ll' = g phi_ll'`` for ``l != l'``; the diagonal phase
    elements only displace the cavity and are left out.
    """
    n = len(s.levels)
    d = detunings(s, omega)
    for l in range(n):
        for lp in range(n):
            if l != lp and abs(d[l, lp]) < resonance_tol:
                raise DegeneracyError(l, lp, float(d[l, lp]))
    gm = g * s.phi.copy()
    np.fill_diagonal(gm, 0.0)
    g2 = np.abs(gm) ** 2
    off = ~np.eye(n, dtype=bool)
    inv = np.zeros_like(d)
    inv[off] = 1.0 / d[off]
    chi_pair = g2 * (inv - inv.T)
    chi = chi_pair.sum(axis=1)
    lamb = (g2 * inv).sum(axis=1)
    mu = np.zeros((n, n))
    for l in range(n):
        for lp in range(n):
            if l == lp:
                continue
            tot = 0.0
            for k in range(n):
                if k in (l, lp):
                    continue
                amp = (gm[l, k] * gm[k, lp]).real / 2
                tot += amp * (inv[l, lp] - inv[k, l] + inv[lp, k] - inv[k, lp])
            mu[l, lp] = tot
    qnd = float((chi_pair[0] - chi_pair[1]).sum() / 2) if n > 1 else 0.0
    return DispersiveReport(chi, lamb, mu, qnd, d, chi_pair)


def dressed_shifts(s: QuditSpectrum, g: float, omega: float, n_photons: int = 4) -> tuple[np.ndarray, np.ndarray]:
    """Exact level and Lamb shifts of one qudit coupled to the cavity (no rotating wave).

    Diagonalizes ``omega a^dag a + sum eps_l |l><l| + sum g_ll' |l><l'| (a + a^dag)``
    over ``n_photons + 1`` Fock states and returns ``(chi_l, kappa_l)`` read
    from the dressed ``|l, 0>`` and ``|l, 1>`` energies.
    """
    n = len(s.levels)
    m = n_photons + 1
    gm = g * s.phi.copy()
    np.fill_diagonal(gm, 0.0)
    a = np.diag(np.sqrt(np.arange(1, m)), 1)
    h = np.kron(np.diag(s.levels), np.eye(m)) + omega * np.kron(np.eye(n), a.T @ a)
    h = h + np.kron(gm, a + a.T)
    e, v = np.linalg.eigh(0.5 * (h + h.conj().T))
    # each bare state |l, k> is matched to the dressed state of largest overlap
    ov = np.abs(v) ** 2
    match = np.argmax(ov, axis=1)

    def energy(l: int, k: int) -> float:
        return float(e[match[l * m + k]])

    kappa = np.array([energy(l, 0) - s.levels[l] for l in range(n)])
    chi = np.array([energy(l, 1) - energy(l, 0) - omega for l in range(n)])
    return chi, kappa


@dataclass(frozen=True)
class DispersiveCondition:
    satisfied: bool
    margin: float


def dispersive_condition(g: float, delta_min: float, n: int, threshold: float = 0.1) -> DispersiveCondition:
    """``sqrt(N) |g| / |Delta_min|`` against ``threshold``."""
    if delta_min == 0:
        raise ValueError("zero detuning")
    r = math.sqrt(n) * abs(g) / abs(delta_min)
    return DispersiveCondition(r < threshold, r)


@dataclass(frozen=True)
class BalanceCheck:
    chi_a: float
    flip_flop_strength: float


def balance_cavity_check(g: float, delta_a: float, delta_b: float) -> BalanceCheck:
    """Ancilla-cavity QND strength and the residual flip-flop with a balance cavity."""
    if delta_a == 0 or delta_b == 0:
        raise ValueError("zero detuning")
    if delta_a == -delta_b:
        return BalanceCheck(g * g / delta_a, 0.0)
    return BalanceCheck(g * g / delta_a, g * g / delta_a + g * g / delta_b)


# ---------------------------------------------------------------------------
# sweeps

SWEEP_HEADER = (
    ["E_J"]
    + [f"eps_{l}" for l in range(6)]
    + ["abs_phi_01", "abs_phi_02", "abs_phi_03", "abs_phi_12", "abs_phi_13", "chi"]
)


def selection_ratio(s: QuditSpectrum) -> float:
    """``|phi_01| / |phi_02|``."""
    return s.abs_phi(0, 1) / s.abs_phi(0, 2)


def sweep(
    e_j_values: Iterable[float],
    E_C: float = 0.5,
    E_L: float = 0.75,
    flux: float = 0.4,
    g: float = 0.1,
    omega: float = 7.0,
    basis_size: int = DEFAULT_BASIS,
) -> list[list[float]]:
    """One row per ``E_J``: levels relative to the ground state, selected ``|phi|`` and the QND strength."""
    rows = []
    for ej in e_j_values:
        s = diagonalize(FluxoniumParams(E_C, float(ej), E_L, flux), basis_size)
        rep = dispersive_report(s, g, omega)
        eps = s.transitions()[:6]
        phis = [s.abs_phi(a, b) for a, b in ((0, 1), (0, 2), (0, 3), (1, 2), (1, 3))]
        rows.append([float(ej), *map(float, eps), *phis, rep.chi_qnd])
    return rows


def sweep_csv(rows: Sequence[Sequence[float]]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(SWEEP_HEADER)
    for r in rows:
        w.writerow([f"{v:.10g}" for v in r])
    return buf.getvalue()
