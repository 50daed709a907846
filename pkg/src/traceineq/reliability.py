"""The auxiliary function ``E(s) = -log Tr[A(s)^(1+s)]`` with mixture
``A(s) = sum_i pi_i S_i^(1/(1+s))``, the trace condition whose nonnegativity
on ``[0, 1]`` implies concavity of ``E``, and finite-difference concavity
profiles."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .ensembles import Ensemble
from .errors import InvalidInputError, NonpositiveTraceError, SingularMixtureError
from .matcore import (
    NEG_X_LOG_X,
    X_LOG_SQ,
    apply_spectral,
    hermitianize,
    min_eigenvalue,
    power,
    spectral_decompose,
    trace_parts,
)

INVERTIBILITY_GATE = 1e-10


def _check_s(s: float):
    if not 0.0 <= s <= 1.0:
        raise InvalidInputError(f"s must lie in [0, 1], got {s}")


def state_powers(ens: Ensemble, s: float) -> list[np.ndarray]:
    p = power(1.0 / (1.0 + s))
    return [apply_spectral(S, p) for S in ens.states]


def mixture_power(ens: Ensemble, s: float) -> np.ndarray:
    _check_s(s)
    return hermitianize(sum(w * T for w, T in zip(ens.pi, state_powers(ens, s))))


def _E_from_spectra(pi, spectra, s: float) -> float:
    _check_s(s)
    p = power(1.0 / (1.0 + s))
    A = hermitianize(sum(w * ((V * p(lam)) @ V.conj().T) for w, (lam, V) in zip(pi, spectra)))
    mix_eigs = spectral_decompose(A).eigenvalues
    tr = float(np.sum(power(1.0 + s)(mix_eigs)))
    if not tr > 0:
        raise NonpositiveTraceError(f"Tr[A(s)^(1+s)] = {tr:.3e} at s = {s}")
    return -float(np.log(tr))


def auxiliary_E(ens: Ensemble, s: float) -> float:
    return _E_from_spectra(ens.pi, [spectral_decompose(S) for S in ens.states], s)


def sufficient_condition_terms(ens: Ensemble, s: float) -> tuple[float, float, float]:
    """Return ``(first, second, imag_residual)`` where the margin is ``first - second``.

    first  = Tr[A(s)^s sum_j pi_j T_j (log T_j)^2]
    second = Tr[A(s)^(s-1) (sum_j pi_j H(T_j))^2],  T_j = S_j^(1/(1+s)), H(x) = -x log x
    """
    _check_s(s)
    T = state_powers(ens, s)
    A = hermitianize(sum(w * Tj for w, Tj in zip(ens.pi, T)))
    lam_min = min_eigenvalue(A)
    if lam_min < INVERTIBILITY_GATE:
        raise SingularMixtureError(f"A(s) has min eigenvalue {lam_min:.3e} at s = {s}")
    X = hermitianize(sum(w * apply_spectral(Tj, X_LOG_SQ) for w, Tj in zip(ens.pi, T)))
    Hsum = hermitianize(sum(w * apply_spectral(Tj, NEG_X_LOG_X) for w, Tj in zip(ens.pi, T)))
    first, im1 = trace_parts(apply_spectral(A, power(s)) @ X)
    second, im2 = trace_parts(apply_spectral(A, power(s - 1.0)) @ Hsum @ Hsum)
    return first, second, max(im1, im2)


def sufficient_condition_margin(ens: Ensemble, s: float) -> float:
    first, second, _ = sufficient_condition_terms(ens, s)
    return first - second


@dataclass(frozen=True)
class AuxiliaryProfile:
    s_grid: np.ndarray
    e_values: np.ndarray
    second_differences: np.ndarray
    h: float

    def is_concave(self, tol: float = 1e-6) -> bool:
        return bool(np.all(self.second_differences <= tol))

    def records(self):
        for s, e, d in zip(self.s_grid, self.e_values, self.second_differences):
            yield {"s": float(s), "E": float(e), "second_difference": float(d)}


def default_grid(step: float = 0.01) -> np.ndarray:
    n = int(round(1.0 / step))
    if n < 1 or abs(n * step - 1.0) > 1e-9:
        raise InvalidInputError("grid step must divide 1")
    return np.arange(n + 1) / n


def concavity_profile(ens: Ensemble, s_grid=None, h: float = 1e-2) -> AuxiliaryProfile:
    """Second differences ``(E(s+h) - 2E(s) + E(s-h)) / h^2`` over ``s_grid``.

    Where the central stencil would leave ``[0, 1]`` the stencil is shifted
    to one side (``s, s+h, s+2h`` at the left end, ``s-2h, s-h, s`` at the
    right), keeping ``h`` fixed so rounding noise stays at ``~1e-13 / h^2``.
    """
    if not h > 0 or 2 * h > 1:
        raise InvalidInputError("h must lie in (0, 1/2]")
    grid = default_grid() if s_grid is None else np.asarray(s_grid, dtype=float)
    if grid.ndim != 1 or grid.size == 0:
        raise InvalidInputError("s_grid must be a nonempty sequence")
    if np.any(np.diff(grid) <= 0) or grid[0] < 0 or grid[-1] > 1:
        raise InvalidInputError("s_grid must be strictly increasing inside [0, 1]")

    spectra = [spectral_decompose(S) for S in ens.states]
    cache: dict[float, float] = {}

    def E(s):
        s = float(s)
        if s not in cache:
            cache[s] = _E_from_spectra(ens.pi, spectra, s)
        return cache[s]

    e_vals = np.empty_like(grid)
    d2 = np.empty_like(grid)
    for k, s in enumerate(grid):
        e_vals[k] = E(s)
        if s - h < 0:
            lo, mid, hi = s, s + h, s + 2 * h
        elif s + h > 1:
            lo, mid, hi = s - 2 * h, s - h, s
        else:
            lo, mid, hi = s - h, s, s + h
        d2[k] = (E(min(hi, 1.0)) - 2 * E(mid) + E(max(lo, 0.0))) / h**2
    return AuxiliaryProfile(grid, e_vals, d2, float(h))
