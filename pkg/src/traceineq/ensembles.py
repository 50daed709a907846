"""Reproducible random inputs: Ginibre density matrices, Haar-rotated
positive contractions, commuting contraction pairs and flat Dirichlet
weights.

Every draw is a pure function of ``(seed, index)``: the per-sample generator
is seeded with ``sample_seed(seed, index)``, a SplitMix64-based mix, so
campaigns can be split across workers without coordination.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidInputError
from .matcore import hermitianize, random_unitary, spectral_decompose

_MASK64 = (1 << 64) - 1


def splitmix64(x: int) -> int:
    x = (x + 0x9E3779B97F4A7C15) & _MASK64
    z = x
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


def sample_seed(seed: int, index: int, stream: int = 0) -> int:
    """64-bit per-sample seed: ``splitmix64(splitmix64(seed ^ stream) ^ index)``."""
    return splitmix64(splitmix64((seed ^ stream) & _MASK64) ^ (index & _MASK64))


def sample_rng(seed: int, index: int, stream: int = 0) -> np.random.Generator:
    return np.random.default_rng(sample_seed(seed, index, stream))


class SamplerKind(str, enum.Enum):
    GINIBRE_DENSITY = "ginibre_density"
    SPECTRAL_CONTRACTION = "spectral_contraction"
    COMMUTING_PAIR = "commuting_pair"
    DIRICHLET_WEIGHTS = "dirichlet_weights"

    @classmethod
    def parse(cls, value) -> "SamplerKind":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).lower())
        except ValueError:
            raise InvalidInputError(f"unknown sampler kind {value!r}") from None


@dataclass(frozen=True)
class SamplerConfig:
    seed: int
    dim: int
    count: int = 1
    kind: SamplerKind = SamplerKind.SPECTRAL_CONTRACTION
    min_eigenvalue: float = 1e-6

    def __post_init__(self):
        object.__setattr__(self, "kind", SamplerKind.parse(self.kind))
        if not 0 <= self.seed <= _MASK64:
            raise InvalidInputError("seed must be a 64-bit unsigned integer")
        if self.dim < 1:
            raise InvalidInputError("dim must be positive")
        if self.count < 1:
            raise InvalidInputError("count must be positive")
        if not 0.0 <= self.min_eigenvalue < 1.0:
            raise InvalidInputError("min_eigenvalue must lie in [0, 1)")

    def _require(self, kind: SamplerKind):
        if self.kind is not kind:
            raise InvalidInputError(f"sampler kind is {self.kind.value}, expected {kind.value}")


@dataclass(frozen=True)
class Ensemble:
    """Probability weights ``pi`` over density matrices ``states``."""

    pi: np.ndarray
    states: tuple[np.ndarray, ...] = field(default_factory=tuple)

    def __post_init__(self):
        pi = np.asarray(self.pi, dtype=float).reshape(-1)
        states = tuple(np.asarray(S, dtype=complex) for S in self.states)
        if len(pi) == 0 or len(pi) != len(states):
            raise InvalidInputError("pi and states must be nonempty and of equal length")
        if np.any(pi < 0) or abs(pi.sum() - 1.0) > 1e-12:
            raise InvalidInputError("pi must be a probability vector")
        dims = {S.shape for S in states}
        if len(dims) != 1:
            raise InvalidInputError("all states must share one dimension")
        for S in states:
            check_density(S)
        object.__setattr__(self, "pi", pi)
        object.__setattr__(self, "states", states)

    @property
    def dim(self) -> int:
        return self.states[0].shape[0]

    @property
    def size(self) -> int:
        return len(self.pi)


def check_density(S, tol: float = 1e-12) -> np.ndarray:
    w = spectral_decompose(S).eigenvalues
    if w[0] < -tol or abs(w.sum() - 1.0) > tol:
        raise InvalidInputError("not a density matrix (negative eigenvalue or trace != 1)")
    return S


def is_contraction(A, tol: float = 1e-12) -> bool:
    w = spectral_decompose(A).eigenvalues
    return bool(w[0] >= -tol and w[-1] <= 1 + tol)


def _ginibre(dim: int, rng: np.random.Generator) -> np.ndarray:
    return rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))


def density_from_rng(dim: int, rng: np.random.Generator, min_eigenvalue: float = 1e-6) -> np.ndarray:
    G = _ginibre(dim, rng)
    rho = hermitianize(G @ G.conj().T)
    rho = rho / np.trace(rho).real
    w, V = spectral_decompose(rho)
    w = np.maximum(w, min_eigenvalue)
    w = w / w.sum()
    return hermitianize((V * w) @ V.conj().T)


def contraction_from_rng(
    dim: int, rng: np.random.Generator, min_eigenvalue: float = 1e-6
) -> np.ndarray:
    U = random_unitary(dim, rng)
    u = rng.uniform(min_eigenvalue, 1.0, size=dim)
    return hermitianize((U * u) @ U.conj().T)


def sample_density(cfg: SamplerConfig, index: int) -> np.ndarray:
    cfg._require(SamplerKind.GINIBRE_DENSITY)
    return density_from_rng(cfg.dim, sample_rng(cfg.seed, index), cfg.min_eigenvalue)


def sample_contraction(cfg: SamplerConfig, index: int) -> np.ndarray:
    cfg._require(SamplerKind.SPECTRAL_CONTRACTION)
    return contraction_from_rng(cfg.dim, sample_rng(cfg.seed, index), cfg.min_eigenvalue)


def sample_probability(cfg: SamplerConfig, a: int, index: int) -> np.ndarray:
    """Flat Dirichlet weights via normalized standard exponentials."""
    if a < 1:
        raise InvalidInputError("a must be at least 1")
    e = sample_rng(cfg.seed, index).standard_exponential(a)
    return e / e.sum()


def commuting_pair_spectra(
    cfg: SamplerConfig, index: int, rotate: bool = True
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """``(d_A, d_B, U)`` behind :func:`sample_commuting_pair`."""
    cfg._require(SamplerKind.COMMUTING_PAIR)
    rng = sample_rng(cfg.seed, index)
    U = random_unitary(cfg.dim, rng)
    if not rotate:
        U = np.eye(cfg.dim, dtype=complex)
    dA = rng.uniform(cfg.min_eigenvalue, 1.0, size=cfg.dim)
    dB = rng.uniform(cfg.min_eigenvalue, 1.0, size=cfg.dim)
    return dA, dB, U


def sample_commuting_pair(
    cfg: SamplerConfig, index: int, rotate: bool = True
) -> tuple[np.ndarray, np.ndarray]:
    """Two contractions sharing one eigenbasis; ``rotate=False`` keeps it diagonal."""
    dA, dB, U = commuting_pair_spectra(cfg, index, rotate)
    return (
        hermitianize((U * dA) @ U.conj().T),
        hermitianize((U * dB) @ U.conj().T),
    )


def sample_ensemble(cfg: SamplerConfig, a: int, index: int) -> Ensemble:
    """Dirichlet weights plus ``a`` Ginibre density matrices from one stream."""
    if a < 1:
        raise InvalidInputError("a must be at least 1")
    rng = sample_rng(cfg.seed, index, stream=0xE5E)
    e = rng.standard_exponential(a)
    pi = e / e.sum()
    pi[-1] = 1.0 - pi[:-1].sum()
    states = [density_from_rng(cfg.dim, rng, cfg.min_eigenvalue) for _ in range(a)]
    return Ensemble(pi, tuple(states))


def commuting_ensemble_spectra(
    cfg: SamplerConfig, a: int, index: int
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """``(pi, W, U)``: state i is ``U diag(W[i]) U^H``."""
    if a < 1:
        raise InvalidInputError("a must be at least 1")
    rng = sample_rng(cfg.seed, index, stream=0xC0E)
    e = rng.standard_exponential(a)
    pi = e / e.sum()
    pi[-1] = 1.0 - pi[:-1].sum()
    U = random_unitary(cfg.dim, rng)
    W = np.maximum(rng.standard_exponential((a, cfg.dim)), cfg.min_eigenvalue)
    W = W / W.sum(axis=1, keepdims=True)
    return pi, W, U


def sample_commuting_ensemble(cfg: SamplerConfig, a: int, index: int) -> Ensemble:
    """Ensemble whose states are simultaneously diagonal in a Haar basis."""
    pi, W, U = commuting_ensemble_spectra(cfg, a, index)
    states = tuple(hermitianize((U * w) @ U.conj().T) for w in W)
    return Ensemble(pi, states)
