"""Randomized verification campaigns and strict-descent refinement.

A campaign draws one input bundle per sample index (a pure function of
``(seed, index)``), evaluates the margin for every requested ``s`` and folds
the results. Partial results over disjoint index ranges merge exactly, so
the worker count never changes the outcome.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .ensembles import (
    Ensemble,
    SamplerConfig,
    SamplerKind,
    contraction_from_rng,
    sample_commuting_pair,
    sample_ensemble,
    sample_rng,
    sample_seed,
)
from .errors import InvalidInputError, MatrixAnalysisError
from .inequalities import evaluate, get_inequality, is_asserted
from .matcore import (
    hermitianize,
    matrix_from_dict,
    matrix_to_dict,
    spectral_decompose,
)

_TRIPLE_STREAM = 0x1E2
_JENSEN_STREAM = 0x7E5
_REFINE_STREAM = 0x4EF

HISTOGRAM_EDGES = (-1.0, -1e-3, -1e-6, -1e-9, 0.0, 1e-9, 1e-6, 1e-3, 1.0)
HISTOGRAM_LABELS = (
    "(-inf,-1)",
    "[-1,-1e-3)",
    "[-1e-3,-1e-6)",
    "[-1e-6,-1e-9)",
    "[-1e-9,0)",
    "[0,1e-9)",
    "[1e-9,1e-6)",
    "[1e-6,1e-3)",
    "[1e-3,1)",
    "[1,inf)",
)

DEFAULT_KIND = {
    "pair": SamplerKind.SPECTRAL_CONTRACTION,
    "commuting_pair": SamplerKind.COMMUTING_PAIR,
    "ensemble": SamplerKind.GINIBRE_DENSITY,
    "triple": SamplerKind.DIRICHLET_WEIGHTS,
    "jensen": SamplerKind.SPECTRAL_CONTRACTION,
}
ALLOWED_KINDS = {
    "pair": {SamplerKind.SPECTRAL_CONTRACTION, SamplerKind.COMMUTING_PAIR},
    "commuting_pair": {SamplerKind.COMMUTING_PAIR},
    "ensemble": {SamplerKind.GINIBRE_DENSITY},
    "triple": set(SamplerKind),
    "jensen": set(SamplerKind),
}


def default_s_values(step: float = 0.1) -> tuple[float, ...]:
    n = int(round(1.0 / step))
    if n < 1 or abs(n * step - 1.0) > 1e-9:
        raise InvalidInputError("s grid step must divide 1")
    return tuple(k / n for k in range(n + 1))


@dataclass(frozen=True)
class CampaignConfig:
    inequality_id: str
    dim: int
    samples: int
    seed: int
    s_values: tuple[float, ...] = ()
    refine_steps: int = 0
    refine_step_size: float = 0.05
    near_violation_threshold: float = 1e-6
    sampler: SamplerConfig | None = None
    tol: float = 1e-9
    ensemble_size: int = 3

    def __post_init__(self):
        info = get_inequality(self.inequality_id)
        if self.samples < 0:
            raise InvalidInputError("samples must be nonnegative")
        if self.dim < 1:
            raise InvalidInputError("dim must be positive")
        if info.inputs == "triple" and self.dim < 2:
            raise InvalidInputError("lemma2 needs n = dim >= 2")
        if self.refine_steps < 0 or not self.refine_step_size > 0:
            raise InvalidInputError("refine_steps >= 0 and refine_step_size > 0 required")
        if self.ensemble_size < 1:
            raise InvalidInputError("ensemble_size must be positive")
        s_values = tuple(float(s) for s in self.s_values)
        if info.s_parametric:
            s_values = s_values or default_s_values()
        else:
            s_values = (info.fixed_s,)
        if any(s is not None and not 0.0 <= s <= 1.0 for s in s_values):
            raise InvalidInputError("s values must lie in [0, 1]")
        object.__setattr__(self, "s_values", s_values)
        sampler = self.sampler
        if sampler is None:
            sampler = SamplerConfig(self.seed, self.dim, max(self.samples, 1), DEFAULT_KIND[info.inputs])
        if sampler.kind not in ALLOWED_KINDS[info.inputs]:
            raise InvalidInputError(
                f"sampler kind {sampler.kind.value} does not fit {self.inequality_id}"
            )
        if sampler.seed != self.seed or sampler.dim != self.dim:
            raise InvalidInputError("sampler seed and dim must match the campaign")
        object.__setattr__(self, "sampler", sampler)

    @property
    def input_type(self) -> str:
        return get_inequality(self.inequality_id).inputs


# ---------------------------------------------------------------------------
# Input bundles


def draw_lemma2_triple(seed: int, index: int, n: int) -> dict:
    """Positive ``t, a, b`` of length ``n`` with ``b`` scaled so both
    conditions hold and the tighter one is an equality."""
    rng = sample_rng(seed, index, _TRIPLE_STREAM)
    t = rng.standard_exponential(n)
    a = rng.standard_exponential(n)
    b = rng.standard_exponential(n)
    c = min(np.sum(t * a) / np.sum(b), np.sum(a) / np.sum(b / t))
    return {"t": t, "a": a, "b": b * c}


def draw_jensen(seed: int, index: int, dim: int, terms: int, min_eigenvalue: float) -> dict:
    """Positive ``K_i`` with spectra in ``[0, 3]`` and ``C_i`` with
    ``sum C_i^H C_i = u I`` for some ``u`` in ``[1/2, 1]``."""
    rng = sample_rng(seed, index, _JENSEN_STREAM)
    K = [3.0 * contraction_from_rng(dim, rng, min_eigenvalue) for _ in range(terms)]
    G = [rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim)) for _ in range(terms)]
    total = hermitianize(sum(g.conj().T @ g for g in G))
    w, V = spectral_decompose(total)
    inv_half = hermitianize((V * w**-0.5) @ V.conj().T)
    u = rng.uniform(0.5, 1.0)
    return {"K": K, "C": [np.sqrt(u) * g @ inv_half for g in G]}


def draw_inputs(cfg: CampaignConfig, index: int) -> dict:
    sampler = cfg.sampler
    kind = cfg.input_type
    if kind in ("pair", "commuting_pair"):
        if sampler.kind is SamplerKind.COMMUTING_PAIR:
            A, B = sample_commuting_pair(sampler, index)
        else:
            rng = sample_rng(sampler.seed, index)
            A = contraction_from_rng(cfg.dim, rng, sampler.min_eigenvalue)
            B = contraction_from_rng(cfg.dim, rng, sampler.min_eigenvalue)
        return {"A": A, "B": B}
    if kind == "ensemble":
        return {"ensemble": sample_ensemble(sampler, cfg.ensemble_size, index)}
    if kind == "triple":
        return draw_lemma2_triple(cfg.seed, index, cfg.dim)
    if kind == "jensen":
        return draw_jensen(cfg.seed, index, cfg.dim, cfg.ensemble_size, sampler.min_eigenvalue)
    raise AssertionError(kind)


def serialize_inputs(inputs: dict) -> dict:
    if "ensemble" in inputs:
        ens = inputs["ensemble"]
        return {"pi": ens.pi.tolist(), "states": [matrix_to_dict(S) for S in ens.states]}
    if "t" in inputs:
        return {k: np.asarray(inputs[k], dtype=float).tolist() for k in ("t", "a", "b")}
    if "K" in inputs:
        return {
            "K": [matrix_to_dict(k) for k in inputs["K"]],
            "C": [matrix_to_dict(c) for c in inputs["C"]],
        }
    return {"A": matrix_to_dict(inputs["A"]), "B": matrix_to_dict(inputs["B"])}


def deserialize_inputs(obj: dict) -> dict:
    try:
        if "states" in obj:
            return {
                "ensemble": Ensemble(
                    np.array(obj["pi"], dtype=float),
                    tuple(matrix_from_dict(S) for S in obj["states"]),
                )
            }
        if "t" in obj:
            return {k: np.array(obj[k], dtype=float) for k in ("t", "a", "b")}
        if "K" in obj:
            return {
                "K": [matrix_from_dict(k) for k in obj["K"]],
                "C": [matrix_from_dict(c) for c in obj["C"]],
            }
        return {"A": matrix_from_dict(obj["A"]), "B": matrix_from_dict(obj["B"])}
    except (KeyError, TypeError) as exc:
        raise InvalidInputError(f"malformed input bundle: {exc}") from exc


# ---------------------------------------------------------------------------
# Projection and refinement


def _clip_spectrum(H, lo: float, hi: float | None = None) -> np.ndarray:
    w, V = spectral_decompose(hermitianize(H))
    w = np.clip(w, lo, hi) if hi is not None else np.maximum(w, lo)
    return hermitianize((V * w) @ V.conj().T)


def _shifted_floor(w: np.ndarray, lo: float) -> np.ndarray:
    """Euclidean projection of ``w`` onto ``{x >= lo, sum x = 1}``:
    ``max(w - theta, lo)`` with ``theta`` fixing the sum."""
    n = w.size
    v = np.sort(w)[::-1]
    for k in range(n, 0, -1):
        theta = (v[:k].sum() + (n - k) * lo - 1.0) / k
        if v[k - 1] - theta >= lo:
            break
    x = np.maximum(w - theta, lo)
    return x / x.sum()


def _project_density(S, lo: float) -> np.ndarray:
    w, V = spectral_decompose(hermitianize(S))
    return hermitianize((V * _shifted_floor(w, lo)) @ V.conj().T)


def _is_valid_contraction(A, lo: float) -> bool:
    w = spectral_decompose(A).eigenvalues
    return bool(w[0] >= lo - 1e-15 and w[-1] <= 1.0)


def project_inputs(input_type: str, inputs: dict, min_eigenvalue: float = 1e-6) -> dict:
    """Map a perturbed bundle back into the valid domain.

    Already-valid bundles are returned unchanged.
    """
    if input_type == "pair":
        return {
            k: inputs[k] if _is_valid_contraction(inputs[k], min_eigenvalue)
            else _clip_spectrum(inputs[k], min_eigenvalue, 1.0)
            for k in ("A", "B")
        }
    if input_type == "commuting_pair":
        A, B = inputs["A"], inputs["B"]
        if (
            _is_valid_contraction(A, min_eigenvalue)
            and _is_valid_contraction(B, min_eigenvalue)
            and np.linalg.norm(A @ B - B @ A) <= 1e-12
        ):
            return {"A": A, "B": B}
        # A's eigenbasis is the common basis
        _, V = spectral_decompose(hermitianize(A))
        out = {}
        for k, M in (("A", A), ("B", B)):
            d = np.einsum("in,ij,jn->n", V.conj(), M, V).real
            out[k] = hermitianize((V * np.clip(d, min_eigenvalue, 1.0)) @ V.conj().T)
        return out
    if input_type == "ensemble":
        if "ensemble" in inputs:
            pi, raw = inputs["ensemble"].pi, inputs["ensemble"].states
        else:
            pi, raw = inputs["pi"], inputs["states"]
        states = []
        for S in raw:
            w = spectral_decompose(hermitianize(S)).eigenvalues
            if w[0] >= min_eigenvalue * (1 - 1e-9) and abs(w.sum() - 1.0) <= 1e-12:
                states.append(S)
                continue
            states.append(_project_density(S, min_eigenvalue))
        return {"ensemble": Ensemble(pi, tuple(states))}
    if input_type == "triple":
        t, a, b = (np.maximum(np.asarray(inputs[k], dtype=float), 1e-300) for k in ("t", "a", "b"))
        c = min(1.0, np.sum(t * a) / np.sum(b), np.sum(a) / np.sum(b / t))
        return {"t": t, "a": a, "b": b if c >= 1.0 else b * c}
    if input_type == "jensen":
        K = [k if spectral_decompose(k).eigenvalues[0] >= 0 else _clip_spectrum(k, 0.0)
             for k in inputs["K"]]
        C = list(inputs["C"])
        total = hermitianize(sum(c.conj().T @ c for c in C))
        top = spectral_decompose(total).eigenvalues[-1]
        if top > 1.0:
            C = [c / np.sqrt(top) for c in C]
        return {"K": K, "C": C}
    raise AssertionError(input_type)


def _herm_noise(dim: int, rng: np.random.Generator, scale: float) -> np.ndarray:
    G = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    return scale * hermitianize(G) / np.sqrt(2)


def perturb_inputs(input_type: str, inputs: dict, rng: np.random.Generator, step: float) -> dict:
    if input_type == "pair":
        return {k: inputs[k] + _herm_noise(inputs[k].shape[0], rng, step) for k in ("A", "B")}
    if input_type == "commuting_pair":
        w, V = spectral_decompose(hermitianize(inputs["A"]))
        out = {}
        for k in ("A", "B"):
            d = np.einsum("in,ij,jn->n", V.conj(), inputs[k], V).real
            d = d + step * rng.standard_normal(d.size)
            out[k] = hermitianize((V * d) @ V.conj().T)
        return out
    if input_type == "ensemble":
        ens = inputs["ensemble"]
        # raw bundle; project_inputs rebuilds a validated Ensemble
        return {"pi": ens.pi, "states": [S + _herm_noise(ens.dim, rng, step) for S in ens.states]}
    if input_type == "triple":
        return {
            k: np.asarray(inputs[k], dtype=float) * np.exp(step * rng.standard_normal(len(inputs[k])))
            for k in ("t", "a", "b")
        }
    if input_type == "jensen":
        dim = inputs["K"][0].shape[0]
        K = [k + _herm_noise(dim, rng, step) for k in inputs["K"]]
        C = [c + step * (rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))) / 2
             for c in inputs["C"]]
        return {"K": K, "C": C}
    raise AssertionError(input_type)


class RefineOutcome(NamedTuple):
    inputs: dict
    margin: float
    history: list


def _refine_raw(tag, inputs, s, steps, step_size, rng, min_eigenvalue):
    input_type = get_inequality(tag).inputs
    current = inputs
    margin = evaluate(tag, current, s).margin
    history = [margin]
    for _ in range(steps):
        try:
            candidate = project_inputs(
                input_type, perturb_inputs(input_type, current, rng, step_size), min_eigenvalue
            )
            value = evaluate(tag, candidate, s).margin
        except (MatrixAnalysisError, np.linalg.LinAlgError):
            history.append(margin)
            continue
        if value < margin:
            current, margin = candidate, value
        history.append(margin)
    return RefineOutcome(current, margin, history)


def refine(
    inequality_id: str,
    inputs: dict,
    s: float | None,
    steps: int,
    step_size: float,
    seed: int,
    min_eigenvalue: float = 1e-6,
) -> RefineOutcome:
    """Strict-descent random local search on the margin.

    ``inputs`` is a serialized bundle; the returned ``inputs`` is serialized
    too. ``history`` holds the accepted margin after every step and is
    nonincreasing.
    """
    if steps < 0 or not step_size > 0:
        raise InvalidInputError("steps >= 0 and step_size > 0 required")
    rng = np.random.default_rng(seed)
    out = _refine_raw(
        inequality_id, deserialize_inputs(inputs), s, steps, step_size, rng, min_eigenvalue
    )
    return RefineOutcome(serialize_inputs(out.inputs), out.margin, out.history)


# ---------------------------------------------------------------------------
# Campaigns


@dataclass
class Witness:
    index: int
    s: float | None
    margin: float
    inputs: dict
    refined: bool = False

    def key(self):
        return (self.margin, self.index, self.refined)

    def to_dict(self) -> dict:
        return {
            "index": self.index,
            "s": self.s,
            "margin": self.margin,
            "refined": self.refined,
            "inputs": serialize_inputs(self.inputs),
        }


@dataclass
class CampaignResult:
    evaluated: int = 0
    min_margin: float = math.inf
    argmin_witness: Witness | None = None
    near_violations: int = 0
    violations: int = 0
    asserted_violations: int = 0
    refined: int = 0
    histogram: list[int] = field(default_factory=lambda: [0] * len(HISTOGRAM_LABELS))
    skipped: dict[str, int] = field(default_factory=dict)
    records: list[dict] = field(default_factory=list)

    def _offer(self, w: Witness):
        if self.argmin_witness is None or w.key() < self.argmin_witness.key():
            self.argmin_witness = w
            self.min_margin = w.margin

    def merge(self, other: "CampaignResult") -> "CampaignResult":
        """Fold ``other`` (covering later indices) into ``self``."""
        self.evaluated += other.evaluated
        self.near_violations += other.near_violations
        self.violations += other.violations
        self.asserted_violations += other.asserted_violations
        self.refined += other.refined
        self.histogram = [x + y for x, y in zip(self.histogram, other.histogram)]
        for k, v in other.skipped.items():
            self.skipped[k] = self.skipped.get(k, 0) + v
        if other.argmin_witness is not None:
            self._offer(other.argmin_witness)
        self.records.extend(other.records)
        return self

    def summary(self) -> dict:
        return {
            "evaluated": self.evaluated,
            "min_margin": self.min_margin,
            "violations": self.violations,
            "asserted_violations": self.asserted_violations,
            "near_violations": self.near_violations,
            "refined": self.refined,
            "skipped": dict(sorted(self.skipped.items())),
            "histogram": dict(zip(HISTOGRAM_LABELS, self.histogram)),
        }


def _bucket(margin: float) -> int:
    return int(np.searchsorted(HISTOGRAM_EDGES, margin, side="right"))


def _classify(cfg: CampaignConfig, report, asserted: bool) -> str:
    if report.violates(cfg.tol):
        return "violation" if asserted else "negative"
    if report.margin < cfg.near_violation_threshold:
        return "near"
    return "ok"


def _run_range(cfg: CampaignConfig, start: int, stop: int, keep_records: bool, strict: bool):
    result = CampaignResult()
    tag = cfg.inequality_id
    for index in range(start, stop):
        try:
            inputs = draw_inputs(cfg, index)
        except MatrixAnalysisError as exc:
            if strict:
                raise
            result.skipped[exc.code] = result.skipped.get(exc.code, 0) + len(cfg.s_values)
            continue
        worst = None
        for s in cfg.s_values:
            asserted = is_asserted(tag, cfg.dim, s)
            try:
                report = evaluate(tag, inputs, s)
            except MatrixAnalysisError as exc:
                if strict:
                    raise
                result.skipped[exc.code] = result.skipped.get(exc.code, 0) + 1
                if keep_records:
                    result.records.append(
                        _record(cfg, index, s, None, "", 0.0, f"skipped:{exc.code}")
                    )
                continue
            result.evaluated += 1
            status = _classify(cfg, report, asserted)
            if status in ("violation", "negative"):
                result.violations += 1
                result.asserted_violations += status == "violation"
            elif status == "near":
                result.near_violations += 1
            result.histogram[_bucket(report.margin)] += 1
            result._offer(Witness(index, s, report.margin, inputs))
            if worst is None or report.margin < worst[1]:
                worst = (s, report.margin)
            if keep_records:
                result.records.append(
                    _record(cfg, index, s, report.margin, report.kind, report.imag_residual, status)
                )
        if cfg.refine_steps and worst is not None:
            s = worst[0]
            rng = np.random.default_rng(sample_seed(cfg.seed, index, _REFINE_STREAM))
            out = _refine_raw(
                tag, inputs, s, cfg.refine_steps, cfg.refine_step_size, rng,
                cfg.sampler.min_eigenvalue,
            )
            result.refined += 1
            if out.margin < worst[1]:
                report = evaluate(tag, out.inputs, s)
                if report.violates(cfg.tol):
                    result.violations += 1
                    result.asserted_violations += is_asserted(tag, cfg.dim, s)
                result._offer(Witness(index, s, out.margin, out.inputs, refined=True))
    return result


def _record(cfg, index, s, margin, kind, imag, status) -> dict:
    return {
        "inequality": cfg.inequality_id,
        "s": s,
        "dim": cfg.dim,
        "seed": cfg.seed,
        "index": index,
        "margin": margin,
        "kind": kind,
        "imag_residual": imag,
        "status": status,
    }


def _run_range_star(args):
    return _run_range(*args)


def partition(samples: int, workers: int) -> list[tuple[int, int]]:
    workers = max(1, min(workers, samples)) if samples else 1
    bounds = np.linspace(0, samples, workers + 1).round().astype(int)
    return [(int(a), int(b)) for a, b in zip(bounds[:-1], bounds[1:])]


def run_campaign(
    cfg: CampaignConfig, workers: int = 1, keep_records: bool = False, strict: bool = False
) -> CampaignResult:
    """Evaluate ``cfg.samples`` draws; identical output for any ``workers``."""
    chunks = partition(cfg.samples, workers)
    jobs = [(cfg, a, b, keep_records, strict) for a, b in chunks]
    if len(jobs) == 1:
        partials = [_run_range_star(jobs[0])]
    else:
        with ProcessPoolExecutor(max_workers=len(jobs)) as pool:
            partials = list(pool.map(_run_range_star, jobs))
    result = CampaignResult()
    for part in partials:
        result.merge(part)
    return result
