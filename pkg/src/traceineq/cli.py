"""Command-line entry point.

Exit codes: 0 completed with no violation of a proven inequality, 1 at
least one such violation (or an oracle discrepancy), 2 usage or config
error, 3 numerical failure under ``--strict``.
"""

from __future__ import annotations

import argparse
import json
import sys
from contextlib import contextmanager

import numpy as np

from . import inequalities, oracles
from .ensembles import (
    SamplerConfig,
    SamplerKind,
    commuting_ensemble_spectra,
    commuting_pair_spectra,
    sample_ensemble,
    sample_commuting_ensemble,
)
from .errors import InvalidInputError, MatrixAnalysisError
from .inequalities import INEQUALITIES
from .reliability import auxiliary_E, concavity_profile, default_grid
from .report import ReportWriter
from .matcore import hermitianize
from .search import DEFAULT_KIND, CampaignConfig, default_s_values, run_campaign

EXIT_OK, EXIT_VIOLATION, EXIT_USAGE, EXIT_NUMERICAL = 0, 1, 2, 3

DEFAULTS = {
    "inequality": None,
    "dim": 2,
    "samples": 1000,
    "seed": None,
    "s": [],
    "s_grid_step": 0.1,
    "tol": 1e-9,
    "min_eig": 1e-6,
    "workers": 1,
    "refine_steps": 0,
    "refine_step_size": 0.05,
    "near_threshold": 1e-6,
    "ensemble_size": 3,
    "sampler": None,
    "h": 1e-2,
    "out": None,
    "strict": False,
    "emit_witness": False,
}

SUBCOMMAND_DEFAULTS = {
    "verify": {},
    "search": {"refine_steps": 20},
    "concavity": {"samples": 1, "s_grid_step": 0.01, "tol": 1e-6, "ensemble_size": 2, "seed": 0},
    "oracle": {"samples": 200, "dim": 4, "tol": 1e-10, "seed": 0},
    "repro": {"seed": 0},
}

REPRO_TARGETS = ("lemma2-counterexample",)


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


def _add_common(p: argparse.ArgumentParser, campaign: bool):
    S = argparse.SUPPRESS
    p.add_argument("--seed", type=int, default=S, help="64-bit unsigned seed")
    p.add_argument("--config", default=S, help="JSON file whose keys mirror the flags")
    p.add_argument("--out", default=S, help="write records here instead of stdout")
    if not campaign:
        return
    p.add_argument("--inequality", choices=sorted(INEQUALITIES), default=S)
    p.add_argument("--dim", type=int, default=S)
    p.add_argument("--samples", type=int, default=S)
    p.add_argument("--s", type=float, action="append", default=S, help="repeatable")
    p.add_argument("--s-grid-step", type=float, default=S)
    p.add_argument("--tol", type=float, default=S)
    p.add_argument("--min-eig", type=float, default=S)
    p.add_argument("--workers", type=int, default=S)
    p.add_argument("--refine-steps", type=int, default=S)
    p.add_argument("--refine-step-size", type=float, default=S)
    p.add_argument("--near-threshold", type=float, default=S)
    p.add_argument("--ensemble-size", type=int, default=S)
    p.add_argument("--sampler", choices=[k.value for k in SamplerKind], default=S)
    p.add_argument("--h", type=float, default=S, help="finite-difference step (concavity)")
    p.add_argument("--strict", action="store_true", default=S)
    p.add_argument("--emit-witness", action="store_true", default=S)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="traceineq", description="Trace-inequality verification toolkit.",
                     allow_abbrev=False)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name, help_text in [
        ("verify", "evaluate a proven or open inequality on random inputs, one record each"),
        ("search", "campaign with local refinement; summary record only"),
        ("concavity", "finite-difference concavity profile of E(s) on random ensembles"),
        ("oracle", "compare the matrix pipeline with scalar closed forms on commuting inputs"),
    ]:
        _add_common(sub.add_parser(name, help=help_text, allow_abbrev=False), campaign=True)
    repro = sub.add_parser("repro", help="reproduce a published numeric example", allow_abbrev=False)
    repro.add_argument("target", choices=REPRO_TARGETS)
    _add_common(repro, campaign=False)
    return parser


def _load_config(path: str) -> dict:
    try:
        with open(path) as fh:
            data = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read config {path}: {exc}") from exc
    if not isinstance(data, dict):
        raise UsageError("config must be a JSON object")
    out = {}
    for key, value in data.items():
        k = key.replace("-", "_")
        if k not in DEFAULTS or k == "config":
            raise UsageError(f"unknown config key {key!r}")
        out[k] = value
    if "s" in out and not isinstance(out["s"], list):
        out["s"] = [out["s"]]
    return out


def resolve_options(args: argparse.Namespace) -> dict:
    """Built-in defaults < config file < command-line flags."""
    flags = {k: v for k, v in vars(args).items() if k not in ("command", "target", "config")}
    opts = dict(DEFAULTS)
    opts.update(SUBCOMMAND_DEFAULTS[args.command])
    if getattr(args, "config", None):
        opts.update(_load_config(args.config))
    opts.update(flags)
    return opts


@contextmanager
def _output(path):
    if path is None:
        yield sys.stdout
    else:
        with open(path, "w") as fh:
            yield fh


def _s_values(opts) -> tuple[float, ...]:
    if opts["s"]:
        return tuple(float(s) for s in opts["s"])
    try:
        return default_s_values(opts["s_grid_step"])
    except InvalidInputError as exc:
        raise UsageError(str(exc)) from exc


def _campaign_config(opts) -> CampaignConfig:
    if opts["inequality"] is None:
        raise UsageError("--inequality is required")
    if opts["inequality"] not in INEQUALITIES:
        raise UsageError(f"unknown inequality {opts['inequality']!r}")
    if opts["seed"] is None:
        raise UsageError("--seed is required")
    info = INEQUALITIES[opts["inequality"]]
    sampler = None
    if opts["sampler"] is not None or opts["min_eig"] != DEFAULTS["min_eig"]:
        kind = opts["sampler"] or DEFAULT_KIND[info.inputs]
        sampler = SamplerConfig(
            int(opts["seed"]), int(opts["dim"]), max(int(opts["samples"]), 1), kind, float(opts["min_eig"])
        )
    return CampaignConfig(
        inequality_id=opts["inequality"],
        dim=int(opts["dim"]),
        samples=int(opts["samples"]),
        seed=int(opts["seed"]),
        s_values=_s_values(opts) if info.s_parametric else (),
        refine_steps=int(opts["refine_steps"]),
        refine_step_size=float(opts["refine_step_size"]),
        near_violation_threshold=float(opts["near_threshold"]),
        sampler=sampler,
        tol=float(opts["tol"]),
        ensemble_size=int(opts["ensemble_size"]),
    )


def _summary_record(cfg: CampaignConfig, result, emit_witness: bool) -> dict:
    record = {"record": "summary", "inequality": cfg.inequality_id, "dim": cfg.dim, "seed": cfg.seed}
    record.update(result.summary())
    if emit_witness:
        w = result.argmin_witness
        record["witness"] = None if w is None else w.to_dict()
    return record


def cmd_campaign(opts, per_sample: bool) -> int:
    cfg = _campaign_config(opts)
    workers = int(opts["workers"])
    if workers < 1:
        raise UsageError("--workers must be positive")
    try:
        result = run_campaign(cfg, workers=workers, keep_records=per_sample, strict=bool(opts["strict"]))
    except MatrixAnalysisError as exc:
        print(f"numerical failure: {exc.code}: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    with _output(opts["out"]) as stream:
        writer = ReportWriter(stream)
        for record in result.records:
            writer.write(record)
        writer.write(_summary_record(cfg, result, bool(opts["emit_witness"])))
    return EXIT_VIOLATION if result.asserted_violations else EXIT_OK


def cmd_concavity(opts) -> int:
    dim, seed, tol = int(opts["dim"]), int(opts["seed"]), float(opts["tol"])
    a = int(opts["ensemble_size"])
    try:
        grid = default_grid(float(opts["s_grid_step"]))
        sampler = SamplerConfig(seed, dim, max(int(opts["samples"]), 1), SamplerKind.GINIBRE_DENSITY,
                                float(opts["min_eig"]))
    except InvalidInputError as exc:
        raise UsageError(str(exc)) from exc
    asserted = dim == 2
    worst, violations, evaluated, skipped = -np.inf, 0, 0, {}
    with _output(opts["out"]) as stream:
        writer = ReportWriter(stream)
        for index in range(int(opts["samples"])):
            try:
                profile = concavity_profile(sample_ensemble(sampler, a, index), grid, float(opts["h"]))
            except MatrixAnalysisError as exc:
                if opts["strict"]:
                    print(f"numerical failure: {exc.code}: {exc}", file=sys.stderr)
                    return EXIT_NUMERICAL
                skipped[exc.code] = skipped.get(exc.code, 0) + 1
                continue
            for point in profile.records():
                d2 = point["second_difference"]
                bad = d2 > tol
                violations += bad
                evaluated += 1
                worst = max(worst, d2)
                writer.write({
                    "inequality": "concavity",
                    "s": point["s"],
                    "dim": dim,
                    "seed": seed,
                    "index": index,
                    "margin": -d2,
                    "kind": "SCALAR",
                    "imag_residual": 0.0,
                    "status": ("violation" if asserted else "positive") if bad else "ok",
                    "E": point["E"],
                    "second_difference": d2,
                })
        writer.write({
            "record": "summary",
            "inequality": "concavity",
            "dim": dim,
            "seed": seed,
            "evaluated": evaluated,
            "min_margin": -worst,
            "violations": violations,
            "near_violations": 0,
            "skipped": dict(sorted(skipped.items())),
        })
    return EXIT_VIOLATION if (asserted and violations) else EXIT_OK


def repro_lemma2_counterexample() -> dict:
    t = np.array([3.0, 2.0, 1.0])
    a = np.array([2.0 / 3.0, 1.0, 1.5])
    b = np.array([0.5, 4.0, 1.0])
    s = 0.5
    margin, cond_i, cond_ii = inequalities.lemma2_margin(t, a, b, s)
    return {
        "repro": "lemma2-counterexample",
        "s": s,
        "t": t.tolist(),
        "a": a.tolist(),
        "b": b.tolist(),
        "lhs": float(np.sum(t**s * a)),
        "rhs": float(np.sum(t ** (s - 1) * b)),
        "margin": margin,
        "cond_i": cond_i,
        "cond_ii": cond_ii,
        "sum_t_a": float(np.sum(t * a)),
        "sum_a": float(np.sum(a)),
    }


def cmd_repro(opts, target: str) -> int:
    with _output(opts["out"]) as stream:
        ReportWriter(stream).write(repro_lemma2_counterexample())
    return EXIT_OK


def run_oracle_checks(dim: int, samples: int, seed: int, min_eig: float = 1e-6) -> dict:
    """Max discrepancies between matrix routines and scalar closed forms.

    Each entry is ``(max_abs, max_rel)`` where ``rel`` is taken against the
    magnitude of the compared terms.
    """
    cfg = SamplerConfig(seed, dim, max(samples, 1), SamplerKind.COMMUTING_PAIR, min_eig)
    ens_cfg = SamplerConfig(seed, dim, max(samples, 1), SamplerKind.GINIBRE_DENSITY, min_eig)
    worst: dict[str, list[float]] = {}

    def note(name, value, expected, scale):
        d = abs(value - expected)
        cur = worst.setdefault(name, [0.0, 0.0])
        cur[0] = max(cur[0], d)
        cur[1] = max(cur[1], d / max(scale, abs(expected), 1e-300))

    for index in range(samples):
        dA, dB, U = commuting_pair_spectra(cfg, index)
        A = hermitianize((U * dA) @ U.conj().T)
        B = hermitianize((U * dB) @ U.conj().T)
        for s in (0.0, 0.25, 0.5, 0.75, 1.0):
            first, second, _ = inequalities.trace_margin_terms(A, B, s)
            note("eq3", first - second, oracles.trace_margin(dA, dB, s), max(abs(first), abs(second)))
        note("thm2-operator", inequalities.operator_margin_s0(A, B),
             oracles.operator_margin_s0(dA, dB), 1.0)
        for which in ("Q1", "Q2"):
            note(which.lower(), inequalities.operator_margin_question(A, B, which),
                 oracles.question_margin(dA, dB), 1.0)
        m1, m2 = inequalities.theorem4_margins(A, B)
        note("thm4-1", m1, oracles.cross_m1(dA, dB), 0.0)
        note("thm4-2", m2, oracles.cross_m2(dA, dB), 0.0)
        D = inequalities.relative_D(A, B)
        D_diag = (U * oracles.relative_D_diag(dA, dB)) @ U.conj().T
        note("relative_D", float(np.linalg.norm(D - D_diag)), 0.0, 1.0)
        S = inequalities.relative_matrix_entropy(A, B)
        note("remark4", float(np.linalg.norm(S + D)), 0.0, 1.0)
        pi, W, _ = commuting_ensemble_spectra(ens_cfg, 3, index)
        ens = sample_commuting_ensemble(ens_cfg, 3, index)
        for s in (0.0, 0.25, 0.5, 0.75, 1.0):
            note("auxiliary_E", auxiliary_E(ens, s), oracles.auxiliary_E(W, pi, s), 1.0)
    return {k: tuple(v) for k, v in worst.items()}


def cmd_oracle(opts) -> int:
    dim, samples, seed, tol = int(opts["dim"]), int(opts["samples"]), int(opts["seed"]), float(opts["tol"])
    try:
        results = run_oracle_checks(dim, samples, seed, float(opts["min_eig"]))
    except MatrixAnalysisError as exc:
        print(f"numerical failure: {exc.code}: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    failed = 0
    with _output(opts["out"]) as stream:
        writer = ReportWriter(stream)
        for name, (abs_d, rel_d) in results.items():
            ok = rel_d <= tol
            failed += not ok
            writer.write({
                "check": name,
                "dim": dim,
                "seed": seed,
                "evaluated": samples,
                "max_abs_discrepancy": abs_d,
                "max_rel_discrepancy": rel_d,
                "status": "ok" if ok else "mismatch",
            })
        writer.write({
            "record": "summary",
            "checks": len(results),
            "failed": failed,
            "max_abs_discrepancy": max((v[0] for v in results.values()), default=0.0),
        })
    return EXIT_VIOLATION if failed else EXIT_OK


def execute(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        opts = resolve_options(args)
        if opts["seed"] is not None and not 0 <= int(opts["seed"]) < 2**64:
            raise UsageError("--seed must be a 64-bit unsigned integer")
        if args.command in ("verify", "search"):
            return cmd_campaign(opts, per_sample=args.command == "verify")
        if args.command == "concavity":
            return cmd_concavity(opts)
        if args.command == "oracle":
            return cmd_oracle(opts)
        return cmd_repro(opts, args.target)
    except UsageError as exc:
        print(f"traceineq: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except InvalidInputError as exc:
        print(f"traceineq: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:  # --help
        return int(exc.code or 0)


def main():
    sys.exit(execute())


if __name__ == "__main__":
    main()
