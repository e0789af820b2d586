"""Command-line driver: load features, run a test, write a JSON report.

Every subcommand builds a :class:`RunConfig`, hands it to :func:`run`,
writes the resulting :class:`~geltest.io.Report` to ``--out`` (if given)
and prints a one-line summary. Exit status is 0 for any completed test,
including an infinite divergence, and 2 for configuration or input
errors.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
import time
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, replace
from pathlib import Path
from typing import List, Optional, Tuple

import numpy as np

from . import __version__
from .diagnostics import (
    aggregate_class_weights,
    bottom_k,
    gen_gaussian_mixture,
    pr_curve_from_weights,
    zero_weight_ids,
)
from .hull import hull_membership
from .io import FormatError, Report, load_features, read_labels, weight_records
from .kernels import LabelHierarchy, make_kernel
from .moments import (
    VS_MODEL_MEAN,
    FeatureSet,
    build_fid_moments,
    build_me_moments,
    build_mean_moments,
    embed,
    fid_augment,
    pca_preprocess,
    sample_witnesses,
    wrap_user_moments,
)
from .solvers import ZERO_WEIGHT, DivergenceKind, GelSolution, SolverConfig, solve
from .two_sample import TwoSampleSolution, solve_two_sample, stack_two_sample

COMMANDS = ("mean-test", "kgel", "kgel2", "hull-check", "mode-report", "label-test", "rank", "bench")
KERNELS = ("exponential", "product-delta", "product-hierarchy")


class ConfigError(ValueError):
    """Invalid or inconsistent run configuration."""


@dataclass(frozen=True)
class RunConfig:
    command: str
    moments: str = "mean"  # mean | fid | user | kgel
    divergence: str = "et"
    data: Optional[str] = None
    model: Optional[str] = None
    witness_pool: Optional[str] = None
    witness_count: int = 256
    seed: int = 0
    kernel: str = "exponential"
    two_sample: bool = False
    labels_data: Optional[str] = None
    labels_model: Optional[str] = None
    labels_pool: Optional[str] = None
    hierarchy: Optional[str] = None
    pca: bool = False
    out: Optional[str] = None
    no_weights: bool = False
    tol: float = 1e-8
    max_iters: int = 200
    per_class: bool = False
    rescale_present_count: Optional[int] = None
    workers: int = 1
    corrupted: Optional[str] = None
    report: Optional[str] = None
    bottom: int = 10
    side: str = "data"
    bench_n: int = 10_000
    bench_dim: int = 16
    bench_scaling: bool = False

    @property
    def test(self) -> str:
        """Test kind: mean, fid, user-moments, kgel, kgel2, labeled-kgel or labeled-kgel2."""
        if self.command in ("rank", "bench"):
            return self.command
        if self.command in ("mean-test", "hull-check", "mode-report") and self.moments != "kgel":
            return {"mean": "mean", "fid": "fid", "user": "user-moments"}[self.moments]
        two = self.two_sample or self.command == "kgel2"
        labeled = self.kernel != "exponential"
        if two:
            return "labeled-kgel2" if labeled else "kgel2"
        return "labeled-kgel" if labeled else "kgel"

    @property
    def is_kernel(self) -> bool:
        return self.test in ("kgel", "kgel2", "labeled-kgel", "labeled-kgel2")

    def solver(self) -> SolverConfig:
        return SolverConfig(grad_tolerance=self.tol, max_iterations=self.max_iters, rng_seed=self.seed)

    def validate(self) -> None:
        if self.command not in COMMANDS:
            raise ConfigError(f"unknown command {self.command!r}")
        if self.moments not in ("mean", "fid", "user", "kgel"):
            raise ConfigError(f"unknown moments {self.moments!r}")
        if self.moments == "kgel" and self.command not in ("hull-check", "mode-report"):
            raise ConfigError("--moments kgel is only valid for hull-check and mode-report")
        if self.command == "mode-report" and self.moments == "user":
            raise ConfigError("mode-report cannot use user-supplied moments")
        if self.command == "hull-check" and self.two_sample:
            raise ConfigError("hull-check is a one-sample check; drop --two-sample")
        if self.kernel not in KERNELS:
            raise ConfigError(f"unknown kernel {self.kernel!r}")
        try:
            DivergenceKind(self.divergence)
        except ValueError:
            raise ConfigError(f"unknown divergence {self.divergence!r}") from None
        if self.command in ("rank",):
            if self.report is None:
                raise ConfigError("rank needs --report")
            _require_file(self.report, "--report")
            return
        if self.command == "bench":
            if self.bench_n < 10 or self.bench_dim < 10 or self.witness_count < 1:
                raise ConfigError("bench needs --n >= 10, --dim >= 10 and a positive witness count")
            return
        _require_file(self.data, "--data")
        if not (self.command in ("mean-test", "hull-check") and self.moments == "user"):
            _require_file(self.model, "--model")
        if self.moments == "user" and self.two_sample:
            raise ConfigError("user-supplied moments cannot be combined with --two-sample")
        if self.is_kernel:
            _require_file(self.witness_pool, "--witness-pool")
            if self.witness_count < 1:
                raise ConfigError("--witness-count must be positive")
            if self.kernel != "exponential":
                for flag, path in (
                    ("--labels-data", self.labels_data),
                    ("--labels-model", self.labels_model),
                    ("--labels-pool", self.labels_pool),
                ):
                    if path is None:
                        raise ConfigError(f"labeled kernel {self.kernel} needs {flag}")
            if self.kernel == "product-hierarchy":
                _require_file(self.hierarchy, "--hierarchy")
        if self.command == "label-test" and self.kernel == "exponential":
            raise ConfigError("label-test needs a labeled kernel (product-delta or product-hierarchy)")
        if self.command == "mode-report":
            if self.labels_data is None:
                raise ConfigError("mode-report needs --labels-data")
            if self.per_class and self.labels_model is None:
                raise ConfigError("--per-class needs --labels-model")
        for path in (self.labels_data, self.labels_model, self.labels_pool, self.corrupted):
            if path is not None:
                _require_file(path, "label file")
        if self.workers < 1:
            raise ConfigError("--workers must be positive")

    def echo(self) -> dict:
        """Full effective configuration, solver defaults included."""
        d = asdict(self)
        d["test"] = self.test
        solver = asdict(self.solver())
        d["solver"] = solver
        return d


def _require_file(path, flag):
    if path is None:
        raise ConfigError(f"missing {flag}")
    if not Path(path).is_file():
        raise ConfigError(f"{flag}: no such file {path}")


# -- loading -----------------------------------------------------------------


@dataclass
class _Inputs:
    data: FeatureSet
    model: Optional[FeatureSet]
    pool: Optional[FeatureSet]


def _load_inputs(cfg: RunConfig) -> _Inputs:
    data = load_features(cfg.data, labels_path=cfg.labels_data)
    model = None if cfg.model is None else load_features(cfg.model, labels_path=cfg.labels_model)
    pool = None
    if cfg.is_kernel:
        pool = load_features(cfg.witness_pool, labels_path=cfg.labels_pool)
    if model is not None and model.d != data.d:
        raise ConfigError(f"dimension mismatch: data d={data.d}, model d={model.d}")
    if pool is not None and pool.d != data.d:
        raise ConfigError(f"dimension mismatch: data d={data.d}, witness pool d={pool.d}")
    if cfg.pca:
        sets = [s for s in (data, model, pool) if s is not None]
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            sets, _ = pca_preprocess(sets)
        it = iter(sets)
        data = next(it)
        model = next(it) if model is not None else None
        pool = next(it) if pool is not None else None
    return _Inputs(data, model, pool)


def _kernel(cfg: RunConfig, dim: int):
    hierarchy = LabelHierarchy.from_json(cfg.hierarchy) if cfg.kernel == "product-hierarchy" else None
    return make_kernel(cfg.kernel, dim, hierarchy)


def _witnesses(cfg: RunConfig, pool: FeatureSet, count: Optional[int] = None):
    count = cfg.witness_count if count is None else count
    if count > pool.n:
        raise ConfigError(f"--witness-count {count} exceeds the witness pool size {pool.n}")
    return sample_witnesses(pool, count, cfg.seed)


# -- report assembly -----------------------------------------------------------


def _fmt_score(s: float) -> str:
    return "+inf" if math.isinf(s) else f"{s:.3f}"


def _one_sample_report(cfg: RunConfig, sol: GelSolution, ids, side: str = "data") -> Report:
    weights = None
    zeros = None
    if sol.weights is not None:
        zeros = int(np.sum(sol.weights <= ZERO_WEIGHT))
        if not cfg.no_weights:
            weights = {side: weight_records(ids, sol.weights)}
    rep = Report(
        test=cfg.test,
        config=cfg.echo(),
        status=sol.status.value,
        divergence_nats=sol.divergence_nats,
        divergence_bits=sol.divergence_bits,
        scores=[sol.score],
        score=_fmt_score(sol.score),
        wilks=sol.wilks if sol.kind == DivergenceKind.EL else None,
        hotelling_t2=sol.hotelling_t2,
        iterations=sol.iterations,
        final_grad_norm=sol.final_grad_norm,
        hessian_rank=sol.hessian_rank,
        weights=weights,
        seed=cfg.seed,
        tool_version=__version__,
    )
    if side == "data":
        rep.beta = zeros
    else:
        rep.alpha = zeros
    return rep


def _two_sample_report(cfg: RunConfig, sol: TwoSampleSolution, data_ids, model_ids) -> Report:
    weights = None
    if sol.pi is not None and not cfg.no_weights:
        weights = {"data": weight_records(data_ids, sol.pi), "model": weight_records(model_ids, sol.psi)}
    joint = sol.joint
    return Report(
        test=cfg.test,
        config=cfg.echo(),
        status=sol.status.value,
        divergence_nats={"model": sol.divergence_model_nats, "data": sol.divergence_data_nats},
        divergence_bits={"model": sol.divergence_model_bits, "data": sol.divergence_data_bits},
        scores=list(sol.scores),
        score=sol.score_string(),
        iterations=None if joint is None else joint.iterations,
        final_grad_norm=None if joint is None else joint.final_grad_norm,
        hessian_rank=None if joint is None else joint.hessian_rank,
        alpha=sol.alpha if sol.pi is not None else None,
        beta=sol.beta if sol.pi is not None else None,
        weights=weights,
        seed=cfg.seed,
        tool_version=__version__,
    )


# -- tests -------------------------------------------------------------------


def _moment_rows(cfg: RunConfig, inp: _Inputs) -> np.ndarray:
    """One-sample moment rows for mean, fid, user and (hull-check) kgel."""
    if cfg.moments == "user":
        return wrap_user_moments(inp.data.features).rows
    if cfg.moments == "mean":
        return build_mean_moments(inp.data, inp.model.features.mean(axis=0)).rows
    if cfg.moments == "fid":
        return build_fid_moments(inp.data, inp.model).rows
    kernel = _kernel(cfg, inp.data.d)
    return build_me_moments(inp.data, inp.model, _witnesses(cfg, inp.pool), kernel, VS_MODEL_MEAN).rows


def _run_mean(cfg: RunConfig, inp: _Inputs) -> Report:
    if cfg.two_sample:
        phi = fid_augment if cfg.moments == "fid" else (lambda x: x)
        stacked = stack_two_sample(phi(inp.data.features), phi(inp.model.features))
        sol = solve_two_sample(stacked, cfg.divergence, cfg.solver())
        return _two_sample_report(cfg, sol, inp.data.ids, inp.model.ids)
    sol = solve(_moment_rows(cfg, inp), cfg.divergence, cfg.solver())
    return _one_sample_report(cfg, sol, inp.data.ids)


def _kernel_solution(cfg: RunConfig, data: FeatureSet, model: FeatureSet, pool: FeatureSet, count=None):
    kernel = _kernel(cfg, data.d)
    wit = _witnesses(cfg, pool, count)
    if cfg.test in ("kgel2", "labeled-kgel2"):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            stacked = stack_two_sample(embed(data, wit, kernel), embed(model, wit, kernel))
        return solve_two_sample(stacked, cfg.divergence, cfg.solver())
    rows = build_me_moments(data, model, wit, kernel, VS_MODEL_MEAN).rows
    return solve(rows, cfg.divergence, cfg.solver())


def _run_kgel(cfg: RunConfig, inp: _Inputs) -> Report:
    sol = _kernel_solution(cfg, inp.data, inp.model, inp.pool)
    if isinstance(sol, TwoSampleSolution):
        return _two_sample_report(cfg, sol, inp.data.ids, inp.model.ids)
    return _one_sample_report(cfg, sol, inp.data.ids)


def _data_weights(rep: Report) -> Optional[np.ndarray]:
    if rep.weights is None or "data" not in rep.weights:
        return None
    return np.array([r["weight"] for r in rep.weights["data"]])


def _model_class_oracle(data: FeatureSet, model: FeatureSet, classes):
    if model.labels is None:
        return None
    counts = {c: float(np.sum(model.labels == c)) for c in classes}
    total = sum(counts.values())
    if total <= 0:
        return None
    return {c: v / total for c, v in counts.items()}


def _run_mode_report(cfg: RunConfig, inp: _Inputs) -> Report:
    if cfg.per_class:
        return _run_per_class(cfg, inp)
    base = replace(cfg, no_weights=False)
    rep = _run_kgel(base, inp) if cfg.is_kernel else _run_mean(base, inp)
    w = _data_weights(rep)
    if w is not None:
        classes = tuple(c.item() if isinstance(c, np.generic) else c for c in np.unique(inp.data.labels))
        oracle = _model_class_oracle(inp.data, inp.model, classes)
        report = aggregate_class_weights(
            w, inp.data.labels, cfg.rescale_present_count, oracle=oracle, classes=classes
        )
        rep.class_report = report.to_json()
    if cfg.no_weights:
        rep.weights = None
    rep.config = cfg.echo()
    return rep


def _run_per_class(cfg: RunConfig, inp: _Inputs) -> Report:
    classes = [c.item() if isinstance(c, np.generic) else c for c in np.unique(inp.data.labels)]
    # the per-class test runs without labels on a single-class subset
    sub_cfg = replace(cfg, per_class=False, kernel="exponential")

    def one(c) -> Tuple[object, Report]:
        data_c = inp.data.subset(inp.data.labels == c)
        if not np.any(inp.model.labels == c):
            return c, Report(
                test=sub_cfg.test,
                config=sub_cfg.echo(),
                status="no-model-samples",
                seed=cfg.seed,
                tool_version=__version__,
            )
        model_c = inp.model.subset(inp.model.labels == c)
        pool = inp.pool
        count = None
        if pool is not None:
            if pool.labels is not None and np.any(pool.labels == c):
                pool = pool.subset(pool.labels == c)
            count = min(cfg.witness_count, pool.n)
        stripped = _Inputs(
            FeatureSet(data_c.features, None, data_c.ids),
            FeatureSet(model_c.features, None, model_c.ids),
            None if pool is None else FeatureSet(pool.features, None, pool.ids),
        )
        run_cfg = sub_cfg if count is None else replace(sub_cfg, witness_count=count)
        if cfg.is_kernel:
            rep = _run_kgel(run_cfg, stripped)
        else:
            rep = _run_mean(run_cfg, stripped)
        rep.extra["class"] = c
        return c, rep

    with ThreadPoolExecutor(max_workers=cfg.workers) as pool_exec:
        results = list(pool_exec.map(one, classes))

    summary = {
        str(c): {"status": r.status, "score": r.score, "scores": r.scores} for c, r in results
    }
    rep = Report(
        test=cfg.test,
        config=cfg.echo(),
        status="completed",
        seed=cfg.seed,
        tool_version=__version__,
        extra={"per_class": {str(c): r.to_dict(include_timing=False) for c, r in results}, "summary": summary},
    )
    return rep


def _run_label_test(cfg: RunConfig, inp: _Inputs) -> Report:
    """Weight the model's labeled samples against the data's joint embedding."""
    if cfg.test == "labeled-kgel2":
        sol = _kernel_solution(cfg, inp.data, inp.model, inp.pool)
        rep = _two_sample_report(cfg, sol, inp.data.ids, inp.model.ids)
        model_w = sol.psi
    else:
        sol = _kernel_solution(cfg, inp.model, inp.data, inp.pool)
        rep = _one_sample_report(cfg, sol, inp.model.ids, side="model")
        model_w = sol.weights
    if cfg.corrupted is not None and model_w is not None:
        flags = read_labels(cfg.corrupted)
        if len(flags) != inp.model.n:
            raise FormatError(f"{cfg.corrupted}: {len(flags)} flags for {inp.model.n} model samples")
        curve = pr_curve_from_weights(model_w, flags.astype(int) != 0)
        rep.extra["pr_curve"] = {
            "auc": curve.auc,
            "precision": [p for p, _ in curve.points],
            "recall": [r for _, r in curve.points],
            "thresholds": list(curve.thresholds),
        }
    return rep


def _run_hull_check(cfg: RunConfig, inp: _Inputs) -> Report:
    rows = _moment_rows(cfg, inp)
    verdict = hull_membership(rows, None, cfg.solver().hull_epsilon, cfg.seed, cfg.solver().hull_max_iterations)
    return Report(
        test=cfg.test,
        config=cfg.echo(),
        status=verdict.kind,
        seed=cfg.seed,
        tool_version=__version__,
        extra={
            "hull": {
                "inside": verdict.inside,
                "distance_bound": verdict.distance_bound,
                "iterations": verdict.iterations,
                "direction": None if verdict.direction is None else verdict.direction.tolist(),
            }
        },
    )


def _run_rank(cfg: RunConfig) -> Report:
    src = Report.read(cfg.report)
    ids, w = src.side_weights(cfg.side)
    k = min(cfg.bottom, len(ids))
    return Report(
        test="rank",
        config=cfg.echo(),
        status=src.status,
        seed=cfg.seed,
        tool_version=__version__,
        extra={
            "side": cfg.side,
            "bottom": [{"id": i, "weight": x} for i, x in bottom_k(w, ids, k)],
            "zero_weight_ids": zero_weight_ids(w, ids),
        },
    )


def _bench_once(cfg: RunConfig, count: int) -> dict:
    k = 10
    n = cfg.bench_n
    per = [n // k + (1 if i < n % k else 0) for i in range(k)]
    data = gen_gaussian_mixture(k, 10.0, per, cfg.bench_dim, cfg.seed)
    model = gen_gaussian_mixture(k, 10.0, per, cfg.bench_dim, cfg.seed + 1)
    pool = gen_gaussian_mixture(k, 10.0, [max(1, -(-count // k))] * k, cfg.bench_dim, cfg.seed + 2)
    t0 = time.perf_counter()
    (data, model, pool), _ = pca_preprocess([data, model, pool])
    wit = sample_witnesses(pool, count, cfg.seed)
    rows = build_me_moments(data, model, wit, make_kernel("exponential", data.d), VS_MODEL_MEAN).rows
    t1 = time.perf_counter()
    sol = solve(rows, DivergenceKind.ET, cfg.solver())
    t2 = time.perf_counter()
    return {
        "witness_count": count,
        "status": sol.status.value,
        "iterations": sol.iterations,
        "embed_seconds": t1 - t0,
        "solve_seconds": t2 - t1,
        "total_seconds": t2 - t0,
        "divergence_nats": sol.divergence_nats,
    }


def _run_bench(cfg: RunConfig) -> Report:
    runs = [_bench_once(cfg, cfg.witness_count)]
    if cfg.bench_scaling:
        runs.append(_bench_once(cfg, 2 * cfg.witness_count))
    extra = {"runs": runs, "n": cfg.bench_n, "dim": cfg.bench_dim}
    if cfg.bench_scaling:
        extra["doubling_ratio"] = runs[1]["total_seconds"] / max(runs[0]["total_seconds"], 1e-12)
    return Report(
        test="bench",
        config=cfg.echo(),
        status=runs[0]["status"],
        divergence_nats=runs[0]["divergence_nats"],
        iterations=runs[0]["iterations"],
        seed=cfg.seed,
        tool_version=__version__,
        extra=extra,
    )


def run(cfg: RunConfig) -> Report:
    """Execute one configured test and return its report (timing filled in)."""
    cfg.validate()
    start = time.perf_counter()
    if cfg.command == "rank":
        rep = _run_rank(cfg)
    elif cfg.command == "bench":
        rep = _run_bench(cfg)
    else:
        inp = _load_inputs(cfg)
        if cfg.command == "hull-check":
            rep = _run_hull_check(cfg, inp)
        elif cfg.command == "mean-test":
            rep = _run_mean(cfg, inp)
        elif cfg.command == "mode-report":
            rep = _run_mode_report(cfg, inp)
        elif cfg.command == "label-test":
            rep = _run_label_test(cfg, inp)
        else:
            rep = _run_kgel(cfg, inp)
    rep.timing_seconds = time.perf_counter() - start
    return rep


def summary_line(rep: Report) -> str:
    parts = [rep.test, f"status={rep.status}"]
    if rep.score:
        two = isinstance(rep.divergence_nats, dict)
        parts.append(f"score={rep.score}" + (" (model/data)" if two else ""))
    if rep.alpha is not None:
        parts.append(f"alpha={rep.alpha}")
    if rep.beta is not None:
        parts.append(f"beta={rep.beta}")
    if "pr_curve" in rep.extra:
        parts.append(f"pr_auc={rep.extra['pr_curve']['auc']:.4f}")
    if rep.test == "bench":
        parts.append(f"seconds={rep.extra['runs'][0]['total_seconds']:.2f}")
    return " ".join(parts)


# -- argument parsing ----------------------------------------------------------


def _add_common(p: argparse.ArgumentParser, kernel_default: str = "exponential"):
    p.add_argument("--data", help="feature matrix (.npy or .csv) of the weighted sample")
    p.add_argument("--model", help="feature matrix of the model sample")
    p.add_argument("--witness-pool", help="features from which witness points are drawn")
    p.add_argument("--witness-count", type=int, default=256)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--kernel", choices=KERNELS, default=kernel_default)
    p.add_argument("--divergence", choices=[k.value for k in DivergenceKind], default="et")
    p.add_argument("--two-sample", action="store_true")
    p.add_argument("--labels-data")
    p.add_argument("--labels-model")
    p.add_argument("--labels-pool", help="labels of the witness pool (labeled kernels)")
    p.add_argument("--hierarchy", help="JSON label hierarchy for product-hierarchy")
    p.add_argument("--pca", action="store_true", help="center and rotate all sets jointly first")
    p.add_argument("--out", help="write the JSON report here")
    p.add_argument("--no-weights", action="store_true", help="omit per-sample weights")
    p.add_argument("--tol", type=float, default=1e-8, help="gradient tolerance")
    p.add_argument("--max-iters", type=int, default=200)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="geltest", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("mean-test", help="mean, FID-style or user-supplied moment test")
    _add_common(p)
    p.add_argument("--moments", choices=("mean", "fid", "user"), default="mean")

    p = sub.add_parser("kgel", help="kernel mean-embedding test (one-sample unless --two-sample)")
    _add_common(p)

    p = sub.add_parser("kgel2", help="two-sample kernel mean-embedding test")
    _add_common(p)

    p = sub.add_parser("hull-check", help="is the target inside the hull of the moment rows?")
    _add_common(p)
    p.add_argument("--moments", choices=("mean", "fid", "user", "kgel"), default="mean")

    p = sub.add_parser("mode-report", help="per-class mass of the data weights")
    _add_common(p)
    p.add_argument("--moments", choices=("kgel", "mean", "fid"), default="kgel",
                   help="kernel test (default) or a mean/FID test")
    p.add_argument("--per-class", action="store_true", help="one test per data class")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--rescale-present-count", type=int, default=None)

    p = sub.add_parser("label-test", help="flag model samples whose labels disagree with the data")
    _add_common(p, kernel_default="product-delta")
    p.add_argument("--corrupted", help="0/1 file marking truly corrupted model samples")

    p = sub.add_parser("rank", help="rank samples of an existing report by weight")
    p.add_argument("--report", required=True)
    p.add_argument("--bottom", type=int, default=10)
    p.add_argument("--side", choices=("data", "model"), default="data")
    p.add_argument("--out")
    p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("bench", help="time a synthetic one-sample KGEL-ET run")
    p.add_argument("--n", dest="bench_n", type=int, default=10_000)
    p.add_argument("--dim", dest="bench_dim", type=int, default=16)
    p.add_argument("--witness-count", type=int, default=256)
    p.add_argument("--scaling", dest="bench_scaling", action="store_true",
                   help="also run with twice the witnesses and report the time ratio")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--tol", type=float, default=1e-8)
    p.add_argument("--max-iters", type=int, default=200)
    p.add_argument("--out")
    return parser


def config_from_args(ns: argparse.Namespace) -> RunConfig:
    return RunConfig(**{k: v for k, v in vars(ns).items() if v is not None})


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code == 0 else 2
    try:
        cfg = config_from_args(ns)
        rep = run(cfg)
    except (ConfigError, FormatError, OSError, ValueError, KeyError) as exc:
        print(f"geltest: error: {exc}", file=sys.stderr)
        return 2
    except np.linalg.LinAlgError as exc:
        # numerical failure (e.g. a singular Euclidean system), not bad input
        print(f"geltest: solver failure: {exc}", file=sys.stderr)
        return 1
    if cfg.out:
        try:
            rep.write(cfg.out)
        except OSError as exc:
            print(f"geltest: error: {exc}", file=sys.stderr)
            return 2
        if cfg.command == "mode-report" and cfg.per_class:
            stem = Path(cfg.out)
            for c, sub in rep.extra["per_class"].items():
                path = stem.with_name(f"{stem.stem}.class-{c}{stem.suffix or '.json'}")
                path.write_text(Report.from_json(json.dumps(sub)).to_json() + "\n")
    print(summary_line(rep))
    return 0


if __name__ == "__main__":
    sys.exit(main())
