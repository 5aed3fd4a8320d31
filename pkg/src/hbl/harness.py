"""Experiment orchestration: configuration, the gradient-descent loop with
checkpoint analyses, grid sweeps, artifact emission, and the CLI.

Artifacts per run (all inside the run directory):
  trajectory.csv       step, lambda_1..lambda_r, excess_loss, hf_norm
  spectrum_<step>.csv  eigenvalue, cluster, predicted_value, provenance
  summary.json         config echo, per-checkpoint verdicts, final report

Exit codes: 0 all checks pass, 1 check failures, 2 configuration error,
3 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import yaml

from . import hessian as hs
from . import spectrum as sp
from .dynamics import max_step_size
from .errors import ConfigurationError, DimensionError, HblError
from .matrixkit import spectral_norm, sym_eigvalues
from .network import (
    DataModel,
    NetworkDims,
    TrainConfig,
    balanced_init,
    gd_step,
    population_excess_loss,
    residual_cross_covariance,
    sample_frames,
    spectral_state,
)

# Above this parameter count the Hessian is not assembled; predicted spectra
# are emitted instead, marked in the provenance column.
HESSIAN_PARAM_CAP = 3000

DEFAULT_STEPS = 400
DEFAULT_ETA_SAFETY = 0.9  # default eta = safety factor times the step bound

PROV_MEASURED = "measured"
PROV_PREDICTED = "predicted"

# Near the optimum each aligned value carries absolute rounding of a few
# machine epsilons, so the measured excess loss saturates around
# r/2 * LOSS_RESOLUTION^2 while the analytic decay envelope keeps falling.
# The loss-bound verdict treats that floor as the resolution limit.
LOSS_RESOLUTION = 1e-14


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything one run needs; validated before any compute."""

    dims: NetworkDims
    init_mode: str  # "uniform" or "spectrum"
    mu: float = 0.5
    values: Tuple[float, ...] = ()
    frame_seed: int = 0
    train: TrainConfig = field(default_factory=lambda: TrainConfig(eta=0.1, steps=0))
    checkpoint_steps: Optional[Tuple[int, ...]] = None
    assemble_hessian: bool = True
    hessian_at: str = "all"  # "all" or "final"
    eigenvectors: bool = False
    weyl: bool = True
    fd_oracle: bool = False
    q: Optional[int] = None
    output_dir: Optional[str] = None
    run_id: str = "run"

    def initial_lambdas(self) -> np.ndarray:
        """Active initial aligned eigenvalues, length r."""
        if self.init_mode == "uniform":
            return np.full(self.dims.rank, self.mu)
        return np.asarray(self.values, dtype=np.float64)

    def validate(self):
        """Check every module precondition; raise ConfigurationError naming
        the violated one."""
        if self.init_mode not in ("uniform", "spectrum"):
            raise ConfigurationError(
                f"init mode must be 'uniform' or 'spectrum', got {self.init_mode!r}"
            )
        if self.init_mode == "uniform" and not self.mu > 0:
            raise ConfigurationError(f"uniform init needs mu > 0, got {self.mu}")
        if self.init_mode == "spectrum":
            vals = np.asarray(self.values, dtype=np.float64)
            if vals.size != self.dims.rank:
                raise ConfigurationError(
                    f"spectrum init needs {self.dims.rank} values, got {vals.size}"
                )
            if np.any(vals <= 0):
                raise ConfigurationError("spectrum init values must be positive")
            if np.any(np.diff(vals) > 0):
                raise ConfigurationError("spectrum init values must be descending")
        if self.hessian_at not in ("all", "final"):
            raise ConfigurationError(
                f"hessian_at must be 'all' or 'final', got {self.hessian_at!r}"
            )
        if self.q is not None and not self.dims.rank <= self.q <= self.dims.d0:
            raise ConfigurationError(
                f"q={self.q} outside [rank={self.dims.rank}, d0={self.dims.d0}]"
            )
        if self.checkpoint_steps is not None:
            cps = self.checkpoint_steps
            if any(b <= a for a, b in zip(cps, cps[1:])):
                raise ConfigurationError(
                    "checkpoint steps must be strictly increasing"
                )
            if cps and (cps[0] < 0 or cps[-1] > self.train.steps):
                raise ConfigurationError(
                    f"checkpoint steps must lie in [0, {self.train.steps}]"
                )
        lam0 = self.initial_lambdas()
        m_cap = max(1.0, float(np.max(lam0)))
        self.train.validate_step_size(self.dims.depth, m_cap)


def geometric_checkpoints(steps: int) -> Tuple[int, ...]:
    """Steps 0, 1, 2, 4, 8, ... capped by the run length, plus the final
    step; eigenvalue motion is fast early and exponential-tailed late."""
    points = {0, steps}
    k = 1
    while k < steps:
        points.add(k)
        k *= 2
    return tuple(sorted(points))


def resolve_checkpoints(config: ExperimentConfig) -> Tuple[int, ...]:
    if config.checkpoint_steps is not None:
        cps = set(config.checkpoint_steps)
        cps.add(config.train.steps)
        return tuple(sorted(cps))
    stride = config.train.checkpoint_stride
    if stride > 0:
        points = set(range(0, config.train.steps + 1, stride))
        points.add(config.train.steps)
        return tuple(sorted(points))
    return geometric_checkpoints(config.train.steps)


@dataclass
class CheckpointRecord:
    """Analysis results at one training step."""

    step: int
    lambdas: np.ndarray
    excess_loss: float
    provenance: str
    eigenvalues: Optional[np.ndarray] = None
    report: Optional[sp.SpectrumReport] = None
    hf_norm: float = math.nan
    hf_bound: float = math.nan
    weyl_violation: float = math.nan
    loss_bound: float = math.nan
    loss_floor: float = 0.0
    omega_norm: float = math.nan
    omega_bound: float = math.nan

    @property
    def hf_bound_ok(self) -> bool:
        return math.isnan(self.hf_norm) or self.hf_norm <= self.hf_bound

    @property
    def weyl_ok(self) -> bool:
        if math.isnan(self.weyl_violation):
            return True
        lam_max = float(np.max(np.abs(self.eigenvalues)))
        return self.weyl_violation <= 1e-9 * lam_max

    @property
    def loss_bound_ok(self) -> bool:
        return self.excess_loss <= max(self.loss_bound, self.loss_floor)

    @property
    def omega_bound_ok(self) -> bool:
        return math.isnan(self.omega_norm) or self.omega_norm <= self.omega_bound

    @property
    def bounds_ok(self) -> bool:
        return (
            self.hf_bound_ok
            and self.weyl_ok
            and self.loss_bound_ok
            and self.omega_bound_ok
        )


@dataclass
class RunArtifacts:
    """Everything a run produced, plus where it was written."""

    config: ExperimentConfig
    run_dir: Optional[Path]
    checkpoints: List[CheckpointRecord]
    alpha: float
    eigenvector_residual: float = math.nan
    fd_max_error: float = math.nan

    @property
    def final(self) -> CheckpointRecord:
        return self.checkpoints[-1]

    @property
    def all_bounds_ok(self) -> bool:
        return all(rec.bounds_ok for rec in self.checkpoints)

    def summary_dict(self) -> dict:
        cfg = self.config
        final = self.final
        rep = final.report
        dom = (
            [e for e, c in zip(final.eigenvalues, rep.cluster_of) if c == sp.DOMINANT]
            if rep is not None
            else []
        )
        spread = (
            (max(dom) - min(dom)) / np.mean(dom) if len(dom) > 1 else 0.0
        )
        return _sanitize(
            {
                "run_id": cfg.run_id,
                "config": {
                    "widths": list(cfg.dims.widths),
                    "rank": cfg.dims.rank,
                    "depth": cfg.dims.depth,
                    "init_mode": cfg.init_mode,
                    "mu": cfg.mu,
                    "values": list(cfg.values),
                    "frame_seed": cfg.frame_seed,
                    "eta": cfg.train.eta,
                    "steps": cfg.train.steps,
                    "seed": cfg.train.seed,
                    "q": cfg.q,
                    "assemble_hessian": cfg.assemble_hessian,
                    "hessian_at": cfg.hessian_at,
                },
                "alpha": self.alpha,
                "eigenvector_residual": self.eigenvector_residual,
                "fd_max_error": self.fd_max_error,
                "checkpoints": [
                    {
                        "step": rec.step,
                        "excess_loss": rec.excess_loss,
                        "provenance": rec.provenance,
                        "hf_norm": rec.hf_norm,
                        "hf_bound": rec.hf_bound,
                        "hf_bound_ok": rec.hf_bound_ok,
                        "weyl_violation": rec.weyl_violation,
                        "weyl_ok": rec.weyl_ok,
                        "loss_bound": rec.loss_bound,
                        "loss_floor": rec.loss_floor,
                        "loss_bound_ok": rec.loss_bound_ok,
                        "omega_norm": rec.omega_norm,
                        "omega_bound": rec.omega_bound,
                        "omega_bound_ok": rec.omega_bound_ok,
                        "counts": rec.report.counts if rec.report else None,
                        "counts_match": rec.report.counts_match
                        if rec.report
                        else None,
                        "ratio": rec.report.ratio if rec.report else None,
                    }
                    for rec in self.checkpoints
                ],
                "final": {
                    "step": final.step,
                    "excess_loss": final.excess_loss,
                    "ratio": rep.ratio if rep else None,
                    "ratio_range": list(rep.ratio_range) if rep else None,
                    "counts": rep.counts if rep else None,
                    "counts_match": rep.counts_match if rep else None,
                    "dominant_rel_spread": float(spread),
                    "match_errors": rep.match_errors if rep else None,
                },
                "verdicts": {
                    "bounds_ok": self.all_bounds_ok,
                    "counts_ok": bool(rep.counts_match) if rep else None,
                    "all_ok": self.all_bounds_ok
                    and (rep.counts_match if rep else True),
                },
            }
        )


def _sanitize(obj):
    """NaN/Inf are not valid JSON; map them to null."""
    if isinstance(obj, dict):
        return {k: _sanitize(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_sanitize(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        f = float(obj)
        return f if math.isfinite(f) else None
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    return obj


def _predicted_for_row(value: float, label: str, pred: sp.SpectrumPrediction) -> float:
    if label == sp.ZERO:
        return 0.0
    pool = pred.dominant_values if label == sp.DOMINANT else pred.bulk_values
    return float(pool[np.argmin(np.abs(pool - value))])


def _analyze_checkpoint(
    step, stack, data, config, lam_active, excess, loss_bound, assemble
) -> CheckpointRecord:
    dims = config.dims
    q_eff = dims.d_star if config.q is None else config.q
    prediction = sp.predict_spectrum(lam_active, dims, input_rank=q_eff)
    omega_norm = spectral_norm(residual_cross_covariance(stack, data))
    rec = CheckpointRecord(
        step=step,
        lambdas=lam_active.copy(),
        excess_loss=excess,
        provenance=PROV_MEASURED if assemble else PROV_PREDICTED,
        loss_bound=loss_bound,
        loss_floor=0.5 * dims.rank * LOSS_RESOLUTION**2,
        omega_norm=omega_norm,
        omega_bound=hs.omega_norm_bound(dims.rank, excess),
        hf_bound=hs.hf_norm_bound(stack, excess, dims.rank, dims.depth),
    )
    if assemble:
        pair = hs.assemble_pair(stack, data)
        h_eigs = sym_eigvalues(pair.h_total)
        rec.hf_norm = hs.measured_hf_norm(pair.h_f)
        rec.eigenvalues = h_eigs
        rec.report = sp.classify_clusters(h_eigs, prediction, rec.hf_norm)
        if config.weyl:
            ho_eigs = sym_eigvalues(pair.h_o)
            rec.weyl_violation = sp.verify_weyl_sandwich(
                h_eigs, ho_eigs, rec.hf_norm
            )
    else:
        eigs = np.sort(
            np.concatenate(
                [
                    prediction.dominant_values,
                    prediction.bulk_values,
                    np.zeros(prediction.zero_count),
                ]
            )
        )[::-1]
        rec.eigenvalues = eigs
        rec.report = sp.classify_clusters(eigs, prediction, 0.0)
    return rec


def run_experiment(config: ExperimentConfig) -> RunArtifacts:
    """Balanced init, the GD loop with checkpoint analyses, artifact
    emission. Deterministic given the config."""
    config.validate()
    dims = config.dims
    r = dims.rank

    q_eff = dims.d_star if config.q is None else config.q
    support = q_eff if q_eff < dims.d0 else None
    u, v = sample_frames(dims, config.frame_seed, support=support)
    data = DataModel.whitened(dims, u, v, q=config.q)

    lam0 = config.initial_lambdas()
    sv = np.zeros(dims.d_star)
    sv[:r] = lam0**dims.depth
    stack = balanced_init(dims, sv, frames=(u, v))

    assemble_any = (
        config.assemble_hessian and dims.param_count <= HESSIAN_PARAM_CAP
    )
    checkpoints = resolve_checkpoints(config)
    cp_set = set(checkpoints)
    eta = config.train.eta
    depth = dims.depth

    state0 = spectral_state(stack)
    l0 = population_excess_loss(stack, data)
    alpha = float(np.min(state0.lambdas[:r]) ** (2 * depth - 2))

    records = []
    for t in range(config.train.steps + 1):
        if t in cp_set:
            state = spectral_state(stack)
            lam_active = state.lambdas[:r]
            excess = population_excess_loss(stack, data)
            bound = l0 * math.exp(-2.0 * depth * alpha * eta * t)
            assemble = assemble_any and (
                config.hessian_at == "all" or t == config.train.steps
            )
            records.append(
                _analyze_checkpoint(
                    t, stack, data, config, lam_active, excess, bound, assemble
                )
            )
        if t < config.train.steps:
            stack = gd_step(stack, data, eta)
            lam_now = spectral_state(stack).lambdas[:r]
            alpha = min(alpha, float(np.min(lam_now) ** (2 * depth - 2)))

    artifacts = RunArtifacts(
        config=config, run_dir=None, checkpoints=records, alpha=alpha
    )
    # The eigenvector structure check needs a full-rank (identity) input
    # covariance; with q < d0 the completed V columns mix support and
    # kernel directions and are no longer eigenvector labels.
    if config.eigenvectors and assemble_any and q_eff == dims.d0:
        a_o = hs.assemble_a_outer(stack)
        pair_h_o = hs.assemble_outer(stack, data)
        artifacts.eigenvector_residual = sp.verify_eigenvectors(
            stack, a_o, pair_h_o, rank=r
        )
    if config.fd_oracle and dims.param_count <= hs.FD_ORACLE_CAP:
        pair = hs.assemble_pair(stack, data)
        fd = hs.finite_difference_hessian(stack, data)
        artifacts.fd_max_error = float(np.max(np.abs(pair.h_total - fd)))

    if config.output_dir is not None:
        run_dir = Path(config.output_dir) / config.run_id
        write_artifacts(artifacts, run_dir)
        artifacts.run_dir = run_dir
    return artifacts


def _fmt(x: float) -> str:
    return repr(float(x))


def write_artifacts(artifacts: RunArtifacts, run_dir: Path):
    """CSV and JSON emission; float cells use shortest round-trip repr so
    reruns are byte-identical."""
    run_dir.mkdir(parents=True, exist_ok=True)
    r = artifacts.config.dims.rank

    lines = [
        "step," + ",".join(f"lambda_{i + 1}" for i in range(r)) + ",excess_loss,hf_norm"
    ]
    for rec in artifacts.checkpoints:
        cells = [str(rec.step)]
        cells += [_fmt(x) for x in rec.lambdas]
        cells += [_fmt(rec.excess_loss), _fmt(rec.hf_norm)]
        lines.append(",".join(cells))
    (run_dir / "trajectory.csv").write_text("\n".join(lines) + "\n")

    for rec in artifacts.checkpoints:
        rows = ["eigenvalue,cluster,predicted_value,provenance"]
        for value, label in zip(rec.eigenvalues, rec.report.cluster_of):
            pred = _predicted_for_row(value, label, rec.report.prediction)
            rows.append(f"{_fmt(value)},{label},{_fmt(pred)},{rec.provenance}")
        (run_dir / f"spectrum_{rec.step}.csv").write_text("\n".join(rows) + "\n")

    with open(run_dir / "summary.json", "w") as fh:
        json.dump(artifacts.summary_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")


def _sweep_point(config: ExperimentConfig) -> dict:
    """Worker for one grid point; failures become records, not crashes."""
    try:
        artifacts = run_experiment(config)
        return artifacts.summary_dict()
    except HblError as exc:
        return {
            "run_id": config.run_id,
            "error": f"{type(exc).__name__}: {exc}",
            "verdicts": {"all_ok": False},
        }


def sweep_configs(
    base: ExperimentConfig, depths: Sequence[int], ranks: Sequence[int]
) -> List[ExperimentConfig]:
    """One derived config per (L, r) grid point. Depth changes rebuild the
    widths with the base's hidden size; eta is rescaled to the same safety
    fraction of each depth's step bound."""
    hidden = base.dims.hidden_min
    out = []
    for depth in depths:
        for rank in ranks:
            dims = NetworkDims.uniform_hidden(
                base.dims.d0, base.dims.d_out, hidden, depth, rank
            )
            lam0_max = (
                base.mu
                if base.init_mode == "uniform"
                else float(np.max(np.asarray(base.values)))
            )
            m_cap = max(1.0, lam0_max)
            fraction = base.train.eta / max_step_size(base.dims.depth, m_cap)
            eta = fraction * max_step_size(depth, m_cap)
            train = replace(base.train, eta=eta)
            out.append(
                replace(
                    base,
                    dims=dims,
                    train=train,
                    run_id=f"L{depth}_r{rank}",
                )
            )
    return out


def run_sweep(
    base: ExperimentConfig,
    depths: Sequence[int],
    ranks: Sequence[int],
    workers: int = 1,
) -> dict:
    """Run the (L, r) grid, one subdirectory per point, then write a
    cross-run summary. Per-point errors are recorded and the sweep
    continues."""
    configs = sweep_configs(base, depths, ranks)
    for cfg in configs:
        cfg.validate()
    if workers > 1 and len(configs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            summaries = list(pool.map(_sweep_point, configs))
    else:
        summaries = [_sweep_point(cfg) for cfg in configs]

    table = []
    for summ in summaries:
        if "error" in summ:
            table.append({"run_id": summ["run_id"], "error": summ["error"]})
            continue
        final = summ["final"]
        worst = _worst_bound_violation(summ)
        table.append(
            {
                "run_id": summ["run_id"],
                "ratio": final["ratio"],
                "counts": final["counts"],
                "counts_match": final["counts_match"],
                "max_bound_violation": worst,
                "all_ok": summ["verdicts"]["all_ok"],
            }
        )
    result = {
        "points": table,
        "all_ok": all(row.get("all_ok", False) for row in table),
    }
    if base.output_dir is not None:
        out = Path(base.output_dir)
        out.mkdir(parents=True, exist_ok=True)
        with open(out / "sweep_summary.json", "w") as fh:
            json.dump(_sanitize(result), fh, indent=2, sort_keys=True)
            fh.write("\n")
    return result


def _worst_bound_violation(summary: dict) -> float:
    worst = 0.0
    for cp in summary["checkpoints"]:
        loss_bound = max(cp["loss_bound"] or 0.0, cp["loss_floor"] or 0.0)
        pairs = [
            (cp["hf_norm"], cp["hf_bound"]),
            (cp["excess_loss"], loss_bound),
            (cp["omega_norm"], cp["omega_bound"]),
        ]
        for measured, bound in pairs:
            if measured is not None and bound is not None:
                worst = max(worst, measured - bound)
        if cp["weyl_violation"] is not None:
            worst = max(worst, cp["weyl_violation"])
    return worst


def load_config(path: str, overrides: Optional[dict] = None) -> ExperimentConfig:
    """Read the YAML experiment file; CLI overrides win over file values."""
    with open(path) as fh:
        raw = yaml.safe_load(fh) or {}
    if not isinstance(raw, dict):
        raise ConfigurationError(f"config root must be a mapping, got {type(raw)}")
    return config_from_dict(raw, overrides or {})


def config_from_dict(raw: dict, overrides: Optional[dict] = None) -> ExperimentConfig:
    overrides = overrides or {}
    d = raw.get("dims", {})
    try:
        dims = NetworkDims.uniform_hidden(
            d0=int(d["d0"]),
            d_out=int(d["d_out"]),
            hidden=int(d.get("hidden", max(d["d0"], d["d_out"]))),
            depth=int(d.get("depth", 2)),
            rank=int(d["rank"]),
        )
    except KeyError as exc:
        raise ConfigurationError(f"dims section is missing key {exc}") from exc

    init = raw.get("init", {})
    mode = str(init.get("mode", "uniform")).lower()
    mu = float(init.get("mu", 0.5))
    values = tuple(float(x) for x in init.get("values", ()))
    frame_seed = int(overrides.get("seed", init.get("frame_seed", 0)))

    tr = raw.get("train", {})
    steps = int(overrides.get("steps", tr.get("steps", DEFAULT_STEPS)))
    eta_raw = overrides.get("eta", tr.get("eta"))
    if eta_raw is None:
        lam0_max = mu if mode == "uniform" else (max(values) if values else mu)
        eta = DEFAULT_ETA_SAFETY * max_step_size(dims.depth, max(1.0, lam0_max))
    else:
        eta = float(eta_raw)
    train = TrainConfig(
        eta=eta,
        steps=steps,
        checkpoint_stride=int(tr.get("checkpoint_stride", 0)),
        seed=int(overrides.get("seed", tr.get("seed", 0))),
    )

    cps = raw.get("checkpoints")
    checkpoint_steps = (
        tuple(int(s) for s in cps) if isinstance(cps, (list, tuple)) else None
    )

    an = raw.get("analyses", {})
    assemble = bool(an.get("assemble_hessian", True))
    if overrides.get("no_hessian"):
        assemble = False

    out_dir = overrides.get("out", raw.get("output_dir"))
    if out_dir is None:
        out_dir = os.environ.get("HBL_OUTPUT_DIR")

    return ExperimentConfig(
        dims=dims,
        init_mode=mode,
        mu=mu,
        values=values,
        frame_seed=frame_seed,
        train=train,
        checkpoint_steps=checkpoint_steps,
        assemble_hessian=assemble,
        hessian_at=str(an.get("hessian_at", "all")),
        eigenvectors=bool(an.get("eigenvectors", False)),
        weyl=bool(an.get("weyl", True)),
        fd_oracle=bool(an.get("fd_oracle", False)),
        q=None if raw.get("q") is None else int(raw["q"]),
        output_dir=None if out_dir is None else str(out_dir),
        run_id=str(raw.get("run_id", "run")),
    )


def _collect_overrides(args) -> dict:
    overrides = {}
    for key in ("seed", "steps", "eta", "out"):
        val = getattr(args, key, None)
        if val is not None:
            overrides[key] = val
    if getattr(args, "no_hessian", False):
        overrides["no_hessian"] = True
    return overrides


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hbl",
        description="Deep linear network Hessian spectrum experiments.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p):
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--steps", type=int, default=None)
        p.add_argument("--eta", type=float, default=None)
        p.add_argument("--out", type=str, default=None)
        p.add_argument("--workers", type=int, default=1)
        p.add_argument(
            "--no-hessian",
            dest="no_hessian",
            action="store_true",
            help="skip Hessian assembly; emit predicted spectra only",
        )

    p_run = sub.add_parser("run", help="execute one experiment")
    p_run.add_argument("config")
    add_common(p_run)

    p_sweep = sub.add_parser("sweep", help="run an (L, r) grid")
    p_sweep.add_argument("config")
    p_sweep.add_argument("--L", type=int, nargs="+", required=True, dest="depths")
    p_sweep.add_argument("--r", type=int, nargs="+", required=True, dest="ranks")
    add_common(p_sweep)

    p_check = sub.add_parser("check", help="validate a config, run nothing")
    p_check.add_argument("config")
    add_common(p_check)

    p_report = sub.add_parser("report", help="re-summarize existing artifacts")
    p_report.add_argument("dir")
    return parser


def _cmd_run(args) -> int:
    config = load_config(args.config, _collect_overrides(args))
    artifacts = run_experiment(config)
    summ = artifacts.summary_dict()
    final = summ["final"]
    print(
        f"{config.run_id}: steps={config.train.steps} "
        f"excess_loss={final['excess_loss']:.3e} ratio={final['ratio']} "
        f"counts={final['counts']} bounds_ok={summ['verdicts']['bounds_ok']}"
    )
    return 0 if summ["verdicts"]["all_ok"] else 1


def _cmd_sweep(args) -> int:
    config = load_config(args.config, _collect_overrides(args))
    result = run_sweep(config, args.depths, args.ranks, workers=args.workers)
    for row in result["points"]:
        if "error" in row:
            print(f"{row['run_id']}: ERROR {row['error']}")
        else:
            print(
                f"{row['run_id']}: ratio={row['ratio']} "
                f"counts_match={row['counts_match']} all_ok={row['all_ok']}"
            )
    return 0 if result["all_ok"] else 1


def _cmd_check(args) -> int:
    config = load_config(args.config, _collect_overrides(args))
    config.validate()
    print(f"{args.config}: valid ({config.run_id}, P={config.dims.param_count})")
    return 0


def _cmd_report(args) -> int:
    root = Path(args.dir)
    paths = sorted(root.rglob("summary.json"))
    if not paths:
        print(f"no summary.json under {root}")
        return 2
    all_ok = True
    for path in paths:
        with open(path) as fh:
            summ = json.load(fh)
        final = summ.get("final", {})
        ok = summ.get("verdicts", {}).get("all_ok", False)
        all_ok = all_ok and bool(ok)
        print(
            f"{summ.get('run_id', path.parent.name)}: "
            f"ratio={final.get('ratio')} counts={final.get('counts')} "
            f"all_ok={ok}"
        )
    return 0 if all_ok else 1


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    handlers = {
        "run": _cmd_run,
        "sweep": _cmd_sweep,
        "check": _cmd_check,
        "report": _cmd_report,
    }
    try:
        return handlers[args.command](args)
    except (ConfigurationError, DimensionError, FileNotFoundError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except HblError as exc:
        print(f"numerical failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
