"""Two-panel figures from hbl run artifacts: eigenvalue trajectories
color-coded by cluster on the left, the training-loss curve (log y) on the
right.

Input contract (per run directory):
  trajectory.csv       step, lambda_1..lambda_r, excess_loss, hf_norm
  spectrum_<step>.csv  eigenvalue, cluster, predicted_value, provenance
  summary.json         config echo with the network depth

Rendering is deterministic: fixed style, no timestamps in the output, so
identical CSV input yields identical image bytes.
"""

from __future__ import annotations

import csv
import json
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

CLUSTER_COLORS = {
    "dominant": "tab:purple",
    "bulk": "tab:orange",
    "zero": "tab:green",
}

TRAJECTORY_REQUIRED = ("step", "excess_loss")
SPECTRUM_REQUIRED = ("eigenvalue", "cluster")

_SPECTRUM_NAME = re.compile(r"spectrum_(\d+)\.csv$")


class MissingColumnError(KeyError):
    """A required CSV column is absent; the message names it."""


@dataclass(frozen=True)
class FigureSpec:
    """What to render and where to put it."""

    input_dir: Path
    output_dir: Path
    fmt: str = "svg"
    runs: Optional[Tuple[str, ...]] = None  # None means every run found


@dataclass
class RunData:
    """Everything one run's figure needs, straight from the artifacts."""

    run_id: str
    depth: int
    steps: List[int]
    losses: List[float]
    # checkpoint step -> list of (eigenvalue, cluster) rows, descending
    spectra: Dict[int, List[Tuple[float, str]]] = field(default_factory=dict)


def _read_csv(path: Path, required: Sequence[str]) -> List[dict]:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        for column in required:
            if column not in header:
                raise MissingColumnError(
                    f"{path.name} is missing required column {column!r}"
                )
        return list(reader)


def load_run(run_dir: Path) -> RunData:
    summary_path = run_dir / "summary.json"
    if not summary_path.exists():
        raise FileNotFoundError(f"{run_dir} has no summary.json; run incomplete")
    with open(summary_path) as fh:
        summary = json.load(fh)
    depth = int(summary["config"]["depth"])

    rows = _read_csv(run_dir / "trajectory.csv", TRAJECTORY_REQUIRED)
    steps = [int(row["step"]) for row in rows]
    losses = [float(row["excess_loss"]) for row in rows]

    spectra = {}
    for path in run_dir.iterdir():
        match = _SPECTRUM_NAME.match(path.name)
        if not match:
            continue
        step = int(match.group(1))
        spec_rows = _read_csv(path, SPECTRUM_REQUIRED)
        spectra[step] = [
            (float(row["eigenvalue"]), row["cluster"]) for row in spec_rows
        ]
    if not spectra:
        raise FileNotFoundError(f"{run_dir} has no spectrum_<step>.csv files")
    return RunData(
        run_id=summary.get("run_id", run_dir.name),
        depth=depth,
        steps=steps,
        losses=losses,
        spectra=spectra,
    )


def _eigenvalue_series(data: RunData):
    """One series per eigenvalue index across checkpoints, colored by the
    cluster label at the final checkpoint."""
    steps = sorted(data.spectra)
    final = data.spectra[steps[-1]]
    n = min(len(data.spectra[s]) for s in steps)
    series = []
    for k in range(n):
        values = [data.spectra[s][k][0] for s in steps]
        label = final[k][1]
        if label not in CLUSTER_COLORS:
            raise ValueError(f"unknown cluster label {label!r}")
        series.append((values, label))
    return steps, series


def _bulk_guide_level(data: RunData) -> Optional[float]:
    final = data.spectra[max(data.spectra)]
    bulk = [value for value, label in final if label == "bulk"]
    if not bulk:
        return None
    return data.depth * sum(bulk) / len(bulk)


def render_run(data: RunData, out_path: Path):
    """The two-panel figure: eigenvalues left, loss right."""
    fig, (ax_eig, ax_loss) = plt.subplots(1, 2, figsize=(10, 4))

    steps, series = _eigenvalue_series(data)
    seen = set()
    for values, label in series:
        kwargs = dict(color=CLUSTER_COLORS[label], linewidth=0.8, alpha=0.8)
        if label not in seen:
            kwargs["label"] = label
            seen.add(label)
        if len(steps) > 1:
            ax_eig.plot(steps, values, **kwargs)
        else:
            ax_eig.scatter(steps, values, s=12, **kwargs)
    guide = _bulk_guide_level(data)
    if guide is not None:
        ax_eig.axhline(
            guide,
            color="gray",
            linestyle="--",
            linewidth=0.8,
            label=f"{data.depth} x bulk mean",
        )
    ax_eig.set_xlabel("step")
    ax_eig.set_ylabel("eigenvalue")
    ax_eig.set_title(f"{data.run_id}: Hessian eigenvalues")
    ax_eig.legend(loc="center right", fontsize=8)

    positive = [(s, l) for s, l in zip(data.steps, data.losses) if l > 0]
    if len(positive) > 1:
        ax_loss.semilogy([s for s, _ in positive], [l for _, l in positive])
    elif positive:
        ax_loss.semilogy(
            [positive[0][0]], [positive[0][1]], marker="o", linestyle="none"
        )
        ax_loss.scatter([positive[0][0]], [positive[0][1]])
    ax_loss.set_xlabel("step")
    ax_loss.set_ylabel("excess loss")
    ax_loss.set_title("training loss")

    fig.tight_layout()
    out_path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(out_path, metadata=_stable_metadata(out_path.suffix))
    plt.close(fig)


def _stable_metadata(suffix: str) -> dict:
    # strip the creation timestamp so rerenders are byte-identical
    if suffix == ".svg":
        return {"Date": None}
    if suffix == ".png":
        return {"Software": None}
    return {}


def discover_runs(input_dir: Path) -> List[Path]:
    return sorted(
        p.parent for p in input_dir.rglob("summary.json") if p.parent != input_dir
    ) or ([input_dir] if (input_dir / "summary.json").exists() else [])


def render(spec: FigureSpec) -> List[Path]:
    """Render one figure per selected run; returns the written paths."""
    plt.rcParams["svg.hashsalt"] = "hbl-plots"
    run_dirs = discover_runs(spec.input_dir)
    if spec.runs is not None:
        wanted = set(spec.runs)
        run_dirs = [d for d in run_dirs if d.name in wanted]
        missing = wanted - {d.name for d in run_dirs}
        if missing:
            raise FileNotFoundError(
                f"run ids not found under {spec.input_dir}: {sorted(missing)}"
            )
    if not run_dirs:
        raise FileNotFoundError(f"no complete runs under {spec.input_dir}")
    written = []
    for run_dir in run_dirs:
        data = load_run(run_dir)
        out_path = spec.output_dir / f"{data.run_id}.{spec.fmt}"
        render_run(data, out_path)
        written.append(out_path)
    return written
