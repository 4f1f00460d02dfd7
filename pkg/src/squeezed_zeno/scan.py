"""Grid sweeps over measurement angles and their file outputs."""
from __future__ import annotations

import json
import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Mapping, Optional

import numpy as np

from . import __version__
from . import analytic
from .liouvillian import BathParams, cached_propagator
from .measurement import (
    CHUNK,
    ZenoSchedule,
    bloch_states,
    nonselective_batch,
    power_survival,
    selective_step_batch,
    two_qubit_states,
)

SYSTEM_ANGLES = {
    "one_qubit": ("theta", "phi"),
    "two_qubit": ("alpha", "beta", "delta", "chi"),
}
MODES = ("selective", "nonselective", "analytic_selective", "analytic_nonselective", "analytic_stationary")
POLAR = ("theta", "alpha", "delta")

DEFAULT_RANGES = {
    "theta": (0.0, math.pi, 101),
    "phi": (0.0, 2 * math.pi, 201),
    "alpha": (0.0, math.pi, 101),
    "beta": (-math.pi / 2, 3 * math.pi / 2, 201),
    "delta": (0.0, math.pi, 101),
    "chi": (-math.pi / 2, 3 * math.pi / 2, 201),
}


@dataclass(frozen=True)
class Axis:
    name: str
    lo: float
    hi: float
    count: int

    @classmethod
    def default(cls, name: str) -> "Axis":
        return cls(name, *DEFAULT_RANGES[name])

    @property
    def values(self) -> np.ndarray:
        return np.linspace(self.lo, self.hi, self.count)


def default_fixed(system: str, swept: tuple[str, ...]) -> dict[str, float]:
    """Values for the angles that are not swept (two-qubit cross-sections)."""
    if system == "one_qubit":
        return {}
    if set(swept) == {"alpha", "beta"}:
        return {"delta": math.pi / 2, "chi": 0.0}
    if set(swept) == {"delta", "chi"}:
        return {"alpha": math.pi / 2, "beta": 0.0}
    base = {"alpha": math.pi / 2, "beta": 0.0, "delta": math.pi / 2, "chi": 0.0}
    return {k: v for k, v in base.items() if k not in swept}


def default_initial_index(system: str, swept: tuple[str, ...]) -> int:
    if system == "two_qubit" and set(swept) == {"delta", "chi"}:
        return 3
    return 1


@dataclass(frozen=True)
class SweepSpec:
    system: str = "one_qubit"
    mode: str = "nonselective"
    bath: BathParams = field(default_factory=lambda: BathParams(gamma=1.0, N=1.0, eta=0.0))
    total_time: float = 10.0
    n: int = 1000
    axes: tuple[Axis, Axis] = (Axis.default("theta"), Axis.default("phi"))
    fixed: Mapping[str, float] = field(default_factory=dict)
    initial_index: Optional[int] = None

    def __post_init__(self):
        if self.system not in SYSTEM_ANGLES:
            raise ValueError(f"unknown system {self.system!r}; expected one of {sorted(SYSTEM_ANGLES)}")
        if self.mode not in MODES:
            raise ValueError(f"unknown mode {self.mode!r}; expected one of {MODES}")
        if len(self.axes) != 2:
            raise ValueError(f"exactly two swept axes are required, got {len(self.axes)}")
        allowed = SYSTEM_ANGLES[self.system]
        names = tuple(a.name for a in self.axes)
        for a in self.axes:
            if a.name not in allowed:
                raise ValueError(f"unknown axis {a.name!r} for {self.system}; expected one of {allowed}")
            if a.count < 2:
                raise ValueError(f"axis {a.name} needs at least 2 samples, got {a.count}")
            if not (math.isfinite(a.lo) and math.isfinite(a.hi)) or a.lo >= a.hi:
                raise ValueError(f"axis {a.name} has invalid range [{a.lo}, {a.hi}]")
            if a.name in POLAR and (a.lo < 0 or a.hi > math.pi + 1e-12):
                raise ValueError(f"axis {a.name} must stay within [0, pi], got [{a.lo}, {a.hi}]")
        if names[0] == names[1]:
            raise ValueError(f"axis {names[0]} given twice")
        fixed = dict(self.fixed)
        for k in fixed:
            if k in names:
                raise ValueError(f"angle {k} is both swept and fixed")
            if k not in allowed:
                raise ValueError(f"unknown fixed angle {k!r} for {self.system}")
        merged = default_fixed(self.system, names)
        merged.update({k: float(v) for k, v in fixed.items()})
        object.__setattr__(self, "fixed", merged)
        if self.initial_index is None:
            object.__setattr__(self, "initial_index", default_initial_index(self.system, names))
        dim = 2 if self.system == "one_qubit" else 4
        if not 1 <= self.initial_index <= dim:
            raise ValueError(f"initial index must be in 1..{dim}, got {self.initial_index}")
        # validates total_time and n
        ZenoSchedule(self.total_time, self.n)

    @property
    def schedule(self) -> ZenoSchedule:
        mode = "selective" if self.mode in ("selective", "analytic_selective") else "nonselective"
        return ZenoSchedule(self.total_time, self.n, mode)

    @property
    def shape(self) -> tuple[int, int]:
        return self.axes[0].count, self.axes[1].count

    def to_dict(self) -> dict:
        return {
            "system": self.system,
            "mode": self.mode,
            "bath": asdict(self.bath),
            "total_time": self.total_time,
            "n": self.n,
            "axes": [asdict(a) for a in self.axes],
            "fixed": dict(self.fixed),
            "initial_index": self.initial_index,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SweepSpec":
        return cls(
            system=d["system"],
            mode=d["mode"],
            bath=BathParams(**d["bath"]),
            total_time=d["total_time"],
            n=d["n"],
            axes=tuple(Axis(**a) for a in d["axes"]),
            fixed=d["fixed"],
            initial_index=d["initial_index"],
        )


@dataclass
class GridResult:
    spec: SweepSpec
    values: np.ndarray
    metadata: dict

    @property
    def reported(self) -> np.ndarray:
        return np.clip(self.values, 0.0, 1.0)

    def to_json(self) -> str:
        return json.dumps(
            {
                "spec": self.spec.to_dict(),
                "shape": list(self.values.shape),
                "values": [float(x) for x in self.values.ravel()],
                "metadata": self.metadata,
            },
            indent=1,
        )

    @classmethod
    def from_json(cls, text: str) -> "GridResult":
        d = json.loads(text)
        values = np.array(d["values"], dtype=float).reshape(d["shape"])
        return cls(SweepSpec.from_dict(d["spec"]), values, d["metadata"])


def grid_angles(spec: SweepSpec) -> dict[str, np.ndarray]:
    """Every angle of the system as a flat row-major array over grid nodes."""
    a0, a1 = spec.axes
    g0, g1 = np.meshgrid(a0.values, a1.values, indexing="ij")
    out = {a0.name: g0.ravel(), a1.name: g1.ravel()}
    for k, v in spec.fixed.items():
        out[k] = np.full(g0.size, v)
    return out


def basis_states(system: str, angles: Mapping[str, np.ndarray]) -> np.ndarray:
    if system == "one_qubit":
        return bloch_states(angles["theta"], angles["phi"])
    return two_qubit_states(angles["alpha"], angles["beta"], angles["delta"], angles["chi"])


def _analytic(spec: SweepSpec, angles: Mapping[str, np.ndarray]) -> np.ndarray:
    t, bath, idx = spec.total_time, spec.bath, spec.initial_index
    if spec.system == "one_qubit":
        theta, phi = angles["theta"], angles["phi"]
        if idx == 2:
            # psi_2(theta, phi) is psi_1 of the antipodal direction, same basis
            theta, phi = np.pi - theta, np.pi + phi
        direction = (theta, phi)
        if spec.mode == "analytic_selective":
            return analytic.survival_selective_limit(bath, direction, t)
        if spec.mode == "analytic_nonselective":
            return analytic.survival_nonselective_limit(bath, direction, t)
        return analytic.survival_nonselective_stationary(bath, direction)
    if spec.mode != "analytic_selective":
        raise ValueError(f"{spec.mode} has no closed form for two qubits; use selective/nonselective/analytic_selective")
    if idx in (1, 2):
        # Psi_2(alpha, beta) = Psi_1(alpha + pi, beta)
        alpha = angles["alpha"] + (np.pi if idx == 2 else 0.0)
        return np.exp(analytic.q1(bath, alpha, angles["beta"]) * t)
    delta = angles["delta"] + (np.pi if idx == 4 else 0.0)
    return np.exp(analytic.q3(bath, delta, angles["chi"]) * t)


def evaluate(spec: SweepSpec, angles: Mapping[str, np.ndarray], jobs: int = 1) -> np.ndarray:
    """Survival at each node described by ``angles`` (flat arrays of equal length)."""
    if spec.mode.startswith("analytic"):
        return np.asarray(_analytic(spec, angles), dtype=float) * np.ones(len(next(iter(angles.values()))))
    states = basis_states(spec.system, angles)
    prop = cached_propagator(spec.system, spec.bath, spec.schedule.tau)
    idx, n = spec.initial_index, spec.n

    def work(bounds):
        a, b = bounds
        if spec.mode == "selective":
            return power_survival(selective_step_batch(prop, states[a:b], idx), n)
        return nonselective_batch(prop, states[a:b], idx, n)[0]

    total = states.shape[0]
    bounds = [(a, min(a + CHUNK, total)) for a in range(0, total, CHUNK)]
    if jobs > 1 and len(bounds) > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            parts = list(pool.map(work, bounds))
    else:
        parts = [work(b) for b in bounds]
    return np.concatenate(parts)


def _timestamp() -> str:
    epoch = os.environ.get("SOURCE_DATE_EPOCH")
    t = time.gmtime(int(epoch)) if epoch else time.gmtime()
    return time.strftime("%Y-%m-%dT%H:%M:%SZ", t)


def run_sweep(spec: SweepSpec, jobs: int = 1) -> GridResult:
    """Evaluate the selected survival function on every grid node.

    Nodes are independent; ``jobs`` only changes how fixed-size chunks are
    scheduled, never the numbers.
    """
    values = evaluate(spec, grid_angles(spec), jobs).reshape(spec.shape)
    bad = (values < -1e-9) | (values > 1 + 1e-9)
    if np.any(bad):
        raise FloatingPointError(f"{int(bad.sum())} survival values fall outside [0, 1]")
    meta = {"timestamp": _timestamp(), "tool_version": __version__}
    return GridResult(spec, values, meta)


def _csv_text(result: GridResult) -> str:
    a0, a1 = result.spec.axes
    g = grid_angles(result.spec)
    lines = [f"{a0.name},{a1.name},survival"]
    for x, y, v in zip(g[a0.name], g[a1.name], result.reported.ravel()):
        lines.append(f"{float(x)!r},{float(y)!r},{float(v)!r}")
    return "\n".join(lines) + "\n"


def _gnuplot_text(result: GridResult, csv_path: Path) -> str:
    spec = result.spec
    a0, a1 = spec.axes
    title = f"{spec.system} {spec.mode}, N={spec.bath.N:g}, eta={spec.bath.eta:g}, t={spec.total_time:g}"
    if not spec.mode.startswith("analytic"):
        title += f", n={spec.n}"
    png = csv_path.with_suffix(".png").name
    return "\n".join(
        [
            "# heatmap of survival probability; run: gnuplot <this file>",
            "set datafile separator ','",
            "set key autotitle columnhead",
            "set terminal png size 900,600",
            f"set output '{png}'",
            f"set title '{title}'",
            f"set xlabel '{a1.name}'",
            f"set ylabel '{a0.name}'",
            f"set xrange [{a1.lo!r}:{a1.hi!r}]",
            f"set yrange [{a0.lo!r}:{a0.hi!r}]",
            "set cbrange [0:1]",
            "set palette rgbformulae 33,13,10",
            f"plot '{csv_path.name}' using 2:1:3 with image notitle",
            "",
        ]
    )


def emit(result: GridResult, fmt: str, path) -> Path:
    """Write ``result`` as csv, json or gnuplot_script.

    A gnuplot script is written to ``path`` together with the CSV it reads,
    placed next to it with a ``.csv`` suffix.
    """
    path = Path(path)
    try:
        if fmt == "csv":
            path.write_text(_csv_text(result), newline="\n")
        elif fmt == "json":
            path.write_text(result.to_json() + "\n", newline="\n")
        elif fmt == "gnuplot_script":
            csv_path = path.with_suffix(".csv")
            if csv_path == path:
                raise ValueError(f"gnuplot script path {path} must not end in .csv")
            csv_path.write_text(_csv_text(result), newline="\n")
            path.write_text(_gnuplot_text(result, csv_path), newline="\n")
        else:
            raise ValueError(f"unknown format {fmt!r}; expected csv, json or gnuplot_script")
    except OSError as e:
        raise OSError(f"cannot write {path}: {e.strerror or e}") from e
    return path
