"""Experiment drivers: refinement studies, EOC computation, CSV output.

Reproduces the two benchmark studies at desk scale: a spatial sweep at
fixed sample count and a stochastic sweep at fixed mesh, each emitting one
CSV row per sweep point in the table layout

    h,error,residual,errorsample,errorreconst,A,B,L,total_bound,seed,error_full

(the first column holds the sweep value: the mesh width for spatial
studies, the sample count for stochastic ones).
"""

import math
import sys
from dataclasses import dataclass, field, fields

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .ensemble import compute_ensemble, reference_measure, sample_initial
from .errors import ConfigError
from .estimator import CSV_COLUMNS, EstimatorReport, build_report
from .solver import FLUX_KINDS, SolverConfig
from .systems import ManufacturedEuler

STUDY_KINDS = ("single-run", "spatial-study", "stochastic-study", "emd")


@dataclass
class ExperimentConfig:
    """Flat experiment description, loadable from a TOML file."""

    study: str = "single-run"
    cells: object = 64              # int, or list of ints for spatial sweeps
    samples: object = 100           # int, or list of ints for stochastic sweeps
    reference_samples: int = 2000
    seed: int = 0
    degree: int = 2
    cfl: float = 0.9
    t_final: float = 0.2
    flux: str = "lax-wendroff"
    m_tvb: float = 150.0
    limiter: bool = True
    out: str = ""

    def __post_init__(self):
        if self.study not in STUDY_KINDS:
            raise ConfigError(f"unknown study kind '{self.study}', expected one of {STUDY_KINDS}")
        if self.flux not in FLUX_KINDS:
            raise ConfigError(f"unknown flux '{self.flux}', expected one of {FLUX_KINDS}")
        for name, value in (("cells", self.cells), ("samples", self.samples)):
            values = value if isinstance(value, (list, tuple)) else [value]
            if len(values) == 0:
                raise ConfigError(f"{name} sweep must be non-empty")
            if any(int(v) <= 0 for v in values):
                raise ConfigError(f"{name} must be positive")
            if list(values) != sorted(values):
                raise ConfigError(f"{name} sweep must be monotone increasing")
        if self.reference_samples < 1:
            raise ConfigError("reference_samples must be positive")
        if self.study in ("spatial-study", "stochastic-study"):
            max_k = max(self.sample_sweep())
            if self.reference_samples < 4 * max_k:
                raise ConfigError(
                    f"reference_samples = {self.reference_samples} must be at least "
                    f"4 x max(samples) = {4 * max_k} so the reference dominates"
                )

    def cell_sweep(self):
        c = self.cells
        return [int(v) for v in (c if isinstance(c, (list, tuple)) else [c])]

    def sample_sweep(self):
        s = self.samples
        return [int(v) for v in (s if isinstance(s, (list, tuple)) else [s])]

    def solver_config(self, cells):
        return SolverConfig(
            cells=int(cells),
            degree=self.degree,
            cfl=self.cfl,
            t_final=self.t_final,
            flux=self.flux,
            m_tvb=self.m_tvb,
            limiter_enabled=self.limiter,
        )


def load_config(path) -> ExperimentConfig:
    """Parse a flat TOML experiment file; unknown keys are hard errors."""
    try:
        with open(path, "rb") as fh:
            raw = tomllib.load(fh)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"malformed config {path}: {exc}") from exc
    known = {f.name for f in fields(ExperimentConfig)}
    unknown = set(raw) - known
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    try:
        return ExperimentConfig(**raw)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc


@dataclass
class StudyResult:
    """Report rows in sweep order plus experimental orders of convergence."""

    rows: list = field(default_factory=list)
    failures: list = field(default_factory=list)

    def column(self, name):
        getter = {
            "h": "sweep_value", "error": "error_density_sq", "residual": "e_det",
            "errorsample": "e0_stoch", "errorreconst": "e0_det",
        }[name]
        return np.array([getattr(r, getter) for r in self.rows])

    def eoc(self, name):
        return compute_eoc(self.column(name), self.column("h"))


def compute_eoc(values, scales):
    """Pairwise experimental orders: log(v_i/v_{i+1}) / log(s_i/s_{i+1}).

    Nonpositive values yield NaN markers for the affected pairs.
    """
    v = np.asarray(values, dtype=float)
    s = np.asarray(scales, dtype=float)
    if v.shape != s.shape or v.size < 2:
        raise ValueError("need equally many values and scales, at least two")
    if np.any(s <= 0):
        raise ValueError("scales must be positive")
    out = np.full(v.size - 1, np.nan)
    for i in range(v.size - 1):
        if v[i] > 0 and v[i + 1] > 0:
            out[i] = math.log(v[i] / v[i + 1]) / math.log(s[i] / s[i + 1])
    return out


def run_single(config: ExperimentConfig, cells=None, n_samples=None, *,
               sweep_value=None, system=None) -> EstimatorReport:
    """One full pipeline pass: sample, solve, reconstruct, estimate."""
    system = system or ManufacturedEuler()
    cells = int(cells if cells is not None else config.cell_sweep()[0])
    n_samples = int(n_samples if n_samples is not None else config.sample_sweep()[0])
    solver_cfg = config.solver_config(cells)
    samples = sample_initial(n_samples, config.seed)
    ens = compute_ensemble(samples, solver_cfg, system)
    ref0 = reference_measure(config.reference_samples, config.seed, 0.0, mesh=ens.mesh)
    ref_t = reference_measure(config.reference_samples, config.seed, config.t_final, mesh=ens.mesh)
    return build_report(ens, ref0, ref_t, seed=config.seed, sweep_value=sweep_value)


def run_spatial_study(config: ExperimentConfig, system=None) -> StudyResult:
    """Full pipeline per mesh size at fixed sample count and seed."""
    result = StudyResult()
    for cells in config.cell_sweep():
        try:
            result.rows.append(run_single(config, cells=cells, sweep_value=1.0 / cells, system=system))
        except Exception as exc:  # noqa: BLE001 - row-level isolation
            result.failures.append((cells, f"{type(exc).__name__}: {exc}"))
    return result


def run_stochastic_study(config: ExperimentConfig, system=None) -> StudyResult:
    """Full pipeline per sample count at fixed mesh and seed."""
    result = StudyResult()
    cells = config.cell_sweep()[0]
    for n_samples in config.sample_sweep():
        try:
            result.rows.append(
                run_single(config, cells=cells, n_samples=n_samples, sweep_value=n_samples, system=system)
            )
        except Exception as exc:  # noqa: BLE001
            result.failures.append((n_samples, f"{type(exc).__name__}: {exc}"))
    return result


def emit_csv(result: StudyResult, path):
    """Write the study table; 15 significant digits, LF line endings."""
    lines = [",".join(CSV_COLUMNS)]
    lines.extend(r.csv_row() for r in result.rows)
    text = "\n".join(lines) + "\n"
    with open(path, "w", newline="\n") as fh:
        fh.write(text)


def parse_csv(path):
    """Read back an emitted study table as a list of per-row dicts."""
    with open(path) as fh:
        header = fh.readline().strip().split(",")
        rows = []
        for line in fh:
            if not line.strip():
                continue
            parts = line.strip().split(",")
            rows.append({k: float(v) for k, v in zip(header, parts)})
    return rows
