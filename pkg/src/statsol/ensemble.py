"""Monte-Carlo layer: sampling, per-sample solves, empirical measures.

Draws are counter-based (one Philox stream per (seed, index) pair), so
sample k is independent of the ensemble size and of execution order:
growing K extends an ensemble instead of reshuffling it.  The reference
measure uses a disjoint index namespace of the same seed.
"""

from dataclasses import dataclass, field

import numpy as np

from .dgspace import Mesh, ref_tables
from .errors import EnsembleError
from .reconstruction import temporal_reconstruct
from .solver import SolverConfig, run_deterministic
from .systems import manufactured_solution

_SAMPLE_STREAM = 0
_REFERENCE_STREAM = 1


def _draw_uniform(seed, stream, index):
    key = np.array([np.uint64(seed), np.uint64((stream << 56) + index)], dtype=np.uint64)
    return float(np.random.Generator(np.random.Philox(key=key)).random())


@dataclass(frozen=True)
class SampleSet:
    """Sampled stochastic inputs with uniform Monte-Carlo weights."""

    xi: np.ndarray
    seed: int

    def __post_init__(self):
        if self.xi.size < 1:
            raise ValueError("need at least one sample")

    @property
    def size(self):
        return self.xi.size

    @property
    def weights(self):
        return np.full(self.size, 1.0 / self.size)


def sample_initial(n_samples: int, seed: int) -> SampleSet:
    """Draw n_samples of xi ~ U(0,1), one counter-based stream per sample."""
    if n_samples < 1:
        raise ValueError(f"sample count must be positive, got {n_samples}")
    xi = np.array([_draw_uniform(seed, _SAMPLE_STREAM, k) for k in range(n_samples)])
    return SampleSet(xi, seed)


class PolyAtom:
    """A piecewise-polynomial field atom (one measure point on L2)."""

    def __init__(self, mesh, coeffs):
        self.mesh = mesh
        self.coeffs = coeffs  # (N, deg+1, m)

    @property
    def n_components(self):
        return self.coeffs.shape[2]

    def values(self, points):
        """Values at flat physical points, shape (len(points), m)."""
        pts = np.asarray(points, dtype=float)
        flat = pts.reshape(-1)
        cells = np.clip(np.searchsorted(self.mesh.x, np.mod(flat, 1.0), side="right") - 1, 0, self.mesh.n_cells - 1)
        xi = 2.0 * (np.mod(flat, 1.0) - self.mesh.centers[cells]) / self.mesh.h[cells]
        from .quadrature import legendre_table

        vals = legendre_table(self.coeffs.shape[1] - 1, xi)[0]
        out = np.einsum("pkc,kp->pc", self.coeffs[cells], vals)
        return out.reshape(pts.shape + (self.coeffs.shape[2],))

    def values_on_own_quad(self, n_quad):
        """Fast path: values at this mesh's own quadrature grid, (N, q, m)."""
        _, vals, _ = ref_tables(self.coeffs.shape[1] - 1, n_quad)
        return np.einsum("nkm,kq->nqm", self.coeffs, vals)

    def marginal(self, component):
        return PolyAtom(self.mesh, self.coeffs[:, :, component : component + 1])


class FieldAtom:
    """An analytic field atom, evaluable anywhere."""

    def __init__(self, fn, n_components):
        self.fn = fn
        self.n_components = n_components

    def values(self, points):
        out = np.asarray(self.fn(np.asarray(points, dtype=float)))
        if out.ndim == np.ndim(points):
            out = out[..., None]
        return out

    def marginal(self, component):
        return FieldAtom(lambda x: self.fn(x)[..., component : component + 1], 1)


@dataclass
class EmpiricalMeasure:
    """Weighted atomic probability measure on the solution space."""

    atoms: list
    weights: np.ndarray
    mesh: Mesh = None  # quadrature context for analytic atoms

    def __post_init__(self):
        self.weights = np.asarray(self.weights, dtype=float)
        if len(self.atoms) != self.weights.size or len(self.atoms) < 1:
            raise ValueError("atom and weight counts must match and be nonzero")
        if np.any(self.weights < 0) or abs(self.weights.sum() - 1.0) > 1e-12:
            raise ValueError("weights must be nonnegative and sum to 1")
        if self.mesh is None:
            for a in self.atoms:
                if isinstance(a, PolyAtom):
                    self.mesh = a.mesh
                    break

    @property
    def size(self):
        return len(self.atoms)

    def marginal(self, component):
        return EmpiricalMeasure([a.marginal(component) for a in self.atoms], self.weights, mesh=self.mesh)


def reference_measure(n_samples: int, seed: int, t: float, mesh: Mesh = None) -> EmpiricalMeasure:
    """Analytic exact-solution measure with n_samples atoms at time t.

    Uses the reference index stream of `seed`, disjoint from the ensemble
    samples; atoms are the closed-form benchmark fields.
    """
    if n_samples < 1:
        raise ValueError(f"sample count must be positive, got {n_samples}")
    xi = np.array([_draw_uniform(seed, _REFERENCE_STREAM, i) for i in range(n_samples)])
    atoms = [FieldAtom(lambda x, z=z: manufactured_solution(t, x, z), 3) for z in xi]
    return EmpiricalMeasure(atoms, np.full(n_samples, 1.0 / n_samples), mesh=mesh)


def initial_atoms(samples: SampleSet) -> list:
    """Analytic initial-data atoms u_bar_k for the drawn samples."""
    return [FieldAtom(lambda x, z=z: manufactured_solution(0.0, x, z), 3) for z in samples.xi]


@dataclass
class SampleRun:
    """Reduced per-sample results; the full trajectory is not retained."""

    xi: float
    residual_sq: float
    lipschitz: float
    state_min: np.ndarray
    state_max: np.ndarray
    recon_initial: PolyAtom   # u_hat_k(0), degree p+1
    recon_final: PolyAtom     # u_hat_k(T), degree p+1
    raw_final: PolyAtom       # u_{h,k}(T), degree p
    n_steps: int


@dataclass
class EnsembleResult:
    """Everything the estimator needs from one Monte-Carlo ensemble."""

    samples: SampleSet
    config: SolverConfig
    mesh: Mesh
    system: object = None
    runs: list = field(default_factory=list)

    @property
    def weights(self):
        return self.samples.weights

    @property
    def residual_sqs(self):
        return np.array([r.residual_sq for r in self.runs])

    @property
    def lipschitz(self):
        return float(max(r.lipschitz for r in self.runs))

    def state_bounds(self):
        lo = np.min([r.state_min for r in self.runs], axis=0)
        hi = np.max([r.state_max for r in self.runs], axis=0)
        return lo, hi

    def raw_measure(self) -> EmpiricalMeasure:
        return EmpiricalMeasure([r.raw_final for r in self.runs], self.weights, mesh=self.mesh)

    def regularized_measure(self, which="final") -> EmpiricalMeasure:
        key = {"final": "recon_final", "initial": "recon_initial"}[which]
        return EmpiricalMeasure([getattr(r, key) for r in self.runs], self.weights, mesh=self.mesh)


def run_sample(xi, config: SolverConfig, system, keep_reconstruction=False):
    """Solve, reconstruct and reduce a single sample."""
    traj = run_deterministic(xi, config, system)
    recon = temporal_reconstruct(traj)
    s = config.t_final
    lo, hi = recon.state_range(s)
    run = SampleRun(
        xi=float(xi),
        residual_sq=recon.residual_norm_sq(s),
        lipschitz=recon.lipschitz_bound(s),
        state_min=lo,
        state_max=hi,
        recon_initial=PolyAtom(traj.mesh, recon.ucoef[0]),
        recon_final=PolyAtom(traj.mesh, recon.ucoef[-1]),
        raw_final=PolyAtom(traj.mesh, traj.nodes[-1].coeffs),
        n_steps=len(traj.nodes) - 1,
    )
    if keep_reconstruction:
        return run, recon
    return run


def compute_ensemble(samples: SampleSet, config: SolverConfig, system) -> EnsembleResult:
    """Run every sample and gather reduced results in index order.

    Individual failures are collected and reported together, naming the
    failed sample indices.
    """
    result = EnsembleResult(samples, config, config.make_mesh(), system)
    failures = []
    for k, xi in enumerate(samples.xi):
        try:
            result.runs.append(run_sample(xi, config, system))
        except Exception as exc:  # noqa: BLE001 - aggregated and re-raised
            failures.append((k, exc))
    if failures:
        raise EnsembleError(failures)
    return result
