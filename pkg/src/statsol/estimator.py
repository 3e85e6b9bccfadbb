"""Assembly of the a posteriori Wasserstein error bound and its parts.

The certified bound has the form

    A * (E_det + A * W2_initial^2) * exp(s A^3 B (L + 1))

where E_det collects the space-time residuals, W2_initial^2 is bounded by
splitting the initial error into a stochastic sampling part (E0_stoch) and
a spatial reconstruction part (E0_det), A and B are relative-entropy
conditioning constants estimated over the observed state box, and L is the
largest spatial Lipschitz constant among the reconstructions.  For the
Euler benchmark the exponential factor overflows double precision, so the
bound is carried in log10 and serialized as an exact scientific-notation
string; reliability checks compare in log space.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .dgspace import SPATIAL_QUAD_POINTS
from .errors import StateSpaceError
from .quadrature import gauss_legendre


# ---------------------------------------------------------------------------
# estimator parts
# ---------------------------------------------------------------------------

def e_det(residual_norms_sq, weights):
    """Weighted sum of per-sample space-time residual norms (squared)."""
    r = np.asarray(residual_norms_sq, dtype=float)
    w = np.asarray(weights, dtype=float)
    if r.shape != w.shape:
        raise ValueError(f"residual/weight length mismatch: {r.shape} vs {w.shape}")
    return float(np.dot(w, r))


def _pair_distances_sq(atoms_a, atoms_b, mesh, n_quad=SPATIAL_QUAD_POINTS):
    """Squared L2 distances of paired atoms, shape (K,)."""
    if len(atoms_a) != len(atoms_b):
        raise ValueError(f"atom pairing mismatch: {len(atoms_a)} vs {len(atoms_b)}")
    rule = gauss_legendre(n_quad)
    pts = mesh.points(rule.nodes)
    w = 0.5 * mesh.h[:, None] * rule.weights[None, :]
    out = np.empty(len(atoms_a))
    for k, (a, b) in enumerate(zip(atoms_a, atoms_b)):
        diff = a.values(pts) - b.values(pts)
        out[k] = float(np.einsum("nqm,nq->", diff * diff, w))
    return out


def e0_det(initial_atoms, reconstructed_initial, weights, mesh):
    """Weighted squared L2 distance between sampled data and its reconstruction."""
    d = _pair_distances_sq(initial_atoms, reconstructed_initial, mesh)
    return float(np.dot(np.asarray(weights, dtype=float), d))


def e0_stoch(sample_measure, reference_measure, mesh=None):
    """Squared 2-Wasserstein distance between sample and reference measures."""
    from .transport import wasserstein2

    return wasserstein2(sample_measure, reference_measure, mesh=mesh) ** 2


@dataclass(frozen=True)
class InitialSplit:
    """Triangle-inequality split of the initial 2-Wasserstein error."""

    w2_initial_sq_bound: float
    e0_stoch: float
    e0_det: float
    pairing_tight: bool  # diagonal pairing provably optimal for the det part


def initial_split(sample_measure, reconstructed_initial, reference_measure, mesh) -> InitialSplit:
    """Split W2(initial measure, reconstructed samples) into parts.

    Bound: (sqrt(E0_stoch) + sqrt(E0_det))^2.  Also reports whether the
    spatial discretization errors are so small against the inter-sample
    separations that the paired-atom bound for the deterministic part is
    attained exactly.
    """
    det_dists = _pair_distances_sq(sample_measure.atoms, reconstructed_initial.atoms, mesh)
    det = float(np.dot(sample_measure.weights, det_dists))
    stoch = e0_stoch(sample_measure, reference_measure, mesh=mesh)

    from .transport import cost_matrix

    K = len(sample_measure.atoms)
    if K > 1:
        sep = cost_matrix(sample_measure.atoms, sample_measure.atoms, mesh)
        np.fill_diagonal(sep, np.inf)
        tight = bool(np.all(det_dists <= 0.5 * sep.min(axis=1) + 1e-30))
    else:
        tight = True
    bound = (math.sqrt(stoch) + math.sqrt(det)) ** 2
    return InitialSplit(bound, stoch, det, tight)


# ---------------------------------------------------------------------------
# stability constants over the observed state box
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class StateBox:
    """Componentwise bounding box of all observed reconstructed states."""

    lower: np.ndarray
    upper: np.ndarray

    @classmethod
    def from_bounds(cls, lower, upper, margin=0.05):
        lo = np.asarray(lower, dtype=float)
        hi = np.asarray(upper, dtype=float)
        if lo.shape != hi.shape or np.any(lo > hi):
            raise ValueError("invalid state bounds")
        pad = margin * (hi - lo)
        return cls(lo - pad, hi + pad)

    def contains(self, states):
        s = np.asarray(states)
        return np.all(s >= self.lower - 1e-12) and np.all(s <= self.upper + 1e-12)

    def grid(self, points_per_dim=21):
        """Tensor grid of states covering the box, shape (n_states, m)."""
        axes = [np.linspace(self.lower[i], self.upper[i], points_per_dim) for i in range(self.lower.size)]
        mesh = np.meshgrid(*axes, indexing="ij")
        return np.stack([g.reshape(-1) for g in mesh], axis=-1)


def estimate_constants(box: StateBox, system, points_per_dim=21, inflation=0.1):
    """Relative-entropy conditioning constants (A, B) over a state box.

    C_f = largest spectral norm of any flux-component Hessian on a dense
    grid; C_eta_min/max = extreme eigenvalues of the entropy Hessian.
    Then A = max((1 + C_f)/C_eta_min, C_eta_max) and B = C_eta_max, both
    inflated by the safety factor.
    """
    states = box.grid(points_per_dim)
    ok = system.admissible(states)
    if not np.all(ok):
        bad = states[~ok][0]
        raise StateSpaceError(f"state box leaves the admissible set at {bad}")

    h_eta = system.entropy_hessian(states)
    eig_eta = np.linalg.eigvalsh(h_eta)
    c_eta_min = float(eig_eta[..., 0].min())
    c_eta_max = float(eig_eta[..., -1].max())
    if c_eta_min <= 0:
        raise StateSpaceError("entropy Hessian not positive definite over the box")

    h_flux = system.flux_hessians(states)  # (n, m, m, m)
    eig_flux = np.linalg.eigvalsh(h_flux)
    c_flux = float(np.abs(eig_flux).max())

    a = max((1.0 + c_flux) / c_eta_min, c_eta_max)
    b = c_eta_max
    scale = 1.0 + inflation
    return a * scale, b * scale


# ---------------------------------------------------------------------------
# the total bound (log-space safe)
# ---------------------------------------------------------------------------

def total_bound_log10(e_det_value, w2_initial_sq, a, b, lip, s):
    """log10 of A (E_det + A W2_0^2) exp(s A^3 B (L+1)); -inf for zero base."""
    base = a * (e_det_value + a * w2_initial_sq)
    if base < 0:
        raise ValueError("negative estimator parts")
    if base == 0.0:
        return -math.inf
    exponent = s * a**3 * b * (lip + 1.0)
    return math.log10(base) + exponent / math.log(10.0)


def total_bound(e_det_value, w2_initial_sq, a, b, lip, s):
    """The bound as a float; overflows to inf when it exceeds float range."""
    log10_bound = total_bound_log10(e_det_value, w2_initial_sq, a, b, lip, s)
    if log10_bound == -math.inf:
        return 0.0
    if log10_bound > 308.0:
        return math.inf
    return 10.0**log10_bound


def format_log10(log10_value):
    """Exact scientific-notation string for a quantity given as log10."""
    if log10_value == -math.inf:
        return format(0.0, ".14e")
    if log10_value == math.inf:
        return "inf"
    exp = int(math.floor(log10_value))
    mantissa = 10.0 ** (log10_value - exp)
    if mantissa >= 10.0:  # rounding at the decade boundary
        mantissa /= 10.0
        exp += 1
    return f"{mantissa:.14f}e{exp:+03d}"


# ---------------------------------------------------------------------------
# the assembled report
# ---------------------------------------------------------------------------

CSV_COLUMNS = (
    "h", "error", "residual", "errorsample", "errorreconst",
    "A", "B", "L", "total_bound", "seed", "error_full",
)


@dataclass
class EstimatorReport:
    """All estimator terms of one run plus the measured reference error."""

    s: float
    sweep_value: float            # h for spatial studies, K for stochastic ones
    e_det: float
    e0_det: float
    e0_stoch: float
    w2_initial_sq: float
    a_const: float
    b_const: float
    lipschitz: float
    total_bound_log10: float
    error_density_sq: float
    error_full_sq: float
    pairing_tight: bool
    n_cells: int
    samples: int
    reference_samples: int
    seed: int
    degree: int
    extras: dict = field(default_factory=dict)

    @property
    def total_bound(self):
        if self.total_bound_log10 == -math.inf:
            return 0.0
        return math.inf if self.total_bound_log10 > 308.0 else 10.0**self.total_bound_log10

    @property
    def reliable(self):
        """Measured squared error within the certified bound (log-space)."""
        err = max(self.error_density_sq, 0.0)
        if err == 0.0:
            return True
        return math.log10(err) <= self.total_bound_log10

    def csv_row(self):
        num = lambda v: format(v, ".14e")
        return ",".join([
            num(self.sweep_value),
            num(self.error_density_sq),
            num(self.e_det),
            num(self.e0_stoch),
            num(self.e0_det),
            num(self.a_const),
            num(self.b_const),
            num(self.lipschitz),
            format_log10(self.total_bound_log10),
            str(self.seed),
            num(self.error_full_sq),
        ])


def build_report(ensemble_result, reference_initial, reference_final, *, seed,
                 sweep_value=None, constants_margin=0.05):
    """Evaluate every estimator term for a completed ensemble run."""
    from . import ensemble as ens
    from .transport import wasserstein2

    cfg = ensemble_result.config
    mesh = ensemble_result.mesh
    s = cfg.t_final
    weights = ensemble_result.weights

    part_e_det = e_det(ensemble_result.residual_sqs, weights)

    sample_atoms = ens.initial_atoms(ensemble_result.samples)
    sample_measure = ens.EmpiricalMeasure(sample_atoms, weights, mesh=mesh)
    recon_initial = ensemble_result.regularized_measure("initial")
    split = initial_split(sample_measure, recon_initial, reference_initial, mesh)

    lo, hi = ensemble_result.state_bounds()
    box = StateBox.from_bounds(lo, hi, margin=constants_margin)
    a, b = estimate_constants(box, ensemble_result.system)

    lip = ensemble_result.lipschitz
    log_bound = total_bound_log10(part_e_det, split.w2_initial_sq_bound, a, b, lip, s)

    regularized = ensemble_result.regularized_measure("final")
    err_density = wasserstein2(regularized.marginal(0), reference_final.marginal(0), mesh=mesh) ** 2
    err_full = wasserstein2(regularized, reference_final, mesh=mesh) ** 2

    return EstimatorReport(
        s=s,
        sweep_value=float(sweep_value if sweep_value is not None else mesh.h_min),
        e_det=part_e_det,
        e0_det=split.e0_det,
        e0_stoch=split.e0_stoch,
        w2_initial_sq=split.w2_initial_sq_bound,
        a_const=a,
        b_const=b,
        lipschitz=lip,
        total_bound_log10=log_bound,
        error_density_sq=err_density,
        error_full_sq=err_full,
        pairing_tight=split.pairing_tight,
        n_cells=mesh.n_cells,
        samples=ensemble_result.samples.size,
        reference_samples=reference_final.size,
        seed=seed,
        degree=cfg.degree,
    )
