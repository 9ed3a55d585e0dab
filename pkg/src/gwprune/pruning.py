"""The Horton pruning operator on offspring distributions.

Pruning a Galton-Watson tree and conditioning on survival maps the offspring
law Q to

    Q1(z) = z + (Q(q0 + (1-q0) z) - q0 - (1-q0) z) / ((1-q0)(1 - Q'(q0))),

again a Galton-Watson law with q_1 = 0.  Composing k such steps keeps this
affine structure: the k-times-pruned law is the base law precomposed with
z -> 1 - w_k (1 - z), where w_k is exactly the survival tail 1 - sigma_k of
the order distribution.  :func:`iterate_pruning` exploits this to follow
trajectories without any coefficient truncation; materialized coefficient
representations are produced on demand.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq
from scipy.special import gammainc, gammaln

from .distributions import (
    ExplicitFinite,
    ExplicitWithTail,
    InvariantGW,
    OffspringDistribution,
    OscillatorySum,
)
from .errors import NumericalError, StructuralError, TruncationError

__all__ = [
    "DEFAULT_GRID",
    "PrunedLaw",
    "PruningTrajectory",
    "invariance_residual",
    "iterate_pruning",
    "oscillatory_criticality_gap",
    "oscillatory_invariant",
    "oscillatory_L",
    "prune_distribution",
    "pruned_coefficients",
]

# z in {0, 0.05, ..., 0.95} plus 0.99; the last point watches the region
# where the attractor dynamics concentrate
DEFAULT_GRID = np.array([0.05 * i for i in range(20)] + [0.99])


class PrunedLaw(OffspringDistribution):
    """The base law pruned k >= 1 times, represented exactly.

    ``scale`` is the accumulated product of (1 - q0^(i)) over the performed
    steps, which equals the order-distribution tail 1 - sigma_k of the base
    law.  All evaluations delegate to the base law's complement routines, so
    no precision is lost however deep the trajectory goes.
    """

    kind = "pruned_view"

    def __init__(self, base, scale):
        if not 0.0 < scale <= 1.0:
            raise ValueError("scale must lie in (0, 1]")
        self.base = base
        self.scale = float(scale)
        self._norm = float(scale * base.dq_comp(scale))

    @property
    def q0(self):
        return float(self.qmz_comp(1.0))

    def mean(self):
        return 1.0 - (1.0 - self.base.mean()) / float(self.base.dq_comp(self.scale))

    def qmz_comp(self, w):
        return self.base.qmz_comp(self.scale * np.asarray(w)) / self._norm

    def dq_comp(self, w):
        return self.scale * self.base.dq_comp(self.scale * np.asarray(w)) / self._norm

    def q2_comp(self, w):
        return self.scale**2 * self.base.q2_comp(self.scale * np.asarray(w)) / self._norm

    def pmf_upto(self, n):
        return _fft_coefficients(self, n)

    def to_dict(self):
        return {"kind": self.kind, "base": self.base.to_dict(), "scale": self.scale}

    def __repr__(self):
        return f"PrunedLaw(base={self.base!r}, scale={self.scale:.3e})"


def invariance_residual(dist, z_grid=None):
    """sup over the grid of |Q(z) - z - (Q(q0+(1-q0)z) - q0 - (1-q0)z) / M|
    with M = (1-q0)(1 - Q'(q0)); zero exactly for prune-invariant laws.

    Both sides are evaluated through the cancellation-safe gap routine, so
    the 0.99 grid point is meaningful.
    """
    grid = DEFAULT_GRID if z_grid is None else np.asarray(z_grid, dtype=float)
    q0 = dist.q0
    if q0 >= 1.0 - 1e-12:
        raise ValueError("residual undefined for the point mass q0 = 1")
    w = 1.0 - grid
    m = (1.0 - q0) * float(dist.dq_comp(1.0 - q0))
    lhs = np.asarray(dist.qmz_comp(w), dtype=float)
    rhs = np.asarray(dist.qmz_comp((1.0 - q0) * w), dtype=float) / m
    return float(np.max(np.abs(lhs - rhs)))


# ---------------------------------------------------------------------------
# materialization of pruned laws
# ---------------------------------------------------------------------------

def _fft_coefficients(law, cutoff, fft_points=None):
    """Power-series coefficients of Q(z) = z + qmz_comp(1 - z) by sampling on
    a circle of radius < 1.  Needs complex-capable qmz_comp."""
    n = fft_points or max(16 * (cutoff + 1), 1024)
    n = 1 << (n - 1).bit_length()
    r = float(np.exp(np.log(1e-3) / max(cutoff, 1)))  # r^-cutoff = 1e3
    theta = 2.0 * np.pi * np.arange(n) / n
    z = r * np.exp(1j * theta)
    qz = z + np.asarray(law.qmz_comp(1.0 - z))
    coefs = np.fft.fft(qz)[: cutoff + 1].real / n
    coefs /= r ** np.arange(cutoff + 1)
    return coefs


def _materialize(law, mean, cutoff):
    """ExplicitWithTail snapshot of an abstract law via FFT extraction."""
    coefs = _fft_coefficients(law, cutoff)
    budget = 64.0 * np.finfo(float).eps * 1e3  # roundoff amplified by r^-cutoff
    coefs[1] = 0.0
    coefs = np.where(np.abs(coefs) < budget, 0.0, coefs)
    if coefs.min() < -1e-9:
        raise NumericalError("materialization produced a negative coefficient")
    coefs = np.maximum(coefs, 0.0)
    ks = np.arange(cutoff + 1)
    tail_mass = max(1.0 - float(coefs.sum()), 0.0) + budget
    tail_fm = max(mean - float((ks * coefs).sum()), 0.0) + budget
    return ExplicitWithTail(coefs, tail_mass, tail_fm, mean=mean)


def pruned_coefficients(dist, count):
    """First ``count``+1 coefficients of the once-pruned law, computed from
    the generating-function identity without any IGW short-circuit."""
    view = PrunedLaw(dist, 1.0 - dist.q0)
    return _fft_coefficients(view, count)


def _binomial_prune(dist, cutoff=None):
    """Exact pushforward for coefficient-backed laws: each vertex keeps m of
    its k offspring with the thinning weight C(k,m) q0^(k-m) (1-q0)^m, and the
    surviving process is renormalized by 1 - Q'(q0) for series reduction."""
    q = dist.q
    q0 = float(q[0])
    top = len(q) - 1
    out_top = top if cutoff is None else min(cutoff, top)
    tail_mass_in = getattr(dist, "tail_mass", 0.0)
    dqq0 = float(dist.dq_comp(1.0 - q0))  # 1 - Q'(q0)
    new = np.zeros(out_top + 1)
    for m in range(out_top + 1):
        if m == 1:
            continue
        # negative-binomial thinning weights concentrate near k = m/(1-q0);
        # beyond the window they are below e^-300
        k_hi = min(top, int((m + 40.0 * math.sqrt(m + 4.0)) / (1.0 - q0)) + 200)
        k = np.arange(max(m, 2), k_hi + 1)
        if len(k) == 0:
            continue
        logw = (gammaln(k + 1.0) - gammaln(m + 1.0) - gammaln(k - m + 1.0)
                + (k - m) * math.log(q0))
        with np.errstate(under="ignore"):
            w = np.exp(logw)
        new[m] = (1.0 - q0) ** (m - 1) * float(np.dot(w, q[k])) / dqq0
    # unseen input tail spreads across the outputs by at most this much
    slack = tail_mass_in / ((1.0 - q0) * dqq0)
    if isinstance(dist, ExplicitFinite):
        total = new.sum()
        if abs(total - 1.0) > 1e-9:
            raise NumericalError(f"pruned law mass {total!r} != 1")
        new = np.maximum(new, 0.0)
        return ExplicitFinite(new / new.sum())
    mean1 = 1.0 - (1.0 - dist.mean()) / dqq0
    tail_mass = max(1.0 - new.sum(), 0.0) + slack
    tail_fm = max(mean1 - float(np.dot(np.arange(out_top + 1), new)), 0.0) + slack
    return ExplicitWithTail(new, tail_mass, tail_fm, mean=mean1)


def prune_distribution(dist, cutoff=512):
    """The law of the pruned tree conditioned on survival.

    Invariant-family inputs short-circuit to the same object (after checking
    the invariance residual); bounded-support laws are pushed forward exactly
    and stay bounded; other kinds are materialized to ``cutoff`` coefficients
    with certified tail bounds.
    """
    q0 = dist.q0
    if q0 >= 1.0 - 1e-12:
        raise ValueError("pruning the point mass q0 = 1 is undefined "
                         "(conditioning on survival fails)")
    if isinstance(dist, InvariantGW):
        res = invariance_residual(dist)
        if res > 1e-10:
            raise NumericalError(f"invariant law has residual {res!r}")
        return dist
    if isinstance(dist, (ExplicitFinite, ExplicitWithTail)):
        return _binomial_prune(dist, cutoff=None if isinstance(dist, ExplicitFinite) else cutoff)
    view = PrunedLaw(dist, 1.0 - q0)
    return _materialize(view, view.mean(), cutoff)


# ---------------------------------------------------------------------------
# iterated pruning
# ---------------------------------------------------------------------------

CONVERGED_TO_IGW = "converged-to-igw"
CONVERGED_TO_POINT_MASS = "converged-to-point-mass"
BUDGET_EXHAUSTED = "budget-exhausted"


@dataclass
class PruningTrajectory:
    """Trajectory of a law under iterated pruning-and-conditioning.

    ``steps[k]`` is the k-times-pruned law (step 0 is the input), ``q0_path``
    its extinction probabilities, and ``grid_sup_distance_to_igw[k]`` the sup
    over the z-grid of |Q_k(z) - Q_igw(z)| against the invariant law with the
    same q0.  ``target_q`` is set when the trajectory converged to an
    invariant law.
    """

    steps: list
    q0_path: np.ndarray
    mean_path: np.ndarray
    grid_sup_distance_to_igw: np.ndarray
    status: str
    target_q: float | None = None
    diagnostics: dict = field(default_factory=dict)

    @property
    def n_steps(self):
        return len(self.q0_path)

    def to_csv(self, path):
        with open(path, "w") as fh:
            fh.write("step,q0,mean,sup_distance,status\n")
            for k in range(self.n_steps):
                fh.write(f"{k},{float(self.q0_path[k])!r},"
                         f"{float(self.mean_path[k])!r},"
                         f"{float(self.grid_sup_distance_to_igw[k])!r},"
                         f"{self.status}\n")

    def step_law_dict(self, k, cutoff=256):
        """JSON-able dump of step k's law, materializing views if needed."""
        law = self.steps[k]
        if isinstance(law, PrunedLaw):
            law = _materialize(law, law.mean(), cutoff)
        return law.to_dict()


def iterate_pruning(dist, max_steps, tolerance, z_grid=None):
    """Iterate the pruning operator, watching for the invariant attractors.

    Convergence to an invariant law is declared when the extinction
    probability stabilizes (|delta q0| < tolerance) and the sup distance on
    the grid to the invariant law with that q0 drops below tolerance;
    convergence to the point mass when q0 exceeds 1 - tolerance.  Criticality
    is preserved exactly along the trajectory by construction; for
    subcritical starts the mean decreases strictly.
    """
    grid = DEFAULT_GRID if z_grid is None else np.asarray(z_grid, dtype=float)
    wg = 1.0 - grid
    mu = dist.mean()
    steps = []
    q_path, m_path, d_path = [], [], []
    status = BUDGET_EXHAUSTED
    target = None
    w = 1.0
    q_prev = None
    for k in range(max_steps + 1):
        law = dist if k == 0 else PrunedLaw(dist, w)
        q0k = law.q0
        mean_k = mu if k == 0 else law.mean()
        qhat = min(max(q0k, 1e-12), 1.0 - 1e-15)
        gaps = np.asarray(law.qmz_comp(wg), dtype=float)
        d = float(np.max(np.abs(gaps - qhat * wg ** (1.0 / qhat))))
        steps.append(law)
        q_path.append(q0k)
        m_path.append(mean_k)
        d_path.append(d)
        if q0k > 1.0 - tolerance:
            status = CONVERGED_TO_POINT_MASS
            break
        if d < tolerance and (q_prev is None or abs(q0k - q_prev) < tolerance):
            status = CONVERGED_TO_IGW
            target = q0k
            break
        q_prev = q0k
        # advance the survival tail: w_{k+1} = w_k (1 - q0_k)
        gap = float(dist.dq_comp(w))
        step = float(dist.qmz_comp(w)) / gap if gap > 0 else 0.0
        if not 0.0 < step < w or w - step <= 1e-280:
            status = BUDGET_EXHAUSTED
            break
        w -= step
    return PruningTrajectory(
        steps=steps,
        q0_path=np.array(q_path),
        mean_path=np.array(m_path),
        grid_sup_distance_to_igw=np.array(d_path),
        status=status,
        target_q=target,
    )


# ---------------------------------------------------------------------------
# the oscillatory prune-invariant counterexample
# ---------------------------------------------------------------------------

def _constraint_gap(y, rho):
    """f(y) = 1 - rho y - (1 + y - rho y) e^(-y), computed without the small-y
    cancellation: f(y) = sum_{j>=2} (-1)^j y^j [(j-1)/j! - rho/(j-1)!]."""
    y = np.asarray(y, dtype=float)
    out = np.empty_like(y)
    small = y < 0.1
    if small.any():
        ys = y[small]
        acc = np.zeros_like(ys)
        pj = ys * ys
        fj, fj1 = 2.0, 1.0  # j!, (j-1)!
        for j in range(2, 16):
            acc += (1 if j % 2 == 0 else -1) * pj * ((j - 1) / fj - rho / fj1)
            pj = pj * ys
            fj1 = fj
            fj *= j + 1
        out[small] = acc
    big = ~small
    if big.any():
        yb = y[big]
        with np.errstate(under="ignore"):
            out[big] = 1.0 - rho * yb - (1.0 + yb - rho * yb) * np.exp(-yb)
    return out


def _scaled_constraint(rho, span):
    """Return F_scaled(B) with the same zeros as
    F(B) = sum_n B^n f(rho^n), evaluated through a log-magnitude shift so no
    lattice term overflows."""
    n = np.arange(-span, span + 1, dtype=float)
    logy = n * math.log(rho)
    sign = np.empty_like(n)
    logf = np.empty_like(n)
    huge = logy > 230.0  # f(y) ~ -rho * y there
    sign[huge] = -1.0
    logf[huge] = math.log(rho) + logy[huge]
    rest = ~huge
    f = _constraint_gap(np.exp(logy[rest]), rho)
    sign[rest] = np.sign(f)
    with np.errstate(divide="ignore"):
        logf[rest] = np.where(f != 0.0, np.log(np.abs(f)), -np.inf)

    def fs(b):
        logs = n * math.log(b) + logf
        top = logs.max()
        return float(np.dot(sign, np.exp(logs - top)))

    return fs


def oscillatory_invariant(q0, n_range=None, m_max=400):
    """Construct the prune-invariant law with oscillating tail at a given q0.

    Solves the normalization constraint for B inside ((1-q0)^-1, (1-q0)^-2),
    computes A, and returns the lattice law.  The lattice truncation is sized
    so both geometric tails (ratios B rho^2 to the right, 1/(B rho) to the
    left) fall below 1e-16 relative; ``m_max`` merely pre-checks that the
    coefficient table is computable to the requested length.
    """
    q0 = float(q0)
    if not 0.5 < q0 < 1.0:
        raise ValueError("oscillatory laws need q0 strictly inside (1/2, 1)")
    rho = 1.0 - q0
    b_guess = rho ** (-1.0 / q0)
    span = int(max(
        60.0 / -math.log10(b_guess * rho * rho),
        60.0 / math.log10(b_guess * rho),
        40.0,
    )) + 20
    fs = _scaled_constraint(rho, span)
    lo = (1.0 / rho) * (1.0 + 1e-6)
    hi = (1.0 / rho**2) * (1.0 - 1e-6)
    grid = np.linspace(lo, hi, 97)
    vals = [fs(b) for b in grid]
    crossings = [i for i in range(96) if vals[i] * vals[i + 1] < 0]
    if not crossings:
        raise TruncationError(
            "no sign change for B on the admissible bracket; enlarge n_range")
    if len(crossings) > 1:
        raise StructuralError(
            f"multiple candidate B roots detected near "
            f"{[float(grid[i]) for i in crossings]}; expected a unique zero")
    i0 = crossings[0]
    B = float(brentq(fs, grid[i0], grid[i0 + 1], xtol=1e-13, rtol=8.9e-16,
                     maxiter=200))
    # A = sum_n (B rho)^n (1 - e^(-rho^n)), summed in log space
    n = np.arange(-span, span + 1, dtype=float)
    with np.errstate(divide="ignore", under="ignore", over="ignore"):
        y = np.exp(n * math.log(rho))
        la = n * math.log(B * rho) + np.log(-np.expm1(-y))
    top = la.max()
    A = float(np.exp(top) * np.exp(la - top).sum())
    if n_range is None:
        n_range = int(max(
            38.0 / -math.log(B * rho * rho),
            38.0 / math.log(B * rho),
            40.0,
        )) + 10
    if m_max > 100_000:
        raise ValueError("m_max too large")
    law = OscillatorySum(q0, A, B, n_range=n_range)
    gap = oscillatory_criticality_gap(law)
    if abs(gap) > 1e-10:
        raise NumericalError(f"criticality gap {gap!r} exceeds 1e-10")
    return law


def oscillatory_criticality_gap(law, cutoff=300):
    """|sum_m m q_m - 1| with the tail beyond ``cutoff`` summed through the
    Poisson tail identity sum_{m>M} m q_m = (1/A) sum_n (B rho)^n P(M, rho^n);
    an independent check that the constructed law is critical."""
    pm = law.pmf_upto(cutoff)
    partial = float(np.dot(np.arange(cutoff + 1), pm))
    n = law._n
    lbr = n * (math.log(law.B) + math.log(law.rho))
    with np.errstate(under="ignore"):
        tails = gammainc(cutoff, law._rpow)
        mask = tails > 0
        tail = float(np.sum(np.exp(lbr[mask] + np.log(tails[mask])))) / law.A
    return partial + tail - 1.0


def oscillatory_L(law):
    """The tail-scaling exponent two ways: from the defining identity
    L = 1 - ln(1 - Q'(q0))/ln(1-q0) and from the lattice base,
    L = 2 + ln B / ln(1-q0)."""
    lr = math.log(law.rho)
    via_q = 1.0 - math.log(float(law.dq_comp(law.rho))) / lr
    via_b = 2.0 + math.log(law.B) / lr
    return via_q, via_b
