"""Ground-state solvers for the planar, single-plane and two-plane problems.

The minimization runs a linearly preconditioned projected descent on the
mass sphere.  The preconditioner is the positive-definite linear part of
the energy Hessian — radial stiffness + lam * mass diagonal + the 2x2
charge block — assembled sparse and LU-factored once per solve, which
makes the iteration count essentially independent of the mesh grading.
Steps are safeguarded by Armijo backtracking on the true energy, and the
iterate is retracted to the constraint set after every step (charge
clamp at zero, then a joint rescale of profiles and charges).

Convergence is declared on the W-metric projected-gradient norm, scaled
by max(1, |omega_hat| * sqrt(mu)) so that deep, tightly bound states are
held to the same *relative* stationarity as shallow ones.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from ._kernels import plane_energy, plane_energy_grad
from .energy import (
    ChargedField,
    HybridParams,
    HybridState,
    _state_pieces,
    boundary_residual,
    el_residual,
    mass,
    plane_data,
    total_field,
)
from .grid import RadialField, RadialGrid, make_grid
from .specfun import lambda_for_theta

__all__ = [
    "SolverConfig",
    "GroundStateReport",
    "solve_planar",
    "solve_single",
    "solve_hybrid",
    "extract_omega",
    "omega_star",
    "omega_star_grid",
    "refine_config",
]

#: factor between the decomposition rate and the linear threshold; any
#: value > 1 keeps the preconditioner positive definite, e gives a
#: comfortable margin without outrunning the grid resolution.
_RATE_MARGIN = math.e

#: smallest cell target: this many lengths 1/sqrt(lam) per first cell
_FIRST_CELL_FACTOR = 0.05

_ARMIJO = 1e-4
_STEP_GROW = 1.3
_STEP_MAX = 10.0
_STEP_FLOOR = 1e-14
_STALL_LIMIT = 50


@dataclass(frozen=True)
class SolverConfig:
    """Discretization and descent parameters shared by all solvers."""

    R: float = 40.0
    N: int = 2048
    grading: float = 1.01
    step_size: float = 1.0
    max_iters: int = 50000
    grad_tol: float = 1e-6
    energy_tol: float = 1e-10
    starts: tuple[float, ...] = (0.1, 0.5, 0.9)
    seed: int = 0

    def __post_init__(self) -> None:
        if self.R <= 0.0:
            raise ValueError(f"R must be > 0, got {self.R}")
        if self.N < 64:
            raise ValueError(f"N must be at least 64, got {self.N}")
        if not 1.0 <= self.grading < 2.0:
            raise ValueError(f"grading must lie in [1, 2), got {self.grading}")
        if not (self.step_size > 0 and self.grad_tol > 0 and self.energy_tol > 0):
            raise ValueError("step_size and tolerances must be positive")
        if self.max_iters < 1:
            raise ValueError("max_iters must be at least 1")
        if len(self.starts) == 0:
            raise ValueError("at least one start is required")
        if any(not (0.0 <= s <= 1.0) for s in self.starts):
            raise ValueError("every start must lie in [0, 1]")


@dataclass
class GroundStateReport:
    """Converged-state summary returned by the solve_* entry points."""

    energy: float
    mass1: float
    mass2: float
    q1: float
    q2: float
    omega: float
    el_residual: float
    boundary_residuals: tuple[float, float]
    iterations: int
    converged: bool
    profile_samples: dict[str, list[float]]
    #: endpoint branches when the uncoupled problem ties (both one-sided
    #: configurations reach the same energy); None otherwise
    branches: tuple["GroundStateReport", "GroundStateReport"] | None = None
    #: full discrete state (not serialized)
    state: HybridState | None = None

    def as_dict(self) -> dict:
        d = {
            "energy": self.energy,
            "mass1": self.mass1,
            "mass2": self.mass2,
            "q1": self.q1,
            "q2": self.q2,
            "omega": self.omega,
            "el_residual": self.el_residual,
            "boundary_residuals": list(self.boundary_residuals),
            "iterations": self.iterations,
            "converged": self.converged,
            "profile_samples": self.profile_samples,
        }
        if self.branches is not None:
            d["branches"] = [b.as_dict() for b in self.branches]
        return d


def omega_star(P: HybridParams) -> float:
    """Linear coupling threshold: largest rate solving the secular equation.

    The 2x2 charge matrix [[s1+t, -b], [-b, s2+t]] becomes singular on the
    branch t = -(s1+s2)/2 + sqrt(((s1-s2)/2)^2 + b^2); the corresponding
    rate is the negative of the linear ground-state level.  For beta = 0
    this reduces to max_i 4 exp(-4 pi sigma_i - 2 gamma).
    """
    half_sum = 0.5 * (P.sigma1 + P.sigma2)
    half_diff = 0.5 * (P.sigma1 - P.sigma2)
    t_star = -half_sum + math.hypot(half_diff, P.beta)
    return lambda_for_theta(t_star)


def extract_omega(U: HybridState, P: HybridParams) -> float:
    """Lagrange multiplier recovered from the stationarity pairing.

    omega = (|u1|_p1^p1 + |u2|_p2^p2 - Q(U)) / mass(U).
    """
    q_total, m, pt1, pt2 = _state_pieces(U, P)
    if not m > 0.0:
        raise ValueError("extract_omega requires a state with positive mass")
    return (pt1 + pt2 - q_total) / m


def refine_config(cfg: SolverConfig) -> SolverConfig:
    """One mesh-refinement step that shrinks every cell.

    Doubling N alone does not refine the geometric zone (its local
    spacing is ~ (grading-1)*r independent of N), so the grading is
    pulled toward 1 at the same time.
    """
    return dataclasses.replace(cfg, N=2 * cfg.N, grading=0.5 * (1.0 + cfg.grading))


# ----------------------------------------------------------------------
# grid selection


def _first_cell(R: float, n: int, g: float) -> float:
    """First-cell width of make_grid(R, n, g), overflow-safe in g."""
    m = n // 2
    if g <= 1.0:
        return R / n
    log_gm = m * math.log(g)
    if log_gm > 600.0:
        log_span = log_gm + math.log(1.0 / (g - 1.0) + (n - m))
        return R * math.exp(-log_span)
    gm = g**m
    span = (gm - 1.0) / (g - 1.0) + (n - m) * gm
    return R / span


def _auto_grading(R: float, n: int, g_default: float, lam: float) -> float:
    """Increase the grading until the first cell resolves scale 1/sqrt(lam)."""
    target = _FIRST_CELL_FACTOR / math.sqrt(lam)
    if _first_cell(R, n, g_default) <= target:
        return g_default
    lo, hi = max(g_default, 1.0 + 1e-9), 1.2
    if _first_cell(R, n, hi) > target:
        raise ValueError(
            f"rate {lam:.3e} is too deep for an N={n} grid; increase N")
    for _ in range(100):
        mid = 0.5 * (lo + hi)
        if _first_cell(R, n, mid) > target:
            lo = mid
        else:
            hi = mid
    return hi


def _grid_for(lam: float, cfg: SolverConfig) -> RadialGrid:
    return make_grid(cfg.R, cfg.N, _auto_grading(cfg.R, cfg.N, cfg.grading, lam))


# ----------------------------------------------------------------------
# linear-part matrix (preconditioner and Rayleigh-oracle operator)


def _linear_matrix(
    grid: RadialGrid,
    lam: float,
    th: float,
    sigmas: tuple[float, ...] | None,
    beta: float = 0.0,
) -> sp.csc_matrix:
    """Matrix of the quadratic form  kinetic + lam*mass + charge block.

    Degrees of freedom are the interior profile nodes 1..N-1 (node 0 is
    the ghost tied to node 1, node N is pinned), plus one charge per
    plane when ``sigmas`` is given.  In decomposition coordinates the
    form has no profile-charge cross terms, so the matrix is block
    tridiagonal with a tiny charge block; it is positive definite
    whenever th > theta at the coupling threshold.
    """
    nin = grid.n_nodes - 2
    jj = np.arange(1, grid.n_nodes - 1)
    cu = grid.c_h1
    diag = lam * grid.w_trapz[jj] + cu[jj]
    diag[1:] += cu[jj[1:] - 1]
    off = -cu[jj[:-1]]

    charged = sigmas is not None
    nplanes = len(sigmas) if charged else 1
    stride = nin + (1 if charged else 0)
    dim = nplanes * stride

    rows: list[np.ndarray] = []
    cols: list[np.ndarray] = []
    vals: list[np.ndarray] = []
    for i in range(nplanes):
        base = i * stride
        idx = base + np.arange(nin)
        rows += [idx, idx[:-1], idx[1:]]
        cols += [idx, idx[1:], idx[:-1]]
        vals += [diag, off, off]
        if charged:
            qi = np.array([base + nin])
            rows.append(qi)
            cols.append(qi)
            vals.append(np.array([sigmas[i] + th]))
    if charged and nplanes == 2 and beta != 0.0:
        q0, q1 = nin, stride + nin
        rows.append(np.array([q0, q1]))
        cols.append(np.array([q1, q0]))
        vals.append(np.array([-beta, -beta]))

    return sp.csc_matrix(
        (np.concatenate(vals),
         (np.concatenate(rows).astype(np.intp),
          np.concatenate(cols).astype(np.intp))),
        shape=(dim, dim),
    )


def omega_star_grid(P: HybridParams, cfg: SolverConfig | None = None) -> float:
    """Grid Rayleigh-quotient value of the coupling threshold.

    Independently of the secular closed form, minimizes Q(U)/mass(U)
    over the discretized two-plane space by preconditioned projected
    descent and returns -Q(U)/mass(U) at the minimizer.  Because it
    shares every quadrature with the nonlinear solvers, the inequality
    omega > omega_star_grid holds for their converged ground states
    without discretization-bias caveats.
    """
    cfg = cfg if cfg is not None else SolverConfig()
    lam = max(_RATE_MARGIN * omega_star(P), (16.0 / cfg.R) ** 2)
    grid = _grid_for(lam, cfg)
    pd = plane_data(grid, lam)
    return _rayleigh_min(grid, lam, pd, (P.sigma1, P.sigma2), P.beta, cfg)


def _rayleigh_min(grid, lam, pd, sigmas, beta, cfg) -> float:
    """Minimize the quadratic form per unit mass over the grid.

    Same projected-descent scheme as the nonlinear engine, applied to
    the energy Q/2 (no nonlinear term); on the unit-mass sphere the
    value is bounded below by -lam/2, so the iteration cannot escape
    through the small quadrature inconsistency between the discrete
    cross terms and the analytic charge norm.
    """
    n = grid.n_nodes
    nin = n - 2
    jj = slice(1, n - 1)
    w = grid.w_trapz
    cu = grid.c_h1
    G, gl2, th = pd["G"], pd["gl2"], pd["theta"]
    winv = 1.0 / w[jj]
    Gin = G[jj]
    k = len(sigmas)
    stride = nin + 1
    mu = 1.0

    def make_lin(shift):
        A = _linear_matrix(grid, shift, th, sigmas, beta)
        return spla.splu(A).solve

    lin_solve = make_lin(lam)

    def q_of(phis_, qs_):
        tot = 0.0
        for sig, phi, q in zip(sigmas, phis_, qs_):
            d = np.diff(phi)
            kin = float(cu[1:] @ (d[1:] * d[1:]))
            mpg = float(w @ (phi * G))
            tot += (kin - 2.0 * lam * q * mpg - lam * q * q * gl2
                    + q * q * (sig + th))
        if k == 2:
            tot -= 2.0 * beta * qs_[0] * qs_[1]
        return tot

    def retract(phis_, qs_):
        out_p, out_q, mt = [], [], 0.0
        for phi, q in zip(phis_, qs_):
            phi = phi.copy()
            phi[0] = phi[1]
            phi[-1] = 0.0
            out_p.append(phi)
            out_q.append(q)
            mt += (float(w @ (phi * phi)) + 2.0 * q * float(w @ (phi * G))
                   + q * q * gl2)
        if not mt > 1e-300:
            return None
        c = math.sqrt(mu / mt)
        return [c * phi for phi in out_p], [c * q for q in out_q]

    planes = [(3.0, sig) for sig in sigmas]  # p unused by the linear form
    phis, qs = _initial_guess(grid, pd, planes, beta, mu, 0.5, True,
                              lam / _RATE_MARGIN)
    energy = 0.5 * q_of(phis, qs)
    step = 1.0
    since_factor = 0
    stall = 0

    for _ in range(cfg.max_iters):
        gvec = np.empty(k * stride)
        dmvec = np.empty(k * stride)
        gg = gm = mm = 0.0
        for i in range(k):
            base = i * stride
            phi, q = phis[i], qs[i]
            t = cu * np.diff(phi)
            t[0] = 0.0
            gphi = -lam * q * w * G
            gphi[1:] += t
            gphi[:-1] -= t
            gp = gphi[jj]
            mpg = float(w @ (phi * G))
            gq = (-lam * mpg - lam * q * gl2 + q * (sigmas[i] + th))
            if k == 2:
                gq -= beta * qs[1 - i]
            dmp = 2.0 * w[jj] * (phi[jj] + q * Gin)
            dmq = 2.0 * (mpg + q * gl2)
            gvec[base:base + nin] = gp
            dmvec[base:base + nin] = dmp
            gvec[base + nin] = gq
            dmvec[base + nin] = dmq
            gg += float((gp * gp) @ winv) + gq * gq
            gm += float((gp * dmp) @ winv) + gq * dmq
            mm += float((dmp * dmp) @ winv) + dmq * dmq

        pg_norm = math.sqrt(max(gg - gm * gm / mm, 0.0))
        rayleigh = 2.0 * energy / mu
        scale = max(1.0, abs(rayleigh))
        if pg_norm <= cfg.grad_tol * scale:
            break

        dvec = lin_solve(gvec)
        nvec = lin_solve(dmvec)
        denom = float(dmvec @ nvec)
        pvec = dvec - (float(dmvec @ dvec) / denom) * nvec
        slope = float(gvec @ pvec)
        if not (slope > 0.0 and np.isfinite(slope)):
            break

        s_try = min(step * _STEP_GROW, _STEP_MAX)
        accepted = False
        while s_try >= _STEP_FLOOR:
            trial_p = []
            trial_q = []
            for i in range(k):
                base = i * stride
                phi = phis[i].copy()
                phi[jj] = phi[jj] - s_try * pvec[base:base + nin]
                trial_p.append(phi)
                trial_q.append(qs[i] - s_try * pvec[base + nin])
            retr = retract(trial_p, trial_q)
            if retr is not None:
                e_try = 0.5 * q_of(*retr)
                if np.isfinite(e_try) and e_try <= energy - _ARMIJO * s_try * slope:
                    accepted = True
                    break
            s_try *= 0.5
        if not accepted:
            break
        drop = energy - e_try
        phis, qs = retr
        energy = e_try
        step = s_try
        stall = stall + 1 if drop <= cfg.energy_tol * max(1.0, abs(energy)) else 0
        if stall >= _STALL_LIMIT:
            break

    return -2.0 * energy / mu


# ----------------------------------------------------------------------
# descent engine


def _initial_guess(grid, pd, planes, beta, mu, start, charged, omega_ref):
    """Gaussian profiles with matched charges, rescaled to the sphere."""
    k = len(planes)
    w = grid.w_trapz
    width0 = 1.0
    if charged and omega_ref > 0.0:
        width0 = min(1.0, 2.5 / math.sqrt(omega_ref))
    if k == 1:
        widths = [width0 * (0.5 + start)]
        masses = [mu]
    else:
        s = min(max(start, 1e-3), 1.0 - 1e-3)
        widths = [width0, width0]
        masses = [s * mu, (1.0 - s) * mu]

    phis: list[np.ndarray] = []
    peaks: list[float] = []
    for width, mi in zip(widths, masses):
        prof = np.exp(-(grid.r**2) / (2.0 * width * width))
        prof[0] = prof[1]
        prof[-1] = 0.0
        amp = math.sqrt(mi / float(w @ (prof * prof)))
        phis.append(amp * prof)
        peaks.append(amp)

    qs = [0.0] * k
    if charged:
        th = pd["theta"]
        if k == 1:
            denom = planes[0][1] + th
            sol = [peaks[0] / denom if denom > 1e-12 else -1.0]
        else:
            m2 = np.array([[planes[0][1] + th, -beta],
                           [-beta, planes[1][1] + th]])
            try:
                sol = list(np.linalg.solve(m2, np.array(peaks)))
            except np.linalg.LinAlgError:
                sol = [-1.0, -1.0]
        qs = [qi if qi > 0.0 else 0.1 * math.sqrt(mi)
              for qi, mi in zip(sol, masses)]

    G, gl2 = pd["G"], pd["gl2"]
    mt = sum(float(w @ (phi * phi)) + 2.0 * q * float(w @ (phi * G)) + q * q * gl2
             for phi, q in zip(phis, qs))
    c = math.sqrt(mu / mt)
    return [c * phi for phi in phis], [c * q for q in qs]


def _descend(grid, lam, pd, planes, beta, mu, cfg, make_lin, charged, phis, qs):
    """Preconditioned projected descent from one start; returns a run dict.

    ``make_lin(shift)`` factors the linear-part matrix with the given
    mass shift and returns its solve.  The shift tracks the running
    multiplier estimate so the metric stays matched to the Hessian even
    when the final omega sits far from the decomposition rate (the
    chargeless planar problem being the extreme case).
    """
    n = grid.n_nodes
    nin = n - 2
    jj = slice(1, n - 1)
    w = grid.w_trapz
    cu = grid.c_h1
    G, gl2 = pd["G"], pd["gl2"]
    w_in, lagw, g0, area0 = pd["w_in"], pd["lagw"], pd["g0"], pd["area0"]
    th = pd["theta"]
    winv = 1.0 / w[jj]
    Gin = G[jj]
    stride = nin + (1 if charged else 0)
    k = len(planes)

    shift = lam
    lin_solve = make_lin(shift)
    since_factor = 0

    def energy_of(phis_, qs_):
        tot = 0.0
        pieces = []
        for (p, sig), phi, q in zip(planes, phis_, qs_):
            e, m, kin, mpp, mpg, pt = plane_energy(
                phi, q, G, p, lam, sig + th, gl2, w, w_in, cu, lagw, g0, area0)
            tot += e
            pieces.append((e, pt))
        if k == 2:
            tot -= beta * qs_[0] * qs_[1]
        return tot, pieces

    def retract(phis_, qs_):
        out_p, out_q, mt = [], [], 0.0
        for phi, q in zip(phis_, qs_):
            phi = phi.copy()
            phi[0] = phi[1]
            phi[-1] = 0.0
            q = max(q, 0.0) if charged else 0.0
            out_p.append(phi)
            out_q.append(q)
            mt += (float(w @ (phi * phi)) + 2.0 * q * float(w @ (phi * G))
                   + q * q * gl2)
        if not mt > 1e-300:
            return None
        c = math.sqrt(mu / mt)
        return [c * phi for phi in out_p], [c * q for q in out_q]

    energy, pieces = energy_of(phis, qs)
    gphis = [np.empty(n) for _ in range(k)]
    step = cfg.step_size
    stall = 0
    iterations = 0
    converged = False
    pg_norm = math.inf

    for iterations in range(1, cfg.max_iters + 1):
        gqs = []
        dmqs = []
        q_tot = -2.0 * beta * qs[0] * qs[1] if k == 2 else 0.0
        pt_sum = 0.0
        for i, (p, sig) in enumerate(planes):
            res = plane_energy_grad(
                phis[i], qs[i], G, p, lam, sig + th, gl2, w, w_in, cu,
                lagw, g0, area0, gphis[i])
            e_i, pt_i, gq_i, dmq_i = res[0], res[5], res[6], res[7]
            q_tot += 2.0 * (e_i + pt_i / p)
            pt_sum += pt_i
            if charged and k == 2:
                gq_i -= beta * qs[1 - i]
            gqs.append(gq_i if charged else 0.0)
            dmqs.append(dmq_i if charged else 0.0)

        # flat euclidean gradient / mass-gradient covectors
        gvec = np.empty(k * stride)
        dmvec = np.empty(k * stride)
        gg = gm = mm = 0.0
        for i in range(k):
            base = i * stride
            gp = gphis[i][jj]
            dmp = 2.0 * w[jj] * (phis[i][jj] + qs[i] * Gin)
            gvec[base:base + nin] = gp
            dmvec[base:base + nin] = dmp
            gg += float((gp * gp) @ winv)
            gm += float((gp * dmp) @ winv)
            mm += float((dmp * dmp) @ winv)
            if charged:
                gvec[base + nin] = gqs[i]
                dmvec[base + nin] = dmqs[i]
                gg += gqs[i] * gqs[i]
                gm += gqs[i] * dmqs[i]
                mm += dmqs[i] * dmqs[i]

        pg_norm = math.sqrt(max(gg - gm * gm / mm, 0.0)) if mm > 0 else math.sqrt(gg)
        omega_hat = (pt_sum - q_tot) / mu
        scale = max(1.0, abs(omega_hat) * math.sqrt(mu))
        if pg_norm <= cfg.grad_tol * scale:
            converged = True
            break

        since_factor += 1
        target = abs(omega_hat)
        if (since_factor >= 10 and math.isfinite(target)
                and not (shift / 3.0 <= target <= shift * 3.0)):
            shift = max(target, 1e-10)
            lin_solve = make_lin(shift)
            since_factor = 0

        dvec = lin_solve(gvec)
        nvec = lin_solve(dmvec)
        denom = float(dmvec @ nvec)
        if denom > 0.0 and np.isfinite(denom):
            pvec = dvec - (float(dmvec @ dvec) / denom) * nvec
            slope = float(gvec @ pvec)
        else:
            slope = -1.0
        if not (slope > 0.0 and np.isfinite(slope)):
            # degenerate preconditioned direction: euclidean fallback
            mm_e = float(dmvec @ dmvec)
            pvec = gvec - (float(dmvec @ gvec) / mm_e) * dmvec
            slope = float(gvec @ pvec)
            if not (slope > 0.0 and np.isfinite(slope)):
                break

        s_try = min(step * _STEP_GROW, _STEP_MAX)
        accepted = False
        while s_try >= _STEP_FLOOR:
            trial_p = []
            trial_q = []
            for i in range(k):
                base = i * stride
                phi = phis[i].copy()
                phi[jj] = phi[jj] - s_try * pvec[base:base + nin]
                trial_p.append(phi)
                trial_q.append(qs[i] - s_try * pvec[base + nin]
                               if charged else 0.0)
            retr = retract(trial_p, trial_q)
            if retr is not None:
                e_try, pieces_try = energy_of(*retr)
                if np.isfinite(e_try) and e_try <= energy - _ARMIJO * s_try * slope:
                    accepted = True
                    break
            s_try *= 0.5
        if not accepted:
            break

        drop = energy - e_try
        phis, qs = retr
        energy = e_try
        pieces = pieces_try
        step = s_try
        stall = stall + 1 if drop <= cfg.energy_tol * max(1.0, abs(energy)) else 0
        if stall >= _STALL_LIMIT:
            break

    return {
        "phis": phis,
        "qs": qs,
        "energy": energy,
        "iterations": iterations,
        "converged": converged,
        "grad_norm": pg_norm,
    }


def _pick(runs: list[dict]) -> dict:
    pool = [r for r in runs if r["converged"]] or runs
    return min(pool, key=lambda r: r["energy"])


def _solve_on_grid(grid, lam, pd, planes, beta, mu, cfg, charged):
    sigmas = tuple(sig for _, sig in planes) if charged else None

    def make_lin(shift):
        A = _linear_matrix(grid, shift, pd["theta"], sigmas, beta)
        return spla.splu(A).solve

    omega_ref = lam / _RATE_MARGIN
    runs = []
    for s in cfg.starts:
        phis, qs = _initial_guess(grid, pd, planes, beta, mu, s, charged,
                                  omega_ref)
        runs.append(_descend(grid, lam, pd, planes, beta, mu, cfg, make_lin,
                             charged, phis, qs))
    return _pick(runs)


# ----------------------------------------------------------------------
# report assembly and public entry points


def _sample_profiles(grid, u1, u2) -> dict[str, list[float]]:
    # interior nodes only: node 0 is the (possibly singular) origin and
    # the last node is pinned to zero by the box truncation
    n = grid.n_nodes
    idx = np.unique(np.geomspace(1, n - 2, 64).astype(int))
    t1 = total_field(u1).values
    t2 = total_field(u2).values
    return {
        "r": [float(x) for x in grid.r[idx]],
        "u1": [float(x) for x in t1[idx]],
        "u2": [float(x) for x in t2[idx]],
    }


def _build_report(U, P, energy, iterations, converged, *, vertex=True):
    m1, m2 = mass(U.u1), mass(U.u2)
    total = m1 + m2
    if abs(total - P.mu) > 1e-10 * P.mu:
        raise RuntimeError(
            f"mass constraint violated in final state: {total!r} vs {P.mu!r}")
    omega = extract_omega(U, P)
    bres = boundary_residual(U, P) if vertex else (0.0, 0.0)
    return GroundStateReport(
        energy=energy,
        mass1=m1,
        mass2=m2,
        q1=U.u1.q,
        q2=U.u2.q,
        omega=omega,
        el_residual=el_residual(U, P, omega),
        boundary_residuals=bres,
        iterations=iterations,
        converged=converged,
        profile_samples=_sample_profiles(U.u1.grid, U.u1, U.u2),
        state=U,
    )


def _zero_plane(grid, lam) -> ChargedField:
    return ChargedField(RadialField(grid, np.zeros(grid.n_nodes)), 0.0, lam)


def _one_sided_state(grid, lam, run, plane_index) -> HybridState:
    filled = ChargedField(RadialField(grid, run["phis"][0]), run["qs"][0], lam)
    empty = _zero_plane(grid, lam)
    return HybridState(filled, empty) if plane_index == 0 else HybridState(empty, filled)


def solve_planar(p: float, mu: float, cfg: SolverConfig | None = None) -> GroundStateReport:
    """Ground state of the plain planar NLS energy at mass mu (no charge).

    The charge stays frozen at zero; boundary_residuals is reported as
    (0, 0) because no vertex condition applies.
    """
    cfg = cfg if cfg is not None else SolverConfig()
    P = HybridParams(p, p, 0.0, 0.0, 0.0, mu)
    lam = 1.0
    grid = _grid_for(lam, cfg)
    pd = plane_data(grid, lam)
    run = _solve_on_grid(grid, lam, pd, [(p, 0.0)], 0.0, mu, cfg, charged=False)
    U = HybridState(
        ChargedField(RadialField(grid, run["phis"][0]), 0.0, lam),
        _zero_plane(grid, lam))
    return _build_report(U, P, run["energy"], run["iterations"],
                         run["converged"], vertex=False)


def solve_single(p: float, sigma: float, mu: float,
                 cfg: SolverConfig | None = None) -> GroundStateReport:
    """Ground state of one plane with its point charge at mass mu."""
    cfg = cfg if cfg is not None else SolverConfig()
    if not math.isfinite(sigma):
        raise ValueError("sigma must be finite")
    P = HybridParams(p, p, sigma, 0.0, 0.0, mu)
    lam = max(_RATE_MARGIN * lambda_for_theta(-sigma), (16.0 / cfg.R) ** 2)
    grid = _grid_for(lam, cfg)
    pd = plane_data(grid, lam)
    run = _solve_on_grid(grid, lam, pd, [(p, sigma)], 0.0, mu, cfg, charged=True)
    U = _one_sided_state(grid, lam, run, 0)
    return _build_report(U, P, run["energy"], run["iterations"],
                         run["converged"])


def solve_hybrid(P: HybridParams, cfg: SolverConfig | None = None) -> GroundStateReport:
    """Ground state of the coupled two-plane energy at mass P.mu.

    Multi-start over the configured mass splits; the best converged run
    wins.  For beta = 0 the minimum can sit at a one-sided endpoint, so
    both single-plane endpoint candidates are solved on the same grid
    and compared; when they tie, both endpoint reports are attached as
    ``branches``.
    """
    cfg = cfg if cfg is not None else SolverConfig()
    lam = max(_RATE_MARGIN * omega_star(P), (16.0 / cfg.R) ** 2)
    grid = _grid_for(lam, cfg)
    pd = plane_data(grid, lam)
    planes = [(P.p1, P.sigma1), (P.p2, P.sigma2)]

    best = _solve_on_grid(grid, lam, pd, planes, P.beta, P.mu, cfg, charged=True)
    U = HybridState(
        ChargedField(RadialField(grid, best["phis"][0]), best["qs"][0], lam),
        ChargedField(RadialField(grid, best["phis"][1]), best["qs"][1], lam))
    energy = best["energy"]
    iterations = best["iterations"]
    converged = best["converged"]
    branches = None

    if P.beta == 0.0:
        singles = [
            _solve_on_grid(grid, lam, pd, [planes[i]], 0.0, P.mu, cfg,
                           charged=True)
            for i in (0, 1)
        ]
        i_best = min((0, 1), key=lambda i: singles[i]["energy"])
        if singles[i_best]["energy"] < energy:
            energy = singles[i_best]["energy"]
            iterations = singles[i_best]["iterations"]
            converged = singles[i_best]["converged"]
            U = _one_sided_state(grid, lam, singles[i_best], i_best)
        e1, e2 = singles[0]["energy"], singles[1]["energy"]
        if abs(e1 - e2) <= 1e-6 * max(1.0, abs(e1)):
            branch_reports = tuple(
                _build_report(_one_sided_state(grid, lam, singles[i], i), P,
                              singles[i]["energy"], singles[i]["iterations"],
                              singles[i]["converged"])
                for i in (0, 1))
            branches = branch_reports

    report = _build_report(U, P, energy, iterations, converged)
    report.branches = branches
    return report
