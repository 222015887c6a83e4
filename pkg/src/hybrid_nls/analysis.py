"""Derived quantities built on top of the solvers.

Free-plane energy coefficients and the critical mass, the endpoint
mass-split oracle, parameter sweeps toward the strong-interaction
limits, and radial monotonicity / rearrangement utilities used by the
verification suite.
"""

from __future__ import annotations

import dataclasses
import functools
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .energy import HybridParams
from .grid import RadialField
from .solver import (
    GroundStateReport,
    SolverConfig,
    solve_hybrid,
    solve_planar,
    solve_single,
)

__all__ = [
    "SweepRow",
    "SweepTable",
    "RhoDetail",
    "rho",
    "rho_detail",
    "critical_mass",
    "mass_split_infimum",
    "sweep_sigma2",
    "sweep_common_sigma",
    "monotone_radial_check",
    "rearrange_decreasing",
]

# A free-plane profile whose decay rate drops below this value is wider
# than the default box can hold without visible truncation bias, so the
# reference solve moves to a larger mass where the state is compact.
_RATE_FLOOR = 0.02
_RATE_TARGET = 0.3


@dataclass(frozen=True)
class SweepRow:
    """One solve of a parameter sweep."""

    value: float
    energy: float
    mass1: float
    mass2: float
    q1: float
    q2: float
    omega: float
    converged: bool


@dataclass(frozen=True)
class SweepTable:
    """Ordered sweep results plus the reference levels they approach."""

    parameter: str
    mu: float
    rows: tuple[SweepRow, ...]
    references: dict[str, float]

    COLUMNS = ("value", "energy", "mass1", "mass2", "q1", "q2", "omega", "converged")

    def __post_init__(self) -> None:
        vals = [row.value for row in self.rows]
        if any(b <= a for a, b in zip(vals, vals[1:])):
            raise ValueError("sweep rows must be strictly increasing in value")
        for row in self.rows:
            if abs(row.mass1 + row.mass2 - self.mu) > 1e-8 * max(1.0, self.mu):
                raise ValueError("sweep row masses do not sum to the constraint")

    def as_rows(self) -> list[dict]:
        return [dataclasses.asdict(row) for row in self.rows]


@dataclass(frozen=True)
class RhoDetail:
    """Free-plane coefficient together with the solve that produced it."""

    value: float
    reference_mass: float
    report: GroundStateReport


def _row_from_report(value: float, r: GroundStateReport) -> SweepRow:
    return SweepRow(
        value=float(value),
        energy=r.energy,
        mass1=r.mass1,
        mass2=r.mass2,
        q1=r.q1,
        q2=r.q2,
        omega=r.omega,
        converged=r.converged,
    )


def _solve_rows(params: list[HybridParams], values, cfg: SolverConfig,
                jobs: int) -> tuple[SweepRow, ...]:
    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            reports = list(pool.map(lambda P: solve_hybrid(P, cfg), params))
    else:
        reports = [solve_hybrid(P, cfg) for P in params]
    return tuple(_row_from_report(v, r) for v, r in zip(values, reports))


@functools.lru_cache(maxsize=128)
def _rho_detail_cached(p: float, cfg: SolverConfig) -> RhoDetail:
    exponent = 2.0 / (4.0 - p)
    mu_ref = 1.0
    report = None
    for _ in range(3):
        report = solve_planar(p, mu_ref, cfg)
        if report.omega >= _RATE_FLOOR:
            break
        if report.omega > 0.0:
            # exact rate scaling: omega(mu) = omega(1) mu^((p-2)/(4-p))
            mu_ref *= (_RATE_TARGET / report.omega) ** ((4.0 - p) / (p - 2.0))
        else:
            # box pressure beats the binding at this mass; no usable scale
            mu_ref *= 16.0
    if not report.converged:
        raise RuntimeError(
            f"free-plane solve for p={p} did not converge at mass {mu_ref}")
    value = -report.energy / mu_ref**exponent
    if value <= 0.0:
        raise RuntimeError(
            f"free-plane energy for p={p} is nonnegative at mass {mu_ref}; "
            "enlarge R in the solver configuration")
    return RhoDetail(value=value, reference_mass=mu_ref, report=report)


def rho_detail(p: float, cfg: SolverConfig | None = None) -> RhoDetail:
    """Like :func:`rho` but also exposes the underlying reference solve."""
    return _rho_detail_cached(float(p), cfg if cfg is not None else SolverConfig())


def rho(p: float, cfg: SolverConfig | None = None) -> float:
    """Coefficient of the free-plane energy curve E(mu) = -rho mu^(2/(4-p)).

    Measured from one planar ground-state solve and cached per (p, cfg).
    The solve runs at mass 1 when the resulting profile fits the box;
    for powers close to 4 the mass-1 profile is far wider than any
    reasonable box, so the reference solve moves to a larger mass and
    scales back through the exact mass-scaling law.
    """
    return rho_detail(p, cfg).value


def critical_mass(p1: float, p2: float, cfg: SolverConfig | None = None) -> float:
    """Mass at which the two free-plane energy curves cross."""
    if p1 == p2:
        raise ValueError("critical mass requires two distinct powers")
    r1 = rho(p1, cfg)
    r2 = rho(p2, cfg)
    exponent = (4.0 - p1) * (4.0 - p2) / (2.0 * (p2 - p1))
    return (r1 / r2) ** exponent


def mass_split_infimum(p1: float, p2: float, mu: float, rho1: float,
                       rho2: float, n_grid: int = 4001) -> tuple[float, float]:
    """Brute-force minimum of the decoupled two-plane energy over splits.

    Scans g(m) = -rho1 m^(2/(4-p1)) - rho2 (mu-m)^(2/(4-p2)) on a uniform
    grid of m in [0, mu]; returns (minimum value, minimizing m).
    """
    if n_grid < 1000:
        raise ValueError(f"n_grid must be at least 1000, got {n_grid}")
    if mu <= 0.0:
        raise ValueError(f"mu must be positive, got {mu}")
    m = np.linspace(0.0, mu, int(n_grid))
    g = -rho1 * m ** (2.0 / (4.0 - p1)) - rho2 * (mu - m) ** (2.0 / (4.0 - p2))
    k = int(np.argmin(g))
    return float(g[k]), float(m[k])


def _check_sweep_values(values) -> list[float]:
    vals = [float(v) for v in values]
    if not vals:
        raise ValueError("sweep needs at least one parameter value")
    if any(b <= a for a, b in zip(vals, vals[1:])):
        raise ValueError("sweep values must be strictly ascending")
    return vals


def sweep_sigma2(P: HybridParams, sigma2_values, cfg: SolverConfig | None = None,
                 jobs: int = 1) -> SweepTable:
    """Solve across second-plane strengths at fixed everything else.

    Requires equal powers and a first-plane strength below the whole
    sweep range, so the mass has a reason to migrate to plane 1.  The
    table's references carry the single-plane level the energies
    approach as the second plane's interaction switches off.
    """
    if P.p1 != P.p2:
        raise ValueError("sigma2 sweep requires p1 == p2")
    vals = _check_sweep_values(sigma2_values)
    if P.sigma1 >= vals[0]:
        raise ValueError("sigma1 must stay below every sigma2 value")
    cfg = cfg if cfg is not None else SolverConfig()
    params = [dataclasses.replace(P, sigma2=v) for v in vals]
    rows = _solve_rows(params, vals, cfg, jobs)
    single = solve_single(P.p1, P.sigma1, P.mu, cfg)
    return SweepTable(
        parameter="sigma2",
        mu=P.mu,
        rows=rows,
        references={"single_plane_1": single.energy},
    )


def sweep_common_sigma(p1: float, p2: float, beta: float, mu: float,
                       sigma_values, cfg: SolverConfig | None = None,
                       jobs: int = 1) -> SweepTable:
    """Solve across a common strength sigma1 = sigma2 = sigma.

    The references carry both free-plane levels at this mass and the
    critical mass where they cross; which level the sweep approaches is
    decided by the side of the critical mass that mu falls on.
    """
    if not p1 < p2:
        raise ValueError("common-strength sweep requires p1 < p2")
    vals = _check_sweep_values(sigma_values)
    cfg = cfg if cfg is not None else SolverConfig()
    params = [HybridParams(p1, p2, v, v, beta, mu) for v in vals]
    rows = _solve_rows(params, vals, cfg, jobs)
    return SweepTable(
        parameter="sigma_common",
        mu=mu,
        rows=rows,
        references={
            "free_plane_1": -rho(p1, cfg) * mu ** (2.0 / (4.0 - p1)),
            "free_plane_2": -rho(p2, cfg) * mu ** (2.0 / (4.0 - p2)),
            "critical_mass": critical_mass(p1, p2, cfg),
        },
    )


def _field_values(f) -> np.ndarray:
    if isinstance(f, RadialField):
        return f.values
    return np.asarray(f, dtype=np.float64)


def monotone_radial_check(f) -> tuple[bool, int]:
    """Count increases along the radial direction.

    A node pair (k, k+1) is a violation when f[k+1] exceeds f[k] by more
    than a 1e-12 relative slack.  Accepts a RadialField or a plain
    sequence of node values.
    """
    v = _field_values(f)
    viol = int(np.sum(v[1:] > v[:-1] + 1e-12 * np.abs(v[:-1])))
    return viol == 0, viol


def rearrange_decreasing(f: RadialField) -> RadialField:
    """Decreasing rearrangement with respect to the grid measure.

    Sorts the level structure of ``f`` onto the same mesh: the sorted
    node values form a step function of the cumulative measure, and each
    node of the result receives the quadratic mean of that step function
    over the node's own measure slab.  This keeps the measure of every
    level set (up to mesh resolution) and the squared integral exactly,
    and it reproduces an already-decreasing field bit for bit.
    """
    v = _field_values(f)
    if np.any(v < 0.0):
        raise ValueError("rearrangement expects a nonnegative field")
    if np.all(v[1:] <= v[:-1]):
        return RadialField(f.grid, v.copy())

    grid = f.grid
    w = grid.w_trapz
    order = np.argsort(-v, kind="stable")
    sv = v[order]
    src_hi = np.cumsum(w[order])
    n_src = len(sv)

    out = np.empty_like(v)
    k = 0  # source block under the cursor
    pos = 0.0  # cumulative measure consumed so far
    for j in range(len(v)):
        wj = w[j]
        while k < n_src - 1 and src_hi[k] <= pos:
            k += 1
        if wj <= 0.0:
            out[j] = sv[k]
            continue
        target = pos + wj
        acc = 0.0
        while pos < target and k < n_src:
            hi = src_hi[k]
            if hi <= target:
                acc += (hi - pos) * sv[k] ** 2
                pos = hi
                k += 1
            else:
                acc += (target - pos) * sv[k] ** 2
                pos = target
        if pos < target:  # rounding shortfall past the last block
            acc += (target - pos) * sv[-1] ** 2
            pos = target
        if k >= n_src:
            k = n_src - 1
        out[j] = math.sqrt(acc / wj)
    # the slab means are nonincreasing exactly; clamp the at-most-one-ulp
    # rounding inversions so the result is a true fixed point of a second
    # pass
    np.minimum.accumulate(out[1:], out=out[1:])
    return RadialField(grid, out)
