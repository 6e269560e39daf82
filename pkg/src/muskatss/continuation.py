"""Single-slope solves and continuation of the solution branch in s.

The unknown vector is the nodal values k(z_1), ..., k(z_{N-1}); the value
at z = 0 is pinned by oddness.  The first continuation step starts from
the linear approximation ds*(2/pi)*z; every later step starts from the
previous solution shifted by ds*(2/pi)*z so the boundary value at pi/2
matches the new target slope exactly before solving.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .grid_spline import Grid, Profile, fit_spline, make_grid
from .lm import LMConfig, SolverError, SolverReport, lm_solve
from .residual import ResidualConfig, residual_vector

__all__ = [
    "Branch",
    "BranchStep",
    "solve_profile",
    "continue_branch",
    "branch_to_json",
    "branch_from_json",
    "save_branch",
    "load_branch",
]

FORMAT_VERSION = "1"


@dataclass(frozen=True)
class BranchStep:
    s: float
    profile: Profile
    report: SolverReport


@dataclass
class Branch:
    """Ordered continuation steps s = ds, 2 ds, ..., plus a failure record.

    ``failure`` is None when the branch reached its target; otherwise it
    is (s_failed, report) for the first step that did not converge, and
    ``steps`` holds everything before it.
    """

    steps: list = field(default_factory=list)
    ds: float = 0.1
    N: int = 129
    lm: LMConfig = field(default_factory=LMConfig)
    res: ResidualConfig = field(default_factory=ResidualConfig)
    failure: tuple | None = None

    @property
    def s_values(self):
        return [st.s for st in self.steps]

    def step_at(self, s: float, tol: float = 1e-9) -> BranchStep:
        for st in self.steps:
            if abs(st.s - s) <= tol:
                return st
        raise KeyError(f"s={s} not present in branch (have {self.s_values})")


def _residual_closure(grid: Grid, s: float, res_cfg: ResidualConfig):
    def r(x):
        values = np.concatenate([[0.0], x])
        profile = fit_spline(grid, values, s)
        return residual_vector(profile, res_cfg).stacked()

    return r


def solve_profile(s: float, N: int = 129,
                  lm_cfg: LMConfig | None = None,
                  res_cfg: ResidualConfig | None = None,
                  initial: np.ndarray | None = None) -> tuple[Profile, SolverReport]:
    """Solve the collocation system for one slope value.

    Cold starts use the linear approximation (2/pi)*s*z; continuation
    passes the shifted previous solution instead.  s = 0 returns the
    exact zero profile without running the solver.
    """
    if s < 0:
        raise ValueError(f"slope must be nonnegative, got {s}")
    lm_cfg = lm_cfg or LMConfig()
    res_cfg = res_cfg or ResidualConfig()
    grid = make_grid(N)
    if s == 0.0:
        profile = fit_spline(grid, np.zeros(N), 0.0)
        rv = residual_vector(profile, res_cfg)
        report = SolverReport(solution=np.zeros(N - 1), residual_norm=rv.max_norm(),
                              iterations=0, converged=True, lambda_history=[])
        return profile, report
    if initial is None:
        initial = (2.0 / np.pi) * s * grid.nodes[1:]
    report = lm_solve(_residual_closure(grid, s, res_cfg), initial, lm_cfg)
    values = np.concatenate([[0.0], report.solution])
    return fit_spline(grid, values, s), report


def continue_branch(s_max: float, ds: float, N: int = 129,
                    lm: LMConfig | None = None,
                    res: ResidualConfig | None = None) -> Branch:
    """March the branch from s = ds to s_max in increments of ds.

    A failed step is retried once through two half steps (ds/2) before
    the branch is truncated with a failure record.  Damping is reset at
    every step.
    """
    if s_max <= 0 or ds <= 0:
        raise ValueError("s_max and ds must be positive")
    lm = lm or LMConfig()
    res = res or ResidualConfig()
    nsteps = round(s_max / ds)
    if nsteps < 1 or abs(nsteps * ds - s_max) > 1e-9 * max(1.0, abs(s_max)):
        raise ValueError(f"s_max={s_max} is not a positive multiple of ds={ds}")

    grid = make_grid(N)
    branch = Branch(ds=ds, N=N, lm=lm, res=res)
    prev = np.zeros(N - 1)
    shift = (2.0 / np.pi) * grid.nodes[1:]
    for m in range(1, nsteps + 1):
        s_m = m * ds
        guess = prev + ds * shift
        profile, report = _solve_step(s_m, N, lm, res, guess)
        if not report.converged:
            retry = _half_step_retry(s_m, ds, N, lm, res, prev, shift)
            if retry is None:
                branch.failure = (s_m, report)
                return branch
            profile, report = retry
        branch.steps.append(BranchStep(s=s_m, profile=profile, report=report))
        prev = report.solution
    return branch


def _solve_step(s, N, lm, res, guess):
    try:
        return solve_profile(s, N, lm, res, initial=guess)
    except SolverError:
        report = SolverReport(solution=guess, residual_norm=np.inf,
                              iterations=0, converged=False)
        grid = make_grid(N)
        return fit_spline(grid, np.concatenate([[0.0], guess]), s), report


def _half_step_retry(s_m, ds, N, lm, res, prev, shift):
    half = 0.5 * ds
    p1, r1 = _solve_step(s_m - half, N, lm, res, prev + half * shift)
    if not r1.converged:
        return None
    p2, r2 = _solve_step(s_m, N, lm, res, r1.solution + half * shift)
    if not r2.converged:
        return None
    return p2, r2


def branch_to_json(branch: Branch) -> str:
    """Serialize a branch; floats keep full precision via repr round-trip."""
    doc = {
        "meta": {
            "version": FORMAT_VERSION,
            "N": branch.N,
            "ds": branch.ds,
            "tolerances": {
                "lambda0": branch.lm.lambda0,
                "lambda_up": branch.lm.lambda_up,
                "lambda_down": branch.lm.lambda_down,
                "fd_step": branch.lm.fd_step,
                "tol_residual": branch.lm.tol_residual,
                "tol_step": branch.lm.tol_step,
                "max_iters": branch.lm.max_iters,
                "outer_nodes": branch.res.resolve_outer_nodes(branch.N),
                "inner_abs_tol": branch.res.inner_quad.abs_tol,
                "inner_rel_tol": branch.res.inner_quad.rel_tol,
                "split_halfwidth_z": branch.res.split_halfwidth_z,
                "split_halfwidth_end": branch.res.split_halfwidth_end,
                "series_order": branch.res.series_order,
            },
        },
        "steps": [
            {
                "s": st.s,
                "values": [float(v) for v in st.profile.values],
                "residual_norm": st.report.residual_norm,
                "iterations": st.report.iterations,
                "converged": st.report.converged,
                "lambda_history": list(st.report.lambda_history),
            }
            for st in branch.steps
        ],
    }
    if branch.failure is not None:
        s_fail, rep = branch.failure
        doc["failure"] = {"s": s_fail, "residual_norm": rep.residual_norm,
                          "iterations": rep.iterations}
    return json.dumps(doc, sort_keys=True, separators=(",", ":"))


def branch_from_json(text: str) -> Branch:
    doc = json.loads(text)
    meta = doc["meta"]
    tol = meta["tolerances"]
    from .quadrature import QuadConfig

    lm = LMConfig(
        lambda0=tol["lambda0"], lambda_up=tol["lambda_up"],
        lambda_down=tol["lambda_down"], fd_step=tol["fd_step"],
        tol_residual=tol["tol_residual"], tol_step=tol["tol_step"],
        max_iters=tol["max_iters"],
    )
    res = ResidualConfig(
        outer_nodes=tol["outer_nodes"],
        inner_quad=QuadConfig(abs_tol=tol["inner_abs_tol"], rel_tol=tol["inner_rel_tol"]),
        split_halfwidth_z=tol["split_halfwidth_z"],
        split_halfwidth_end=tol["split_halfwidth_end"],
        series_order=tol["series_order"],
    )
    branch = Branch(ds=meta["ds"], N=meta["N"], lm=lm, res=res)
    grid = make_grid(meta["N"])
    for st in doc["steps"]:
        values = np.array(st["values"], dtype=float)
        profile = fit_spline(grid, values, st["s"])
        report = SolverReport(
            solution=values[1:], residual_norm=st["residual_norm"],
            iterations=st["iterations"], converged=st["converged"],
            lambda_history=list(st.get("lambda_history", [])),
        )
        branch.steps.append(BranchStep(s=st["s"], profile=profile, report=report))
    if "failure" in doc:
        f = doc["failure"]
        branch.failure = (f["s"], SolverReport(
            solution=np.array([]), residual_norm=f["residual_norm"],
            iterations=f["iterations"], converged=False))
    return branch


def save_branch(branch: Branch, path) -> None:
    with open(path, "w") as fh:
        fh.write(branch_to_json(branch))
        fh.write("\n")


def load_branch(path) -> Branch:
    with open(path) as fh:
        return branch_from_json(fh.read())
