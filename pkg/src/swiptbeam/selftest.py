"""Built-in solver checks against problems with independently known answers.

Each check builds a small conic program whose optimum is known in closed
form (or whose infeasibility is provable), solves it at tight tolerance and
compares.  The suite doubles as the CLI ``solver-selftest`` subcommand and
as the engine acceptance gate, so the pass thresholds here are pinned:
absolute duality gap and relative residuals at most 1e-7, and the value of
the pentagon theta problem within 1e-5 of sqrt(5).
"""

from __future__ import annotations

import math

import numpy as np

from .cones import ConeSpec, ConicProblem, svec
from .solver import check_certificate, solve

__all__ = ["run_selftest"]

_GAP_TOL = 1e-7


def _residuals_ok(problem, sol) -> tuple[bool, str]:
    cert = check_certificate(problem, sol)
    ok = (
        sol.status == "optimal"
        and cert["gap"] <= _GAP_TOL
        and cert["prim_res"] <= _GAP_TOL
        and cert["dual_res"] <= _GAP_TOL
    )
    detail = (
        f"status={sol.status} gap={cert.get('gap', math.nan):.2e} "
        f"pres={cert.get('prim_res', math.nan):.2e} "
        f"dres={cert.get('dual_res', math.nan):.2e}"
    )
    return ok, detail


def _check_lp():
    """Box/simplex LP with unique vertex optimum (1, 2), value -5."""
    A = np.array([[1.0, 1.0], [1.0, 0.0], [0.0, 1.0], [-1.0, 0.0], [0.0, -1.0]])
    b = np.array([3.0, 2.0, 2.0, 0.0, 0.0])
    prob = ConicProblem(
        c=np.array([-1.0, -2.0]), A=A, b=b, cones=ConeSpec(nonneg=5)
    )
    sol = solve(prob, tol=1e-9)
    ok, detail = _residuals_ok(prob, sol)
    err = abs(sol.x @ prob.c - (-5.0)) + float(np.abs(sol.x - [1.0, 2.0]).max())
    return "lp", ok and err < 1e-6, f"{detail} x-err={err:.2e}"


def _check_lambda_max():
    """Largest eigenvalue of a fixed Hermitian matrix as a small SDP."""
    C = np.array([[2.0, 1.0j], [-1.0j, 2.0]])  # eigenvalues 1 and 3
    prob = ConicProblem(
        c=np.array([1.0]),
        A=-svec(np.eye(2))[:, None],
        b=-svec(C),
        cones=ConeSpec(psd=(2,)),
    )
    sol = solve(prob, tol=1e-9)
    ok, detail = _residuals_ok(prob, sol)
    err = abs(float(sol.x[0]) - 3.0)
    return "lambda_max", ok and err < 1e-6, f"{detail} value-err={err:.2e}"


def _check_theta_pentagon():
    """Lovasz theta of the 5-cycle; the closed-form answer is sqrt(5)."""
    p = 5
    edges = [(i, (i + 1) % p) for i in range(p)]
    nvar = p * p
    rows = []
    rhs = []
    tr = np.zeros(nvar)
    tr[:p] = 1.0
    rows.append(tr)  # Tr X = 1
    rhs.append(1.0)
    for i, j in edges:
        a, bq = (i, j) if i < j else (j, i)
        # svec order: p diagonal entries, then (re, im) pairs over the
        # strict upper triangle row-major
        pos = p + 2 * sum(p - 1 - r for r in range(a)) + 2 * (bq - a - 1)
        for off in (0, 1):  # real and imaginary part of X_ij
            e = np.zeros(nvar)
            e[pos + off] = 1.0
            rows.append(e)
            rhs.append(0.0)
    A_zero = np.stack(rows)
    prob = ConicProblem(
        c=-svec(np.ones((p, p))),
        A=np.vstack([A_zero, -np.eye(nvar)]),
        b=np.concatenate([rhs, np.zeros(nvar)]),
        cones=ConeSpec(zero=len(rhs), psd=(p,)),
    )
    sol = solve(prob, tol=1e-9)
    ok, detail = _residuals_ok(prob, sol)
    value = -float(prob.c @ sol.x)
    err = abs(value - math.sqrt(5.0))
    return "theta_pentagon", ok and err < 1e-5, f"{detail} theta-err={err:.2e}"


def _check_socp():
    """Maximize x+y on the disk of radius sqrt(2): optimum 2 at (1, 1)."""
    A = np.array([[0.0, 0.0], [-1.0, 0.0], [0.0, -1.0]])
    b = np.array([math.sqrt(2.0), 0.0, 0.0])
    prob = ConicProblem(
        c=np.array([-1.0, -1.0]), A=A, b=b, cones=ConeSpec(soc=(3,))
    )
    sol = solve(prob, tol=1e-9)
    ok, detail = _residuals_ok(prob, sol)
    err = abs(float(prob.c @ sol.x) + 2.0)
    return "socp", ok and err < 1e-6, f"{detail} value-err={err:.2e}"


def _check_infeasible():
    """x >= 1 together with x <= 0 must yield a primal Farkas certificate."""
    prob = ConicProblem(
        c=np.array([0.0]),
        A=np.array([[-1.0], [1.0]]),
        b=np.array([-1.0, 0.0]),
        cones=ConeSpec(nonneg=2),
    )
    sol = solve(prob, tol=1e-9)
    cert = check_certificate(prob, sol)
    ok = sol.status == "primal_infeasible" and cert.get("cert_res", 1.0) <= 1e-7
    return "infeasible_cert", ok, f"status={sol.status} cert_res={cert.get('cert_res')}"


def run_selftest() -> list[tuple[str, bool, str]]:
    """Run every check; returns ``(name, passed, detail)`` triples."""
    return [
        _check_lp(),
        _check_lambda_max(),
        _check_theta_pentagon(),
        _check_socp(),
        _check_infeasible(),
    ]
