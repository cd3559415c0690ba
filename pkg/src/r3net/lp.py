"""Standard-form linear program solver.

Bounded-variable revised simplex, two phases (artificial variables give a
clean infeasibility certificate), Dantzig pricing with a Bland fallback
after a run of degenerate pivots, dense product-form basis inverse with
periodic refactorization. Deterministic: identical inputs produce the
identical pivot sequence regardless of the kernel backend.

The solver certifies its answer: an "optimal" status implies the returned
point satisfies all constraints within ``feas_tol`` and no improving
direction exists at ``opt_tol``; numeric breakdown raises
``LPNumericError`` instead of returning a wrong status.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Literal

import numpy as np
import scipy.sparse as sp

from . import _kernels as K


class LPDimensionError(ValueError):
    """Inconsistent shapes or unusable bounds."""


class LPNumericError(RuntimeError):
    """Factorization failure, iteration-limit hit, or failed post-check."""


Status = Literal["optimal", "infeasible", "unbounded"]


@dataclass
class SimplexConfig:
    """Tolerances and method knobs; defaults suit desk-scale problems."""

    feas_tol_scale: float = 1e-9  # feas_tol = scale * (1 + ||b||_inf)
    opt_tol: float = 1e-8
    pivot_tol: float = 1e-9
    degen_tol: float = 1e-10
    refactor_every: int = 150
    bland_factor: int = 10
    max_iter_factor: int = 60
    equilibrate: bool = True


@dataclass
class LinearProgram:
    """minimize objective @ x  s.t.  A_eq x = b_eq, A_le x <= b_le, lower <= x <= upper.

    ``upper`` entries may be +inf; every ``lower`` entry must be finite.
    """

    objective: np.ndarray
    A_eq: sp.spmatrix | np.ndarray | None = None
    b_eq: np.ndarray | None = None
    A_le: sp.spmatrix | np.ndarray | None = None
    b_le: np.ndarray | None = None
    lower: np.ndarray | None = None
    upper: np.ndarray | None = None

    def __post_init__(self) -> None:
        self.objective = np.asarray(self.objective, dtype=float).ravel()
        n = self.objective.size
        self.lower = (
            np.zeros(n) if self.lower is None else np.asarray(self.lower, dtype=float).ravel()
        )
        self.upper = (
            np.full(n, np.inf) if self.upper is None else np.asarray(self.upper, dtype=float).ravel()
        )
        self.A_eq, self.b_eq = _coerce_system(self.A_eq, self.b_eq, n, "eq")
        self.A_le, self.b_le = _coerce_system(self.A_le, self.b_le, n, "le")
        if self.lower.size != n or self.upper.size != n:
            raise LPDimensionError("bound vectors must match the objective length")
        if np.any(self.lower > self.upper):
            raise LPDimensionError("lower > upper for some variable")
        if np.any(~np.isfinite(self.lower)):
            raise LPDimensionError("all lower bounds must be finite")

    @property
    def n_vars(self) -> int:
        return self.objective.size


@dataclass
class LPSolution:
    status: Status
    x: np.ndarray | None
    objective_value: float | None
    iterations: int


def _coerce_system(a, b, n, kind):
    if a is None and b is None:
        return sp.csr_matrix((0, n)), np.zeros(0)
    if a is None or b is None:
        raise LPDimensionError(f"A_{kind} and b_{kind} must be given together")
    a = sp.csr_matrix(a, dtype=float)
    b = np.asarray(b, dtype=float).ravel()
    if a.shape[1] != n:
        raise LPDimensionError(f"A_{kind} has {a.shape[1]} columns, expected {n}")
    if a.shape[0] != b.size:
        raise LPDimensionError(f"A_{kind} and b_{kind} row counts differ")
    return a, b


class _Simplex:
    """One solve. Works on the slack-augmented equality system W x = b."""

    def __init__(self, lp: LinearProgram, cfg: SimplexConfig):
        self.cfg = cfg
        self.n_orig = lp.n_vars
        m_eq = lp.A_eq.shape[0]
        m_le = lp.A_le.shape[0]
        self.m = m_eq + m_le

        A = sp.vstack([lp.A_eq, lp.A_le], format="csr") if self.m else sp.csr_matrix((0, lp.n_vars))
        b = np.concatenate([lp.b_eq, lp.b_le])
        if cfg.equilibrate and self.m:
            row_max = np.maximum(np.abs(A).max(axis=1).toarray().ravel(), 1e-300)
            scale = 1.0 / np.maximum(row_max, 1e-12)
            scale[row_max == 0] = 1.0
            A = sp.diags(scale) @ A
            b = b * scale

        slack = sp.vstack(
            [sp.csr_matrix((m_eq, m_le)), sp.identity(m_le, format="csr")]
        ) if m_le else sp.csr_matrix((self.m, 0))
        self.n_struct = lp.n_vars + m_le
        self.W = sp.hstack([A, slack], format="csr") if self.m else sp.csr_matrix((0, self.n_struct))
        self.b = b
        self.c = np.concatenate([lp.objective, np.zeros(m_le)])
        self.l = np.concatenate([lp.lower, np.zeros(m_le)])
        self.u = np.concatenate([lp.upper, np.full(m_le, np.inf)])
        self.feas_tol = cfg.feas_tol_scale * (1.0 + (np.abs(b).max() if b.size else 0.0))
        self.iterations = 0

    # -- setup ------------------------------------------------------------

    def _initial_point(self) -> np.ndarray:
        x = self.l.copy()
        no_lower = ~np.isfinite(x)
        x[no_lower] = np.where(np.isfinite(self.u[no_lower]), self.u[no_lower], 0.0)
        return x

    def _install_artificials(self) -> None:
        m = self.m
        x = self._initial_point()
        res = self.b - self.W @ x
        self.status = np.full(self.n_struct, K.AT_LOWER, dtype=np.int8)
        at_upper = ~np.isfinite(self.l) & np.isfinite(self.u)
        self.status[at_upper] = K.AT_UPPER
        self.status[self.l == self.u] = K.FIXED

        basis = np.empty(m, dtype=np.int64)
        art_rows = []
        self.x_nb = x
        xB = np.empty(m)
        m_eq = m - (self.n_struct - self.n_orig)
        next_col = self.n_struct
        for i in range(m):
            slack_col = None
            if i >= m_eq:
                slack_col = self.n_orig + (i - m_eq)
            if slack_col is not None and res[i] >= 0:
                basis[i] = slack_col
                xB[i] = res[i]
                self.status[slack_col] = K.BASIC
            else:
                sign = 1.0 if res[i] >= 0 else -1.0
                art_rows.append((i, sign))
                basis[i] = next_col
                xB[i] = abs(res[i])
                next_col += 1
        n_art = len(art_rows)
        if n_art:
            rows = np.array([r for r, _ in art_rows])
            vals = np.array([s for _, s in art_rows])
            art = sp.csr_matrix(
                (vals, (rows, np.arange(n_art))), shape=(m, n_art)
            )
            self.W = sp.hstack([self.W, art], format="csr")
        self.n_total = self.n_struct + n_art
        self.art_index = np.arange(self.n_struct, self.n_total)
        self.l = np.concatenate([self.l, np.zeros(n_art)])
        self.u = np.concatenate([self.u, np.full(n_art, np.inf)])
        self.x_nb = np.concatenate([self.x_nb, np.zeros(n_art)])
        self.status = np.concatenate(
            [self.status, np.full(n_art, K.BASIC, dtype=np.int8)]
        )
        self.basis = basis
        self.xB = xB
        self.W_csc = self.W.tocsc()
        self._refactor()

    # -- linear algebra ----------------------------------------------------

    def _refactor(self) -> None:
        if self.m == 0:
            self.Binv = np.zeros((0, 0))
            self._pivots_since_refactor = 0
            return
        B = self.W_csc[:, self.basis].toarray()
        try:
            self.Binv = np.ascontiguousarray(np.linalg.inv(B))
        except np.linalg.LinAlgError as exc:
            raise LPNumericError("singular basis during refactorization") from exc
        x_work = self.x_nb.copy()
        x_work[self.basis] = 0.0
        self.xB = self.Binv @ (self.b - self.W @ x_work)
        self._pivots_since_refactor = 0

    def _column(self, j: int) -> np.ndarray:
        col = np.zeros(self.m)
        start, end = self.W_csc.indptr[j], self.W_csc.indptr[j + 1]
        col[self.W_csc.indices[start:end]] = self.W_csc.data[start:end]
        return col

    # -- core loop ----------------------------------------------------------

    def _run_phase(self, c_work: np.ndarray, phase: int) -> Status:
        cfg = self.cfg
        max_iter = cfg.max_iter_factor * (self.m + self.n_total) + 500
        bland_trigger = cfg.bland_factor * (self.m + self.n_total)
        degen_run = 0
        use_bland = False
        final_sweep = False
        while True:
            y = self.Binv.T @ c_work[self.basis]
            d = c_work - self.W_csc.T @ y
            chooser = (
                K.choose_entering_bland if use_bland else K.choose_entering_dantzig
            )
            q = chooser(d, self.status, cfg.opt_tol)
            if q < 0:
                if self._pivots_since_refactor > 0 and not final_sweep:
                    # confirm optimality against a fresh factorization
                    self._refactor()
                    final_sweep = True
                    continue
                return "optimal"
            final_sweep = False
            w = self.Binv @ self._column(q)
            direction = 1.0 if self.status[q] == K.AT_LOWER else -1.0
            v = direction * w
            idx, theta, kind = K.ratio_test(
                v,
                self.xB,
                self.l[self.basis],
                self.u[self.basis],
                self.u[q] - self.l[q],
                cfg.pivot_tol,
            )
            if kind == K.RT_UNBOUNDED:
                if phase == 1:
                    raise LPNumericError("unbounded phase-1 objective")
                return "unbounded"
            self.iterations += 1
            if self.iterations > max_iter:
                raise LPNumericError("simplex iteration limit exceeded")
            if theta <= cfg.degen_tol:
                degen_run += 1
                if degen_run > bland_trigger:
                    use_bland = True
            else:
                degen_run = 0

            self.xB -= theta * v
            if kind == K.RT_FLIP:
                new_status = (
                    K.AT_UPPER if self.status[q] == K.AT_LOWER else K.AT_LOWER
                )
                self.status[q] = new_status
                self.x_nb[q] = self.u[q] if new_status == K.AT_UPPER else self.l[q]
                continue

            leaving = self.basis[idx]
            entering_value = (
                (self.l[q] if direction > 0 else self.u[q]) + direction * theta
            )
            if self.l[leaving] == self.u[leaving]:
                self.status[leaving] = K.FIXED
                self.x_nb[leaving] = self.l[leaving]
            elif v[idx] > 0:
                self.status[leaving] = K.AT_LOWER
                self.x_nb[leaving] = self.l[leaving]
            else:
                self.status[leaving] = K.AT_UPPER
                self.x_nb[leaving] = self.u[leaving]
            if abs(w[idx]) < cfg.pivot_tol:
                raise LPNumericError("pivot element below tolerance")
            K.eta_update(self.Binv, w, idx)
            self.basis[idx] = q
            self.status[q] = K.BASIC
            self.xB[idx] = entering_value
            self._pivots_since_refactor += 1
            if self._pivots_since_refactor >= cfg.refactor_every:
                self._refactor()

    def _drive_out_artificials(self) -> None:
        art_set = set(self.art_index.tolist())
        for i in range(self.m):
            if self.basis[i] not in art_set:
                continue
            row_vec = self.W_csc.T @ self.Binv[i]
            candidate = -1
            for j in range(self.n_struct):
                if self.status[j] in (K.BASIC, K.FIXED):
                    continue
                if abs(row_vec[j]) > self.cfg.pivot_tol:
                    candidate = j
                    break
            if candidate < 0:
                # redundant row: keep the artificial basic, frozen at zero
                art = self.basis[i]
                self.l[art] = self.u[art] = 0.0
                continue
            w = self.Binv @ self._column(candidate)
            art = self.basis[i]
            self.status[art] = K.FIXED
            self.x_nb[art] = 0.0
            K.eta_update(self.Binv, w, i)
            self.basis[i] = candidate
            self.status[candidate] = K.BASIC
            self.xB[i] = self.x_nb[candidate]
            self._pivots_since_refactor += 1

    # -- public -------------------------------------------------------------

    def solve(self) -> LPSolution:
        self._install_artificials()
        n_art = self.n_total - self.n_struct
        if n_art:
            c1 = np.zeros(self.n_total)
            c1[self.art_index] = 1.0
            self._run_phase(c1, phase=1)
            infeas = float(c1[self.basis] @ self.xB)
            if infeas > max(self.feas_tol, 10 * self.cfg.opt_tol):
                return LPSolution("infeasible", None, None, self.iterations)
            self._drive_out_artificials()
            self.l[self.art_index] = 0.0
            self.u[self.art_index] = 0.0
            nonbasic_art = [j for j in self.art_index if self.status[j] != K.BASIC]
            self.status[nonbasic_art] = K.FIXED
            self.x_nb[self.art_index] = 0.0
        c2 = np.concatenate([self.c, np.zeros(n_art)])
        status = self._run_phase(c2, phase=2)
        if status == "unbounded":
            return LPSolution("unbounded", None, None, self.iterations)
        x = self.x_nb.copy()
        x[self.basis] = self.xB
        return LPSolution(
            "optimal",
            x[: self.n_orig].copy(),
            float(self.c[: self.n_orig] @ x[: self.n_orig]),
            self.iterations,
        )


def solve_lp(lp: LinearProgram, config: SimplexConfig | None = None) -> LPSolution:
    """Solve to proven optimality; see module docstring for guarantees."""
    cfg = config or SimplexConfig()
    sol = _Simplex(lp, cfg).solve()
    if sol.status == "optimal":
        _verify_feasible(lp, sol.x, cfg)
    return sol


def _verify_feasible(lp: LinearProgram, x: np.ndarray, cfg: SimplexConfig) -> None:
    b_all = np.concatenate([lp.b_eq, lp.b_le])
    tol = cfg.feas_tol_scale * (1.0 + (np.abs(b_all).max() if b_all.size else 0.0))
    tol = max(tol, 1e2 * cfg.feas_tol_scale)
    if lp.A_eq.shape[0]:
        res = np.abs(lp.A_eq @ x - lp.b_eq).max()
        if res > 1e3 * tol:
            raise LPNumericError(f"equality residual {res:.3e} exceeds tolerance")
    if lp.A_le.shape[0]:
        res = (lp.A_le @ x - lp.b_le).max()
        if res > 1e3 * tol:
            raise LPNumericError(f"inequality violation {res:.3e} exceeds tolerance")
    if (x < lp.lower - 1e3 * tol).any() or (x > lp.upper + 1e3 * tol).any():
        raise LPNumericError("bound violation in returned point")


def export_lp_text(lp: LinearProgram, name: str = "R3NET") -> str:
    """Render the program in classic fixed-format MPS for external solvers."""

    def fmt(value: float) -> str:
        return f"{value:.12g}"

    lines = [f"NAME          {name}", "ROWS", " N  COST"]
    eq_rows = [f"E{i + 1}" for i in range(lp.A_eq.shape[0])]
    le_rows = [f"L{i + 1}" for i in range(lp.A_le.shape[0])]
    for r in eq_rows:
        lines.append(f" E  {r}")
    for r in le_rows:
        lines.append(f" L  {r}")
    lines.append("COLUMNS")
    a_eq = lp.A_eq.tocsc()
    a_le = lp.A_le.tocsc()
    for j in range(lp.n_vars):
        col = f"X{j + 1}"
        entries = []
        if lp.objective[j] != 0:
            entries.append(("COST", lp.objective[j]))
        for a, rows in ((a_eq, eq_rows), (a_le, le_rows)):
            start, end = a.indptr[j], a.indptr[j + 1]
            for k in range(start, end):
                entries.append((rows[a.indices[k]], a.data[k]))
        for row, val in entries:
            lines.append(f"    {col:<10}{row:<10}{fmt(val)}")
    lines.append("RHS")
    for rows, b in ((eq_rows, lp.b_eq), (le_rows, lp.b_le)):
        for r, val in zip(rows, b):
            if val != 0:
                lines.append(f"    RHS       {r:<10}{fmt(val)}")
    lines.append("BOUNDS")
    for j in range(lp.n_vars):
        col = f"X{j + 1}"
        lo, hi = lp.lower[j], lp.upper[j]
        if lo == hi:
            lines.append(f" FX BND       {col:<10}{fmt(lo)}")
            continue
        if lo != 0:
            lines.append(f" LO BND       {col:<10}{fmt(lo)}")
        if np.isfinite(hi):
            lines.append(f" UP BND       {col:<10}{fmt(hi)}")
    lines.append("ENDATA")
    return "\n".join(lines) + "\n"
