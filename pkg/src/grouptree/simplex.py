"""Dense two-phase simplex for bounded variables, with a dual-simplex restart.

Maximizes c.x subject to rows of sense <=, =, >= and finite lower bounds on
every variable (upper bounds may be +inf).  The tableau is kept dense; this is
meant for desk-scale problems, not production LP workloads.

Pivot selection is Dantzig pricing with lowest-index tie-breaks, switching to
Bland's rule after a run of 1000 degenerate pivots so that stalling cannot
cycle.  All choices are index-based, so repeated runs are bit-identical.
"""

from __future__ import annotations

import numpy as np

from .errors import NumericalFailureError

PIVOT_TOL = 1e-9
FEAS_TOL = 1e-7
OPT_TOL = 1e-7
ZERO_STEP = 1e-12
STALL_LIMIT = 1000

BASIC, AT_LO, AT_UP = 0, 1, 2

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"


class BoundedSimplex:
    """One LP instance; supports re-solving after bound changes.

    Rows are normalized to ``<=`` or ``=`` (``>=`` rows are negated), a slack
    column is appended per row, and infeasible starting rows get artificial
    columns that phase 1 drives to zero.
    """

    def __init__(self, A, senses, rhs, obj, lower, upper):
        A = np.asarray(A, dtype=float)
        rhs = np.asarray(rhs, dtype=float).copy()
        m, n = A.shape
        rows = A.copy()
        eq_row = np.zeros(m, dtype=bool)
        for r, sense in enumerate(senses):
            if sense == ">=":
                rows[r] *= -1.0
                rhs[r] *= -1.0
            elif sense == "=":
                eq_row[r] = True
            elif sense != "<=":
                raise ValueError(f"bad row sense {sense!r}")

        self.m = m
        self.n_struct = n
        self.n_total = n + m  # structurals + slacks; artificials appended later
        self.obj_struct = np.asarray(obj, dtype=float).copy()
        if np.any(np.isneginf(np.asarray(lower, dtype=float))):
            raise NumericalFailureError("free variables are not supported")

        self.T = np.zeros((m, self.n_total + 1))
        self.T[:, :n] = rows
        self.T[:, n : n + m] = np.eye(m)
        self.T[:, -1] = rhs

        self.lower = np.concatenate([np.asarray(lower, dtype=float), np.zeros(m)])
        self.upper = np.concatenate(
            [np.asarray(upper, dtype=float), np.full(m, np.inf)]
        )
        self.upper[n + np.flatnonzero(eq_row)] = 0.0

        self.status_col = np.full(self.n_total, AT_LO, dtype=np.int8)
        self.basis = np.arange(n, n + m)
        self.status_col[self.basis] = BASIC
        self.value = np.where(np.isfinite(self.lower), self.lower, 0.0)
        self.beta = np.zeros(m)

        self.iterations = 0
        self.bland = False
        self._stall = 0
        self.art_cols: list[int] = []

    # ---- public API ----

    def solve(self) -> str:
        """Fresh two-phase solve from the all-slack basis."""
        self._recompute_beta()
        if self._max_violation()[0] > FEAS_TOL:
            status = self._phase_one()
            if status != OPTIMAL:
                return status
        self._load_objective()
        return self._primal()

    def resolve_dual(self) -> str:
        """Re-optimize after bound updates, starting from the current basis."""
        for j in range(self.n_total):
            if self.status_col[j] == AT_LO:
                self.value[j] = self.lower[j]
            elif self.status_col[j] == AT_UP:
                if np.isfinite(self.upper[j]):
                    self.value[j] = self.upper[j]
                else:
                    self.status_col[j] = AT_LO
                    self.value[j] = self.lower[j]
        self._recompute_beta()
        status = self._dual()
        if status == OPTIMAL:
            return self._primal()  # mop up any dual-tolerance slack
        return status

    def set_bounds(self, j: int, lo: float, up: float) -> None:
        self.lower[j] = lo
        self.upper[j] = up

    def solution(self) -> np.ndarray:
        x = self.value.copy()
        x[self.basis] = self.beta
        return x[: self.n_struct]

    def objective_value(self) -> float:
        return float(self.obj_struct @ self.solution())

    # ---- internals ----

    def _recompute_beta(self) -> None:
        rhs = self.T[:, -1].copy()
        for j in np.flatnonzero(self.status_col != BASIC):
            v = self.value[j]
            if v != 0.0:
                rhs -= self.T[:, j] * v
        self.beta = rhs

    def _max_violation(self) -> tuple[float, int]:
        lo = self.lower[self.basis]
        up = self.upper[self.basis]
        below = lo - self.beta
        above = self.beta - up
        viol = np.maximum(below, above)
        r = int(np.argmax(viol))
        return float(viol[r]), r

    def _load_objective(self) -> None:
        c = np.zeros(self.n_total)
        c[: self.n_struct] = self.obj_struct
        self._set_costs(c)

    def _set_costs(self, c: np.ndarray) -> None:
        self.cost = c
        cb = c[self.basis]
        self.zc = c - cb @ self.T[:, : self.n_total]

    def _phase_one(self) -> str:
        n0 = self.n_total
        art_rows = []
        for r in range(self.m):
            b = self.basis[r]
            if self.beta[r] < self.lower[b] - FEAS_TOL or self.beta[r] > self.upper[b] + FEAS_TOL:
                art_rows.append(r)
        n_art = len(art_rows)
        ext = np.zeros((self.m, n_art))
        new_T = np.concatenate([self.T[:, :n0], ext, self.T[:, -1:]], axis=1)
        self.T = new_T
        self.lower = np.concatenate([self.lower, np.zeros(n_art)])
        self.upper = np.concatenate([self.upper, np.full(n_art, np.inf)])
        self.status_col = np.concatenate(
            [self.status_col, np.full(n_art, AT_LO, dtype=np.int8)]
        )
        self.value = np.concatenate([self.value, np.zeros(n_art)])
        self.art_cols = list(range(n0, n0 + n_art))
        self.n_total = n0 + n_art

        for t, r in enumerate(art_rows):
            col = n0 + t
            old = self.basis[r]
            # Park the old basic at its nearest bound, absorb the residue.
            if self.beta[r] < self.lower[old]:
                parked = self.lower[old]
            else:
                parked = self.upper[old] if np.isfinite(self.upper[old]) else self.lower[old]
            resid = self.beta[r] - parked
            sign = 1.0 if resid >= 0 else -1.0
            self.T[r, col] = sign
            if sign < 0:
                self.T[r] *= -1.0  # keep the basis columns an identity
            self.status_col[old] = AT_LO if parked == self.lower[old] else AT_UP
            self.value[old] = parked
            self.basis[r] = col
            self.status_col[col] = BASIC

        # Row-reduce the new artificial columns against the current tableau:
        # each artificial column must be a unit column in its own row, which
        # it already is only if the basis rows are untouched; since we swapped
        # basics without pivoting, rebuild beta and costs directly.
        self._recompute_beta()
        c = np.zeros(self.n_total)
        c[self.art_cols] = -1.0
        self._set_costs(c)
        status = self._primal(phase_one=True)
        if status != OPTIMAL:
            return status
        if self.objective_current() < -1e-6:
            return INFEASIBLE
        self._evict_artificials()
        for col in self.art_cols:
            self.lower[col] = 0.0
            self.upper[col] = 0.0
            if self.status_col[col] != BASIC:
                self.value[col] = 0.0
        return OPTIMAL

    def objective_current(self) -> float:
        x = self.value.copy()
        x[self.basis] = self.beta
        return float(self.cost @ x[: self.n_total])

    def _evict_artificials(self) -> None:
        art = set(self.art_cols)
        for r in range(self.m):
            if self.basis[r] not in art:
                continue
            row = self.T[r, : self.n_total]
            candidates = np.flatnonzero(np.abs(row) > PIVOT_TOL)
            pivot_col = -1
            for j in candidates:
                if j not in art and self.status_col[j] != BASIC:
                    pivot_col = int(j)
                    break
            if pivot_col >= 0:
                self._pivot(r, pivot_col, 0.0, +1, AT_LO)
        # any remaining basic artificials sit at zero in redundant rows

    def _eligible_entering(self):
        zc = self.zc
        lo_mask = (self.status_col == AT_LO) & (zc > OPT_TOL)
        up_mask = (self.status_col == AT_UP) & (zc < -OPT_TOL)
        fixed = self.upper - self.lower <= ZERO_STEP
        lo_mask &= ~fixed
        up_mask &= ~fixed
        return lo_mask | up_mask

    def _primal(self, phase_one: bool = False) -> str:
        limit = 20000 + 200 * (self.m + self.n_total)
        while True:
            self.iterations += 1
            if self.iterations > limit:
                raise NumericalFailureError("primal simplex iteration limit")
            mask = self._eligible_entering()
            idx = np.flatnonzero(mask)
            if len(idx) == 0:
                return OPTIMAL
            if self.bland:
                e = int(idx[0])
            else:
                e = int(idx[np.argmax(np.abs(self.zc[idx]))])
            direction = +1 if self.status_col[e] == AT_LO else -1
            col = self.T[:, e]
            a = direction * col

            lo_b = self.lower[self.basis]
            up_b = self.upper[self.basis]
            with np.errstate(divide="ignore", invalid="ignore"):
                drop = (self.beta - lo_b) / a
                rise = (up_b - self.beta) / (-a)
            ratios = np.full(self.m, np.inf)
            dn = a > PIVOT_TOL
            up = a < -PIVOT_TOL
            ratios[dn] = np.maximum(drop[dn], 0.0)
            ratios[up] = np.maximum(rise[up], 0.0)
            ratios = np.where(np.isnan(ratios), np.inf, ratios)
            t_rows = float(np.min(ratios)) if self.m else np.inf
            own = self.upper[e] - self.lower[e]
            t_own = own if np.isfinite(own) else np.inf

            if t_own <= t_rows + ZERO_STEP and np.isfinite(t_own):
                # bound flip, no basis change
                self.beta -= a * t_own
                self.status_col[e] = AT_UP if direction == +1 else AT_LO
                self.value[e] = self.upper[e] if direction == +1 else self.lower[e]
                self._note_step(t_own)
                continue
            if not np.isfinite(t_rows):
                return UNBOUNDED
            r = self._leaving_row(ratios, t_rows)
            hits_lower = a[r] > 0
            self._note_step(t_rows)
            self._pivot(r, e, t_rows, direction, AT_LO if hits_lower else AT_UP)

    def _leaving_row(self, ratios: np.ndarray, t: float) -> int:
        ties = np.flatnonzero(ratios <= t + ZERO_STEP)
        if self.bland:
            return int(ties[np.argmin(self.basis[ties])])
        return int(ties[0])

    def _note_step(self, t: float) -> None:
        if t <= ZERO_STEP:
            self._stall += 1
            if self._stall >= STALL_LIMIT:
                self.bland = True
        else:
            self._stall = 0

    def _pivot(self, r: int, e: int, t: float, direction: int, leave_status: int) -> None:
        col = self.T[:, e].copy()
        leaving = self.basis[r]
        new_val = (self.value[e] if self.status_col[e] != BASIC else self.beta[r]) + direction * t

        self.beta -= direction * t * col
        piv = self.T[r, e]
        self.T[r] /= piv
        others = np.flatnonzero(np.abs(col) > 0)
        for i in others:
            if i != r:
                self.T[i] -= col[i] * self.T[r]
        self.zc -= self.zc[e] * self.T[r, : self.n_total]
        self.zc[e] = 0.0

        self.basis[r] = e
        self.beta[r] = new_val
        self.status_col[e] = BASIC
        self.status_col[leaving] = leave_status
        bound = self.lower[leaving] if leave_status == AT_LO else self.upper[leaving]
        self.value[leaving] = bound if np.isfinite(bound) else 0.0

    def _dual(self) -> str:
        limit = 20000 + 200 * (self.m + self.n_total)
        steps = 0
        while True:
            steps += 1
            self.iterations += 1
            if steps > limit:
                raise NumericalFailureError("dual simplex iteration limit")
            viol, r = self._max_violation()
            if viol <= FEAS_TOL:
                return OPTIMAL
            b = self.basis[r]
            below = self.beta[r] < self.lower[b]
            target = self.lower[b] if below else self.upper[b]
            leave_status = AT_LO if below else AT_UP
            row = self.T[r, : self.n_total]

            if below:
                elig = ((self.status_col == AT_LO) & (row < -PIVOT_TOL)) | (
                    (self.status_col == AT_UP) & (row > PIVOT_TOL)
                )
            else:
                elig = ((self.status_col == AT_LO) & (row > PIVOT_TOL)) | (
                    (self.status_col == AT_UP) & (row < -PIVOT_TOL)
                )
            elig &= self.upper - self.lower > ZERO_STEP
            idx = np.flatnonzero(elig)
            if len(idx) == 0:
                return INFEASIBLE
            with np.errstate(divide="ignore"):
                ratios = np.abs(self.zc[idx] / row[idx])
            e = int(idx[np.argmin(ratios)]) if not self.bland else int(idx[0])

            direction = +1 if self.status_col[e] == AT_LO else -1
            t = (self.beta[r] - target) / (direction * self.T[r, e])
            self._note_step(t)
            self._pivot(r, e, t, direction, leave_status)
