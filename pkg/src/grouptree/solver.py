"""Branch-and-bound over the tree-training integer programs.

Two engines share one result contract:

* a structured search used for models produced by ``build_model``: it
  branches on the integral feature-selection bits, propagates the one-group
  implications, and closes a node by exact enumeration of the remaining
  assignments once that is small enough (tests at leaf-adjacent nodes are
  completed in closed form for each assignment);
* a generic LP-driven search for any model (e.g. parsed from MPS): most
  fractional declared variable, best-bound node order with depth-first
  plunging, bounds from the dense simplex.

In both engines bounds are monotone along the search tree and the incumbent
is a feasible integral assignment, so ``optimal`` results carry a proof
within the configured gap.
"""

from __future__ import annotations

import heapq
import logging
import time
from dataclasses import dataclass, field
from math import ceil, floor, prod

import numpy as np

from . import simplex
from .encoding import GroupSchema
from .errors import (
    FractionalSelectionError,
    InfeasibleError,
    NumericalFailureError,
    TimeLimitNoIncumbentError,
)
from .model import MilpModel
from .simplex import BoundedSimplex
from .topology import TreeTopology
from .tree import DecisionTree

log = logging.getLogger("grouptree.solver")

OPTIMAL = "optimal"
FEASIBLE_TIME_LIMIT = "feasible_time_limit"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"

ENUM_BUDGET = 4096
ENUM_BUDGET_CONSTRAINED = 20000


@dataclass(frozen=True)
class SolveConfig:
    time_limit: float = 1800.0
    absolute_gap: float | None = None  # auto: 0.999 for integer objectives, else 1e-6
    integrality_tolerance: float = 1e-6
    node_limit: int | None = None
    seed: int = 0
    log_progress: bool = False
    callback: object = None  # callable(dict) per processed node

    def gap_for(self, model: MilpModel) -> float:
        if self.absolute_gap is not None:
            return self.absolute_gap
        return 0.999 if model.objective_is_integral() else 1e-6


@dataclass
class SolveResult:
    status: str
    objective: float | None
    best_bound: float
    assignment: dict[str, float] = field(default_factory=dict)
    nodes_processed: int = 0
    lp_iterations: int = 0
    wall_time: float = 0.0

    def as_dict(self, include_assignment: bool = False) -> dict:
        out = {
            "status": self.status,
            "objective": self.objective,
            "best_bound": self.best_bound,
            "nodes_processed": self.nodes_processed,
            "lp_iterations": self.lp_iterations,
        }
        if include_assignment:
            out["assignment"] = dict(sorted(self.assignment.items()))
        return out


def _model_arrays(model: MilpModel):
    index = model.variable_index()
    n = len(model.variables)
    m = len(model.constraints)
    A = np.zeros((m, n))
    senses = []
    rhs = np.zeros(m)
    for r, con in enumerate(model.constraints):
        for name, coef in con.coeffs:
            A[r, index[name]] += coef
        senses.append(con.sense)
        rhs[r] = con.rhs
    obj = np.zeros(n)
    for name, coef in model.objective:
        obj[index[name]] += coef
    if model.sense == "min":
        obj = -obj
    lower = np.array([v.lower for v in model.variables])
    upper = np.array([v.upper for v in model.variables])
    return A, senses, rhs, obj, lower, upper


def solve_lp(model: MilpModel, ignore_integrality: bool = True):
    """Optimal basic solution of the model's continuous relaxation.

    Returns ``(value, assignment, status)`` with status one of ``optimal``,
    ``infeasible``, ``unbounded``; value and assignment are None unless
    optimal.
    """
    del ignore_integrality  # integrality is always dropped here
    A, senses, rhs, obj, lower, upper = _model_arrays(model)
    solver = BoundedSimplex(A, senses, rhs, obj, lower, upper)
    status = solver.solve()
    if status != simplex.OPTIMAL:
        return None, None, status
    x = solver.solution()
    value = float(obj @ x)
    if model.sense == "min":
        value = -value
    assignment = {v.name: float(x[j]) for j, v in enumerate(model.variables)}
    return value, assignment, OPTIMAL


def solve_milp(
    model: MilpModel, config: SolveConfig | None = None, method: str = "auto"
) -> SolveResult:
    """Solve the integer program to proven optimality (or best within limits).

    ``method`` picks the engine: ``auto`` uses the structured search whenever
    the model carries its build structure, ``lp`` forces the generic LP-based
    branch and bound, ``structured`` requires the structure.
    """
    config = config or SolveConfig()
    if method not in ("auto", "structured", "lp"):
        raise ValueError(f"unknown method {method!r}")
    if method == "structured" and model.structure is None:
        raise ValueError("model has no build structure attached")
    if model.structure is not None and method in ("auto", "structured"):
        return _StructuredSearch(model, config).run()
    return _LpBranchAndBound(model, config).run()


def extract_tree(
    result: SolveResult,
    topology: TreeTopology,
    schema: GroupSchema,
    tolerance: float = 1e-6,
) -> DecisionTree:
    """Read the classifier out of a solved assignment."""
    assignment = result.assignment
    tests = {}
    for k in topology.decision_nodes:
        chosen = None
        best_val = -1.0
        for g in range(schema.n_groups):
            val = assignment.get(f"V_{k}_{g}", 0.0)
            if val > best_val + 1e-12:
                best_val = val
                chosen = g
        if chosen is None or best_val < 1.0 - tolerance:
            raise FractionalSelectionError(
                f"no group within tolerance of 1 at node {k} (max {best_val:.6f})"
            )
        subset = frozenset(
            j
            for j in schema.features_of(chosen)
            if assignment.get(f"Z_{k}_{j}", 0.0) > 1.0 - tolerance
        )
        tests[k] = (chosen, subset)
    return DecisionTree(
        topology=topology,
        tests=tests,
        n_features=schema.n_features,
        group_sizes=schema.group_sizes,
    )


# ---------------------------------------------------------------------------
# generic LP-based branch and bound
# ---------------------------------------------------------------------------


class _LpBranchAndBound:
    def __init__(self, model: MilpModel, config: SolveConfig):
        self.model = model
        self.config = config
        self.arrays = _model_arrays(model)
        self.declared = [j for j, v in enumerate(model.variables) if v.is_integer]
        self.minimize = model.sense == "min"

    def _node_lp(self, patch, lower0, upper0):
        """Re-optimize the shared simplex under a node's bound patch.

        The basis stays dual-feasible across bound changes, so a dual restart
        usually suffices; numerical trouble falls back to a fresh solve.
        Returns (solver, status, iterations spent on this node).
        """
        A, senses, rhs, obj, _, _ = self.arrays

        def fresh():
            solver = BoundedSimplex(A, senses, rhs, obj, lower0.copy(), upper0.copy())
            for j, (lo, up) in patch.items():
                solver.set_bounds(j, lo, up)
            status = solver.solve()
            # only a clean phase-2 end leaves re-optimizable costs behind
            self._hot = solver if status == simplex.OPTIMAL else None
            self._hot_patch = dict(patch)
            return solver, status, solver.iterations

        if self._hot is None:
            return fresh()
        solver = self._hot
        for j in self._hot_patch:
            if j not in patch:
                solver.set_bounds(j, lower0[j], upper0[j])
        for j, (lo, up) in patch.items():
            solver.set_bounds(j, lo, up)
        self._hot_patch = dict(patch)
        before = solver.iterations
        try:
            status = solver.resolve_dual()
        except NumericalFailureError:
            return fresh()
        if status == simplex.UNBOUNDED:
            self._hot = None
        return solver, status, solver.iterations - before

    def run(self) -> SolveResult:
        start = time.perf_counter()
        cfg = self.config
        gap = cfg.gap_for(self.model)
        tol = cfg.integrality_tolerance
        A, senses, rhs, obj, lower0, upper0 = self.arrays

        incumbent = None
        incumbent_x = None
        lp_iterations = 0
        nodes = 0
        counter = 0
        heap = [(-np.inf, 0, {})]  # (-bound, -id, bound patch)
        hit_limit = False
        unbounded = False
        self._hot = None
        self._hot_patch = {}

        while heap:
            entry = heapq.heappop(heap)
            neg_bound, _, patch = entry
            parent_bound = -neg_bound
            if incumbent is not None and parent_bound <= incumbent + gap:
                continue
            if time.perf_counter() - start > cfg.time_limit or (
                cfg.node_limit is not None and nodes >= cfg.node_limit
            ):
                hit_limit = True
                heapq.heappush(heap, entry)
                break
            nodes += 1

            solver, status, spent = self._node_lp(patch, lower0, upper0)
            lp_iterations += spent
            if status == simplex.INFEASIBLE:
                continue
            if status == simplex.UNBOUNDED:
                unbounded = True
                break
            x = solver.solution()
            val = float(obj @ x)
            bound = min(val, parent_bound)
            self._emit(nodes, incumbent, bound, start,
                       {"lp_value": val, "parent_bound": parent_bound})
            if incumbent is not None and bound <= incumbent + gap:
                continue

            frac_j, frac_dist = -1, -1.0
            for j in self.declared:
                if abs(x[j] - round(x[j])) > tol:
                    dist = min(x[j] - floor(x[j]), ceil(x[j]) - x[j])
                    if dist > frac_dist + 1e-12:
                        frac_dist = dist
                        frac_j = j
            if frac_j < 0:
                if incumbent is None or val > incumbent:
                    incumbent = val
                    incumbent_x = x.copy()
                continue

            down = dict(patch)
            down[frac_j] = (lower0[frac_j], float(floor(x[frac_j] + tol)))
            up = dict(patch)
            up[frac_j] = (float(ceil(x[frac_j] - tol)), upper0[frac_j])
            prefer_up = x[frac_j] - floor(x[frac_j]) >= 0.5
            first, second = (down, up) if prefer_up else (up, down)
            counter += 1
            heapq.heappush(heap, (-bound, -counter, first))
            counter += 1
            heapq.heappush(heap, (-bound, -counter, second))

        elapsed = time.perf_counter() - start
        if unbounded:
            return SolveResult(UNBOUNDED, None, np.inf, {}, nodes, lp_iterations, elapsed)
        open_bound = max((-b for b, _, _ in heap), default=-np.inf)
        sign = -1.0 if self.minimize else 1.0
        if incumbent is None:
            if hit_limit:
                raise TimeLimitNoIncumbentError(
                    f"no feasible solution within limits ({nodes} nodes)"
                )
            return SolveResult(
                INFEASIBLE, None, -np.inf, {}, nodes, lp_iterations, elapsed
            )
        assignment = {
            v.name: float(incumbent_x[j]) for j, v in enumerate(self.model.variables)
        }
        if hit_limit:
            bound = max(incumbent, open_bound)
            return SolveResult(
                FEASIBLE_TIME_LIMIT,
                sign * incumbent,
                sign * bound,
                assignment,
                nodes,
                lp_iterations,
                elapsed,
            )
        return SolveResult(
            OPTIMAL,
            sign * incumbent,
            sign * incumbent,
            assignment,
            nodes,
            lp_iterations,
            elapsed,
        )

    def _emit(self, node, incumbent, bound, start, extra=None):
        _emit_progress(self.config, node, incumbent, bound, start, extra)


def _emit_progress(config, node, incumbent, bound, start, extra=None):
    if not (config.log_progress or config.callback):
        return
    elapsed = time.perf_counter() - start
    inc = "-" if incumbent is None else f"{float(incumbent):.6g}"
    gap = "-" if incumbent is None else f"{bound - float(incumbent):.6g}"
    if config.log_progress:
        log.info(
            "node=%d incumbent=%s bound=%.6g gap=%s time=%.2f",
            node, inc, bound, gap, elapsed,
        )
    if config.callback:
        payload = {"node": node, "incumbent": incumbent, "bound": bound, "time": elapsed}
        if extra:
            payload.update(extra)
        config.callback(payload)


# ---------------------------------------------------------------------------
# structured search for built models
# ---------------------------------------------------------------------------


class _StructuredSearch:
    """Branch over the integral feature bits of a built model.

    A search node is a box of per-(decision node, feature) 0/1 bounds on the
    branched (non-leaf-adjacent) nodes.  Fixing a bit to 1 pins that node's
    group, which zeroes every other group's bits there; anchored nodes must
    keep their group's anchor bit set.  Once the number of remaining test
    assignments at the branched nodes is at most a budget, the node is closed
    by enumerating them; for each assignment the leaf-adjacent tests have a
    closed-form optimum, so the enumeration is exact.
    """

    def __init__(self, model: MilpModel, config: SolveConfig):
        st = model.structure
        self.model = model
        self.config = config
        self.data = st.data
        self.topo = st.topology
        self.bcfg = st.config
        self.schema = st.data.schema

        self.decl = sorted(set(self.topo.decision_nodes) - set(self.topo.leaf_adjacent))
        self.decl_pos = {k: p for p, k in enumerate(self.decl)}
        self.n_decl = len(self.decl)
        self.d = self.schema.n_features
        self.n_groups = self.schema.n_groups
        self.labels = self.data.labels.astype(np.int8)
        self.n = self.data.n_samples

        # feature id of each sample within each group
        self.fidx = np.zeros((self.n, self.n_groups), dtype=np.int64)
        for g in range(self.n_groups):
            feats = np.array(self.schema.features_of(g))
            sub = self.data.matrix[:, feats]
            self.fidx[:, g] = feats[np.argmax(sub, axis=1)]
        self.anchor = np.array(
            [self.schema.anchor_feature(g) for g in range(self.n_groups)]
        )
        self.group_of = np.array([self.schema.group_of(j) for j in range(self.d)])

        weight = self.bcfg.class_weight
        self.acc_weight = int(weight) if weight.denominator == 1 else weight
        self.mode = self.bcfg.mode
        n_neg = int((self.labels == -1).sum())
        n_pos = self.n - n_neg
        if self.mode == "accuracy":
            self.sample_w = np.where(self.labels == 1, 1.0, float(weight))
            self.trivial_bound = float(n_pos + float(weight) * n_neg)
            self.floor = None
            self.floor_axis_size = 0
        elif self.mode == "max_sensitivity":
            self.sample_w = (self.labels == 1).astype(float)
            self.trivial_bound = float(n_pos)
            self.floor = ceil(self.bcfg.min_specificity * n_neg)
            self.floor_axis_size = n_neg + 1
        else:
            self.sample_w = (self.labels == -1).astype(float)
            self.trivial_bound = float(n_neg)
            self.floor = ceil(self.bcfg.min_sensitivity * n_pos)
            self.floor_axis_size = n_pos + 1
        self.enum_budget = (
            ENUM_BUDGET if self.mode == "accuracy" else ENUM_BUDGET_CONSTRAINED
        )

    # -- search loop --------------------------------------------------------

    def run(self) -> SolveResult:
        start = time.perf_counter()
        cfg = self.config
        gap = cfg.gap_for(self.model)
        deadline = start + cfg.time_limit

        incumbent_val = None
        incumbent_tests = None
        nodes = 0
        counter = 0
        zlo, zhi = self._root_box()
        heap = [(-self.trivial_bound, 0, zlo, zhi)]
        hit_limit = False

        while heap:
            entry = heapq.heappop(heap)
            neg_bound, _, zlo, zhi = entry
            bound = -neg_bound
            if incumbent_val is not None and bound <= float(incumbent_val) + gap:
                continue
            if time.perf_counter() > deadline or (
                cfg.node_limit is not None and nodes >= cfg.node_limit
            ):
                hit_limit = True
                heapq.heappush(heap, entry)
                break
            nodes += 1

            if not self._propagate(zlo, zhi):
                continue
            bound = min(bound, self._dp_bound(zlo, zhi))
            _emit_progress(cfg, nodes, incumbent_val, bound, start)
            if incumbent_val is not None and bound <= float(incumbent_val) + gap:
                continue

            count = prod(
                self._node_option_count(p, k, zlo, zhi)
                for p, k in enumerate(self.decl)
            )
            if count <= self.enum_budget:
                try:
                    out = self._closure(zlo, zhi)
                except InfeasibleError:
                    continue
                if out is not None:
                    val, tests = out
                    if incumbent_val is None or val > incumbent_val:
                        incumbent_val = val
                        incumbent_tests = tests
                continue

            p_star, j_star = self._branch_bit(zlo, zhi)
            child_hi = zhi.copy()
            child_hi[p_star, j_star] = 0
            counter += 1
            heapq.heappush(heap, (-bound, -counter, zlo.copy(), child_hi))
            child_lo = zlo.copy()
            child_lo[p_star, j_star] = 1  # pushed last: plunges first on ties
            counter += 1
            heapq.heappush(heap, (-bound, -counter, child_lo, zhi.copy()))

        elapsed = time.perf_counter() - start
        if incumbent_val is None:
            if hit_limit:
                raise TimeLimitNoIncumbentError("time limit before any incumbent")
            return SolveResult(INFEASIBLE, None, -np.inf, {}, nodes, 0, elapsed)

        obj = float(incumbent_val)
        if hit_limit:
            rest = max((-b for b, _, _, _ in heap), default=-np.inf)
            return SolveResult(
                FEASIBLE_TIME_LIMIT,
                obj,
                max(obj, rest),
                self._assignment_from_tests(incumbent_tests),
                nodes,
                0,
                elapsed,
            )
        return SolveResult(
            OPTIMAL, obj, obj, self._assignment_from_tests(incumbent_tests),
            nodes, 0, elapsed,
        )

    def _branch_bit(self, zlo, zhi):
        for p in range(self.n_decl):
            undecided = np.flatnonzero((zlo[p] == 0) & (zhi[p] == 1))
            if undecided.size:
                return p, int(undecided[0])
        raise AssertionError("no undecided bit despite enumeration budget overflow")

    # -- bound boxes ----------------------------------------------------------

    def _root_box(self):
        zlo = np.zeros((self.n_decl, self.d), dtype=np.int8)
        zhi = np.ones((self.n_decl, self.d), dtype=np.int8)
        return zlo, zhi

    def _anchored(self, k: int) -> bool:
        return self.bcfg.anchor and k in self.topo.anchor_eligible

    def _propagate(self, zlo, zhi) -> bool:
        for p, k in enumerate(self.decl):
            ones = np.flatnonzero(zlo[p] == 1)
            if ones.size:
                groups = set(self.group_of[ones].tolist())
                if len(groups) > 1:
                    return False
                g = groups.pop()
                inside = np.zeros(self.d, dtype=bool)
                inside[list(self.schema.features_of(g))] = True
                zhi[p, ~inside] = 0
                if self._anchored(k):
                    a = self.anchor[g]
                    if zhi[p, a] == 0:
                        return False
                    zlo[p, a] = 1
            if np.any(zlo[p] > zhi[p]):
                return False
            if self._anchored(k) and not ones.size:
                if all(zhi[p, self.anchor[g]] == 0 for g in range(self.n_groups)):
                    return False
        return True

    def _node_option_count(self, p: int, k: int, zlo, zhi) -> int:
        anchored = self._anchored(k)
        ones = np.flatnonzero(zlo[p] == 1)
        if ones.size:
            g = int(self.group_of[ones[0]])
            feats = self.schema.features_of(g)
            free = sum(1 for j in feats if zlo[p, j] == 0 and zhi[p, j] == 1)
            return 1 << free
        total = 0
        for g in range(self.n_groups):
            feats = self.schema.features_of(g)
            if anchored:
                if zhi[p, self.anchor[g]] == 0:
                    continue
                free = sum(
                    1 for j in feats if j != self.anchor[g] and zhi[p, j] == 1
                )
            else:
                free = sum(1 for j in feats if zhi[p, j] == 1)
            total += 1 << free
        return max(total, 1)

    def _node_options(self, p: int, k: int, zlo, zhi):
        """Deterministic (group, subset tuple) assignments consistent with the box."""
        anchored = self._anchored(k)
        ones = np.flatnonzero(zlo[p] == 1)
        groups = (
            [int(self.group_of[ones[0]])] if ones.size else list(range(self.n_groups))
        )
        options = []
        emitted_empty = False
        for g in groups:
            feats = self.schema.features_of(g)
            fixed = [j for j in feats if zlo[p, j] == 1]
            if anchored:
                a = int(self.anchor[g])
                if zhi[p, a] == 0:
                    continue
                if a not in fixed:
                    fixed = sorted(fixed + [a])
            free = [j for j in feats if zhi[p, j] == 1 and j not in fixed]
            size = len(feats)
            for bits in range(1 << len(free)):
                subset = list(fixed)
                rest, t = bits, 0
                while rest:
                    if rest & 1:
                        subset.append(free[t])
                    rest >>= 1
                    t += 1
                if self.bcfg.forbid_trivial_branch and (
                    len(subset) == 0 or len(subset) == size
                ):
                    continue
                if not subset:
                    if emitted_empty:
                        continue  # the all-right test does not depend on the group
                    emitted_empty = True
                options.append((g, tuple(sorted(subset))))
        return options

    # -- per-sample relaxation bound ------------------------------------------

    def _dp_bound(self, zlo, zhi) -> float:
        """Valid upper bound: each sample routed as well as its boxes allow."""
        big = 2.0

        def rec(child) -> np.ndarray:
            kind, kk = child
            if kind == "leaf":
                match = self.labels == (1 if kk % 2 == 0 else -1)
                return np.where(match, big, 0.0)
            hl = rec(self.topo.children[kk][0])
            hr = rec(self.topo.children[kk][1])
            lo, hi = self._branch_interval(kk, zlo, zhi)
            best = None
            for cand in (lo, hi, np.clip(hl, lo, hi), np.clip(1.0 - hr, lo, hi)):
                val = np.minimum(cand, hl) + np.minimum(1.0 - cand, hr)
                best = val if best is None else np.maximum(best, val)
            return best

        h = np.minimum(rec(("node", self.topo.root)), 1.0)
        return float(np.dot(self.sample_w, h))

    def _branch_interval(self, k: int, zlo, zhi):
        if k not in self.decl_pos:
            return np.zeros(self.n), np.ones(self.n)
        p = self.decl_pos[k]
        ones = np.flatnonzero(zlo[p] == 1)
        if ones.size:
            g = int(self.group_of[ones[0]])
            f = self.fidx[:, g]
            return zlo[p, f].astype(float), zhi[p, f].astype(float)
        hi = np.max(zhi[p][self.fidx], axis=1).astype(float)
        lo = np.zeros(self.n)
        if self._anchored(k):
            allowed = [g for g in range(self.n_groups) if zhi[p, self.anchor[g]] == 1]
            if allowed:
                has_anchor = np.stack(
                    [self.data.matrix[:, self.anchor[g]] for g in allowed]
                )
                lo = np.min(has_anchor, axis=0).astype(float)
        return lo, hi

    # -- leaf-adjacent completions ----------------------------------------------

    def _routed_counts(self, mask):
        idx = np.flatnonzero(mask)
        pos_idx = idx[self.labels[idx] == 1]
        neg_idx = idx[self.labels[idx] == -1]
        pos_cnt = np.zeros(self.d, dtype=np.int64)
        neg_cnt = np.zeros(self.d, dtype=np.int64)
        for g in range(self.n_groups):
            if pos_idx.size:
                pos_cnt += np.bincount(self.fidx[pos_idx, g], minlength=self.d)
            if neg_idx.size:
                neg_cnt += np.bincount(self.fidx[neg_idx, g], minlength=self.d)
        return pos_cnt, neg_cnt

    def _leaf_parent_best(self, k: int, mask):
        """Exact best (value, (group, subset)) at a leaf-adjacent node.

        Selected features send their samples to the left (negative) leaf, so
        each feature independently earns max(right gain, left gain).
        """
        pos_cnt, neg_cnt = self._routed_counts(mask)
        w = self.acc_weight
        best_val, best = None, None
        for g in range(self.n_groups):
            feats = self.schema.features_of(g)
            if self.bcfg.forbid_trivial_branch and len(feats) == 1:
                continue
            subset, val, deltas = [], 0, []
            for j in feats:
                left_gain = w * int(neg_cnt[j])
                right_gain = int(pos_cnt[j])
                if left_gain > right_gain:
                    subset.append(j)
                    val += left_gain
                else:
                    val += right_gain
                deltas.append(left_gain - right_gain)
            if self.bcfg.forbid_trivial_branch:
                if len(subset) == 0:
                    t = max(range(len(feats)), key=lambda t: (deltas[t], -t))
                    subset, val = [feats[t]], val + deltas[t]
                elif len(subset) == len(feats):
                    t = max(range(len(feats)), key=lambda t: (-deltas[t], -t))
                    subset = [j for j in subset if j != feats[t]]
                    val -= deltas[t]
            if best_val is None or val > best_val:
                best_val, best = val, (g, tuple(sorted(subset)))
        if best is None:
            raise InfeasibleError(f"no admissible test at node {k}")
        return best_val, best

    def _leaf_parent_table(self, k: int, mask):
        """Constrained modes: best objective per exact floored-class count.

        Returns ``(table, choices)``: ``table[t]`` is the best count of the
        maximized class when exactly ``t`` floored-class samples are correct
        under this node; ``choices[t]`` is ``{k: (group, subset)}``.
        """
        pos_cnt, neg_cnt = self._routed_counts(mask)
        if self.mode == "max_sensitivity":
            key_cnt, val_cnt = neg_cnt, pos_cnt  # floored: TN, maximized: TP
        else:
            key_cnt, val_cnt = pos_cnt, neg_cnt
        size = self.floor_axis_size
        best = np.full(size, -np.inf)
        best_choice: list = [None] * size
        for g in range(self.n_groups):
            feats = self.schema.features_of(g)
            if self.bcfg.forbid_trivial_branch:
                table, subsets = self._group_table_explicit(feats, key_cnt, val_cnt)
            else:
                table, subsets = self._group_table_dp(feats, key_cnt, val_cnt)
            if table is None:
                continue
            upd = table > best
            for t in np.flatnonzero(upd):
                best[t] = table[t]
                best_choice[t] = {k: (g, subsets(int(t)))}
        return best, best_choice

    def _group_table_dp(self, feats, key_cnt, val_cnt):
        """Per-feature knapsack over the floored count; backtrack on demand."""
        sens = self.mode == "max_sensitivity"
        size = self.floor_axis_size
        tables = [np.full(size, -np.inf)]
        tables[0][0] = 0.0

        def advance(prev, kj, vj):
            if sens:
                take = _shift(prev, kj, size)       # j selected: left leaf, +TN
                skip = prev + vj                    # j skipped: right leaf, +TP
            else:
                take = prev + vj                    # j selected: left leaf, +TN
                skip = _shift(prev, kj, size)       # j skipped: right leaf, +TP
            return take, skip

        for j in feats:
            take, skip = advance(tables[-1], int(key_cnt[j]), int(val_cnt[j]))
            tables.append(np.maximum(take, skip))

        def subsets(t: int):
            subset = []
            cur = t
            for pos in range(len(feats) - 1, -1, -1):
                j = feats[pos]
                prev = tables[pos]
                kj, vj = int(key_cnt[j]), int(val_cnt[j])
                final = tables[pos + 1][cur]
                if sens:
                    took = (
                        cur - kj >= 0
                        and np.isfinite(prev[cur - kj])
                        and prev[cur - kj] == final
                    )
                    if took:
                        subset.append(j)
                        cur -= kj
                else:
                    took = np.isfinite(prev[cur]) and prev[cur] + vj == final
                    if took:
                        subset.append(j)
                    else:
                        cur -= kj
            return tuple(sorted(subset))

        return tables[-1], subsets

    def _group_table_explicit(self, feats, key_cnt, val_cnt):
        """Subset enumeration variant, used when trivial tests are forbidden."""
        if len(feats) == 1:
            return None, None
        if len(feats) > 16:
            raise InfeasibleError(
                "constrained mode with forbidden trivial tests is limited to "
                "groups of at most 16 categories"
            )
        sens = self.mode == "max_sensitivity"
        size = self.floor_axis_size
        table = np.full(size, -np.inf)
        chosen: list = [None] * size
        for bits in range(1, (1 << len(feats)) - 1):
            key = val = 0
            subset = []
            for t, j in enumerate(feats):
                if bits >> t & 1:
                    subset.append(j)
                    key += int(key_cnt[j]) if sens else 0
                    val += 0 if sens else int(val_cnt[j])
                else:
                    val += int(val_cnt[j]) if sens else 0
                    key += 0 if sens else int(key_cnt[j])
            if val > table[key]:
                table[key] = val
                chosen[key] = tuple(sorted(subset))
        return table, lambda t: chosen[t]

    # -- closure by enumeration ---------------------------------------------------

    def _closure(self, zlo, zhi):
        if self.mode == "accuracy":
            mask = np.ones(self.n, dtype=bool)
            return self._closure_accuracy(("node", self.topo.root), mask, zlo, zhi)
        return self._closure_constrained(zlo, zhi)

    def _subset_mask(self, g: int, subset, mask):
        member = np.zeros(self.d, dtype=bool)
        if subset:
            member[list(subset)] = True
        return member[self.fidx[:, g]] & mask

    def _closure_accuracy(self, child, mask, zlo, zhi):
        kind, k = child
        if kind == "leaf":
            match = mask & (self.labels == (1 if k % 2 == 0 else -1))
            if k % 2 == 0:
                return int(match.sum()), {}
            return self.acc_weight * int(match.sum()), {}
        if k in self.topo.leaf_adjacent:
            val, choice = self._leaf_parent_best(k, mask)
            return val, {k: choice}
        p = self.decl_pos[k]
        left_child, right_child = self.topo.children[k]
        best_val, best_tests = None, None
        for g, subset in self._node_options(p, k, zlo, zhi):
            go_left = self._subset_mask(g, subset, mask)
            lv, lt = self._closure_accuracy(left_child, go_left, zlo, zhi)
            rv, rt = self._closure_accuracy(right_child, mask & ~go_left, zlo, zhi)
            val = lv + rv
            if best_val is None or val > best_val:
                best_val = val
                best_tests = {k: (g, subset), **lt, **rt}
        if best_val is None:
            raise InfeasibleError(f"no admissible test at node {k}")
        return best_val, best_tests

    def _closure_constrained(self, zlo, zhi):
        """Best maximized-class count subject to the floored-class minimum."""
        root = self.topo.root
        size = self.floor_axis_size
        best_val, best_tests = None, None

        def table_of(child, mask):
            kind, k = child
            if k in self.topo.leaf_adjacent:
                return self._leaf_parent_table(k, mask)
            pp = self.decl_pos[k]
            lchild, rchild = self.topo.children[k]
            table = np.full(size, -np.inf)
            choice: list = [None] * size
            for g, subset in self._node_options(pp, k, zlo, zhi):
                go_left = self._subset_mask(g, subset, mask)
                lt, lc = table_of(lchild, go_left)
                rt, rc = table_of(rchild, mask & ~go_left)
                for tl in np.flatnonzero(np.isfinite(lt)):
                    merged = _shift(lt[tl] + rt, int(tl), size)
                    for t in np.flatnonzero(merged > table):
                        table[t] = merged[t]
                        choice[t] = {k: (g, subset), **lc[int(tl)], **rc[t - tl]}
            return table, choice

        mask = np.ones(self.n, dtype=bool)
        p = self.decl_pos[root]
        lchild, rchild = self.topo.children[root]
        for g, subset in self._node_options(p, root, zlo, zhi):
            go_left = self._subset_mask(g, subset, mask)
            lt, lc = table_of(lchild, go_left)
            rt, rc = table_of(rchild, mask & ~go_left)
            suff, arg_suff = _suffix_max(rt)
            for tl in np.flatnonzero(np.isfinite(lt)):
                need = max(0, self.floor - int(tl))
                if need >= size or not np.isfinite(suff[need]):
                    continue
                tr = int(arg_suff[need])
                val = lt[tl] + suff[need]
                if best_val is None or val > best_val:
                    best_val = val
                    best_tests = {root: (g, subset), **lc[int(tl)], **rc[tr]}
        if best_val is None:
            return None
        return int(best_val), best_tests

    # -- incumbent assignment ------------------------------------------------------

    def _assignment_from_tests(self, tests) -> dict[str, float]:
        tree = DecisionTree(
            topology=self.topo,
            tests={k: (g, frozenset(s)) for k, (g, s) in tests.items()},
            n_features=self.d,
            group_sizes=self.schema.group_sizes,
        )
        leaves = tree.route_all(self.data.matrix)
        assignment: dict[str, float] = {}
        for k in self.topo.decision_nodes:
            g, subset = tests[k]
            for gg in range(self.n_groups):
                assignment[f"V_{k}_{gg}"] = 1.0 if gg == g else 0.0
            member = set(subset)
            for j in range(self.d):
                assignment[f"Z_{k}_{j}"] = 1.0 if j in member else 0.0
        for var in self.model.variables:
            if var.role != "c":
                continue
            _, i_s, b_s = var.name.split("_")
            assignment[var.name] = 1.0 if leaves[int(i_s)] == int(b_s) else 0.0
        return assignment


def _shift(arr: np.ndarray, amount: int, size: int) -> np.ndarray:
    if amount == 0:
        return arr.copy()
    out = np.full(size, -np.inf)
    out[amount:] = arr[: size - amount]
    return out


def _suffix_max(arr: np.ndarray):
    size = len(arr)
    suff = np.empty(size)
    arg = np.empty(size, dtype=np.int64)
    best_v, best_t = -np.inf, size - 1
    for t in range(size - 1, -1, -1):
        if arr[t] > best_v:
            best_v, best_t = arr[t], t
        suff[t] = best_v
        arg[t] = best_t
    return suff, arg
