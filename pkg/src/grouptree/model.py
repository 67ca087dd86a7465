"""Neutral integer-program representation of the tree-training problem.

``build_model`` lowers (dataset, topology, config) to named variables, linear
rows, and an objective.  The representation is solver- and format-agnostic;
``grouptree.mps`` serializes it and ``grouptree.solver`` optimizes it.

Naming scheme (all deterministic):
  variables  V_<node>_<group>, Z_<node>_<feature>, C_<sample>_<leaf>
  rows       ONEGRP_<node>, LINK_<node>_<feature>,
             LEFT_<sample>_<node>, RIGHT_<sample>_<node>     (aggregated form)
             LEFTB/RIGHTB_<sample>_<node>_<leaf>             (per-leaf form)
             ANCH_<node>_<group>, PICK_<sample>,
             MINPICK/MAXPICK_<node>_<group>, SPEC
Nodes and leaves are 1-based (topology ids); groups, features, and samples
are 0-based (schema/dataset ids).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from math import ceil

from .encoding import EncodedDataset
from .errors import EmptyClassError, InvalidConfigError
from .topology import TreeTopology

MODES = ("accuracy", "max_sensitivity", "max_specificity")


@dataclass(frozen=True)
class BuildConfig:
    """Switches for the model variants.

    The defaults build the tightened form: aggregated routing rows, anchor
    equalities at eligible nodes, wrong-class routing variables dropped, and
    integrality kept only where it is actually needed.
    """

    strengthen: bool = True
    anchor: bool = True
    relax_integrality: bool = True
    drop_unused_c: bool = True
    forbid_trivial_branch: bool = False
    class_weight: Fraction = Fraction(1)
    mode: str = "accuracy"
    min_specificity: Fraction | None = None
    min_sensitivity: Fraction | None = None

    def __post_init__(self):
        object.__setattr__(self, "class_weight", Fraction(self.class_weight))
        if self.class_weight <= 0:
            raise InvalidConfigError("class_weight must be positive")
        if self.mode not in MODES:
            raise InvalidConfigError(f"mode must be one of {MODES}")
        if self.mode == "max_sensitivity":
            if self.min_specificity is None:
                raise InvalidConfigError("max_sensitivity needs min_specificity")
            object.__setattr__(self, "min_specificity", Fraction(self.min_specificity))
            if not 0 <= self.min_specificity <= 1:
                raise InvalidConfigError("min_specificity must be in [0, 1]")
        if self.mode == "max_specificity":
            if self.min_sensitivity is None:
                raise InvalidConfigError("max_specificity needs min_sensitivity")
            object.__setattr__(self, "min_sensitivity", Fraction(self.min_sensitivity))
            if not 0 <= self.min_sensitivity <= 1:
                raise InvalidConfigError("min_sensitivity must be in [0, 1]")

    def as_dict(self) -> dict:
        return {
            "strengthen": self.strengthen,
            "anchor": self.anchor,
            "relax_integrality": self.relax_integrality,
            "drop_unused_c": self.drop_unused_c,
            "forbid_trivial_branch": self.forbid_trivial_branch,
            "class_weight": str(self.class_weight),
            "mode": self.mode,
            "min_specificity": None
            if self.min_specificity is None
            else str(self.min_specificity),
            "min_sensitivity": None
            if self.min_sensitivity is None
            else str(self.min_sensitivity),
        }


@dataclass(frozen=True)
class Variable:
    name: str
    lower: float
    upper: float
    is_integer: bool
    role: str  # "v", "z", "c", or "x" for foreign models


@dataclass(frozen=True)
class Constraint:
    name: str
    coeffs: tuple[tuple[str, float], ...]
    sense: str  # "<=", "=", ">="
    rhs: float


@dataclass(frozen=True)
class ModelStructure:
    """Link back to the problem a model was built from (not serialized)."""

    data: EncodedDataset
    topology: TreeTopology
    config: BuildConfig


@dataclass
class MilpModel:
    name: str
    sense: str  # "max" or "min"
    variables: list[Variable]
    constraints: list[Constraint]
    objective: tuple[tuple[str, float], ...]
    metadata: dict = field(default_factory=dict)
    structure: ModelStructure | None = None

    def variable_index(self) -> dict[str, int]:
        return {v.name: idx for idx, v in enumerate(self.variables)}

    def semantically_equal(self, other: "MilpModel") -> bool:
        """Equality of names, bounds, integrality, rows, and objective.

        Coefficient order within a row is immaterial (serialization is
        column-major while rows are built row-major).
        """
        if self.sense != other.sense or self.variables != other.variables:
            return False
        if len(self.constraints) != len(other.constraints):
            return False
        for a, b in zip(self.constraints, other.constraints):
            if (a.name, a.sense, a.rhs) != (b.name, b.sense, b.rhs):
                return False
            if dict(a.coeffs) != dict(b.coeffs):
                return False
        return dict(self.objective) == dict(other.objective)

    def objective_is_integral(self) -> bool:
        return all(float(c).is_integer() for _, c in self.objective)


def retained_leaf_pairs(data: EncodedDataset, topology: TreeTopology, config: BuildConfig):
    """The (sample, leaf) pairs that carry a routing variable."""
    pairs = []
    for i in range(data.n_samples):
        if config.drop_unused_c:
            leaves = (
                topology.positive_leaves
                if data.labels[i] == 1
                else topology.negative_leaves
            )
        else:
            leaves = tuple(topology.leaves)
        for b in leaves:
            pairs.append((i, b))
    return pairs


def build_model(
    data: EncodedDataset, topology: TreeTopology, config: BuildConfig | None = None
) -> MilpModel:
    """Lower the training problem to a mixed-integer program.

    Per decision node, exactly one group is selected and a feature subset of
    it; a sample goes left when its active feature is in the subset.  Routing
    variables tie samples to leaves; the objective counts samples routed to a
    leaf of their own class, negatives weighted by ``class_weight``.
    """
    config = config or BuildConfig()
    schema = data.schema
    n, d = data.n_samples, data.n_features
    n_pos = int((data.labels == 1).sum())
    n_neg = n - n_pos
    if config.mode != "accuracy" and (n_pos == 0 or n_neg == 0):
        raise EmptyClassError(f"mode {config.mode} needs both classes present")

    variables: list[Variable] = []
    # With the accuracy objective, integrality can be dropped everywhere
    # except the feature bits above the leaf-adjacent level.  The floored
    # modes lose that property (a fractional leaf-level test can beat every
    # integral one while meeting the floor), so there all z stay integral.
    integer_z_nodes = set(topology.decision_nodes) - set(topology.leaf_adjacent)
    relax_leaf_z = config.relax_integrality and config.mode == "accuracy"
    for k in topology.decision_nodes:
        for g in range(schema.n_groups):
            variables.append(
                Variable(f"V_{k}_{g}", 0.0, 1.0, not config.relax_integrality, "v")
            )
    for k in topology.decision_nodes:
        for j in range(d):
            is_int = (
                (not config.relax_integrality)
                or (k in integer_z_nodes)
                or not relax_leaf_z
            )
            variables.append(Variable(f"Z_{k}_{j}", 0.0, 1.0, is_int, "z"))
    pairs = retained_leaf_pairs(data, topology, config)
    for i, b in pairs:
        variables.append(
            Variable(f"C_{i}_{b}", 0.0, 1.0, not config.relax_integrality, "c")
        )
    retained = set(pairs)

    constraints: list[Constraint] = []
    for k in topology.decision_nodes:
        coeffs = tuple((f"V_{k}_{g}", 1.0) for g in range(schema.n_groups))
        constraints.append(Constraint(f"ONEGRP_{k}", coeffs, "=", 1.0))
    for k in topology.decision_nodes:
        for j in range(d):
            g = schema.group_of(j)
            constraints.append(
                Constraint(
                    f"LINK_{k}_{j}",
                    ((f"Z_{k}_{j}", 1.0), (f"V_{k}_{g}", -1.0)),
                    "<=",
                    0.0,
                )
            )

    def branch_terms(i: int, k: int) -> tuple[tuple[str, float], ...]:
        # The left-branch indicator for sample i at node k, as z-coefficients.
        return tuple(
            (f"Z_{k}_{j}", 1.0) for j in range(d) if data.matrix[i, j] == 1
        )

    if config.strengthen:
        for i in range(n):
            for k in topology.decision_nodes:
                left_bs = [
                    b for b in topology.leaves
                    if (i, b) in retained and k in topology.left_path[b]
                ]
                right_bs = [
                    b for b in topology.leaves
                    if (i, b) in retained and k in topology.right_path[b]
                ]
                z_terms = branch_terms(i, k)
                if left_bs:
                    coeffs = tuple((f"C_{i}_{b}", 1.0) for b in left_bs) + tuple(
                        (name, -coef) for name, coef in z_terms
                    )
                    constraints.append(Constraint(f"LEFT_{i}_{k}", coeffs, "<=", 0.0))
                if right_bs:
                    coeffs = tuple((f"C_{i}_{b}", 1.0) for b in right_bs) + z_terms
                    constraints.append(Constraint(f"RIGHT_{i}_{k}", coeffs, "<=", 1.0))
    else:
        for i in range(n):
            for b in topology.leaves:
                if (i, b) not in retained:
                    continue
                z_cache = {}
                for k in sorted(topology.left_path[b]):
                    z_terms = z_cache.setdefault(k, branch_terms(i, k))
                    coeffs = ((f"C_{i}_{b}", 1.0),) + tuple(
                        (name, -coef) for name, coef in z_terms
                    )
                    constraints.append(
                        Constraint(f"LEFTB_{i}_{k}_{b}", coeffs, "<=", 0.0)
                    )
                for k in sorted(topology.right_path[b]):
                    z_terms = z_cache.setdefault(k, branch_terms(i, k))
                    coeffs = ((f"C_{i}_{b}", 1.0),) + z_terms
                    constraints.append(
                        Constraint(f"RIGHTB_{i}_{k}_{b}", coeffs, "<=", 1.0)
                    )
        if not config.drop_unused_c:
            for i in range(n):
                coeffs = tuple((f"C_{i}_{b}", 1.0) for b in topology.leaves)
                constraints.append(Constraint(f"PICK_{i}", coeffs, "=", 1.0))

    if config.anchor:
        for k in sorted(topology.anchor_eligible):
            for g in range(schema.n_groups):
                j = schema.anchor_feature(g)
                constraints.append(
                    Constraint(
                        f"ANCH_{k}_{g}",
                        ((f"Z_{k}_{j}", 1.0), (f"V_{k}_{g}", -1.0)),
                        "=",
                        0.0,
                    )
                )

    if config.forbid_trivial_branch:
        for k in topology.decision_nodes:
            for g in range(schema.n_groups):
                feats = schema.features_of(g)
                z_terms = tuple((f"Z_{k}_{j}", 1.0) for j in feats)
                constraints.append(
                    Constraint(
                        f"MINPICK_{k}_{g}",
                        z_terms + ((f"V_{k}_{g}", -1.0),),
                        ">=",
                        0.0,
                    )
                )
                constraints.append(
                    Constraint(
                        f"MAXPICK_{k}_{g}",
                        z_terms + ((f"V_{k}_{g}", -(len(feats) - 1.0)),),
                        "<=",
                        0.0,
                    )
                )

    pos_terms = tuple(
        (f"C_{i}_{b}", 1.0)
        for i in range(n)
        if data.labels[i] == 1
        for b in topology.positive_leaves
    )
    neg_names = tuple(
        f"C_{i}_{b}"
        for i in range(n)
        if data.labels[i] == -1
        for b in topology.negative_leaves
    )
    weight = float(config.class_weight)
    if config.mode == "accuracy":
        objective = pos_terms + tuple((name, weight) for name in neg_names)
    elif config.mode == "max_sensitivity":
        floor = ceil(config.min_specificity * n_neg)
        constraints.append(
            Constraint("SPEC", tuple((name, 1.0) for name in neg_names), ">=", float(floor))
        )
        objective = pos_terms
    else:  # max_specificity
        floor = ceil(config.min_sensitivity * n_pos)
        constraints.append(Constraint("SPEC", pos_terms, ">=", float(floor)))
        objective = tuple((name, 1.0) for name in neg_names)

    metadata = {
        "topology": topology.name,
        "shape": topology.shape_text(),
        "n_samples": n,
        "n_features": d,
        "n_groups": schema.n_groups,
        "config": config.as_dict(),
    }
    return MilpModel(
        name=f"GT_{topology.name}_N{n}_d{d}",
        sense="max",
        variables=variables,
        constraints=constraints,
        objective=objective,
        metadata=metadata,
        structure=ModelStructure(data=data, topology=topology, config=config),
    )


def model_stats(model: MilpModel) -> dict:
    """Row/column/integrality/nonzero counts of a model."""
    return {
        "rows": len(model.constraints),
        "columns": len(model.variables),
        "integer_columns": sum(1 for v in model.variables if v.is_integer),
        "nonzeros": sum(len(c.coeffs) for c in model.constraints),
    }
