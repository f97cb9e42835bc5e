"""Mamdani-style fuzzy rule bases with triangular memberships.

A rule base maps crisp input vectors to a crisp output in four steps:
fuzzify each input against the triangular memberships of its linguistic
variable, combine antecedent memberships with min (AND) or max (OR) into a
rule firing strength, clip each rule's consequent membership at that
strength, and aggregate the clipped shapes by pointwise max over a uniform
grid on the output universe.  The crisp output is the grid centroid
sum(u * mu(u)) / sum(mu(u)); a zero-area aggregate falls back to the
midpoint of the output universe.

Membership functions are parameterised by one half-width per label: label j
of m on [lo, hi] anchors its apex at lo + j * (hi - lo) / (m - 1) and a
half-width w gives the triangle (apex - w, apex, apex + w).  Triangles may
extend past the universe; they are only ever evaluated on the output grid
or at input values, which truncates them naturally.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace

import numpy as np

try:
    from numba import njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a normal install
    HAVE_NUMBA = False

    def njit(*args, **kwargs):
        def wrap(fn):
            return fn

        if args and callable(args[0]):
            return args[0]
        return wrap


AND = "AND"
OR = "OR"

DEFAULT_GRID_POINTS = 1001


def membership(u, mf):
    """Evaluate a triangular membership function.

    Parameters
    ----------
    u : float or array_like
        Point(s) on the variable's universe.
    mf : TriangularMF
        Triangle (a, b, c) with a <= b <= c.  Degenerate sides (a == b or
        b == c) are vertical edges; the apex always has membership 1.

    Returns
    -------
    float or ndarray
        Membership degree(s) in [0, 1].
    """
    scalar = np.isscalar(u) or np.ndim(u) == 0
    u = np.atleast_1d(np.asarray(u, dtype=float))
    a, b, c = mf.a, mf.b, mf.c
    out = np.zeros_like(u)
    if b > a:
        rising = (u >= a) & (u < b)
        out[rising] = (u[rising] - a) / (b - a)
    if c > b:
        falling = (u > b) & (u <= c)
        out[falling] = (u[falling] - c) / (b - c)
    out[u == b] = 1.0
    return float(out[0]) if scalar else out


@dataclass(frozen=True)
class Universe:
    """Closed interval [lo, hi] a linguistic variable lives on."""

    lo: float
    hi: float

    def __post_init__(self):
        if not self.lo < self.hi:
            raise ValueError(f"universe needs lo < hi, got [{self.lo}, {self.hi}]")

    @property
    def span(self) -> float:
        return self.hi - self.lo

    @property
    def midpoint(self) -> float:
        return 0.5 * (self.lo + self.hi)

    def grid(self, n_points: int) -> np.ndarray:
        return np.linspace(self.lo, self.hi, n_points)


@dataclass(frozen=True)
class TriangularMF:
    a: float
    b: float
    c: float

    def __post_init__(self):
        if not (self.a <= self.b <= self.c):
            raise ValueError(f"triangle needs a <= b <= c, got {(self.a, self.b, self.c)}")

    def __call__(self, u):
        return membership(u, self)


@dataclass(frozen=True)
class LinguisticVariable:
    """A named variable with ordered labels and one triangle per label.

    ``fixed`` variables keep their triangles as given and contribute no free
    parameters; otherwise each label contributes one half-width parameter
    and its apex sits on the even anchor grid of the universe.
    """

    name: str
    universe: Universe
    labels: tuple
    mfs: tuple
    fixed: bool = False

    def __post_init__(self):
        object.__setattr__(self, "labels", tuple(self.labels))
        object.__setattr__(self, "mfs", tuple(self.mfs))
        if len(self.labels) == 0:
            raise ValueError(f"variable {self.name!r} has no labels")
        if len(self.labels) != len(self.mfs):
            raise ValueError(
                f"variable {self.name!r}: {len(self.labels)} labels but {len(self.mfs)} mfs"
            )
        if len(set(self.labels)) != len(self.labels):
            raise ValueError(f"variable {self.name!r} has duplicate labels")

    @property
    def n_labels(self) -> int:
        return len(self.labels)

    @property
    def free_param_count(self) -> int:
        return 0 if self.fixed else len(self.labels)

    def anchors(self) -> np.ndarray:
        """Apex positions: evenly spaced over the universe, midpoint if single."""
        m = len(self.labels)
        if m == 1:
            return np.array([self.universe.midpoint])
        return np.linspace(self.universe.lo, self.universe.hi, m)

    def label_index(self, label: str) -> int:
        try:
            return self.labels.index(label)
        except ValueError:
            raise ValueError(f"variable {self.name!r} has no label {label!r}") from None

    @classmethod
    def from_halfwidths(cls, name, universe, labels, halfwidths, fixed=False):
        """Build a variable whose triangles are anchor +/- half-width."""
        labels = tuple(labels)
        halfwidths = np.asarray(halfwidths, dtype=float)
        if halfwidths.shape != (len(labels),):
            raise ValueError(f"need one half-width per label, got {halfwidths.shape}")
        if np.any(halfwidths <= 0):
            raise ValueError("half-widths must be positive")
        if len(labels) == 1:
            anchors = np.array([universe.midpoint])
        else:
            anchors = np.linspace(universe.lo, universe.hi, len(labels))
        mfs = tuple(
            TriangularMF(anc - w, anc, anc + w) for anc, w in zip(anchors, halfwidths)
        )
        return cls(name, universe, labels, mfs, fixed=fixed)


@dataclass(frozen=True)
class Rule:
    """IF <antecedents joined by connective> THEN output IS <consequent label>.

    Antecedents are (input_index, label_index) pairs; the consequent is a
    label index of the single output variable.
    """

    antecedents: tuple
    connective: str
    consequent: int
    included: bool = True

    def __post_init__(self):
        object.__setattr__(self, "antecedents", tuple(tuple(a) for a in self.antecedents))
        if len(self.antecedents) == 0:
            raise ValueError("rule needs at least one antecedent")
        if self.connective not in (AND, OR):
            raise ValueError(f"connective must be {AND!r} or {OR!r}, got {self.connective!r}")


@dataclass(frozen=True)
class ParamVector:
    """Free parameters of a model: membership half-widths, optional noise
    scale, optional per-rule inclusion flags."""

    phi: np.ndarray
    sigma: float = None
    beta: np.ndarray = None

    def __post_init__(self):
        object.__setattr__(self, "phi", np.asarray(self.phi, dtype=float))
        if self.beta is not None:
            object.__setattr__(self, "beta", np.asarray(self.beta, dtype=bool))

    def copy(self) -> "ParamVector":
        return ParamVector(
            self.phi.copy(),
            self.sigma,
            None if self.beta is None else self.beta.copy(),
        )


@dataclass(frozen=True)
class RuleBase:
    inputs: tuple
    output: LinguisticVariable
    rules: tuple

    def __post_init__(self):
        object.__setattr__(self, "inputs", tuple(self.inputs))
        object.__setattr__(self, "rules", tuple(self.rules))
        if len(self.rules) == 0:
            raise ValueError("rule base needs at least one rule")
        names = [v.name for v in self.inputs] + [self.output.name]
        if len(set(names)) != len(names):
            raise ValueError(f"duplicate variable names: {names}")
        for r, rule in enumerate(self.rules):
            for var_idx, lab_idx in rule.antecedents:
                if not 0 <= var_idx < len(self.inputs):
                    raise ValueError(f"rule {r}: input index {var_idx} out of range")
                if not 0 <= lab_idx < self.inputs[var_idx].n_labels:
                    raise ValueError(
                        f"rule {r}: label index {lab_idx} out of range for "
                        f"{self.inputs[var_idx].name!r}"
                    )
            if not 0 <= rule.consequent < self.output.n_labels:
                raise ValueError(f"rule {r}: consequent label index {rule.consequent} out of range")

    @property
    def n_inputs(self) -> int:
        return len(self.inputs)

    @property
    def n_rules(self) -> int:
        return len(self.rules)

    @property
    def variables(self) -> tuple:
        return self.inputs + (self.output,)

    @property
    def free_param_count(self) -> int:
        return sum(v.free_param_count for v in self.variables)

    def param_names(self) -> list:
        """One name per free half-width, inputs first, labels in order."""
        return [
            f"{v.name}.{lab}" for v in self.variables if not v.fixed for lab in v.labels
        ]


def bind_params(base: RuleBase, theta: ParamVector) -> RuleBase:
    """Return a copy of ``base`` with half-widths (and inclusion flags) applied.

    ``theta.phi`` supplies one half-width per free label, inputs first then
    output, labels in declared order; fixed variables keep their triangles.
    ``theta.beta``, when present, sets each rule's ``included`` flag.
    """
    phi = np.asarray(theta.phi, dtype=float)
    if phi.shape != (base.free_param_count,):
        raise ValueError(
            f"expected {base.free_param_count} half-widths, got {phi.shape}"
        )
    if np.any(phi <= 0):
        raise ValueError("half-widths must be positive")

    pos = 0
    new_vars = []
    for var in base.variables:
        if var.fixed:
            new_vars.append(var)
            continue
        widths = phi[pos : pos + var.n_labels]
        pos += var.n_labels
        new_vars.append(
            LinguisticVariable.from_halfwidths(var.name, var.universe, var.labels, widths)
        )

    rules = base.rules
    if theta.beta is not None:
        beta = np.asarray(theta.beta, dtype=bool)
        if beta.shape != (base.n_rules,):
            raise ValueError(f"expected {base.n_rules} inclusion flags, got {beta.shape}")
        rules = tuple(replace(r, included=bool(b)) for r, b in zip(rules, beta))

    return RuleBase(tuple(new_vars[:-1]), new_vars[-1], rules)


# ---------------------------------------------------------------------------
# compiled evaluation


@njit(cache=True)
def _tri(u, a, b, c):
    if u < a or u > c:
        return 0.0
    if u < b:
        return (u - a) / (b - a)
    if u > b:
        return (u - c) / (b - c)
    return 1.0


@njit(cache=True)
def _centroid_kernel(X, ant_ptr, ant_var, ant_slot, conn_or, cons_slot, included,
                     a, b, c, grid, midpoint, out):
    n_rows = X.shape[0]
    n_rules = conn_or.shape[0]
    n_grid = grid.shape[0]
    w = np.empty(n_rules)
    for n in range(n_rows):
        for r in range(n_rules):
            if not included[r]:
                w[r] = 0.0
                continue
            k0, k1 = ant_ptr[r], ant_ptr[r + 1]
            s = ant_slot[k0]
            acc = _tri(X[n, ant_var[k0]], a[s], b[s], c[s])
            for k in range(k0 + 1, k1):
                s = ant_slot[k]
                m = _tri(X[n, ant_var[k]], a[s], b[s], c[s])
                if conn_or[r]:
                    acc = max(acc, m)
                else:
                    acc = min(acc, m)
            w[r] = acc
        num = 0.0
        den = 0.0
        for g in range(n_grid):
            u = grid[g]
            agg = 0.0
            for r in range(n_rules):
                if w[r] > agg:
                    s = cons_slot[r]
                    m = _tri(u, a[s], b[s], c[s])
                    v = m if m < w[r] else w[r]
                    if v > agg:
                        agg = v
            num += u * agg
            den += agg
        out[n] = num / den if den > 0.0 else midpoint


def _centroid_numpy(X, ant_ptr, ant_var, ant_slot, conn_or, cons_slot, included,
                    a, b, c, grid, midpoint, out):
    """Vectorised twin of the jit kernel; same arguments, same results."""
    n_rows = X.shape[0]
    n_rules = conn_or.shape[0]
    w = np.zeros((n_rows, n_rules))
    for r in range(n_rules):
        if not included[r]:
            continue
        ks = range(ant_ptr[r], ant_ptr[r + 1])
        mems = [
            membership(X[:, ant_var[k]], TriangularMF(a[ant_slot[k]], b[ant_slot[k]], c[ant_slot[k]]))
            for k in ks
        ]
        w[:, r] = np.max(mems, axis=0) if conn_or[r] else np.min(mems, axis=0)
    cons = np.stack(
        [membership(grid, TriangularMF(a[s], b[s], c[s])) for s in cons_slot]
    )  # (R, G)
    clipped = np.minimum(w[:, :, None], cons[None, :, :])
    agg = clipped.max(axis=1)  # (N, G)
    den = agg.sum(axis=1)
    num = agg @ grid
    np.divide(num, den, out=out, where=den > 0)
    out[den == 0] = midpoint


class CompiledRuleBase:
    """Structure of a rule base flattened to arrays for fast repeated evaluation.

    Membership triangles enter as per-slot (a, b, c) arrays, one slot per
    (variable, label) pair with inputs first and the output last, so the same
    compiled structure serves any half-width vector.
    """

    def __init__(self, base: RuleBase, grid_points: int = DEFAULT_GRID_POINTS):
        if grid_points < 2:
            raise ValueError("need at least 2 grid points")
        self.base = base
        self.grid = base.output.universe.grid(grid_points)
        self.midpoint = base.output.universe.midpoint

        slot_of = {}
        anchors, fixed_abc, slot_free = [], [], []
        for var in base.variables:
            anc = var.anchors()
            for j, lab in enumerate(var.labels):
                slot_of[(var.name, j)] = len(anchors)
                anchors.append(anc[j])
                fixed_abc.append((var.mfs[j].a, var.mfs[j].b, var.mfs[j].c))
                slot_free.append(not var.fixed)
        self.anchors = np.array(anchors)
        self.slot_free = np.array(slot_free, dtype=bool)
        self._abc_static = np.array(fixed_abc).T.copy()  # (3, S)

        ant_var, ant_slot, ant_ptr = [], [], [0]
        conn_or, cons_slot = [], []
        for rule in base.rules:
            for var_idx, lab_idx in rule.antecedents:
                ant_var.append(var_idx)
                ant_slot.append(slot_of[(base.inputs[var_idx].name, lab_idx)])
            ant_ptr.append(len(ant_var))
            conn_or.append(rule.connective == OR)
            cons_slot.append(slot_of[(base.output.name, rule.consequent)])
        self.ant_var = np.array(ant_var, dtype=np.int64)
        self.ant_slot = np.array(ant_slot, dtype=np.int64)
        self.ant_ptr = np.array(ant_ptr, dtype=np.int64)
        self.conn_or = np.array(conn_or, dtype=np.bool_)
        self.cons_slot = np.array(cons_slot, dtype=np.int64)
        self.included_static = np.array([r.included for r in base.rules], dtype=np.bool_)

    def abc(self, phi=None):
        """Per-slot (a, b, c) arrays; free slots rebuilt from ``phi`` if given."""
        if phi is None:
            return self._abc_static
        phi = np.asarray(phi, dtype=float)
        a, b, c = self._abc_static.copy()
        anc = self.anchors[self.slot_free]
        a[self.slot_free] = anc - phi
        b[self.slot_free] = anc
        c[self.slot_free] = anc + phi
        return np.stack([a, b, c])

    def evaluate(self, X, phi=None, included=None, use_numba=None, fallback=None):
        """Crisp outputs per row.  Rows whose aggregated shape has zero area
        get the output-universe midpoint, or ``fallback`` when given (NaN is
        handy for callers that must detect uncovered points)."""
        X = np.ascontiguousarray(X, dtype=float)
        if X.ndim != 2 or X.shape[1] != self.base.n_inputs:
            raise ValueError(
                f"expected input shape (n, {self.base.n_inputs}), got {X.shape}"
            )
        if included is None:
            included = self.included_static
        else:
            included = np.asarray(included, dtype=np.bool_)
        if not included.any():
            raise ValueError("all rules excluded")
        a, b, c = self.abc(phi)
        out = np.empty(X.shape[0])
        miss = self.midpoint if fallback is None else float(fallback)
        kernel = _centroid_kernel if (HAVE_NUMBA if use_numba is None else use_numba) else _centroid_numpy
        kernel(X, self.ant_ptr, self.ant_var, self.ant_slot, self.conn_or,
               self.cons_slot, included, a, b, c, self.grid, miss, out)
        return out


def infer_batch(base: RuleBase, X, grid_points: int = DEFAULT_GRID_POINTS) -> np.ndarray:
    """Crisp outputs for each row of X (shape (n, n_inputs))."""
    return CompiledRuleBase(base, grid_points).evaluate(X)


def infer(base: RuleBase, x, grid_points: int = DEFAULT_GRID_POINTS) -> float:
    """Crisp output for a single input vector.

    Fuzzify, fire rules (AND=min, OR=max), clip consequents, aggregate by
    pointwise max over the output grid, and take the grid centroid.  A
    zero-area aggregate (no rule fires) returns the output midpoint.
    """
    x = np.asarray(x, dtype=float)
    if x.shape != (base.n_inputs,):
        raise ValueError(f"expected {base.n_inputs} inputs, got shape {x.shape}")
    return float(infer_batch(base, x[None, :], grid_points)[0])


# ---------------------------------------------------------------------------
# JSON round trip


def to_json(base: RuleBase) -> str:
    """Serialise a rule base to the documented JSON schema."""

    def var_obj(v):
        return {
            "name": v.name,
            "universe": [v.universe.lo, v.universe.hi],
            "labels": list(v.labels),
            "mfs": [[mf.a, mf.b, mf.c] for mf in v.mfs],
            "fixed": v.fixed,
        }

    obj = {
        "inputs": [var_obj(v) for v in base.inputs],
        "output": var_obj(base.output),
        "rules": [
            {
                "if": [
                    [base.inputs[vi].name, base.inputs[vi].labels[li]]
                    for vi, li in r.antecedents
                ],
                "connective": r.connective,
                "then": base.output.labels[r.consequent],
                "included": r.included,
            }
            for r in base.rules
        ],
    }
    return json.dumps(obj, indent=2, sort_keys=True)


def from_json(text: str) -> RuleBase:
    """Parse and validate a rule base from its JSON form.

    ``mfs`` may be omitted for non-fixed variables, in which case every
    half-width defaults to the anchor spacing (adjacent triangles overlap).
    """
    obj = json.loads(text)
    for key in ("inputs", "output", "rules"):
        if key not in obj:
            raise ValueError(f"rule base JSON missing {key!r}")

    def parse_var(v):
        for key in ("name", "universe", "labels"):
            if key not in v:
                raise ValueError(f"variable object missing {key!r}")
        uni = Universe(float(v["universe"][0]), float(v["universe"][1]))
        labels = tuple(v["labels"])
        fixed = bool(v.get("fixed", False))
        if "mfs" in v:
            mfs = tuple(TriangularMF(*map(float, m)) for m in v["mfs"])
            return LinguisticVariable(v["name"], uni, labels, mfs, fixed=fixed)
        if fixed:
            raise ValueError(f"fixed variable {v['name']!r} needs explicit mfs")
        default = uni.span / (len(labels) - 1) if len(labels) > 1 else uni.span / 2
        return LinguisticVariable.from_halfwidths(
            v["name"], uni, labels, np.full(len(labels), default)
        )

    inputs = tuple(parse_var(v) for v in obj["inputs"])
    output = parse_var(obj["output"])
    by_name = {v.name: (i, v) for i, v in enumerate(inputs)}

    rules = []
    for r in obj["rules"]:
        ants = []
        for name, label in r["if"]:
            if name not in by_name:
                raise ValueError(f"rule references unknown input {name!r}")
            idx, var = by_name[name]
            ants.append((idx, var.label_index(label)))
        rules.append(
            Rule(
                tuple(ants),
                r.get("connective", AND),
                output.label_index(r["then"]),
                included=bool(r.get("included", True)),
            )
        )
    return RuleBase(inputs, output, tuple(rules))
