"""Dense linear programming with exact dual readout.

The solver is a two-phase tableau simplex over the backend pivot kernel.
Dense tableaus are deliberate: every model built here has at most a few
thousand nonzeros, and a dense ndarray keeps the pivot loop branch-free and
jit-friendly. Duals come from the artificial columns of the final tableau,
which is what the equilibrium extraction code relies on.

Models are built by name through LpModel, solved through solve_lp (which
handles free variables, shifted lower bounds, and upper-bound rows), and can
round-trip through a small LP text format for inspection and the CLI.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import backend

INF = float("inf")
PIVOT_TOL = 1e-9
FEAS_TOL = 1e-7

_SENSE_CODE = {"<=": -1, "=": 0, ">=": 1}


class SimplexStall(RuntimeError):
    """The pivot loop hit its iteration cap without concluding."""


@dataclass
class LpModel:
    name: str = "lp"
    sense: str = "min"
    obj_const: float = 0.0
    var_names: list = field(default_factory=list)
    var_lb: list = field(default_factory=list)
    var_ub: list = field(default_factory=list)
    obj: dict = field(default_factory=dict)          # var id -> coefficient
    row_names: list = field(default_factory=list)
    row_coeffs: list = field(default_factory=list)   # per row, var id -> coefficient
    row_senses: list = field(default_factory=list)   # "<=", "=", ">="
    row_rhs: list = field(default_factory=list)
    _var_ids: dict = field(default_factory=dict, repr=False)

    @property
    def n_vars(self) -> int:
        return len(self.var_names)

    @property
    def n_rows(self) -> int:
        return len(self.row_names)

    def add_var(self, name: str, lb: float = 0.0, ub: float = INF) -> int:
        if name in self._var_ids:
            raise ValueError(f"duplicate variable {name!r}")
        if lb == -INF and ub < INF:
            raise ValueError(f"{name}: upper-bounded free variables are not supported")
        if lb > ub:
            raise ValueError(f"{name}: empty bound interval [{lb}, {ub}]")
        self._var_ids[name] = len(self.var_names)
        self.var_names.append(name)
        self.var_lb.append(float(lb))
        self.var_ub.append(float(ub))
        return self._var_ids[name]

    def free_var(self, name: str) -> int:
        return self.add_var(name, lb=-INF)

    def set_objective(self, sense: str, coeffs: dict, const: float = 0.0):
        if sense not in ("min", "max"):
            raise ValueError(f"objective sense must be min or max, not {sense!r}")
        self.sense = sense
        self.obj = {int(j): float(c) for j, c in coeffs.items()}
        self.obj_const = float(const)

    def add_row(self, name: str, coeffs: dict, sense: str, rhs: float) -> int:
        if sense not in _SENSE_CODE:
            raise ValueError(f"row sense must be one of {sorted(_SENSE_CODE)}, not {sense!r}")
        if name in self.row_names:
            raise ValueError(f"duplicate row {name!r}")
        self.row_names.append(name)
        self.row_coeffs.append({int(j): float(c) for j, c in coeffs.items()})
        self.row_senses.append(sense)
        self.row_rhs.append(float(rhs))
        return len(self.row_names) - 1

    def var_id(self, name: str) -> int:
        return self._var_ids[name]


@dataclass
class LpSolution:
    model: LpModel
    status: str                 # "optimal", "infeasible", "unbounded"
    value: float
    x: np.ndarray               # per model variable; None unless optimal
    y: np.ndarray               # per model row, d(value)/d(rhs); None unless optimal
    feas_residual: float
    cs_residual: float

    def primal(self, name: str) -> float:
        return float(self.x[self.model.var_id(name)])

    def primal_dict(self) -> dict:
        return {nm: float(v) for nm, v in zip(self.model.var_names, self.x)}

    def dual_dict(self) -> dict:
        return {nm: float(v) for nm, v in zip(self.model.row_names, self.y)}


def simplex_solve(A, senses, b, c, max_iters: int = None):
    """Two-phase simplex for min c'x s.t. Ax (senses) b, x >= 0.

    senses holds -1 (<=), 0 (=), +1 (>=) per row. Returns (status, value, x, y)
    with y[i] = d(value)/d(b[i]); x and y are None unless status is "optimal".
    Raises SimplexStall when the pivot cap is hit.
    """
    A = np.ascontiguousarray(A, dtype=np.float64)
    b = np.array(b, dtype=np.float64)
    c = np.asarray(c, dtype=np.float64)
    senses = np.array(senses, dtype=np.int64)
    m, n = A.shape
    if b.shape != (m,) or senses.shape != (m,) or c.shape != (n,):
        raise ValueError("inconsistent simplex input shapes")

    row_sign = np.ones(m)
    neg = b < 0
    if np.any(neg):
        A = A.copy()
        A[neg] *= -1.0
        b[neg] *= -1.0
        senses[neg] *= -1
        row_sign[neg] = -1.0

    slack_rows = np.flatnonzero(senses != 0)
    nslack = len(slack_rows)
    art0 = n + nslack
    ncols = art0 + m
    T = np.zeros((m + 1, ncols + 1))
    T[:m, :n] = A
    for j, r in enumerate(slack_rows):
        T[r, n + j] = 1.0 if senses[r] < 0 else -1.0
    T[np.arange(m), art0 + np.arange(m)] = 1.0
    T[:m, -1] = b
    basis = art0 + np.arange(m, dtype=np.int64)

    if max_iters is None:
        max_iters = 1000 + 50 * (m + ncols)
    bland_after = 5 * (m + ncols)

    # phase 1: minimize the artificial total; cost row already reduced
    T[m, :art0] = -T[:m, :art0].sum(axis=0)
    T[m, -1] = -b.sum()
    status, _ = backend.pivot_loop(T, basis, art0, max_iters, PIVOT_TOL, bland_after)
    if status == 2:
        raise SimplexStall(f"phase 1 stalled after {max_iters} pivots")
    if status == 1:
        raise SimplexStall("phase 1 produced an unbounded direction")
    if -T[m, -1] > FEAS_TOL * max(1.0, float(np.abs(b).max(initial=0.0))):
        return "infeasible", float("nan"), None, None

    for r in np.flatnonzero(basis >= art0):
        row = T[r, :art0]
        q = int(np.argmax(np.abs(row)))
        if abs(row[q]) <= PIVOT_TOL:
            continue  # redundant row; the artificial stays basic at zero
        prow = T[r] / T[r, q]
        T -= np.outer(T[:, q], prow)
        T[r] = prow
        T[r, q] = 1.0
        basis[r] = q

    T[m, :] = 0.0
    T[m, :n] = c
    for r in range(m):
        cb = T[m, basis[r]]
        if cb != 0.0:
            T[m] -= cb * T[r]
    status, _ = backend.pivot_loop(T, basis, art0, max_iters, PIVOT_TOL, bland_after)
    if status == 2:
        raise SimplexStall(f"phase 2 stalled after {max_iters} pivots")
    if status == 1:
        return "unbounded", -INF, None, None

    x = np.zeros(ncols)
    for r in range(m):
        if basis[r] < ncols:
            x[basis[r]] = T[r, -1]
    y = -T[m, art0:art0 + m] * row_sign
    return "optimal", float(-T[m, -1]), x[:n], y


def solve_lp(model: LpModel, max_iters: int = None) -> LpSolution:
    """Solve a built model and report primal, dual, and residuals.

    Free variables are split, finite lower bounds shifted out, and finite
    upper bounds appended as rows; the reported solution is in the model's
    original variables and row order.
    """
    nv, nr = model.n_vars, model.n_rows
    col_of = np.empty(nv, dtype=np.int64)
    split = np.zeros(nv, dtype=bool)
    ncan = 0
    for j in range(nv):
        col_of[j] = ncan
        if model.var_lb[j] == -INF:
            split[j] = True
            ncan += 2
        else:
            ncan += 1

    ub_rows = [(j, model.var_ub[j] - model.var_lb[j])
               for j in range(nv) if model.var_ub[j] < INF]
    mcan = nr + len(ub_rows)
    A = np.zeros((mcan, ncan))
    b = np.zeros(mcan)
    senses = np.zeros(mcan, dtype=np.int64)
    shift_obj = 0.0
    for r in range(nr):
        rhs = model.row_rhs[r]
        for j, coef in model.row_coeffs[r].items():
            A[r, col_of[j]] += coef
            if split[j]:
                A[r, col_of[j] + 1] -= coef
            elif model.var_lb[j] != 0.0:
                rhs -= coef * model.var_lb[j]
        b[r] = rhs
        senses[r] = _SENSE_CODE[model.row_senses[r]]
    for extra, (j, cap) in enumerate(ub_rows):
        A[nr + extra, col_of[j]] = 1.0
        b[nr + extra] = cap
        senses[nr + extra] = -1

    sign = 1.0 if model.sense == "min" else -1.0
    c = np.zeros(ncan)
    for j, coef in model.obj.items():
        c[col_of[j]] += sign * coef
        if split[j]:
            c[col_of[j] + 1] -= sign * coef
        elif model.var_lb[j] != 0.0:
            shift_obj += coef * model.var_lb[j]

    status, raw_value, xcan, ycan = simplex_solve(A, senses, b, c, max_iters)
    if status != "optimal":
        value = float("nan") if status == "infeasible" else -sign * INF
        return LpSolution(model, status, value, None, None, float("nan"), float("nan"))

    resid = 0.0
    Ax = A @ xcan
    gap = Ax - b
    for r in range(mcan):
        if senses[r] < 0:
            resid = max(resid, gap[r])
        elif senses[r] > 0:
            resid = max(resid, -gap[r])
        else:
            resid = max(resid, abs(gap[r]))
    resid = max(resid, float(-xcan.min(initial=0.0)))
    cs = 0.0
    for r in range(mcan):
        if senses[r] != 0:
            cs = max(cs, abs(ycan[r] * gap[r]))
    rc = c - A.T @ ycan
    cs = max(cs, float(np.max(np.abs(rc * xcan), initial=0.0)))

    x = np.empty(nv)
    for j in range(nv):
        if split[j]:
            x[j] = xcan[col_of[j]] - xcan[col_of[j] + 1]
        else:
            x[j] = xcan[col_of[j]] + model.var_lb[j]
    y = ycan[:nr] if model.sense == "min" else -ycan[:nr]
    value = sign * raw_value + shift_obj + model.obj_const
    return LpSolution(model, "optimal", float(value), x, np.array(y),
                      float(resid), float(cs))


# ---------------------------------------------------------------------------
# text form


def _terms(coeffs: dict, var_names) -> str:
    parts = []
    for j in sorted(coeffs):
        coef = coeffs[j]
        if coef == 0.0:
            continue
        mag = repr(abs(float(coef)))
        if not parts:
            parts.append(f"- {mag} {var_names[j]}" if coef < 0 else f"{mag} {var_names[j]}")
        else:
            op = "-" if coef < 0 else "+"
            parts.append(f"{op} {mag} {var_names[j]}")
    return " ".join(parts) if parts else "0"


def export_lp_text(model: LpModel) -> str:
    out = [f"\\ Problem: {model.name}"]
    if model.obj_const != 0.0:
        # LP text has no place for an objective constant; carry it in a comment
        out.append(f"\\ ObjConst: {repr(float(model.obj_const))}")
    out.append("Minimize" if model.sense == "min" else "Maximize")
    out.append(f" obj: {_terms(model.obj, model.var_names)}")
    out.append("Subject To")
    for r in range(model.n_rows):
        out.append(f" {model.row_names[r]}: {_terms(model.row_coeffs[r], model.var_names)}"
                   f" {model.row_senses[r]} {repr(float(model.row_rhs[r]))}")
    out.append("Bounds")
    for j, nm in enumerate(model.var_names):
        lb, ub = model.var_lb[j], model.var_ub[j]
        if lb == -INF:
            out.append(f" {nm} free")
        elif ub == INF:
            out.append(f" {nm} >= {repr(float(lb))}")
        else:
            out.append(f" {repr(float(lb))} <= {nm} <= {repr(float(ub))}")
    out.append("End")
    return "\n".join(out) + "\n"


def _parse_terms(tokens, var_ids) -> dict:
    if tokens == ["0"]:
        return {}
    coeffs = {}
    sign = 1.0
    i = 0
    while i < len(tokens):
        tok = tokens[i]
        if tok == "+":
            sign = 1.0
            i += 1
        elif tok == "-":
            sign = -1.0
            i += 1
        else:
            if i + 1 >= len(tokens):
                raise ValueError(f"dangling coefficient {tok!r}")
            j = var_ids[tokens[i + 1]]
            coeffs[j] = coeffs.get(j, 0.0) + sign * float(tok)
            sign = 1.0
            i += 2
    return coeffs


def parse_lp_text(text: str) -> LpModel:
    """Parse the exact subset of LP text that export_lp_text produces."""
    model = LpModel()
    section = None
    pending = []   # (kind, payload) rows resolved once Bounds declares variables
    for raw in text.splitlines():
        line = raw.strip()
        if not line:
            continue
        if line.startswith("\\"):
            if line.startswith("\\ Problem:"):
                model.name = line.split(":", 1)[1].strip()
            elif line.startswith("\\ ObjConst:"):
                model.obj_const = float(line.split(":", 1)[1])
            continue
        if line in ("Minimize", "Maximize"):
            model.sense = "min" if line == "Minimize" else "max"
            section = "objective"
            continue
        if line == "Subject To":
            section = "rows"
            continue
        if line == "Bounds":
            section = "bounds"
            continue
        if line == "End":
            section = None
            continue
        if section == "objective":
            _, expr = line.split(":", 1)
            pending.append(("obj", expr.split()))
        elif section == "rows":
            name, expr = line.split(":", 1)
            toks = expr.split()
            sense, rhs = toks[-2], float(toks[-1])
            if sense not in _SENSE_CODE:
                raise ValueError(f"row {name!r}: bad sense {sense!r}")
            pending.append(("row", (name.strip(), toks[:-2], sense, rhs)))
        elif section == "bounds":
            toks = line.split()
            if len(toks) == 2 and toks[1] == "free":
                model.add_var(toks[0], lb=-INF)
            elif len(toks) == 3 and toks[1] == ">=":
                model.add_var(toks[0], lb=float(toks[2]))
            elif len(toks) == 5 and toks[1] == "<=" and toks[3] == "<=":
                model.add_var(toks[2], lb=float(toks[0]), ub=float(toks[4]))
            else:
                raise ValueError(f"unrecognized bound line {line!r}")
        else:
            raise ValueError(f"line outside any section: {line!r}")
    for kind, payload in pending:
        if kind == "obj":
            model.obj = _parse_terms(payload, model._var_ids)
        else:
            name, toks, sense, rhs = payload
            model.add_row(name, _parse_terms(toks, model._var_ids), sense, rhs)
    return model
