"""Game instances for two-level Blotto: soldier allocation plus zero-sum subgames.

A game has n battlefields. Each player first splits a soldier budget across the
battlefields (Player 1: m1, Player 2: m2; in one-sided games only Player 2
allocates and m1 is 0), then every battlefield hosts a finite zero-sum subgame
whose payoff depends on the soldiers each side committed there.

Sign convention, fixed for the whole package: payoffs are stored as Player 2's
gain. Player 1 minimizes the aggregate, Player 2 maximizes it. The aggregate is
either the sum or the minimum of the per-battlefield expected utilities.

Everything here is immutable after construction and safe to share.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

DIST_TOL = 1e-9  # distribution normalization tolerance

PARAMETRIC_KINDS = ("affine", "quadratic", "log_matrix")


def _readonly(a) -> np.ndarray:
    arr = np.asarray(a, dtype=np.float64)
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True)
class DenseTensor:
    """Exhaustive payoff table for discrete soldiers.

    u has axes (a1, a2, k1, k2) in two-sided games and (a1, a2, k2) in
    one-sided games, where k axes run over 0..m soldiers inclusive.
    """

    u: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "u", _readonly(self.u))


@dataclass(frozen=True)
class ParametricMatrix:
    """Per-entry payoff as a function of Player 2's continuous allocation.

    Three functional forms, chosen by `kind`:
      affine      c*sigma + d
      quadratic   b*sigma^2 + c*sigma + d
      log_matrix  A + C*ln(sigma + 1)
    Coefficient arrays are all (a1, a2).
    """

    kind: str
    b: np.ndarray | None = None
    c: np.ndarray | None = None
    d: np.ndarray | None = None
    A: np.ndarray | None = None
    C: np.ndarray | None = None

    def __post_init__(self):
        if self.kind not in PARAMETRIC_KINDS:
            raise ValueError(f"unknown parametric kind {self.kind!r}")
        for name in ("b", "c", "d", "A", "C"):
            v = getattr(self, name)
            if v is not None:
                object.__setattr__(self, name, _readonly(v))

    @staticmethod
    def affine(c, d) -> "ParametricMatrix":
        return ParametricMatrix("affine", c=c, d=d)

    @staticmethod
    def quadratic(b, c, d) -> "ParametricMatrix":
        return ParametricMatrix("quadratic", b=b, c=c, d=d)

    @staticmethod
    def log_matrix(A, C) -> "ParametricMatrix":
        return ParametricMatrix("log_matrix", A=A, C=C)

    @property
    def shape(self):
        ref = self.c if self.kind != "log_matrix" else self.A
        return ref.shape

    def value(self, sigma: float) -> np.ndarray:
        """Entrywise payoff matrix at allocation sigma >= 0."""
        if sigma < 0:
            raise ValueError(f"allocation must be nonnegative, got {sigma}")
        if self.kind == "affine":
            return self.c * sigma + self.d
        if self.kind == "quadratic":
            return self.b * sigma * sigma + self.c * sigma + self.d
        return self.A + self.C * math.log(sigma + 1.0)

    def derivative(self, sigma: float) -> np.ndarray:
        """Entrywise d(payoff)/d(sigma) at sigma >= 0."""
        if sigma < 0:
            raise ValueError(f"allocation must be nonnegative, got {sigma}")
        if self.kind == "affine":
            return self.c.copy()
        if self.kind == "quadratic":
            return 2.0 * self.b * sigma + self.c
        return self.C / (sigma + 1.0)

    def increasing_in_sigma(self) -> bool:
        """True when every entry is nondecreasing in sigma with some growth.

        This is the hypothesis the subgradient-ascent path needs: slope
        coefficients nonnegative and not all zero.
        """
        if self.kind == "affine":
            slopes = self.c
        elif self.kind == "quadratic":
            if np.any(self.b < 0):
                return False
            slopes = self.b + self.c
        else:
            slopes = self.C
        return bool(np.all(slopes >= 0) and np.any(slopes > 0))


@dataclass(frozen=True)
class BattlefieldSpec:
    a1: int
    a2: int
    payoff: DenseTensor | ParametricMatrix


@dataclass(frozen=True)
class BlottoInstance:
    n: int
    m1: float
    m2: float
    mode: str        # "discrete" | "continuous"
    sided: str       # "one_sided" | "two_sided"
    aggregator: str  # "sum" | "min"
    battlefields: tuple = field(default_factory=tuple)

    def __post_init__(self):
        object.__setattr__(self, "battlefields", tuple(self.battlefields))

    @property
    def discrete(self) -> bool:
        return self.mode == "discrete"

    @property
    def one_sided(self) -> bool:
        return self.sided == "one_sided"

    def action_counts(self, player: int) -> list[int]:
        if player == 1:
            return [bf.a1 for bf in self.battlefields]
        return [bf.a2 for bf in self.battlefields]


@dataclass(frozen=True)
class BehavioralProfile:
    """A player's strategy in behavioral form.

    allocation: for discrete allocators a dict {allocation vector: prob}, for
    continuous allocators a plain sigma vector, and None for a player who does
    not allocate (Player 1 in one-sided games).

    actions: per battlefield, the subgame action distributions. With a discrete
    allocation this is an (m+1, a_i) array per battlefield (one row per soldier
    count); otherwise a flat (a_i,) array per battlefield.
    """

    allocation: object
    actions: tuple

    def __post_init__(self):
        object.__setattr__(self, "actions", tuple(_readonly(a) for a in self.actions))
        if isinstance(self.allocation, np.ndarray):
            object.__setattr__(self, "allocation", _readonly(self.allocation))


# ---------------------------------------------------------------------------
# operations


def battlefield_payoff(spec, a1: int, a2: int, z1, z2) -> float:
    """Player-2 gain u(a1, a2, z1, z2) for one battlefield.

    For DenseTensor specs z1/z2 are soldier counts indexing the table (z1 is
    ignored when the tensor has no k1 axis). For ParametricMatrix specs the
    entry form is evaluated at sigma = z2.
    """
    if isinstance(spec, ParametricMatrix):
        mat = spec.value(float(z2))
        return float(mat[a1, a2])
    u = spec.u
    if a1 < 0 or a2 < 0 or a1 >= u.shape[0] or a2 >= u.shape[1]:
        raise IndexError(f"action pair ({a1},{a2}) out of range for shape {u.shape[:2]}")
    if u.ndim == 4:
        if not (0 <= z1 < u.shape[2] and 0 <= z2 < u.shape[3]):
            raise IndexError(f"allocation pair ({z1},{z2}) out of range")
        return float(u[a1, a2, int(z1), int(z2)])
    if not 0 <= z2 < u.shape[2]:
        raise IndexError(f"allocation {z2} out of range")
    return float(u[a1, a2, int(z2)])


def payoff_matrix(spec, z1, z2) -> np.ndarray:
    """The (a1, a2) subgame payoff matrix at fixed allocations."""
    if isinstance(spec, ParametricMatrix):
        return spec.value(float(z2))
    if spec.u.ndim == 4:
        return spec.u[:, :, int(z1), int(z2)]
    return spec.u[:, :, int(z2)]


def expected_battlefield_utility(spec, d1, d2, z1, z2) -> float:
    """Expected Player-2 gain under mixed actions d1, d2 at allocations z1, z2."""
    d1 = np.asarray(d1, dtype=np.float64)
    d2 = np.asarray(d2, dtype=np.float64)
    mat = payoff_matrix(spec, z1, z2)
    if mat.shape != (d1.shape[0], d2.shape[0]):
        raise ValueError(f"distribution sizes {d1.shape[0]}x{d2.shape[0]} do not match payoff shape {mat.shape}")
    return float(d1 @ mat @ d2)


def aggregate(values, aggregator: str) -> float:
    """Combine per-battlefield utilities: total or worst case."""
    values = list(values)
    if not values:
        raise ValueError("aggregate of an empty battlefield list")
    if aggregator == "sum":
        return float(sum(values))
    if aggregator == "min":
        return float(min(values))
    raise ValueError(f"unknown aggregator {aggregator!r}")


def validate_instance(inst: BlottoInstance) -> list[str]:
    """Collect human-readable invariant violations; empty list means well formed."""
    out = []
    if inst.n < 1:
        out.append(f"n: must be >= 1, got {inst.n}")
    if inst.m1 < 0:
        out.append(f"m1: negative budget {inst.m1}")
    if inst.m2 < 0:
        out.append(f"m2: negative budget {inst.m2}")
    if inst.mode not in ("discrete", "continuous"):
        out.append(f"mode: unknown {inst.mode!r}")
    if inst.sided not in ("one_sided", "two_sided"):
        out.append(f"sided: unknown {inst.sided!r}")
    if inst.aggregator not in ("sum", "min"):
        out.append(f"aggregator: unknown {inst.aggregator!r}")
    if inst.discrete and (inst.m1 != int(inst.m1) or inst.m2 != int(inst.m2)):
        out.append("m1/m2: discrete budgets must be integers")
    if inst.one_sided and inst.m1 != 0:
        out.append(f"m1: one-sided games give Player 1 no soldiers, got m1={inst.m1}")
    if len(inst.battlefields) != inst.n:
        out.append(f"battlefields: expected {inst.n} specs, got {len(inst.battlefields)}")

    for i, bf in enumerate(inst.battlefields):
        where = f"battlefields[{i}]"
        if bf.a1 < 1 or bf.a2 < 1:
            out.append(f"{where}: action counts must be >= 1, got ({bf.a1},{bf.a2})")
        spec = bf.payoff
        if inst.mode == "discrete":
            if not isinstance(spec, DenseTensor):
                out.append(f"{where}.payoff: discrete mode needs a tensor payoff")
                continue
            want_nd = 3 if inst.one_sided else 4
            if spec.u.ndim != want_nd:
                if inst.one_sided and spec.u.ndim == 4:
                    out.append(f"{where}.payoff: one-sided tensor must not carry a k1 axis")
                else:
                    out.append(f"{where}.payoff: tensor rank {spec.u.ndim}, expected {want_nd}")
                continue
            if inst.one_sided:
                want = (bf.a1, bf.a2, int(inst.m2) + 1)
            else:
                want = (bf.a1, bf.a2, int(inst.m1) + 1, int(inst.m2) + 1)
            if spec.u.shape != want:
                out.append(f"{where}.payoff: tensor shape {spec.u.shape}, expected {want}")
            elif not np.all(np.isfinite(spec.u)):
                out.append(f"{where}.payoff: non-finite entries")
        else:
            if not isinstance(spec, ParametricMatrix):
                out.append(f"{where}.payoff: continuous mode needs a parametric payoff")
                continue
            for name in ("b", "c", "d", "A", "C"):
                arr = getattr(spec, name)
                if arr is None:
                    continue
                if arr.shape != (bf.a1, bf.a2):
                    out.append(f"{where}.payoff.{name}: shape {arr.shape}, expected {(bf.a1, bf.a2)}")
                elif not np.all(np.isfinite(arr)):
                    out.append(f"{where}.payoff.{name}: non-finite coefficients")
    return out


# ---------------------------------------------------------------------------
# dict form (the JSON schema; file I/O lives in the instances module)


class SchemaError(ValueError):
    """Raised when an instance dict does not match the documented schema."""


def _require_keys(d: dict, allowed, where: str):
    unknown = set(d) - set(allowed)
    if unknown:
        raise SchemaError(f"{where}: unknown keys {sorted(unknown)}")
    missing = [k for k in allowed if k not in d]
    if missing:
        raise SchemaError(f"{where}: missing keys {missing}")


def _payoff_to_dict(spec) -> dict:
    if isinstance(spec, DenseTensor):
        return {"kind": "tensor", "u": spec.u.tolist()}
    out = {"kind": spec.kind}
    names = {"affine": ("c", "d"), "quadratic": ("b", "c", "d"), "log_matrix": ("A", "C")}
    for name in names[spec.kind]:
        out[name] = getattr(spec, name).tolist()
    return out


def _payoff_from_dict(d: dict, where: str):
    if not isinstance(d, dict) or "kind" not in d:
        raise SchemaError(f"{where}: payoff must be an object with a 'kind'")
    kind = d["kind"]
    if kind == "tensor":
        _require_keys(d, ("kind", "u"), where)
        try:
            u = np.asarray(d["u"], dtype=np.float64)
        except ValueError as e:
            raise SchemaError(f"{where}.u: ragged or non-numeric tensor ({e})") from None
        return DenseTensor(u)
    names = {"affine": ("c", "d"), "quadratic": ("b", "c", "d"), "log_matrix": ("A", "C")}
    if kind not in names:
        raise SchemaError(f"{where}.kind: unknown payoff kind {kind!r}")
    _require_keys(d, ("kind",) + names[kind], where)
    coefs = {}
    for name in names[kind]:
        try:
            coefs[name] = np.asarray(d[name], dtype=np.float64)
        except ValueError as e:
            raise SchemaError(f"{where}.{name}: bad coefficient matrix ({e})") from None
        if coefs[name].ndim != 2:
            raise SchemaError(f"{where}.{name}: coefficient matrix must be 2-D")
    return ParametricMatrix(kind, **coefs)


def instance_to_dict(inst: BlottoInstance) -> dict:
    return {
        "n": inst.n,
        "m1": int(inst.m1) if inst.discrete else inst.m1,
        "m2": int(inst.m2) if inst.discrete else inst.m2,
        "mode": inst.mode,
        "sided": inst.sided,
        "aggregator": inst.aggregator,
        "battlefields": [
            {"a1": bf.a1, "a2": bf.a2, "payoff": _payoff_to_dict(bf.payoff)}
            for bf in inst.battlefields
        ],
    }


def instance_from_dict(d: dict) -> BlottoInstance:
    """Parse the documented schema strictly; unknown keys are an error."""
    if not isinstance(d, dict):
        raise SchemaError("top level: expected an object")
    _require_keys(d, ("n", "m1", "m2", "mode", "sided", "aggregator", "battlefields"), "top level")
    bfs = d["battlefields"]
    if not isinstance(bfs, list):
        raise SchemaError("battlefields: expected a list")
    specs = []
    for i, bd in enumerate(bfs):
        where = f"battlefields[{i}]"
        if not isinstance(bd, dict):
            raise SchemaError(f"{where}: expected an object")
        _require_keys(bd, ("a1", "a2", "payoff"), where)
        specs.append(
            BattlefieldSpec(int(bd["a1"]), int(bd["a2"]), _payoff_from_dict(bd["payoff"], f"{where}.payoff"))
        )
    inst = BlottoInstance(
        n=int(d["n"]), m1=d["m1"], m2=d["m2"],
        mode=str(d["mode"]), sided=str(d["sided"]), aggregator=str(d["aggregator"]),
        battlefields=specs,
    )
    problems = validate_instance(inst)
    if problems:
        raise SchemaError("; ".join(problems))
    return inst
