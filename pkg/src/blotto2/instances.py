"""Instance generators and file IO.

Generators are deterministic given their arguments, with randomness coming
from a self-contained 64-bit mixer so the same seed produces bit-identical
coefficients on any platform or numpy version.
"""

from __future__ import annotations

import json
from fractions import Fraction

import numpy as np

from .model import (BattlefieldSpec, BlottoInstance, DenseTensor, ParametricMatrix,
                    SchemaError, instance_from_dict, instance_to_dict)

_MASK = (1 << 64) - 1


class SplitMix64:
    """Tiny deterministic PRNG (the splitmix64 mixer)."""

    def __init__(self, seed: int):
        self.state = seed & _MASK

    def next_u64(self) -> int:
        self.state = (self.state + 0x9E3779B97F4A7C15) & _MASK
        z = self.state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
        return (z ^ (z >> 31)) & _MASK

    def uniform(self, lo: float = 0.0, hi: float = 1.0) -> float:
        return lo + (hi - lo) * ((self.next_u64() >> 11) * 2.0 ** -53)


def gen_soft_blotto_double(n: int, m1: int, m2: int, seed: int = 0) -> BlottoInstance:
    """Two-sided discrete sum family with a double-or-not action on each side.

    Battlefield i is worth v_i = (i+1) / (1 + 2 + ... + n); sending k1 against
    k2 wins the maximizer a v_i-scaled margin of (1 - 2*k1/(k1+k2)), an even
    half on 0 vs 0, and either player can double the stake (both doubling
    quadruples it). The family is fully determined by (n, m1, m2); seed is
    accepted for interface symmetry and ignored.
    """
    del seed
    if n < 1 or m1 < 0 or m2 < 0:
        raise ValueError(f"bad shape n={n}, m1={m1}, m2={m2}")
    denom = n * (n + 1) // 2
    bfs = []
    for i in range(n):
        v = float(Fraction(i + 1, denom))
        u = np.empty((2, 2, m1 + 1, m2 + 1))
        for k1 in range(m1 + 1):
            for k2 in range(m2 + 1):
                p = 0.5 if k1 + k2 == 0 else k1 / (k1 + k2)
                margin = v * (1.0 - 2.0 * p)
                for z1 in range(2):
                    for z2 in range(2):
                        u[z1, z2, k1, k2] = margin * float(2 ** (z1 + z2))
        bfs.append(BattlefieldSpec(2, 2, DenseTensor(u)))
    return BlottoInstance(n, m1, m2, "discrete", "two_sided", "sum", tuple(bfs))


def _fill(rng: SplitMix64, a1: int, a2: int, lo: float, hi: float) -> np.ndarray:
    out = np.empty((a1, a2))
    for r in range(a1):
        for c in range(a2):
            out[r, c] = rng.uniform(lo, hi)
    return out


def gen_random_parametric(n: int, m2: float, kind: str, a1: int, a2: int,
                          seed: int) -> BlottoInstance:
    """Continuous one-sided min instance with random parametric payoffs.

    Coefficients are drawn uniformly from [0, 100], per battlefield in a
    fixed order: the quadratic coefficient matrix first (quadratic kind
    only), then the slope matrix, then the offset matrix, each row-major.
    """
    if kind not in ("affine", "quadratic"):
        raise ValueError(f"kind must be affine or quadratic, not {kind!r}")
    if n < 1 or a1 < 1 or a2 < 1 or m2 < 0:
        raise ValueError("battlefield count, action counts, and budget must be positive")
    rng = SplitMix64(seed)
    bfs = []
    for _ in range(n):
        if kind == "quadratic":
            b = _fill(rng, a1, a2, 0.0, 100.0)
        c = _fill(rng, a1, a2, 0.0, 100.0)
        d = _fill(rng, a1, a2, 0.0, 100.0)
        if kind == "affine":
            pay = ParametricMatrix.affine(c, d)
        else:
            pay = ParametricMatrix.quadratic(b, c, d)
        bfs.append(BattlefieldSpec(a1, a2, pay))
    return BlottoInstance(n, 0.0, float(m2), "continuous", "one_sided", "min", tuple(bfs))


def gen_log_security(n: int, m2: float, a1: int, a2: int, seed: int) -> BlottoInstance:
    """Continuous one-sided min instance with logarithmic coverage payoffs.

    Base payoffs are uniform on [-1, 1] and the log gains uniform on [0, 1],
    drawn per battlefield (base matrix first, then gains, row-major).
    """
    if n < 1 or a1 < 1 or a2 < 1 or m2 < 0:
        raise ValueError("battlefield count, action counts, and budget must be positive")
    rng = SplitMix64(seed)
    bfs = []
    for _ in range(n):
        A = _fill(rng, a1, a2, -1.0, 1.0)
        C = _fill(rng, a1, a2, 0.0, 1.0)
        bfs.append(BattlefieldSpec(a1, a2, ParametricMatrix.log_matrix(A, C)))
    return BlottoInstance(n, 0.0, float(m2), "continuous", "one_sided", "min", tuple(bfs))


def write_instance(inst: BlottoInstance, path) -> None:
    """Canonical JSON dump: sorted keys, two-space indent, trailing newline."""
    with open(path, "w") as fh:
        fh.write(json.dumps(instance_to_dict(inst), sort_keys=True, indent=2) + "\n")


def read_instance(path) -> BlottoInstance:
    with open(path) as fh:
        text = fh.read()
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{path}: invalid JSON at line {exc.lineno}, "
                          f"column {exc.colno}: {exc.msg}") from exc
    return instance_from_dict(data)
