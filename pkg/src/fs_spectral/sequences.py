"""Points of the sequence space s at finite truncation.

Indices are 1-based in every public signature; ``entries[0]`` holds x_1.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import EmptySequence, ModeMismatch
from .generators import ParamSequence

# Entries or envelope values below this are treated as underflowed.
UNDERFLOW = np.finfo(float).tiny


def csum(values: Iterable[float]) -> float:
    """Compensated sum of ``values`` taken in the given (ascending n) order.

    ``math.fsum`` tracks exact partials, so the result is the correctly
    rounded sum and does not depend on thread count or chunking.
    """
    return math.fsum(np.asarray(values, dtype=float).ravel())


def _frozen(arr) -> np.ndarray:
    out = np.array(arr, dtype=float, copy=True).ravel()
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class TruncatedSequence:
    """Finite prefix x_1..x_N of a point of s, with optional decay claims.

    Each claim ``(k, C)`` asserts ``|x_n| n^k <= C`` for every stored n and is
    checked on construction.
    """

    entries: np.ndarray
    decay_claims: tuple = field(default=())

    def __post_init__(self):
        x = _frozen(self.entries)
        if not np.all(np.isfinite(x)):
            raise ValueError("sequence entries must be finite")
        object.__setattr__(self, "entries", x)
        claims = tuple((int(k), float(c)) for k, c in self.decay_claims)
        n = np.arange(1, x.size + 1, dtype=float)
        for k, c in claims:
            if k < 0 or not c > 0:
                raise ValueError(f"invalid decay claim ({k}, {c})")
            if x.size and np.max(np.abs(x) * n**k) > c * (1 + 1e-12):
                raise ValueError(f"decay claim k={k}, C={c} violated")
        object.__setattr__(self, "decay_claims", claims)

    @classmethod
    def zeros(cls, size: int) -> "TruncatedSequence":
        return cls(np.zeros(size))

    @classmethod
    def unit(cls, k: int, size: int) -> "TruncatedSequence":
        x = np.zeros(size)
        x[k - 1] = 1.0
        return cls(x)

    def __len__(self) -> int:
        return self.entries.size

    @property
    def indices(self) -> np.ndarray:
        return np.arange(1, self.entries.size + 1)

    def padded(self, size: int) -> np.ndarray:
        if self.entries.size > size:
            raise ModeMismatch(f"sequence has {self.entries.size} entries, only {size} modes")
        out = np.zeros(size)
        out[: self.entries.size] = self.entries
        return out

    def __add__(self, other):
        a, b = self.entries, as_array(other)
        size = max(a.size, b.size)
        return TruncatedSequence(np.pad(a, (0, size - a.size)) + np.pad(b, (0, size - b.size)))

    def __sub__(self, other):
        return self + (-1.0) * as_array(other)

    def __mul__(self, scalar: float):
        return TruncatedSequence(self.entries * float(scalar))

    __rmul__ = __mul__


@dataclass(frozen=True)
class TemperedGradient:
    """Gradient coefficients g_1..g_N, a finite piece of an element of t = s'."""

    entries: np.ndarray

    def __post_init__(self):
        g = _frozen(self.entries)
        if not np.all(np.isfinite(g)):
            raise ValueError("gradient entries must be finite")
        object.__setattr__(self, "entries", g)

    def __len__(self) -> int:
        return self.entries.size


def as_array(x) -> np.ndarray:
    if isinstance(x, (TruncatedSequence, TemperedGradient)):
        return x.entries
    return np.asarray(x, dtype=float).ravel()


@dataclass(frozen=True)
class CompactEnvelope:
    """The box K = {h : |h_n| <= c_n} for a rapidly decreasing c.

    Such boxes are compact in s, and the supremum of a linear form over one
    is available in closed form, so they serve as the compacts for dual
    seminorms.  The default is c_n = e^{-n}.  Zero entries are allowed (they
    flatten the box in that direction); values are checked on n <= 10^4.
    """

    generator: ParamSequence = field(default_factory=lambda: ParamSequence({"gen": "exp", "M": 1.0, "rho": 1.0}))

    CHECK_RANGE = 10_000

    def __post_init__(self):
        c = self.generator.head(self.CHECK_RANGE)
        if not np.all(np.isfinite(c)) or np.any(c < 0):
            raise ValueError("envelope values must be finite and non-negative")
        table = decay_fit(TruncatedSequence(c), 4)
        if table.any_growth:
            raise ValueError("envelope is not rapidly decreasing on the checked range")

    @classmethod
    def exponential(cls, M: float = 1.0, rho: float = 1.0) -> "CompactEnvelope":
        return cls(ParamSequence({"gen": "exp", "M": M, "rho": rho}))

    @classmethod
    def zero(cls) -> "CompactEnvelope":
        return cls(ParamSequence("zero"))

    @classmethod
    def parse(cls, text: str) -> "CompactEnvelope":
        """Parse ``"exp:M,rho"`` (the CLI form) or a named generator."""
        name, _, args = text.partition(":")
        if name == "exp":
            parts = [float(p) for p in args.split(",")] if args else []
            return cls.exponential(*parts)
        return cls(ParamSequence(name))

    def values(self, size: int) -> np.ndarray:
        return self.generator.head(size)

    def sample(self, size: int, rng: np.random.Generator) -> TruncatedSequence:
        """Uniform draw from the box, x_n = u_n c_n with u_n in [-1, 1]."""
        return TruncatedSequence(rng.uniform(-1.0, 1.0, size) * self.values(size))


def seminorm_s(x, k: int) -> float:
    """sup_n |x_n| n^k over the stored entries.

    Exact for finitely supported x; for a general point of s this is only a
    lower bound on the true seminorm.
    """
    a = as_array(x)
    if a.size == 0:
        raise EmptySequence("seminorm of an empty sequence")
    if k < 0:
        raise ValueError("k must be non-negative")
    n = np.arange(1, a.size + 1, dtype=float)
    return float(np.max(np.abs(a) * n**k))


def dual_seminorm_t(g, K: CompactEnvelope) -> float:
    """sup over the box K of |sum g_n h_n|, i.e. sum |g_n| c_n."""
    ga = as_array(g)
    if not np.all(np.isfinite(ga)):
        raise ValueError("non-finite gradient entries")
    return csum(np.abs(ga) * K.values(ga.size))


@dataclass(frozen=True)
class DecayEstimate:
    k: int
    C: float
    growing: bool


@dataclass(frozen=True)
class DecayTable:
    estimates: tuple

    @property
    def any_growth(self) -> bool:
        return any(e.growing for e in self.estimates)

    def constant(self, k: int) -> float:
        for e in self.estimates:
            if e.k == k:
                return e.C
        raise KeyError(k)

    def to_list(self) -> list[dict]:
        return [{"k": e.k, "C": e.C, "growing": e.growing} for e in self.estimates]


def weighted_profile(x, k: int) -> np.ndarray:
    """|x_n| n^k computed in log space, so large k does not overflow."""
    a = np.abs(as_array(x))
    out = np.zeros(a.size)
    nz = a > 0
    n = np.arange(1, a.size + 1, dtype=float)
    with np.errstate(over="ignore"):
        out[nz] = np.exp(np.log(a[nz]) + k * np.log(n[nz]))
    return out


def decay_fit(x, k_max: int) -> DecayTable:
    """Empirical constants C_k = max_n |x_n| n^k for k = 0..k_max.

    ``growing`` is set for a given k when |x_n| n^k is still rising at the end
    of the stored range: the maximum over the last quarter exceeds the
    maximum over the earlier indices.  That is the finite-range symptom of
    x not lying in s.
    """
    a = as_array(x)
    if a.size == 0:
        raise EmptySequence("decay_fit of an empty sequence")
    size = a.size
    q = max(1, size // 4)
    out = []
    for k in range(k_max + 1):
        v = weighted_profile(a, k)
        c = float(v.max())
        growing = False
        if size >= 2 and c > 0:
            head, tail = v[: size - q], v[size - q :]
            growing = bool(tail.max() > head.max() * (1 + 1e-9))
        out.append(DecayEstimate(k, c, growing))
    return DecayTable(tuple(out))


# -- I/O --------------------------------------------------------------------


def fmt(value: float) -> str:
    return format(float(value), ".17g")


def write_sequence_csv(path, x, header: Sequence[str] = ("n", "value"), extra: Sequence[np.ndarray] = ()) -> None:
    a = as_array(x)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for i, v in enumerate(a):
            w.writerow([i + 1, fmt(v), *(fmt(col[i]) for col in extra)])


def read_sequence_csv(path) -> TruncatedSequence:
    """Index in the first column, value in the second (``n,value`` or ``k,x_k``)."""
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))[1:]
    if not rows:
        raise EmptySequence(f"{path}: no rows")
    pairs = sorted((int(r[0]), float(r[1])) for r in rows)
    size = pairs[-1][0]
    x = np.zeros(size)
    for n, v in pairs:
        if n < 1:
            raise ValueError(f"{path}: index {n} < 1")
        x[n - 1] = v
    return TruncatedSequence(x)


def claims_to_json(x: TruncatedSequence) -> str:
    return json.dumps([{"k": k, "C": c} for k, c in x.decay_claims])


def claims_from_json(text: str) -> tuple:
    return tuple((int(d["k"]), float(d["C"])) for d in json.loads(text))


def load_sequence(path, claims_path=None) -> TruncatedSequence:
    x = read_sequence_csv(path)
    if claims_path is not None:
        x = TruncatedSequence(x.entries, claims_from_json(Path(claims_path).read_text()))
    return x
