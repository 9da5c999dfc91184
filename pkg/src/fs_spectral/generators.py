"""Named parameter sequences indexed by n = 1, 2, ...

A :class:`ParamSequence` is a lazily evaluated real sequence described by a
small JSON-able dict, e.g. ``{"gen": "inv-factorial"}`` or
``{"gen": "explicit", "values": [0.5, 0.25]}``.  Every generator can be
evaluated at any index, which is what tail bounds beyond the stored
truncation need.
"""

from __future__ import annotations

import math
from typing import Any, Mapping

import numpy as np

_FACT_LIMIT = 200
# 1/n! is exactly rounded from Python integers; beyond this it is 0.0 anyway.
_INV_FACT = np.array([1 / math.factorial(k) for k in range(_FACT_LIMIT + 2)])


def _inv_factorial(k: np.ndarray) -> np.ndarray:
    out = np.zeros(k.shape, dtype=float)
    ok = k <= _FACT_LIMIT
    out[ok] = _INV_FACT[k[ok]]
    return out


def _explicit(n: np.ndarray, values: list[float]) -> np.ndarray:
    vals = np.asarray(values, dtype=float)
    out = np.zeros(n.shape, dtype=float)
    ok = n <= vals.size
    out[ok] = vals[n[ok] - 1]
    return out


GENERATORS = (
    "zero",
    "const",
    "inv-factorial",
    "inv-factorial-shift1",
    "inv-square",
    "one-plus-inv",
    "one-plus-inv-square-shift1",
    "exp",
    "explicit",
    "product",
)


class ParamSequence:
    """A real sequence ``n -> value`` defined for every n >= 1.

    Supported ``gen`` names and their extra keys:

    ========================== ===================================
    zero                        0
    const                       ``value``
    inv-factorial               1/n!
    inv-factorial-shift1        1/(n+1)!
    inv-square                  1/n^2
    one-plus-inv                1 + 1/n
    one-plus-inv-square-shift1  1 + 1/(n^2+1)
    exp                         ``M`` * exp(-``rho`` * n)
    explicit                    ``values`` (zero past the list)
    product                     ``factors``: list of sub-specs
    ========================== ===================================

    Any spec may carry a multiplicative ``scale``; ``"abs": true`` takes
    absolute values after scaling.
    """

    def __init__(self, spec: Mapping[str, Any] | str):
        if isinstance(spec, str):
            spec = {"gen": spec}
        spec = dict(spec)
        gen = spec.get("gen")
        if gen not in GENERATORS:
            raise ValueError(f"unknown sequence generator {gen!r}")
        if gen == "const" and "value" not in spec:
            raise ValueError("const generator needs 'value'")
        if gen == "explicit":
            spec["values"] = [float(v) for v in spec.get("values", [])]
        if gen == "exp":
            spec.setdefault("M", 1.0)
            spec.setdefault("rho", 1.0)
            if not (spec["M"] > 0 and spec["rho"] > 0):
                raise ValueError("exp generator needs M > 0 and rho > 0")
        if gen == "product":
            spec["factors"] = [ParamSequence(f).spec for f in spec.get("factors", [])]
        self.spec = spec
        self._factors = [ParamSequence(f) for f in spec.get("factors", [])]

    @classmethod
    def explicit(cls, values) -> "ParamSequence":
        return cls({"gen": "explicit", "values": list(np.asarray(values, dtype=float))})

    @classmethod
    def const(cls, value: float) -> "ParamSequence":
        return cls({"gen": "const", "value": float(value)})

    def scaled(self, factor: float) -> "ParamSequence":
        spec = dict(self.spec)
        spec["scale"] = spec.get("scale", 1.0) * float(factor)
        return ParamSequence(spec)

    def absolute(self) -> "ParamSequence":
        return ParamSequence({**self.spec, "abs": True})

    def times(self, other: "ParamSequence") -> "ParamSequence":
        return ParamSequence({"gen": "product", "factors": [self.spec, other.spec]})

    @property
    def finite_support(self) -> int | None:
        """Length past which the sequence is identically zero, if known."""
        gen = self.spec["gen"]
        if gen == "zero":
            return 0
        if gen == "explicit":
            return len(self.spec["values"])
        if gen == "product":
            sizes = [f.finite_support for f in self._factors]
            sizes = [s for s in sizes if s is not None]
            return min(sizes) if sizes else None
        return None

    def values(self, n) -> np.ndarray:
        """Evaluate at 1-based indices ``n`` (scalar or array)."""
        n = np.atleast_1d(np.asarray(n, dtype=np.int64))
        if np.any(n < 1):
            raise ValueError("sequence indices start at 1")
        gen = self.spec["gen"]
        nf = n.astype(float)
        if gen == "zero":
            out = np.zeros(n.shape)
        elif gen == "const":
            out = np.full(n.shape, float(self.spec["value"]))
        elif gen == "inv-factorial":
            out = _inv_factorial(n)
        elif gen == "inv-factorial-shift1":
            out = _inv_factorial(n + 1)
        elif gen == "inv-square":
            out = 1.0 / (nf * nf)
        elif gen == "one-plus-inv":
            out = 1.0 + 1.0 / nf
        elif gen == "one-plus-inv-square-shift1":
            out = 1.0 + 1.0 / (nf * nf + 1.0)
        elif gen == "exp":
            out = self.spec["M"] * np.exp(-self.spec["rho"] * nf)
        elif gen == "explicit":
            out = _explicit(n, self.spec["values"])
        else:  # product
            out = np.ones(n.shape)
            for f in self._factors:
                out = out * f.values(n)
        scale = self.spec.get("scale", 1.0)
        if scale != 1.0:
            out = out * scale
        return np.abs(out) if self.spec.get("abs") else out

    def head(self, count: int) -> np.ndarray:
        return self.values(np.arange(1, count + 1))

    def __eq__(self, other):
        return isinstance(other, ParamSequence) and self.spec == other.spec

    def __repr__(self):
        return f"ParamSequence({self.spec!r})"
