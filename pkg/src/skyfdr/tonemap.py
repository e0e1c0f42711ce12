"""Bijective tone-mapping operators and their exact inverses."""

from dataclasses import dataclass

import numpy as np

KINDS = ("identity", "power_law", "log_n", "natural_log", "mu_law_log2", "inverted")

# offset used by the inverted operator 1 / (1 + x + 0.01)
_INV_OFFSET = 1.01


@dataclass(frozen=True)
class ToneMapper:
    """A parameterised tone-mapping operator.

    Only the parameters of the selected ``kind`` matter; the others keep their
    defaults.
    """

    kind: str = "identity"
    gamma: float = 2.2
    n: float = 10.0
    alpha: float = 1.0
    beta: float = 0.0
    epsilon: float = 1e-6
    mu: float = 5000.0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown tone mapper kind {self.kind!r}")
        if self.gamma <= 0:
            raise ValueError("gamma must be > 0")
        if self.n <= 1:
            raise ValueError("log base n must be > 1")
        if self.mu <= 0:
            raise ValueError("mu must be > 0")
        if self.epsilon <= 0:
            raise ValueError("epsilon must be > 0")
        if self.alpha <= 0:
            raise ValueError("alpha must be > 0")

    # -- parsing ---------------------------------------------------------

    @classmethod
    def parse(cls, spec):
        """Parse ``identity | gamma:<g> | logn:<n> | ln:<a>,<b>,<e> | mulog2:<mu> | inverted``."""
        spec = spec.strip()
        name, _, arg = spec.partition(":")
        try:
            if name == "identity" and not arg:
                return cls("identity")
            if name == "inverted" and not arg:
                return cls("inverted")
            if name == "gamma":
                return cls("power_law", gamma=float(arg))
            if name == "logn":
                return cls("log_n", n=float(arg))
            if name == "mulog2":
                return cls("mu_law_log2", mu=float(arg))
            if name == "ln":
                a, b, e = arg.split(",")
                return cls("natural_log", alpha=float(a), beta=float(b), epsilon=float(e))
        except ValueError as exc:
            raise ValueError(f"bad tone mapper spec {spec!r}: {exc}") from None
        raise ValueError(f"bad tone mapper spec {spec!r}")

    def spec(self):
        """Inverse of :meth:`parse`; floats use ``repr`` so parsing is lossless."""
        k = self.kind
        if k in ("identity", "inverted"):
            return k
        if k == "power_law":
            return f"gamma:{self.gamma!r}"
        if k == "log_n":
            return f"logn:{self.n!r}"
        if k == "mu_law_log2":
            return f"mulog2:{self.mu!r}"
        return f"ln:{self.alpha!r},{self.beta!r},{self.epsilon!r}"

    def __str__(self):
        return self.spec()

    # -- forward / inverse -------------------------------------------------

    @property
    def increasing(self):
        return self.kind != "inverted"

    def output_range(self):
        """(lo, hi) of the operator's image of [0, inf)."""
        k = self.kind
        if k == "natural_log":
            return (np.log(self.epsilon) + self.beta) * self.alpha, np.inf
        if k == "inverted":
            return 0.0, 1.0 / _INV_OFFSET
        return 0.0, np.inf

    def apply(self, x):
        """Compress radiance ``x`` (>= 0)."""
        x = np.asarray(x, dtype=np.float64)
        if np.any(x < 0) or np.any(np.isnan(x)):
            raise ValueError("tone mapper input must be non-negative")
        k = self.kind
        if k == "identity":
            return x.copy() if x.ndim else x + 0.0
        if k == "power_law":
            return np.power(x, 1.0 / self.gamma)
        if k == "log_n":
            return np.log1p(x) / np.log(self.n)
        if k == "natural_log":
            return (np.log(x + self.epsilon) + self.beta) * self.alpha
        if k == "mu_law_log2":
            return np.log2(np.log1p(self.mu * x) / np.log1p(self.mu) + 1.0)
        return 1.0 / (_INV_OFFSET + x)

    def invert(self, y):
        """Recover radiance from a compressed value ``y``.

        ``natural_log`` results below zero (possible for ``y`` under the value
        of ``apply(0)``) are clamped to 0.
        """
        y = np.asarray(y, dtype=np.float64)
        if np.any(np.isnan(y)):
            raise ValueError("tone mapper inverse input contains NaN")
        k = self.kind
        if k == "natural_log":
            return np.maximum(np.exp(y / self.alpha - self.beta) - self.epsilon, 0.0)
        if k == "inverted":
            if np.any(y <= 0) or np.any(y > 1.0 / _INV_OFFSET):
                raise ValueError("inverted tone mapper needs 0 < y <= 1/1.01")
            return np.maximum(1.0 / y - _INV_OFFSET, 0.0)
        if np.any(y < 0):
            raise ValueError(f"{k} inverse input must be non-negative")
        if k == "identity":
            return y.copy() if y.ndim else y + 0.0
        if k == "power_law":
            return np.power(y, self.gamma)
        if k == "log_n":
            return np.expm1(y * np.log(self.n))
        # mu_law_log2
        t = np.exp2(y) - 1.0
        return np.expm1(t * np.log1p(self.mu)) / self.mu

    def clamp_to_range(self, y):
        lo, hi = self.output_range()
        return np.clip(y, lo, hi)


def nonlinearity_error(tm, x, delta=0.01):
    """HDR-space error ``|x - T^-1(T(x) - delta)|`` caused by an LDR error ``delta``."""
    y = tm.apply(x) - delta
    lo, hi = tm.output_range()
    if np.any(y < lo) or np.any(y > hi):
        raise ValueError("T(x) - delta falls outside the invertible range")
    if tm.kind == "inverted" and np.any(y <= 0):
        raise ValueError("T(x) - delta falls outside the invertible range")
    return np.abs(np.asarray(x, dtype=np.float64) - tm.invert(y))
