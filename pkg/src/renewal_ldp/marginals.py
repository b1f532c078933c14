"""One-dimensional laws with closed-form exponential tilts.

Used as components of the independent-product model and as increment laws
for the renewal-density diagnostic. Only the gamma family (with the
exponential as a special case) is provided: its tilt by ``exp(s x)`` stays
in the family, which keeps tilted sampling exact.
"""

import math

import numpy as np
from scipy import special, stats


class Gamma:
    """Gamma law with ``shape`` and ``rate`` (mean ``shape / rate``)."""

    name = "gamma"

    def __init__(self, shape=1.0, rate=1.0):
        if not (shape > 0 and rate > 0):
            raise ValueError("gamma shape and rate must be positive")
        self.shape = float(shape)
        self.rate = float(rate)

    def __repr__(self):
        return f"{type(self).__name__}({self.params()})"

    def __eq__(self, other):
        return type(self) is type(other) and self.params() == other.params()

    def params(self):
        return {"shape": self.shape, "rate": self.rate}

    def spec(self):
        return f"gamma:shape={self.shape!r},rate={self.rate!r}"

    # --- moments and transforms -------------------------------------
    def mean(self):
        return self.shape / self.rate

    def var(self):
        return self.shape / self.rate**2

    def support(self):
        return (0.0, math.inf)

    def mgf(self, s):
        """E[exp(sX)], ``inf`` for ``s >= rate``."""
        if s >= self.rate:
            return math.inf
        return math.exp(-self.shape * math.log1p(-s / self.rate))

    def moment_tilted(self, s, i):
        """E[X**i exp(sX)]."""
        if s >= self.rate:
            return math.inf
        r = self.rate - s
        log_val = (
            special.gammaln(self.shape + i)
            - special.gammaln(self.shape)
            + self.shape * math.log(self.rate)
            - (self.shape + i) * math.log(r)
        )
        return math.exp(log_val)

    # --- distribution functions -------------------------------------
    def pdf(self, x):
        return stats.gamma.pdf(x, self.shape, scale=1.0 / self.rate)

    def cdf(self, x):
        return stats.gamma.cdf(x, self.shape, scale=1.0 / self.rate)

    def sf(self, x):
        return stats.gamma.sf(x, self.shape, scale=1.0 / self.rate)

    def tilted(self, s):
        """The law proportional to ``exp(s x)`` times this one."""
        if s >= self.rate:
            raise ValueError("tilt outside the MGF domain")
        return Gamma(self.shape, self.rate - s)

    # --- sampling -----------------------------------------------------
    def rvs(self, size=None, random_state=None):
        rng = np.random.default_rng(random_state)
        return rng.gamma(self.shape, 1.0 / self.rate, size=size)


class Exponential(Gamma):
    """Exponential law with the given ``rate``."""

    name = "exp"

    def __init__(self, rate=1.0):
        super().__init__(1.0, rate)

    def params(self):
        return {"rate": self.rate}

    def spec(self):
        return f"exp:rate={self.rate!r}"

    def tilted(self, s):
        if s >= self.rate:
            raise ValueError("tilt outside the MGF domain")
        return Exponential(self.rate - s)

    def rvs(self, size=None, random_state=None):
        rng = np.random.default_rng(random_state)
        return rng.exponential(1.0 / self.rate, size=size)


MARGINALS = {"exp": Exponential, "gamma": Gamma}


def parse_marginal(text):
    """Build a marginal from ``"exp:rate=2"`` or ``"gamma:shape=2,rate=1"``."""
    name, _, rest = str(text).partition(":")
    name = name.strip().lower()
    if name not in MARGINALS:
        raise ValueError(f"unknown marginal law {name!r}; choose from {sorted(MARGINALS)}")
    kwargs = {}
    for item in filter(None, (p.strip() for p in rest.split(","))):
        key, eq, val = item.partition("=")
        if not eq:
            raise ValueError(f"malformed marginal parameter {item!r}")
        kwargs[key.strip()] = float(val)
    try:
        return MARGINALS[name](**kwargs)
    except TypeError as exc:
        raise ValueError(f"bad parameters for {name}: {exc}") from None
