"""Shared test utilities: a finite-set backend and dyadic random draws."""

from __future__ import annotations

import numpy as np

from lagrelax.core import OracleResult


def dyadic(rng, size=None, scale=4, denom=4):
    """Random multiples of 1/denom in [-scale, scale]; sums stay exact."""
    return rng.integers(-scale * denom, scale * denom + 1, size=size) / denom


def random_multipliers(rng, keys, density=0.7, scale=4):
    return {k: float(dyadic(rng, scale=scale)) for k in keys if rng.random() < density}


class FiniteBackend:
    """max c.y subject to A y = b over an explicit list of integer vectors.

    The dual is max_y c.y + u.(A y - b); ties go to the lowest index.
    """

    def __init__(self, ys, c, A, b):
        self.ys = np.asarray(ys, dtype=float)
        self.c = np.asarray(c, dtype=float)
        self.A = np.asarray(A, dtype=float)
        self.b = np.asarray(b, dtype=float)

    def describe(self):
        return {"problem": "finite", "structures": len(self.ys)}

    def _u(self, u):
        return np.array([u.get(i, 0.0) for i in range(len(self.b))])

    def oracle(self, u):
        uu = self._u(u)
        resid = self.ys @ self.A.T - self.b
        vals = self.ys @ self.c + resid @ uu
        k = int(np.argmax(vals))
        gamma = {i: float(r) for i, r in enumerate(resid[k])}
        return OracleResult(k, float(vals[k]), gamma)

    def primalize(self, k):
        resid = self.A @ self.ys[k] - self.b
        if np.any(resid != 0):
            return None
        return k, float(self.c @ self.ys[k])

    def optimum(self):
        feas = [float(self.c @ y) for y in self.ys if np.all(self.A @ y == self.b)]
        return max(feas)
