"""Parametric curve classes whose laws define measure-valued curves.

A curve class maps a parameter tuple (one point per parameter slot) and a
time t in [0, 1] to a state-space point. Both supported classes are affine in
the parameters for fixed t, which is what lets the transport cost decouple
across snapshots.
"""

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class CurveClass:
    """Curve family: "linear" (two endpoints) or "quadratic" (point, velocity, acceleration)."""

    kind: str

    def __post_init__(self):
        if self.kind not in ("linear", "quadratic"):
            raise ValueError(f"unknown curve kind {self.kind!r}")

    @property
    def n_params(self) -> int:
        return 2 if self.kind == "linear" else 3

    def coefficients(self, t: float) -> np.ndarray:
        """Weights c(t) such that the curve point is sum_j c_j(t) * param_j.

        linear:    (1 - t) * x0 + t * x1
        quadratic: x0 + t * x1 + t^2 * x2
        """
        t = float(t)
        if self.kind == "linear":
            return np.array([1.0 - t, t])
        return np.array([1.0, t, t * t])

    def evaluate(self, params: np.ndarray, t: float) -> np.ndarray:
        """Evaluate the curve at time t for stacked parameter tuples.

        Args:
            params: array of shape (..., k, d); k = n_params.
            t: evaluation time.

        Returns:
            array of shape (..., d).
        """
        params = np.asarray(params, dtype=float)
        if params.shape[-2] != self.n_params:
            raise ValueError("parameter tuple size does not match curve class")
        coeff = self.coefficients(t)
        return np.tensordot(params, coeff, axes=([-2], [0]))


LINEAR = CurveClass("linear")
QUADRATIC = CurveClass("quadratic")


def curve_from_name(name: str) -> CurveClass:
    return CurveClass(name.strip().lower())
