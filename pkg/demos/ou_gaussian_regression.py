#!/usr/bin/env python3
"""Gaussian-case regression on relaxation-process variances.

Twenty centered Gaussian snapshots follow the variance law 2(1 - exp(-2t)) of
a linear stochastic relaxation process. Three fits are compared: the best
Wasserstein geodesic (affine standard deviation), the block-covariance SDP
over measure-valued lines, and the same SDP over quadratic curves. The script
prints the objective table and writes the fitted standard-deviation curves to
CSV for plotting.
"""

import os

import numpy as np

import wasscurve as wc
from wasscurve.dataio import write_csv


def main(outdir="demo_output"):
    ts = np.linspace(0.1, 1.0, 20)
    sig2 = 2.0 * (1.0 - np.exp(-2.0 * ts))
    lam = np.full(20, 1.0 / 20.0)
    data = [(t, l, np.array([[v]])) for t, l, v in zip(ts, lam, sig2)]

    lin_blocks, lin_curve = wc.fit_gaussian_sdp(data, wc.LINEAR, tol=1e-9, max_iter=200000)
    quad_blocks, quad_curve = wc.fit_gaussian_sdp(data, wc.QUADRATIC, tol=1e-9, max_iter=200000)
    geo_params, geo_residual = wc.gaussian_1d_parametric_oracle(
        [(t, l, float(np.sqrt(v))) for t, l, v in zip(ts, lam, sig2)]
    )

    print("objective (weighted squared W2):")
    print(f"  geodesic regression : {geo_residual:.6f}  (sigma0={geo_params[0]:.3f}, sigma1={geo_params[1]:.3f})")
    print(f"  measure-valued lines: {lin_blocks.diagnostics.objective:.6f}  "
          f"({lin_blocks.diagnostics.iterations} ADMM iterations)")
    print(f"  quadratic curves    : {quad_blocks.diagnostics.objective:.6f}  "
          f"({quad_blocks.diagnostics.iterations} ADMM iterations)")
    print("\nNote: for concave 1D variance data the line fit coincides with the")
    print("geodesic fit exactly; the quadratic family is what buys accuracy here.")

    query = np.linspace(0.0, 1.0, 101)
    rows = []
    for t in query:
        rows.append(
            (
                t,
                float(np.sqrt(max(lin_curve.covariance(t)[0, 0], 0.0))),
                float(np.sqrt(max(quad_curve.covariance(t)[0, 0], 0.0))),
                float((1 - t) * geo_params[0] + t * geo_params[1]),
                float(np.sqrt(2.0 * (1.0 - np.exp(-2.0 * t)))),
            )
        )
    os.makedirs(outdir, exist_ok=True)
    path = os.path.join(outdir, "ou_fitted_sigmas.csv")
    write_csv(path, ["t", "sigma_linear", "sigma_quadratic", "sigma_geodesic", "sigma_true"], rows)
    print(f"\nwrote {path}")


if __name__ == "__main__":
    main()
