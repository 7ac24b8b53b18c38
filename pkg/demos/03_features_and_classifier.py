#!/usr/bin/env python3
"""What the classifier sees.

Each (grid point, matrix) pair is described by 33 numbers: 30 global matrix
descriptors (eigenvalue statistics, non-normality and conditioning measures,
norm ratios, structure and sparsity, resolvent probes) plus three distances
from the point to the spectrum. Grid coordinates additionally pass through a
26-dimensional Fourier encoding. A dual-path network with a residual trunk
turns all of that into a sensitivity probability.

Run:  python3 demos/03_features_and_classifier.py
"""

import numpy as np

from pseudospec import (GenSpec, assemble, fourier_encode, forward,
                        global_features, init_params, param_count,
                        point_features, random_banded)

LABELS = {
    1: "mean Re(lambda)", 9: "max |lambda|", 11: "skew energy ratio",
    13: "log10 cond(A)", 21: "nonzero fraction", 24: "log10 cond(V)",
    26: "singular value spread", 28: "resolvent probe at +0.5",
}


def main():
    A, beta = random_banded(GenSpec(n=64, seed=7))
    gf = global_features(A, probe_seed=7)
    print(f"matrix: n = 64, beta = {beta}")
    print("a few of the 30 global features:")
    for idx in sorted(LABELS):
        print(f"  f{idx:<3d} {LABELS[idx]:<28s} = {gf.values[idx - 1]: .4f}")

    print("\nper-point distances (g1 = nearest eigenvalue, g2 = centroid,")
    print("g3 = mean over the spectrum):")
    for z in (0 + 0j, 2 + 1j, gf.eigvals[0]):
        g1, g2, g3 = point_features(z, gf.eigvals)
        print(f"  z = {z: .3f}: g1 = {g1:.4f}, g2 = {g2:.4f}, g3 = {g3:.4f}")

    z = 0.5 + 0.25j
    fv = assemble(gf, z)
    phi = fourier_encode(np.array([z.real, z.imag]))
    print(f"\nassembled feature vector: {fv.shape[0]} entries "
          f"(30 global + 3 local)")
    print(f"Fourier-encoded coordinates: {phi.shape[0]} entries "
          "([x, y] plus sin/cos at frequencies 2, 4, 8, 16, 32, 64)")

    params = init_params(seed=0)
    print(f"\nnetwork: {param_count():,} trainable parameters")
    p = forward(params, phi, fv)
    print(f"untrained forward pass at z = {z}: p = {p:.4f} "
          "(near 0.5, as expected before training)")


if __name__ == "__main__":
    main()
