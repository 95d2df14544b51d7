#!/usr/bin/env python3
"""Limit-shape demo: tent boundary data on the square grid tension.

Builds the tension table, minimizes the height functional for two-slope
boundary data, and writes the level-curve foliation to leaves.svg.
"""

from dataclasses import replace

import numpy as np

import detforest as df


def main():
    p = df.char_poly(df.square_grid_graph())
    print("sampling the tension table (resolution 8)...")
    table = df.build_tension_table(p, 8)
    print("convexity violations:", len(table.convexity_violations()))

    mesh = df.rectangle_mesh(10, 10)
    pts = mesh.points
    tent = np.where(pts[:, 0] <= 0.5, 0.5 * pts[:, 0], 0.5 * (1 - pts[:, 0]))
    start = replace(mesh, values=np.where(mesh.is_boundary, tent, 0.0).copy())
    sol, info = df.minimize_height(start, table, tol=1e-6)
    print(f"energy {info['energies'][-1]:.6f} after {info['sweeps']} sweeps")

    leaves = df.extract_leaves(sol, 0.05)
    print("leaves:", len(leaves))
    parts = ['<svg xmlns="http://www.w3.org/2000/svg" width="600" height="600">']
    for chain in leaves:
        path = " ".join(f"{50 + 500 * x:.2f},{550 - 500 * y:.2f}" for (x, y) in chain)
        parts.append(f'<polyline points="{path}" fill="none" stroke="#2c3e50"/>')
    parts.append("</svg>")
    with open("leaves.svg", "w") as fh:
        fh.write("\n".join(parts) + "\n")
    print("wrote leaves.svg")


if __name__ == "__main__":
    main()
