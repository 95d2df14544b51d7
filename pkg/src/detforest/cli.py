"""detforest command line: one subcommand per analysis, JSON/CSV/SVG artifacts.

Every run writes exactly one machine-readable manifest (subcommand, parsed
flags, input digests, seed, version, wall time).  Artifacts go to --out or
stdout; the manifest goes to <out>.manifest.json, or stderr when printing
to stdout.  Reruns with identical inputs and seed produce byte-identical
artifacts.  Exit codes: 0 success, 2 validation error, 3 numerical
non-convergence, 64 usage.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
import time

import numpy as np

from . import __version__
from .errors import NumericalError, ValidationError
from .graph import cover, electrical_transform, load_graph
from .kernel import strip_kernel_entry, torus_kernel_entry, transfer_current
from .laplacian import char_poly
from .laurent import newton_polygon
from .limitshape import (HeightField, build_tension_table, extract_leaves,
                         minimize_height, rectangle_mesh)
from .sampling import MtsfChain, dpp_sample, make_rng, wilson_forest
from .spectral import (correlation_class, growth_rate, harnack_check, ronkin,
                       divisor_xi_eta, special_divisor_grid, strip_roots,
                       surface_tension)


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _digest(path):
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        h.update(fh.read())
    return h.hexdigest()


def _dump(obj):
    return json.dumps(obj, sort_keys=True, separators=(",", ":")) + "\n"


def _emit(artifact_text, manifest, out):
    if out:
        with open(out, "w") as fh:
            fh.write(artifact_text)
        with open(out + ".manifest.json", "w") as fh:
            fh.write(_dump(manifest))
    else:
        sys.stdout.write(artifact_text)
        sys.stderr.write(_dump(manifest))


def _slope(text):
    s, t = (float(x) for x in text.split(","))
    return s, t


def _parse_grid(text):
    # "x0:x1:n" -> n evenly spaced values
    a, b, n = text.split(":")
    return np.linspace(float(a), float(b), int(n))


def build_parser():
    top = _Parser(prog="detforest", description=__doc__)
    sub = top.add_subparsers(dest="cmd", metavar="SUBCOMMAND")

    def cmd(name, **kw):
        p = sub.add_parser(name, **kw)
        p.add_argument("--out", help="artifact file (default stdout)")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--threads", type=int, default=1,
                       help="worker threads for grid sweeps; outputs are identical for any value")
        p.add_argument("--tol", type=float, default=None, help="override default tolerance")
        return p

    p = cmd("charpoly", help="characteristic polynomial det(Delta + D_M)")
    p.add_argument("--graph", required=True)
    p.add_argument("--radius", type=float, default=1.0)

    p = cmd("roots", help="roots of the strip characteristic polynomial")
    p.add_argument("--graph", required=True)

    p = cmd("growth", help="growth rates a_j of the j-component forest measures")
    p.add_argument("--graph", required=True)

    p = cmd("polygon", help="Newton polygon of the torus characteristic polynomial")
    p.add_argument("--graph", required=True)

    p = cmd("ronkin", help="Ronkin function values; --grid gives CSV (columns x,y,R)")
    p.add_argument("--graph", required=True)
    p.add_argument("--x", type=float, default=0.0)
    p.add_argument("--y", type=float, default=0.0)
    p.add_argument("--grid", help="x0:x1:n,y0:y1:m sweep in CSV")

    p = cmd("sigma", help="surface tension; --grid gives CSV (columns s,t,sigma,x,y)")
    p.add_argument("--graph", required=True)
    p.add_argument("--slope", default="0,0")
    p.add_argument("--grid", help="s0:s1:n,t0:t1:m sweep in CSV")

    p = cmd("kernel", help="determinantal kernel entries")
    p.add_argument("--graph", required=True)
    p.add_argument("--slope", help="s,t for the torus kernel")
    p.add_argument("--component", type=int, help="j for the strip kernel")
    p.add_argument("--edges", help="comma list of edge indices (default: all)")
    p.add_argument("--shift", default="0,0", help="x[,y] translation of the column edge")
    p.add_argument("--point", help="re,im: pointwise K(z) / K(z,w) at z=re+i*im (w likewise)")

    p = cmd("sample", help="sample edge configurations on a finite cover")
    p.add_argument("--graph", required=True)
    p.add_argument("--method", choices=["dpp", "wilson", "mcmc"], required=True)
    p.add_argument("--n", default="1", help="cover size n1[,n2]")
    p.add_argument("--z", type=float, default=-1.0, help="strip monodromy (dpp)")
    p.add_argument("--zw", default="-1,-1", help="torus monodromies (dpp)")
    p.add_argument("--steps", type=int, default=100000)
    p.add_argument("--homology", default="1,0", help="target class p,q (mcmc)")
    p.add_argument("--root", help="designated root vertex (wilson with M=0)")

    p = cmd("harnack", help="intersection count of {P=0} with a torus |z|=r1, |w|=r2")
    p.add_argument("--graph", required=True)
    p.add_argument("--r1", type=float, default=1.0)
    p.add_argument("--r2", type=float, default=1.0)

    p = cmd("divisor", help="special divisor points of the n-fold square grid")
    p.add_argument("--n", type=int, required=True)

    p = cmd("decay", help="correlation decay class at a slope")
    p.add_argument("--graph", required=True)
    p.add_argument("--slope", default="0,0")
    p.add_argument("--max-dist", type=int, default=24)

    p = cmd("limitshape", help="minimize the surface-tension functional over heights")
    p.add_argument("--graph", required=True)
    p.add_argument("--mesh", help="mesh JSON (points, triangles, boundary)")
    p.add_argument("--nx", type=int, default=8)
    p.add_argument("--ny", type=int, default=8)
    p.add_argument("--boundary", help="CSV rows vertex_index,height")
    p.add_argument("--slope", default="0.2,0.1", help="affine boundary data when no CSV")
    p.add_argument("--resolution", type=int, default=8)
    p.add_argument("--spacing", type=float, default=0.1)

    p = cmd("transform", help="apply a massive electrical move")
    p.add_argument("--graph", required=True)
    p.add_argument("--move", choices=["series", "parallel", "dead_branch", "star_triangle"],
                   required=True)
    p.add_argument("--site", required=True, help="vertex id, or k1,k2 edge pair for parallel")

    return top


# ---------------------------------------------------------------------------
# handlers


def _pool_map(fn, items, threads):
    if threads and threads > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=threads) as ex:
            return list(ex.map(fn, items))  # results keep index order
    return [fn(it) for it in items]


def _run_charpoly(args):
    g = load_graph(args.graph)
    return _dump(char_poly(g, radius=args.radius).to_json())


def _run_roots(args):
    g = load_graph(args.graph)
    rep = strip_roots(char_poly(g), massive=g.is_massive())
    return _dump({
        "roots": list(rep.roots),
        "roots_geq_one": list(rep.top_roots()),
        "leading_coeff": rep.leading_coeff,
        "massive": rep.massive,
        "width": rep.m,
    })


def _run_growth(args):
    g = load_graph(args.graph)
    rep = strip_roots(char_poly(g), massive=g.is_massive())
    return _dump({"growth": {str(j): growth_rate(rep, j) for j in sorted(rep.growth)}})


def _run_polygon(args):
    g = load_graph(args.graph)
    poly = newton_polygon(char_poly(g))
    return _dump({"vertices": [[int(a), int(b)] for (a, b) in poly.vertices]})


def _run_ronkin(args):
    g = load_graph(args.graph)
    p = char_poly(g)
    rtol = args.tol or 1e-6
    if args.grid:
        gx, gy = args.grid.split(",")
        xs, ys = _parse_grid(gx), _parse_grid(gy)
        points = [(float(x), float(y)) for x in xs for y in ys]
        vals = _pool_map(lambda pt: ronkin(p, pt[0], pt[1], rtol=rtol), points, args.threads)
        lines = ["x,y,R"] + [f"{x!r},{y!r},{float(v)!r}" for (x, y), v in zip(points, vals)]
        return "\n".join(lines) + "\n"
    return _dump({"x": args.x, "y": args.y, "R": ronkin(p, args.x, args.y, rtol=rtol)})


def _run_sigma(args):
    g = load_graph(args.graph)
    p = char_poly(g)
    if args.grid:
        gs, gt = args.grid.split(",")
        ss, ts = _parse_grid(gs), _parse_grid(gt)
        poly = newton_polygon(p)
        points = [(float(s), float(t)) for s in ss for t in ts if poly.contains(s, t)]
        pts = _pool_map(lambda st: surface_tension(p, st[0], st[1]), points, args.threads)
        lines = ["s,t,sigma,x,y"]
        lines += [
            f"{a.slope[0]!r},{a.slope[1]!r},{float(a.sigma)!r},{float(a.x)!r},{float(a.y)!r}"
            for a in pts
        ]
        return "\n".join(lines) + "\n"
    s, t = _slope(args.slope)
    at = surface_tension(p, s, t, tol=args.tol or 1e-7)
    return _dump({"s": s, "t": t, "sigma": at.sigma, "argmin": [at.x, at.y]})


def _run_kernel(args):
    g = load_graph(args.graph)
    edges = (
        [int(k) for k in args.edges.split(",")] if args.edges else list(range(len(g.edges)))
    )
    shift = [int(v) for v in args.shift.split(",")]
    rtol = args.tol or 1e-8
    if args.point:
        re, im = (float(v) for v in args.point.split(","))
        K = transfer_current(g, re + 1j * im) if g.kind == "strip" else \
            transfer_current(g, re + 1j * im, re + 1j * im)
        ent = [[[K.entries[a, b].real, K.entries[a, b].imag] for b in edges] for a in edges]
        return _dump({"entries": ent, "contour": None, "residual": 0.0})
    if args.component is not None:
        if g.kind != "strip":
            raise ValidationError("--component applies to strip graphs")
        x1 = 0
        x2 = shift[0]
        ent = [[strip_kernel_entry(g, args.component, a, b, x1, x2, rtol=rtol) for b in edges]
               for a in edges]
        return _dump({"entries": ent, "contour": {"component": args.component},
                      "residual": rtol})
    if not args.slope:
        raise ValidationError("kernel needs --component (strip) or --slope (torus)")
    s, t = _slope(args.slope)
    at = surface_tension(char_poly(g), s, t)
    sx = shift[0]
    sy = shift[1] if len(shift) > 1 else 0
    ent = [[torus_kernel_entry(g, s, t, a, b, shift=(sx, sy), rtol=rtol, at=at) for b in edges]
           for a in edges]
    return _dump({"entries": ent, "contour": {"x": at.x, "y": at.y}, "residual": rtol})


def _svg_config(cov, config):
    """Deterministic desk-scale drawing; cycle components highlighted."""
    pos = {}
    nbase = len(cov.base.vertices)
    base_at = {v: k for k, v in enumerate(cov.base.vertices)}
    for i, (v, a, b) in enumerate(cov.vertices):
        k = base_at[v]
        pos[i] = (
            60.0 + 120.0 * a + 80.0 * (k % max(1, int(np.ceil(np.sqrt(nbase))))) / max(1, nbase),
            60.0 + 120.0 * b + 80.0 * (k // max(1, int(np.ceil(np.sqrt(nbase))))) / max(1, nbase),
        )
    cyc_edges = set()
    roots = []
    for comp in config.components:
        if comp.kind == "cycle_rooted_tree":
            cyc_edges.update(comp.edges)
        elif comp.root is not None:
            roots.append(comp.root)
    wmax = 60 + 120 * cov.n1 + 100
    hmax = 60 + 120 * cov.n2 + 100
    parts = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{wmax}" height="{hmax}">']
    for k in config.edges:
        e = cov.edges[k]
        (x1, y1), (x2, y2) = pos[e.u], pos[e.v]
        x2 += 120.0 * e.dx
        y2 += 120.0 * e.dy
        color = "#c0392b" if k in cyc_edges else "#2c3e50"
        parts.append(
            f'<line x1="{x1:.2f}" y1="{y1:.2f}" x2="{x2:.2f}" y2="{y2:.2f}" '
            f'stroke="{color}" stroke-width="2"/>'
        )
    for r in roots:
        (x, y) = pos[r]
        parts.append(f'<circle cx="{x:.2f}" cy="{y:.2f}" r="5" fill="#27ae60"/>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def _run_sample(args):
    g = load_graph(args.graph)
    ns = [int(v) for v in args.n.split(",")]
    n1 = ns[0]
    n2 = ns[1] if len(ns) > 1 else 1
    cov = cover(g, n1, n2)
    rng = make_rng(args.seed)
    if args.method == "dpp":
        if g.kind == "strip":
            K = transfer_current(cov.as_periodic(), args.z)
        else:
            zz, ww = (float(v) for v in args.zw.split(","))
            K = transfer_current(cov.as_periodic(), zz, ww)
        edges = dpp_sample(K, rng)
        doc = {"method": "dpp", "edges": list(edges), "seed": args.seed}
        from .sampling import classify_config

        try:
            cfg = classify_config(cov, edges)
            doc["homology"] = list(cfg.homology)
            doc["components"] = _component_doc(cfg)
            config = cfg
        except ValidationError:
            config = None
    elif args.method == "wilson":
        root = cov.vertex_index.get(_parse_root(args.root)) if args.root else None
        cfg = wilson_forest(cov, rng, root=root)
        doc = {"method": "wilson", "edges": list(cfg.edges), "seed": args.seed,
               "homology": list(cfg.homology), "components": _component_doc(cfg)}
        config = cfg
    else:
        p, q = (int(v) for v in args.homology.split(","))
        chain = MtsfChain(cov, (p, q), rng)
        for _ in range(args.steps):
            chain.step()
        cfg = chain.config
        doc = {"method": "mcmc", "edges": list(cfg.edges), "seed": args.seed,
               "steps": args.steps, "homology": list(cfg.homology),
               "acceptance_rate": chain.accepted / max(1, chain.steps),
               "components": _component_doc(cfg)}
        config = cfg
    if args.out and args.out.endswith(".svg"):
        if config is None:
            raise ValidationError("cannot draw a configuration that is not an MTSF")
        return _svg_config(cov, config)
    return _dump(doc)


def _parse_root(text):
    parts = text.split("@")
    if len(parts) == 2:
        a, b = parts[1].split(",")
        return (parts[0], int(a), int(b))
    return (text, 0, 0)


def _component_doc(cfg):
    out = []
    for comp in cfg.components:
        d = {"kind": comp.kind, "vertices": list(comp.vertices), "edges": list(comp.edges)}
        if comp.root is not None:
            d["root"] = comp.root
        if comp.cycle_class is not None:
            d["cycle_class"] = list(comp.cycle_class)
        out.append(d)
    return out


def _run_harnack(args):
    g = load_graph(args.graph)
    rep = harnack_check(char_poly(g), args.r1, args.r2)
    return _dump({
        "r1": args.r1, "r2": args.r2, "count": rep.count,
        "classification": rep.classification,
        "points": [[z.real, z.imag, w.real, w.imag] for (z, w) in rep.points],
        "pass": rep.passes(),
    })


def _run_divisor(args):
    pts = special_divisor_grid(args.n)
    xi, eta = divisor_xi_eta(pts) if len(pts) else (np.array([]), np.array([]))
    return _dump({
        "n": args.n,
        "count": len(pts),
        "points": [[u.real, u.imag] for u in pts],
        "xi": [[v.real, v.imag] for v in xi],
        "eta": [[v.real, v.imag] for v in eta],
    })


def _run_decay(args):
    g = load_graph(args.graph)
    s, t = _slope(args.slope)
    rep = correlation_class(char_poly(g), s, t, max_dist=args.max_dist)
    return _dump({
        "classification": rep.classification,
        "rate": rep.rate,
        "r_squared": rep.r_squared,
        "r_squared_other": rep.r_squared_other,
        "contour": list(rep.contour),
    })


def _load_mesh(path):
    with open(path) as fh:
        doc = json.load(fh)
    return HeightField(
        np.array(doc["points"], dtype=float),
        np.array(doc["triangles"], dtype=int),
        np.array(doc["boundary"], dtype=bool),
        np.zeros(len(doc["points"])),
    )


def _run_limitshape(args):
    g = load_graph(args.graph)
    table = build_tension_table(char_poly(g), args.resolution)
    field = _load_mesh(args.mesh) if args.mesh else rectangle_mesh(args.nx, args.ny)
    vals = field.values
    if args.boundary:
        with open(args.boundary) as fh:
            for line in fh:
                line = line.strip()
                if not line or line.startswith("#"):
                    continue
                k, v = line.split(",")
                vals[int(k)] = float(v)
    else:
        s, t = _slope(args.slope)
        vals[:] = field.points @ np.array([s, t])
    solved, info = minimize_height(field, table, tol=args.tol or 1e-8)
    leaves = extract_leaves(solved, args.spacing)
    if args.out and args.out.endswith(".svg"):
        return _svg_leaves(solved, leaves)
    return _dump({
        "energy": info["energies"][-1],
        "sweeps": info["sweeps"],
        "heights": [float(v) for v in solved.values],
        "leaf_count": len(leaves),
    })


def _svg_leaves(field, leaves):
    (x0, y0) = field.points.min(axis=0)
    (x1, y1) = field.points.max(axis=0)
    scale = 500.0 / max(x1 - x0, y1 - y0, 1e-9)

    def sx(x):
        return 50 + scale * (x - x0)

    def sy(y):
        return 50 + scale * (y1 - y)

    parts = ['<svg xmlns="http://www.w3.org/2000/svg" width="600" height="600">']
    for chain in leaves:
        pts = " ".join(f"{sx(x):.2f},{sy(y):.2f}" for (x, y) in chain)
        parts.append(f'<polyline points="{pts}" fill="none" stroke="#2c3e50" stroke-width="1.5"/>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def _run_transform(args):
    g = load_graph(args.graph)
    if args.move == "parallel":
        site = tuple(int(v) for v in args.site.split(","))
    else:
        site = args.site
    out = electrical_transform(g, args.move, site)
    return _dump(out.to_json())


HANDLERS = {
    "charpoly": _run_charpoly,
    "roots": _run_roots,
    "growth": _run_growth,
    "polygon": _run_polygon,
    "ronkin": _run_ronkin,
    "sigma": _run_sigma,
    "kernel": _run_kernel,
    "sample": _run_sample,
    "harnack": _run_harnack,
    "divisor": _run_divisor,
    "decay": _run_decay,
    "limitshape": _run_limitshape,
    "transform": _run_transform,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        sys.stderr.write(f"usage error: {exc}\n")
        parser.print_usage(sys.stderr)
        return 64
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    if not args.cmd:
        parser.print_usage(sys.stderr)
        return 64
    t0 = time.perf_counter()
    try:
        artifact = HANDLERS[args.cmd](args)
    except ValidationError as exc:
        sys.stderr.write(f"validation error: {exc}\n")
        return 2
    except NumericalError as exc:
        sys.stderr.write(f"numerical error: {exc}\n")
        return 3
    manifest = {
        "subcommand": args.cmd,
        "flags": {k: v for k, v in sorted(vars(args).items()) if k != "cmd"},
        "inputs": {
            flag: _digest(getattr(args, flag))
            for flag in ("graph", "mesh", "boundary")
            if getattr(args, flag, None) and not str(getattr(args, flag)).lstrip().startswith("{")
        },
        "seed": getattr(args, "seed", None),
        "version": __version__,
        "wall_time_s": time.perf_counter() - t0,
    }
    _emit(artifact, manifest, args.out)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
