"""Exact and MCMC sampling of edge configurations on finite covers.

dpp_sample draws from a determinantal measure by chain-rule conditioning,
valid for the naturally non-symmetric kernels here as long as every
conditional marginal stays a probability (asserted at runtime).
wilson_forest runs loop-erased random walks with mass absorption and is an
exact sampler for the M-weighted rooted spanning forest law.  mcmc_sample
runs a Metropolis chain on multi-type spanning forests at fixed total
homology class.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import KernelError, ValidationError
from .graph import FiniteCover
from .kernel import KernelMatrix

MARGINAL_TOL = 1e-7


def make_rng(seed):
    """Counter-based generator; runs are reproducible from the seed alone."""
    return np.random.Generator(np.random.Philox(key=seed))


# ---------------------------------------------------------------------------
# configurations


@dataclass(frozen=True)
class Component:
    kind: str  # "rooted_tree" | "cycle_rooted_tree"
    vertices: tuple
    edges: tuple
    root: int | None = None
    cycle_class: tuple | None = None


@dataclass(frozen=True)
class ForestConfig:
    edges: tuple
    components: tuple
    homology: tuple


def _edge_tuple(cov, k):
    e = cov.edges[k]
    return (e.u, e.v, e.dx, e.dy)


def classify_config(cov: FiniteCover, edge_ids, roots=()) -> ForestConfig:
    """Validate an edge subset (+ marked roots) as an MTSF and type its components.

    Every component must be a tree carrying exactly one root, or unicyclic
    carrying none with a noncontractible cycle; all cycle classes must agree
    up to sign and the total class is their consistently oriented sum.
    """
    edge_ids = tuple(sorted(edge_ids))
    roots = set(roots)
    nv = len(cov.vertices)
    parent = list(range(nv))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for k in edge_ids:
        u, v, _, _ = _edge_tuple(cov, k)
        ru, rv = find(u), find(v)
        if ru != rv:
            parent[ru] = rv
    comp_vertices = {}
    for v in range(nv):
        comp_vertices.setdefault(find(v), []).append(v)
    comp_edges = {c: [] for c in comp_vertices}
    for k in edge_ids:
        comp_edges[find(_edge_tuple(cov, k)[0])].append(k)

    components = []
    base_class = None
    total_k = 0
    for c, vs in comp_vertices.items():
        es = comp_edges[c]
        rs = roots & set(vs)
        if len(es) == len(vs) - 1:
            if len(rs) != 1:
                raise ValidationError(f"tree component {sorted(vs)} needs exactly one root, has {len(rs)}")
            components.append(Component("rooted_tree", tuple(sorted(vs)), tuple(sorted(es)), root=rs.pop()))
        elif len(es) == len(vs):
            if rs:
                raise ValidationError("cycle-rooted component must not carry a root")
            cls = _cycle_class(cov, vs, es)
            if cls == (0, 0):
                raise ValidationError("contractible cycle: weight-zero configuration")
            if base_class is None:
                base_class = _canonical_sign(cls)
            if _canonical_sign(cls) != base_class:
                raise ValidationError(f"incompatible cycle classes {cls} vs {base_class}")
            total_k += 1
            components.append(
                Component("cycle_rooted_tree", tuple(sorted(vs)), tuple(sorted(es)),
                          cycle_class=base_class)
            )
        else:
            raise ValidationError("component with more edges than vertices is not an MTSF")
    if base_class is None:
        hom = (0, 0)
    else:
        hom = (total_k * base_class[0], total_k * base_class[1])
    return ForestConfig(edge_ids, tuple(components), hom)


def _canonical_sign(cls):
    i, j = cls
    if i < 0 or (i == 0 and j < 0):
        return (-i, -j)
    return (i, j)


def _cycle_class(cov, comp_vs, comp_es):
    """Residual-offset class of the unique cycle of a unicyclic component."""
    adj = {v: [] for v in comp_vs}
    for k in comp_es:
        u, v, dx, dy = _edge_tuple(cov, k)
        adj[u].append((v, dx, dy, k))
        adj[v].append((u, -dx, -dy, k))
    root = comp_vs[0]
    pos = {root: (0, 0)}
    used = set()
    stack = [root]
    cls = (0, 0)
    while stack:
        x = stack.pop()
        for (y, dx, dy, k) in adj[x]:
            if k in used:
                continue
            used.add(k)
            py = (pos[x][0] + dx, pos[x][1] + dy)
            if y in pos:
                cls = (py[0] - pos[y][0], py[1] - pos[y][1])
            else:
                pos[y] = py
                stack.append(y)
    return cls


def homology_class(config: ForestConfig, cov: FiniteCover):
    """(p, q) = (k i, k j) for k cycles of consistently oriented class (i, j)."""
    # re-derive from the edge set so foreign configs are validated too
    roots = tuple(c.root for c in config.components if c.kind == "rooted_tree")
    return classify_config(cov, config.edges, roots).homology


# ---------------------------------------------------------------------------
# determinantal sampling


def dpp_sample(K, rng) -> tuple:
    """Draw an index subset with Pr(S included) = det K_S^S.

    Sequential conditioning: index i is included with probability K_ii,
    then K is updated by the Schur step K -= col_i row_i / K_ii (included)
    or K -= col_i row_i / (K_ii - 1) (excluded).  Conditionals outside
    [0, 1] (beyond tolerance) mean the kernel is not a valid measure.
    """
    mat = (K.entries if isinstance(K, KernelMatrix) else np.asarray(K)).astype(complex).copy()
    n = mat.shape[0]
    out = []
    for i in range(n):
        p = mat[i, i].real
        if abs(mat[i, i].imag) > MARGINAL_TOL or p < -MARGINAL_TOL or p > 1 + MARGINAL_TOL:
            raise KernelError(f"conditional marginal {mat[i, i]:.6g} for index {i} is not a probability")
        if rng.random() < min(max(p, 0.0), 1.0):
            out.append(i)
            mat -= np.outer(mat[:, i], mat[i, :]) / mat[i, i]
        else:
            mat -= np.outer(mat[:, i], mat[i, :]) / (mat[i, i] - 1.0)
    return tuple(out)


# ---------------------------------------------------------------------------
# Wilson's algorithm with mass absorption


def wilson_forest(cov: FiniteCover, rng, root=None) -> ForestConfig:
    """Exact sample of the M-weighted rooted spanning forest law.

    Loop-erased random walks step to a neighbor with probability
    c / (M_v + sum c) and are absorbed at v (creating a root) with
    probability M_v / (M_v + sum c); walks also stop on the previously
    built forest.  With M = 0 a designated root vertex must be supplied.
    """
    nv = len(cov.vertices)
    masses = [cov.mass_of(i) for i in range(nv)]
    if not any(m > 0 for m in masses) and root is None:
        raise ValidationError("all masses vanish: supply a designated root vertex")
    adj = {i: [] for i in range(nv)}
    for k, e in enumerate(cov.edges):
        adj[e.u].append((e.v, e.c, k))
        if e.u != e.v:
            adj[e.v].append((e.u, e.c, k))
    in_forest = [False] * nv
    roots = []
    if root is not None:
        in_forest[root] = True
        roots.append(root)
    next_edge = {}
    order = [root] if root is not None else []
    order += [i for i in range(nv) if i != root]
    for start in order:
        if in_forest[start]:
            continue
        path = [start]
        path_edge = [None]
        pos = {start: 0}
        while True:
            v = path[-1]
            tot = masses[v] + sum(c for _, c, _ in adj[v])
            r = rng.random() * tot
            if r < masses[v]:
                roots.append(v)
                for i in range(len(path) - 1):
                    next_edge[path[i]] = path_edge[i + 1]
                for u in path:
                    in_forest[u] = True
                break
            acc = masses[v]
            nxt, eid = None, None
            for (u, c, k) in adj[v]:
                acc += c
                if r < acc:
                    nxt, eid = u, k
                    break
            if in_forest[nxt]:
                for i in range(len(path) - 1):
                    next_edge[path[i]] = path_edge[i + 1]
                next_edge[v] = eid
                for u in path:
                    in_forest[u] = True
                break
            if nxt in pos:  # loop erasure
                cut = pos[nxt]
                for u in path[cut + 1:]:
                    del pos[u]
                path = path[:cut + 1]
                path_edge = path_edge[:cut + 1]
            else:
                path.append(nxt)
                path_edge.append(eid)
                pos[nxt] = len(path) - 1
    return classify_config(cov, tuple(next_edge.values()), tuple(roots))


# ---------------------------------------------------------------------------
# MCMC at fixed homology class


class MtsfChain:
    """Metropolis chain on MTSFs of a cover with fixed total homology.

    Moves: (i) edge swap, exchanging one present and one absent edge (the
    cycle-flip move: adding an edge closes a cycle and one edge of it is
    removed); (ii) root shift along an incident edge with an M-weighted
    Hastings ratio; (iii) a reversible root-pair move that merges two
    rooted trees across an absent edge or splits one by removing an edge,
    with the freed side re-rooted by mass weights.  Root shifts alone never
    change the edge count, so (iii) is what makes root sectors communicate.
    Every accepted state is revalidated and must keep the target homology.
    """

    def __init__(self, cov, target, rng, edge_swap_prob=0.8):
        self.cov = cov
        self.target = tuple(target)
        self.rng = rng
        self.ne = len(cov.edges)
        self.nv = len(cov.vertices)
        self.masses = [cov.mass_of(i) for i in range(self.nv)]
        self.massive = any(m > 0 for m in self.masses)
        self.edge_swap_prob = edge_swap_prob if self.massive else 1.0
        self.config = initial_config(cov, self.target, rng)
        self.accepted = 0
        self.steps = 0

    # -- helpers
    def _weight_ratio_edges(self, added, removed):
        num = 1.0
        for k in added:
            num *= self.cov.edges[k].c
        for k in removed:
            num /= self.cov.edges[k].c
        return num

    def _try(self, edge_ids, roots, ratio):
        try:
            cand = classify_config(self.cov, edge_ids, roots)
        except ValidationError:
            return False
        if cand.homology != self.target:
            return False
        if self.rng.random() < min(1.0, ratio):
            self.config = cand
            self.accepted += 1
            return True
        return False

    def _roots(self):
        return [c.root for c in self.config.components if c.kind == "rooted_tree"]

    def step(self):
        self.steps += 1
        u = self.rng.random()
        if u < self.edge_swap_prob:
            self._edge_swap()
        elif u < self.edge_swap_prob + 0.5 * (1 - self.edge_swap_prob):
            self._root_shift()
        else:
            self._root_pair()
        assert self.config.homology == self.target

    def _edge_swap(self):
        present = self.config.edges
        absent = [k for k in range(self.ne) if k not in set(present)]
        if not present or not absent:
            return
        k_in = absent[self.rng.integers(len(absent))]
        k_out = present[self.rng.integers(len(present))]
        edges = tuple(sorted(set(present) - {k_out} | {k_in}))
        ratio = self._weight_ratio_edges([k_in], [k_out])
        self._try(edges, self._roots(), ratio)

    def _root_shift(self):
        roots = self._roots()
        if not roots:
            return
        r = roots[self.rng.integers(len(roots))]
        nbrs = [e.v if e.u == r else e.u for e in self.cov.edges if r in (e.u, e.v)]
        if not nbrs:
            return
        v = nbrs[self.rng.integers(len(nbrs))]
        if v == r or self.masses[r] == 0:
            return
        deg = lambda x: sum(1 for e in self.cov.edges if x in (e.u, e.v))
        ratio = (self.masses[v] / self.masses[r]) * (deg(r) / deg(v))
        new_roots = [v if x == r else x for x in roots]
        if len(set(new_roots)) != len(new_roots):
            return
        self._try(self.config.edges, new_roots, ratio)

    def _root_pair(self):
        present = set(self.config.edges)
        comp_of = {}
        for ci, comp in enumerate(self.config.components):
            for v in comp.vertices:
                comp_of[v] = ci
        if self.rng.random() < 0.5:
            # annihilate: bridge two rooted trees with an absent edge; the root
            # on the v side disappears
            absent = [k for k in range(self.ne) if k not in present]
            if not absent:
                return
            k = absent[self.rng.integers(len(absent))]
            e = self.cov.edges[k]
            cu, cv = comp_of.get(e.u), comp_of.get(e.v)
            comps = self.config.components
            if cu == cv or comps[cu].kind != "rooted_tree" or comps[cv].kind != "rooted_tree":
                return
            root_v = comps[cv].root
            side_mass = sum(self.masses[x] for x in comps[cv].vertices)
            edges = tuple(sorted(present | {k}))
            roots = [r for r in self._roots() if r != root_v]
            # Hastings: forward (1/|absent|), reverse (1/|present'|)(M_root/side mass)
            ratio = (e.c / self.masses[root_v]) * \
                (len(absent) * self.masses[root_v] / (len(edges) * side_mass))
            self._try(edges, roots, ratio)
        else:
            # create: cut a rooted tree; the severed side gets a mass-weighted root
            present_list = list(self.config.edges)
            if not present_list:
                return
            k = present_list[self.rng.integers(len(present_list))]
            e = self.cov.edges[k]
            ci = comp_of.get(e.u)
            if ci != comp_of.get(e.v) or self.config.components[ci].kind != "rooted_tree":
                return
            comp = self.config.components[ci]
            side_v = _side_vertices(self.cov, comp, k, e.v)
            if comp.root in side_v:
                return  # orientation convention: the root must stay on the u side
            side_mass = sum(self.masses[x] for x in side_v)
            if side_mass <= 0:
                return
            pick = self.rng.random() * side_mass
            acc = 0.0
            new_root = None
            for x in side_v:
                acc += self.masses[x]
                if pick < acc:
                    new_root = x
                    break
            edges = tuple(sorted(set(present_list) - {k}))
            roots = self._roots() + [new_root]
            n_absent_after = self.ne - len(edges)
            ratio = (self.masses[new_root] / e.c) * \
                (len(present_list) * side_mass / (n_absent_after * self.masses[new_root]))
            self._try(edges, roots, ratio)


def _side_vertices(cov, comp, cut_edge, start):
    """Vertices of comp reachable from `start` without using cut_edge."""
    adj = {v: [] for v in comp.vertices}
    for k in comp.edges:
        if k == cut_edge:
            continue
        e = cov.edges[k]
        adj[e.u].append(e.v)
        adj[e.v].append(e.u)
    seen = {start}
    stack = [start]
    while stack:
        for y in adj[stack.pop()]:
            if y not in seen:
                seen.add(y)
                stack.append(y)
    return seen


def initial_config(cov: FiniteCover, target, rng) -> ForestConfig:
    """A valid starting MTSF: k disjoint (i, j)-loops plus a wired completion."""
    p, q = target
    if (p, q) == (0, 0):
        if not any(cov.mass_of(i) > 0 for i in range(len(cov.vertices))):
            raise ValidationError("homology (0,0) needs positive mass somewhere")
        return wilson_forest(cov, rng)
    kk = int(np.gcd(p, q))
    i, j = p // kk, q // kk
    loops = _disjoint_loops(cov, (i, j), kk)
    edge_ids = [k for loop in loops for k in loop]
    used = {v for loop in loops for k in loop for v in
            (cov.edges[k].u, cov.edges[k].v)}
    cfg_edges, roots = _complete_wired(cov, edge_ids, used, rng)
    cfg = classify_config(cov, cfg_edges, roots)
    if cfg.homology != tuple(target):
        raise ValidationError(f"could not build initial configuration of class {target}")
    return cfg


def _disjoint_loops(cov, cls, count):
    """Greedy vertex-disjoint cycles of residual class cls on the cover."""
    i, j = cls
    blocked = set()
    loops = []
    for _ in range(count):
        loop = _find_loop(cov, (i, j), blocked)
        if loop is None:
            raise ValidationError(f"no {count} disjoint loops of class {cls} found")
        loops.append(loop)
        for k in loop:
            blocked.add(cov.edges[k].u)
            blocked.add(cov.edges[k].v)
    return loops


def _find_loop(cov, cls, blocked):
    """Backtracking search for a vertex-simple cycle of the given offset class."""
    nv = len(cov.vertices)
    adj = {v: [] for v in range(nv)}
    for k, e in enumerate(cov.edges):
        adj[e.u].append((e.v, e.dx, e.dy, k))
        if e.u != e.v:
            adj[e.v].append((e.u, -e.dx, -e.dy, k))
    bound = max(abs(cls[0]), abs(cls[1])) + 2

    def dfs(start, v, ox, oy, visited, path):
        for (u, dx, dy, k) in adj[v]:
            if u in blocked or (path and k == path[-1]):
                continue
            nox, noy = ox + dx, oy + dy
            if abs(nox) > bound or abs(noy) > bound:
                continue
            if u == start:
                if (nox, noy) == cls and path:
                    return path + [k]
                if (nox, noy) == cls and not path and e_is_loop(k):
                    return [k]
                continue
            if u in visited:
                continue
            visited.add(u)
            path.append(k)
            found = dfs(start, u, nox, noy, visited, path)
            if found:
                return found
            path.pop()
            visited.remove(u)
        return None

    def e_is_loop(k):
        return cov.edges[k].u == cov.edges[k].v

    for start in range(nv):
        if start in blocked:
            continue
        found = dfs(start, start, 0, 0, {start}, [])
        if found:
            return found
    return None


def _complete_wired(cov, loop_edges, used_vertices, rng):
    """Wilson completion wired to the loops; roots only where mass allows."""
    nv = len(cov.vertices)
    masses = [cov.mass_of(i) for i in range(nv)]
    adj = {i: [] for i in range(nv)}
    for k, e in enumerate(cov.edges):
        adj[e.u].append((e.v, e.c, k))
        if e.u != e.v:
            adj[e.v].append((e.u, e.c, k))
    in_forest = [v in used_vertices for v in range(nv)]
    edges = list(loop_edges)
    roots = []
    for start in range(nv):
        if in_forest[start]:
            continue
        path, path_edge, pos = [start], [None], {start: 0}
        while True:
            v = path[-1]
            tot = masses[v] + sum(c for _, c, _ in adj[v])
            r = rng.random() * tot
            if r < masses[v]:
                roots.append(v)
                for t in range(len(path) - 1):
                    edges.append(path_edge[t + 1])
                for u in path:
                    in_forest[u] = True
                break
            acc = masses[v]
            nxt, eid = None, None
            for (u, c, k) in adj[v]:
                acc += c
                if r < acc:
                    nxt, eid = u, k
                    break
            if in_forest[nxt]:
                for t in range(len(path) - 1):
                    edges.append(path_edge[t + 1])
                edges.append(eid)
                for u in path:
                    in_forest[u] = True
                break
            if nxt in pos:
                cut = pos[nxt]
                for u in path[cut + 1:]:
                    del pos[u]
                path = path[:cut + 1]
                path_edge = path_edge[:cut + 1]
            else:
                path.append(nxt)
                path_edge.append(eid)
                pos[nxt] = len(path) - 1
    return tuple(edges), tuple(roots)


def mcmc_sample(cov: FiniteCover, target_homology, steps: int, rng) -> ForestConfig:
    """Run the fixed-homology Metropolis chain for `steps` moves."""
    chain = MtsfChain(cov, target_homology, rng)
    for _ in range(steps):
        chain.step()
    return chain.config
