import numpy as np
import pytest

from hierdag import build

TOY1_NODES = ["entity", "animal", "vehicle", "dog", "corgi", "car", "bus"]
TOY1_EDGES = [
    ("animal", "entity"),
    ("vehicle", "entity"),
    ("dog", "animal"),
    ("corgi", "dog"),
    ("car", "vehicle"),
    ("bus", "vehicle"),
]
TOY1_LABELED = ["corgi", "car", "bus"]

TOY2_NODES = ["entity", "mammal", "aquatic", "whale", "dolphin"]
TOY2_EDGES = [
    ("mammal", "entity"),
    ("aquatic", "entity"),
    ("whale", "mammal"),
    ("whale", "aquatic"),
    ("dolphin", "whale"),
]
TOY2_LABELED = ["whale", "dolphin"]

TOY1_TSV = """# TOY1
animal\tentity
vehicle\tentity
dog\tanimal
corgi\tdog
car\tvehicle
bus\tvehicle
!label\tcorgi
!label\tcar
!label\tbus
"""


@pytest.fixture
def toy1():
    return build(TOY1_NODES, TOY1_EDGES, TOY1_LABELED)


@pytest.fixture
def toy2():
    return build(TOY2_NODES, TOY2_EDGES, TOY2_LABELED)


def vec(h, values: dict, default=0.0):
    out = np.full(len(h), default, dtype=np.float64)
    for name, v in values.items():
        out[h.index(name)] = v
    return out


def random_dag(rng, n, p=None):
    """Random DAG as (names, edges, labeled) with edges pointing to nodes
    earlier in a random permutation, so it is acyclic by construction."""
    p = rng.uniform(0.05, 0.4) if p is None else p
    perm = rng.permutation(n)
    names = [f"v{i}" for i in range(n)]
    edges = []
    for i in range(1, n):
        for j in range(i):
            if rng.random() < p:
                edges.append((names[perm[i]], names[perm[j]]))
    labeled = [nm for nm in names if rng.random() < 0.5] or [names[0]]
    return names, edges, labeled


def reachability_oracle(n, edges):
    """O(n^3) Warshall closure over index pairs (child, parent)."""
    reach = [[False] * n for _ in range(n)]
    for c, p in edges:
        reach[c][p] = True
    for k in range(n):
        for i in range(n):
            if reach[i][k]:
                for j in range(n):
                    if reach[k][j]:
                        reach[i][j] = True
    return reach


# Central differences with step 1e-6 carry ~1e-10 absolute roundoff, so
# relative error is measured against at least this magnitude.
GRAD_FLOOR = 1e-4


def finite_difference_worst(net, x, objective, h=1e-6):
    """Largest relative error between backprop and central differences over
    every parameter of ``net`` for the scalar ``objective(out)[0]``."""
    _, grad_out = objective(net.forward(x))
    analytic = net.backward(x, grad_out)
    worst = 0.0
    for p, g in zip(net.params(), analytic):
        flat, gflat = p.reshape(-1), g.reshape(-1)
        for i in range(flat.size):
            old = flat[i]
            flat[i] = old + h
            up = objective(net.forward(x))[0]
            flat[i] = old - h
            down = objective(net.forward(x))[0]
            flat[i] = old
            fd = (up - down) / (2 * h)
            denom = max(abs(fd), abs(gflat[i]), GRAD_FLOOR)
            worst = max(worst, abs(fd - gflat[i]) / denom)
    return worst
