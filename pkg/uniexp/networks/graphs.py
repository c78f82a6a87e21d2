import logging
from collections import Counter
from functools import cached_property
from typing import Literal, Optional, Sequence

import networkx as nx
import numpy as np
import scipy.sparse as sp
from pydantic import BaseModel, ConfigDict, model_validator

from uniexp.exceptions import InputError
from uniexp.models.schemas import TimeGrid
from uniexp.services.generator import RateMatrix
from uniexp.services.musps import musps_expmv

logger = logging.getLogger(__name__)

JoinMode = Literal["hh", "hl", "lh", "ll"]
JOIN_MODES: tuple[JoinMode, ...] = ("hh", "hl", "lh", "ll")


class WeightedGraph(BaseModel):
    """
    Undirected graph with positive integer edge weights.

    Attributes:
        n_nodes (int): Number of nodes, labelled 0..n_nodes-1.
        edges (tuple): Sorted (u, v, weight) triples with u < v.
        seed (Optional[int]): Generator seed, when randomly generated.
        last_added (Optional[int]): Node added last by the generator.
    """

    n_nodes: int
    edges: tuple[tuple[int, int, int], ...]
    seed: Optional[int] = None
    last_added: Optional[int] = None

    model_config = ConfigDict(frozen=True)

    @model_validator(mode="after")
    def well_formed(self) -> "WeightedGraph":
        if self.n_nodes < 1:
            raise ValueError("graph needs at least one node")
        seen = set()
        for u, v, w in self.edges:
            if u == v:
                raise ValueError(f"self-loop at node {u}")
            if not (0 <= u < v < self.n_nodes):
                raise ValueError(f"edge ({u}, {v}) must satisfy 0 <= u < v < n_nodes")
            if w < 1:
                raise ValueError(f"edge ({u}, {v}) has weight {w} < 1")
            if (u, v) in seen:
                raise ValueError(f"edge ({u}, {v}) stored twice")
            seen.add((u, v))
        return self

    @classmethod
    def from_multiedges(cls, n_nodes: int, pairs, **kwargs) -> "WeightedGraph":
        """Merge repeated node pairs into single edges weighted by multiplicity."""
        counts = Counter((min(u, v), max(u, v)) for u, v in pairs)
        edges = tuple(sorted((u, v, k) for (u, v), k in counts.items()))
        return cls(n_nodes=n_nodes, edges=edges, **kwargs)

    def to_networkx(self) -> nx.Graph:
        graph = nx.Graph()
        graph.add_nodes_from(range(self.n_nodes))
        graph.add_weighted_edges_from(self.edges)
        return graph

    @cached_property
    def degrees(self) -> np.ndarray:
        """Weighted degree of every node."""
        degree = np.zeros(self.n_nodes, dtype=np.int64)
        for u, v, w in self.edges:
            degree[u] += w
            degree[v] += w
        return degree

    def highest_degree_node(self) -> int:
        # argmax returns the lowest index among ties
        return int(np.argmax(self.degrees))

    @property
    def total_weight(self) -> int:
        return sum(w for _, _, w in self.edges)


def barabasi_albert(n: int, m: int, seed: int) -> WeightedGraph:
    """
    Preferential-attachment graph with merged multi-edges.

    Starts from two nodes joined by 2m edges. Every further node draws m
    partners one after another, each with probability proportional to the
    current degree among existing nodes (its own edges excluded), so degrees
    move between draws. Repeated edges become one edge weighted by their count.

    Args:
        n (int): Number of nodes, >= 2.
        m (int): Edges per new node, >= 1.
        seed (int): Seed of the Philox generator.

    Returns:
        WeightedGraph: The graph with seed and last-added node recorded.
    """
    if n < 2:
        raise InputError(f"n must be at least 2, got {n}")
    if m < 1:
        raise InputError(f"m must be at least 1, got {m}")
    rng = np.random.Generator(np.random.Philox(seed))

    pairs = [(0, 1)] * (2 * m)
    # node k appears here once per unit of degree
    endpoints = [0, 1] * (2 * m)
    for new in range(2, n):
        for _ in range(m):
            target = endpoints[int(rng.integers(len(endpoints)))]
            pairs.append((target, new))
            endpoints.append(target)
        endpoints.extend([new] * m)

    graph = WeightedGraph.from_multiedges(n, pairs, seed=seed, last_added=n - 1)
    logger.debug("generated graph n=%d m=%d seed=%d with %d edges", n, m, seed, len(graph.edges))
    return graph


def join_graphs(GA: WeightedGraph, GB: WeightedGraph, mode: JoinMode, m: int) -> WeightedGraph:
    """
    Disjoint union of GA and GB plus one bridging edge of weight m.

    Mode letters pick the bridge end in GA then GB: "h" is the highest-degree
    node, "l" the last-added node. GB's nodes are shifted by GA.n_nodes.
    """
    if mode not in JOIN_MODES:
        raise InputError(f"join mode must be one of {JOIN_MODES}, got {mode!r}")
    if m < 1:
        raise InputError(f"bridge weight must be at least 1, got {m}")

    def endpoint(graph: WeightedGraph, letter: str) -> int:
        if letter == "h":
            return graph.highest_degree_node()
        if graph.last_added is None:
            raise InputError("graph has no recorded last-added node")
        return graph.last_added

    offset = GA.n_nodes
    a = endpoint(GA, mode[0])
    b = endpoint(GB, mode[1]) + offset
    edges = list(GA.edges) + [(u + offset, v + offset, w) for u, v, w in GB.edges]
    edges.append((a, b, m))
    return WeightedGraph(n_nodes=GA.n_nodes + GB.n_nodes, edges=tuple(sorted(edges)))


def graph_laplacian(G: WeightedGraph) -> RateMatrix:
    """Negative Laplacian A - D of G as a conservative generator."""
    laplacian = nx.laplacian_matrix(G.to_networkx(), nodelist=range(G.n_nodes), weight="weight")
    return RateMatrix.from_sparse(-sp.csc_matrix(laplacian, dtype=float))


def diffusion_discrepancy(
    nu,
    G1: WeightedGraph,
    G2: WeightedGraph,
    grid: TimeGrid | Sequence[float],
    eps: Optional[float] = None,
) -> np.ndarray:
    """
    L1 distance between nu diffused over G1 and over G2, per grid time.

    Returns:
        np.ndarray: One distance per time.
    """
    if G1.n_nodes != G2.n_nodes:
        raise InputError(f"graphs differ in size: {G1.n_nodes} vs {G2.n_nodes}")
    first = musps_expmv(nu, graph_laplacian(G1), grid, eps)
    second = musps_expmv(nu, graph_laplacian(G2), grid, eps)
    return np.array([np.abs(a.dist - b.dist).sum() for a, b in zip(first, second)])


class BridgeCurves(BaseModel):
    """Discrepancy curves of the four joined graphs against the hub-to-hub join."""

    times: list[float]
    hub: int
    curves: dict[str, list[float]]

    def maxima(self) -> dict[str, float]:
        return {name: max(values) for name, values in self.curves.items()}

    def gap(self, first: str = "hl", second: str = "lh") -> float:
        return max(abs(a - b) for a, b in zip(self.curves[first], self.curves[second]))


def bridge_curves(
    n: int,
    m: int,
    seed_a: int,
    seed_b: int,
    grid: TimeGrid | Sequence[float],
    eps: Optional[float] = None,
) -> BridgeCurves:
    """
    Join two preferential-attachment graphs in all four ways and compare each
    join with the hub-to-hub one, starting from a point mass on the hub of
    the first graph.
    """
    GA = barabasi_albert(n, m, seed_a)
    GB = barabasi_albert(n, m, seed_b)
    joined = {mode: join_graphs(GA, GB, mode, m) for mode in JOIN_MODES}
    hub = GA.highest_degree_node()
    nu = np.zeros(2 * n)
    nu[hub] = 1.0

    reference = musps_expmv(nu, graph_laplacian(joined["hh"]), grid, eps)
    curves = {"hh": [0.0] * len(reference)}
    for mode in JOIN_MODES[1:]:
        results = musps_expmv(nu, graph_laplacian(joined[mode]), grid, eps)
        curves[mode] = [float(np.abs(a.dist - b.dist).sum()) for a, b in zip(reference, results)]
    grid_times = grid.times if isinstance(grid, TimeGrid) else [float(t) for t in grid]
    return BridgeCurves(times=grid_times, hub=hub, curves=curves)
