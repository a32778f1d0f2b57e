"""d-regular sparsity patterns encoded as graphs on vertex set {0, ..., N-1}.

A pattern is the support of a symmetric random matrix: an undirected
graph with self-loops allowed, no multi-edges, in which every vertex has
exactly ``d`` distinct neighbours (a self-loop counts once, as the
diagonal entry it stands for).  Vertex indices are 0-based throughout.

Built-in families:

  complete        all pairs including self-loops (d = n); with
                  ``loops=False`` the strict off-diagonal variant (d = n-1)
  diagonal        n isolated vertices, each with a self-loop (d = 1)
  band            circulant band: x ~ y iff circular distance <= (d-1)/2,
                  including distance 0, so d must be odd
  block           disjoint complete-with-loops blocks of d consecutive
                  vertices (d must divide n); the self-loop keeps every
                  row at exactly d nonzeros
  random_regular  simple d-regular graph from the pairing model with
                  rejection of self-loops and multi-edges
"""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass
from pathlib import Path

from .errors import GenerationFailure, InvalidParams, ParseError, ValidationError
from .rng import generator

PATTERN_KINDS = ("complete", "diagonal", "band", "block", "random_regular")

_REGULAR_RETRY_BUDGET = 500


@dataclass(frozen=True)
class SparsityPattern:
    """A d-regular graph given by its canonical edge set.

    Edges are stored as pairs ``(u, v)`` with ``u <= v``; ``u == v`` is a
    self-loop.  Instances are immutable and safe to share.
    """

    n_vertices: int
    degree: int
    edges: frozenset[tuple[int, int]]
    label: str = ""

    def sorted_edges(self) -> list[tuple[int, int]]:
        """Edges in canonical (u, v) order; the order used for sampling."""
        return sorted(self.edges)

    def degree_counts(self) -> dict[int, int]:
        """Observed degree of every vertex (self-loop counted once)."""
        deg = dict.fromkeys(range(self.n_vertices), 0)
        for u, v in self.edges:
            deg[u] += 1
            if v != u:
                deg[v] += 1
        return deg


@dataclass(frozen=True)
class PatternReport:
    ok: bool
    violations: tuple[str, ...] = ()


def generate_pattern(kind: str, n: int, d: int, seed: int = 0, *,
                     loops: bool = True) -> SparsityPattern:
    """Construct one of the built-in d-regular patterns.

    Deterministic given ``(kind, n, d, seed)``; the seed only matters for
    ``random_regular``.  ``loops`` selects the off-diagonal variant of the
    complete pattern (then ``d`` must be ``n - 1``).

    Raises
    ------
    InvalidParams
        If the (kind, n, d) combination is not admissible.
    GenerationFailure
        If the random-regular sampler exhausts its retry budget.
    """
    if kind not in PATTERN_KINDS:
        raise InvalidParams(f"unknown pattern kind {kind!r}; choose from {PATTERN_KINDS}")
    if n < 1:
        raise InvalidParams(f"n must be positive, got {n}")
    if not 1 <= d <= n:
        raise InvalidParams(f"need 1 <= d <= n, got d={d}, n={n}")

    if kind == "complete":
        if loops:
            if d != n:
                raise InvalidParams(f"complete pattern requires d = n, got d={d}, n={n}")
            edges = {(u, v) for u in range(n) for v in range(u, n)}
        else:
            if d != n - 1:
                raise InvalidParams(f"complete pattern without loops requires d = n-1, got d={d}, n={n}")
            edges = {(u, v) for u in range(n) for v in range(u + 1, n)}
    elif kind == "diagonal":
        if d != 1:
            raise InvalidParams(f"diagonal pattern requires d = 1, got d={d}")
        edges = {(x, x) for x in range(n)}
    elif kind == "band":
        if d % 2 == 0:
            raise InvalidParams(f"band pattern requires odd d, got d={d}")
        half = (d - 1) // 2
        edges = set()
        for x in range(n):
            for off in range(half + 1):
                y = (x + off) % n
                edges.add((x, y) if x <= y else (y, x))
    elif kind == "block":
        if n % d != 0:
            raise InvalidParams(f"block pattern requires d | n, got d={d}, n={n}")
        edges = set()
        for start in range(0, n, d):
            edges.update((u, v) for u in range(start, start + d)
                         for v in range(u, start + d))
    else:  # random_regular
        if d >= n:
            raise InvalidParams(f"random_regular requires d < n, got d={d}, n={n}")
        if (n * d) % 2 != 0:
            raise InvalidParams(f"random_regular requires n*d even, got n={n}, d={d}")
        edges = _random_regular_edges(n, d, seed)

    return SparsityPattern(n_vertices=n, degree=d, edges=frozenset(edges), label=kind)


def _random_regular_edges(n: int, d: int, seed: int) -> set[tuple[int, int]]:
    """Pairing model: shuffle vertex stubs, keep simple edges, re-pair the rest.

    Stubs whose pairing produced a self-loop or a duplicate edge are thrown
    back and re-shuffled; an attempt is abandoned when no admissible pair
    remains among the leftovers.  Deterministic given the seed.
    """
    rng = generator(seed)

    def suitable(edges: set, leftovers: dict) -> bool:
        if not leftovers:
            return True
        verts = list(leftovers)
        for i, u in enumerate(verts):
            for v in verts[i + 1:]:
                if (min(u, v), max(u, v)) not in edges:
                    return True
        return False

    def attempt() -> set | None:
        edges: set[tuple[int, int]] = set()
        stubs = list(range(n)) * d
        while stubs:
            leftovers: dict[int, int] = defaultdict(int)
            rng.shuffle(stubs)
            it = iter(stubs)
            for u, v in zip(it, it):
                if u > v:
                    u, v = v, u
                if u != v and (u, v) not in edges:
                    edges.add((u, v))
                else:
                    leftovers[u] += 1
                    leftovers[v] += 1
            if not suitable(edges, leftovers):
                return None
            stubs = [v for v, c in leftovers.items() for _ in range(c)]
        return edges

    for _ in range(_REGULAR_RETRY_BUDGET):
        edges = attempt()
        if edges is not None:
            return edges
    raise GenerationFailure(
        f"random_regular(n={n}, d={d}) failed after {_REGULAR_RETRY_BUDGET} attempts")


def validate_pattern(p: SparsityPattern) -> PatternReport:
    """Check every type invariant; violations are data, not exceptions."""
    violations: list[str] = []
    n, d = p.n_vertices, p.degree
    if n < 1:
        violations.append(f"n_vertices must be positive, got {n}")
    if not 1 <= d <= max(n, 1):
        violations.append(f"declared degree {d} outside [1, {n}]")
    for u, v in p.edges:
        if not (0 <= u <= v < n):
            violations.append(f"edge ({u}, {v}) not canonical or out of range [0, {n})")
    if not violations:
        for x, deg in sorted(p.degree_counts().items()):
            if deg != d:
                violations.append(f"vertex {x} has degree {deg}, expected {d}")
    return PatternReport(ok=not violations, violations=tuple(violations))


def save_pattern(p: SparsityPattern, path: str | Path) -> None:
    """Write the ASCII pattern format: "N d" then one "u v" line per edge.

    Lines are LF-terminated and edges sorted by (u, v).
    """
    lines = [f"{p.n_vertices} {p.degree}"]
    lines.extend(f"{u} {v}" for u, v in p.sorted_edges())
    Path(path).write_text("\n".join(lines) + "\n", newline="\n")


def load_pattern(path: str | Path) -> SparsityPattern:
    """Parse and fully validate a pattern file.

    Raises ParseError for malformed lines or out-of-range indices and
    ValidationError (naming the offending vertex or line) when the parsed
    graph is not d-regular or contains a duplicate edge.
    """
    path = Path(path)
    text = path.read_text()
    lines = text.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    if not lines:
        raise ParseError(f"{path}: empty file")

    head = lines[0].split()
    if len(head) != 2:
        raise ParseError(f"{path}:1: expected 'N d', got {lines[0]!r}")
    try:
        n, d = int(head[0]), int(head[1])
    except ValueError as exc:
        raise ParseError(f"{path}:1: non-integer header {lines[0]!r}") from exc
    if n < 1 or not 1 <= d <= n:
        raise ParseError(f"{path}:1: inadmissible header N={n}, d={d}")

    edges: set[tuple[int, int]] = set()
    for lineno, line in enumerate(lines[1:], start=2):
        parts = line.split()
        if len(parts) != 2:
            raise ParseError(f"{path}:{lineno}: expected 'u v', got {line!r}")
        try:
            u, v = int(parts[0]), int(parts[1])
        except ValueError as exc:
            raise ParseError(f"{path}:{lineno}: non-integer vertex in {line!r}") from exc
        if not (0 <= u <= v < n):
            raise ParseError(f"{path}:{lineno}: edge ({u}, {v}) out of range or not u <= v")
        if (u, v) in edges:
            raise ValidationError(f"{path}:{lineno}: duplicate edge ({u}, {v})")
        edges.add((u, v))

    p = SparsityPattern(n_vertices=n, degree=d, edges=frozenset(edges), label=path.stem)
    report = validate_pattern(p)
    if not report.ok:
        raise ValidationError(f"{path}: " + "; ".join(report.violations))
    return p
