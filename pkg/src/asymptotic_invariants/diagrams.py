"""Trivalent diagrams, STU expansion and weight systems.

A diagram of degree n has k circle vertices, listed in the circle's cyclic
order, and s free vertices, with k + s = 2n labels drawn from 1..2n. Every
circle vertex carries one edge and every free vertex three. Edges are stored as
(i, j) with i < j, which fixes their orientation.

The cyclic order of the three edges at a free vertex is the increasing order of
its neighbours' labels. Relabelling can reverse that order, and then the
diagram changes sign (the AS relation). Canonical forms therefore come with a
sign, which is 0 when a diagram is forced to equal its own negative.
"""

import re
from collections.abc import Iterator, Mapping
from dataclasses import dataclass, field
from functools import cache
from itertools import combinations, permutations
from pathlib import Path
from typing import NotRequired, TypedDict

import numpy as np
from scipy.linalg import null_space

Edge = tuple[int, int]

MAX_ENUMERATE_DEGREE = 3


class DiagramError(ValueError):
    """Raised when a diagram description violates the trivalent diagram rules."""

    def __init__(self, errors: list[str], line: int | None = None) -> None:
        self.errors: list[str] = errors
        self.line: int | None = line
        prefix = f"line {line}: " if line is not None else ""
        super().__init__(prefix + "; ".join(errors))


class RawDiagram(TypedDict):
    """Untrusted diagram description, as parsed from text."""

    degree: int
    circle: list[int]
    free: list[int]
    edges: list[tuple[int, int]]
    line: NotRequired[int]


@dataclass(frozen=True, order=True)
class TrivalentDiagram:
    """A labelled trivalent diagram. Immutable and hashable."""

    circle: tuple[int, ...]
    free: tuple[int, ...]
    edges: tuple[Edge, ...]

    @property
    def k(self) -> int:
        """Number of circle vertices."""
        return len(self.circle)

    @property
    def s(self) -> int:
        """Number of free vertices."""
        return len(self.free)

    @property
    def degree(self) -> int:
        return (self.k + self.s) // 2

    @property
    def edge_count(self) -> int:
        return len(self.edges)

    @property
    def is_chord_diagram(self) -> bool:
        return self.s == 0

    def neighbors(self, vertex: int) -> list[int]:
        """Labels joined to ``vertex`` by an edge, in increasing order."""
        out = [j if i == vertex else i for i, j in self.edges if vertex in (i, j)]
        return sorted(out)

    def s_edges(self) -> list[Edge]:
        """Edges joining a circle vertex to a free vertex (STU-expandable)."""
        free = set(self.free)
        return [(i, j) for i, j in self.edges if (i in free) != (j in free)]

    def rotations(self) -> list["TrivalentDiagram"]:
        """The same labelled diagram with its circle order started at each vertex."""
        k = self.k
        return [
            TrivalentDiagram((*self.circle[r:], *self.circle[:r]), self.free, self.edges)
            for r in range(k)
        ]

    def automorphism_count(self) -> int:
        return automorphism_count(self)


@dataclass(frozen=True)
class DiagramSum:
    """Finite linear combination of canonical diagrams of one degree."""

    terms: Mapping[TrivalentDiagram, float] = field(default_factory=dict)

    @classmethod
    def of(cls, d: TrivalentDiagram, coeff: float = 1.0) -> "DiagramSum":
        """The single term ``coeff * d``, canonicalized (possibly to zero)."""
        canonical, sign = canonical_form(d)
        if sign == 0 or coeff == 0:
            return cls()
        return cls({canonical: sign * coeff})

    @property
    def degree(self) -> int | None:
        for d in self.terms:
            return d.degree
        return None

    def __add__(self, other: "DiagramSum") -> "DiagramSum":
        if self.terms and other.terms and self.degree != other.degree:
            msg = f"Cannot add diagrams of degree {self.degree} and {other.degree}"
            raise ValueError(msg)

        merged = dict(self.terms)
        for d, c in other.terms.items():
            merged[d] = merged.get(d, 0.0) + c
        return DiagramSum({d: c for d, c in merged.items() if c != 0})

    def __neg__(self) -> "DiagramSum":
        return DiagramSum({d: -c for d, c in self.terms.items()})

    def __sub__(self, other: "DiagramSum") -> "DiagramSum":
        return self + (-other)

    def __rmul__(self, scalar: float) -> "DiagramSum":
        if scalar == 0:
            return DiagramSum()
        return DiagramSum({d: scalar * c for d, c in self.terms.items()})


@dataclass(frozen=True)
class WeightSystem:
    """Values on canonical chord diagrams, extended to all diagrams by STU."""

    degree: int
    values: Mapping[TrivalentDiagram, float]
    primitive: bool = False
    name: str = ""

    def value(self, d: TrivalentDiagram) -> float:
        """Weight of a single diagram."""
        chords = expand_to_chords(canonicalize(d))
        sign = canonical_form(d)[1]
        return sign * sum(c * self.values.get(chord, 0.0) for chord, c in chords.terms.items())


def _parity(seq: list[int]) -> int:
    """+1 for an even arrangement of distinct values, -1 for an odd one."""
    inversions = sum(1 for a, b in combinations(seq, 2) if a > b)
    return -1 if inversions % 2 else 1


def diagram_errors(raw: RawDiagram) -> list[str]:
    """Collect every violated invariant of a raw diagram description.

    Args:
        raw: Untrusted diagram description

    Returns:
        List of error messages; empty if the description is valid
    """
    errors: list[str] = []
    n = raw["degree"]
    circle = raw["circle"]
    free = raw["free"]

    if n < 1:
        errors.append(f"degree must be positive, got {n}")
        return errors

    vertices = [*circle, *free]
    if len(vertices) != 2 * n:
        errors.append(f"wrong vertex count: expected {2 * n}, got {len(vertices)}")
    if len(set(vertices)) != len(vertices):
        errors.append("duplicate vertex label")
    outside = sorted(v for v in set(vertices) if not 1 <= v <= 2 * n)
    if outside:
        errors.append(f"labels outside 1..{2 * n}: {outside}")

    known = set(vertices)
    edges: set[Edge] = set()
    for i, j in raw["edges"]:
        if i == j:
            errors.append(f"self-loop at vertex {i}")
            continue
        if i not in known or j not in known:
            errors.append(f"edge ({i},{j}) uses an unknown vertex")
            continue
        edge = (min(i, j), max(i, j))
        if edge in edges:
            errors.append(f"repeated edge {edge}")
            continue
        edges.add(edge)

    valence = {v: 0 for v in known}
    for i, j in edges:
        valence[i] += 1
        valence[j] += 1
    for v in circle:
        if v in valence and valence[v] != 1:
            errors.append(f"non-trivalent vertex {v}: circle vertex with {valence[v]} edges")
    for v in free:
        if v in valence and valence[v] != 3:
            errors.append(f"non-trivalent vertex {v}: free vertex with {valence[v]} edges")

    expected = len(circle) + 3 * len(free)
    if expected % 2 or len(edges) != expected // 2:
        errors.append(f"edge-count mismatch: expected {expected / 2:g}, got {len(edges)}")

    if known and not _connected(circle, known, edges):
        errors.append("disconnected graph")

    return errors


def _connected(circle: list[int], vertices: set[int], edges: set[Edge]) -> bool:
    adjacency: dict[int, set[int]] = {v: set() for v in vertices}
    for i, j in edges:
        adjacency[i].add(j)
        adjacency[j].add(i)
    # The circle joins its vertices to each other.
    for a, b in zip(circle, circle[1:], strict=False):
        adjacency[a].add(b)
        adjacency[b].add(a)

    start = next(iter(vertices))
    seen = {start}
    stack = [start]
    while stack:
        for u in adjacency[stack.pop()]:
            if u not in seen:
                seen.add(u)
                stack.append(u)
    return seen == vertices


def validate(raw: RawDiagram) -> TrivalentDiagram:
    """Validate a raw description and return its canonical diagram.

    Args:
        raw: Untrusted diagram description

    Returns:
        Canonical diagram

    Raises:
        DiagramError: With the complete list of violated invariants
    """
    errors = diagram_errors(raw)
    if errors:
        raise DiagramError(errors, raw.get("line"))

    edges = tuple(sorted((min(i, j), max(i, j)) for i, j in raw["edges"]))
    d = TrivalentDiagram(tuple(raw["circle"]), tuple(sorted(raw["free"])), edges)
    return canonicalize(d)


def degree(d: TrivalentDiagram) -> int:
    """Degree (k + s) / 2 of a valid diagram."""
    return d.degree


def _relabelings(d: TrivalentDiagram) -> Iterator[dict[int, int]]:
    k = d.k
    for r in range(max(k, 1)):
        for perm in permutations(d.free):
            mapping = {d.circle[(r + p) % k]: p + 1 for p in range(k)}
            mapping.update({v: k + 1 + i for i, v in enumerate(perm)})
            yield mapping


def _apply(d: TrivalentDiagram, mapping: dict[int, int]) -> tuple[Edge, ...]:
    pairs = ((mapping[i], mapping[j]) for i, j in d.edges)
    return tuple(sorted((min(p), max(p)) for p in pairs))


def _orientation_sign(d: TrivalentDiagram, mapping: dict[int, int]) -> int:
    sign = 1
    for v in d.free:
        sign *= _parity([mapping[u] for u in d.neighbors(v)])
    return sign


@cache
def canonical_form(d: TrivalentDiagram) -> tuple[TrivalentDiagram, int]:
    """Canonical representative and the sign relating ``d`` to it.

    The representative minimizes the sorted edge list over all relabellings
    that keep the circle's cyclic order up to rotation.

    Returns:
        (canonical diagram, sign) with sign in {1, -1, 0}
    """
    best: tuple[Edge, ...] | None = None
    signs: set[int] = set()
    for mapping in _relabelings(d):
        encoded = _apply(d, mapping)
        sign = _orientation_sign(d, mapping)
        if best is None or encoded < best:
            best = encoded
            signs = {sign}
        elif encoded == best:
            signs.add(sign)

    assert best is not None
    k, s = d.k, d.s
    canonical = TrivalentDiagram(
        circle=tuple(range(1, k + 1)),
        free=tuple(range(k + 1, k + s + 1)),
        edges=best,
    )
    return canonical, (0 if len(signs) > 1 else signs.pop())


def canonicalize(d: TrivalentDiagram) -> TrivalentDiagram:
    """Isomorphism-invariant stored form of ``d``."""
    return canonical_form(d)[0]


def automorphism_count(d: TrivalentDiagram) -> int:
    """Number of relabellings (circle rotations and free permutations) fixing ``d``."""
    target = tuple(sorted(d.edges))
    return sum(1 for mapping in _relabelings(d) if _apply(d, mapping) == target)


def stu_expand(d: TrivalentDiagram, edge: Edge) -> DiagramSum:
    """Replace the free vertex at ``edge`` by two adjacent circle vertices.

    The free vertex v meets the circle vertex c through ``edge``; with v's
    cyclic order written (c, a, b), the result is T - U where T joins the first
    new circle vertex to a and U joins it to b.

    Args:
        d: Diagram containing the S-configuration
        edge: Edge between a circle vertex and a free vertex

    Returns:
        T - U, canonicalized

    Raises:
        ValueError: If d has no free vertex or the edge is not an S-edge
    """
    if d.s == 0:
        msg = "no free vertex"
        raise ValueError(msg)

    edge = (min(edge), max(edge))
    if edge not in d.s_edges():
        msg = f"edge {edge} not in S-configuration"
        raise ValueError(msg)

    i, j = edge
    c, v = (i, j) if i in d.circle else (j, i)
    order = d.neighbors(v)
    start = order.index(c)
    _, a, b = order[start:] + order[:start]

    position = d.circle.index(c)
    circle = (*d.circle[:position], c, v, *d.circle[position + 1 :])
    free = tuple(u for u in d.free if u != v)
    kept = [e for e in d.edges if v not in e]

    def build(first: int, second: int) -> DiagramSum:
        new_edges = [*kept, (min(c, first), max(c, first)), (min(v, second), max(v, second))]
        labelled = TrivalentDiagram(circle, free, tuple(sorted(new_edges)))
        # A free neighbour keeps its cyclic order; v is renamed c on the first side.
        sign = 1
        for u in (first, second):
            if u in free:
                renamed = c if u == first else v
                sign *= _parity([renamed if w == v else w for w in d.neighbors(u)])
        return DiagramSum.of(labelled, float(sign))

    return build(a, b) - build(b, a)


@cache
def expand_to_chords(d: TrivalentDiagram) -> DiagramSum:
    """Fully STU-expand a canonical diagram into chord diagrams.

    Expansion always uses the first S-edge in sorted order, so the result is a
    fixed linear combination; consistency across edges is what makes a
    weight system well defined.
    """
    if d.s == 0:
        return DiagramSum({d: 1.0})

    total = DiagramSum()
    for term, coeff in stu_expand(d, d.s_edges()[0]).terms.items():
        total = total + coeff * expand_to_chords(term)
    return total


def is_reducible(d: TrivalentDiagram) -> bool:
    """True iff two points on the circle split ``d`` into two nonempty diagrams.

    Cutting the circle between positions yields two arcs; the cut separates
    the diagram when every connected component of the edge graph has all of
    its circle vertices on one arc.
    """
    k = d.k
    if k < 2:
        return False

    component = _components(d)
    for first, second in combinations(range(k), 2):
        arc = set(d.circle[first + 1 : second + 1])
        if not arc or len(arc) == k:
            continue
        inside = {component[v] for v in arc}
        outside = {component[v] for v in d.circle if v not in arc}
        if not inside & outside:
            return True
    return False


def _components(d: TrivalentDiagram) -> dict[int, int]:
    parent = {v: v for v in (*d.circle, *d.free)}

    def find(v: int) -> int:
        while parent[v] != v:
            parent[v] = parent[parent[v]]
            v = parent[v]
        return v

    for i, j in d.edges:
        parent[find(i)] = find(j)
    return {v: find(v) for v in parent}


def eval_weight(w: WeightSystem, x: DiagramSum) -> float:
    """Evaluate a weight system on a linear combination of diagrams.

    Raises:
        ValueError: If a term's degree differs from the weight system's
    """
    total = 0.0
    for d, coeff in x.terms.items():
        if d.degree != w.degree:
            msg = f"Degree mismatch: weight system has degree {w.degree}, term has {d.degree}"
            raise ValueError(msg)
        chords = expand_to_chords(d)
        total += coeff * sum(c * w.values.get(ch, 0.0) for ch, c in chords.terms.items())
    return total


def _graphs(k: int, s: int) -> Iterator[TrivalentDiagram]:
    labels = range(1, k + s + 1)
    need = {v: (1 if v <= k else 3) for v in labels}
    n_edges = (k + 3 * s) // 2
    pairs = list(combinations(labels, 2))
    for chosen in combinations(pairs, n_edges):
        count = dict.fromkeys(labels, 0)
        for i, j in chosen:
            count[i] += 1
            count[j] += 1
        if count != need:
            continue
        d = TrivalentDiagram(tuple(range(1, k + 1)), tuple(range(k + 1, k + s + 1)), chosen)
        if _connected(list(d.circle), set(labels), set(chosen)):
            yield d


@cache
def enumerate_diagrams(n: int) -> tuple[TrivalentDiagram, ...]:
    """All isomorphism classes of trivalent diagrams of degree ``n``.

    Args:
        n: Degree, 1 to 3

    Returns:
        Canonical diagrams sorted by (s, edges), without duplicates

    Raises:
        ValueError: If n is outside the supported range
    """
    if not 1 <= n <= MAX_ENUMERATE_DEGREE:
        msg = f"enumerate supports degrees 1..{MAX_ENUMERATE_DEGREE}, got {n}"
        raise ValueError(msg)

    found: set[TrivalentDiagram] = set()
    for s in range(0, 2 * n):
        k = 2 * n - s
        if (k + 3 * s) % 2:
            continue
        for d in _graphs(k, s):
            found.add(canonicalize(d))

    return tuple(sorted(found, key=lambda d: (d.s, d.edges)))


def stu_triples(n: int) -> list[tuple[TrivalentDiagram, Edge, DiagramSum]]:
    """Every (S, edge, T - U) obtainable from ``enumerate_diagrams(n)``."""
    return [(d, e, stu_expand(d, e)) for d in enumerate_diagrams(n) for e in d.s_edges()]


def weight_system_from_chords(
    n: int,
    values: Mapping[TrivalentDiagram, float],
    name: str = "",
) -> WeightSystem:
    """Build a weight system from values on (canonical) chord diagrams.

    Raises:
        ValueError: If a key is not a chord diagram of degree n
    """
    canonical: dict[TrivalentDiagram, float] = {}
    for d, value in values.items():
        if d.s or d.degree != n:
            msg = f"Weight system values must be on degree-{n} chord diagrams"
            raise ValueError(msg)
        c, sign = canonical_form(d)
        canonical[c] = canonical.get(c, 0.0) + sign * value

    primitive = False
    if n <= MAX_ENUMERATE_DEGREE:
        draft = WeightSystem(n, canonical)
        reducible = [d for d in enumerate_diagrams(n) if is_reducible(d)]
        primitive = all(abs(draft.value(d)) < 1e-12 for d in reducible)
    return WeightSystem(n, canonical, primitive=primitive, name=name)


def weight_system_basis(n: int) -> list[WeightSystem]:
    """A basis of weight systems of degree ``n``, from the STU constraints.

    Each free diagram expanded at any S-edge must give the same chord
    combination as its fixed full expansion; the weight systems are the
    null space of those differences.
    """
    chords = [d for d in enumerate_diagrams(n) if d.is_chord_diagram]
    index = {d: i for i, d in enumerate(chords)}

    rows: list[list[float]] = []
    for d, _, t_minus_u in stu_triples(n):
        diff = expand_to_chords(d)
        for term, coeff in t_minus_u.terms.items():
            diff = diff - coeff * expand_to_chords(term)
        row = [0.0] * len(chords)
        for ch, c in diff.terms.items():
            row[index[ch]] += c
        rows.append(row)

    if rows:
        basis = null_space(np.array(rows))
    else:
        basis = np.eye(len(chords))

    systems: list[WeightSystem] = []
    for col in range(basis.shape[1]):
        vector = basis[:, col]
        vector = vector / vector[np.argmax(np.abs(vector))]
        values = {ch: float(vector[index[ch]]) for ch in chords if abs(vector[index[ch]]) > 1e-12}
        systems.append(weight_system_from_chords(n, values, name=f"basis{n}.{col}"))
    return systems


def _parse_int_list(text: str) -> list[int]:
    text = text.strip()
    if not (text.startswith("[") and text.endswith("]")):
        msg = f"expected a bracketed list, got {text!r}"
        raise ValueError(msg)
    inner = text[1:-1].strip()
    return [int(x) for x in inner.split(",") if x.strip()] if inner else []


_EDGE_RE = re.compile(r"\((-?\d+),(-?\d+)\)")


def parse_diagram(line: str, line_number: int | None = None) -> TrivalentDiagram:
    """Parse ``n; circle=[...]; free=[...]; edges=[(i,j),...]`` and validate it.

    Raises:
        DiagramError: On syntax errors or invariant violations
    """
    compact = re.sub(r"\s+", "", line)
    parts = compact.split(";")
    try:
        if len(parts) != 4:
            msg = f"expected 4 ';'-separated fields, got {len(parts)}"
            raise ValueError(msg)
        fields = dict(p.split("=", 1) for p in parts[1:])
        if set(fields) != {"circle", "free", "edges"}:
            msg = f"expected keys circle, free, edges; got {sorted(fields)}"
            raise ValueError(msg)
        edges_text = fields["edges"]
        if not (edges_text.startswith("[") and edges_text.endswith("]")):
            msg = f"expected a bracketed edge list, got {edges_text!r}"
            raise ValueError(msg)
        body = edges_text[1:-1]
        edges = [(int(a), int(b)) for a, b in _EDGE_RE.findall(body)]
        if _EDGE_RE.sub("", body).replace(",", ""):
            msg = f"malformed edge list {edges_text!r}"
            raise ValueError(msg)
        raw: RawDiagram = {
            "degree": int(parts[0]),
            "circle": _parse_int_list(fields["circle"]),
            "free": _parse_int_list(fields["free"]),
            "edges": edges,
        }
    except ValueError as e:
        raise DiagramError([str(e)], line_number) from e

    if line_number is not None:
        raw["line"] = line_number
    return validate(raw)


def format_diagram(d: TrivalentDiagram) -> str:
    """Render a diagram in the one-line text format."""
    circle = ",".join(str(v) for v in d.circle)
    free = ",".join(str(v) for v in d.free)
    edges = ",".join(f"({i},{j})" for i, j in d.edges)
    return f"{d.degree}; circle=[{circle}]; free=[{free}]; edges=[{edges}]"


def load_diagrams(path: Path) -> list[TrivalentDiagram]:
    """Load one diagram per non-empty, non-comment line.

    Raises:
        FileNotFoundError: If the file doesn't exist
        DiagramError: With the offending line number
    """
    if not path.exists():
        msg = f"Diagram file not found: {path}"
        raise FileNotFoundError(msg)

    diagrams: list[TrivalentDiagram] = []
    with path.open() as f:
        for number, line in enumerate(f, start=1):
            stripped = line.strip()
            if not stripped or stripped.startswith("#"):
                continue
            diagrams.append(parse_diagram(stripped, number))
    return diagrams


# Degree 1 and 2 diagrams used by the integrals.
CHORD = TrivalentDiagram((1, 2), (), ((1, 2),))
CROSSED = TrivalentDiagram((1, 2, 3, 4), (), ((1, 3), (2, 4)))
PARALLEL = TrivalentDiagram((1, 2, 3, 4), (), ((1, 2), (3, 4)))
TRIPOD = TrivalentDiagram((1, 2, 3), (4,), ((1, 4), (2, 4), (3, 4)))

V2_WEIGHTS = weight_system_from_chords(2, {CROSSED: 1.0, PARALLEL: 0.0}, name="v2")


def stored_weight_systems() -> list[WeightSystem]:
    """Weight systems kept by the package: v2 plus STU bases up to degree 3."""
    systems = [V2_WEIGHTS]
    for n in range(1, MAX_ENUMERATE_DEGREE + 1):
        systems.extend(weight_system_basis(n))
    return systems
