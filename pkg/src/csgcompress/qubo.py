"""QUBO/Ising models, penalty encodings, solvers, and file export.

Minimisation convention throughout: the ground state is the assignment of
lowest energy.  The smallest-exact-cover encoding puts one binary variable
on each candidate subset; expanding the squared constraint term with
x_i^2 = x_i gives

    offset     = A * n                 (n universe elements)
    linear_i   = -A * d_i + B          (d_i = |covered(i)|)
    quad_{ij}  = 2 * A * o_ij          (o_ij = |covered(i) & covered(j)|)

which is zero-constraint-violating exactly on exact covers; with A > n*B
the global minimum is a smallest exact cover whenever one exists.  The
maximum-clique encoding uses the complement-graph independent-set form:
reward -A per chosen vertex, penalty +B on every non-edge, with B > A so
dropping a violating vertex always pays.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import FileFormatError, ParameterError
from .cover import CoverInstance
from .graph import IntersectionGraph

EXACT_LIMIT = 30  # exhaustive search refuses models larger than this


def _canonical_terms(n, linear, quadratic):
    lin: dict[int, float] = {}
    for i, v in (linear or {}).items():
        i = int(i)
        if not 0 <= i < n:
            raise ValueError(f"linear index {i} out of range for n={n}")
        w = lin.get(i, 0.0) + float(v)
        lin[i] = w
    quad: dict[tuple[int, int], float] = {}
    for (i, j), v in (quadratic or {}).items():
        i, j = int(i), int(j)
        if i == j:
            raise ValueError("quadratic terms need two distinct indices")
        if not (0 <= i < n and 0 <= j < n):
            raise ValueError(f"quadratic index ({i},{j}) out of range for n={n}")
        key = (i, j) if i < j else (j, i)
        quad[key] = quad.get(key, 0.0) + float(v)
    return (
        {i: v for i, v in sorted(lin.items()) if v != 0.0},
        {k: v for k, v in sorted(quad.items()) if v != 0.0},
    )


@dataclass(frozen=True, eq=False)
class Qubo:
    """offset + sum_i linear_i x_i + sum_{i<j} quad_ij x_i x_j over x in {0,1}^n."""

    n: int
    linear: dict
    quadratic: dict
    offset: float = 0.0

    def __post_init__(self):
        lin, quad = _canonical_terms(self.n, self.linear, self.quadratic)
        object.__setattr__(self, "linear", lin)
        object.__setattr__(self, "quadratic", quad)
        object.__setattr__(self, "offset", float(self.offset))

    def max_abs_coefficient(self) -> float:
        vals = [abs(v) for v in self.linear.values()]
        vals += [abs(v) for v in self.quadratic.values()]
        return max(vals, default=0.0)


@dataclass(frozen=True, eq=False)
class IsingModel:
    """offset + sum_i h_i s_i + sum_{i<j} J_ij s_i s_j over s in {-1,+1}^n."""

    n: int
    h: dict
    J: dict
    offset: float = 0.0

    def __post_init__(self):
        h, J = _canonical_terms(self.n, self.h, self.J)
        object.__setattr__(self, "h", h)
        object.__setattr__(self, "J", J)
        object.__setattr__(self, "offset", float(self.offset))


def _as_bits(x, n: int) -> np.ndarray:
    if isinstance(x, str):
        vals = [int(ch) for ch in x]
    else:
        vals = [int(v) for v in x]
    if len(vals) != n:
        raise ValueError(f"assignment length {len(vals)} != n={n}")
    if any(v not in (0, 1) for v in vals):
        raise ValueError("binary assignment entries must be 0 or 1")
    return np.array(vals, dtype=float)


def qubo_energy(q: Qubo, x) -> float:
    bits = _as_bits(x, q.n)
    e = q.offset
    for i, v in q.linear.items():
        e += v * bits[i]
    for (i, j), v in q.quadratic.items():
        e += v * bits[i] * bits[j]
    return float(e)


def ising_energy(m: IsingModel, s) -> float:
    if isinstance(s, str):
        vals = [1 if ch == "+" else -1 if ch == "-" else int(ch) for ch in s]
    else:
        vals = [int(v) for v in s]
    if len(vals) != m.n:
        raise ValueError(f"spin length {len(vals)} != n={m.n}")
    if any(v not in (-1, 1) for v in vals):
        raise ValueError("spins must be -1 or +1")
    e = m.offset
    for i, v in m.h.items():
        e += v * vals[i]
    for (i, j), v in m.J.items():
        e += v * vals[i] * vals[j]
    return float(e)


def qubo_to_ising(q: Qubo) -> IsingModel:
    """Substitute x = (1 + s) / 2; energies match pointwise under the bijection."""
    h: dict[int, float] = {}
    J: dict[tuple[int, int], float] = {}
    offset = q.offset
    for i, v in q.linear.items():
        h[i] = h.get(i, 0.0) + v / 2.0
        offset += v / 2.0
    for (i, j), v in q.quadratic.items():
        J[(i, j)] = J.get((i, j), 0.0) + v / 4.0
        h[i] = h.get(i, 0.0) + v / 4.0
        h[j] = h.get(j, 0.0) + v / 4.0
        offset += v / 4.0
    return IsingModel(q.n, h, J, offset)


def ising_to_qubo(m: IsingModel) -> Qubo:
    """Substitute s = 2x - 1, the inverse of qubo_to_ising."""
    linear: dict[int, float] = {}
    quadratic: dict[tuple[int, int], float] = {}
    offset = m.offset
    for i, v in m.h.items():
        linear[i] = linear.get(i, 0.0) + 2.0 * v
        offset -= v
    for (i, j), v in m.J.items():
        quadratic[(i, j)] = quadratic.get((i, j), 0.0) + 4.0 * v
        linear[i] = linear.get(i, 0.0) - 2.0 * v
        linear[j] = linear.get(j, 0.0) - 2.0 * v
        offset += v
    return Qubo(m.n, linear, quadratic, offset)


# ---------------------------------------------------------------------------
# Problem encodings
# ---------------------------------------------------------------------------

def build_cover_qubo(
    instance: CoverInstance,
    A: float | None = None,
    B: float = 1.0,
    allow_weak_penalty: bool = False,
) -> tuple[Qubo, tuple[str, ...]]:
    """Smallest-exact-cover QUBO; variable i selects candidate i.

    ``A`` defaults to n*B + 1 (n = universe size); the A > n*B encoding
    condition is enforced unless ``allow_weak_penalty`` is set.
    """
    n = len(instance.universe)
    if A is None:
        A = n * B + 1.0
    if not allow_weak_penalty and A <= n * B:
        raise ParameterError(
            f"cover encoding needs A > n*B (A={A}, n={n}, B={B})"
        )
    index = {u: i for i, u in enumerate(instance.universe)}
    cover_sets = [frozenset(index[e] for e in c.covered) for c in instance.candidates]
    linear = {
        i: -A * len(cov) + B for i, cov in enumerate(cover_sets)
    }
    quadratic = {}
    for i in range(len(cover_sets)):
        for j in range(i + 1, len(cover_sets)):
            o = len(cover_sets[i] & cover_sets[j])
            if o:
                quadratic[(i, j)] = 2.0 * A * o
    names = tuple(c.name for c in instance.candidates)
    return Qubo(len(cover_sets), linear, quadratic, A * n), names


def build_max_clique_qubo(
    graph: IntersectionGraph, A: float = 1.0, B: float = 2.0
) -> tuple[Qubo, tuple[str, ...]]:
    """Maximum-clique QUBO; variable i selects vertex i (graph.vertices order).

    Ground states are exactly the maximum-clique indicator vectors when
    B > A > 0 (every non-edge among selected vertices costs more than a
    vertex earns).
    """
    if not (B > A > 0):
        raise ParameterError(f"max-clique encoding needs B > A > 0 (A={A}, B={B})")
    verts = graph.vertices
    vid = {v: i for i, v in enumerate(verts)}
    linear = {i: -float(A) for i in range(len(verts))}
    quadratic = {}
    for i in range(len(verts)):
        for j in range(i + 1, len(verts)):
            if not graph.has_edge(verts[i], verts[j]):
                quadratic[(i, j)] = float(B)
    return Qubo(len(verts), linear, quadratic, 0.0), tuple(verts)


# ---------------------------------------------------------------------------
# Solvers
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class AnnealSchedule:
    """Geometric temperature decay from t_start down to t_end."""

    t_start: float
    t_end: float
    sweeps: int
    restarts: int

    def __post_init__(self):
        if not (self.t_start > 0 and 0 < self.t_end < self.t_start):
            raise ParameterError(
                f"need t_start > t_end > 0 (got {self.t_start}, {self.t_end})"
            )
        if self.sweeps < 1 or self.restarts < 1:
            raise ParameterError("sweeps and restarts must be >= 1")

    def temperatures(self) -> np.ndarray:
        if self.sweeps == 1:
            return np.array([self.t_start])
        ratio = self.t_end / self.t_start
        return self.t_start * ratio ** (np.arange(self.sweeps) / (self.sweeps - 1))


def default_schedule(q: Qubo) -> AnnealSchedule:
    """t_start = max |coefficient|, t_end = 0.01, sweeps = 1000 n, 32 restarts.

    One sweep is one single-flip Metropolis attempt.  For models whose
    coefficients are all below the 0.01 floor, t_start falls back to 1.
    """
    t_start = q.max_abs_coefficient()
    if t_start <= 0.01:
        t_start = 1.0
    return AnnealSchedule(t_start, 0.01, 1000 * max(q.n, 1), 32)


@dataclass(frozen=True)
class SolveResult:
    """An assignment with its re-evaluated energy and solver provenance."""

    assignment: str
    energy: float
    solver: str
    seed: int = 0
    sweeps: int = 0
    restarts: int = 0


def _dense(q: Qubo) -> tuple[np.ndarray, np.ndarray]:
    lin = np.zeros(q.n)
    for i, v in q.linear.items():
        lin[i] = v
    W = np.zeros((q.n, q.n))
    for (i, j), v in q.quadratic.items():
        W[i, j] = W[j, i] = v
    return lin, W


def _bitstring(bits: np.ndarray) -> str:
    return "".join("1" if b else "0" for b in bits)


def solve_exact(q: Qubo) -> SolveResult:
    """Exhaustive minimum over all 2^n assignments (n <= 30).

    Ties break toward the lexicographically smallest bitstring, x_0 first.
    """
    if q.n > EXACT_LIMIT:
        raise ParameterError(f"exact solver limited to n <= {EXACT_LIMIT}, got {q.n}")
    if q.n == 0:
        return SolveResult("", q.offset, "exact")
    lin, W = _dense(q)
    idx = np.arange(q.n)
    best_e = math.inf
    best_lex = None
    best_bits = None
    chunk = 1 << min(q.n, 18)
    for start in range(0, 1 << q.n, chunk):
        ks = np.arange(start, min(start + chunk, 1 << q.n), dtype=np.int64)
        X = ((ks[:, None] >> idx) & 1).astype(float)
        E = q.offset + X @ lin + 0.5 * np.einsum("ki,ki->k", X @ W, X)
        emin = float(E.min())
        if emin > best_e:
            continue
        # Lexicographic key: the bitstring read x_0 first, as an integer
        # with x_0 the most significant bit.
        cand = np.flatnonzero(E == emin)
        lex = (X[cand].astype(np.int64) << (q.n - 1 - idx)).sum(axis=1)
        pick = cand[np.argmin(lex)]
        if emin < best_e or (best_lex is None or lex.min() < best_lex):
            best_e = emin
            best_lex = int(lex.min())
            best_bits = X[pick].astype(int)
    result = SolveResult(_bitstring(best_bits), best_e, "exact")
    return result


def solve_sa(
    q: Qubo, schedule: AnnealSchedule | None = None, seed: int = 0
) -> SolveResult:
    """Best-of-restarts single-flip Metropolis annealing.

    Each restart r runs its own substream derived as SeedSequence((seed, r)),
    so results do not depend on how restarts are executed; the reduction
    takes the lowest energy and breaks ties by the lowest restart index.
    """
    if schedule is None:
        schedule = default_schedule(q)
    if q.n == 0:
        return SolveResult("", q.offset, "sa", int(seed),
                           schedule.sweeps, schedule.restarts)
    lin, W = _dense(q)
    R, S, n = schedule.restarts, schedule.sweeps, q.n
    streams = [
        np.random.default_rng(np.random.SeedSequence((int(seed), r)))
        for r in range(R)
    ]
    X = np.stack([rng.integers(0, 2, size=n) for rng in streams]).astype(float)
    flips = np.stack([rng.integers(0, n, size=S) for rng in streams]).T.copy()
    uniforms = np.stack([rng.random(size=S) for rng in streams]).T
    temps = schedule.temperatures()
    # Metropolis acceptance u < exp(-delta/T) rewritten as delta <= -T ln u,
    # which also admits every non-positive delta; precomputing the threshold
    # matrix keeps the hot loop free of exp calls.
    with np.errstate(divide="ignore"):
        thresholds = -temps[:, None] * np.log(uniforms)

    rows = np.arange(R)
    G = X @ W
    E = q.offset + X @ lin + 0.5 * np.einsum("ri,ri->r", G, X)
    best_E = E.copy()
    best_X = X.copy()
    lin_flips = lin[flips]
    Xf = X.ravel()
    Gf = G.ravel()
    flips_flat = flips + (rows * n)[None, :]

    # Two execution phases with identical sequential semantics.  While
    # acceptances are common (hot phase) every step is applied in lockstep
    # across restarts, which lands up to R acceptances per iteration.  Once
    # acceptance drops below ~25% per restart-step, the remaining schedule
    # is consumed in ragged blocks: proposals are scored against each
    # restart's frozen state, only the first accepted one per restart is
    # applied, and that restart resumes right after it -- rejections never
    # change state, so nothing diverges from stepping one at a time.
    _WINDOW = 128
    t = 0
    window_acc = 0
    while t < S:
        fi = flips_flat[t]
        xi = Xf[fi]
        sign = 1.0 - 2.0 * xi
        delta = sign * (lin_flips[t] + Gf[fi])
        acc = delta <= thresholds[t]
        n_acc = int(acc.sum())
        if n_acc:
            Xf[fi[acc]] = 1.0 - xi[acc]
            E[acc] += delta[acc]
            G[acc] += sign[acc, None] * W[flips[t][acc]]
            better = acc & (E < best_E)
            if better.any():
                best_E[better] = E[better]
                best_X[better] = X[better]
        window_acc += n_acc
        t += 1
        if t % _WINDOW == 0:
            if window_acc <= 0.25 * R * _WINDOW:
                break
            window_acc = 0

    block = 16
    pos = np.full(R, t, dtype=np.int64)
    cols = rows[:, None]
    flat_base = (rows * n)[:, None]
    offset_cache: dict[int, np.ndarray] = {}
    while (pos < S).any():
        block_offsets = offset_cache.get(block)
        if block_offsets is None:
            block_offsets = offset_cache.setdefault(block, np.arange(block)[None, :])
        offs = pos[:, None] + block_offsets
        valid = offs < S
        offs = np.minimum(offs, S - 1)
        step_i = flips[offs, cols]
        flat_i = step_i + flat_base
        xi = Xf[flat_i]
        sign = 1.0 - 2.0 * xi
        delta = sign * (lin_flips[offs, cols] + Gf[flat_i])
        acc = (delta <= thresholds[offs, cols]) & valid
        any_acc = acc.any(axis=1)
        first = np.where(any_acc, acc.argmax(axis=1), block)
        if any_acc.any():
            r_idx = np.flatnonzero(any_acc)
            k = first[r_idx]
            i_k = step_i[r_idx, k]
            Xf[i_k + r_idx * n] = 1.0 - xi[r_idx, k]
            E[r_idx] += delta[r_idx, k]
            G[r_idx] += sign[r_idx, k, None] * W[i_k]
            better = r_idx[E[r_idx] < best_E[r_idx]]
            if better.size:
                best_E[better] = E[better]
                best_X[better] = X[better]
        pos = np.minimum(pos + np.where(any_acc, first + 1, block), S)
        if not any_acc.any():
            block = min(block * 2, 1024)
    r_best = int(np.argmin(best_E))  # argmin returns the first = lowest index
    bits = best_X[r_best].astype(int)
    assignment = _bitstring(bits)
    return SolveResult(
        assignment,
        qubo_energy(q, assignment),
        "sa",
        int(seed),
        S,
        R,
    )


def selection_from_result(result: SolveResult) -> tuple[int, ...]:
    """Indices of the variables set to 1."""
    return tuple(i for i, ch in enumerate(result.assignment) if ch == "1")


# ---------------------------------------------------------------------------
# qbsolv-style text format.
#   c <comment>                    ('c offset <real>' carries the offset)
#   p qubo 0 <maxNodes> <nNodes> <nCouplers>
#   <i> <i> <value>                nNodes diagonal (linear) lines
#   <i> <j> <value>                nCouplers coupler lines, i < j
# ---------------------------------------------------------------------------

def export_qubo(q: Qubo, path, names: tuple[str, ...] | None = None) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("c qubo model written by csgcompress\n")
        if q.offset:
            fh.write(f"c offset {q.offset:.17g}\n")
        if names:
            for i, name in enumerate(names):
                fh.write(f"c var {i} {name}\n")
        fh.write(f"p qubo 0 {q.n} {len(q.linear)} {len(q.quadratic)}\n")
        for i, v in q.linear.items():
            fh.write(f"{i} {i} {v:.17g}\n")
        for (i, j), v in q.quadratic.items():
            fh.write(f"{i} {j} {v:.17g}\n")


def import_qubo(path) -> Qubo:
    n = None
    n_nodes = n_couplers = 0
    offset = 0.0
    linear: dict[int, float] = {}
    quadratic: dict[tuple[int, int], float] = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line:
                continue
            if line.startswith("c"):
                fields = line.split()
                if len(fields) >= 3 and fields[1] == "offset":
                    try:
                        offset = float(fields[2])
                    except ValueError as exc:
                        raise FileFormatError(
                            f"{path}:{lineno}: bad offset value"
                        ) from exc
                continue
            if line.startswith("p"):
                fields = line.split()
                if len(fields) != 6 or fields[1] != "qubo":
                    raise FileFormatError(
                        f"{path}:{lineno}: malformed program line"
                    )
                try:
                    n = int(fields[3])
                    n_nodes = int(fields[4])
                    n_couplers = int(fields[5])
                except ValueError as exc:
                    raise FileFormatError(f"{path}:{lineno}: {exc}") from exc
                continue
            if n is None:
                raise FileFormatError(
                    f"{path}:{lineno}: data before the program line"
                )
            fields = line.split()
            if len(fields) != 3:
                raise FileFormatError(
                    f"{path}:{lineno}: expected 'i j value'"
                )
            try:
                i, j, v = int(fields[0]), int(fields[1]), float(fields[2])
            except ValueError as exc:
                raise FileFormatError(f"{path}:{lineno}: {exc}") from exc
            if i == j:
                if i in linear:
                    raise FileFormatError(
                        f"{path}:{lineno}: duplicate node line for {i}"
                    )
                linear[i] = v
            else:
                if i >= j:
                    raise FileFormatError(
                        f"{path}:{lineno}: couplers need i < j"
                    )
                if (i, j) in quadratic:
                    raise FileFormatError(
                        f"{path}:{lineno}: duplicate coupler line for {i} {j}"
                    )
                quadratic[(i, j)] = v
    if n is None:
        raise FileFormatError(f"{path}: missing program line")
    if len(linear) != n_nodes or len(quadratic) != n_couplers:
        raise FileFormatError(
            f"{path}: program line declares {n_nodes} nodes/{n_couplers} couplers, "
            f"found {len(linear)}/{len(quadratic)}"
        )
    try:
        return Qubo(n, linear, quadratic, offset)
    except ValueError as exc:
        raise FileFormatError(f"{path}: {exc}") from exc
