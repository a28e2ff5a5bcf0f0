"""Brute-force reference computations in exact rational arithmetic.

Nothing here imports ``ergodia``; words are tuples, measures are dicts and
operators are nested lists of ``Fraction``.  The tests compare the package
against these on small models.
"""
from fractions import Fraction
from itertools import product


def admissible(A, word):
    return all(A[a][b] for a, b in zip(word, word[1:]))


def words(A, d):
    N = len(A)
    return [w for w in product(range(N), repeat=d) if admissible(A, w)]


def _f(x):
    return Fraction(x) if not isinstance(x, Fraction) else x


def mass_fn(cfg):
    """Exact cylinder mass ``word -> Fraction`` from a config dict."""
    kind = cfg["measure"]["kind"]
    p = cfg["measure"]["params"]
    if kind == "bernoulli":
        wts = [_f(x) for x in p["weights"]]

        def mass(w):
            out = Fraction(1)
            for a in w:
                out *= wts[a]
            return out
        return mass
    if kind == "markov":
        pi = [_f(x) for x in p["initial"]]
        P = [[_f(x) for x in row] for row in p["transition"]]

        def mass(w):
            if not w:
                return Fraction(1)
            out = pi[w[0]]
            for a, b in zip(w, w[1:]):
                out *= P[a][b]
            return out
        return mass
    raise ValueError(kind)


def pushforward(A, mass, w):
    """``μ(σ^{-1}[w]) = Σ_a μ([a w])``."""
    return sum((mass((a,) + tuple(w)) for a in range(len(A)) if admissible(A, (a,) + tuple(w))),
               Fraction(0))


def compose_matrix(A, d):
    """``S_σ: V_d -> V_{d+1}``, ``(f∘σ)(u) = f(u[1:])``."""
    rows, cols = words(A, d + 1), words(A, d)
    return [[Fraction(int(u[1:] == w)) for w in cols] for u in rows]


def adjoint_matrix(A, mass, d):
    """``S*_σ: V_d -> V_{d-1}``, ``(S* g)(w) = Σ_a g(aw) μ(aw)/μ(w)``."""
    rows, cols = words(A, d - 1), words(A, d)
    return [[mass(u) / mass(w) if u[1:] == w else Fraction(0) for u in cols] for w in rows]


def transfer_matrix(A, mass, d):
    """``R_σ: V_d -> V_{d-1}`` with the normalized fiber weights."""
    rows, cols = words(A, d - 1), words(A, d)
    return [[mass(u) / pushforward(A, mass, w) if u[1:] == w else Fraction(0) for u in cols]
            for w in rows]


def rho(A, mass, d):
    return {w: pushforward(A, mass, w) / mass(w) for w in words(A, d)}


def omega(A, mass, d):
    """``ω(u) = 1/ρ(u[1:])`` on words of length ``d``."""
    r = rho(A, mass, d - 1)
    return {u: 1 / r[u[1:]] for u in words(A, d)}


def matmul(X, Y):
    return [[sum((X[i][k] * Y[k][j] for k in range(len(Y))), Fraction(0)) for j in range(len(Y[0]))]
            for i in range(len(X))]


def rank(M):
    """Exact rank by fraction Gaussian elimination."""
    M = [row[:] for row in M]
    r = 0
    cols = len(M[0]) if M else 0
    for c in range(cols):
        piv = next((i for i in range(r, len(M)) if M[i][c] != 0), None)
        if piv is None:
            continue
        M[r], M[piv] = M[piv], M[r]
        for i in range(len(M)):
            if i != r and M[i][c] != 0:
                f = M[i][c] / M[r][c]
                M[i] = [a - f * b for a, b in zip(M[i], M[r])]
        r += 1
    return r


def sigma_n_class_count(A, D, n):
    """Number of classes of depth-``D`` words glued by ``σ^n`` (union-find over extensions)."""
    base = words(A, D)
    L = max(n + 1, D)
    # letters that can sit at position n+1 of an admissible extension of u
    reach = {u: set() for u in base}
    for v in words(A, L):
        if v[:D] in reach and n < L:
            reach[v[:D]].add(v[n:])
    parent = {u: u for u in base}

    def find(u):
        while parent[u] != u:
            u = parent[u]
        return u

    tails = {}
    for u in base:
        for t in reach[u]:
            tails.setdefault(t, []).append(u)
    for group in tails.values():
        for u in group[1:]:
            a, b = find(group[0]), find(u)
            if a != b:
                parent[b] = a
    return len({find(u) for u in base})


def to_float(M):
    return [[float(x) for x in row] for row in M]
