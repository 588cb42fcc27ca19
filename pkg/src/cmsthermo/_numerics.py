"""Low-level numerical kernels shared by the public modules.

Nothing in here knows about shifts or potentials: the functions take plain
arrays (edge lists, matrices, callables) and return plain arrays.
"""

import math
from functools import reduce

import numpy as np
import scipy.sparse as sp
import scipy.sparse.csgraph  # noqa: F401
from scipy.special import logsumexp

NEG_INF = -np.inf


def perron_root(matvec, n, *, tol=1e-12, max_iter=100_000, x0=None):
    r"""Perron root and vector of an irreducible non-negative operator.

    Power iteration bracketed by the Collatz--Wielandt bounds

    .. math:: \min_i (Wx)_i/x_i \le \rho(W) \le \max_i (Wx)_i/x_i ,

    which hold for every positive ``x``. The plain iteration is tried first;
    if the bracket has not closed after 64 steps the iteration switches to
    the shifted operator ``W + cI`` with ``c`` the current upper bound. The
    shift leaves the Perron vector unchanged and removes the oscillation
    caused by a period ``p > 1``.

    Parameters
    ----------
    matvec : callable
        ``x -> W @ x`` for a non-negative irreducible ``W``.
    n : int
        Dimension.
    tol : float
        Relative width of the Collatz--Wielandt bracket at exit.
    max_iter : int
        Iteration cap.

    Returns
    -------
    rho : float
        Midpoint of the final bracket.
    x : (n,) ndarray
        Positive Perron vector normalised to unit sum.
    info : dict
        ``iterations``, ``bracket``, ``converged``, ``shift``.
    """
    x = np.full(n, 1.0 / n) if x0 is None else np.asarray(x0, dtype=float).copy()
    tiny = np.finfo(float).tiny
    shift = 0.0
    lo = hi = np.nan
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        y = matvec(x)
        ratios = y / x
        lo, hi = float(ratios.min()), float(ratios.max())
        if hi <= 0.0:
            return 0.0, x, {"iterations": it, "bracket": (0.0, 0.0), "converged": True, "shift": shift}
        if hi - lo <= tol * hi:
            converged = True
            x = y / y.sum()
            break
        if it == 64 and shift == 0.0:
            shift = hi
        x = y + shift * x
        x = np.maximum(x / x.sum(), tiny)
    rho = 0.5 * (lo + hi)
    info = {"iterations": it, "bracket": (lo, hi), "converged": converged, "shift": shift}
    return rho, x, info


def stationary_gth(P):
    """Stationary vector of an irreducible row-stochastic matrix.

    Grassmann--Taksar--Heyman elimination: subtraction free, hence accurate
    to working precision even for badly scaled chains.
    """
    A = np.array(P, dtype=float, copy=True)
    n = A.shape[0]
    for k in range(n - 1, 0, -1):
        s = A[k, :k].sum()
        if s <= 0.0:
            raise ValueError("chain is reducible")
        A[:k, k] /= s
        A[:k, :k] += np.outer(A[:k, k], A[k, :k])
    pi = np.zeros(n)
    pi[0] = 1.0
    for k in range(1, n):
        pi[k] = pi[:k] @ A[:k, k]
    return pi / pi.sum()


def stationary_sparse(P, *, tol=1e-14, max_iter=10_000):
    """Stationary vector of a large sparse irreducible stochastic matrix."""
    P = sp.csr_array(P)
    n = P.shape[0]
    A = (P.T - sp.identity(n, format="csr")).tolil()
    A[0, :] = np.ones(n)
    b = np.zeros(n)
    b[0] = 1.0
    pi = sp.linalg.spsolve(A.tocsc(), b)
    pi = np.clip(pi, 0.0, None)
    pi /= pi.sum()
    PT = P.T.tocsr()
    for _ in range(max_iter):
        nxt = PT @ pi
        if np.abs(nxt - pi).max() < tol:
            pi = nxt
            break
        pi = nxt
    return pi / pi.sum()


def segment_starts(keys, n):
    """Start offsets of each key in a sorted key array (empty segments allowed)."""
    return np.searchsorted(keys, np.arange(n))


def segment_max(values, starts, counts, fill=NEG_INF):
    """Row-wise segmented maximum along the last axis.

    ``values`` is sorted by segment; ``starts``/``counts`` describe segments.
    """
    out_shape = values.shape[:-1] + (len(starts),)
    out = np.full(out_shape, fill)
    nonempty = counts > 0
    if values.shape[-1] == 0 or not nonempty.any():
        return out
    red = np.maximum.reduceat(values, starts[nonempty], axis=-1)
    out[..., nonempty] = red
    return out


def karp_max_mean(n, src, dst, w):
    r"""Maximum cycle mean of an edge-weighted digraph (Karp's recurrence).

    ``D[k, v]`` is the heaviest walk of exactly ``k`` edges ending at ``v``
    from a virtual source joined to every vertex. Then

    .. math:: \lambda^* = \max_v \min_{0\le k<n} \frac{D_n(v)-D_k(v)}{n-k}.

    Returns ``-inf`` for an acyclic graph.
    """
    order = np.argsort(dst, kind="stable")
    src_s, dst_s, w_s = src[order], dst[order], w[order]
    counts = np.bincount(dst_s, minlength=n)
    starts = np.concatenate(([0], np.cumsum(counts)[:-1]))
    D = np.full((n + 1, n), NEG_INF)
    D[0] = 0.0
    for k in range(1, n + 1):
        D[k] = segment_max(D[k - 1][src_s] + w_s, starts, counts)
    final = D[n]
    best = NEG_INF
    with np.errstate(invalid="ignore"):
        for v in np.flatnonzero(np.isfinite(final)):
            col = D[:n, v]
            ks = np.flatnonzero(np.isfinite(col))
            best = max(best, float(np.min((final[v] - col[ks]) / (n - ks))))
    return best


def _bellman_ford(n, src, dst, red, p, rounds):
    order = np.argsort(dst, kind="stable")
    src_s, dst_s, red_s = src[order], dst[order], red[order]
    counts = np.bincount(dst_s, minlength=n)
    starts = np.concatenate(([0], np.cumsum(counts)[:-1]))
    for _ in range(rounds):
        with np.errstate(invalid="ignore"):
            cand = segment_max(p[src_s] + red_s, starts, counts)
        new = np.maximum(p, cand)
        fin = np.isfinite(new)
        if np.array_equal(fin, np.isfinite(p)) and np.allclose(
                new[fin], p[fin], rtol=0.0, atol=1e-13 * (1.0 + np.abs(new[fin]).max(initial=0.0))):
            return new
        p = new
    return p


def longest_potentials(n, src, dst, w, lam, *, max_rounds=None):
    """Vertex potentials ``p`` with ``p[u] + w - lam <= p[v]`` (tight on critical edges).

    Bellman--Ford longest paths with reduced weights ``w - lam``, first from
    a virtual source and then from the critical vertices (those on a cycle of
    tight edges). Anchored at the critical set, every vertex reachable from
    it gets a tight incoming edge. Valid when ``lam`` is the maximum cycle mean.
    """
    red = w - lam
    rounds = n + 1 if max_rounds is None else max_rounds
    p0 = _bellman_ford(n, src, dst, red, np.zeros(n), rounds)
    tight = np.abs(red + p0[src] - p0[dst]) <= 1e-9 * (1.0 + np.abs(red).max(initial=0.0))
    T = sp.csr_array((np.ones(int(tight.sum())), (src[tight], dst[tight])), shape=(n, n))
    _, lab = sp.csgraph.connected_components(T, directed=True, connection="strong")
    sizes = np.bincount(lab, minlength=n)
    crit = sizes[lab] > 1
    loops = src[tight & (src == dst)]
    crit[loops] = True
    if not crit.any():
        return p0
    p = np.where(crit, p0, -np.inf)
    p = _bellman_ford(n, src, dst, red, p, rounds)
    return p if np.isfinite(p).all() else p0


def gcd_all(values):
    vals = [abs(int(v)) for v in values if v != 0]
    return reduce(math.gcd, vals, 0)


def log_sum(log_terms):
    log_terms = np.asarray(log_terms, dtype=float)
    if log_terms.size == 0:
        return NEG_INF
    return float(logsumexp(log_terms))


def aitken(seq):
    """Aitken delta-squared transform of a sequence; returns (value, residual).

    Falls back to the last term when the second difference vanishes.
    """
    s = np.asarray(seq, dtype=float)
    s = s[np.isfinite(s)]
    if s.size < 3:
        return (float(s[-1]) if s.size else np.nan), np.inf
    x0, x1, x2 = s[-3], s[-2], s[-1]
    d2 = x2 - 2.0 * x1 + x0
    if abs(d2) < 1e-300 or abs(d2) < 1e-14 * max(1.0, abs(x2)):
        return float(x2), float(abs(x2 - x1))
    acc = x2 - (x2 - x1) ** 2 / d2
    return float(acc), float(abs(acc - x2))


def fit_tail_law(ks, values, return_residual=False):
    """Least-squares fit ``values ~ alpha*k + beta*log(k) + c (+ d/k)`` on sample points.

    The ``d/k`` column absorbs the first correction term of harmonic-type
    sums so that ``alpha`` and ``beta`` are not biased by it; only
    ``(alpha, beta, c)`` are returned, followed by the largest absolute
    residual of the full fit when ``return_residual`` is set.
    """
    ks = np.asarray(ks, dtype=float)
    values = np.asarray(values, dtype=float)
    A = np.column_stack([ks, np.log(ks), np.ones_like(ks), 1.0 / ks])
    scale = np.abs(A).max(axis=0)
    coef, *_ = np.linalg.lstsq(A / scale, values, rcond=None)
    resid = float(np.abs(A / scale @ coef - values).max())
    coef = coef / scale
    out = tuple(float(c) for c in coef[:3])
    return out + (resid,) if return_residual else out


def series_verdict(alpha, beta, *, alpha_tol=1e-7, beta_tol=1e-6, exact=False):
    """Convergence of ``sum_k exp(alpha*k + beta*log k + c)`` by comparison.

    Returns ``"finite"``, ``"divergent"`` or ``"undecided"`` (inside the
    tolerance band around the boundary ``alpha == 0, beta == -1``). With
    ``exact`` the law is taken as given, not fitted: no tolerance band, and
    the boundary itself is the divergent harmonic series.
    """
    if exact:
        if alpha != 0.0:
            return "finite" if alpha < 0 else "divergent"
        return "finite" if beta < -1.0 else "divergent"
    if alpha < -alpha_tol:
        return "finite"
    if alpha > alpha_tol:
        return "divergent"
    if beta < -1.0 - beta_tol:
        return "finite"
    if beta > -1.0 + beta_tol:
        return "divergent"
    return "undecided"


def log_remainder(alpha, beta, c, K):
    """Log of the analytic remainder ``sum_{k>K} exp(alpha*k + beta*log k + c)``.

    Geometric when ``alpha < 0``, Euler--Maclaurin integral when the tail is
    polynomial. Only meaningful for a convergent law.
    """
    if alpha < -1e-7:
        # sum_{j>=1} exp(alpha*(K+j)) * (K+j)^beta ~ e^{u(K+1)} / (1 - e^alpha)
        u1 = alpha * (K + 1) + beta * math.log(K + 1) + c
        return u1 - math.log(-math.expm1(alpha))
    # integral_{K+1/2}^inf x^beta dx
    return c + (beta + 1.0) * math.log(K + 0.5) - math.log(-(beta + 1.0))
