"""Dwork matrix, Fredholm coefficients, and the exponential-sum oracle.

The product expansion of E_f gives coefficient series e_P with
v_T(e_P) >= ceil(w(P)); entries e_{pQ-P} of the truncated operator
matrix then produce the characteristic-series coefficients u_l through
trace power sums and Newton's identities (computed at an elevated
p-power precision so the divisions by l are exact), and the T-adic
Newton polygon as the lower hull of (l, v_T(u_l)/n).

Everything runs on windowed matrices: points of weight > W contribute
only beyond T^N, which the W+1 stability test exercises.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .lattice import Point, TriangleSpec, enumerate_T
from .hodge import PolygonHull, lower_convex_hull
from .series import SeriesRing, UnramifiedRing, artin_hasse, pi_of_T


class HullMismatchError(ValueError):
    pass


class PrecisionExhausted(ValueError):
    pass


DEFAULT_SLACK = 2


def teichmueller_int(c: int, p: int, M: int) -> int:
    """Teichmueller lift of c mod p into Z/p^M by p-power iteration."""
    x = c % p ** M
    for _ in range(M - 1):
        x = pow(x, p, p ** M)
    return x


def window_points(delta: TriangleSpec, p: int, N: int,
                  slack: int = DEFAULT_SLACK) -> list[Point]:
    """Matrix window: points with (p-1)*w(P) <= N + slack.

    Any l-subset reaching beyond the window has h1 >= (p-1)*w > N, so
    dropped rows/columns only affect coefficients at or above T^N.
    """
    cap = Fraction(N + slack, p - 1)
    k = math.ceil(cap) + 1
    pts = enumerate_T(delta, k, closed=True)
    return [q for q in pts
            if (p - 1) * delta.weight_num(q) <= (N + slack) * delta.det]


def validate_support(delta: TriangleSpec, f_hat: dict[Point, int], p: int):
    for q in f_hat:
        if not delta.in_cone(q) or delta.weight_num(q) > delta.det:
            raise HullMismatchError(f"support point {q} outside the closed triangle")
    for vertex in ((delta.a1, delta.b1), (delta.a2, delta.b2)):
        if f_hat.get(vertex, 0) % p == 0:
            raise HullMismatchError(f"vertex coefficient at {vertex} vanishes mod p")


def expand_Ef(delta: TriangleSpec, f_hat: dict[Point, int], ring: SeriesRing,
              w_cap: int) -> dict[Point, np.ndarray]:
    """Coefficient series e_P of prod E(a_Q pi x^Q), for all w(P) <= w_cap.

    f_hat maps support points to lifts in Z/p^M.  Entries beyond the
    weight cap are exact zeros mod T^N whenever w_cap >= N.
    """
    validate_support(delta, f_hat, ring.p)
    E = artin_hasse(ring)
    pi = pi_of_T(ring)
    cap_num = w_cap * delta.det
    pi_pows = [ring.one()]
    for _ in range(ring.N - 1):
        pi_pows.append(ring.mul(pi_pows[-1], pi))
    acc: dict[Point, np.ndarray] = {(0, 0): ring.one()}
    for q in sorted(f_hat, key=delta.canonical_key):
        a = f_hat[q] % ring.modulus
        wq = delta.weight_num(q)
        terms = []
        apow = 1
        for j in range(ring.N):
            if j * wq > cap_num:
                break
            terms.append(ring.scal(int(E[j]) * apow % ring.modulus, pi_pows[j]))
            apow = apow * a % ring.modulus
        new: dict[Point, np.ndarray] = {}
        for pt, s in acc.items():
            wpt = delta.weight_num(pt)
            for j, tj in enumerate(terms):
                if wpt + j * wq > cap_num:
                    break
                tgt = (pt[0] + j * q[0], pt[1] + j * q[1])
                contrib = ring.mul(s, tj) if j else s
                if tgt in new:
                    new[tgt] = ring.add(new[tgt], contrib)
                else:
                    new[tgt] = contrib.copy() if j == 0 else contrib
        acc = new
    return acc


def assert_valuation_bounds(delta: TriangleSpec, ring: SeriesRing,
                            e_map: dict[Point, np.ndarray]) -> None:
    """v_T(e_P) >= ceil(w(P)) for every expanded coefficient."""
    for pt, s in e_map.items():
        val = ring.valuation(s)
        bound = min(delta.ceil_weight(pt), ring.N)
        if val is not None and val < bound:
            raise AssertionError(f"v_T(e_{pt}) = {val} < ceil(w) = {bound}")


def dwork_matrix(delta: TriangleSpec, ring: SeriesRing,
                 e_map: dict[Point, np.ndarray],
                 window: list[Point], p: int) -> np.ndarray:
    """int64 array (n, n, N): entry[i, j] = e_{p*W[i] - W[j]}."""
    n = len(window)
    mat = np.zeros((n, n, ring.N), dtype=np.int64)
    for i, q in enumerate(window):
        for j, pt in enumerate(window):
            r = (p * q[0] - pt[0], p * q[1] - pt[1])
            s = e_map.get(r)
            if s is not None:
                mat[i, j, :] = s
    return mat


def poly_matmul(a: np.ndarray, b: np.ndarray, modulus: int) -> np.ndarray:
    """Series-matrix product, exact through float64 BLAS.

    Requires modulus^2 * inner-dim < 2^53 so every dot product is an
    exactly representable integer.
    """
    m, k, N = a.shape
    n = b.shape[1]
    if modulus * modulus * k >= 2 ** 53:
        raise ValueError("modulus too large for exact float64 matmul")
    af = a.astype(np.float64)
    out = np.zeros((m, n, N), dtype=np.float64)
    b3 = b.astype(np.float64)
    for t1 in range(N):
        block = af[:, :, t1]
        if not block.any():
            continue
        prod = block @ b3[:, :, : N - t1].reshape(k, n * (N - t1))
        out[:, :, t1:] = np.remainder(out[:, :, t1:]
                                      + prod.reshape(m, n, N - t1), modulus)
    return out.astype(np.int64)


def poly_trace(a: np.ndarray, modulus: int) -> np.ndarray:
    return np.einsum('iit->t', a) % modulus


def _vp(n: int, p: int) -> int:
    v = 0
    while n % p == 0:
        n //= p
        v += 1
    return v


@dataclass
class CharSeries:
    """Coefficients u_0..u_L of det(I - s psi^n), each mod (p^M, T^N)."""

    p: int
    M: int
    N: int
    n: int
    u: list[np.ndarray]

    def valuation(self, ell: int) -> int | None:
        nz = np.nonzero(self.u[ell] % self.p ** self.M)[0]
        return int(nz[0]) if len(nz) else None


def char_series(delta: TriangleSpec, f_hat_residues: dict[Point, int], p: int,
                M: int, N: int, L: int, n: int = 1,
                slack: int = DEFAULT_SLACK) -> CharSeries:
    """u_0..u_L through trace power sums and Newton's identities.

    Works at precision M + v_p(L!) so the division by l in Newton's
    identity is exact; u_l is then reduced to p^M.  For n > 1 the
    operator matrix is the sigma-twisted product of the coefficient
    Frobenius conjugates.
    """
    m_work = M + _vp(math.factorial(L), p) if L else M
    if n == 1:
        ring = SeriesRing(p, m_work, N)
        f_hat = {q: teichmueller_int(c, p, m_work)
                 for q, c in f_hat_residues.items()}
        e_map = expand_Ef(delta, f_hat, ring, w_cap=N)
        window = window_points(delta, p, N, slack)
        mat = dwork_matrix(delta, ring, e_map, window, p)
        traces = []
        power = mat
        for _ in range(L):
            traces.append(poly_trace(power, ring.modulus))
            if len(traces) < L:
                power = poly_matmul(power, mat, ring.modulus)
    else:
        traces = _twisted_traces(delta, f_hat_residues, p, m_work, N, L, n, slack)
        ring = SeriesRing(p, m_work, N)
    # Newton's identities: l*e_l = sum_{i=1}^{l} (-1)^(i-1) e_{l-i} tr_i
    e = [ring.one()]
    prec = [m_work]
    for ell in range(1, L + 1):
        rhs = ring.zero()
        cur_prec = m_work
        for i in range(1, ell + 1):
            term = ring.mul(e[ell - i], traces[i - 1])
            rhs = ring.add(rhs, term) if i % 2 == 1 else ring.sub(rhs, term)
            cur_prec = min(cur_prec, prec[ell - i])
        v = _vp(ell, p)
        unit = ell // p ** v
        rhs = rhs % p ** cur_prec
        if v:
            if (rhs % p ** v).any():
                raise PrecisionExhausted(f"inexact division by {ell} at l={ell}")
            rhs = rhs // p ** v
            cur_prec -= v
        rhs = rhs * pow(unit, -1, p ** cur_prec) % p ** cur_prec
        e.append(rhs)
        prec.append(cur_prec)
        if cur_prec < M:
            raise PrecisionExhausted(f"precision fell below M at l={ell}")
    u = []
    pm = p ** M
    for ell in range(L + 1):
        coeff = e[ell] % pm
        if ell % 2 == 1:
            coeff = (-coeff) % pm
        u.append(coeff.astype(np.int64))
    return CharSeries(p, M, N, n, u)


def _zq_series_mul(a, b, Rq, N):
    out = [Rq.zero()] * N
    for t1, at in enumerate(a):
        if not any(c for c in at):
            continue
        for t2 in range(N - t1):
            bt = b[t2]
            if any(c for c in bt):
                out[t1 + t2] = Rq.add(out[t1 + t2], Rq.mul(at, bt))
    return out


def _zq_mat_mul(A, B, Rq, N):
    npts = len(A)
    out = [[None] * npts for _ in range(npts)]
    for i in range(npts):
        for j in range(npts):
            acc = [Rq.zero()] * N
            for k in range(npts):
                term = _zq_series_mul(A[i][k], B[k][j], Rq, N)
                acc = [Rq.add(x, y) for x, y in zip(acc, term)]
            out[i][j] = acc
    return out


def _expand_Ef_zq(delta, f_hat, Rq, iring, w_cap):
    """Zq-coefficient variant of expand_Ef; series are lists of ring elts."""
    E = artin_hasse(iring)
    pi = pi_of_T(iring)
    cap_num = w_cap * delta.det
    pi_pows = [iring.one()]
    for _ in range(iring.N - 1):
        pi_pows.append(iring.mul(pi_pows[-1], pi))
    N = iring.N

    def scal_series(zq_c, int_series):
        return [Rq.mul(zq_c, Rq.from_int(int(v))) for v in int_series]

    acc = {(0, 0): [Rq.one()] + [Rq.zero()] * (N - 1)}
    for q in sorted(f_hat, key=delta.canonical_key):
        a = f_hat[q]
        wq = delta.weight_num(q)
        terms = []
        apow = Rq.one()
        for j in range(N):
            if j * wq > cap_num:
                break
            cj = Rq.mul(apow, Rq.from_int(int(E[j])))
            terms.append([Rq.mul(cj, Rq.from_int(int(v))) for v in pi_pows[j]])
            apow = Rq.mul(apow, a)
        new = {}
        for pt, s in acc.items():
            wpt = delta.weight_num(pt)
            for j, tj in enumerate(terms):
                if wpt + j * wq > cap_num:
                    break
                tgt = (pt[0] + j * q[0], pt[1] + j * q[1])
                contrib = _zq_series_mul(s, tj, Rq, N) if j else s
                if tgt in new:
                    new[tgt] = [Rq.add(x, y) for x, y in zip(new[tgt], contrib)]
                else:
                    new[tgt] = list(contrib)
        acc = new
    return acc


def _twisted_traces(delta, f_hat_residues, p, m_work, N, L, n, slack):
    """Traces of (sigma^(n-1)N ... sigma(N) N)^k for k = 1..L, n > 1.

    Coefficient residues may be ints (prime-subfield) or length-n tuples.
    The traces land in Z_p; that containment is asserted and the
    projected integer series are returned.
    """
    Rq = UnramifiedRing(p, m_work, n)
    iring = SeriesRing(p, m_work, N)
    f_hat = {}
    for q, c in f_hat_residues.items():
        elt = tuple(c) if isinstance(c, (tuple, list)) else Rq.from_int(c)
        f_hat[q] = Rq.teichmueller(elt)
    for vertex in ((delta.a1, delta.b1), (delta.a2, delta.b2)):
        if not Rq.is_unit(f_hat.get(vertex, Rq.zero())):
            raise HullMismatchError(f"vertex coefficient at {vertex} vanishes mod p")
    e_map = _expand_Ef_zq(delta, f_hat, Rq, iring, w_cap=N)
    window = window_points(delta, p, N, slack)
    npts = len(window)
    zero_series = [Rq.zero()] * N

    def base_matrix(emap):
        mat = [[None] * npts for _ in range(npts)]
        for i, qq in enumerate(window):
            for j, pt in enumerate(window):
                r = (p * qq[0] - pt[0], p * qq[1] - pt[1])
                mat[i][j] = emap.get(r, zero_series)
        return mat

    mat0 = base_matrix(e_map)

    def frob_series(s):
        return [Rq.frobenius(c) for c in s]

    twisted = mat0
    conj = mat0
    for _ in range(1, n):
        conj = [[frob_series(entry) for entry in row] for row in conj]
        twisted = _zq_mat_mul(conj, twisted, Rq, N)
    traces = []
    power = twisted
    modulus = p ** m_work
    for k in range(L):
        tr = [Rq.zero()] * N
        for i in range(npts):
            tr = [Rq.add(x, y) for x, y in zip(tr, power[i][i])]
        arr = np.zeros(N, dtype=np.int64)
        for t, c in enumerate(tr):
            if any(v % modulus for v in c[1:]):
                raise AssertionError("twisted trace left the base ring")
            arr[t] = c[0] % modulus
        traces.append(arr)
        if k + 1 < L:
            power = _zq_mat_mul(power, twisted, Rq, N)
    return traces


def newton_polygon_C(cs: CharSeries) -> tuple[PolygonHull, list[int], list[int]]:
    """Hull over certified (l, v_T(u_l)/n); returns (hull, certified, flagged)."""
    pts = []
    certified, flagged = [], []
    for ell in range(len(cs.u)):
        val = cs.valuation(ell)
        if val is None:
            flagged.append(ell)
        else:
            certified.append(ell)
            pts.append((ell, Fraction(val, cs.n)))
    return lower_convex_hull(pts), certified, flagged


# -- exact determinant of the T1 block --------------------------------


def _poly_matvec(mat: np.ndarray, vec: np.ndarray, modulus: int) -> np.ndarray:
    r, _, N = mat.shape
    out = np.zeros((r, N), dtype=np.int64)
    for t1 in range(N):
        block = mat[:, :, t1]
        if not block.any():
            continue
        out[:, t1:] = (out[:, t1:] + block @ vec[:, : N - t1]) % modulus
    return out


def berkowitz_char_coeffs(mat: np.ndarray, ring: SeriesRing) -> list[np.ndarray]:
    """Division-free characteristic coefficients: q[i] = coeff of s^i
    in det(I - s*mat), entries truncated series."""
    n = mat.shape[0]
    q = [ring.one()]
    for r in range(1, n + 1):
        a_rr = mat[r - 1, r - 1, :].copy()
        col = [ring.one(), (-a_rr) % ring.modulus]
        if r >= 2:
            R = mat[r - 1, :r - 1, :]
            C = mat[:r - 1, r - 1, :]
            sub = mat[:r - 1, :r - 1, :]
            v = C.copy()
            for _ in range(r - 1):
                s_j = np.zeros(ring.N, dtype=np.int64)
                for t1 in range(ring.N):
                    if R[:, t1].any():
                        s_j[t1:] = (s_j[t1:] + R[:, t1] @ v[:, : ring.N - t1]) \
                            % ring.modulus
                col.append((-s_j) % ring.modulus)
                v = _poly_matvec(sub, v, ring.modulus)
        newq = []
        for i in range(r + 1):
            acc = ring.zero()
            for kk in range(max(0, i - len(col) + 1), min(i, r - 1) + 1):
                acc = ring.add(acc, ring.mul(col[i - kk], q[kk]))
            newq.append(acc)
        q = newq
    # det(xI - A) leading-first coefficients were folded so that
    # q[i] is already the coefficient of s^i in det(I - sA).
    return q


def det_T1(delta: TriangleSpec, f_hat_residues: dict[Point, int], p: int,
           M: int, N: int) -> np.ndarray:
    """det over the T1 window: sum over permutations of prod e_{p*tau(P)-P}.

    Computed division-free (Berkowitz); requires N > h(T1) to expose the
    leading coefficient.
    """
    from .hodge import minimal_h
    t1 = enumerate_T(delta, 1)
    h1 = minimal_h(delta, p, t1)
    if N <= h1:
        raise PrecisionExhausted(f"need N > h(T1) = {h1}")
    ring = SeriesRing(p, M, N)
    f_hat = {q: teichmueller_int(c, p, M) for q, c in f_hat_residues.items()}
    e_map = expand_Ef(delta, f_hat, ring, w_cap=N)
    mat = dwork_matrix(delta, ring, e_map, t1, p)
    q = berkowitz_char_coeffs(mat, ring)
    n = len(t1)
    # det(A) = (-1)^n * coeff of s^n in det(I - sA)
    det = q[n] if n % 2 == 0 else (-q[n]) % ring.modulus
    return det


# -- exponential-sum oracle -------------------------------------------


def binomial_row(c: int, N: int, p: int, M: int) -> np.ndarray:
    """(1+T)^c mod (p^M, T^N) for an integer representative c."""
    pm = p ** M
    out = np.zeros(N, dtype=np.int64)
    out[0] = 1 % pm
    num = 1
    for j in range(1, N):
        num *= c - (j - 1)
        # exact integer binomial c choose j
        out[j] = (num // math.factorial(j)) % pm
    return out


def exp_sum_oracle(delta: TriangleSpec, f_hat_residues: dict[Point, int],
                   p: int, M: int, N: int, k: int, n: int = 1,
                   torus_limit: int = 20000):
    """Exhaustive torus sum S*_f(k, T) and the matching matrix trace.

    Returns (S_star, (q^k-1)^2 * Tr(psi^(n*k))), both mod (p^M, T^N).
    Trace precision suffices because the binomial coefficients only need
    the exponent mod p^(M + floor(log_p(N-1))).
    """
    r = n * k
    q_k = p ** r
    if (q_k - 1) ** 2 > torus_limit:
        raise ValueError("torus too large for exhaustive summation")
    extra = 0
    while p ** extra <= max(N - 1, 1):
        extra += 1
    M_lift = M + extra
    Rk = UnramifiedRing(p, M_lift, r)
    pm = p ** M

    # Teichmueller lifts of the units, with power tables up to max exponent
    units = [e for e in Rk.residue_elements() if any(e)]
    lifts = [Rk.teichmueller(e) for e in units]
    max_deg = max(max(q[0] for q in f_hat_residues),
                  max(q[1] for q in f_hat_residues))
    pow_tables = []
    for w in lifts:
        tbl = [Rk.one()]
        for _ in range(max_deg):
            tbl.append(Rk.mul(tbl[-1], w))
        pow_tables.append(tbl)
    f_lift = {}
    for qpt, c in f_hat_residues.items():
        elt = tuple(c) if isinstance(c, (tuple, list)) else Rk.from_int(c)
        f_lift[qpt] = Rk.teichmueller(elt)

    counts: dict[int, int] = {}
    for i1 in range(len(units)):
        for i2 in range(len(units)):
            val = Rk.zero()
            for qpt, a in f_lift.items():
                mono = Rk.mul(pow_tables[i1][qpt[0]], pow_tables[i2][qpt[1]])
                val = Rk.add(val, Rk.mul(a, mono))
            c = Rk.trace(val)
            counts[c] = counts.get(c, 0) + 1
    s_star = np.zeros(N, dtype=np.int64)
    for c, cnt in counts.items():
        s_star = (s_star + cnt * binomial_row(c, N, p, M)) % pm

    # trace side
    if n == 1:
        ring = SeriesRing(p, M, N)
        f_hat = {qpt: teichmueller_int(c, p, M)
                 for qpt, c in f_hat_residues.items()}
        e_map = expand_Ef(delta, f_hat, ring, w_cap=N)
        window = window_points(delta, p, N)
        mat = dwork_matrix(delta, ring, e_map, window, p)
        power = mat
        for _ in range(k - 1):
            power = poly_matmul(power, mat, ring.modulus)
        tr = poly_trace(power, ring.modulus)
    else:
        traces = _twisted_traces(delta, f_hat_residues, p, M, N, k, n,
                                 DEFAULT_SLACK)
        tr = traces[k - 1] % pm
    rhs = (q_k - 1) ** 2 % pm * tr % pm
    return s_star, rhs


def truncation_stable(delta: TriangleSpec, f_hat_residues: dict[Point, int],
                      p: int, M: int, N: int, L: int) -> bool:
    """Recomputing u_l with a widened window must not change them."""
    a = char_series(delta, f_hat_residues, p, M, N, L, slack=DEFAULT_SLACK)
    b = char_series(delta, f_hat_residues, p, M, N, L,
                    slack=DEFAULT_SLACK + p - 1)
    return all((x == y).all() for x, y in zip(a.u, b.u))
