"""Reference computations that share no code with the package."""
import itertools
import math

import numpy as np


def scalar_hjb_coefficients(f, q, r, order):
    """Gradient coefficients p_1..p_order of the scalar HJB solution.

    Plant ``xdot = sum_i f[i] x^i + u`` (``f[0]`` must be 0), state cost
    ``sum_i q[i] x^i`` with ``q[2] > 0`` and input cost ``r u^2 / 2``.
    Matching powers of ``x`` in ``p(x) f(x) - p(x)^2 / (2r) + q(x) = 0``
    with ``p(x) = sum_k p_k x^k`` gives one new unknown per power.
    """
    f = list(f) + [0.0] * (order + 3)
    q = list(q) + [0.0] * (order + 3)
    a = f[1]
    # x^2: p1 a - p1^2/(2r) + q2 = 0, stabilizing root
    p = [0.0, r * (a + math.sqrt(a * a + 2.0 * q[2] / r))]
    for k in range(2, order + 1):
        j = k + 1
        known = sum(p[i] * f[j - i] for i in range(1, k))
        known -= sum(p[i] * p[j - i] for i in range(2, k)) / (2.0 * r)
        known += q[j]
        # unknown enters as p_k (a - p_1 / r)
        p.append(-known / (a - p[1] / r))
    return p[1:]


def multinomial_sqrt(exps):
    total = math.factorial(sum(exps))
    for e in exps:
        total //= math.factorial(e)
    return math.sqrt(total)


def brute_exponents(n, k):
    """All exponent tuples of total degree ``k``, descending lexicographic."""
    tuples = [t for t in itertools.product(range(k, -1, -1), repeat=n) if sum(t) == k]
    return sorted(tuples, reverse=True)


def kron_power(x, k):
    out = np.ones(1)
    for _ in range(k):
        out = np.kron(out, x)
    return out


def lqr_closed_loop_states(A, B, R, P, x0, times):
    """``x(t) = expm((A - B R^-1 B^T P) t) x0`` via eigendecomposition-free expm."""
    from scipy.linalg import expm
    acl = A - B @ np.linalg.solve(R, B.T @ P)
    return np.array([expm(acl * t) @ x0 for t in times])


def sympy_hjb_coefficients(doc, P, top):
    """Coefficients of the exact HJB residual polynomial up to total degree ``top``.

    Builds ``V = sum_k x^T P_k x^k / (k+1)`` symbolically from the listed
    exponent tuples, differentiates it, and substitutes into
    ``V_x^T f - (g^T V_x)^T R1^{-1} (g^T V_x) / 2 + Q`` for a quadratic
    penalty.  Returns ``{degree: (max |residual coeff|, max |term coeff|)}``.
    """
    import sympy as sp
    n, m = doc["n"], doc["m"]
    xs = sp.symbols(f"x1:{n + 1}")
    us = sp.symbols(f"u1:{m + 1}")
    names = {f"x{i + 1}": xs[i] for i in range(n)} | {f"u{j + 1}": us[j] for j in range(m)}
    V = sp.Integer(0)
    for k, Pk in enumerate(P, start=1):
        mono = [multinomial_sqrt(e) * sp.prod([x**ei for x, ei in zip(xs, e)]) for e in brute_exponents(n, k)]
        pkxk = sp.Matrix(np.asarray(Pk).tolist()) * sp.Matrix(mono)
        V += (sp.Matrix(xs).T * pkxk)[0, 0] / (k + 1)
    grad = sp.Matrix([sp.diff(V, x) for x in xs])
    dyn = [sp.sympify(s.replace("^", "**"), locals=names) for s in doc["dynamics"]]
    zero_u = {u: 0 for u in us}
    f = sp.Matrix([d.subs(zero_u) for d in dyn])
    g = sp.Matrix([[sp.diff(d, u) for u in us] for d in dyn])
    Q = sp.sympify(doc["Q"].replace("^", "**"), locals=names)
    rinv = sp.Matrix(np.linalg.inv(np.array(doc["penalty"]["R1"], dtype=float)).tolist())
    v = g.T * grad
    pieces = [sp.expand((grad.T * f)[0, 0]), sp.expand((v.T * rinv * v)[0, 0] / 2), sp.expand(Q)]
    total = sp.Poly(pieces[0] - pieces[1] + pieces[2], *xs)
    out = {}
    for d in range(2, top + 1):
        res = max((abs(float(c)) for mon, c in total.terms() if sum(mon) == d), default=0.0)
        scale = max((abs(float(c)) for p in pieces for mon, c in sp.Poly(p, *xs).terms() if sum(mon) == d),
                    default=0.0)
        out[d] = (res, scale)
    return out
