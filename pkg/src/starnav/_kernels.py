"""Compiled inner loops for the per-step hot paths (ray exits and field modulation)."""
import math

import numpy as np
from numba import njit


@njit(cache=True)
def radial(P, centers, cv, cr, co, cw, cc, sa, sn, so, sw, sd, swd):
    n, m = P.shape[0], centers.shape[0]
    dist = np.empty((n, m))
    R = np.full((n, m), -np.inf)
    U = np.empty((n, m, 2))
    N = np.zeros((n, m, 2))
    for i in range(n):
        for j in range(m):
            dx = P[i, 0] - centers[j, 0]
            dy = P[i, 1] - centers[j, 1]
            d = math.hypot(dx, dy)
            if d < 1e-12:
                dx, dy, d = 1e-9, 0.0, 1e-9
            dist[i, j] = d
            U[i, j, 0] = dx / d
            U[i, j, 1] = dy / d
        for k in range(cv.shape[0]):
            j = co[k]
            ux, uy = U[i, j, 0], U[i, j, 1]
            b = ux * cw[k, 0] + uy * cw[k, 1]
            disc = b * b - cc[k]
            if disc >= 0.0:
                t = b + math.sqrt(disc)
                if t > R[i, j]:
                    R[i, j] = t
                    N[i, j, 0] = (t * ux - cw[k, 0]) / cr[k]
                    N[i, j, 1] = (t * uy - cw[k, 1]) / cr[k]
        for k in range(sa.shape[0]):
            j = so[k]
            ux, uy = U[i, j, 0], U[i, j, 1]
            den = ux * sd[k, 1] - uy * sd[k, 0]
            if abs(den) > 1e-15:
                t = swd[k] / den
                lam = (sw[k, 0] * uy - sw[k, 1] * ux) / den
                if lam >= -1e-12 and lam <= 1.0 + 1e-12 and t >= 0.0 and t > R[i, j]:
                    R[i, j] = t
                    N[i, j, 0] = sn[k, 0]
                    N[i, j, 1] = sn[k, 1]
        for j in range(m):
            if R[i, j] < 1e-12:
                R[i, j] = 1e-12
    return dist, R, U, N


@njit(cache=True)
def modulate(F, G, U, N, zero):
    """Modulated field (n, 2) from nominal F (n, 2), gammas G >= 1 and ray data (n, m)."""
    n, m = G.shape
    out = np.zeros((n, 2))
    V = np.empty((m, 2))
    W = np.empty(m)
    for i in range(n):
        fx, fy = F[i, 0], F[i, 1]
        for j in range(m):
            ux, uy = U[i, j, 0], U[i, j, 1]
            nx, ny = N[i, j, 0], N[i, j, 1]
            det = ux * nx + uy * ny
            if abs(det) < 1e-9:
                det = 1e-9 if det + 0.0 >= 0.0 else -1e-9
            alpha = (fx * nx + fy * ny) / det
            beta = (ux * fy - uy * fx) / det
            inv = 1.0 / G[i, j]
            a = (1.0 - inv) * alpha
            b = (1.0 + inv) * beta
            V[j, 0] = a * ux - b * ny
            V[j, 1] = a * uy + b * nx
        if m == 1:
            out[i, 0], out[i, 1] = V[0, 0], V[0, 1]
            continue
        nf = math.hypot(fx, fy)
        if nf <= zero:
            continue
        on = 0
        for j in range(m):
            if G[i, j] - 1.0 <= 0.0:
                on += 1
        tot = 0.0
        for j in range(m):
            e = G[i, j] - 1.0
            if on:
                W[j] = 1.0 if e <= 0.0 else 0.0
            else:
                W[j] = 1.0 / e
            tot += W[j]
        hx, hy = fx / nf, fy / nf
        ang, mag = 0.0, 0.0
        for j in range(m):
            w = W[j] / tot
            mj = math.hypot(V[j, 0], V[j, 1])
            if mj > zero:
                ang += w * math.atan2(hx * V[j, 1] - hy * V[j, 0], hx * V[j, 0] + hy * V[j, 1])
            mag += w * mj
        ca, sa = math.cos(ang), math.sin(ang)
        out[i, 0] = (ca * hx - sa * hy) * mag
        out[i, 1] = (sa * hx + ca * hy) * mag
    return out


@njit(cache=True)
def _horner(c, x):
    v0, v1 = 0.0, 0.0
    for k in range(c.shape[0]):
        v0 = v0 * x + c[k, 0]
        v1 = v1 * x + c[k, 1]
    return v0, v1


@njit(cache=True)
def unicycle_tunnel(w, x0, dt, r0, pw, dpw, npath, tun, u_prev, Rm, c_s, c_e, margin):
    """Cost, gradient, constraints and Jacobian of the unicycle tunnel problem.

    ``tun`` is (mode, a, b, c, d): mode 0 is a constant radius a; mode 1 the
    envelope rho - e(s) with rho=a, eps=b, L=c, s1=d.
    """
    N = w.shape[0] // 3
    nv = 3 * N
    X = np.empty((N + 1, 3))
    S = np.empty(N + 1)
    X[0, 0], X[0, 1], X[0, 2] = x0[0], x0[1], x0[2]
    S[0] = 0.0
    cth = np.empty(N)
    sth = np.empty(N)
    A = np.zeros(N + 1)
    B = np.zeros(N + 1)
    for i in range(N):
        v, om, ds = w[3 * i], w[3 * i + 1], w[3 * i + 2]
        cth[i] = math.cos(X[i, 2])
        sth[i] = math.sin(X[i, 2])
        a = dt * v * cth[i]
        b = dt * v * sth[i]
        A[i + 1] = A[i] + a
        B[i + 1] = B[i] + b
        X[i + 1, 0] = x0[0] + A[i + 1]
        X[i + 1, 1] = x0[1] + B[i + 1]
        X[i + 1, 2] = X[i, 2] + dt * om
        S[i + 1] = S[i] + ds
    E = np.empty((N, 2))
    dE = np.zeros((N, 2, nv))
    rad = np.empty(N)
    drad = np.empty(N)
    mode, ta, tb, tc, td = tun[0], tun[1], tun[2], tun[3], tun[4]
    for i in range(N):
        s = S[i + 1]
        sc = min(max(s, 0.0), npath)
        x = 2.0 * sc / npath - 1.0
        h0, h1 = _horner(pw, x)
        d0, d1 = _horner(dpw, x)
        d0 *= 2.0 / npath
        d1 *= 2.0 / npath
        E[i, 0] = r0[0] + h0 - X[i + 1, 0]
        E[i, 1] = r0[1] + h1 - X[i + 1, 1]
        k = i + 1
        for j in range(k):
            # state sensitivities of stage k to inputs of stage j < k
            dE[i, 0, 3 * j] = -dt * cth[j]
            dE[i, 1, 3 * j] = -dt * sth[j]
            dE[i, 0, 3 * j + 1] = dt * (B[k] - B[j + 1])
            dE[i, 1, 3 * j + 1] = -dt * (A[k] - A[j + 1])
            dE[i, 0, 3 * j + 2] = d0
            dE[i, 1, 3 * j + 2] = d1
        if mode == 0.0:
            rad[i], drad[i] = ta, 0.0
        elif td <= 0.0:
            rad[i], drad[i] = ta - tb, 0.0
        elif sc < td:
            rad[i] = ta - tc * sc * (2.0 - sc / td)
            drad[i] = -tc * (2.0 - 2.0 * sc / td)
        else:
            rad[i], drad[i] = ta - tb, 0.0
    rmax = 1e-6
    for i in range(N):
        rmax = max(rmax, rad[i])
    ref = rmax * rmax
    g = np.empty(N)
    Jg = np.zeros((N, nv))
    for i in range(N):
        g[i] = (E[i, 0] ** 2 + E[i, 1] ** 2 - rad[i] ** 2 + margin) / ref
        for c in range(nv):
            Jg[i, c] = 2.0 * (E[i, 0] * dE[i, 0, c] + E[i, 1] * dE[i, 1, c]) / ref
        for j in range(i + 1):
            Jg[i, 3 * j + 2] -= 2.0 * rad[i] * drad[i] / ref
    J = -c_s * S[N] + c_e * (E[N - 1, 0] ** 2 + E[N - 1, 1] ** 2)
    gJ = np.zeros(nv)
    for c in range(nv):
        gJ[c] = 2.0 * c_e * (E[N - 1, 0] * dE[N - 1, 0, c] + E[N - 1, 1] * dE[N - 1, 1, c])
    pu0, pu1 = u_prev[0], u_prev[1]
    G = np.empty((N, 2))
    for i in range(N):
        gJ[3 * i + 2] -= c_s
        du0 = w[3 * i] - pu0
        du1 = w[3 * i + 1] - pu1
        r0_ = Rm[0, 0] * du0 + Rm[0, 1] * du1
        r1_ = Rm[1, 0] * du0 + Rm[1, 1] * du1
        J += du0 * r0_ + du1 * r1_
        G[i, 0], G[i, 1] = 2.0 * r0_, 2.0 * r1_
        pu0, pu1 = w[3 * i], w[3 * i + 1]
    for i in range(N):
        gJ[3 * i] += G[i, 0]
        gJ[3 * i + 1] += G[i, 1]
        if i + 1 < N:
            gJ[3 * i] -= G[i + 1, 0]
            gJ[3 * i + 1] -= G[i + 1, 1]
    return J, gJ, g, Jg, X, S, E, rad


@njit(cache=True)
def atom_distances(P, A, AB, den, Nrm, starts, poly, radius):
    """Signed distances (n, m) from points to convex atoms given as flat edge tables."""
    n, m, E = P.shape[0], starts.shape[0], A.shape[0]
    out = np.empty((n, m))
    for i in range(n):
        px, py = P[i, 0], P[i, 1]
        for j in range(m):
            lo = starts[j]
            hi = starts[j + 1] if j + 1 < m else E
            dmin = np.inf
            hmax = -np.inf
            for e in range(lo, hi):
                ax, ay = px - A[e, 0], py - A[e, 1]
                t = (ax * AB[e, 0] + ay * AB[e, 1]) / den[e]
                t = min(max(t, 0.0), 1.0)
                d = math.hypot(ax - t * AB[e, 0], ay - t * AB[e, 1])
                dmin = min(dmin, d)
                hmax = max(hmax, ax * Nrm[e, 0] + ay * Nrm[e, 1])
            if poly[j] and hmax <= 0.0:
                out[i, j] = hmax - radius[j]
            else:
                out[i, j] = dmin - radius[j]
    return out


def warmup():
    """Load (or compile) every kernel once so that later calls are cheap."""
    P = np.zeros((1, 2))
    z2, z1, zi = np.zeros((0, 2)), np.zeros(0), np.zeros(0, dtype=np.int64)
    c = np.ones((1, 2))
    d, R, U, N = radial(P, c, z2, z1, zi, z2, z1, z2, z2, zi, z2, z2, z1)
    modulate(P, np.full((1, 1), 2.0), U, N, 1e-12)
    atom_distances(P, c, c, np.ones(1), c, np.zeros(1, dtype=np.int64), np.ones(1, dtype=np.bool_), np.ones(1))
    unicycle_tunnel(np.zeros(3), np.zeros(3), 0.2, np.zeros(2), np.zeros((1, 2)), np.zeros((0, 2)), 1.0,
                    np.array([0.0, 1.0, 0.0, 0.0, 0.0]), np.zeros(2), np.eye(2), 1.0, 1.0, 1e-9)

