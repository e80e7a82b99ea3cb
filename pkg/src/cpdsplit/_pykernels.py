"""Pure-Python fallback for the hot kernels.

Mirrors ``_ckernels.pyx`` function for function. Vectors are 3-tuples of
floats and matrices are row-major 9-tuples; plain float arithmetic is much
faster than numpy for objects this small.
"""
from math import isfinite, sin, sqrt

from .errors import BlowUpError, MaxStepsExceeded

NAME = "python"

IDENTITY = (1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0)
SMALL_ANGLE = 1e-4
BLOWUP_LIMIT = 1e12

S2NEW = 0
S2VP = 1


class Model:
    """Field environment for one (problem, eps) pair."""

    def __init__(self, bfunc, efunc, ufunc, eps, q):
        self.bfunc = bfunc
        self.efunc = efunc
        self.ufunc = ufunc
        self.eps = eps
        self.q = q
        self.scale = eps ** q

    def b(self, x):
        s = self.scale
        return self.bfunc(s * x[0], s * x[1], s * x[2])

    def e(self, x):
        return self.efunc(x[0], x[1], x[2])

    def u(self, x):
        return self.ufunc(x[0], x[1], x[2])


# --- small matrix kernels -------------------------------------------------

def decompose(b, t):
    nb = sqrt(b[0] * b[0] + b[1] * b[1] + b[2] * b[2])
    angle = abs(t) * nb
    if angle == 0.0:
        return (0.0, 0.0, 0.0), 0.0
    if t < 0.0:
        return (-(b[0] / nb), -(b[1] / nb), -(b[2] / nb)), angle
    return (b[0] / nb, b[1] / nb, b[2] / nb), angle


def _combine(a, c1, c2):
    # I + c1*K + c2*K^2 with K = hat(a), |a| = 1
    a1, a2, a3 = a
    q12 = a1 * a2
    q13 = a1 * a3
    q23 = a2 * a3
    return (
        1.0 - c2 * (a2 * a2 + a3 * a3), c1 * a3 + c2 * q12, -(c1 * a2) + c2 * q13,
        -(c1 * a3) + c2 * q12, 1.0 - c2 * (a1 * a1 + a3 * a3), c1 * a1 + c2 * q23,
        c1 * a2 + c2 * q13, -(c1 * a1) + c2 * q23, 1.0 - c2 * (a1 * a1 + a2 * a2),
    )


def _phi1_coeffs(theta, s):
    if theta < SMALL_ANGLE:
        t2 = theta * theta
        c1 = theta * (0.5 - t2 * (1.0 / 24.0 - t2 * (1.0 / 720.0 - t2 / 40320.0)))
        c2 = t2 * (1.0 / 6.0 - t2 * (1.0 / 120.0 - t2 * (1.0 / 5040.0 - t2 / 362880.0)))
        return c1, c2
    sh = sin(0.5 * theta)
    return 2.0 * sh * sh / theta, (theta - s) / theta


def rodrigues_exp(a, theta):
    if theta == 0.0:
        return IDENTITY
    sh = sin(0.5 * theta)
    return _combine(a, sin(theta), 2.0 * sh * sh)


def rodrigues_phi1(a, theta):
    if theta == 0.0:
        return IDENTITY
    c1, c2 = _phi1_coeffs(theta, sin(theta))
    return _combine(a, c1, c2)


def expphi(a, theta):
    """Return (exp, phi1) of theta*hat(a), sharing the trig evaluations."""
    if theta == 0.0:
        return IDENTITY, IDENTITY
    s = sin(theta)
    sh = sin(0.5 * theta)
    c1, c2 = _phi1_coeffs(theta, s)
    return _combine(a, s, 2.0 * sh * sh), _combine(a, c1, c2)


def mv(m, x):
    x0, x1, x2 = x
    return (
        m[0] * x0 + m[1] * x1 + m[2] * x2,
        m[3] * x0 + m[4] * x1 + m[5] * x2,
        m[6] * x0 + m[7] * x1 + m[8] * x2,
    )


def mm(a, b):
    return (
        a[0] * b[0] + a[1] * b[3] + a[2] * b[6],
        a[0] * b[1] + a[1] * b[4] + a[2] * b[7],
        a[0] * b[2] + a[1] * b[5] + a[2] * b[8],
        a[3] * b[0] + a[4] * b[3] + a[5] * b[6],
        a[3] * b[1] + a[4] * b[4] + a[5] * b[7],
        a[3] * b[2] + a[4] * b[5] + a[5] * b[8],
        a[6] * b[0] + a[7] * b[3] + a[8] * b[6],
        a[6] * b[1] + a[7] * b[4] + a[8] * b[7],
        a[6] * b[2] + a[7] * b[5] + a[8] * b[8],
    )


# --- flows and steppers ---------------------------------------------------

def half_blocks(model, b0, h):
    return expphi(*decompose(b0, (0.5 * h) / model.eps))


def subflow_s(model, b0, x, v, dt):
    em, pm = expphi(*decompose(b0, dt / model.eps))
    pv = mv(pm, v)
    return (x[0] + dt * pv[0], x[1] + dt * pv[1], x[2] + dt * pv[2]), mv(em, v)


def subflow_t(model, b0, x, v, dt):
    bx = model.b(x)
    d = (bx[0] - b0[0], bx[1] - b0[1], bx[2] - b0[2])
    em, pm = expphi(*decompose(d, dt / model.eps))
    f = mv(pm, model.e(x))
    ev = mv(em, v)
    return x, (ev[0] + dt * f[0], ev[1] + dt * f[1], ev[2] + dt * f[2])


def step_s2new(model, b0, eh, ph, h, x, v):
    pv = mv(ph, v)
    hh = 0.5 * h
    z = (x[0] + hh * pv[0], x[1] + hh * pv[1], x[2] + hh * pv[2])
    bz = model.b(z)
    d = (bz[0] - b0[0], bz[1] - b0[1], bz[2] - b0[2])
    ed, pd = expphi(*decompose(d, h / model.eps))
    f = model.e(z)
    m1v = mv(mm(ed, eh), v)
    pdf = mv(pd, f)
    xa = mv(ph, (v[0] + m1v[0], v[1] + m1v[1], v[2] + m1v[2]))
    xb = mv(ph, pdf)
    va = mv(eh, m1v)
    vb = mv(eh, pdf)
    hh2 = 0.5 * h * h
    xn = (
        x[0] + hh * xa[0] + hh2 * xb[0],
        x[1] + hh * xa[1] + hh2 * xb[1],
        x[2] + hh * xa[2] + hh2 * xb[2],
    )
    vn = (va[0] + h * vb[0], va[1] + h * vb[1], va[2] + h * vb[2])
    return xn, vn


def step_s2new_rescaled(model, b0, fh, z, w):
    eps = model.eps
    eh, ph = expphi(*decompose(b0, 0.5 * fh))
    c = 0.5 * eps * fh
    pw = mv(ph, w)
    zb = (z[0] + c * pw[0], z[1] + c * pw[1], z[2] + c * pw[2])
    bz = model.b(zb)
    d = (bz[0] - b0[0], bz[1] - b0[1], bz[2] - b0[2])
    ed, pd = expphi(*decompose(d, fh))
    f = model.e(zb)
    m1w = mv(mm(ed, eh), w)
    pdf = mv(pd, f)
    za = mv(ph, (w[0] + m1w[0], w[1] + m1w[1], w[2] + m1w[2]))
    zc = mv(ph, pdf)
    wa = mv(eh, m1w)
    wb = mv(eh, pdf)
    c2 = 0.5 * eps * eps * fh * fh
    k = eps * fh
    zn = (
        z[0] + c * za[0] + c2 * zc[0],
        z[1] + c * za[1] + c2 * zc[1],
        z[2] + c * za[2] + c2 * zc[2],
    )
    wn = (wa[0] + k * wb[0], wa[1] + k * wb[1], wa[2] + k * wb[2])
    return zn, wn


def step_s2vp(model, h, x, v):
    hh = 0.5 * h
    xh = (x[0] + hh * v[0], x[1] + hh * v[1], x[2] + hh * v[2])
    em, pm = expphi(*decompose(model.b(xh), h / model.eps))
    f = mv(pm, model.e(xh))
    ev = mv(em, v)
    vn = (ev[0] + h * f[0], ev[1] + h * f[1], ev[2] + h * f[2])
    return (xh[0] + hh * vn[0], xh[1] + hh * vn[1], xh[2] + hh * vn[2]), vn


def _check(x, v, k, t):
    size = (sqrt(x[0] * x[0] + x[1] * x[1] + x[2] * x[2])
            + sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2]))
    if not (size <= BLOWUP_LIMIT):
        raise BlowUpError(k, t, size)


def run(model, method, b0, eh, ph, h, x, v, t0, n_steps, record_every):
    """Advance n_steps, returning recorded rows (t, x1, x2, x3, v1, v2, v3)."""
    rows = [(t0, x[0], x[1], x[2], v[0], v[1], v[2])]
    for k in range(1, n_steps + 1):
        if method == S2NEW:
            x, v = step_s2new(model, b0, eh, ph, h, x, v)
        else:
            x, v = step_s2vp(model, h, x, v)
        t = t0 + k * h
        _check(x, v, k, t)
        if k % record_every == 0 or k == n_steps:
            rows.append((t, x[0], x[1], x[2], v[0], v[1], v[2]))
    return rows


# --- reference solvers ----------------------------------------------------

def rhs(model, y):
    x = (y[0], y[1], y[2])
    b = model.b(x)
    f = model.e(x)
    eps = model.eps
    v1, v2, v3 = y[3], y[4], y[5]
    return (
        v1, v2, v3,
        (v2 * b[2] - v3 * b[1]) / eps + f[0],
        (v3 * b[0] - v1 * b[2]) / eps + f[1],
        (v1 * b[1] - v2 * b[0]) / eps + f[2],
    )


def rk4(model, y, t_end, n):
    dt = t_end / n
    half = 0.5 * dt
    sixth = dt / 6.0
    for _ in range(n):
        k1 = rhs(model, y)
        k2 = rhs(model, [y[i] + half * k1[i] for i in range(6)])
        k3 = rhs(model, [y[i] + half * k2[i] for i in range(6)])
        k4 = rhs(model, [y[i] + dt * k3[i] for i in range(6)])
        y = tuple(y[i] + sixth * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]) for i in range(6))
    return y


A21 = 1.0 / 5.0
A31, A32 = 3.0 / 40.0, 9.0 / 40.0
A41, A42, A43 = 44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0
A51, A52, A53, A54 = 19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0
A61, A62, A63, A64, A65 = (9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0,
                           49.0 / 176.0, -5103.0 / 18656.0)
B1, B3, B4, B5, B6 = 35.0 / 384.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0
# 5th-order weights minus embedded 4th-order weights
E1 = 71.0 / 57600.0
E3 = -71.0 / 16695.0
E4 = 71.0 / 1920.0
E5 = -17253.0 / 339200.0
E6 = 22.0 / 525.0
E7 = -1.0 / 40.0

SAFETY = 0.9
FAC_MIN = 0.2
FAC_MAX = 10.0
BETA = 0.04
EXPO = 0.2 - BETA * 0.75


def dopri5(model, y, t_end, rtol, atol, max_steps, h0):
    """Dormand-Prince 5(4) with PI step control; lands exactly on t_end.

    Returns (y, n_accepted, n_rejected).
    """
    t = 0.0
    h = min(h0, t_end)
    k1 = rhs(model, y)
    err_old = 1e-4
    accepted = rejected = 0
    last = False
    after_reject = False
    while t < t_end:
        if accepted + rejected >= max_steps:
            raise MaxStepsExceeded(max_steps, t)
        if t + h >= t_end:
            h = t_end - t
            last = True
        y2 = [y[i] + h * A21 * k1[i] for i in range(6)]
        k2 = rhs(model, y2)
        y3 = [y[i] + h * (A31 * k1[i] + A32 * k2[i]) for i in range(6)]
        k3 = rhs(model, y3)
        y4 = [y[i] + h * (A41 * k1[i] + A42 * k2[i] + A43 * k3[i]) for i in range(6)]
        k4 = rhs(model, y4)
        y5 = [y[i] + h * (A51 * k1[i] + A52 * k2[i] + A53 * k3[i] + A54 * k4[i])
              for i in range(6)]
        k5 = rhs(model, y5)
        y6 = [y[i] + h * (A61 * k1[i] + A62 * k2[i] + A63 * k3[i] + A64 * k4[i] + A65 * k5[i])
              for i in range(6)]
        k6 = rhs(model, y6)
        yn = tuple(y[i] + h * (B1 * k1[i] + B3 * k3[i] + B4 * k4[i] + B5 * k5[i] + B6 * k6[i])
                   for i in range(6))
        k7 = rhs(model, yn)
        acc = 0.0
        for i in range(6):
            e = h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i])
            sk = atol + rtol * max(abs(y[i]), abs(yn[i]))
            acc += (e / sk) ** 2
        err = sqrt(acc / 6.0)
        if not isfinite(err):
            raise BlowUpError(accepted, t, err)
        fac11 = err ** EXPO
        if err <= 1.0:
            fac = fac11 / err_old ** BETA
            fac = min(1.0 / FAC_MIN, max(1.0 / FAC_MAX, fac / SAFETY))
            err_old = max(err, 1e-4)
            accepted += 1
            t = t_end if last else t + h
            y = yn
            k1 = k7
            h_new = h / fac
            if after_reject and h_new > h:
                h_new = h
            after_reject = False
            h = h_new
        else:
            rejected += 1
            last = False
            after_reject = True
            h = h / min(1.0 / FAC_MIN, fac11 / SAFETY)
    return y, accepted, rejected


def hamiltonian(model, x, v):
    return 0.5 * (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]) + model.u(x)


def make_model(problem, eps):
    return Model(problem.magnetic.func, problem.electric.field, problem.electric.potential,
                 eps, problem.q)
