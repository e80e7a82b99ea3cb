# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled core: small-matrix kernels, steppers and reference solvers.

Same surface as ``_pykernels``; fields are evaluated natively from their
catalog kind codes, and the long loops run without the GIL.
"""
import numpy as np
cimport numpy as cnp
from libc.math cimport sin, cos, sqrt, fabs, pow, isfinite

from .errors import BlowUpError, MaxStepsExceeded, SingularFieldError

cnp.import_array()

NAME = "compiled"

DEF SMALL_ANGLE = 1e-4
DEF BLOWUP_LIMIT = 1e12
DEF SINGULAR_RADIUS = 1e-12

S2NEW = 0
S2VP = 1

# field kind codes, kept in sync with fields.py
DEF MAG_CONST = 1
DEF MAG_TRIG = 2
DEF POT_ZERO = 1
DEF POT_COULOMB = 2
DEF POT_POLY = 3
DEF POT_SINPROD = 4

# status codes
DEF OK = 0
DEF SINGULAR = 1
DEF BLOWUP = 2
DEF MAXSTEPS = 3

SUPPORTED_MAG = (MAG_CONST, MAG_TRIG)
SUPPORTED_POT = (POT_ZERO, POT_COULOMB, POT_POLY, POT_SINPROD)


cdef struct Fields:
    int mag_kind
    double b[3]
    int pot_kind
    double eps
    double scale


cdef inline void bfield(const Fields* f, const double* x, double* out) noexcept nogil:
    cdef double y1, y2, y3
    if f.mag_kind == MAG_CONST:
        out[0] = f.b[0]
        out[1] = f.b[1]
        out[2] = f.b[2]
    else:
        y1 = f.scale * x[0]
        y2 = f.scale * x[1]
        y3 = f.scale * x[2]
        out[0] = 1.0 - sin(y2) / 2.0
        out[1] = 1.0 + cos(y3) / 2.0
        out[2] = 1.0 + cos(y1) / 2.0


cdef inline int efield(const Fields* f, const double* x, double* out) noexcept nogil:
    cdef double r, r3, s1, c1, s2, c2, s3, c3
    cdef double x1 = x[0], x2 = x[1], x3 = x[2]
    if f.pot_kind == POT_COULOMB:
        r = sqrt(x1 * x1 + x2 * x2 + x3 * x3)
        if r < SINGULAR_RADIUS:
            return SINGULAR
        r3 = r * r * r
        out[0] = x1 / r3
        out[1] = x2 / r3
        out[2] = x3 / r3
    elif f.pot_kind == POT_POLY:
        out[0] = -(3.0 * x1 * x1 + 0.8 * x1 * x1 * x1)
        out[1] = 3.0 * x2 * x2 - 4.0 * x2 * x2 * x2
        out[2] = -(4.0 * x3 * x3 * x3)
    elif f.pot_kind == POT_SINPROD:
        s1 = sin(x1 / 2.0)
        c1 = cos(x1 / 2.0)
        s2 = sin(x2)
        c2 = cos(x2)
        s3 = sin(x3)
        c3 = cos(x3)
        out[0] = 0.5 * c1 * s2 * s3
        out[1] = s1 * c2 * s3
        out[2] = s1 * s2 * c3
    else:
        out[0] = 0.0
        out[1] = 0.0
        out[2] = 0.0
    return OK


cdef inline int upot(const Fields* f, const double* x, double* out) noexcept nogil:
    cdef double r
    cdef double x1 = x[0], x2 = x[1], x3 = x[2]
    if f.pot_kind == POT_COULOMB:
        r = sqrt(x1 * x1 + x2 * x2 + x3 * x3)
        if r < SINGULAR_RADIUS:
            return SINGULAR
        out[0] = 1.0 / r
    elif f.pot_kind == POT_POLY:
        out[0] = pow(x1, 3.0) - pow(x2, 3.0) + pow(x1, 4.0) / 5.0 + pow(x2, 4.0) + pow(x3, 4.0)
    elif f.pot_kind == POT_SINPROD:
        out[0] = -sin(x1 / 2.0) * sin(x2) * sin(x3)
    else:
        out[0] = 0.0
    return OK


cdef class Model:
    """Natively evaluated field environment for one (problem, eps) pair."""
    cdef Fields f
    cdef readonly double eps
    cdef readonly double q

    def __init__(self, int mag_kind, params, int pot_kind, double eps, double q):
        if mag_kind not in SUPPORTED_MAG or pot_kind not in SUPPORTED_POT:
            raise ValueError("field kinds not supported by the compiled core")
        self.f.mag_kind = mag_kind
        self.f.pot_kind = pot_kind
        self.f.b[0] = params[0] if mag_kind == MAG_CONST else 0.0
        self.f.b[1] = params[1] if mag_kind == MAG_CONST else 0.0
        self.f.b[2] = params[2] if mag_kind == MAG_CONST else 0.0
        self.f.eps = eps
        self.f.scale = pow(eps, q)
        self.eps = eps
        self.q = q

    def b(self, x):
        cdef double xx[3]
        cdef double out[3]
        _load(x, xx)
        bfield(&self.f, xx, out)
        return (out[0], out[1], out[2])

    def e(self, x):
        cdef double xx[3]
        cdef double out[3]
        _load(x, xx)
        _raise(efield(&self.f, xx, out))
        return (out[0], out[1], out[2])

    def u(self, x):
        cdef double xx[3]
        cdef double out
        _load(x, xx)
        _raise(upot(&self.f, xx, &out))
        return out


def make_model(problem, double eps):
    """Compiled model for ``problem``, or None when its fields are custom."""
    mk = problem.magnetic.kind
    pk = problem.electric.kind
    if mk not in SUPPORTED_MAG or pk not in SUPPORTED_POT:
        return None
    return Model(mk, problem.magnetic.params, pk, eps, problem.q)


cdef inline void _load(v, double* out):
    out[0] = v[0]
    out[1] = v[1]
    out[2] = v[2]


cdef inline tuple _vec(const double* v):
    return (v[0], v[1], v[2])


cdef inline tuple _mat(const double* m):
    return (m[0], m[1], m[2], m[3], m[4], m[5], m[6], m[7], m[8])


cdef inline void _loadm(m, double* out):
    cdef int i
    for i in range(9):
        out[i] = m[i]


cdef int _raise(int status) except -1:
    if status == SINGULAR:
        raise SingularFieldError("Coulomb potential evaluated within 1e-12 of the origin")
    return 0


# --- small matrix kernels -------------------------------------------------

cdef inline void c_decompose(const double* b, double t, double* a, double* theta) noexcept nogil:
    cdef double nb = sqrt(b[0] * b[0] + b[1] * b[1] + b[2] * b[2])
    cdef double angle = fabs(t) * nb
    theta[0] = angle
    if angle == 0.0:
        a[0] = 0.0
        a[1] = 0.0
        a[2] = 0.0
    elif t < 0.0:
        a[0] = -(b[0] / nb)
        a[1] = -(b[1] / nb)
        a[2] = -(b[2] / nb)
    else:
        a[0] = b[0] / nb
        a[1] = b[1] / nb
        a[2] = b[2] / nb


cdef inline void c_identity(double* m) noexcept nogil:
    m[0] = 1.0; m[1] = 0.0; m[2] = 0.0
    m[3] = 0.0; m[4] = 1.0; m[5] = 0.0
    m[6] = 0.0; m[7] = 0.0; m[8] = 1.0


cdef inline void c_combine(const double* a, double c1, double c2, double* m) noexcept nogil:
    cdef double a1 = a[0], a2 = a[1], a3 = a[2]
    cdef double q12 = a1 * a2, q13 = a1 * a3, q23 = a2 * a3
    m[0] = 1.0 - c2 * (a2 * a2 + a3 * a3)
    m[1] = c1 * a3 + c2 * q12
    m[2] = -(c1 * a2) + c2 * q13
    m[3] = -(c1 * a3) + c2 * q12
    m[4] = 1.0 - c2 * (a1 * a1 + a3 * a3)
    m[5] = c1 * a1 + c2 * q23
    m[6] = c1 * a2 + c2 * q13
    m[7] = -(c1 * a1) + c2 * q23
    m[8] = 1.0 - c2 * (a1 * a1 + a2 * a2)


cdef inline void c_phi1_coeffs(double theta, double s, double* c1, double* c2) noexcept nogil:
    cdef double t2, sh
    if theta < SMALL_ANGLE:
        t2 = theta * theta
        c1[0] = theta * (0.5 - t2 * (1.0 / 24.0 - t2 * (1.0 / 720.0 - t2 / 40320.0)))
        c2[0] = t2 * (1.0 / 6.0 - t2 * (1.0 / 120.0 - t2 * (1.0 / 5040.0 - t2 / 362880.0)))
    else:
        sh = sin(0.5 * theta)
        c1[0] = 2.0 * sh * sh / theta
        c2[0] = (theta - s) / theta


cdef inline void c_exp(const double* a, double theta, double* em) noexcept nogil:
    cdef double sh
    if theta == 0.0:
        c_identity(em)
        return
    sh = sin(0.5 * theta)
    c_combine(a, sin(theta), 2.0 * sh * sh, em)


cdef inline void c_phi1(const double* a, double theta, double* pm) noexcept nogil:
    cdef double c1, c2
    if theta == 0.0:
        c_identity(pm)
        return
    c_phi1_coeffs(theta, sin(theta), &c1, &c2)
    c_combine(a, c1, c2, pm)


cdef inline void c_expphi(const double* a, double theta, double* em, double* pm) noexcept nogil:
    cdef double s, sh, c1, c2
    if theta == 0.0:
        c_identity(em)
        c_identity(pm)
        return
    s = sin(theta)
    sh = sin(0.5 * theta)
    c_phi1_coeffs(theta, s, &c1, &c2)
    c_combine(a, s, 2.0 * sh * sh, em)
    c_combine(a, c1, c2, pm)


cdef inline void c_mv(const double* m, const double* x, double* out) noexcept nogil:
    cdef double x0 = x[0], x1 = x[1], x2 = x[2]
    out[0] = m[0] * x0 + m[1] * x1 + m[2] * x2
    out[1] = m[3] * x0 + m[4] * x1 + m[5] * x2
    out[2] = m[6] * x0 + m[7] * x1 + m[8] * x2


cdef inline void c_mm(const double* a, const double* b, double* out) noexcept nogil:
    cdef int i
    for i in range(3):
        out[3 * i] = a[3 * i] * b[0] + a[3 * i + 1] * b[3] + a[3 * i + 2] * b[6]
        out[3 * i + 1] = a[3 * i] * b[1] + a[3 * i + 1] * b[4] + a[3 * i + 2] * b[7]
        out[3 * i + 2] = a[3 * i] * b[2] + a[3 * i + 1] * b[5] + a[3 * i + 2] * b[8]


def decompose(b, double t):
    cdef double bb[3]
    cdef double a[3]
    cdef double theta
    _load(b, bb)
    c_decompose(bb, t, a, &theta)
    return _vec(a), theta


def rodrigues_exp(a, double theta):
    cdef double aa[3]
    cdef double m[9]
    _load(a, aa)
    c_exp(aa, theta, m)
    return _mat(m)


def rodrigues_phi1(a, double theta):
    cdef double aa[3]
    cdef double m[9]
    _load(a, aa)
    c_phi1(aa, theta, m)
    return _mat(m)


def expphi(a, double theta):
    cdef double aa[3]
    cdef double em[9]
    cdef double pm[9]
    _load(a, aa)
    c_expphi(aa, theta, em, pm)
    return _mat(em), _mat(pm)


def mv(m, x):
    cdef double mm_[9]
    cdef double xx[3]
    cdef double out[3]
    _loadm(m, mm_)
    _load(x, xx)
    c_mv(mm_, xx, out)
    return _vec(out)


def mm(a, b):
    cdef double aa[9]
    cdef double bb[9]
    cdef double out[9]
    _loadm(a, aa)
    _loadm(b, bb)
    c_mm(aa, bb, out)
    return _mat(out)


# --- flows and steppers ---------------------------------------------------

cdef inline void c_half_blocks(const Fields* f, const double* b0, double h,
                               double* eh, double* ph) noexcept nogil:
    cdef double a[3]
    cdef double theta
    c_decompose(b0, (0.5 * h) / f.eps, a, &theta)
    c_expphi(a, theta, eh, ph)


cdef int c_subflow_s(const Fields* f, const double* b0, const double* x, const double* v,
                     double dt, double* xn, double* vn) noexcept nogil:
    cdef double a[3]
    cdef double pv[3]
    cdef double em[9]
    cdef double pm[9]
    cdef double theta
    c_decompose(b0, dt / f.eps, a, &theta)
    c_expphi(a, theta, em, pm)
    c_mv(pm, v, pv)
    c_mv(em, v, vn)
    xn[0] = x[0] + dt * pv[0]
    xn[1] = x[1] + dt * pv[1]
    xn[2] = x[2] + dt * pv[2]
    return OK


cdef int c_subflow_t(const Fields* f, const double* b0, const double* x, const double* v,
                     double dt, double* xn, double* vn) noexcept nogil:
    cdef double bx[3]
    cdef double d[3]
    cdef double a[3]
    cdef double e[3]
    cdef double pe[3]
    cdef double ev[3]
    cdef double em[9]
    cdef double pm[9]
    cdef double theta
    cdef int st
    bfield(f, x, bx)
    d[0] = bx[0] - b0[0]
    d[1] = bx[1] - b0[1]
    d[2] = bx[2] - b0[2]
    c_decompose(d, dt / f.eps, a, &theta)
    c_expphi(a, theta, em, pm)
    st = efield(f, x, e)
    if st != OK:
        return st
    c_mv(pm, e, pe)
    c_mv(em, v, ev)
    xn[0] = x[0]
    xn[1] = x[1]
    xn[2] = x[2]
    vn[0] = ev[0] + dt * pe[0]
    vn[1] = ev[1] + dt * pe[1]
    vn[2] = ev[2] + dt * pe[2]
    return OK


cdef int c_step_s2new(const Fields* f, const double* b0, const double* eh, const double* ph,
                      double h, const double* x, const double* v,
                      double* xn, double* vn) noexcept nogil:
    cdef double pv[3]
    cdef double z[3]
    cdef double bz[3]
    cdef double d[3]
    cdef double a[3]
    cdef double fz[3]
    cdef double m1v[3]
    cdef double pdf[3]
    cdef double s[3]
    cdef double xa[3]
    cdef double xb[3]
    cdef double va[3]
    cdef double vb[3]
    cdef double ed[9]
    cdef double pd[9]
    cdef double m1[9]
    cdef double theta, hh, hh2
    cdef int st, i
    c_mv(ph, v, pv)
    hh = 0.5 * h
    for i in range(3):
        z[i] = x[i] + hh * pv[i]
    bfield(f, z, bz)
    for i in range(3):
        d[i] = bz[i] - b0[i]
    c_decompose(d, h / f.eps, a, &theta)
    c_expphi(a, theta, ed, pd)
    st = efield(f, z, fz)
    if st != OK:
        return st
    c_mm(ed, eh, m1)
    c_mv(m1, v, m1v)
    c_mv(pd, fz, pdf)
    for i in range(3):
        s[i] = v[i] + m1v[i]
    c_mv(ph, s, xa)
    c_mv(ph, pdf, xb)
    c_mv(eh, m1v, va)
    c_mv(eh, pdf, vb)
    hh2 = 0.5 * h * h
    for i in range(3):
        xn[i] = x[i] + hh * xa[i] + hh2 * xb[i]
        vn[i] = va[i] + h * vb[i]
    return OK


cdef int c_step_rescaled(const Fields* f, const double* b0, double fh,
                         const double* z, const double* w,
                         double* zn, double* wn) noexcept nogil:
    cdef double eh[9]
    cdef double ph[9]
    cdef double ed[9]
    cdef double pd[9]
    cdef double m1[9]
    cdef double a[3]
    cdef double pw[3]
    cdef double zb[3]
    cdef double bz[3]
    cdef double d[3]
    cdef double fz[3]
    cdef double m1w[3]
    cdef double pdf[3]
    cdef double s[3]
    cdef double za[3]
    cdef double zc[3]
    cdef double wa[3]
    cdef double wb[3]
    cdef double theta, c, c2, k
    cdef double eps = f.eps
    cdef int st, i
    c_decompose(b0, 0.5 * fh, a, &theta)
    c_expphi(a, theta, eh, ph)
    c = 0.5 * eps * fh
    c_mv(ph, w, pw)
    for i in range(3):
        zb[i] = z[i] + c * pw[i]
    bfield(f, zb, bz)
    for i in range(3):
        d[i] = bz[i] - b0[i]
    c_decompose(d, fh, a, &theta)
    c_expphi(a, theta, ed, pd)
    st = efield(f, zb, fz)
    if st != OK:
        return st
    c_mm(ed, eh, m1)
    c_mv(m1, w, m1w)
    c_mv(pd, fz, pdf)
    for i in range(3):
        s[i] = w[i] + m1w[i]
    c_mv(ph, s, za)
    c_mv(ph, pdf, zc)
    c_mv(eh, m1w, wa)
    c_mv(eh, pdf, wb)
    c2 = 0.5 * eps * eps * fh * fh
    k = eps * fh
    for i in range(3):
        zn[i] = z[i] + c * za[i] + c2 * zc[i]
        wn[i] = wa[i] + k * wb[i]
    return OK


cdef int c_step_s2vp(const Fields* f, double h, const double* x, const double* v,
                     double* xn, double* vn) noexcept nogil:
    cdef double xh[3]
    cdef double bx[3]
    cdef double a[3]
    cdef double e[3]
    cdef double pe[3]
    cdef double ev[3]
    cdef double em[9]
    cdef double pm[9]
    cdef double theta, hh
    cdef int st, i
    hh = 0.5 * h
    for i in range(3):
        xh[i] = x[i] + hh * v[i]
    bfield(f, xh, bx)
    c_decompose(bx, h / f.eps, a, &theta)
    c_expphi(a, theta, em, pm)
    st = efield(f, xh, e)
    if st != OK:
        return st
    c_mv(pm, e, pe)
    c_mv(em, v, ev)
    for i in range(3):
        vn[i] = ev[i] + h * pe[i]
    for i in range(3):
        xn[i] = xh[i] + hh * vn[i]
    return OK


def half_blocks(Model model, b0, double h):
    cdef double bb[3]
    cdef double eh[9]
    cdef double ph[9]
    _load(b0, bb)
    c_half_blocks(&model.f, bb, h, eh, ph)
    return _mat(eh), _mat(ph)


def subflow_s(Model model, b0, x, v, double dt):
    cdef double bb[3]
    cdef double xx[3]
    cdef double vv[3]
    cdef double xn[3]
    cdef double vn[3]
    _load(b0, bb)
    _load(x, xx)
    _load(v, vv)
    c_subflow_s(&model.f, bb, xx, vv, dt, xn, vn)
    return _vec(xn), _vec(vn)


def subflow_t(Model model, b0, x, v, double dt):
    cdef double bb[3]
    cdef double xx[3]
    cdef double vv[3]
    cdef double xn[3]
    cdef double vn[3]
    _load(b0, bb)
    _load(x, xx)
    _load(v, vv)
    _raise(c_subflow_t(&model.f, bb, xx, vv, dt, xn, vn))
    return _vec(xn), _vec(vn)


def step_s2new(Model model, b0, eh, ph, double h, x, v):
    cdef double bb[3]
    cdef double ehm[9]
    cdef double phm[9]
    cdef double xx[3]
    cdef double vv[3]
    cdef double xn[3]
    cdef double vn[3]
    _load(b0, bb)
    _loadm(eh, ehm)
    _loadm(ph, phm)
    _load(x, xx)
    _load(v, vv)
    _raise(c_step_s2new(&model.f, bb, ehm, phm, h, xx, vv, xn, vn))
    return _vec(xn), _vec(vn)


def step_s2new_rescaled(Model model, b0, double fh, z, w):
    cdef double bb[3]
    cdef double zz[3]
    cdef double ww[3]
    cdef double zn[3]
    cdef double wn[3]
    _load(b0, bb)
    _load(z, zz)
    _load(w, ww)
    _raise(c_step_rescaled(&model.f, bb, fh, zz, ww, zn, wn))
    return _vec(zn), _vec(wn)


def step_s2vp(Model model, double h, x, v):
    cdef double xx[3]
    cdef double vv[3]
    cdef double xn[3]
    cdef double vn[3]
    _load(x, xx)
    _load(v, vv)
    _raise(c_step_s2vp(&model.f, h, xx, vv, xn, vn))
    return _vec(xn), _vec(vn)


def run(Model model, int method, b0, eh, ph, double h, x, v, double t0,
        Py_ssize_t n_steps, Py_ssize_t record_every):
    """Advance n_steps, returning recorded rows (t, x1, x2, x3, v1, v2, v3)."""
    cdef Py_ssize_t n_rec = 1 + n_steps // record_every
    if n_steps % record_every:
        n_rec += 1
    cdef cnp.ndarray[cnp.float64_t, ndim=2] out_arr = np.empty((n_rec, 7))
    cdef double[:, ::1] out = out_arr
    cdef double bb[3]
    cdef double ehm[9]
    cdef double phm[9]
    cdef double xx[3]
    cdef double vv[3]
    cdef double xn[3]
    cdef double vn[3]
    cdef Py_ssize_t k, r = 0, i
    cdef int st = OK
    cdef double t = t0, size = 0.0
    _load(b0, bb)
    _loadm(eh, ehm)
    _loadm(ph, phm)
    _load(x, xx)
    _load(v, vv)
    out[0, 0] = t0
    for i in range(3):
        out[0, 1 + i] = xx[i]
        out[0, 4 + i] = vv[i]
    with nogil:
        for k in range(1, n_steps + 1):
            if method == 0:
                st = c_step_s2new(&model.f, bb, ehm, phm, h, xx, vv, xn, vn)
            else:
                st = c_step_s2vp(&model.f, h, xx, vv, xn, vn)
            if st != OK:
                break
            for i in range(3):
                xx[i] = xn[i]
                vv[i] = vn[i]
            t = t0 + k * h
            size = (sqrt(xx[0] * xx[0] + xx[1] * xx[1] + xx[2] * xx[2])
                    + sqrt(vv[0] * vv[0] + vv[1] * vv[1] + vv[2] * vv[2]))
            if not (size <= BLOWUP_LIMIT):
                st = BLOWUP
                break
            if k % record_every == 0 or k == n_steps:
                r += 1
                out[r, 0] = t
                for i in range(3):
                    out[r, 1 + i] = xx[i]
                    out[r, 4 + i] = vv[i]
    if st == BLOWUP:
        raise BlowUpError(k, t, size)
    _raise(st)
    return out_arr


# --- reference solvers ----------------------------------------------------

cdef inline int c_rhs(const Fields* f, const double* y, double* dy) noexcept nogil:
    cdef double b[3]
    cdef double e[3]
    cdef double eps = f.eps
    cdef int st
    bfield(f, y, b)
    st = efield(f, y, e)
    if st != OK:
        return st
    dy[0] = y[3]
    dy[1] = y[4]
    dy[2] = y[5]
    dy[3] = (y[4] * b[2] - y[5] * b[1]) / eps + e[0]
    dy[4] = (y[5] * b[0] - y[3] * b[2]) / eps + e[1]
    dy[5] = (y[3] * b[1] - y[4] * b[0]) / eps + e[2]
    return OK


def rhs(Model model, y):
    cdef double yy[6]
    cdef double dy[6]
    cdef int i
    for i in range(6):
        yy[i] = y[i]
    _raise(c_rhs(&model.f, yy, dy))
    return tuple(dy[i] for i in range(6))


def rk4(Model model, y, double t_end, Py_ssize_t n):
    cdef double yy[6]
    cdef double tmp[6]
    cdef double k1[6]
    cdef double k2[6]
    cdef double k3[6]
    cdef double k4[6]
    cdef double dt = t_end / n
    cdef double half = 0.5 * dt
    cdef double sixth = dt / 6.0
    cdef Py_ssize_t step
    cdef int i, st = OK
    for i in range(6):
        yy[i] = y[i]
    with nogil:
        for step in range(n):
            st = c_rhs(&model.f, yy, k1)
            if st != OK:
                break
            for i in range(6):
                tmp[i] = yy[i] + half * k1[i]
            st = c_rhs(&model.f, tmp, k2)
            if st != OK:
                break
            for i in range(6):
                tmp[i] = yy[i] + half * k2[i]
            st = c_rhs(&model.f, tmp, k3)
            if st != OK:
                break
            for i in range(6):
                tmp[i] = yy[i] + dt * k3[i]
            st = c_rhs(&model.f, tmp, k4)
            if st != OK:
                break
            for i in range(6):
                yy[i] = yy[i] + sixth * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])
    _raise(st)
    return tuple(yy[i] for i in range(6))


DEF A21 = 1.0 / 5.0
DEF A31 = 3.0 / 40.0
DEF A32 = 9.0 / 40.0
DEF A41 = 44.0 / 45.0
DEF A42 = -56.0 / 15.0
DEF A43 = 32.0 / 9.0
DEF A51 = 19372.0 / 6561.0
DEF A52 = -25360.0 / 2187.0
DEF A53 = 64448.0 / 6561.0
DEF A54 = -212.0 / 729.0
DEF A61 = 9017.0 / 3168.0
DEF A62 = -355.0 / 33.0
DEF A63 = 46732.0 / 5247.0
DEF A64 = 49.0 / 176.0
DEF A65 = -5103.0 / 18656.0
DEF B1 = 35.0 / 384.0
DEF B3 = 500.0 / 1113.0
DEF B4 = 125.0 / 192.0
DEF B5 = -2187.0 / 6784.0
DEF B6 = 11.0 / 84.0
DEF E1 = 71.0 / 57600.0
DEF E3 = -71.0 / 16695.0
DEF E4 = 71.0 / 1920.0
DEF E5 = -17253.0 / 339200.0
DEF E6 = 22.0 / 525.0
DEF E7 = -1.0 / 40.0
DEF SAFETY = 0.9
DEF FAC_MIN = 0.2
DEF FAC_MAX = 10.0
DEF BETA = 0.04
DEF EXPO = 0.2 - 0.04 * 0.75


def dopri5(Model model, y, double t_end, double rtol, double atol,
           Py_ssize_t max_steps, double h0):
    """Dormand-Prince 5(4) with PI step control; lands exactly on t_end.

    Returns (y, n_accepted, n_rejected).
    """
    cdef double yy[6]
    cdef double yn[6]
    cdef double tmp[6]
    cdef double k1[6]
    cdef double k2[6]
    cdef double k3[6]
    cdef double k4[6]
    cdef double k5[6]
    cdef double k6[6]
    cdef double k7[6]
    cdef double t = 0.0, h, err, acc, e, sk, fac, fac11, h_new
    cdef double err_old = 1e-4
    cdef Py_ssize_t accepted = 0, rejected = 0
    cdef bint last = False, after_reject = False
    cdef int i, st = OK
    for i in range(6):
        yy[i] = y[i]
    h = h0 if h0 < t_end else t_end
    with nogil:
        st = c_rhs(&model.f, yy, k1)
        while st == OK and t < t_end:
            if accepted + rejected >= max_steps:
                st = MAXSTEPS
                break
            if t + h >= t_end:
                h = t_end - t
                last = True
            for i in range(6):
                tmp[i] = yy[i] + h * A21 * k1[i]
            st = c_rhs(&model.f, tmp, k2)
            if st != OK:
                break
            for i in range(6):
                tmp[i] = yy[i] + h * (A31 * k1[i] + A32 * k2[i])
            st = c_rhs(&model.f, tmp, k3)
            if st != OK:
                break
            for i in range(6):
                tmp[i] = yy[i] + h * (A41 * k1[i] + A42 * k2[i] + A43 * k3[i])
            st = c_rhs(&model.f, tmp, k4)
            if st != OK:
                break
            for i in range(6):
                tmp[i] = yy[i] + h * (A51 * k1[i] + A52 * k2[i] + A53 * k3[i] + A54 * k4[i])
            st = c_rhs(&model.f, tmp, k5)
            if st != OK:
                break
            for i in range(6):
                tmp[i] = yy[i] + h * (A61 * k1[i] + A62 * k2[i] + A63 * k3[i]
                                      + A64 * k4[i] + A65 * k5[i])
            st = c_rhs(&model.f, tmp, k6)
            if st != OK:
                break
            for i in range(6):
                yn[i] = yy[i] + h * (B1 * k1[i] + B3 * k3[i] + B4 * k4[i]
                                     + B5 * k5[i] + B6 * k6[i])
            st = c_rhs(&model.f, yn, k7)
            if st != OK:
                break
            acc = 0.0
            for i in range(6):
                e = h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i]
                         + E6 * k6[i] + E7 * k7[i])
                sk = atol + rtol * (fabs(yy[i]) if fabs(yy[i]) > fabs(yn[i]) else fabs(yn[i]))
                acc = acc + (e / sk) * (e / sk)
            err = sqrt(acc / 6.0)
            if not isfinite(err):
                st = BLOWUP
                break
            fac11 = pow(err, EXPO)
            if err <= 1.0:
                fac = fac11 / pow(err_old, BETA)
                fac = fac / SAFETY
                if fac < 1.0 / FAC_MAX:
                    fac = 1.0 / FAC_MAX
                if fac > 1.0 / FAC_MIN:
                    fac = 1.0 / FAC_MIN
                err_old = err if err > 1e-4 else 1e-4
                accepted += 1
                t = t_end if last else t + h
                for i in range(6):
                    yy[i] = yn[i]
                    k1[i] = k7[i]
                h_new = h / fac
                if after_reject and h_new > h:
                    h_new = h
                after_reject = False
                h = h_new
            else:
                rejected += 1
                last = False
                after_reject = True
                fac = fac11 / SAFETY
                if fac > 1.0 / FAC_MIN:
                    fac = 1.0 / FAC_MIN
                h = h / fac
    if st == MAXSTEPS:
        raise MaxStepsExceeded(max_steps, t)
    if st == BLOWUP:
        raise BlowUpError(accepted, t, float("nan"))
    _raise(st)
    return tuple(yy[i] for i in range(6)), accepted, rejected


def hamiltonian(Model model, x, v):
    cdef double xx[3]
    cdef double u
    _load(x, xx)
    _raise(upot(&model.f, xx, &u))
    return 0.5 * (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]) + u
