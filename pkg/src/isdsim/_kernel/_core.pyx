# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled Dormand-Prince propagators for the drive-term Hamiltonian model.

Semantics match ``_python.py`` (same tableau, error norm and PI controller);
the right-hand sides exploit the sparse term structure directly.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport cos, exp, pow, sin, sqrt

from .common import MaxStepsExceeded, StepSizeUnderflow

cnp.import_array()

ctypedef double complex dcomplex

cdef double SAFETY = 0.9
cdef double FAC_MIN = 0.2
cdef double FAC_MAX = 5.0
cdef double PI_ALPHA = 0.17
cdef double PI_BETA = 0.04

cdef dcomplex CI = 1j

# Dormand-Prince 5(4) tableau
cdef double[7] CC = [0.0, 1.0 / 5, 3.0 / 10, 4.0 / 5, 8.0 / 9, 1.0, 1.0]
cdef double[7] BB = [35.0 / 384, 0.0, 500.0 / 1113, 125.0 / 192,
                     -2187.0 / 6784, 11.0 / 84, 0.0]
cdef double[7] EE = [71.0 / 57600, 0.0, -71.0 / 16695, 71.0 / 1920,
                     -17253.0 / 339200, 22.0 / 525, -1.0 / 40]
cdef double[7][6] AA = [
    [0, 0, 0, 0, 0, 0],
    [1.0 / 5, 0, 0, 0, 0, 0],
    [3.0 / 40, 9.0 / 40, 0, 0, 0, 0],
    [44.0 / 45, -56.0 / 15, 32.0 / 9, 0, 0, 0],
    [19372.0 / 6561, -25360.0 / 2187, 64448.0 / 6561, -212.0 / 729, 0, 0],
    [9017.0 / 3168, -355.0 / 33, 46732.0 / 5247, 49.0 / 176, -5103.0 / 18656, 0],
    [35.0 / 384, 0.0, 500.0 / 1113, 125.0 / 192, -2187.0 / 6784, 11.0 / 84],
]


cdef inline double _env_at(double t, double c1, double c2, double sigma,
                           double t_g, double t_start) nogil:
    cdef double u = t - t_start
    cdef double arg
    if u < 0.0 or u > t_g or t_g <= 0.0:
        return 0.0
    arg = (u - 0.5 * t_g) / sigma
    return c1 * exp(-0.5 * arg * arg) - c2


cdef inline dcomplex _mi(dcomplex z) nogil:
    # -i * z
    return z.imag - CI * z.real


cdef inline dcomplex _pi_(dcomplex z) nogil:
    # +i * z
    return -z.imag + CI * z.real


cdef void _coeffs(double envval, double t, int ng, double[::1] amps,
                  double[::1] phases, double[::1] omegas,
                  dcomplex[::1] out) nogil:
    cdef int g
    cdef double ph
    for g in range(ng):
        ph = phases[g] + omegas[g] * t
        out[g] = amps[g] * envval * (cos(ph) + CI * sin(ph))


cdef void _rhs_psi(dcomplex[::1] y, dcomplex[::1] out, double[::1] diag,
                   int[::1] ii, int[::1] jj, int[::1] grp,
                   dcomplex[::1] cbuf, int nterms, int dim) nogil:
    cdef int k, a, b
    cdef dcomplex c
    for a in range(dim):
        out[a] = _mi(diag[a] * y[a])
    for k in range(nterms):
        c = cbuf[grp[k]]
        a = ii[k]
        b = jj[k]
        out[a] = out[a] + _mi(c * y[b])
        out[b] = out[b] + _mi(c.conjugate() * y[a])


cdef void _rhs_rho(dcomplex[:, ::1] y, dcomplex[:, ::1] out, double[::1] diag,
                   int[::1] ii, int[::1] jj, int[::1] grp,
                   dcomplex[::1] cbuf, int nterms, int dim,
                   double[:, ::1] damp, int[::1] rdi, int[::1] rdj,
                   int[::1] rsi, int[::1] rsj, double[::1] rrate,
                   int nrefill, bint has_diss) nogil:
    cdef int k, a, b, m
    cdef double dd
    cdef dcomplex c, cc
    for a in range(dim):
        for b in range(dim):
            dd = diag[a] - diag[b]
            out[a, b] = _mi(dd * y[a, b])
            if has_diss:
                out[a, b] = out[a, b] - damp[a, b] * y[a, b]
    for k in range(nterms):
        c = cbuf[grp[k]]
        cc = c.conjugate()
        a = ii[k]
        b = jj[k]
        for m in range(dim):
            # -i * (W rho - rho W) for W = c|a><b| + conj(c)|b><a|
            out[a, m] = out[a, m] + _mi(c * y[b, m])
            out[b, m] = out[b, m] + _mi(cc * y[a, m])
            out[m, b] = out[m, b] + _pi_(c * y[m, a])
            out[m, a] = out[m, a] + _pi_(cc * y[m, b])
    if has_diss:
        for k in range(nrefill):
            out[rdi[k], rdj[k]] = out[rdi[k], rdj[k]] + rrate[k] * y[rsi[k], rsj[k]]


cdef double _err_norm(dcomplex[::1] e, dcomplex[::1] y0, dcomplex[::1] y1,
                      double rtol, double atol, int n) nogil:
    cdef int i
    cdef double s = 0.0, m0, m1, sc, ae
    for i in range(n):
        m0 = sqrt(y0[i].real * y0[i].real + y0[i].imag * y0[i].imag)
        m1 = sqrt(y1[i].real * y1[i].real + y1[i].imag * y1[i].imag)
        sc = atol + rtol * (m0 if m0 > m1 else m1)
        ae = sqrt(e[i].real * e[i].real + e[i].imag * e[i].imag) / sc
        s += ae * ae
    return sqrt(s / n)


cdef double _scaled_rms(dcomplex[::1] v, dcomplex[::1] ref, double rtol,
                        double atol, int n) nogil:
    cdef int i
    cdef double s = 0.0, m, sc
    for i in range(n):
        m = sqrt(ref[i].real * ref[i].real + ref[i].imag * ref[i].imag)
        sc = atol + rtol * m
        m = sqrt(v[i].real * v[i].real + v[i].imag * v[i].imag) / sc
        s += m * m
    return sqrt(s / n)


class _Problem:
    """Unpacked, validated arrays shared by both propagators."""

    __slots__ = ("dim", "diag", "ii", "jj", "grp", "amps", "phases", "omegas",
                 "c1", "c2", "sigma", "t_g", "t_start",
                 "damp", "rdi", "rdj", "rsi", "rsj", "rrate")

    def __init__(self, terms, env, diss=None):
        self.dim = terms.dim
        self.diag = terms.diag
        self.ii = terms.ii
        self.jj = terms.jj
        self.grp = terms.grp
        self.amps = terms.amps
        self.phases = terms.phases
        self.omegas = terms.omegas
        self.c1, self.c2 = env.c1, env.c2
        self.sigma, self.t_g, self.t_start = env.sigma, env.t_g, env.t_start
        if diss is not None:
            self.damp = diss.damp
            self.rdi, self.rdj = diss.r_di, diss.r_dj
            self.rsi, self.rsj = diss.r_si, diss.r_sj
            self.rrate = diss.r_rate
        else:
            self.damp = np.zeros((0, 0))
            self.rdi = self.rdj = self.rsi = self.rsj = np.zeros(0, dtype=np.int32)
            self.rrate = np.zeros(0)


def propagate_psi(psi0, terms, env, double t0, double t1, double rtol,
                  double atol, long max_steps=100_000_000):
    """Integrate d(psi)/dt = -i (diag + W(t)) psi from t0 to t1."""
    if t1 <= t0:
        return np.array(psi0, dtype=complex, copy=True), (0, 0)
    p = _Problem(terms, env)
    cdef int dim = p.dim
    cdef int nterms = p.ii.shape[0]
    cdef int ng = p.amps.shape[0]
    cdef double[::1] diag = p.diag
    cdef int[::1] ii = p.ii
    cdef int[::1] jj = p.jj
    cdef int[::1] grp = p.grp
    cdef double[::1] amps = p.amps
    cdef double[::1] phases = p.phases
    cdef double[::1] omegas = p.omegas
    cdef double c1 = p.c1, c2 = p.c2, sigma = p.sigma, t_g = p.t_g, ts = p.t_start

    y_arr = np.array(psi0, dtype=complex, copy=True, order="C")
    cdef dcomplex[::1] y = y_arr
    stage_arr = np.zeros((7, dim), dtype=complex)
    cdef dcomplex[:, ::1] kst = stage_arr
    tmp_arr = np.zeros(dim, dtype=complex)
    cdef dcomplex[::1] ytmp = tmp_arr
    y1_arr = np.zeros(dim, dtype=complex)
    cdef dcomplex[::1] y1 = y1_arr
    err_arr = np.zeros(dim, dtype=complex)
    cdef dcomplex[::1] evec = err_arr
    cbuf_arr = np.zeros(max(ng, 1), dtype=complex)
    cdef dcomplex[::1] cbuf = cbuf_arr

    cdef double t = t0, span = t1 - t0
    cdef double h, envval, err, fac, err_old = 1.0
    cdef long n_acc = 0, n_rej = 0
    cdef int i, s, q
    cdef double tiny = 16.0 * 2.220446049250313e-16
    cdef double d0, d1, d2, h0, h1

    # f(t0, y) -> kst[0]
    envval = _env_at(t0, c1, c2, sigma, t_g, ts)
    _coeffs(envval, t0, ng, amps, phases, omegas, cbuf)
    _rhs_psi(y, kst[0], diag, ii, jj, grp, cbuf, nterms, dim)

    # initial step heuristic (same as the python backend)
    d0 = _scaled_rms(y, y, rtol, atol, dim)
    d1 = _scaled_rms(kst[0], y, rtol, atol, dim)
    if d0 < 1e-5 or d1 < 1e-5:
        h0 = 1e-6 * span
    else:
        h0 = 0.01 * d0 / d1
    if h0 > span:
        h0 = span
    for i in range(dim):
        ytmp[i] = y[i] + h0 * kst[0, i]
    envval = _env_at(t0 + h0, c1, c2, sigma, t_g, ts)
    _coeffs(envval, t0 + h0, ng, amps, phases, omegas, cbuf)
    _rhs_psi(ytmp, kst[1], diag, ii, jj, grp, cbuf, nterms, dim)
    for i in range(dim):
        evec[i] = kst[1, i] - kst[0, i]
    d2 = _scaled_rms(evec, y, rtol, atol, dim) / h0
    if (d1 if d1 > d2 else d2) <= 1e-15:
        h1 = 1e-6 * span if 1e-6 * span > h0 * 1e-3 else h0 * 1e-3
    else:
        h1 = pow(0.01 / (d1 if d1 > d2 else d2), 0.2)
    h = 100.0 * h0
    if h1 < h:
        h = h1
    if span < h:
        h = span

    while t < t1:
        if h > t1 - t:
            h = t1 - t
        if h < tiny * (abs(t) if abs(t) > abs(span) else abs(span)):
            raise StepSizeUnderflow(f"step size underflow at t={t!r}")
        for s in range(1, 7):
            for i in range(dim):
                ytmp[i] = y[i]
            for q in range(s):
                if AA[s][q] != 0.0:
                    for i in range(dim):
                        ytmp[i] = ytmp[i] + (h * AA[s][q]) * kst[q, i]
            envval = _env_at(t + CC[s] * h, c1, c2, sigma, t_g, ts)
            _coeffs(envval, t + CC[s] * h, ng, amps, phases, omegas, cbuf)
            _rhs_psi(ytmp, kst[s], diag, ii, jj, grp, cbuf, nterms, dim)
        for i in range(dim):
            y1[i] = y[i]
            evec[i] = 0.0
        for s in range(7):
            if BB[s] != 0.0:
                for i in range(dim):
                    y1[i] = y1[i] + (h * BB[s]) * kst[s, i]
            if EE[s] != 0.0:
                for i in range(dim):
                    evec[i] = evec[i] + (h * EE[s]) * kst[s, i]
        err = _err_norm(evec, y, y1, rtol, atol, dim)
        if err <= 1.0:
            t += h
            for i in range(dim):
                y[i] = y1[i]
                kst[0, i] = kst[6, i]  # FSAL
            fac = SAFETY * pow(err + 1e-30, -PI_ALPHA) * pow(err_old, PI_BETA)
            if fac > FAC_MAX:
                fac = FAC_MAX
            if fac < FAC_MIN:
                fac = FAC_MIN
            h *= fac
            err_old = err if err > 1e-10 else 1e-10
            n_acc += 1
        else:
            fac = SAFETY * pow(err, -0.2)
            if fac > 1.0:
                fac = 1.0
            if fac < FAC_MIN:
                fac = FAC_MIN
            h *= fac
            n_rej += 1
        if n_acc + n_rej > max_steps:
            raise MaxStepsExceeded(f"more than {max_steps} steps needed")
    return y_arr, (n_acc, n_rej)


def propagate_rho(rho0, terms, env, diss, double t0, double t1, double rtol,
                  double atol, long max_steps=100_000_000):
    """Integrate the Lindblad master equation from t0 to t1."""
    if t1 <= t0:
        return np.array(rho0, dtype=complex, copy=True), (0, 0)
    p = _Problem(terms, env, diss)
    cdef int dim = p.dim
    cdef int n2 = dim * dim
    cdef int nterms = p.ii.shape[0]
    cdef int ng = p.amps.shape[0]
    cdef int nrefill = p.rrate.shape[0]
    cdef bint has_diss = diss is not None
    cdef double[::1] diag = p.diag
    cdef int[::1] ii = p.ii
    cdef int[::1] jj = p.jj
    cdef int[::1] grp = p.grp
    cdef double[::1] amps = p.amps
    cdef double[::1] phases = p.phases
    cdef double[::1] omegas = p.omegas
    cdef double[:, ::1] damp = p.damp if has_diss else np.zeros((dim, dim))
    cdef int[::1] rdi = p.rdi
    cdef int[::1] rdj = p.rdj
    cdef int[::1] rsi = p.rsi
    cdef int[::1] rsj = p.rsj
    cdef double[::1] rrate = p.rrate
    cdef double c1 = p.c1, c2 = p.c2, sigma = p.sigma, t_g = p.t_g, ts = p.t_start

    y_arr = np.array(rho0, dtype=complex, copy=True, order="C")
    cdef dcomplex[:, ::1] y2 = y_arr
    cdef dcomplex[::1] y = y_arr.reshape(-1)
    stage_arr = np.zeros((7, dim, dim), dtype=complex)
    cdef dcomplex[:, :, ::1] kst = stage_arr
    cdef dcomplex[:, ::1] kflat = stage_arr.reshape(7, -1)
    tmp_arr = np.zeros((dim, dim), dtype=complex)
    cdef dcomplex[:, ::1] ytmp2 = tmp_arr
    cdef dcomplex[::1] ytmp = tmp_arr.reshape(-1)
    y1_arr = np.zeros((dim, dim), dtype=complex)
    cdef dcomplex[::1] y1 = y1_arr.reshape(-1)
    err_arr = np.zeros((dim, dim), dtype=complex)
    cdef dcomplex[::1] evec = err_arr.reshape(-1)
    cbuf_arr = np.zeros(max(ng, 1), dtype=complex)
    cdef dcomplex[::1] cbuf = cbuf_arr

    cdef double t = t0, span = t1 - t0
    cdef double h, envval, err, fac, err_old = 1.0
    cdef long n_acc = 0, n_rej = 0
    cdef int i, s, q
    cdef double tiny = 16.0 * 2.220446049250313e-16
    cdef double d0, d1, d2, h0, h1

    envval = _env_at(t0, c1, c2, sigma, t_g, ts)
    _coeffs(envval, t0, ng, amps, phases, omegas, cbuf)
    _rhs_rho(y2, kst[0], diag, ii, jj, grp, cbuf, nterms, dim,
             damp, rdi, rdj, rsi, rsj, rrate, nrefill, has_diss)

    d0 = _scaled_rms(y, y, rtol, atol, n2)
    d1 = _scaled_rms(kflat[0], y, rtol, atol, n2)
    if d0 < 1e-5 or d1 < 1e-5:
        h0 = 1e-6 * span
    else:
        h0 = 0.01 * d0 / d1
    if h0 > span:
        h0 = span
    for i in range(n2):
        ytmp[i] = y[i] + h0 * kflat[0, i]
    envval = _env_at(t0 + h0, c1, c2, sigma, t_g, ts)
    _coeffs(envval, t0 + h0, ng, amps, phases, omegas, cbuf)
    _rhs_rho(ytmp2, kst[1], diag, ii, jj, grp, cbuf, nterms, dim,
             damp, rdi, rdj, rsi, rsj, rrate, nrefill, has_diss)
    for i in range(n2):
        evec[i] = kflat[1, i] - kflat[0, i]
    d2 = _scaled_rms(evec, y, rtol, atol, n2) / h0
    if (d1 if d1 > d2 else d2) <= 1e-15:
        h1 = 1e-6 * span if 1e-6 * span > h0 * 1e-3 else h0 * 1e-3
    else:
        h1 = pow(0.01 / (d1 if d1 > d2 else d2), 0.2)
    h = 100.0 * h0
    if h1 < h:
        h = h1
    if span < h:
        h = span

    while t < t1:
        if h > t1 - t:
            h = t1 - t
        if h < tiny * (abs(t) if abs(t) > abs(span) else abs(span)):
            raise StepSizeUnderflow(f"step size underflow at t={t!r}")
        for s in range(1, 7):
            for i in range(n2):
                ytmp[i] = y[i]
            for q in range(s):
                if AA[s][q] != 0.0:
                    for i in range(n2):
                        ytmp[i] = ytmp[i] + (h * AA[s][q]) * kflat[q, i]
            envval = _env_at(t + CC[s] * h, c1, c2, sigma, t_g, ts)
            _coeffs(envval, t + CC[s] * h, ng, amps, phases, omegas, cbuf)
            _rhs_rho(ytmp2, kst[s], diag, ii, jj, grp, cbuf, nterms, dim,
                     damp, rdi, rdj, rsi, rsj, rrate, nrefill, has_diss)
        for i in range(n2):
            y1[i] = y[i]
            evec[i] = 0.0
        for s in range(7):
            if BB[s] != 0.0:
                for i in range(n2):
                    y1[i] = y1[i] + (h * BB[s]) * kflat[s, i]
            if EE[s] != 0.0:
                for i in range(n2):
                    evec[i] = evec[i] + (h * EE[s]) * kflat[s, i]
        err = _err_norm(evec, y, y1, rtol, atol, n2)
        if err <= 1.0:
            t += h
            for i in range(n2):
                y[i] = y1[i]
                kflat[0, i] = kflat[6, i]  # FSAL
            fac = SAFETY * pow(err + 1e-30, -PI_ALPHA) * pow(err_old, PI_BETA)
            if fac > FAC_MAX:
                fac = FAC_MAX
            if fac < FAC_MIN:
                fac = FAC_MIN
            h *= fac
            err_old = err if err > 1e-10 else 1e-10
            n_acc += 1
        else:
            fac = SAFETY * pow(err, -0.2)
            if fac > 1.0:
                fac = 1.0
            if fac < FAC_MIN:
                fac = FAC_MIN
            h *= fac
            n_rej += 1
        if n_acc + n_rej > max_steps:
            raise MaxStepsExceeded(f"more than {max_steps} steps needed")
    return y_arr, (n_acc, n_rej)
