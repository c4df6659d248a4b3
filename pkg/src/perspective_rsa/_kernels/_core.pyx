# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled hot kernels: speaker log-probabilities, lapse likelihood, MH sweeps, AIS runs.

Mirrors ``_fallback`` function for function; see that module for the contracts.
"""
import numpy as np
cimport numpy as cnp
from libc.math cimport exp, log, INFINITY, isfinite

cnp.import_array()

BACKEND = "cython"


cdef inline double _lse(double[::1] z, Py_ssize_t n) noexcept nogil:
    cdef double m = -INFINITY
    cdef double s = 0.0
    cdef Py_ssize_t i
    for i in range(n):
        if z[i] > m:
            m = z[i]
    if not isfinite(m):
        m = 0.0
    for i in range(n):
        s += exp(z[i] - m)
    return m + log(s)


cdef class _Target:
    cdef double[:, :, ::1] ia
    cdef double[:, ::1] ie
    cdef unsigned char[:, ::1] valid
    cdef unsigned char[::1] occ
    cdef double[::1] lw
    cdef long[::1] umask
    cdef double[:, ::1] gw
    cdef double[:, ::1] counts
    cdef double lapse
    cdef Py_ssize_t K, U, W, G
    cdef double lw_total
    cdef double cached_scale
    cdef bint has_cache
    cdef double[:, ::1] marg
    cdef double[:, ::1] logp
    cdef double[::1] zbuf
    cdef double[::1] cost

    def __init__(self, tables):
        ia, ie, valid, occ, lw, umask, gw, counts, lapse = tables
        self.ia = np.ascontiguousarray(ia, dtype=np.float64)
        self.ie = np.ascontiguousarray(ie, dtype=np.float64)
        self.valid = np.ascontiguousarray(valid, dtype=np.uint8)
        self.occ = np.ascontiguousarray(occ, dtype=np.uint8)
        self.lw = np.ascontiguousarray(lw, dtype=np.float64)
        self.umask = np.ascontiguousarray(umask, dtype=np.int_)
        self.gw = np.ascontiguousarray(gw, dtype=np.float64)
        self.counts = np.ascontiguousarray(counts, dtype=np.float64)
        self.lapse = lapse
        self.K = self.ia.shape[0]
        self.U = self.ia.shape[1]
        self.W = self.ia.shape[2]
        self.G = self.gw.shape[0]
        self.lw_total = _lse(self.lw, self.W)
        self.has_cache = False
        self.marg = np.empty((self.K, self.U))
        self.logp = np.empty((self.K, self.U))
        self.zbuf = np.empty(max(self.W, self.U))
        self.cost = np.empty(self.U)

    cdef void _marginals(self, double scale) noexcept nogil:
        cdef Py_ssize_t k, u, w
        for k in range(self.K):
            if self.occ[k]:
                for u in range(self.U):
                    for w in range(self.W):
                        self.zbuf[w] = scale * self.ia[k, u, w] + self.lw[w]
                    self.marg[k, u] = _lse(self.zbuf, self.W)
            else:
                for u in range(self.U):
                    self.marg[k, u] = scale * self.ie[k, u] + self.lw_total

    cdef void _logp(self, double[::1] phi) noexcept nogil:
        cdef double alpha = phi[0]
        cdef double ws = phi[1]
        cdef double cs = exp(phi[2]), cc = exp(phi[3]), ct = exp(phi[4])
        cdef Py_ssize_t k, u
        cdef long m
        cdef double z
        cdef double norm
        for u in range(self.U):
            m = self.umask[u]
            self.cost[u] = (cs if m & 1 else 0.0) + (cc if m & 2 else 0.0) + (ct if m & 4 else 0.0)
        for k in range(self.K):
            for u in range(self.U):
                if self.valid[k, u]:
                    z = self.marg[k, u] + alpha * (1.0 - ws) * self.ie[k, u] - alpha * self.cost[u]
                else:
                    z = -INFINITY
                self.zbuf[u] = z
            norm = _lse(self.zbuf, self.U)
            for u in range(self.U):
                self.logp[k, u] = self.zbuf[u] - norm

    cdef double eval(self, double[::1] phi) noexcept nogil:
        cdef double scale = phi[0] * phi[1]
        cdef Py_ssize_t g, k, u
        cdef double pg, total = 0.0
        if not self.has_cache or scale != self.cached_scale:
            self._marginals(scale)
            self.cached_scale = scale
            self.has_cache = True
        self._logp(phi)
        for g in range(self.G):
            for u in range(self.U):
                if self.counts[g, u] == 0.0:
                    continue
                pg = 0.0
                for k in range(self.K):
                    if self.gw[g, k] != 0.0:
                        pg += self.gw[g, k] * exp(self.logp[k, u])
                total += self.counts[g, u] * log((1.0 - self.lapse) * pg + self.lapse / self.U)
        return total


def weight_marginals(info_asym, info_ego, occluded, log_wprior, double scale):
    K, U, W = info_asym.shape
    t = _Target((info_asym, info_ego, np.ones((K, U), np.uint8), occluded, log_wprior,
                 np.arange(1, U + 1), np.zeros((1, K)), np.zeros((1, U)), 0.0))
    t._marginals(scale)
    return np.asarray(t.marg).copy()


def speaker_logp(info_asym, info_ego, valid, occluded, log_wprior, umask, phi):
    K, U, W = info_asym.shape
    t = _Target((info_asym, info_ego, valid, occluded, log_wprior, umask,
                 np.zeros((1, K)), np.zeros((1, U)), 0.0))
    cdef double[::1] p = np.ascontiguousarray(phi, dtype=np.float64)
    t._marginals(p[0] * p[1])
    t._logp(p)
    return np.asarray(t.logp).copy()


def loglik(info_asym, info_ego, valid, occluded, log_wprior, umask,
           group_weights, counts, double lapse, phi):
    t = _Target((info_asym, info_ego, valid, occluded, log_wprior, umask,
                 group_weights, counts, lapse))
    cdef double[::1] p = np.ascontiguousarray(phi, dtype=np.float64)
    return t.eval(p)


cdef inline double _reflect(double x, double lo, double hi) noexcept nogil:
    if hi - lo <= 0:
        return lo
    while x < lo or x > hi:
        if x < lo:
            x = 2.0 * lo - x
        if x > hi:
            x = 2.0 * hi - x
    return x


cdef double _sweep(_Target target, double[::1] phi, double ll, double beta,
                   unsigned char[::1] free, double[::1] scale, double factor, double[::1] lo, double[::1] hi,
                   double[::1] normals, double[::1] uniforms, long long[::1] n_accept) noexcept nogil:
    cdef Py_ssize_t j, p = phi.shape[0]
    cdef double old, ll_new, d
    cdef double saved[5]
    cdef bint inside
    for j in range(p):
        if not free[j]:
            continue
        old = phi[j]
        phi[j] = _reflect(old + factor * scale[j] * normals[j], lo[j], hi[j])
        ll_new = target.eval(phi)
        if log(uniforms[j]) < beta * (ll_new - ll):
            ll = ll_new
            n_accept[j] += 1
        else:
            phi[j] = old
    # joint ridge move: alpha * exp(d), free log-costs - d
    if normals.shape[0] > p and scale[p] > 0 and free[0] and phi[0] > 0 and (free[2] or free[3] or free[4]):
        d = factor * scale[p] * normals[p]
        for j in range(p):
            saved[j] = phi[j]
        phi[0] = phi[0] * exp(d)
        for j in range(2, 5):
            if free[j]:
                phi[j] -= d
        inside = True
        for j in range(p):
            if phi[j] < lo[j] or phi[j] > hi[j]:
                inside = False
        if inside:
            ll_new = target.eval(phi)
            if log(uniforms[p]) < beta * (ll_new - ll) + d:
                n_accept[p] += 1
                return ll_new
        for j in range(p):
            phi[j] = saved[j]
    return ll


def _factors(factors):
    return np.ones(1) if factors is None else np.ascontiguousarray(factors, dtype=np.float64)


def mh_chain(tables, phi0, free, scale, lo, hi, normals, uniforms, double temperature=1.0, factors=None):
    cdef _Target target = _Target(tables)
    cdef double[::1] phi = np.array(phi0, dtype=np.float64)
    cdef unsigned char[::1] fr = np.ascontiguousarray(free, dtype=np.uint8)
    cdef double[::1] sc = np.ascontiguousarray(scale, dtype=np.float64)
    cdef double[::1] lo_ = np.ascontiguousarray(lo, dtype=np.float64)
    cdef double[::1] hi_ = np.ascontiguousarray(hi, dtype=np.float64)
    cdef double[:, ::1] nz = np.ascontiguousarray(normals, dtype=np.float64)
    cdef double[:, ::1] uz = np.ascontiguousarray(uniforms, dtype=np.float64)
    cdef double[::1] fac = _factors(factors)
    cdef Py_ssize_t nf = fac.shape[0]
    cdef Py_ssize_t n = nz.shape[0], p = phi.shape[0], i, j
    samples_arr = np.empty((n, p))
    lls_arr = np.empty(n)
    acc_arr = np.zeros(nz.shape[1], dtype=np.int64)
    cdef double[:, ::1] samples = samples_arr
    cdef double[::1] lls = lls_arr
    cdef long long[::1] n_accept = acc_arr
    cdef double ll = target.eval(phi)
    if not isfinite(ll):
        raise FloatingPointError("non-finite log-likelihood at chain start")
    with nogil:
        for i in range(n):
            ll = _sweep(target, phi, ll, temperature, fr, sc, fac[i % nf], lo_, hi_, nz[i], uz[i], n_accept)
            for j in range(p):
                samples[i, j] = phi[j]
            lls[i] = ll
    return samples_arr, lls_arr, acc_arr


def ais_run(tables, phi0, free, scale, lo, hi, betas, normals, uniforms, factors=None):
    cdef _Target target = _Target(tables)
    cdef double[::1] phi = np.array(phi0, dtype=np.float64)
    cdef unsigned char[::1] fr = np.ascontiguousarray(free, dtype=np.uint8)
    cdef double[::1] sc = np.ascontiguousarray(scale, dtype=np.float64)
    cdef double[::1] lo_ = np.ascontiguousarray(lo, dtype=np.float64)
    cdef double[::1] hi_ = np.ascontiguousarray(hi, dtype=np.float64)
    cdef double[::1] b = np.ascontiguousarray(betas, dtype=np.float64)
    cdef double[:, ::1] nz = np.ascontiguousarray(normals, dtype=np.float64)
    cdef double[:, ::1] uz = np.ascontiguousarray(uniforms, dtype=np.float64)
    cdef double[::1] fac = _factors(factors)
    cdef Py_ssize_t nf = fac.shape[0]
    acc_arr = np.zeros(nz.shape[1], dtype=np.int64)
    cdef long long[::1] n_accept = acc_arr
    cdef double ll = target.eval(phi)
    cdef double logw = 0.0
    cdef Py_ssize_t t
    with nogil:
        for t in range(1, b.shape[0]):
            logw += (b[t] - b[t - 1]) * ll
            ll = _sweep(target, phi, ll, b[t], fr, sc, fac[(t - 1) % nf], lo_, hi_, nz[t - 1], uz[t - 1], n_accept)
    return logw, acc_arr, np.asarray(phi).copy()
