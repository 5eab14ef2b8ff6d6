# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""FFTW-backed stepping kernel for the 2D vorticity equation.

Same scheme as jerkrom._spectral.NumpyStepper (Crank-Nicolson viscosity,
Heun advection/forcing, 2/3-rule dealiasing after every substep); the
whole substep loop runs in C with FFTW plans created once per stepper.
Results agree with the numpy backend to FFT round-off.

Complex spectra are stored as interleaved re/im doubles (the memory
layout of fftw_complex) and cast at the FFTW call sites.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport M_PI
from libc.string cimport memcpy

cnp.import_array()

cdef extern from "fftw3.h" nogil:
    ctypedef double fftw_complex[2]
    ctypedef struct fftw_plan_s:
        pass
    ctypedef fftw_plan_s *fftw_plan
    void *fftw_malloc(size_t n)
    void fftw_free(void *p)
    fftw_plan fftw_plan_dft_r2c_2d(int n0, int n1, double *inp, fftw_complex *out, unsigned flags)
    fftw_plan fftw_plan_dft_c2r_2d(int n0, int n1, fftw_complex *inp, double *out, unsigned flags)
    void fftw_execute_dft_r2c(fftw_plan p, double *inp, fftw_complex *out)
    void fftw_execute_dft_c2r(fftw_plan p, fftw_complex *inp, double *out)
    void fftw_destroy_plan(fftw_plan p)
    unsigned FFTW_ESTIMATE


cdef class SpectralStepper:
    """Compiled counterpart of NumpyStepper; see that class for the scheme."""

    cdef readonly int nx
    cdef readonly double nu, dt
    cdef int nc, nr, ns
    cdef double inv_n2
    cdef fftw_plan plan_r2c, plan_c2r
    # interleaved complex buffers (2 * ns doubles each)
    cdef double *wh
    cdef double *wph
    cdef double *n1h
    cdef double *n2h
    cdef double *fh
    cdef double *cs
    # real buffers (nr doubles each)
    cdef double *rio
    cdef double *ru
    cdef double *rv
    cdef double *rwx
    cdef double *rwy
    # precomputed per-mode factors (ns doubles each)
    cdef double *k1
    cdef double *k2
    cdef double *inv_ksq
    cdef double *decay_num
    cdef double *inv_den
    cdef double *mask

    backend = "ext"

    def __cinit__(self, int nx, double nu, double dt, forcing=None):
        cdef int i, j, idx, kx, kmax
        cdef double kk1, kk2, ksq, c
        self.nx = nx
        self.nu = nu
        self.dt = dt
        self.nc = nx // 2 + 1
        self.nr = nx * nx
        self.ns = nx * self.nc
        self.inv_n2 = 1.0 / (<double> nx * nx)

        self.wh = <double*> fftw_malloc(2 * self.ns * sizeof(double))
        self.wph = <double*> fftw_malloc(2 * self.ns * sizeof(double))
        self.n1h = <double*> fftw_malloc(2 * self.ns * sizeof(double))
        self.n2h = <double*> fftw_malloc(2 * self.ns * sizeof(double))
        self.fh = <double*> fftw_malloc(2 * self.ns * sizeof(double))
        self.cs = <double*> fftw_malloc(2 * self.ns * sizeof(double))
        self.rio = <double*> fftw_malloc(self.nr * sizeof(double))
        self.ru = <double*> fftw_malloc(self.nr * sizeof(double))
        self.rv = <double*> fftw_malloc(self.nr * sizeof(double))
        self.rwx = <double*> fftw_malloc(self.nr * sizeof(double))
        self.rwy = <double*> fftw_malloc(self.nr * sizeof(double))
        self.k1 = <double*> fftw_malloc(self.ns * sizeof(double))
        self.k2 = <double*> fftw_malloc(self.ns * sizeof(double))
        self.inv_ksq = <double*> fftw_malloc(self.ns * sizeof(double))
        self.decay_num = <double*> fftw_malloc(self.ns * sizeof(double))
        self.inv_den = <double*> fftw_malloc(self.ns * sizeof(double))
        self.mask = <double*> fftw_malloc(self.ns * sizeof(double))

        # ESTIMATE keeps planning deterministic run to run
        self.plan_r2c = fftw_plan_dft_r2c_2d(nx, nx, self.rio,
                                             <fftw_complex*> self.cs, FFTW_ESTIMATE)
        self.plan_c2r = fftw_plan_dft_c2r_2d(nx, nx, <fftw_complex*> self.cs,
                                             self.rio, FFTW_ESTIMATE)

        kmax = nx // 3
        for i in range(nx):
            kx = i if i <= nx // 2 else i - nx
            for j in range(self.nc):
                idx = i * self.nc + j
                kk1 = 2.0 * M_PI * kx
                kk2 = 2.0 * M_PI * j
                ksq = kk1 * kk1 + kk2 * kk2
                self.k1[idx] = kk1
                self.k2[idx] = kk2
                self.inv_ksq[idx] = 1.0 / ksq if ksq > 0.0 else 0.0
                c = 0.5 * dt * nu * ksq
                self.decay_num[idx] = 1.0 - c
                self.inv_den[idx] = 1.0 / (1.0 + c)
                self.mask[idx] = 1.0 if (-kmax <= kx <= kmax and j <= kmax) else 0.0

        cdef cnp.ndarray[cnp.float64_t, ndim=2] farr
        if forcing is None:
            for idx in range(2 * self.ns):
                self.fh[idx] = 0.0
        else:
            farr = np.ascontiguousarray(forcing, dtype=np.float64)
            if farr.shape[0] != nx or farr.shape[1] != nx:
                raise ValueError("forcing shape does not match grid")
            memcpy(self.rio, <double*> farr.data, self.nr * sizeof(double))
            fftw_execute_dft_r2c(self.plan_r2c, self.rio, <fftw_complex*> self.fh)

    def __dealloc__(self):
        if self.plan_r2c != NULL:
            fftw_destroy_plan(self.plan_r2c)
        if self.plan_c2r != NULL:
            fftw_destroy_plan(self.plan_c2r)
        if self.wh != NULL: fftw_free(self.wh)
        if self.wph != NULL: fftw_free(self.wph)
        if self.n1h != NULL: fftw_free(self.n1h)
        if self.n2h != NULL: fftw_free(self.n2h)
        if self.fh != NULL: fftw_free(self.fh)
        if self.cs != NULL: fftw_free(self.cs)
        if self.rio != NULL: fftw_free(self.rio)
        if self.ru != NULL: fftw_free(self.ru)
        if self.rv != NULL: fftw_free(self.rv)
        if self.rwx != NULL: fftw_free(self.rwx)
        if self.rwy != NULL: fftw_free(self.rwy)
        if self.k1 != NULL: fftw_free(self.k1)
        if self.k2 != NULL: fftw_free(self.k2)
        if self.inv_ksq != NULL: fftw_free(self.inv_ksq)
        if self.decay_num != NULL: fftw_free(self.decay_num)
        if self.inv_den != NULL: fftw_free(self.inv_den)
        if self.mask != NULL: fftw_free(self.mask)

    cdef void _advection(self, double *src, double *dst) nogil:
        """dst = dealiased rfft2 of -(u*wx + v*wy) for the spectral state src."""
        cdef int idx
        cdef double pre, pim, re, im, scale
        # u = irfft(i*k2*psi), psi = src/ksq
        for idx in range(self.ns):
            pre = src[2 * idx] * self.inv_ksq[idx]
            pim = src[2 * idx + 1] * self.inv_ksq[idx]
            self.cs[2 * idx] = -self.k2[idx] * pim
            self.cs[2 * idx + 1] = self.k2[idx] * pre
        fftw_execute_dft_c2r(self.plan_c2r, <fftw_complex*> self.cs, self.ru)
        # v = irfft(-i*k1*psi)
        for idx in range(self.ns):
            pre = src[2 * idx] * self.inv_ksq[idx]
            pim = src[2 * idx + 1] * self.inv_ksq[idx]
            self.cs[2 * idx] = self.k1[idx] * pim
            self.cs[2 * idx + 1] = -self.k1[idx] * pre
        fftw_execute_dft_c2r(self.plan_c2r, <fftw_complex*> self.cs, self.rv)
        # wx = irfft(i*k1*w)
        for idx in range(self.ns):
            re = src[2 * idx]
            im = src[2 * idx + 1]
            self.cs[2 * idx] = -self.k1[idx] * im
            self.cs[2 * idx + 1] = self.k1[idx] * re
        fftw_execute_dft_c2r(self.plan_c2r, <fftw_complex*> self.cs, self.rwx)
        # wy = irfft(i*k2*w)
        for idx in range(self.ns):
            re = src[2 * idx]
            im = src[2 * idx + 1]
            self.cs[2 * idx] = -self.k2[idx] * im
            self.cs[2 * idx + 1] = self.k2[idx] * re
        fftw_execute_dft_c2r(self.plan_c2r, <fftw_complex*> self.cs, self.rwy)
        # -(u*wx + v*wy); each c2r factor carries an nx^2
        scale = self.inv_n2 * self.inv_n2
        for idx in range(self.nr):
            self.ru[idx] = -(self.ru[idx] * self.rwx[idx]
                             + self.rv[idx] * self.rwy[idx]) * scale
        fftw_execute_dft_r2c(self.plan_r2c, self.ru, <fftw_complex*> dst)
        for idx in range(self.ns):
            dst[2 * idx] *= self.mask[idx]
            dst[2 * idx + 1] *= self.mask[idx]

    cdef void _steps(self, int n_steps) nogil:
        cdef int step, idx
        cdef double base_re, base_im, dt, fac
        dt = self.dt
        for step in range(n_steps):
            self._advection(self.wh, self.n1h)
            for idx in range(self.ns):
                base_re = self.wh[2 * idx] * self.decay_num[idx]
                base_im = self.wh[2 * idx + 1] * self.decay_num[idx]
                fac = self.inv_den[idx] * self.mask[idx]
                self.wph[2 * idx] = (base_re + dt * (self.n1h[2 * idx]
                                                     + self.fh[2 * idx])) * fac
                self.wph[2 * idx + 1] = (base_im + dt * (self.n1h[2 * idx + 1]
                                                         + self.fh[2 * idx + 1])) * fac
            self._advection(self.wph, self.n2h)
            for idx in range(self.ns):
                base_re = self.wh[2 * idx] * self.decay_num[idx]
                base_im = self.wh[2 * idx + 1] * self.decay_num[idx]
                fac = self.inv_den[idx] * self.mask[idx]
                self.wh[2 * idx] = (base_re + dt * (0.5 * (self.n1h[2 * idx]
                                                           + self.n2h[2 * idx])
                                                    + self.fh[2 * idx])) * fac
                self.wh[2 * idx + 1] = (base_im + dt * (0.5 * (self.n1h[2 * idx + 1]
                                                               + self.n2h[2 * idx + 1])
                                                        + self.fh[2 * idx + 1])) * fac

    def run(self, w, int n_steps):
        """Advance the real (nx, nx) field w by n_steps substeps."""
        cdef cnp.ndarray[cnp.float64_t, ndim=2] win = \
            np.ascontiguousarray(w, dtype=np.float64)
        if win.shape[0] != self.nx or win.shape[1] != self.nx:
            raise ValueError("field shape does not match grid")
        cdef int idx
        memcpy(self.rio, <double*> win.data, self.nr * sizeof(double))
        fftw_execute_dft_r2c(self.plan_r2c, self.rio, <fftw_complex*> self.wh)
        for idx in range(self.ns):
            self.wh[2 * idx] *= self.mask[idx]
            self.wh[2 * idx + 1] *= self.mask[idx]
        with nogil:
            self._steps(n_steps)
        memcpy(self.cs, self.wh, 2 * self.ns * sizeof(double))  # c2r destroys input
        fftw_execute_dft_c2r(self.plan_c2r, <fftw_complex*> self.cs, self.rio)
        cdef cnp.ndarray[cnp.float64_t, ndim=2] out = np.empty((self.nx, self.nx))
        for idx in range(self.nr):
            (<double*> out.data)[idx] = self.rio[idx] * self.inv_n2
        return out
