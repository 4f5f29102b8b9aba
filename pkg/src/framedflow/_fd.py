"""Periodic finite-difference stencils and spectral helpers on a uniform grid.

All routines act along axis 0 of an array sampled at ``u_i = 2*pi*i/N``.
Ghost values are produced by shifting the wrapped samples by ``jump``, the
additive offset picked up over one parameter period (``2*pi*d`` for an
angle lift of degree ``d``, ``(0, 0, pitch)`` for helical positions).
"""

import numpy as np

TWO_PI = 2.0 * np.pi


def grid(N):
    """Parameter nodes ``u_i`` and spacing ``h``."""
    h = TWO_PI / N
    return h * np.arange(N), h


def _pad(f, m, jump):
    f = np.asarray(f, dtype=float)
    if np.ndim(jump) == 0 and jump == 0.0:
        return np.concatenate((f[-m:], f, f[:m]), axis=0)
    return np.concatenate((f[-m:] - jump, f, f[:m] + jump), axis=0)


def _d1p(p, m, N, h):
    # first derivative from an array padded by m >= 2 ghost values per side
    c = m
    return ((p[c - 2:c - 2 + N] - p[c + 2:c + 2 + N])
            + 8.0 * (p[c + 1:c + 1 + N] - p[c - 1:c - 1 + N])) / (12.0 * h)


def _d2p(p, m, N, h):
    c = m
    return (16.0 * (p[c - 1:c - 1 + N] + p[c + 1:c + 1 + N])
            - (p[c - 2:c - 2 + N] + p[c + 2:c + 2 + N])
            - 30.0 * p[c:c + N]) / (12.0 * h * h)


def _d3p(p, N, h):
    return ((p[0:N] - p[6:N + 6]) + 8.0 * (p[5:N + 5] - p[1:N + 1])
            + 13.0 * (p[2:N + 2] - p[4:N + 4])) / (8.0 * h ** 3)


def d1(f, h, jump=0.0):
    """Fourth-order central first derivative."""
    return _d1p(_pad(f, 2, jump), 2, len(f), h)


def d2(f, h, jump=0.0):
    """Fourth-order central second derivative."""
    return _d2p(_pad(f, 2, jump), 2, len(f), h)


def d3(f, h, jump=0.0):
    """Fourth-order central third derivative (seven-point stencil)."""
    return _d3p(_pad(f, 3, jump), len(f), h)


def d123(f, h, jump=0.0):
    """First three derivatives sharing one padded copy."""
    N = len(f)
    p = _pad(f, 3, jump)
    return _d1p(p, 3, N, h), _d2p(p, 3, N, h), _d3p(p, N, h)


def spectral(f, order=1, jump=0.0):
    """Fourier derivative of order 1, 2 or 3 of samples with a linear drift.

    The drift ``jump * u / (2 pi)`` is differentiated exactly; the Nyquist
    mode is dropped for odd orders.
    """
    f = np.asarray(f, dtype=float)
    N = f.shape[0]
    u, _ = grid(N)
    shape = (-1,) + (1,) * (f.ndim - 1)
    jump = np.asarray(jump, dtype=float)
    c = np.fft.rfft(f - jump * (u / TWO_PI).reshape(shape), axis=0)
    k = np.arange(c.shape[0], dtype=float)
    fac = (1j * k) ** order
    if N % 2 == 0 and order % 2 == 1:
        fac[-1] = 0.0
    out = np.fft.irfft(c * fac.reshape(shape), n=N, axis=0)
    if order == 1:
        out = out + jump / TWO_PI
    return out


def derivatives123(f, h, jump=0.0, method="fd"):
    """First, second and third derivative with the chosen backend."""
    if method == "spectral":
        return spectral(f, 1, jump), spectral(f, 2, jump), spectral(f, 3, jump)
    return d123(f, h, jump)


def derivative(f, h, order=1, jump=0.0, method="fd"):
    """Dispatch between the finite-difference and Fourier backends."""
    if method == "spectral":
        return spectral(f, order, jump)
    return (d1, d2, d3)[order - 1](f, h, jump)


def periodic_integral(f, h):
    """Trapezoidal integral of periodic samples over one period."""
    return h * np.sum(f, axis=0)


def antiderivative(f):
    """Spectral antiderivative ``F(u_i) = int_0^{u_i} f du`` of periodic samples.

    Exact for trigonometric polynomials resolved by the grid; the Nyquist
    mode (which has no well-defined antiderivative on the grid) is dropped.
    """
    f = np.asarray(f, dtype=float)
    N = f.shape[0]
    u, _ = grid(N)
    c = np.fft.rfft(f, axis=0)
    k = np.arange(c.shape[0], dtype=float)
    mean = c[0].real / N
    coef = np.zeros_like(c)
    coef[1:] = c[1:] / (1j * k[1:].reshape((-1,) + (1,) * (f.ndim - 1)))
    if N % 2 == 0:
        coef[-1] = 0.0
    periodic = np.fft.irfft(coef, n=N, axis=0)
    periodic = periodic - periodic[0]
    return mean * u.reshape((-1,) + (1,) * (f.ndim - 1)) + periodic


def lowpass(f, cutoff, jump=0.0):
    """Zero all Fourier modes above ``cutoff`` of the periodic part of ``f``.

    The linear drift ``jump * u / (2 pi)`` is removed before filtering and
    restored afterwards, so lifts and helical coordinates are handled.
    """
    f = np.asarray(f, dtype=float)
    N = f.shape[0]
    u, _ = grid(N)
    shape = (-1,) + (1,) * (f.ndim - 1)
    drift = np.asarray(jump, dtype=float) * (u / TWO_PI).reshape(shape)
    c = np.fft.rfft(f - drift, axis=0)
    c[cutoff + 1:] = 0.0
    return np.fft.irfft(c, n=N, axis=0) + drift


def trig_interpolant(f):
    """Return a callable evaluating the trigonometric interpolant of ``f``
    and its first two derivatives at arbitrary parameters.

    Only the periodic part is interpolated; callers add any drift.
    """
    f = np.asarray(f, dtype=float)
    N = f.shape[0]
    c = np.fft.fft(f, axis=0) / N
    k = np.fft.fftfreq(N, d=1.0 / N)
    if N % 2 == 0:
        # split the Nyquist mode symmetrically to keep the interpolant real
        k = k.copy()
        k[N // 2] = 0.0
        c = c.copy()
        nyq = c[N // 2].copy()
        c[N // 2] = 0.0
    else:
        nyq = None

    def evaluate(u, order=0):
        u = np.atleast_1d(np.asarray(u, dtype=float))
        phase = np.exp(1j * np.outer(u, k))
        fac = (1j * k) ** order
        out = phase @ (c * fac.reshape((-1,) + (1,) * (f.ndim - 1)))
        if nyq is not None:
            m = N / 2.0
            if order == 0:
                w = np.cos(m * u)
            elif order == 1:
                w = -m * np.sin(m * u)
            else:
                w = -m * m * np.cos(m * u)
            out = out + np.multiply.outer(w, nyq)
        return out.real

    return evaluate
