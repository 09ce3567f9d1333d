"""Vectorised kernels for the slope reduction of the saddle flow.

Along any interior orbit the slope M = y/x falls monotonically, and the
passage time between two slope values is an explicit integral.  Writing

    theta  = 1/(kappa*beta0) + 1/(kappa*beta2)
    phi(M) = M^(1/beta0 - 1) * (c0 + c2*M^kappa)^(-theta)
    F(m)   = integral of phi over (0, m]
    G(xi, eta) = xi^(1/beta2) * eta^(1/beta0) * (c0*xi^k + c2*eta^k)^(1 - theta)

the time to flow from (xi, eta) to the section x = zeta0 is

    T = ( F(eta/xi) - F(omega/zeta0) ) / G(xi, eta)

where omega, the exit height, solves the level identity

    u*ln(xi) + v*ln(eta) + ln(c0*xi^k + c2*eta^k)
        = u*ln(zeta0) + v*ln(omega) + ln(c0*zeta0^k + c2*omega^k).

F is tabulated once per parameter set: the integrand is analytic in
s = ln M, so fixed Gauss-Legendre panels on a bounded s-window converge
to machine precision, and outside the window the two-term head/tail
series of phi are accurate to ~1e-14 relative.  Each later query costs a
panel lookup plus one 16-point partial panel, all vectorised, which is
what makes million-sample tail estimates affordable.

Everything here works in logs (logaddexp, expit) so extreme slopes and
exit heights cannot overflow.
"""
from __future__ import annotations

import math
from functools import lru_cache

import numpy as np
from scipy.special import expit

from .errors import BracketFailure, NonIntegrable
from .params import SaddleParams, derive_constants

__all__ = ["ReductionKernel", "kernel_for"]

# Truncation point for the tabulated window: where the subdominant term of
# c0 + c2*M^kappa falls below 1e-7 of the dominant one.  With the two-term
# analytic series beyond the window the truncation error is ~1e-14 relative.
_W_CUT = 1e-7

_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(16)


class ReductionKernel:
    """Per-parameter-set machinery for exit times and their inverses.

    Instances are cheap to build (a few hundred integrand evaluations) and
    are cached via kernel_for; all public methods accept and return numpy
    arrays and never iterate per sample.
    """

    def __init__(self, p: SaddleParams, panel_scale: float = 1.0):
        d = derive_constants(p, permissive=True)
        if not (math.isfinite(d.beta0) and math.isfinite(d.beta2)):
            raise NonIntegrable(
                "reduced time integral diverges: both axis coefficient sums "
                "must be positive (a0 > 0 and b2 > 0)"
            )
        self.p = p
        self.d = d
        self.k = float(p.kappa)
        self.u, self.v = d.u, d.v
        self.c0, self.c2 = d.c0, d.c2
        self.beta0, self.beta2 = d.beta0, d.beta2
        self.theta = 1.0 / (self.k * d.beta0) + 1.0 / (self.k * d.beta2)
        self.ln_c0 = math.log(self.c0)
        self.ln_c2 = math.log(self.c2)

        self.s_lo = (self.ln_c0 - self.ln_c2 + math.log(_W_CUT)) / self.k
        self.s_hi = (self.ln_c0 - self.ln_c2 - math.log(_W_CUT)) / self.k
        n_panels = int(
            math.ceil((self.s_hi - self.s_lo) / (1.5 * panel_scale / self.k))
        )
        edges = np.linspace(self.s_lo, self.s_hi, n_panels + 1)
        mid = 0.5 * (edges[:-1] + edges[1:])
        half = 0.5 * (edges[1] - edges[0])
        nodes = mid[None, :] + half * _GL_NODES[:, None]
        panel = self.phi_s(nodes).T @ _GL_WEIGHTS * half
        self.edges = edges
        self.ds = edges[1] - edges[0]
        self.cum = np.concatenate(([0.0], np.cumsum(panel)))
        self.F_head_total = float(self._F_head(np.array(self.s_lo)))
        self.I_inf = float(
            self.F_head_total + self.cum[-1] + self._R_tail(np.array(self.s_hi))
        )

    # -- the s-integrand and its analytic ends ---------------------------

    def phi_s(self, s):
        """Integrand of F in s = ln M, Jacobian included."""
        return np.exp(
            s / self.beta0
            - self.theta * np.logaddexp(self.ln_c0, self.ln_c2 + self.k * s)
        )

    def _F_head(self, s):
        # two-term series of F(e^s) for s below the window
        p1 = 1.0 / self.beta0
        p2 = p1 + self.k
        return self.c0 ** (-self.theta) * (
            self.beta0 * np.exp(p1 * s)
            - self.theta * (self.c2 / self.c0) * np.exp(p2 * s) / p2
        )

    def _R_tail(self, s):
        # two-term series of I_inf - F(e^s) for s above the window
        q1 = 1.0 / self.beta2
        q2 = q1 + self.k
        return self.c2 ** (-self.theta) * (
            self.beta2 * np.exp(-q1 * s)
            - self.theta * (self.c0 / self.c2) * np.exp(-q2 * s) / q2
        )

    def F_s(self, s):
        """Primitive F evaluated at m = e^s, vectorised."""
        s = np.atleast_1d(np.asarray(s, dtype=float))
        out = np.empty_like(s)
        head = s <= self.s_lo
        tail = s >= self.s_hi
        mid = ~(head | tail)
        if head.any():
            out[head] = self._F_head(s[head])
        if tail.any():
            out[tail] = self.I_inf - self._R_tail(s[tail])
        if mid.any():
            sm = s[mid]
            j = np.minimum(
                ((sm - self.s_lo) / self.ds).astype(np.int64), len(self.cum) - 2
            )
            a = self.edges[j]
            half = 0.5 * (sm - a)
            nodes = a[None, :] + half[None, :] * (_GL_NODES[:, None] + 1.0)
            part = (self.phi_s(nodes) * _GL_WEIGHTS[:, None]).sum(axis=0) * half
            out[mid] = self.F_head_total + self.cum[j] + part
        return out

    # -- level sets and the exit height ----------------------------------

    def level_log(self, lx, ly):
        """ln of the (sign-stripped) level x^u y^v (c0 x^k + c2 y^k) from logs."""
        return (
            self.u * lx
            + self.v * ly
            + np.logaddexp(self.ln_c0 + self.k * lx, self.ln_c2 + self.k * ly)
        )

    def omega_log(self, target, lz):
        """Solve level_log(lz, rho) = target for rho = ln(omega).

        The level is strictly monotone in rho (direction given by the sign
        of v) and convex, so the root is trapped between the two asymptote
        roots; bisection narrows the trap and clipped Newton, quadratic on
        this smooth profile, finishes the job.
        """
        target = np.atleast_1d(np.asarray(target, dtype=float))
        lc0z = self.ln_c0 + self.k * lz
        base = target - self.u * lz
        r1 = (base - lc0z) / self.v
        r2 = (base - self.ln_c2) / (self.v + self.k)
        pad = math.log(2.0) / min(abs(self.v), abs(self.v + self.k)) + 1.0
        lo = np.minimum(r1, r2) - pad
        hi = np.maximum(r1, r2) + pad
        sgn = 1.0 if self.v > 0 else -1.0

        def psi(rho):
            return sgn * (
                self.u * lz
                + self.v * rho
                + np.logaddexp(lc0z, self.ln_c2 + self.k * rho)
                - target
            )

        for _ in range(12):
            mid = 0.5 * (lo + hi)
            pos = psi(mid) >= 0.0
            hi = np.where(pos, mid, hi)
            lo = np.where(pos, lo, mid)
        rho = 0.5 * (lo + hi)
        for _ in range(6):
            val = psi(rho)
            pos = val >= 0.0
            hi = np.where(pos, rho, hi)
            lo = np.where(pos, lo, rho)
            slope = sgn * (
                self.v + self.k * expit(self.ln_c2 + self.k * rho - lc0z)
            )
            rho = np.clip(rho - val / slope, lo, hi)
        return rho

    # -- exit time and its inverse ----------------------------------------

    def exit_time(self, xi, eta, zeta0, with_omega=False):
        """Passage time from (xi, eta) to the section x = zeta0, vectorised.

        Requires 0 < xi <= zeta0 elementwise; xi == zeta0 returns exactly 0.
        """
        xi = np.atleast_1d(np.asarray(xi, dtype=float))
        eta = np.atleast_1d(np.asarray(eta, dtype=float))
        xi, eta = np.broadcast_arrays(xi, eta)
        lx = np.log(xi)
        ly = np.log(eta)
        lz = math.log(zeta0)
        lw = self.omega_log(self.level_log(lx, ly), lz)
        T = self._time_from_logs(lx, ly, lw, lz)
        T = np.where(xi == zeta0, 0.0, T)
        if with_omega:
            return T, np.where(xi == zeta0, eta, np.exp(lw))
        return T

    def _time_from_logs(self, lx, ly, lw, lz):
        D = self.F_s(ly - lx) - self.F_s(lw - lz)
        ln_g = (
            lx / self.beta2
            + ly / self.beta0
            + (1.0 - self.theta)
            * np.logaddexp(self.ln_c0 + self.k * lx, self.ln_c2 + self.k * ly)
        )
        return D * np.exp(-ln_g)

    def _dlnT_dlnxi(self, lx, ly, lw, lz, D):
        """Analytic derivative used by the Newton stage of invert()."""
        wx = expit(self.ln_c0 + self.k * lx - self.ln_c2 - self.k * ly)
        ww = expit(self.ln_c2 + self.k * lw - self.ln_c0 - self.k * lz)
        A = self.u + self.k * wx
        B = self.v + self.k * ww
        dD = -self.phi_s(ly - lx) - self.phi_s(lw - lz) * (A / B)
        dlnG = 1.0 / self.beta2 + (1.0 - self.theta) * self.k * wx
        return dD / D - dlnG

    def invert(self, T, eta, zeta0, lnx0=None):
        """Starting abscissa xi on height eta whose exit time equals T.

        Bracketed bisection sharpened by Newton with the analytic
        log-derivative; the lower bracket end is pushed down geometrically
        until it encloses very large targets.  A caller that already knows
        the answer to a few percent can pass ln(xi) guesses as lnx0; the
        bracket then collapses to a window around the guess and most of the
        bisection stage is skipped.
        """
        T = np.atleast_1d(np.asarray(T, dtype=float))
        eta = np.atleast_1d(np.asarray(eta, dtype=float))
        T, eta = np.broadcast_arrays(T, eta)
        if np.any(T <= 0.0):
            raise ValueError("exit-time targets must be positive")
        ly = np.log(eta)
        lz = math.log(zeta0)
        ln_target = np.log(T)

        def resid(lx):
            lw = self.omega_log(self.level_log(lx, ly), lz)
            D = self.F_s(ly - lx) - self.F_s(lw - lz)
            ln_g = (
                lx / self.beta2
                + ly / self.beta0
                + (1.0 - self.theta)
                * np.logaddexp(self.ln_c0 + self.k * lx, self.ln_c2 + self.k * ly)
            )
            with np.errstate(divide="ignore"):
                return np.log(D) - ln_g - ln_target, lw, D

        hi = np.full_like(ln_target, lz + math.log1p(-1e-12))
        depth = 27.7  # ln(1e12): bracket starts at xi = 1e-12 * zeta0
        if lnx0 is not None:
            guess = np.broadcast_to(np.asarray(lnx0, dtype=float), ln_target.shape)
            lo = guess - 0.05
            hiw = np.minimum(guess + 0.05, hi)
            r_lo, _, _ = resid(lo)
            r_hiw, _, _ = resid(hiw)
            # residual decreases in lnxi, so a valid window has r_lo >= 0 >= r_hiw;
            # elements whose window missed fall back to the cold bracket
            lo = np.where(r_lo < 0.0, hi - depth, lo)
            hi = np.where(r_hiw > 0.0, hi, hiw)
            n_bisect = 2
        else:
            r_hi, _, _ = resid(hi)
            if np.any(r_hi > 0.0):
                raise BracketFailure(
                    "target exit time smaller than the time from just inside the section"
                )
            lo = hi - depth
            r_lo, _, _ = resid(lo)
            for _ in range(12):
                short = r_lo < 0.0
                if not short.any():
                    break
                lo = np.where(short, hi - 2.0 * (hi - lo), lo)
                r_lo, _, _ = resid(lo)
            else:
                if (r_lo < 0.0).any():
                    raise BracketFailure("could not bracket the exit-time inverse")
            n_bisect = 13

        for _ in range(n_bisect):
            mid = 0.5 * (lo + hi)
            r, _, _ = resid(mid)
            high_side = r <= 0.0  # T(mid) <= target -> root is left of mid
            hi = np.where(high_side, mid, hi)
            lo = np.where(high_side, lo, mid)
        lx = 0.5 * (lo + hi)
        for _ in range(6):
            r, lw, D = resid(lx)
            high_side = r <= 0.0
            hi = np.where(high_side, lx, hi)
            lo = np.where(high_side, lo, lx)
            slope = self._dlnT_dlnxi(lx, ly, lw, lz, D)
            lx = np.clip(lx - r / slope, lo, hi)
        return np.exp(lx)


@lru_cache(maxsize=64)
def kernel_for(p: SaddleParams) -> ReductionKernel:
    """Cached kernel per parameter set (hashable frozen dataclass)."""
    return ReductionKernel(p)
