"""The generator Z = sqrt(lambda_bar) * (z_1 + ... + z_L) from k-wise blocks.

Parameter selection couples the pieces: lambda_bar = c_lambda * (eps/d)^e
with L = ceil(1/lambda_bar) and lambda_bar renormalized to exactly 1/L so the
sum has unit per-coordinate variance; k_indep = k_mult * d covers every
moment-matching requirement used downstream (k_indep >= 4*d*T at the
defaults); M is the per-word bit width of the discretized uniforms.

Two couplings for lambda_bar are provided:

* ``prg``          - the generator default, lambda_bar = (eps/d)^lambda_exp.
* ``analysis`` - the far smaller scale required by the local
  hyperconcentration bound lambda <= c * eps' * beta / (R d^{9/2}) with
  eps' the diagonal-check threshold; the grid statistics remain exactly
  computable at this scale, and the mollification-error experiment runs here.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import kwise
from .seeding import substream

__all__ = ["PrgParams", "PrgSample", "choose_params", "generate",
           "generate_batch", "replacement_hybrid", "replacement_hybrid_batch"]

M_CAP = 32  # keeps the vectorized GF path on table/uint64 arithmetic


@dataclass
class PrgParams:
    n: int
    d: int
    eps: float
    lambda_bar: float
    L: int
    k_indep: int
    M: int
    R_bar: float
    T: int
    D: int
    lambda_hat: float
    delta_horz: float
    delta_anal: float
    K: int
    lambda_exp: float
    c_lambda: float
    k_mult: int
    coupling: str
    M_formula: int
    theoretical_seed_length: int

    def block_spec(self) -> kwise.KWiseSpec:
        return kwise.KWiseSpec(k=self.k_indep, n=self.n, M=self.M)

    def seed_bits_per_sample(self) -> int:
        return self.L * kwise.gaussian_seed_length(self.block_spec())

    def describe(self) -> dict:
        d = {k: getattr(self, k) for k in (
            "n", "d", "eps", "lambda_bar", "L", "k_indep", "M", "R_bar", "T",
            "D", "lambda_hat", "delta_horz", "delta_anal", "K", "lambda_exp",
            "c_lambda", "k_mult", "coupling", "M_formula",
            "theoretical_seed_length")}
        d["seed_bits_per_sample"] = self.seed_bits_per_sample()
        return d


@dataclass
class PrgSample:
    z: np.ndarray
    seed_bits_used: int


def lambda_hat_from(lambda_bar, eps, d, T):
    """Diagonal-check threshold: (T d)^{2T} * lh^{T/2} = lambda_bar * eps."""
    return (lambda_bar * eps / float(T * d) ** (2 * T)) ** (2.0 / T)


def analysis_zoom_scale(eps, d, T, R_bar, c_couple):
    """Largest lambda_bar with lambda_bar <= c * lambda_hat * beta / (R d^{9/2}),
    beta = eps/(8d): the self-consistent solution of the coupled system."""
    beta = eps / (8.0 * d)
    return (c_couple * beta / (R_bar * d**4.5 * float(T * d) ** T)) ** 2 * eps


def choose_params(n, d, eps, *, lambda_exp=4.0, c_lambda=1.0, k_mult=16,
                  M=None, R_bar=91.0, K=100, T=4, coupling="prg",
                  c_couple=1e-3) -> PrgParams:
    """Resolve the full parameter tuple from (n, d, eps) plus overrides."""
    if n < 1 or d < 1:
        raise ValueError("n and d must be >= 1")
    if not 0.0 < eps < 1.0:
        raise ValueError(f"eps {eps} outside (0, 1)")
    lam = c_lambda * (eps / d) ** lambda_exp
    if coupling == "analysis":
        lam = min(lam, analysis_zoom_scale(eps, d, T, R_bar, c_couple))
    elif coupling != "prg":
        raise ValueError(f"unknown coupling {coupling!r}")
    if lam <= 0.0 or not math.isfinite(1.0 / lam):
        raise ValueError("lambda_bar underflowed; parameters too extreme")
    L = max(1, math.ceil(1.0 / lam))
    if coupling == "prg" and L > 2**63:
        raise ValueError(f"L = {L} blocks overflows a 64-bit count")
    lam = 1.0 / L  # renormalize so the block sum has unit variance exactly

    M_formula = 2 * math.ceil(3 * d * math.log2(d * L * n / eps))
    if M is None:
        M = min(max(M_formula, 2), M_CAP)
    if M < 2 or M % 2:
        raise ValueError("M must be even and >= 2")

    k_indep = k_mult * d
    if k_indep < 4 * d * T:
        raise ValueError(f"k_indep = {k_indep} below the moment requirement {4 * d * T}")

    D = (2 * d + 1) ** 2
    lh = lambda_hat_from(lam, eps, d, T)
    seedlen = k_indep * L * d * math.ceil(math.log2(d * L * n / eps))
    return PrgParams(
        n=n, d=d, eps=eps, lambda_bar=lam, L=L, k_indep=k_indep, M=M,
        R_bar=R_bar, T=T, D=D, lambda_hat=lh,
        delta_horz=1.0 / (K * d * D), delta_anal=1.0 / (100.0 * d * D),
        K=K, lambda_exp=lambda_exp, c_lambda=c_lambda, k_mult=k_mult,
        coupling=coupling, M_formula=M_formula,
        theoretical_seed_length=seedlen,
    )


def _block_coeffs(params: PrgParams, master_seed, t, count):
    """Coefficient words for block t: (count, 2*k_indep) uints below 2^m."""
    wspec = kwise.gaussian_word_spec(params.block_spec())
    m = kwise.field_width(wspec)
    dtype = np.uint16 if m <= 16 else np.uint32 if m <= 32 else np.uint64
    gen = substream(master_seed, "block", t)
    return gen.integers(0, 1 << m, size=(count, wspec.k), dtype=dtype)


def generate(params: PrgParams, master_seed) -> PrgSample:
    """One sample of Z, deterministic given the master seed."""
    z = generate_batch(params, master_seed, 1)[0]
    return PrgSample(z=z, seed_bits_used=params.seed_bits_per_sample())


def generate_batch(params: PrgParams, master_seed, count) -> np.ndarray:
    """(count, n) samples of Z; block b of every sample shares stream b."""
    if params.L > 10**7:
        raise ValueError(f"L = {params.L} blocks is not generatable; "
                         "statistics-only parameter sets cannot be sampled")
    spec = params.block_spec()
    acc = np.zeros((count, params.n))
    for t in range(params.L):
        coeffs = _block_coeffs(params, master_seed, t, count)
        acc += kwise.kwise_gaussian_batch(coeffs, spec)
    return math.sqrt(params.lambda_bar) * acc


def replacement_hybrid(params: PrgParams, t, master_seed) -> np.ndarray:
    """Hybrid w_t: first t blocks fully Gaussian, the rest k-wise.

    t = 0 reproduces generate() for the same master seed; t = L is a pure
    Gaussian sample (from a conventional high-quality generator).
    """
    return replacement_hybrid_batch(params, t, master_seed, 1)[0]


def replacement_hybrid_batch(params: PrgParams, t, master_seed, count) -> np.ndarray:
    if not 0 <= t <= params.L:
        raise ValueError(f"hybrid index {t} outside [0, {params.L}]")
    spec = params.block_spec()
    acc = np.zeros((count, params.n))
    for b in range(params.L):
        if b < t:
            gen = substream(master_seed, "hybrid-gauss", b)
            acc += gen.standard_normal((count, params.n))
        else:
            coeffs = _block_coeffs(params, master_seed, b, count)
            acc += kwise.kwise_gaussian_batch(coeffs, spec)
    return math.sqrt(params.lambda_bar) * acc
