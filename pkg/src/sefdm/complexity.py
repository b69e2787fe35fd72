"""Analytic operation-count calculators for the detectors.

Worst-case (full tree expansion) real-operation counts for sphere decoding,
its block variant, and the FFT-based matched filter. All results are exact
Python integers: the sphere-decoding bound reaches ~2^523 multiplications at
256 subcarriers, far beyond any fixed-width type, so logarithms for plotting
are computed from the exact integers.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass


class ComplexityError(ValueError):
    """Invalid operand for an operation-count formula."""


@dataclass(frozen=True)
class OpCount:
    """Exact multiplication / addition counts."""

    multiplications: int
    additions: int

    def __post_init__(self):
        if self.multiplications < 0 or self.additions < 0:
            raise ComplexityError("operation counts must be nonnegative")


def sd_upper_bound_ops(n_subcarriers: int) -> OpCount:
    """Full-expansion sphere-decoding cost over the 2N-level binary tree:
    level n contributes 2^n nodes at 2n+1 multiplications and 2n-1 additions
    each."""
    if n_subcarriers < 1:
        raise ComplexityError("n_subcarriers must be >= 1")
    mults = 0
    adds = 0
    for n in range(1, 2 * n_subcarriers + 1):
        nodes = 1 << n
        mults += nodes * (2 * n + 1)
        adds += nodes * (2 * n - 1)
    return OpCount(mults, adds)


def multisd_upper_bound_ops(n_subcarriers: int, block_size: int) -> OpCount:
    """Block sphere decoding: N/N_B independent searches of block_size
    subcarriers each; linear in N at fixed block size."""
    if block_size < 1:
        raise ComplexityError("block_size must be >= 1")
    if n_subcarriers % block_size != 0:
        raise ComplexityError(
            f"n_subcarriers {n_subcarriers} not divisible by block size {block_size}"
        )
    per_block = sd_upper_bound_ops(block_size)
    blocks = n_subcarriers // block_size
    return OpCount(blocks * per_block.multiplications, blocks * per_block.additions)


def fft_ops(n_points: int) -> OpCount:
    """Radix-2 FFT cost: (N/2) log2 N multiplications, N log2 N additions."""
    if n_points < 2 or n_points & (n_points - 1):
        raise ComplexityError(f"FFT size must be a power of two >= 2, got {n_points}")
    log2n = n_points.bit_length() - 1
    return OpCount((n_points // 2) * log2n, n_points * log2n)


def candidate_count(n_subcarriers: int) -> int:
    """Number of QPSK hypotheses an exhaustive detector must consider,
    4^N = 2^(2N); reported separately from the operation counts."""
    if n_subcarriers < 1:
        raise ComplexityError("n_subcarriers must be >= 1")
    return 1 << (2 * n_subcarriers)


def int_log2(value: int) -> float:
    """log2 of an arbitrarily large positive integer without overflow."""
    if value <= 0:
        raise ComplexityError("log2 requires a positive integer")
    bits = value.bit_length()
    if bits <= 53:
        return math.log2(value)
    shift = bits - 53
    return math.log2(value >> shift) + shift


def int_log10(value: int) -> float:
    return int_log2(value) * math.log10(2.0)


SWEEP_HEADER = (
    "N",
    "sd_mults_log2",
    "multisd_mults",
    "fft_mults",
    "sd_adds_log2",
    "multisd_adds",
    "fft_adds",
)


def complexity_sweep(n_list, block_size: int):
    """Tabulate the three calculators over a list of subcarrier counts.

    The sphere-decoding columns are log2 of the exact integers (they overflow
    any plottable scale otherwise); block and FFT columns are exact integers.
    Subcarrier counts that are not powers of two get FFT counts for the next
    power of two (the transform the matched filter would actually run).
    """
    rows = []
    for n in n_list:
        n = int(n)
        sd = sd_upper_bound_ops(n)
        multi = multisd_upper_bound_ops(n, block_size)
        fft_size = 1 << max(1, (n - 1).bit_length())
        fft = fft_ops(fft_size)
        rows.append(
            {
                "N": n,
                "sd_mults_log2": int_log2(sd.multiplications),
                "multisd_mults": multi.multiplications,
                "fft_mults": fft.multiplications,
                "sd_adds_log2": int_log2(sd.additions),
                "multisd_adds": multi.additions,
                "fft_adds": fft.additions,
            }
        )
    return rows


def write_sweep_csv(rows, path):
    with open(path, "w", newline="") as handle:
        writer = csv.DictWriter(handle, fieldnames=SWEEP_HEADER)
        writer.writeheader()
        for row in rows:
            writer.writerow(row)
