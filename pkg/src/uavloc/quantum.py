"""Qubit-amplitude chromosome operators for the quantum-inspired solvers.

Each bit is an (alpha, beta) amplitude pair with alpha^2 + beta^2 = 1;
measuring yields 1 with probability beta^2.  The rotation gate steers the
amplitudes toward a recorded best bit vector; the NOT gate swaps the pair.
"""

import math

import numpy as np

_NORM_TOL = 1e-9


class QuantumChromosome:
    """Amplitude pairs for every intersection bit."""

    def __init__(self, alpha: np.ndarray, beta: np.ndarray):
        self.alpha = np.asarray(alpha, dtype=np.float64)
        self.beta = np.asarray(beta, dtype=np.float64)
        if self.alpha.shape != self.beta.shape:
            raise ValueError("alpha/beta length mismatch")
        self.check_normalized()

    @classmethod
    def uniform(cls, n_bits: int) -> "QuantumChromosome":
        a = np.full(n_bits, 1.0 / math.sqrt(2.0))
        return cls(a.copy(), a.copy())

    def copy(self) -> "QuantumChromosome":
        return QuantumChromosome(self.alpha.copy(), self.beta.copy())

    def __len__(self) -> int:
        return len(self.alpha)

    def check_normalized(self, tol: float = _NORM_TOL) -> None:
        err = np.abs(self.alpha**2 + self.beta**2 - 1.0)
        if float(err.max(initial=0.0)) > tol:
            raise ValueError(f"amplitudes not normalized (max error {float(err.max())})")


def measure(chromosome: QuantumChromosome, rng: np.random.Generator) -> np.ndarray:
    """Collapse each bit: 1 with probability beta^2, one draw per bit in order."""
    draws = rng.random(len(chromosome))
    return (draws < chromosome.beta**2).astype(np.int8)


def rotation_angle(
    fit_cur: float, fit_best: float, theta_min: float, theta_max: float
) -> float:
    """Fitness-scaled rotation step in [theta_min, theta_max].

    The gap is normalized by max(|fit|); fitness here is -Z <= 0, so the
    ratio stays in [0, 1] for same-sign pairs, and the result is clamped for
    arbitrary inputs.
    """
    denom = max(abs(fit_cur), abs(fit_best))
    if denom <= 0.0:
        return theta_min
    angle = theta_min + (theta_max - theta_min) * abs(fit_cur - fit_best) / denom
    return min(max(angle, theta_min), theta_max)


def rotate(
    chromosome: QuantumChromosome,
    best_bits: np.ndarray,
    angle: float,
    measured_bits: np.ndarray | None = None,
) -> QuantumChromosome:
    """Rotate amplitudes toward the best individual's bit values.

    The 2x2 rotation preserves normalization exactly; the sign per bit is
    the standard lookup rule collapsed to its sign component: move
    probability mass toward best_bits[i].  When the chromosome's last
    measurement is given, bits that already agreed with the best individual
    keep their amplitudes (the lookup's zero-angle entries), which preserves
    the population diversity of the classic gate.
    """
    a = chromosome.alpha.copy()
    b = chromosome.beta.copy()
    best = np.asarray(best_bits)
    same_sign = a * b >= 0.0
    toward_one = np.where(same_sign, 1.0, -1.0)
    sign = np.where(best == 1, toward_one, -toward_one)
    theta = sign * angle
    if measured_bits is not None:
        theta = np.where(np.asarray(measured_bits) == best, 0.0, theta)
    cos = np.cos(theta)
    sin = np.sin(theta)
    new_a = cos * a - sin * b
    new_b = sin * a + cos * b
    return QuantumChromosome(new_a, new_b)


def not_gate(chromosome: QuantumChromosome, positions) -> QuantumChromosome:
    """Swap (alpha, beta) at the listed positions; involutive and norm-exact."""
    a = chromosome.alpha.copy()
    b = chromosome.beta.copy()
    idx = np.asarray(list(positions), dtype=np.int64)
    a[idx], b[idx] = b[idx].copy(), a[idx].copy()
    return QuantumChromosome(a, b)
