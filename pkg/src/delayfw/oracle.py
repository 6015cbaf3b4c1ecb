"""Follow-the-perturbed-leader oracles for online linear optimization.

Each oracle answers linear-loss prediction queries by running the constraint
set's LMO on the perturbed accumulated feedback::

    v = argmin_v  zeta * <sum of feedback, v> + <noise, v>

with ``noise`` drawn once from Uniform[0,1]^m at construction.  Fixing the
perturbation keeps every run deterministic; claims about the *expected*
prediction over the noise distribution are checked through
:func:`ftpl_query_expected`.

The learning rate ``zeta`` is always supplied by the caller — the algorithm
layer tunes it from quantities (total delay, horizon) an oracle cannot see.
"""

from __future__ import annotations

import numpy as np

from .geometry import ConstraintSet

_MC_CHUNK = 16384


class FtplOracle:
    """One follow-the-perturbed-leader instance over a constraint set.

    Stores only the running sum of feedback vectors: predictions depend on
    history through that sum alone, so memory stays O(m) regardless of the
    number of rounds.

    Args:
        cset: feasible set supplying the LMO.
        zeta: positive learning rate.
        seed: integer seed or numpy Generator for the one-time noise draw.
    """

    def __init__(self, cset: ConstraintSet, zeta: float, seed):
        if not (np.isfinite(zeta) and zeta > 0):
            raise ValueError(f"zeta must be positive, got {zeta}")
        self.cset = cset
        self.zeta = float(zeta)
        self.noise = np.random.default_rng(seed).uniform(size=cset.dim)
        self.accum = np.zeros(cset.dim)
        self.feedback_count = 0

    def query(self) -> np.ndarray:
        """Current prediction; pure, identical between feedback calls."""
        return self.cset.lmo(self.zeta * self.accum + self.noise)

    def feedback(self, g) -> None:
        """Absorb one linear-loss gradient into the running sum."""
        g = np.asarray(g, dtype=np.float64)
        if g.shape != (self.cset.dim,):
            raise ValueError(f"feedback has shape {g.shape}, expected ({self.cset.dim},)")
        if not np.all(np.isfinite(g)):
            raise ValueError("non-finite entries in feedback")
        self.accum = self.accum + g
        self.feedback_count += 1


def ftpl_query_expected(cset: ConstraintSet, zeta: float, accum, samples: int, seed) -> np.ndarray:
    """Monte-Carlo estimate of the noise-averaged FTPL prediction.

    Averages ``lmo(zeta * accum + n)`` over ``samples`` independent
    Uniform[0,1]^m noise draws.  Deterministic given the seed; sampling is
    chunked so large sample counts stay within a bounded memory footprint.
    """
    if samples < 1:
        raise ValueError(f"samples must be >= 1, got {samples}")
    accum = np.asarray(accum, dtype=np.float64)
    if accum.shape != (cset.dim,):
        raise ValueError(f"accum has shape {accum.shape}, expected ({cset.dim},)")
    rng = np.random.default_rng(seed)
    base = zeta * accum
    total = np.zeros(cset.dim)
    done = 0
    while done < samples:
        k = min(_MC_CHUNK, samples - done)
        noise = rng.uniform(size=(k, cset.dim))
        total += cset.lmo_batch(base[None, :] + noise).sum(axis=0)
        done += k
    return total / samples
