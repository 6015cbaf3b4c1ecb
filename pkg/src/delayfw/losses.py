"""Online loss streams: quadratic targets and multiclass softmax cross-entropy.

A stream holds one loss per round per agent (centralized runs are the
n_agents=1 case).  Algorithms only ever see single per-agent losses; the
network-average loss F_t and horizon sums needed for regret are computed
here from cached aggregates, post hoc.

Softmax decisions are vectors of length p*C read as C stacked class blocks
of length p; the score of class c on feature a is <x_c, a>.  Labels are
zero-based everywhere.
"""

from __future__ import annotations

import csv as _csv

import numpy as np


class QuadraticLoss:
    """f(x) = 0.5 * ||x - theta||^2."""

    kind = "quadratic"

    def __init__(self, theta):
        self.theta = np.asarray(theta, dtype=np.float64)
        if self.theta.ndim != 1:
            raise ValueError("theta must be a 1-D vector")

    @property
    def dim(self) -> int:
        return self.theta.size

    def _check(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        if x.shape != self.theta.shape:
            raise ValueError(f"x has shape {x.shape}, expected {self.theta.shape}")
        return x

    def value(self, x) -> float:
        x = self._check(x)
        return 0.5 * float(np.sum((x - self.theta) ** 2))

    def grad(self, x) -> np.ndarray:
        return self._check(x) - self.theta


class SoftmaxLoss:
    """Cross-entropy of a linear multiclass model summed over one batch.

    f(x) = sum_b [ logsumexp_c <x_c, a_b> - <x_{y_b}, a_b> ]
    """

    kind = "softmax_xent"

    def __init__(self, features, labels, n_classes: int):
        self.features = np.asarray(features, dtype=np.float64)
        self.labels = np.asarray(labels, dtype=np.int64)
        self.n_classes = int(n_classes)
        if self.features.ndim != 2 or self.features.shape[0] != self.labels.size:
            raise ValueError("features must be (batch, p) aligned with labels")
        if self.labels.size == 0:
            raise ValueError("empty batch")
        if self.labels.min() < 0 or self.labels.max() >= self.n_classes:
            raise ValueError(f"labels must lie in [0, {self.n_classes})")

    @property
    def p(self) -> int:
        return self.features.shape[1]

    @property
    def dim(self) -> int:
        return self.p * self.n_classes

    def _logits(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        if x.shape != (self.dim,):
            raise ValueError(f"x has shape {x.shape}, expected ({self.dim},)")
        return self.features @ x.reshape(self.n_classes, self.p).T  # (batch, C)

    def value(self, x) -> float:
        z = self._logits(x)
        zmax = z.max(axis=1, keepdims=True)
        lse = zmax[:, 0] + np.log(np.exp(z - zmax).sum(axis=1))
        picked = z[np.arange(z.shape[0]), self.labels]
        return float(np.sum(lse - picked))

    def grad(self, x) -> np.ndarray:
        z = self._logits(x)
        z -= z.max(axis=1, keepdims=True)
        probs = np.exp(z)
        probs /= probs.sum(axis=1, keepdims=True)
        probs[np.arange(z.shape[0]), self.labels] -= 1.0
        return (probs.T @ self.features).ravel()  # (C, p) flattened


class LossStream:
    """T losses for each of n agents, immutable after construction."""

    def __init__(self, per_agent):
        per_agent = tuple(tuple(seq) for seq in per_agent)
        if not per_agent or not per_agent[0]:
            raise ValueError("stream must hold at least one loss")
        T = len(per_agent[0])
        if any(len(seq) != T for seq in per_agent):
            raise ValueError("all agents need the same number of rounds")
        first = per_agent[0][0]
        for seq in per_agent:
            for f in seq:
                if f.kind != first.kind or f.dim != first.dim:
                    raise ValueError("mixed loss kinds or dimensions in one stream")
        self._per_agent = per_agent
        self.kind = first.kind
        self.dim = first.dim
        self._agg = None

    @property
    def n_agents(self) -> int:
        return len(self._per_agent)

    @property
    def T(self) -> int:
        return len(self._per_agent[0])

    def loss(self, agent: int, t: int):
        """Loss f^i_t for zero-based agent i, 1-based round t."""
        return self._per_agent[agent][t - 1]

    def average_value(self, x, t: int) -> float:
        """Network-average loss F_t(x) = (1/n) sum_i f^i_t(x)."""
        return sum(self.loss(i, t).value(x) for i in range(self.n_agents)) / self.n_agents

    # -- horizon aggregates (comparator / regret) ---------------------------

    def _aggregate(self):
        if self._agg is None:
            losses = [f for seq in self._per_agent for f in seq]
            if self.kind == "quadratic":
                thetas = np.array([f.theta for f in losses])
                self._agg = (
                    len(losses),
                    thetas.sum(axis=0),
                    float(np.sum(thetas**2)),
                )
            else:
                feats = np.concatenate([f.features for f in losses])
                labs = np.concatenate([f.labels for f in losses])
                self._agg = SoftmaxLoss(feats, labs, losses[0].n_classes)
        return self._agg

    def total_value(self, x) -> float:
        """sum_t F_t(x), the objective the comparator minimizes."""
        n = self.n_agents
        if self.kind == "quadratic":
            count, theta_sum, theta_sq = self._aggregate()
            x = np.asarray(x, dtype=np.float64)
            return (0.5 * count * float(x @ x) - float(theta_sum @ x) + 0.5 * theta_sq) / n
        return self._aggregate().value(x) / n

    def total_grad(self, x) -> np.ndarray:
        n = self.n_agents
        if self.kind == "quadratic":
            count, theta_sum, _ = self._aggregate()
            return (count * np.asarray(x, dtype=np.float64) - theta_sum) / n
        return self._aggregate().grad(x) / n


def estimate_constants(stream: LossStream, cset) -> tuple:
    """Conservative (G, beta) upper bounds for a stream over a set.

    quadratic:    G = D/2 + max_t ||theta_t - center||, beta = 1
    softmax_xent: G = sqrt(2) * max_t sum_b ||a_b||, beta = max_t sum_b ||a_b||^2
    """
    losses = [stream.loss(i, t) for i in range(stream.n_agents) for t in range(1, stream.T + 1)]
    if stream.kind == "quadratic":
        center = cset.centroid()
        far = max(float(np.linalg.norm(f.theta - center)) for f in losses)
        return cset.diameter() / 2.0 + far, 1.0
    G = max(float(np.linalg.norm(f.features, axis=1).sum()) for f in losses) * np.sqrt(2.0)
    beta = max(float(np.sum(f.features**2)) for f in losses)
    return G, beta


def synth_stream(seed, T: int, p: int, C: int, batch: int, n_agents: int = 1) -> LossStream:
    """Softmax stream from a seeded C-component Gaussian mixture.

    Component means are random unit vectors scaled to separation 3; every
    feature vector is rescaled to unit norm, so per-batch gradient-norm and
    smoothness bounds depend only on the batch size.  Labels are the mixture
    components.  Samples are dealt per (agent, round) from one flat draw.
    """
    if min(T, p, C, batch, n_agents) < 1:
        raise ValueError("T, p, C, batch, n_agents must all be >= 1")
    rng = np.random.default_rng(seed)
    means = rng.normal(size=(C, p))
    means *= 3.0 / np.linalg.norm(means, axis=1, keepdims=True)
    total = n_agents * T * batch
    labels = rng.integers(0, C, size=total)
    feats = means[labels] + rng.normal(size=(total, p))
    feats /= np.linalg.norm(feats, axis=1, keepdims=True)
    feats = feats.reshape(n_agents, T, batch, p)
    labels = labels.reshape(n_agents, T, batch)
    per_agent = [
        [SoftmaxLoss(feats[i, t], labels[i, t], C) for t in range(T)] for i in range(n_agents)
    ]
    return LossStream(per_agent)


def synth_quadratic_stream(seed, T: int, dim: int, n_agents: int = 1, scale: float = 1.0) -> LossStream:
    """Quadratic stream with i.i.d. Gaussian targets theta_t ~ N(0, scale^2 I)."""
    if min(T, dim, n_agents) < 1:
        raise ValueError("T, dim, n_agents must all be >= 1")
    rng = np.random.default_rng(seed)
    thetas = rng.normal(scale=scale, size=(n_agents, T, dim))
    return LossStream([[QuadraticLoss(thetas[i, t]) for t in range(T)] for i in range(n_agents)])


def csv_ingest(path, batch: int, T: int, n_agents: int = 1, n_classes: int | None = None) -> LossStream:
    """Build a softmax stream from a `label,f1,...,fp` CSV.

    Rows are consumed in file order and dealt round-robin to agents; each
    agent's rows are grouped into per-round batches.  When the file runs out
    before T rounds are filled, reading wraps to the first row.
    """
    if min(batch, T, n_agents) < 1:
        raise ValueError("batch, T, n_agents must all be >= 1")
    with open(path, newline="") as fh:
        rows = list(_csv.reader(fh))
    if len(rows) < 2:
        raise ValueError(f"{path}: need a header and at least one data row")
    width = len(rows[1])
    labels, feats = [], []
    for lineno, row in enumerate(rows[1:], start=2):
        if len(row) != width:
            raise ValueError(f"{path}:{lineno}: inconsistent width {len(row)} != {width}")
        try:
            lab = int(row[0])
            vec = [float(v) for v in row[1:]]
        except ValueError as e:
            raise ValueError(f"{path}:{lineno}: malformed row ({e})") from None
        if lab < 0:
            raise ValueError(f"{path}:{lineno}: negative label {lab}")
        labels.append(lab)
        feats.append(vec)
    labels = np.array(labels, dtype=np.int64)
    feats = np.array(feats, dtype=np.float64)
    C = int(labels.max()) + 1 if n_classes is None else int(n_classes)
    if labels.max() >= C:
        raise ValueError(f"{path}: label {labels.max()} outside 0..{C - 1}")
    total = n_agents * T * batch
    idx = np.arange(total) % labels.size  # wrap policy
    labels, feats = labels[idx], feats[idx]
    per_agent = []
    for i in range(n_agents):
        seq = []
        for t in range(T):
            # row j of the file goes to agent j % n_agents, in file order
            pick = (np.arange(batch) + t * batch) * n_agents + i
            seq.append(SoftmaxLoss(feats[pick], labels[pick], C))
        per_agent.append(seq)
    return LossStream(per_agent)
