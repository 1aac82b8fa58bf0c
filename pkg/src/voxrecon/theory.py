"""Exact finite-table checks of GAN optimality with mismatched category marginals.

Both distributions are tables over ``(category, outcome)``: a category
marginal times per-category conditionals. Everything is computed with exact
finite sums in natural logarithms.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

LOG4 = np.log(4.0)


def _check_dist(p, axis=-1):
    p = np.asarray(p, dtype=np.float64)
    if (p < 0).any():
        raise ValueError("probabilities must be nonnegative")
    if not np.allclose(p.sum(axis=axis), 1.0, rtol=0.0, atol=1e-12):
        raise ValueError("probabilities must sum to 1")
    return p


@dataclass(frozen=True, eq=False)
class JointDist:
    """``joint[c, x] = marginal[c] * conditional[c, x]``."""

    marginal: np.ndarray
    conditional: np.ndarray

    def __post_init__(self):
        m = _check_dist(self.marginal)
        c = _check_dist(self.conditional, axis=1)
        if c.ndim != 2 or c.shape[0] != m.shape[0]:
            raise ValueError("conditional table must be categories x outcomes")
        object.__setattr__(self, "marginal", m)
        object.__setattr__(self, "conditional", c)

    @property
    def joint(self):
        return self.marginal[:, None] * self.conditional

    @classmethod
    def random(cls, rng, categories, outcomes, marginal=None):
        cond = rng.dirichlet(np.ones(outcomes), size=categories)
        if marginal is None:
            marginal = rng.dirichlet(np.ones(categories))
        return cls(np.asarray(marginal), cond)


def kl(p, q) -> float:
    p = np.asarray(p, dtype=np.float64).ravel()
    q = np.asarray(q, dtype=np.float64).ravel()
    s = p > 0
    if (q[s] == 0).any():
        return float("inf")
    return float(np.sum(p[s] * np.log(p[s] / q[s])))


def js(p, q) -> float:
    p = np.asarray(p, dtype=np.float64)
    q = np.asarray(q, dtype=np.float64)
    m = 0.5 * (p + q)
    return 0.5 * kl(p, m) + 0.5 * kl(q, m)


def optimal_disc(p_joint: JointDist, q_joint: JointDist):
    """Table of ``p / (p + q)`` per cell; cells where both joints vanish are NaN."""
    p, q = p_joint.joint, q_joint.joint
    den = p + q
    with np.errstate(invalid="ignore", divide="ignore"):
        return np.where(den > 0, p / den, np.nan)


def criterion(p_joint: JointDist, q_joint: JointDist) -> float:
    """Value of the GAN objective at the optimal discriminator."""
    p, q = p_joint.joint, q_joint.joint
    d = optimal_disc(p_joint, q_joint)
    sp = p > 0
    sq = q > 0
    return float(np.sum(p[sp] * np.log(d[sp])) + np.sum(q[sq] * np.log(1.0 - d[sq])))


def global_min_value(p_marginal, q_marginal) -> float:
    return -LOG4 + 2.0 * js(p_marginal, q_marginal)


@dataclass
class GlobalMinReport:
    gaps: list = field(default_factory=list)
    matched: list = field(default_factory=list)
    violations: list = field(default_factory=list)

    @property
    def min_gap(self):
        return min(self.gaps) if self.gaps else float("nan")

    @property
    def passed(self):
        return not self.violations

    def lines(self):
        out = [f"trial={k} gap={g:.6e} matched={int(m)}"
               for k, (g, m) in enumerate(zip(self.gaps, self.matched))]
        out.append(f"min_gap={self.min_gap:.6e}")
        out.append(f"violations={len(self.violations)}")
        out.append("PASS" if self.passed else "FAIL")
        return out


def verify_global_min(p_joint: JointDist, trials: int, rng=None, q_marginal=None,
                      match_prob=0.0) -> GlobalMinReport:
    """Randomized check that ``criterion >= -log 4 + 2 JS(p_c, q_c)`` with equality only at matched conditionals.

    Each trial draws q conditionals from a Dirichlet; with probability
    ``match_prob`` the trial instead copies p's conditionals to exercise the
    equality branch.
    """
    if trials < 1:
        raise ValueError("need at least one trial")
    rng = rng if rng is not None else np.random.default_rng(0)
    C, X = p_joint.conditional.shape
    q_c = np.asarray(q_marginal, dtype=np.float64) if q_marginal is not None else rng.dirichlet(np.ones(C))
    bound = global_min_value(p_joint.marginal, q_c)
    report = GlobalMinReport()
    for _ in range(trials):
        if rng.random() < match_prob:
            cond = p_joint.conditional.copy()
        else:
            cond = rng.dirichlet(np.ones(X), size=C)
        q = JointDist(q_c, cond)
        gap = criterion(p_joint, q) - bound
        # only categories carrying mass on both sides constrain the conditionals
        live = (p_joint.marginal > 0) & (q_c > 0)
        dist = np.abs(cond - p_joint.conditional).sum(axis=1)[live]
        matched = bool(dist.max() < 1e-6) if dist.size else True
        report.gaps.append(gap)
        report.matched.append(matched)
        if gap < -1e-10 or (matched and abs(gap) > 1e-9) or (not matched and gap <= 0.0):
            report.violations.append(q)
    return report
