"""Modular CMA-ES: configuration, strategy constants, and the step loop.

One module toggle per field of :class:`ModularConfig`; the twelve
single-module configurations studied by the tracing pipeline are listed
in :data:`VARIANTS`.  The implementation keeps the conventional state
variables (mean, step size, covariance, two evolution paths) and
re-eigendecomposes the covariance every generation, since the analysis
records the eigenvalue spectrum per generation.
"""

import logging
import math
from dataclasses import dataclass

import numpy as np

from .sampling import make_sampler, mirror_interleave, orthogonalize

__all__ = ["ModularConfig", "CMAES", "VARIANTS", "variant_config"]

logger = logging.getLogger(__name__)

_MIRRORED = ("off", "mirrored", "pairwise")
_WEIGHTS = ("default", "equal")
_STEP_RULES = ("csa", "msr", "tpa")
_SAMPLERS = ("gaussian", "halton", "sobol")


@dataclass
class ModularConfig:
    """Algorithm configuration: one field per module toggle.

    ``lambda_`` and ``mu`` default to 4 + floor(3 ln dim) and
    lambda // 2 when left as None.
    """

    dim: int
    active: bool = False
    elitist: bool = False
    mirrored: str = "off"
    orthogonal: bool = False
    weights: str = "default"
    step_size_rule: str = "csa"
    base_sampler: str = "gaussian"
    threshold_convergence: bool = False
    lambda_: int | None = None
    mu: int | None = None
    sigma0: float = 2.0
    budget_generations: int = 500

    def __post_init__(self):
        if not isinstance(self.dim, (int, np.integer)) or self.dim < 2:
            raise ValueError(f"dim must be an integer >= 2, got {self.dim}")
        if self.mirrored not in _MIRRORED:
            raise ValueError(f"mirrored must be one of {_MIRRORED}, got {self.mirrored!r}")
        if self.weights not in _WEIGHTS:
            raise ValueError(f"weights must be one of {_WEIGHTS}, got {self.weights!r}")
        if self.step_size_rule not in _STEP_RULES:
            raise ValueError(
                f"step_size_rule must be one of {_STEP_RULES}, got {self.step_size_rule!r}"
            )
        if self.base_sampler not in _SAMPLERS:
            raise ValueError(
                f"base_sampler must be one of {_SAMPLERS}, got {self.base_sampler!r}"
            )
        if self.lambda_ is None:
            self.lambda_ = 4 + int(3 * math.log(self.dim))
        self.lambda_ = int(self.lambda_)
        if self.lambda_ < 4:
            raise ValueError(f"lambda_ must be >= 4, got {self.lambda_}")
        if self.mirrored == "pairwise" and self.lambda_ % 2:
            raise ValueError("pairwise mirrored selection requires an even lambda_")
        if self.mu is None:
            self.mu = self.lambda_ // 2
        self.mu = int(self.mu)
        if not 1 <= self.mu <= self.lambda_:
            raise ValueError(f"mu must be in 1..lambda_, got {self.mu}")
        if self.mirrored == "pairwise" and self.mu > self.lambda_ // 2:
            raise ValueError("pairwise selection keeps lambda_/2 candidates; mu is too large")
        if self.step_size_rule == "tpa":
            pool = self.lambda_ - 2
            if self.mu > pool:
                raise ValueError(
                    "tpa reserves 2 of lambda_ for its probes; mu exceeds the rest"
                )
            if self.mirrored == "pairwise" and self.mu > pool // 2:
                raise ValueError(
                    "tpa with pairwise selection keeps (lambda_-2)/2 candidates; "
                    "mu is too large"
                )
        if not self.sigma0 > 0:
            raise ValueError(f"sigma0 must be positive, got {self.sigma0}")
        if int(self.budget_generations) < 1:
            raise ValueError("budget_generations must be >= 1")
        self.budget_generations = int(self.budget_generations)


# The twelve single-module configurations, in their conventional order.
VARIANTS = {
    "standard": {},
    "active": {"active": True},
    "mirrored": {"mirrored": "mirrored"},
    "pairwise": {"mirrored": "pairwise"},
    "orthogonal": {"orthogonal": True},
    "elitist": {"elitist": True},
    "equal_weights": {"weights": "equal"},
    "msr": {"step_size_rule": "msr"},
    "tpa": {"step_size_rule": "tpa"},
    "halton": {"base_sampler": "halton"},
    "sobol": {"base_sampler": "sobol"},
    "threshold": {"threshold_convergence": True},
}


def variant_config(name, dim, **overrides):
    """Config for one of the named variants at the given dimension."""
    if name not in VARIANTS:
        raise ValueError(f"unknown variant {name!r}; choose from {list(VARIANTS)}")
    return ModularConfig(dim=dim, **{**VARIANTS[name], **overrides})


def _strategy_weights(config):
    """Positive recombination weights, their negative mirror, and mueff."""
    mu, lam = config.mu, config.lambda_
    if config.weights == "equal":
        w = np.full(mu, 1.0 / mu)
    else:
        w = np.log(mu + 0.5) - np.log(np.arange(1, mu + 1))
        w = w / w.sum()
    mueff = float(w.sum() ** 2 / np.sum(w ** 2))
    return w, mueff


class CMAES:
    """State and operations of one optimizer run.

    Parameters
    ----------
    config : ModularConfig
        Module toggles and population sizes.
    seed : int or numpy Generator
        Run seed; drives the base sampler (including the start offset
        of quasi-random sequences) and nothing else.

    Attributes (after construction)
    -------------------------------
    m, sigma, C : ndarray, float, ndarray
        Distribution mean, step size, covariance.
    B, D : ndarray
        Eigenbasis and eigenvalue square roots of C, refreshed every
        generation.
    p_sigma, p_c : ndarray
        Conjugate and covariance evolution paths.
    f_best : float
        Best objective value seen so far (inf before any evaluation).
    repair_count : int
        Number of generations in which covariance repair triggered.
    """

    def __init__(self, config, seed=None):
        self.config = config
        d = config.dim
        self.rng = np.random.default_rng(seed)
        self.sampler = make_sampler(config.base_sampler, d, self.rng)

        self.weights, self.mueff = _strategy_weights(config)
        mueff = self.mueff
        self.c_c = (4.0 + mueff / d) / (d + 4.0 + 2.0 * mueff / d)
        self.c_1 = 2.0 / ((d + 1.3) ** 2 + mueff)
        self.c_mu = min(
            1.0 - self.c_1,
            2.0 * (mueff - 2.0 + 1.0 / mueff) / ((d + 2.0) ** 2 + mueff),
        )
        if config.step_size_rule == "csa":
            self.c_sigma = (mueff + 2.0) / (d + mueff + 5.0)
        else:
            self.c_sigma = 0.3
        self.d_sigma = (
            1.0 + 2.0 * max(0.0, math.sqrt((mueff - 1.0) / (d + 1.0)) - 1.0) + self.c_sigma
        )
        self.d_s = 2.0 - 2.0 / d  # damping of the success-rule statistic
        self.chi_n = math.sqrt(d) * (1.0 - 1.0 / (4.0 * d) + 1.0 / (21.0 * d * d))
        # negative weights: positive weights mirrored onto the worst mu,
        # scaled by the standard safeguards (mueff of the mirror equals
        # mueff of the positives)
        alpha_mu = 1.0 + self.c_1 / self.c_mu
        alpha_mueff = 1.0 + 2.0 * mueff / (mueff + 2.0)
        alpha_posdef = (1.0 - self.c_1 - self.c_mu) / (d * self.c_mu)
        self.neg_scale = min(alpha_mu, alpha_mueff, alpha_posdef)

        self.m = np.zeros(d)
        self.sigma = float(config.sigma0)
        self.C = np.eye(d)
        self.B = np.eye(d)
        self.D = np.ones(d)
        self.inv_sqrt_C = np.eye(d)
        self.p_sigma = np.zeros(d)
        self.p_c = np.zeros(d)
        self.s = 0.0  # cumulated statistic for msr / tpa
        self.generation = 0
        self.evaluations = 0
        self.f_best = math.inf
        self.repair_count = 0
        self.prev_shift = None  # (m - m_old) / sigma of the previous generation
        self.prev_fitnesses = None  # ascending offspring fitnesses
        self._parents_x = None
        self._parents_f = None
        self.total_budget = config.lambda_ * config.budget_generations

    # -- sampling ----------------------------------------------------------

    def _threshold(self):
        # decaying minimum mutation length relative to the box diameter
        diameter = math.sqrt(self.config.dim) * 10.0
        remaining = max(0.0, self.total_budget - self.evaluations) / self.total_budget
        return 0.2 * diameter * remaining ** 0.995

    def sample_population(self):
        """Candidate batch for the current generation.

        Returns
        -------
        x : ndarray (lambda_, dim)
            Candidate solutions.
        y : ndarray (lambda_, dim)
            Mutation vectors, x = m + sigma * y.
        n_tpa : int
            Number of leading rows that are the two-point step-size
            probes (0 or 2).  The probes consume evaluations but feed
            only the step-size comparison, never selection.
        """
        cfg = self.config
        lam = cfg.lambda_
        use_tpa = cfg.step_size_rule == "tpa" and self.prev_shift is not None
        n_regular = lam - 2 if use_tpa else lam

        if cfg.mirrored != "off":
            n_base = (n_regular + 1) // 2
        else:
            n_base = n_regular
        z = self.sampler.draw(n_base)
        if cfg.orthogonal:
            z = orthogonalize(z)
        if cfg.mirrored != "off":
            z = mirror_interleave(z)[:n_regular]

        y = z @ (self.B * self.D).T
        if cfg.threshold_convergence:
            t = self._threshold()
            lengths = self.sigma * np.linalg.norm(y, axis=1)
            short = (lengths < t) & (lengths > 0)
            if np.any(short):
                # reflect short steps to length 2t - |step|
                factor = (2.0 * t - lengths[short]) / lengths[short]
                y[short] *= factor[:, None]

        if use_tpa:
            # symmetric probes along the previous mean shift, scaled to
            # the norm of a fresh pre-image draw
            direction = self.prev_shift / np.linalg.norm(self.prev_shift)
            length = np.linalg.norm(self.sampler.draw(1)[0])
            y_probe = length * direction
            y = np.vstack([y_probe, -y_probe, y])

        x = self.m + self.sigma * y
        return x, y, (2 if use_tpa else 0)

    # -- selection ---------------------------------------------------------

    def select_and_recombine(self, x, f):
        """Pick the mu parents and move the mean.

        Returns the index order of the full candidate pool (ascending
        fitness, offspring indices only) plus the selected parent
        matrix actually used for recombination.
        """
        cfg = self.config
        f = np.asarray(f, dtype=float)
        pool_x, pool_f = x, f
        if cfg.mirrored == "pairwise":
            # each adjacent pair contributes only its better member
            pairs = f.reshape(-1, 2)
            winner = np.argmin(pairs, axis=1)
            keep = 2 * np.arange(pairs.shape[0]) + winner
            pool_x, pool_f = x[keep], f[keep]
        if cfg.elitist and self._parents_x is not None:
            pool_x = np.vstack([pool_x, self._parents_x])
            pool_f = np.concatenate([pool_f, self._parents_f])

        order = np.argsort(pool_f, kind="stable")
        sel = order[: cfg.mu]
        parents_x = pool_x[sel]
        self._parents_x = parents_x.copy()
        self._parents_f = pool_f[sel].copy()
        m_new = self.weights @ parents_x
        return m_new, parents_x

    # -- adaptation --------------------------------------------------------

    def _update_sigma(self, f, tpa_f):
        cfg = self.config
        if cfg.step_size_rule == "csa":
            arg = (self.c_sigma / self.d_sigma) * (
                np.linalg.norm(self.p_sigma) / self.chi_n - 1.0
            )
            # cap the log change: on ridge topologies a collapsing sigma
            # can spike the path norm and overflow the exponential
            self.sigma *= math.exp(min(1.0, max(-1.0, arg)))
        elif cfg.step_size_rule == "msr":
            if self.prev_fitnesses is not None:
                # j-th best of the previous generation, j = floor(0.3 lambda)
                j = max(1, int(0.3 * cfg.lambda_))
                ref = self.prev_fitnesses[j - 1]
                k_succ = int(np.sum(f < ref))
                z = (2.0 / cfg.lambda_) * (k_succ - (cfg.lambda_ + 1) / 2.0)
                self.s = (1.0 - self.c_sigma) * self.s + self.c_sigma * z
                self.sigma *= math.exp(self.s / self.d_s)
        else:  # tpa
            if len(tpa_f):
                # growing sigma needs the forward probe strictly better;
                # ties count as failures, matching the msr convention
                signal = 0.5 if tpa_f[0] < tpa_f[1] else -0.5
                self.s = (1.0 - self.c_sigma) * self.s + self.c_sigma * signal
                self.sigma *= math.exp(self.s / self.d_sigma)

    def _update_covariance(self, x, f, parents_x, m_old, h_sig):
        cfg = self.config
        d = cfg.dim
        y_sel = (parents_x - m_old) / self.sigma
        rank_mu = (self.weights[:, None] * y_sel).T @ y_sel
        weight_sum = 1.0

        if cfg.active:
            worst = np.argsort(np.asarray(f), kind="stable")[-cfg.mu:]
            y_neg = (x[worst] - m_old) / self.sigma
            # worst candidate carries the largest mirrored weight
            w_neg = self.neg_scale * self.weights[::-1]
            norms = np.einsum("ij,ij->i", y_neg @ self.inv_sqrt_C.T, y_neg @ self.inv_sqrt_C.T)
            norms = np.maximum(norms, 1e-300)
            rank_mu = rank_mu - ((w_neg * d / norms)[:, None] * y_neg).T @ y_neg
            weight_sum -= self.neg_scale

        delta_h = (1.0 - h_sig) * self.c_c * (2.0 - self.c_c)
        self.C = (
            (1.0 + self.c_1 * delta_h - self.c_1 - self.c_mu * weight_sum) * self.C
            + self.c_1 * np.outer(self.p_c, self.p_c)
            + self.c_mu * rank_mu
        )
        self.C = (self.C + self.C.T) / 2.0

    def _refresh_eigensystem(self):
        vals, vecs = np.linalg.eigh(self.C)
        top = vals[-1]
        if top <= 0:
            logger.warning(
                "covariance lost positive definiteness entirely; resetting to identity"
            )
            self.C = np.eye(self.config.dim)
            vals = np.ones(self.config.dim)
            vecs = np.eye(self.config.dim)
            self.repair_count += 1
        else:
            floor = 1e-20 * top
            if vals[0] < floor:
                logger.debug(
                    "flooring %d degenerate eigenvalue(s) at generation %d",
                    int(np.sum(vals < floor)),
                    self.generation,
                )
                vals = np.maximum(vals, floor)
                self.C = (vecs * vals) @ vecs.T
                self.C = (self.C + self.C.T) / 2.0
                self.repair_count += 1
        self.B = vecs
        self.D = np.sqrt(vals)
        self.inv_sqrt_C = (vecs / self.D) @ vecs.T

    def adapt(self, x, f, m_new, parents_x, tpa_f):
        """Path, covariance, and step-size updates after selection.

        ``x`` and ``f`` are the selection pool only; the two-point
        probes appear solely in ``tpa_f`` (empty when inactive).
        """
        cfg = self.config
        m_old = self.m
        dm = (m_new - m_old) / self.sigma

        self.p_sigma = (1.0 - self.c_sigma) * self.p_sigma + math.sqrt(
            self.c_sigma * (2.0 - self.c_sigma) * self.mueff
        ) * (self.inv_sqrt_C @ dm)
        expected = math.sqrt(
            1.0 - (1.0 - self.c_sigma) ** (2.0 * (self.generation + 1))
        )
        h_sig = float(
            np.linalg.norm(self.p_sigma) / expected
            < (1.4 + 2.0 / (cfg.dim + 1.0)) * self.chi_n
        )
        self.p_c = (1.0 - self.c_c) * self.p_c + h_sig * math.sqrt(
            self.c_c * (2.0 - self.c_c) * self.mueff
        ) * dm

        self._update_covariance(x, f, parents_x, m_old, h_sig)
        self._update_sigma(f, tpa_f)
        self._refresh_eigensystem()

        self.m = m_new
        self.prev_shift = dm if np.linalg.norm(dm) > 0 else self.prev_shift
        self.prev_fitnesses = np.sort(np.asarray(f, dtype=float))

    # -- the generation loop -----------------------------------------------

    def step(self, problem):
        """Run one full generation against ``problem``.

        The two-point probes spend two of the generation's lambda
        evaluations but only feed the step-size comparison; selection
        and covariance adaptation see the remaining offspring.
        """
        x, _, n_tpa = self.sample_population()
        f = np.asarray(problem.evaluate(x), dtype=float)
        self.evaluations += len(f)
        self.f_best = min(self.f_best, float(f.min()))
        x_pool, f_pool = x[n_tpa:], f[n_tpa:]
        m_new, parents_x = self.select_and_recombine(x_pool, f_pool)
        self.adapt(x_pool, f_pool, m_new, parents_x, f[:n_tpa])
        self.generation += 1
        return float(f.min())

    def run(self, problem, generations=None):
        """Run ``generations`` steps (default: the configured budget)."""
        n = self.config.budget_generations if generations is None else int(generations)
        for _ in range(n):
            self.step(problem)
        return self
