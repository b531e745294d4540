"""The 24 noiseless BBOB test problems with seeded instance transforms.

Every problem is minimized over the box [-5, 5]^dim.  An instance is
specified by ``(fid, dim, transform_seed)``: the optimum location, the
optimum value and all rotation matrices are drawn from a dedicated
`numpy` Generator seeded with exactly that triple, so instances are
reproducible across processes and platforms.  The historical uniform /
Box-Muller streams of the original suite are deliberately not
replicated; the structural conventions are:

* ``x_opt`` uniform in [-4, 4]^dim, rounded to 4 decimals, exact zeros
  replaced by -1e-5 (functions with special optima override this),
* ``f_opt`` Cauchy-like, round(1e4 * g1 / g2) / 100 clamped to
  [-1000, 1000] with g1, g2 unit normal draws,
* rotation matrices via QR of a square unit-normal matrix with the
  positive-diagonal sign convention.

Draw order inside a builder is fixed (x_opt draws first, rotations
next, auxiliary arrays last) and must not be reordered; it is part of
the reproducibility contract.
"""

import numpy as np

__all__ = ["ProblemInstance", "make_problem", "FUNCTION_IDS", "LOWER_BOUND", "UPPER_BOUND"]

FUNCTION_IDS = tuple(range(1, 25))
LOWER_BOUND = -5.0
UPPER_BOUND = 5.0


# ---------------------------------------------------------------------------
# shared transforms


def _oscillate(f):
    """Monotone oscillation transform, applied elementwise.

    Maps 0 to 0 and preserves sign; used both on coordinate vectors and
    on scalar function values.
    """
    f = np.asarray(f, dtype=float)
    g = f.copy()
    idx = f > 0
    g[idx] = np.log(f[idx]) / 0.1
    g[idx] = np.exp(g[idx] + 0.49 * (np.sin(g[idx]) + np.sin(0.79 * g[idx]))) ** 0.1
    idx = f < 0
    g[idx] = np.log(-f[idx]) / 0.1
    g[idx] = -np.exp(g[idx] + 0.49 * (np.sin(0.55 * g[idx]) + np.sin(0.31 * g[idx]))) ** 0.1
    return g


def _asymmetrize(x, beta):
    """Raise positive entries to a coordinate-dependent power > 1.

    ``x`` is a (n, dim) batch; exponents grow linearly from 1 to
    1 + beta * sqrt(x) along the coordinate axis.
    """
    dim = x.shape[-1]
    expo = beta * np.linspace(0, 1, dim)
    out = x.copy()
    idx = x > 0
    out[idx] = x[idx] ** (1 + np.broadcast_to(expo, x.shape)[idx] * np.sqrt(x[idx]))
    return out


def _boundary_penalty(x, fac):
    """fac * sum(max(0, |x_i| - 5)^2), the standard out-of-box penalty."""
    xout = np.maximum(0.0, np.abs(x) - 5.0)
    return fac * np.sum(xout ** 2, axis=-1)


def _rotation(rng, dim):
    # QR of a unit-normal matrix; the sign fix makes the factorization
    # unique, hence the draw deterministic given the Generator state.
    a = rng.standard_normal((dim, dim))
    q, r = np.linalg.qr(a)
    return q * np.sign(np.diagonal(r))


def _draw_x_opt(rng, dim):
    x_opt = np.round(rng.uniform(-4.0, 4.0, dim), 4)
    x_opt[x_opt == 0.0] = -1e-5
    return x_opt


def _draw_f_opt(rng):
    g1, g2 = rng.standard_normal(2)
    return float(min(1000.0, max(-1000.0, np.round(1e4 * g1 / g2) / 100.0)))


def _scales(condition, dim, power=0.5):
    return (condition ** power) ** np.linspace(0, 1, dim)


# ---------------------------------------------------------------------------
# per-function builders
#
# Each builder receives (rng, dim, osc) and returns (core, x_opt) where
# core maps a (n, dim) batch to the (n,) raw value, boundary penalty
# included, optimum value 0.  ``osc`` False disables the oscillation
# transform (testing hook); builders without oscillation ignore it.


def _build_f1(rng, dim, osc):
    x_opt = _draw_x_opt(rng, dim)

    def core(x):
        z = x - x_opt
        return np.sum(z ** 2, axis=-1)

    return core, x_opt


def _build_f2(rng, dim, osc):
    x_opt = _draw_x_opt(rng, dim)
    scales = 1e6 ** np.linspace(0, 1, dim)

    def core(x):
        z = x - x_opt
        if osc:
            z = _oscillate(z)
        return z ** 2 @ scales

    return core, x_opt


def _build_f3(rng, dim, osc):
    x_opt = _draw_x_opt(rng, dim)
    scales = _scales(10.0, dim)

    def core(x):
        z = x - x_opt
        if osc:
            z = _oscillate(z)
        z = scales * _asymmetrize(z, 0.2)
        return 10.0 * (dim - np.sum(np.cos(2 * np.pi * z), axis=-1)) + np.sum(z ** 2, axis=-1)

    return core, x_opt


def _build_f4(rng, dim, osc):
    # Bueche-Rastrigin: even-index coordinates of the optimum forced
    # positive; those coordinates get a x100 skew when positive.
    x_opt = _draw_x_opt(rng, dim)
    x_opt[::2] = np.abs(x_opt[::2])
    scales = _scales(10.0, dim)

    def core(x):
        pen = _boundary_penalty(x, 100.0)
        z = x - x_opt
        if osc:
            z = _oscillate(z)
        skew = z[..., ::2]
        skew[skew > 0] = np.sqrt(100.0) * skew[skew > 0]
        z = scales * z
        raw = 10.0 * (dim - np.sum(np.cos(2 * np.pi * z), axis=-1)) + np.sum(z ** 2, axis=-1)
        return raw + pen

    return core, x_opt


def _build_f5(rng, dim, osc):
    x_opt = 5.0 * np.sign(_draw_x_opt(rng, dim))
    slopes = -np.sign(x_opt) * _scales(100.0, dim)

    def core(x):
        x = np.array(x, dtype=float)
        # coordinates past the optimal face are clamped back onto it
        out = (x * x_opt) > 25.0
        x[out] = np.sign(x[out]) * 5.0
        # summed per coordinate: slopes_i * (x_i - x_opt_i) >= 0 holds
        # exactly in floats, so the total never dips below the face
        # value the way a dot-plus-offset arrangement can
        return np.sum(slopes * (x - x_opt), axis=-1)

    return core, x_opt


def _build_f6(rng, dim, osc):
    x_opt = _draw_x_opt(rng, dim)
    rotation = _rotation(rng, dim)
    linear_tf = _rotation(rng, dim) @ np.diag(_scales(10.0, dim)) @ rotation

    def core(x):
        z = (x - x_opt) @ linear_tf
        idx = (z * x_opt) > 0
        z[idx] = 100.0 * z[idx]
        s = np.sum(z ** 2, axis=-1)
        if osc:
            s = _oscillate(s)
        return np.asarray(s) ** 0.9

    return core, x_opt


def _build_f7(rng, dim, osc):
    x_opt = _draw_x_opt(rng, dim)
    rotation = _rotation(rng, dim)
    linear_tf = _rotation(rng, dim) @ np.diag(_scales(10.0, dim))
    scales = 100.0 ** np.linspace(0, 1, dim)

    def core(x):
        pen = _boundary_penalty(x, 1.0)
        z = (x - x_opt) @ linear_tf
        z1 = np.abs(z[..., 0])
        big = np.abs(z) > 0.5
        z[big] = np.round(z[big])
        z[~big] = np.round(10.0 * z[~big]) / 10.0
        z = z @ rotation
        return 0.1 * np.maximum(1e-4 * z1, z ** 2 @ scales) + pen

    return core, x_opt


def _rosenbrock(z):
    return 100.0 * np.sum((z[..., :-1] ** 2 - z[..., 1:]) ** 2, axis=-1) + np.sum(
        (z[..., :-1] - 1.0) ** 2, axis=-1
    )


def _build_f8(rng, dim, osc):
    x_opt = 0.75 * _draw_x_opt(rng, dim)
    scale = max(1.0, np.sqrt(dim) / 8.0)

    def core(x):
        z = scale * (x - x_opt) + 1.0
        return _rosenbrock(z)

    return core, x_opt


def _build_f9(rng, dim, osc):
    scale = max(1.0, np.sqrt(dim) / 8.0)
    linear_tf = scale * _rotation(rng, dim)
    # choose x_opt so that the affine image of the optimum is all-ones
    x_opt = 0.5 * linear_tf.sum(axis=1) / scale ** 2

    def core(x):
        z = x @ linear_tf + 0.5
        return _rosenbrock(z)

    return core, x_opt


def _build_f10(rng, dim, osc):
    x_opt = _draw_x_opt(rng, dim)
    rotation = _rotation(rng, dim)
    scales = 1e6 ** np.linspace(0, 1, dim)

    def core(x):
        z = (x - x_opt) @ rotation
        if osc:
            z = _oscillate(z)
        return z ** 2 @ scales

    return core, x_opt


def _build_f11(rng, dim, osc):
    x_opt = _draw_x_opt(rng, dim)
    rotation = _rotation(rng, dim)

    def core(x):
        z = (x - x_opt) @ rotation
        if osc:
            z = _oscillate(z)
        return np.sum(z ** 2, axis=-1) + (1e6 - 1.0) * z[..., 0] ** 2

    return core, x_opt


def _build_f12(rng, dim, osc):
    x_opt = _draw_x_opt(rng, dim)
    rotation = _rotation(rng, dim)

    def core(x):
        z = (x - x_opt) @ rotation
        z = _asymmetrize(z, 0.5)
        z = z @ rotation
        return 1e6 * np.sum(z ** 2, axis=-1) + (1.0 - 1e6) * z[..., 0] ** 2

    return core, x_opt


def _build_f13(rng, dim, osc):
    x_opt = _draw_x_opt(rng, dim)
    rotation = _rotation(rng, dim)
    linear_tf = _rotation(rng, dim) @ np.diag(_scales(10.0, dim)) @ rotation

    def core(x):
        z = (x - x_opt) @ linear_tf
        return z[..., 0] ** 2 + 100.0 * np.sqrt(np.sum(z[..., 1:] ** 2, axis=-1))

    return core, x_opt


def _build_f14(rng, dim, osc):
    x_opt = _draw_x_opt(rng, dim)
    rotation = _rotation(rng, dim)
    expo = 2.0 + 4.0 * np.linspace(0, 1, dim)

    def core(x):
        z = (x - x_opt) @ rotation
        return np.sqrt(np.sum(np.abs(z) ** expo, axis=-1))

    return core, x_opt


def _build_f15(rng, dim, osc):
    x_opt = _draw_x_opt(rng, dim)
    rotation = _rotation(rng, dim)
    linear_tf = _rotation(rng, dim) @ np.diag(_scales(10.0, dim)) @ rotation

    def core(x):
        z = (x - x_opt) @ rotation
        if osc:
            z = _oscillate(z)
        z = _asymmetrize(z, 0.2) @ linear_tf
        return 10.0 * (dim - np.sum(np.cos(2 * np.pi * z), axis=-1)) + np.sum(z ** 2, axis=-1)

    return core, x_opt


def _build_f16(rng, dim, osc):
    x_opt = _draw_x_opt(rng, dim)
    rotation = _rotation(rng, dim)
    linear_tf = _rotation(rng, dim) @ np.diag((1.0 / np.sqrt(100.0)) ** np.linspace(0, 1, dim)) @ rotation
    a_k = 0.5 ** np.arange(12)
    b_k = 3.0 ** np.arange(12)
    f0 = np.sum(a_k * np.cos(np.pi * b_k))  # value of the inner sum at 0

    def core(x):
        pen = _boundary_penalty(x, 10.0 / dim)
        z = (x - x_opt) @ rotation
        if osc:
            z = _oscillate(z)
        z = z @ linear_tf
        inner = np.sum(
            a_k * np.cos(2 * np.pi * b_k * (z[..., None] + 0.5)), axis=-1
        )
        raw = 10.0 * (np.sum(inner, axis=-1) / dim - f0) ** 3
        return raw + pen

    return core, x_opt


def _schaffers(rng, dim, condition):
    x_opt = _draw_x_opt(rng, dim)
    rotation = _rotation(rng, dim)
    linear_tf = _rotation(rng, dim) @ np.diag(_scales(condition, dim))

    def core(x):
        pen = _boundary_penalty(x, 10.0)
        z = (x - x_opt) @ rotation
        z = _asymmetrize(z, 0.5) @ linear_tf
        s = z[..., :-1] ** 2 + z[..., 1:] ** 2
        raw = np.mean(s ** 0.25 * (np.sin(50.0 * s ** 0.1) ** 2 + 1.0), axis=-1) ** 2
        return raw + pen

    return core, x_opt


def _build_f17(rng, dim, osc):
    return _schaffers(rng, dim, 10.0)


def _build_f18(rng, dim, osc):
    return _schaffers(rng, dim, 1000.0)


def _build_f19(rng, dim, osc):
    scale = max(1.0, np.sqrt(dim) / 8.0)
    linear_tf = scale * _rotation(rng, dim)
    x_opt = 0.5 * linear_tf.sum(axis=1) / scale ** 2

    def core(x):
        z = x @ linear_tf + 0.5
        f2 = 100.0 * (z[..., :-1] ** 2 - z[..., 1:]) ** 2 + (1.0 - z[..., :-1]) ** 2
        return 10.0 + 10.0 * np.sum(f2 / 4000.0 - np.cos(f2), axis=-1) / (dim - 1.0)

    return core, x_opt


def _build_f20(rng, dim, osc):
    x_opt = 0.5 * 4.2096874633 * np.sign(rng.uniform(-4.0, 4.0, dim))
    scales = _scales(10.0, dim)
    signs = np.sign(x_opt)
    shift = 2.0 * np.abs(x_opt)

    def core(x):
        z = 2.0 * signs * x
        z = np.atleast_2d(z).copy()
        z[:, 1:] = z[:, 1:] + 0.25 * (z[:, :-1] - shift[:-1])
        z = 100.0 * (scales * (z - shift) + shift)
        zout = np.maximum(0.0, np.abs(z) - 500.0)
        pen = 0.01 * np.sum(zout ** 2, axis=-1)
        raw = 0.01 * (418.9828872724339 - np.mean(z * np.sin(np.sqrt(np.abs(z))), axis=-1))
        out = raw + pen
        return out if x.ndim > 1 else out[0]

    return core, x_opt


def _gallagher(rng, dim, n_peaks, top_condition, fac2, osc):
    rotation = _rotation(rng, dim)
    conditions = 1000.0 ** np.linspace(0, 1, n_peaks - 1)
    conditions = np.insert(conditions[rng.permutation(n_peaks - 1)], 0, top_condition)
    inv_cov = np.empty((n_peaks, dim))
    for i, c in enumerate(conditions):
        s = c ** np.linspace(-0.5, 0.5, dim)
        inv_cov[i] = s[rng.permutation(dim)]
    peak_values = np.insert(np.linspace(1.1, 9.1, n_peaks - 1), 0, 10.0)
    local = fac2 * (10.0 * rng.uniform(size=(n_peaks, dim)) - 5.0) @ rotation
    local[0] *= 0.8  # keep the global optimum away from the boundary
    x_opt = local[0] @ rotation.T

    def core(x):
        pen = _boundary_penalty(x, 1.0)
        z = np.atleast_2d(x @ rotation)
        raw = np.empty(z.shape[0])
        for k in range(z.shape[0]):
            diff = z[k] - local
            w = peak_values * np.exp(-0.5 / dim * np.sum(inv_cov * diff ** 2, axis=-1))
            raw[k] = 10.0 - np.max(w)
        if osc:
            raw = _oscillate(raw)
        out = raw ** 2 + pen
        return out if x.ndim > 1 else out[0]

    return core, x_opt


def _build_f21(rng, dim, osc):
    return _gallagher(rng, dim, 101, np.sqrt(1000.0), 1.0, osc)


def _build_f22(rng, dim, osc):
    return _gallagher(rng, dim, 21, 1000.0, 0.98, osc)


def _build_f23(rng, dim, osc):
    x_opt = _draw_x_opt(rng, dim)
    rotation = _rotation(rng, dim)
    linear_tf = _rotation(rng, dim) @ np.diag(_scales(100.0, dim)) @ rotation
    two_k = 2.0 ** np.arange(1, 33)

    def core(x):
        pen = _boundary_penalty(x, 1.0)
        z = np.atleast_2d((x - x_opt) @ linear_tf)
        arr = z[..., None] * two_k  # (n, dim, 32)
        inner = np.sum(np.abs(arr - np.round(arr)) / two_k, axis=-1)
        prod = np.prod(1.0 + np.arange(1, dim + 1) * inner, axis=-1)
        raw = -10.0 / dim ** 2 + 10.0 / dim ** 2 * prod ** (10.0 / dim ** 1.2)
        out = raw + pen
        return out if x.ndim > 1 else out[0]

    return core, x_opt


def _build_f24(rng, dim, osc):
    mu1 = 2.5
    x_opt = 0.5 * mu1 * np.sign(rng.standard_normal(dim))
    rotation = _rotation(rng, dim)
    linear_tf = _rotation(rng, dim) @ np.diag(_scales(100.0, dim)) @ rotation
    signs = 2.0 * np.sign(x_opt)
    s = 1.0 - 0.5 / (np.sqrt(dim + 20.0) - 4.1)
    mu2 = -np.sqrt((mu1 ** 2 - 1.0) / s)

    def core(x):
        pen = _boundary_penalty(x, 1e4)
        z = signs * x
        raw = np.minimum(
            np.sum((z - mu1) ** 2, axis=-1),
            dim + s * np.sum((z - mu2) ** 2, axis=-1),
        )
        raw = raw + 10.0 * (dim - np.sum(np.cos(2 * np.pi * ((z - mu1) @ linear_tf)), axis=-1))
        return raw + pen

    return core, x_opt


_BUILDERS = {
    1: _build_f1, 2: _build_f2, 3: _build_f3, 4: _build_f4,
    5: _build_f5, 6: _build_f6, 7: _build_f7, 8: _build_f8,
    9: _build_f9, 10: _build_f10, 11: _build_f11, 12: _build_f12,
    13: _build_f13, 14: _build_f14, 15: _build_f15, 16: _build_f16,
    17: _build_f17, 18: _build_f18, 19: _build_f19, 20: _build_f20,
    21: _build_f21, 22: _build_f22, 23: _build_f23, 24: _build_f24,
}


class ProblemInstance:
    """A single seeded test problem.

    Attributes
    ----------
    fid : int
        Function identifier in 1..24.
    dim : int
        Search-space dimensionality, at least 2.
    transform_seed : int
        Instance seed; together with (fid, dim) it determines x_opt,
        f_opt and all internal rotations.
    x_opt : ndarray of shape (dim,)
        Location of the global optimum.
    f_opt : float
        Function value at ``x_opt``.
    evaluations : int
        Number of single-point evaluations performed so far.  This
        counter is the instance's only mutable state.
    """

    def __init__(self, fid, dim, transform_seed=0, *, oscillation=True):
        if fid not in _BUILDERS:
            raise ValueError(f"fid must be in 1..24, got {fid}")
        if not isinstance(dim, (int, np.integer)) or dim < 2:
            raise ValueError(f"dim must be an integer >= 2, got {dim}")
        self.fid = int(fid)
        self.dim = int(dim)
        self.transform_seed = int(transform_seed)
        rng = np.random.default_rng(
            np.random.SeedSequence((self.fid, self.dim, self.transform_seed))
        )
        self.f_opt = _draw_f_opt(rng)
        core, x_opt = _BUILDERS[self.fid](rng, self.dim, oscillation)
        self._core = core
        self.x_opt = np.asarray(x_opt, dtype=float)
        self.evaluations = 0

    def evaluate(self, x):
        """Evaluate one point (1-D input) or a batch of points (2-D).

        Returns a float for 1-D input, a (n,) array for 2-D input.
        Every row counts as one evaluation.
        """
        x = np.asarray(x, dtype=float)
        if x.ndim == 1:
            if x.shape[0] != self.dim:
                raise ValueError(f"expected {self.dim} coordinates, got {x.shape[0]}")
            self.evaluations += 1
            # same code path as batch input, so the two agree bit for bit
            return float(self._core(x[None, :])[0] + self.f_opt)
        if x.ndim == 2:
            if x.shape[1] != self.dim:
                raise ValueError(f"expected {self.dim} columns, got {x.shape[1]}")
            self.evaluations += x.shape[0]
            return self._core(x) + self.f_opt
        raise ValueError(f"x must be 1- or 2-dimensional, got shape {x.shape}")

    __call__ = evaluate

    def __repr__(self):
        return (
            f"ProblemInstance(fid={self.fid}, dim={self.dim}, "
            f"transform_seed={self.transform_seed})"
        )


def make_problem(fid, dim, transform_seed=0, *, oscillation=True):
    """Create a :class:`ProblemInstance`.

    ``oscillation=False`` replaces the oscillation transform with the
    identity on functions that use it; it exists for conditioning tests
    and is not part of the benchmark definition.
    """
    return ProblemInstance(fid, dim, transform_seed, oscillation=oscillation)
