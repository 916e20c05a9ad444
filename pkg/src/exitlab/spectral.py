"""Spectral Galerkin core for the scalar reaction-diffusion equation on (0,1).

State space is H = H^1_0(0,1) with Dirichlet conditions, represented by
truncated coefficients against the L2-orthonormal sine basis
e_n(z) = sqrt(2) sin(n pi z).  In this basis the Dirichlet Laplacian is
diagonal with eigenvalues -(n pi)^2, the H inner product is
<<x, y>> = sum (n pi)^2 x_n y_n and the heat semigroup acts by exact
exponential factors.  The nonlinearity is evaluated by collocation on a
uniform interior grid with 4N subdivisions and transformed back by the
discrete sine analysis matrix, which is exact for polynomial nonlinearities
at this resolution.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy.optimize import minimize

# The Sobolev embedding constant (|x|_{L2} <= EMBEDDING_CONSTANT * ||x||_H,
# sharp value 1/pi on (0,1)) and the semigroup decay rate (first Dirichlet
# eigenvalue) are distinct constants and are kept separate on purpose.
EMBEDDING_CONSTANT = 1.0 / np.pi
SPECTRAL_GAP = np.pi ** 2

#: verdict returned by classify_basin when no stable state is approached
SEPARATRIX = -1

BALL = "ball"
BASIN = "basin"


class DivergenceError(RuntimeError):
    """Raised when a trajectory exceeds the configured blow-up cap."""


def eigenvalues(n_modes: int) -> np.ndarray:
    """Dirichlet Laplacian eigenvalues (n pi)^2 for n = 1..n_modes."""
    return (np.pi * np.arange(1, n_modes + 1)) ** 2


def as_coeffs(x) -> np.ndarray:
    """Coefficient array of a HilbertVector or a bare array."""
    c = x.coeffs if isinstance(x, HilbertVector) else np.asarray(x, dtype=float)
    return c


@dataclass(frozen=True, eq=False)
class HilbertVector:
    """Element of H given by sine-mode coefficients c_1..c_N."""

    coeffs: np.ndarray

    def __post_init__(self):
        c = np.atleast_1d(np.asarray(self.coeffs, dtype=float))
        if c.ndim != 1:
            raise ValueError("coefficient array must be one-dimensional")
        if not np.all(np.isfinite(c)):
            raise ValueError("coefficients must be finite")
        object.__setattr__(self, "coeffs", c)

    @classmethod
    def zero(cls, n_modes: int) -> "HilbertVector":
        return cls(np.zeros(n_modes))

    @classmethod
    def mode(cls, n_modes: int, k: int, amplitude: float = 1.0) -> "HilbertVector":
        """amplitude * e_k as a truncated vector."""
        c = np.zeros(n_modes)
        c[k - 1] = amplitude
        return cls(c)

    @property
    def n_modes(self) -> int:
        return self.coeffs.size

    def __add__(self, other):
        return HilbertVector(self.coeffs + as_coeffs(other))

    def __sub__(self, other):
        return HilbertVector(self.coeffs - as_coeffs(other))

    def __mul__(self, s: float):
        return HilbertVector(self.coeffs * float(s))

    __rmul__ = __mul__


def l2_norm(x) -> float:
    c = as_coeffs(x)
    return float(np.sqrt(np.sum(c * c)))


def h_norm(x) -> float:
    c = as_coeffs(x)
    lam = eigenvalues(c.size)
    return float(np.sqrt(np.sum(lam * c * c)))


def h_inner(x, y) -> float:
    cx, cy = as_coeffs(x), as_coeffs(y)
    lam = eigenvalues(cx.size)
    return float(np.sum(lam * cx * cy))


def h_dist(x, y) -> float:
    return h_norm(as_coeffs(x) - as_coeffs(y))


def unit_h(x) -> HilbertVector:
    """x scaled to unit H-norm."""
    n = h_norm(x)
    if n == 0.0:
        raise ValueError("cannot normalize the zero vector")
    return HilbertVector(as_coeffs(x) / n)


@dataclass(frozen=True)
class NonlinearitySpec:
    """Reaction term f, either zero or a dissipative polynomial.

    ``coeffs`` lists b_0..b_d in ascending powers, f(r) = sum b_j r^j.
    Dissipativity requires a negative leading coefficient, which for
    degree >= 2 makes limsup f'(r) = -inf below the first Laplacian
    eigenvalue; for degree 1 the negative slope suffices as well.
    """

    kind: str = "zero"
    coeffs: tuple = ()

    def __post_init__(self):
        if self.kind not in ("zero", "polynomial"):
            raise ValueError(f"unknown nonlinearity kind {self.kind!r}")
        object.__setattr__(self, "coeffs", tuple(float(b) for b in self.coeffs))
        if self.kind == "zero":
            if self.coeffs:
                raise ValueError("zero nonlinearity takes no coefficients")
            return
        if not self.coeffs or len(self.coeffs) < 2:
            raise ValueError("polynomial nonlinearity needs degree >= 1")
        if self.coeffs[-1] >= 0:
            raise ValueError("leading coefficient must be negative (dissipativity)")

    @classmethod
    def zero_reaction(cls) -> "NonlinearitySpec":
        return cls(kind="zero")

    @classmethod
    def chafee_infante(cls, a: float) -> "NonlinearitySpec":
        """f(r) = -a (r^3 - r) = a r - a r^3 for a > 0."""
        if a <= 0:
            raise ValueError("parameter a must be positive")
        return cls(kind="polynomial", coeffs=(0.0, float(a), 0.0, -float(a)))

    @property
    def is_zero(self) -> bool:
        return self.kind == "zero"

    def f_array(self) -> np.ndarray:
        """Ascending coefficients of f (empty for the zero reaction)."""
        return np.asarray(self.coeffs, dtype=float)

    def fprime_array(self) -> np.ndarray:
        b = self.f_array()
        if b.size == 0:
            return b
        return b[1:] * np.arange(1, b.size)

    def primitive_array(self) -> np.ndarray:
        """Coefficients of F(r) = int_0^r f(s) ds (reference point r0 = 0)."""
        b = self.f_array()
        if b.size == 0:
            return np.zeros(1)
        return np.concatenate([[0.0], b / np.arange(1, b.size + 1)])

    def __call__(self, r):
        if self.is_zero:
            return np.zeros_like(np.asarray(r, dtype=float))
        return np.polynomial.polynomial.polyval(r, self.f_array())


@dataclass(frozen=True)
class FixedPoint:
    """Stationary state of the truncated flow."""

    state: HilbertVector
    stable: bool
    index: int
    residual: float
    top_eigenvalue: float


class ReactionDiffusion:
    """Truncated flow u_t = Laplace(u) + f(u) with Dirichlet conditions."""

    def __init__(self, nonlinearity: NonlinearitySpec, n_modes: int = 16):
        if n_modes < 1:
            raise ValueError("n_modes must be >= 1")
        self.nonlinearity = nonlinearity
        self.n_modes = int(n_modes)
        self.lam = eigenvalues(self.n_modes)
        m = 4 * self.n_modes  # grid subdivisions; exact for cubic reactions
        grid = np.arange(1, m) / m
        self.grid = grid
        self.synth = np.sqrt(2.0) * np.sin(np.pi * np.outer(grid, np.arange(1, self.n_modes + 1)))
        # discrete sine orthogonality makes analysis the scaled transpose
        self.anal = self.synth.T / m
        self._quad_weight = 1.0 / m
        self._f = nonlinearity.f_array()
        self._fprime = nonlinearity.fprime_array()
        self._F = nonlinearity.primitive_array()
        self._fixed_points: Optional[list] = None

    # -- basic calculus -------------------------------------------------

    def grid_values(self, c: np.ndarray) -> np.ndarray:
        return self.synth @ c

    def reaction_modal(self, c: np.ndarray) -> np.ndarray:
        """Sine coefficients of f(u) for u with coefficients c."""
        if self.nonlinearity.is_zero:
            return np.zeros_like(c)
        u = self.synth @ c
        return self.anal @ np.polynomial.polynomial.polyval(u, self._f)

    def rhs_modal(self, c: np.ndarray) -> np.ndarray:
        return -self.lam * c + self.reaction_modal(c)

    def jacobian_modal(self, c: np.ndarray) -> np.ndarray:
        j = -np.diag(self.lam)
        if not self.nonlinearity.is_zero:
            u = self.synth @ c
            fp = np.polynomial.polynomial.polyval(u, self._fprime)
            j = j + self.anal @ (fp[:, None] * self.synth)
        return j

    def potential(self, x) -> float:
        """Lyapunov functional int( (grad x)^2 / 2 - F(x) ) dz, F(0) = 0.

        The derivative part is evaluated exactly in coefficient space, the
        reaction part by the collocation quadrature (exact for polynomials
        at this grid resolution).  Decreases along trajectories.
        """
        c = as_coeffs(x)
        quad = 0.5 * float(np.sum(self.lam * c * c))
        if not self.nonlinearity.is_zero:
            u = self.synth @ c
            fu = np.polynomial.polynomial.polyval(u, self._F)
            quad -= self._quad_weight * float(np.sum(fu))
        return quad

    # -- flow -----------------------------------------------------------

    def _step(self, c: np.ndarray, h: float) -> np.ndarray:
        """One exponential-Euler step: exact linear part, frozen reaction."""
        decay = np.exp(-self.lam * h)
        if self.nonlinearity.is_zero:
            return decay * c
        phi1 = (1.0 - decay) / self.lam
        return decay * c + phi1 * self.reaction_modal(c)

    def evolve_c(self, c: np.ndarray, t: float, dt: float = 1e-2,
                 cap: float = 1e3, stiff_guard: bool = True) -> np.ndarray:
        # the guard subdivides steps while |f'| h > 1/2 (post-jump or rough
        # initial data); on resolved states it never activates and the
        # scheme is the plain O(dt) exponential-Euler step
        if t < 0 or dt <= 0:
            raise ValueError("need t >= 0 and dt > 0")
        c = np.array(c, dtype=float)
        remaining = float(t)
        while remaining > 1e-15:
            h = min(dt, remaining)
            if stiff_guard and not self.nonlinearity.is_zero:
                u = self.synth @ c
                fp = np.polynomial.polynomial.polyval(u, self._fprime)
                scale = float(np.max(np.abs(fp)))
                if scale > 0:
                    h = min(h, 0.5 / scale, remaining)
            c = self._step(c, h)
            remaining -= h
            if np.sum(self.lam * c * c) > cap * cap:
                raise DivergenceError(
                    f"H-norm exceeded blow-up cap {cap}; check dissipativity or step size")
        return c

    def evolve(self, x, t: float, dt: float = 1e-2, cap: float = 1e3) -> HilbertVector:
        """Approximate mild solution u(t; x); error O(dt) in H-norm."""
        return HilbertVector(self.evolve_c(as_coeffs(x), t, dt, cap))

    # -- equilibria and basins -------------------------------------------

    def find_fixed_points(self, seed_amplitudes: Optional[Sequence[float]] = None,
                          tol: float = 1e-9, max_iter: int = 100,
                          dedup_tol: float = 1e-5) -> list:
        """Newton search for stationary states from a low-mode seed grid.

        Seeds span {a e_1 + b e_2} for amplitudes on a symmetric grid plus
        the origin.  Roots are deduplicated by H-distance; stability comes
        from the linearization spectrum.
        """
        if seed_amplitudes is None:
            seed_amplitudes = np.linspace(-2.0, 2.0, 9)
        seeds = [np.zeros(self.n_modes)]
        for a in seed_amplitudes:
            for b in seed_amplitudes:
                c = np.zeros(self.n_modes)
                c[0] = a
                if self.n_modes > 1:
                    c[1] = b
                seeds.append(c)
        roots = []
        for seed in seeds:
            c = seed.copy()
            ok = False
            for _ in range(max_iter):
                r = self.rhs_modal(c)
                res = float(np.sqrt(np.sum(self.lam * r * r)))
                if res < tol:
                    ok = True
                    break
                try:
                    step = np.linalg.solve(self.jacobian_modal(c), -r)
                except np.linalg.LinAlgError:
                    break
                if not np.all(np.isfinite(step)) or np.max(np.abs(step)) > 1e3:
                    break
                c = c + step
            if not ok:
                continue
            if any(h_norm(c - other) < dedup_tol for other, _ in roots):
                continue
            r = self.rhs_modal(c)
            roots.append((c, float(np.sqrt(np.sum(self.lam * r * r)))))
        if not roots:
            raise RuntimeError("fixed-point search did not converge from any seed")
        out = []
        for idx, (c, res) in enumerate(sorted(roots, key=lambda rc: -rc[0][0])):
            eig = np.linalg.eigvals(self.jacobian_modal(c))
            top = float(np.max(eig.real))
            out.append(FixedPoint(state=HilbertVector(c), stable=top < 0,
                                  index=idx, residual=res, top_eigenvalue=top))
        self._fixed_points = out
        return out

    def fixed_points(self) -> list:
        if self._fixed_points is None:
            self.find_fixed_points()
        return self._fixed_points

    def stable_states(self) -> list:
        return [fp for fp in self.fixed_points() if fp.stable]

    def classify_basin(self, x, horizon: float = 50.0, tol: float = 1e-3,
                       dt: float = 1e-2, cap: Optional[float] = None) -> int:
        """Index of the stable state whose basin contains x, or SEPARATRIX.

        Integrates the flow until the trajectory is within ``tol`` (H-norm)
        of some stable state.  Very large initial data is handled with a
        stiffness-limited substep so the dissipative transient is resolved.
        """
        stable = self.stable_states()
        if not stable:
            raise RuntimeError("system has no stable states")
        c = np.array(as_coeffs(x), dtype=float)
        if cap is None:
            cap = max(1e3, 4.0 * h_norm(c))
        t = 0.0
        check_every = max(1, int(round(0.05 / dt)))
        step_count = 0
        while t <= horizon:
            for fp in stable:
                if h_dist(c, fp.state) < tol:
                    return fp.index
            n_sub = check_every
            for _ in range(n_sub):
                h = dt
                if not self.nonlinearity.is_zero:
                    u = self.synth @ c
                    fp_vals = np.polynomial.polynomial.polyval(u, self._fprime)
                    scale = float(np.max(np.abs(fp_vals)))
                    if scale * dt > 0.5:
                        h = 0.5 / scale
                c = self._step(c, h)
                t += h
                step_count += 1
            if np.sum(self.lam * c * c) > cap * cap:
                raise DivergenceError("trajectory exceeded blow-up cap during classification")
        return SEPARATRIX

    # -- convergence times ------------------------------------------------

    def relaxation_time(self, x, gamma: float, target: Optional[HilbertVector] = None,
                        horizon: float = 200.0, dt: float = 1e-2) -> float:
        """First t with ||u(t;x) - phi|| < gamma/4 for the basin's state phi."""
        if gamma <= 0:
            raise ValueError("gamma must be positive")
        c = np.array(as_coeffs(x), dtype=float)
        if target is None:
            idx = self.classify_basin(x, horizon=horizon, dt=dt)
            if idx == SEPARATRIX:
                raise ValueError("x is not in the basin of a stable state")
            phi = as_coeffs(self.stable_states_by_index()[idx].state)
        else:
            phi = as_coeffs(target)
        t = 0.0
        thresh = gamma / 4.0
        while t <= horizon:
            if h_dist(c, phi) < thresh:
                return t
            c = self._step(c, dt)
            t += dt
        raise RuntimeError(f"relaxation horizon {horizon} exceeded for gamma={gamma}")

    def stable_states_by_index(self) -> dict:
        return {fp.index: fp for fp in self.stable_states()}

    def estimate_kappa0(self, domain: "Domain", gammas: Sequence[float],
                        n_samples: int = 8, rng: Optional[np.random.Generator] = None,
                        dt: float = 1e-2) -> float:
        """Slope of relaxation time against |ln gamma|, maximized over samples.

        Samples initial conditions from the level-1 domain and fits the
        per-sample linear trend t(gamma) ~ kappa |ln gamma| by least squares.
        """
        gammas = np.asarray(sorted(gammas, reverse=True), dtype=float)
        if gammas.size < 2:
            raise ValueError("need at least two gamma values")
        rng = rng or np.random.default_rng(0)
        phi = domain.stable_state
        points = [as_coeffs(phi)]
        tries = 0
        while len(points) < n_samples + 1 and tries < 50 * n_samples:
            tries += 1
            d = rng.standard_normal(self.n_modes)
            d /= h_norm(d)
            r = rng.uniform(0.05, 0.95) * domain.sample_radius()
            cand = as_coeffs(phi) + r * d
            if domain.contains(HilbertVector(cand), level=1):
                points.append(cand)
        slopes = []
        logs = np.log(1.0 / gammas)
        for c in points:
            times = [self.relaxation_time(HilbertVector(c), g, target=phi, dt=dt)
                     for g in gammas]
            a = np.vstack([logs, np.ones_like(logs)]).T
            slope, _ = np.linalg.lstsq(a, np.asarray(times), rcond=None)[0]
            slopes.append(slope)
        return float(max(slopes))

    # -- level sets -------------------------------------------------------

    def level_threshold(self, R: float) -> float:
        """d*(R) = sup of the potential over the H-ball of radius R."""
        if R <= 0:
            raise ValueError("R must be positive")
        if np.isinf(R):
            return np.inf
        if self.nonlinearity.is_zero:
            return 0.5 * R * R
        cached = getattr(self, "_dstar_cache", None)
        if cached is None:
            cached = {}
            self._dstar_cache = cached
        if R in cached:
            return cached[R]
        best = -np.inf
        for seed_mode in range(min(2, self.n_modes)):
            for sign in (1.0, -1.0):
                d0 = np.zeros(self.n_modes)
                d0[seed_mode] = sign

                def neg_v(d):
                    n = np.sqrt(np.sum(self.lam * d * d))
                    if n == 0:
                        return 0.0
                    return -self.potential(d * (R / n))

                res = minimize(neg_v, d0, method="Nelder-Mead",
                               options={"xatol": 1e-10, "fatol": 1e-12, "maxiter": 4000})
                best = max(best, -res.fun)
        cached[R] = float(best)
        return float(best)

    def in_level_set(self, x, R: float, threshold: Optional[float] = None) -> bool:
        if threshold is None:
            threshold = self.level_threshold(R)
        return self.potential(x) <= threshold + 1e-12


class Domain:
    """Reduced exit domain attached to a stable state.

    Level 1 is the raw domain intersected with the potential level set
    U^R, level 2 shrinks it by an H-ball radius delta (analytic for balls,
    probe-based fail-closed for basin classifiers), level 3 additionally
    requires stability of the configured jump map over a sampled probe and
    mark budget.  Membership at the domain's own ``level`` is what
    ``contains`` reports by default.
    """

    def __init__(self, system: ReactionDiffusion, kind: str,
                 stable_state: HilbertVector, R: float, delta: float = 0.0,
                 level: int = 1, radius: Optional[float] = None,
                 basin_index: Optional[int] = None,
                 coefficient=None, jump_marks: Optional[list] = None,
                 classify_horizon: float = 50.0, classify_tol: float = 1e-3,
                 classify_dt: float = 1e-2, probe_scale: float = 1.0):
        if kind not in (BALL, BASIN):
            raise ValueError(f"unknown domain kind {kind!r}")
        if level not in (1, 2, 3):
            raise ValueError("level must be 1, 2 or 3")
        if level >= 2 and delta <= 0:
            raise ValueError("levels 2 and 3 need delta > 0")
        if kind == BALL and (radius is None or radius <= 0):
            raise ValueError("ball domain needs a positive radius")
        if kind == BASIN and basin_index is None:
            raise ValueError("basin domain needs the stable-state index")
        self.system = system
        self.kind = kind
        self.stable_state = stable_state
        self.R = float(R)
        self.delta = float(delta)
        self.level = int(level)
        self.radius = None if radius is None else float(radius)
        self.basin_index = basin_index
        self.coefficient = coefficient
        self.jump_marks = jump_marks or []
        self.classify_horizon = classify_horizon
        self.classify_tol = classify_tol
        self.classify_dt = classify_dt
        self.probe_scale = probe_scale
        # R = inf disables the level-set cap (used for full-basin targets in
        # the metastable reduction, where it is the vanishing-cap limit)
        self._dstar = system.level_threshold(self.R)
        if kind == BALL and np.isfinite(self.R):
            # ball must sit inside the level set for the analytic level-2
            # distance to be exact; fail loudly otherwise
            worst = self._sup_potential_on_sphere()
            if worst > self._dstar + 1e-9:
                raise ValueError(
                    "ball domain is not contained in the level set U^R; "
                    "increase R (exact level-2 distance unsupported otherwise)")

    def _sup_potential_on_sphere(self) -> float:
        phi = as_coeffs(self.stable_state)
        if self.system.nonlinearity.is_zero:
            # V = ||x||^2 / 2: the exact sup sits at the outward-aligned point
            return 0.5 * (h_norm(phi) + self.radius) ** 2
        vals = []
        for mode in range(self.system.n_modes):
            for sign in (1.0, -1.0):
                d = np.zeros(self.system.n_modes)
                d[mode] = sign / np.sqrt(self.system.lam[mode])
                vals.append(self.system.potential(phi + self.radius * d))
        rng = np.random.default_rng(1234)
        for _ in range(64):
            d = rng.standard_normal(self.system.n_modes)
            d /= h_norm(d)
            vals.append(self.system.potential(phi + self.radius * d))
        return max(vals)

    def sample_radius(self) -> float:
        """Radius scale useful for drawing points around the stable state."""
        if self.kind == BALL:
            return self.radius
        return max(1.0, h_norm(self.stable_state))

    # -- membership -------------------------------------------------------

    def _level1(self, c: np.ndarray) -> bool:
        if self.system.potential(c) > self._dstar + 1e-12:
            return False
        if self.kind == BALL:
            return h_dist(c, self.stable_state) <= self.radius
        verdict = self.system.classify_basin(
            HilbertVector(c), horizon=self.classify_horizon,
            tol=self.classify_tol, dt=self.classify_dt)
        return verdict == self.basin_index

    def _probe_directions(self) -> np.ndarray:
        n = self.system.n_modes
        dirs = np.zeros((2 * n, n))
        for k in range(n):
            unit = 1.0 / np.sqrt(self.system.lam[k])
            dirs[2 * k, k] = unit
            dirs[2 * k + 1, k] = -unit
        return dirs

    def _level2(self, c: np.ndarray) -> bool:
        if self.kind == BALL:
            if self.system.potential(c) > self._dstar + 1e-12:
                return False
            return h_dist(c, self.stable_state) <= self.radius - self.delta
        if not self._level1(c):
            return False
        # fail-closed probe estimate of distance-to-complement
        for d in self._probe_directions():
            if not self._level1(c + self.delta * d * self.probe_scale):
                return False
        return True

    def _level3(self, c: np.ndarray) -> bool:
        if not self._level2(c):
            return False
        if self.coefficient is None or not self.jump_marks:
            raise ValueError("level-3 membership needs a coefficient and a mark budget")
        from . import coefficient as coeff_mod
        probes = [c] + [c + self.delta * d * self.probe_scale
                        for d in self._probe_directions()]
        for z in self.jump_marks:
            landed = c + as_coeffs(coeff_mod.apply_c(self.coefficient, c, as_coeffs(z)))
            if not self._level1(landed):
                continue  # mark not recorded: jump from c leaves the domain
            for v in probes:
                moved = v + coeff_mod.apply_c(self.coefficient, v, as_coeffs(z))
                if not self._level2(moved):
                    return False
        return True

    def contains(self, x, level: Optional[int] = None) -> bool:
        c = as_coeffs(x)
        lvl = self.level if level is None else level
        if lvl == 1:
            return self._level1(c)
        if lvl == 2:
            return self._level2(c)
        if lvl == 3:
            return self._level3(c)
        raise ValueError("level must be 1, 2 or 3")

    def distance_to_complement(self, x) -> float:
        """Exact H-distance from x to the complement of the level-1 domain."""
        if self.kind != BALL:
            raise ValueError("exact distance is only available for ball domains")
        return self.radius - h_dist(x, self.stable_state)

    def inward_pointing_margin(self, n_samples: int = 64,
                               rng: Optional[np.random.Generator] = None) -> float:
        """Sampled min of <<n(v), (Lap v + f(v)) / || . ||>> over the boundary.

        Only ball domains expose an analytic inner normal.  A positive
        margin certifies the uniformly-inward-pointing property on the
        sampled boundary set.
        """
        if self.kind != BALL:
            raise ValueError("inward-pointing check is only available for ball domains")
        rng = rng or np.random.default_rng(7)
        phi = as_coeffs(self.stable_state)
        worst = np.inf
        for _ in range(n_samples):
            d = rng.standard_normal(self.system.n_modes)
            d /= h_norm(d)
            v = phi + self.radius * d
            drift = self.system.rhs_modal(v)
            n_drift = h_norm(drift)
            if n_drift == 0:
                continue
            inner = h_inner(-d, drift / n_drift)
            worst = min(worst, inner)
        return float(worst)


def in_reduced_domain(x, domain: Domain, level: Optional[int] = None) -> bool:
    """Membership of x in the domain at its configured (or given) level."""
    return domain.contains(x, level=level)
