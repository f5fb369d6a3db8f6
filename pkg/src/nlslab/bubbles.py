"""Multi-scale bubble initial data.

Builds the profile/mollifier primitives, the scale ladder h_k with
disjointly supported bubbles, the superposed datum f0 in original
variables, and the rescaled semiclassical datum u_{0,k} synthesized
directly in the frame of the active bubble.
"""

import logging
import math
from dataclasses import dataclass, field

import numpy as np
import yaml
from scipy.optimize import brentq

from .errors import ConfigError, DomainError, ResolutionError
from .spectral import Field, Grid, convolve, field_from_function

logger = logging.getLogger(__name__)

RAW_BUMP_PEAK = math.exp(-1.0)  # value of exp(-1/(1-r^2)) at r = 0


def bump_values(grid: Grid, center, radius: float, amplitude: float = 1.0) -> np.ndarray:
    """Samples of amplitude * exp(-1/(1 - |x-c|^2/r^2)), zero outside."""
    r = grid.periodic_distance(center) / radius
    out = np.zeros(grid.shape)
    inside = r < 1.0
    out[inside] = amplitude * np.exp(-1.0 / (1.0 - r[inside] ** 2))
    return out


def plateau_values(grid: Grid, center, r_inner: float, r_outer: float) -> np.ndarray:
    """C-infinity cutoff: 1 on |x-c| <= r_inner, 0 on |x-c| >= r_outer.

    Transition by the normalized integral of a 1-d bump (smoothstep of
    infinite order).
    """
    if not r_outer > r_inner > 0:
        raise DomainError(f"need 0 < r_inner < r_outer, got {r_inner}, {r_outer}")
    r = grid.periodic_distance(center)
    t = np.clip((r - r_inner) / (r_outer - r_inner), 0.0, 1.0)
    return _smooth_transition(t)


def _smooth_transition(t: np.ndarray) -> np.ndarray:
    # S(t) = int_t^1 b / int_0^1 b with b(s) = exp(-1/(s(1-s))): 1 at t=0, 0 at t=1
    s = np.linspace(0.0, 1.0, 2049)
    b = np.zeros_like(s)
    inner = (s > 0) & (s < 1)
    b[inner] = np.exp(-1.0 / (s[inner] * (1.0 - s[inner])))
    cdf = np.concatenate([[0.0], np.cumsum((b[1:] + b[:-1]) * 0.5 * (s[1] - s[0]))])
    cdf /= cdf[-1]
    return 1.0 - np.interp(t, s, cdf)


def make_profile(grid: Grid, kind: str, radius: float, center, amplitude: float = 1.0) -> Field:
    """Smooth compactly supported profile.

    kind 'bump' is the radial bump at ``center``; 'shifted_bump' is the
    same profile translated by one support radius along the first axis
    (convenient for non-overlapping pairs).
    """
    if radius >= grid.length / 2.0:
        raise DomainError(
            f"profile radius {radius} does not fit a torus of side {grid.length}"
        )
    center = np.atleast_1d(np.asarray(center, dtype=float)).copy()
    if kind == "shifted_bump":
        center[0] += radius
    elif kind != "bump":
        raise DomainError(f"unknown profile kind {kind!r}")
    return Field(grid, bump_values(grid, center, radius, amplitude))


def make_mollifier(grid: Grid, h: float, center=None) -> Field:
    """Unit-integral smoothing kernel at scale h.

    Samples h^(-d) * iota(x/h) with iota the unit-mass bump supported
    in |x| <= 1, then renormalizes so the discrete integral is exactly 1.
    """
    if h <= 0:
        raise DomainError(f"mollifier scale must be positive, got {h}")
    if h < 4.0 * grid.dx:
        raise ResolutionError(
            f"mollifier scale {h:g} is below 4 grid spacings ({4 * grid.dx:g}); "
            "kernel unresolvable"
        )
    if center is None:
        center = np.zeros(grid.dim)
    vals = bump_values(grid, center, h, amplitude=h ** (-grid.dim))
    total = vals.sum() * grid.cell_volume
    if total <= 0:
        raise ResolutionError("mollifier vanished on the grid")
    return Field(grid, vals / total)


@dataclass
class ModelParams:
    """Model exponents for the supercritical defocusing power nonlinearity."""

    dim: int
    m: int
    s: float
    sigma_target: float = 1.0

    def __post_init__(self):
        if self.m < 1 or int(self.m) != self.m:
            raise DomainError(f"m must be an integer >= 1, got {self.m}")
        if self.s_c <= 0:
            raise DomainError(
                f"need s_c = d/2 - 1/m > 0 (L^2-supercritical); d={self.dim}, m={self.m}"
            )
        if not 0.0 < self.s < self.s_c:
            raise DomainError(f"need 0 < s < s_c = {self.s_c:g}, got s={self.s}")
        if self.s > 2.0:
            raise DomainError(f"need s <= 2, got s={self.s}")
        assert abs(self.m * self.s_c + 1.0 - (self.m + 1) * self.s_sob) < 1e-12

    @property
    def s_c(self) -> float:
        return self.dim / 2.0 - 1.0 / self.m

    @property
    def s_sob(self) -> float:
        return self.dim * self.m / (2.0 * self.m + 2.0)

    @property
    def I_of_s(self) -> float:
        return self.s / (1.0 + self.m * (self.s_c - self.s))


def log_weight(h: float, enabled: bool = True) -> float:
    """|log h| floored at 1; identically 1 when the factor is disabled."""
    if not enabled:
        return 1.0
    return max(1.0, abs(math.log(h)))


def epsilon_of_scale(params: ModelParams, h: float, log_factor: bool = True) -> float:
    """Semiclassical parameter attached to scale h."""
    return h ** (params.m * (params.s_c - params.s)) * log_weight(h, log_factor) ** params.m


def scale_of_epsilon(params: ModelParams, eps: float, log_factor: bool = True) -> float:
    """Invert epsilon_of_scale for h in (0, 1)."""
    expo = params.m * (params.s_c - params.s)
    if not log_factor:
        return eps ** (1.0 / expo)
    f = lambda lh: epsilon_of_scale(params, math.exp(lh), True) - eps
    return math.exp(brentq(f, math.log(1e-300), -1e-12, xtol=1e-14))


@dataclass
class BubbleLadder:
    """Scales, centers and profile data of the bubble superposition.

    scales are strictly decreasing in (0, 1); centers (original frame)
    keep the mollified supports pairwise disjoint:
    |x_l - x_{l+1}| > 4 r1 h_l.
    """

    params: ModelParams
    scales: list
    centers: list
    r1: float = 1.0
    amplitude: float = 1.0
    log_factor: bool = True
    mollifier_scale: float = 0.1
    ladder_kind: str = "geometric"
    kind_params: dict = field(default_factory=dict)

    def __post_init__(self):
        hs = list(self.scales)
        if any(not 0.0 < h < 1.0 for h in hs):
            raise DomainError("all scales must lie in (0, 1)")
        if any(hs[i + 1] >= hs[i] for i in range(len(hs) - 1)):
            raise DomainError("scales must be strictly decreasing")
        self.scales = hs
        self.centers = [np.atleast_1d(np.asarray(c, dtype=float)) for c in self.centers]
        if len(self.centers) != len(self.scales):
            raise DomainError("need one center per scale")
        for i in range(len(hs) - 1):
            gap = float(np.linalg.norm(self.centers[i] - self.centers[i + 1]))
            if gap <= 4.0 * self.r1 * hs[i]:
                raise DomainError(
                    f"centers {i} and {i + 1} too close: |dx| = {gap:g} "
                    f"<= 4 r1 h_{i} = {4 * self.r1 * hs[i]:g}"
                )

    @property
    def rungs(self) -> int:
        return len(self.scales)

    def epsilon(self, k: int) -> float:
        return epsilon_of_scale(self.params, self.scales[k], self.log_factor)

    def log_ratio(self, ell: int, k: int) -> float:
        """|log h_k| / |log h_ell| with the configured floor."""
        return log_weight(self.scales[k], self.log_factor) / log_weight(
            self.scales[ell], self.log_factor
        )


def geometric_ladder(
    params: ModelParams,
    h0: float = 0.25,
    gamma: float = 0.25,
    rungs: int = 3,
    r1: float = 1.0,
    amplitude: float = 1.0,
    log_factor: bool = True,
    mollifier_scale: float = 0.1,
    separation_factor: float = 5.0,
) -> BubbleLadder:
    """h_k = h0 * gamma^k with centers spaced along the first axis."""
    if not 0.0 < gamma < 1.0:
        raise DomainError(f"gamma must lie in (0, 1), got {gamma}")
    scales = [h0 * gamma ** k for k in range(rungs)]
    centers = _place_centers(scales, params.dim, r1, separation_factor)
    return BubbleLadder(
        params, scales, centers, r1, amplitude, log_factor, mollifier_scale,
        ladder_kind="geometric", kind_params={"h0": h0, "gamma": gamma},
    )


def double_exponential_ladder(
    params: ModelParams,
    M: float = 2.0,
    rungs: int = 2,
    first: int = 1,
    r1: float = 1.0,
    amplitude: float = 1.0,
    log_factor: bool = True,
    mollifier_scale: float = 0.1,
    separation_factor: float = 5.0,
) -> BubbleLadder:
    """h_k = exp(-M^k): the analytic ladder, usable for few rungs only."""
    if M <= 1.0:
        raise DomainError(f"M must exceed 1, got {M}")
    scales = [math.exp(-(M ** k)) for k in range(first, first + rungs)]
    centers = _place_centers(scales, params.dim, r1, separation_factor)
    return BubbleLadder(
        params, scales, centers, r1, amplitude, log_factor, mollifier_scale,
        ladder_kind="double_exponential", kind_params={"M": M, "first": first},
    )


def _place_centers(scales, dim, r1, separation_factor):
    centers = []
    pos = 0.0
    for i, h in enumerate(scales):
        c = np.zeros(dim)
        c[0] = pos
        centers.append(c)
        if i + 1 < len(scales):
            pos += separation_factor * r1 * h
    return centers


# ---------------------------------------------------------------------------
# original-frame datum f0
# ---------------------------------------------------------------------------

def build_f0(ladder: BubbleLadder, grid: Grid, k_max: int, background: Field | None = None) -> Field:
    """Finite truncation of the bubble series on the original-frame grid.

    phi_k = log_weight(h_k)^(-1) h_k^(s - d/2) alpha((x - x_k)/h_k);
    optional smooth background with support disjoint from every bubble.
    """
    p = ladder.params
    vals = np.zeros(grid.shape)
    for k in range(min(k_max, ladder.rungs)):
        h = ladder.scales[k]
        width = 2.0 * ladder.r1 * h
        if width < 8.0 * grid.dx:
            raise ResolutionError(
                f"bubble k={k} (support {width:g}) needs >= 8 points, "
                f"grid spacing is {grid.dx:g}"
            )
        amp = ladder.amplitude * h ** (p.s - p.dim / 2.0) / log_weight(h, ladder.log_factor)
        vals += bump_values(grid, ladder.centers[k], ladder.r1 * h, amp)
    out = Field(grid, vals)
    if background is not None:
        sup = np.abs(background.values) > 0
        if np.any(sup & (np.abs(vals) > 0)):
            raise DomainError("background support overlaps a bubble")
        out = Field(grid, vals + background.values)
    return out


# ---------------------------------------------------------------------------
# semiclassical frame
# ---------------------------------------------------------------------------

@dataclass
class SemiclassicalDatum:
    """Rescaled datum around the active bubble k, plus its bookkeeping."""

    k: int
    epsilon: float
    u0: Field
    low_mode_phi: Field
    chi_k: Field
    chi1_k: Field
    R_k: float
    ladder: BubbleLadder
    center: np.ndarray  # active-bubble position on the u-frame torus
    rungs_included: list = field(default_factory=list)

    @property
    def grid(self) -> Grid:
        return self.u0.grid


def rescaled_positions(ladder: BubbleLadder, k: int, grid: Grid):
    """u-frame bubble positions, active bubble centered on the torus."""
    h_k = ladder.scales[k]
    anchor = np.full(grid.dim, grid.length / 2.0)
    out = []
    for ell in range(ladder.rungs):
        out.append(anchor + (ladder.centers[ell] - ladder.centers[k]) / h_k)
    return out


def rescale_to_semiclassical(
    ladder: BubbleLadder,
    k: int,
    grid: Grid,
    rungs=None,
    chi_radius: float | None = None,
    chi1_pad: float | None = None,
) -> SemiclassicalDatum:
    """Synthesize u_{0,k} directly in rescaled variables.

    Bubble ell contributes amplitude (log ratio) (h_k/h_ell)^(d/2-s)
    at position (x_ell - x_k)/h_k and width h_ell/h_k, convolved with
    the k-independent kernel j; low_mode_phi collects the ell < k part
    of the sum (before any phase).
    """
    p = ladder.params
    if rungs is None:
        rungs = list(range(ladder.rungs))
    h_k = ladder.scales[k]
    positions = rescaled_positions(ladder, k, grid)
    low = np.zeros(grid.shape)
    total = np.zeros(grid.shape)
    for ell in rungs:
        h_l = ladder.scales[ell]
        ratio = h_k / h_l
        width = ladder.r1 / ratio
        if 2.0 * width < 8.0 * grid.dx:
            raise ResolutionError(
                f"rescaled bubble ell={ell} has width {2 * width:g}; unresolvable"
            )
        pos = positions[ell]
        extent = np.max(np.abs(pos - grid.length / 2.0)) + 2.0 * width
        if extent > grid.length / 2.0:
            raise DomainError(
                f"rescaled bubble ell={ell} overflows the torus "
                f"(needs half-width {extent:g} > {grid.length / 2:g})"
            )
        amp = ladder.amplitude * ladder.log_ratio(ell, k) * ratio ** (p.dim / 2.0 - p.s)
        b = bump_values(grid, pos, width, amp)
        total += b
        if ell < k:
            low += b
    jker = make_mollifier(grid, ladder.mollifier_scale)
    u0 = convolve(Field(grid, total), jker)
    low_phi = convolve(Field(grid, low), jker) if np.any(low) else Field(grid, low)

    from .diagnostics import plateau_cutoff  # local import to avoid a cycle

    if chi_radius is None:
        chi_radius = 1.5 * ladder.r1 + ladder.mollifier_scale
    if chi1_pad is None:
        chi1_pad = 0.5 * ladder.r1
    center = positions[k]
    _check_cutoff_clearance(ladder, k, rungs, positions, chi_radius, grid)
    chi = plateau_cutoff(grid, center, chi_radius, 2.0 * chi_radius)
    chi1 = plateau_cutoff(
        grid, center, 2.0 * chi_radius + chi1_pad, 2.0 * chi_radius + 3.0 * chi1_pad
    )
    return SemiclassicalDatum(
        k=k,
        epsilon=ladder.epsilon(k),
        u0=Field(grid, u0.values.astype(complex)),
        low_mode_phi=low_phi,
        chi_k=chi,
        chi1_k=chi1,
        R_k=chi_radius,
        ladder=ladder,
        center=center,
        rungs_included=list(rungs),
    )


def _check_cutoff_clearance(ladder, k, rungs, positions, chi_radius, grid):
    h_k = ladder.scales[k]
    for ell in rungs:
        if ell == k:
            continue
        radius = (ladder.r1 * ladder.scales[ell] / h_k) + ladder.mollifier_scale
        dist = float(np.linalg.norm(positions[ell] - positions[k]))
        if dist - radius < 2.0 * chi_radius:
            raise DomainError(
                f"cutoff of radius {chi_radius:g} around bubble {k} touches "
                f"the support of bubble {ell}"
            )


# ---------------------------------------------------------------------------
# measured bubble norms against the predicted power laws
# ---------------------------------------------------------------------------

def bubble_norm_grid(width: float, moll_scale: float, r1: float) -> Grid:
    """One-bubble grid: torus just containing the support, mollifier resolved."""
    L = 2.0 * (2.0 * r1 * width + moll_scale) + 4.0 * r1
    dx_target = min(moll_scale / 5.0, r1 * width / 8.0)
    n = 1 << int(math.ceil(math.log2(L / dx_target)))
    n = max(n, 64)
    return Grid(1, n, L)


def mollified_bubble_norm(ladder: BubbleLadder, ell: int, k: int, s_prime: float) -> float:
    """|| j * phi_{ell,k} ||_{H^s'} measured on an auto-sized 1-d grid."""
    from .spectral import sobolev_norm

    p = ladder.params
    if p.dim != 1:
        raise DomainError("bubble-norm measurement is a 1-d diagnostic")
    ratio = ladder.scales[k] / ladder.scales[ell]
    width = 1.0 / ratio
    grid = bubble_norm_grid(width, ladder.mollifier_scale, ladder.r1)
    amp = ladder.amplitude * ladder.log_ratio(ell, k) * ratio ** (p.dim / 2.0 - p.s)
    b = Field(grid, bump_values(grid, grid.length / 2.0, ladder.r1 * width, amp))
    jker = make_mollifier(grid, ladder.mollifier_scale)
    return sobolev_norm(convolve(b, jker), s_prime, homogeneous=True)


def verify_bubble_norms(ladder: BubbleLadder, k: int, s_prime: float):
    """Measured vs predicted norms of the rescaled mollified bubbles.

    Prediction: (log ratio) (h_k/h_ell)^(s'-s) for ell < k and
    (log ratio) (h_ell/h_k)^(-s) for ell > k.  Rows carry the scale
    ratio so callers can fit the exponent.
    """
    p = ladder.params
    rows = []
    for ell in range(ladder.rungs):
        h_l, h_k = ladder.scales[ell], ladder.scales[k]
        measured = mollified_bubble_norm(ladder, ell, k, s_prime)
        lw = ladder.log_ratio(ell, k)
        if ell <= k:
            predicted = lw * (h_k / h_l) ** (s_prime - p.s)
        else:
            predicted = lw * (h_l / h_k) ** p.s
        rows.append(
            {
                "ell": ell,
                "k": k,
                "s_prime": s_prime,
                "h_ell": h_l,
                "h_k": h_k,
                "measured": measured,
                "predicted": predicted,
                "normalized": measured / lw,
            }
        )
    return rows


# ---------------------------------------------------------------------------
# ladder (de)serialization
# ---------------------------------------------------------------------------

_LADDER_KEYS = {
    "d", "m", "s", "kind", "h0", "gamma", "M", "first", "rungs", "scales",
    "centers", "r1", "amplitude", "log_factor", "mollifier_scale",
}


def ladder_to_yaml(ladder: BubbleLadder) -> str:
    doc = {
        "d": ladder.params.dim,
        "m": ladder.params.m,
        "s": ladder.params.s,
        "kind": ladder.ladder_kind,
        "rungs": ladder.rungs,
        "scales": [float(h) for h in ladder.scales],
        "centers": [[float(v) for v in c] for c in ladder.centers],
        "r1": ladder.r1,
        "amplitude": ladder.amplitude,
        "log_factor": ladder.log_factor,
        "mollifier_scale": ladder.mollifier_scale,
    }
    doc.update({k: v for k, v in ladder.kind_params.items()})
    return yaml.safe_dump(doc, sort_keys=True)


def ladder_from_yaml(text: str) -> BubbleLadder:
    doc = yaml.safe_load(text)
    if not isinstance(doc, dict):
        raise ConfigError("ladder config must be a mapping")
    unknown = set(doc) - _LADDER_KEYS
    if unknown:
        raise ConfigError(f"unknown ladder config keys: {sorted(unknown)}")
    try:
        params = ModelParams(dim=int(doc["d"]), m=int(doc["m"]), s=float(doc["s"]))
        kind = doc.get("kind", "geometric")
        common = dict(
            r1=float(doc.get("r1", 1.0)),
            amplitude=float(doc.get("amplitude", 1.0)),
            log_factor=bool(doc.get("log_factor", True)),
            mollifier_scale=float(doc.get("mollifier_scale", 0.1)),
        )
        if "scales" in doc:
            return BubbleLadder(
                params, [float(h) for h in doc["scales"]],
                [np.asarray(c, dtype=float) for c in doc["centers"]],
                ladder_kind=kind, **common,
            )
        if kind == "geometric":
            return geometric_ladder(
                params, h0=float(doc.get("h0", 0.25)),
                gamma=float(doc.get("gamma", 0.25)),
                rungs=int(doc.get("rungs", 3)), **common,
            )
        if kind == "double_exponential":
            return double_exponential_ladder(
                params, M=float(doc.get("M", 2.0)),
                rungs=int(doc.get("rungs", 2)),
                first=int(doc.get("first", 1)), **common,
            )
        raise ConfigError(f"unknown ladder kind {kind!r}")
    except KeyError as exc:
        raise ConfigError(f"missing ladder config key: {exc}") from exc
