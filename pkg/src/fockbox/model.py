"""Model configuration and Hamiltonian assembly.

The model is a neutral scalar (ladder family a, mass m) and a charged scalar
(particle/antiparticle ladders b and d, mass M) on a periodic box of length L,
with box momenta p = 2 pi n / L restricted to finite mode sets.  The
Hamiltonian is

    H = sum_p omega_p a+_p a_p + sum_p E_p (b+_p b_p + d+_p d_p)
        + lambda1 * Int :phi+ phi: phihat dx + lambda2 * Int :phihat^4: dx

assembled symbolically (normal ordering, then box integration by momentum
selection) and realized on the truncated layout.  An equal-weight Riemann
quadrature of the realized interaction density provides an independent oracle
for the symbolic assembly; both must agree to 1e-9 in max norm.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Mapping

import numpy as np

from . import ladderalg
from .errors import ConfigError
from .fockspace import FockLayout, LadderId, OperatorMatrix, number_operator
from .ladderalg import LadderPolynomial, mode_energy


def _normalize_modes(values) -> tuple[int, ...]:
    modes = tuple(sorted(set(int(v) for v in values)))
    if not modes:
        raise ConfigError("mode set must be non-empty")
    return modes


def _normalize_overrides(values) -> tuple[tuple[LadderId, int], ...]:
    if isinstance(values, Mapping):
        items = values.items()
    else:
        items = tuple(values)
    pairs = tuple(sorted(((LadderId(l.family, l.mode_index), int(c)) for l, c in items)))
    if any(c < 1 for _, c in pairs):
        raise ConfigError("cutoff overrides must be >= 1")
    return pairs


@dataclass(frozen=True)
class ModelConfig:
    box_length: float = 2.0 * math.pi
    mass_neutral: float = 1.0
    mass_charged: float = 1.0
    lambda1: float = 1.0
    lambda2: float = 1.0
    neutral_modes: tuple[int, ...] = (2,)
    charged_modes: tuple[int, ...] = (1,)
    q_index: int = 1
    k_index: int = 2
    cutoff_default: int = 16
    cutoff_overrides: tuple[tuple[LadderId, int], ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "neutral_modes", _normalize_modes(self.neutral_modes))
        object.__setattr__(self, "charged_modes", _normalize_modes(self.charged_modes))
        object.__setattr__(self, "cutoff_overrides", _normalize_overrides(self.cutoff_overrides))
        if self.box_length <= 0.0:
            raise ConfigError("box_length must be positive")
        if self.mass_neutral < 0.0 or self.mass_charged < 0.0:
            raise ConfigError("masses must be non-negative")
        if self.lambda1 < 0.0 or self.lambda2 < 0.0:
            raise ConfigError("couplings must be non-negative")
        if 0 in self.neutral_modes and self.mass_neutral == 0.0:
            raise ConfigError("zero neutral mode requires mass_neutral > 0")
        if 0 in self.charged_modes and self.mass_charged == 0.0:
            raise ConfigError("zero charged mode requires mass_charged > 0")
        if self.q_index not in self.charged_modes:
            raise ConfigError(f"q_index {self.q_index} not among charged_modes")
        if self.k_index not in self.neutral_modes:
            raise ConfigError(f"k_index {self.k_index} not among neutral_modes")
        if self.cutoff_default < 1:
            raise ConfigError("cutoff_default must be >= 1")
        known = set(self.ladders())
        for lad, _ in self.cutoff_overrides:
            if lad not in known:
                raise ConfigError(f"cutoff override for unknown ladder {lad}")

    # -- derived quantities ------------------------------------------------

    def momentum(self, n: int) -> float:
        return 2.0 * math.pi * n / self.box_length

    def omega(self, n: int) -> float:
        """Neutral dispersion omega_p = sqrt(p^2 + m^2)."""
        return mode_energy(self.momentum(n), self.mass_neutral)

    def charged_energy(self, n: int) -> float:
        """Charged dispersion E_p = sqrt(p^2 + M^2)."""
        return mode_energy(self.momentum(n), self.mass_charged)

    @property
    def omega_k(self) -> float:
        return self.omega(self.k_index)

    @property
    def energy_q(self) -> float:
        return self.charged_energy(self.q_index)

    def ladders(self) -> tuple[LadderId, ...]:
        """Canonical ladder order: family a < b < d, mode index ascending."""
        return tuple(
            [LadderId("a", n) for n in self.neutral_modes]
            + [LadderId("b", n) for n in self.charged_modes]
            + [LadderId("d", n) for n in self.charged_modes]
        )

    def cutoff_for(self, ladder: LadderId) -> int:
        for lad, c in self.cutoff_overrides:
            if lad == ladder:
                return c
        return self.cutoff_default

    def with_cutoff(self, cutoff: int) -> "ModelConfig":
        return replace(self, cutoff_default=cutoff, cutoff_overrides=())


def default_config() -> ModelConfig:
    return ModelConfig()


def build_layout(config: ModelConfig) -> FockLayout:
    ladders = config.ladders()
    return FockLayout(ladders, tuple(config.cutoff_for(l) for l in ladders))


# ---------------------------------------------------------------------------
# shift profiles


@dataclass(frozen=True)
class ShiftProfile:
    """Classical profile amp * cos(wavenumber * x) added to a field by U."""

    amplitude: float
    wavenumber: float

    def __call__(self, x) -> np.ndarray | float:
        return self.amplitude * np.cos(self.wavenumber * x)


def shift_profiles(config: ModelConfig) -> tuple[ShiftProfile, ShiftProfile]:
    """(n1, n2): charged-field and neutral-field displacement profiles."""
    L = config.box_length
    n1 = ShiftProfile(2.0 / math.sqrt(2.0 * config.energy_q * L), config.momentum(config.q_index))
    n2 = ShiftProfile(2.0 / math.sqrt(2.0 * config.omega_k * L), config.momentum(config.k_index))
    return n1, n2


# ---------------------------------------------------------------------------
# Hamiltonian assembly


def charged_density_polynomial(config: ModelConfig) -> LadderPolynomial:
    """:phi+ phi: at a point x (normal ordered, no commutator terms)."""
    phi_dag = ladderalg.field_polynomial("charged_dagger", config)
    phi = ladderalg.field_polynomial("charged", config)
    return ladderalg.normal_order(ladderalg.multiply(phi_dag, phi))


def cubic_interaction_polynomial(config: ModelConfig) -> LadderPolynomial:
    """Int :phi+ phi: phihat dx, box-integrated, coupling not included."""
    density = charged_density_polynomial(config)
    phihat = ladderalg.field_polynomial("neutral", config)
    return ladderalg.integrate_box(ladderalg.multiply(density, phihat), config.box_length)


def quartic_interaction_polynomial(config: ModelConfig) -> LadderPolynomial:
    """Int :phihat^4: dx, box-integrated, coupling not included."""
    phihat = ladderalg.field_polynomial("neutral", config)
    quartic = ladderalg.normal_order(ladderalg.power(phihat, 4))
    return ladderalg.integrate_box(quartic, config.box_length)


def build_H0(config: ModelConfig, layout: FockLayout | None = None) -> OperatorMatrix:
    layout = layout or build_layout(config)
    total = None
    for n in config.neutral_modes:
        term = config.omega(n) * number_operator(layout, LadderId("a", n))
        total = term if total is None else total + term
    for n in config.charged_modes:
        e = config.charged_energy(n)
        total = total + e * number_operator(layout, LadderId("b", n))
        total = total + e * number_operator(layout, LadderId("d", n))
    return total


def build_H(config: ModelConfig, layout: FockLayout | None = None) -> OperatorMatrix:
    layout = layout or build_layout(config)
    h = build_H0(config, layout)
    if config.lambda1 != 0.0:
        h = h + config.lambda1 * ladderalg.realize(cubic_interaction_polynomial(config), layout)
    if config.lambda2 != 0.0:
        h = h + config.lambda2 * ladderalg.realize(quartic_interaction_polynomial(config), layout)
    return h


def charge_operator(config: ModelConfig, layout: FockLayout | None = None) -> OperatorMatrix:
    """Conserved charge sum_p (b+_p b_p - d+_p d_p); commutes with H."""
    layout = layout or build_layout(config)
    total = None
    for n in config.charged_modes:
        term = number_operator(layout, LadderId("b", n)) - number_operator(layout, LadderId("d", n))
        total = term if total is None else total + term
    return total


def interaction_density_polynomial(config: ModelConfig) -> LadderPolynomial:
    """lambda1 :phi+ phi: phihat + lambda2 :phihat^4: at a point x."""
    density = charged_density_polynomial(config)
    phihat = ladderalg.field_polynomial("neutral", config)
    cubic = ladderalg.multiply(density, phihat)
    quartic = ladderalg.normal_order(ladderalg.power(phihat, 4))
    return config.lambda1 * cubic + config.lambda2 * quartic


def interaction_quadrature(config: ModelConfig, layout: FockLayout | None = None, n_x: int | None = None) -> OperatorMatrix:
    """Riemann-quadrature oracle for the interaction part of build_H."""
    layout = layout or build_layout(config)
    if n_x is None:
        indices = [abs(n) for n in config.neutral_modes + config.charged_modes]
        n_x = 4 * max(indices) + 5
    density = interaction_density_polynomial(config)
    return ladderalg.quadrature_realize(density, layout, config.box_length, n_x)


# ---------------------------------------------------------------------------
# plain-text config files

_REQUIRED_KEYS = (
    "box_length",
    "mass_neutral",
    "mass_charged",
    "lambda1",
    "lambda2",
    "neutral_modes",
    "charged_modes",
    "q_index",
    "k_index",
    "cutoff_default",
)
_OPTIONAL_KEYS = ("cutoff_overrides",)


def _parse_int_list(text: str, key: str) -> tuple[int, ...]:
    try:
        return tuple(int(tok) for tok in text.split(",") if tok.strip())
    except ValueError as exc:
        raise ConfigError(f"cannot parse {key}: {text!r}") from exc


def _parse_overrides(text: str) -> tuple[tuple[LadderId, int], ...]:
    pairs = []
    for tok in text.split(","):
        tok = tok.strip()
        if not tok:
            continue
        if "=" not in tok:
            raise ConfigError(f"cannot parse cutoff override {tok!r}")
        lad_text, _, value = tok.partition("=")
        try:
            lad = LadderId.parse(lad_text)
            pairs.append((lad, int(value)))
        except Exception as exc:
            raise ConfigError(f"cannot parse cutoff override {tok!r}") from exc
    return tuple(pairs)


def parse_config(text: str) -> ModelConfig:
    """Parse `key = value` lines; blank lines and # comments are skipped.

    Exactly the documented keys are accepted; unknown or repeated keys are
    errors, as is any missing key other than cutoff_overrides.
    """
    raw: dict[str, str] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if "=" not in stripped:
            raise ConfigError(f"line {lineno}: expected key = value")
        key, _, value = stripped.partition("=")
        key = key.strip()
        if key not in _REQUIRED_KEYS + _OPTIONAL_KEYS:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        if key in raw:
            raise ConfigError(f"line {lineno}: repeated key {key!r}")
        raw[key] = value.strip()
    missing = [k for k in _REQUIRED_KEYS if k not in raw]
    if missing:
        raise ConfigError(f"missing keys: {', '.join(missing)}")
    try:
        kwargs = dict(
            box_length=float(raw["box_length"]),
            mass_neutral=float(raw["mass_neutral"]),
            mass_charged=float(raw["mass_charged"]),
            lambda1=float(raw["lambda1"]),
            lambda2=float(raw["lambda2"]),
            q_index=int(raw["q_index"]),
            k_index=int(raw["k_index"]),
            cutoff_default=int(raw["cutoff_default"]),
        )
    except ValueError as exc:
        raise ConfigError(f"bad numeric value: {exc}") from exc
    kwargs["neutral_modes"] = _parse_int_list(raw["neutral_modes"], "neutral_modes")
    kwargs["charged_modes"] = _parse_int_list(raw["charged_modes"], "charged_modes")
    kwargs["cutoff_overrides"] = _parse_overrides(raw.get("cutoff_overrides", ""))
    return ModelConfig(**kwargs)


def load_config(path) -> ModelConfig:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    return parse_config(text)
