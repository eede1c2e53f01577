"""Forged streams from an off-path impersonator who lacks the key.

The attacker is assumed to predict the true (undistorted) readings perfectly,
which is the strongest position the threat model allows.  Its own randomness
comes from ``attacker_seed`` and never touches the defender's key material.
"""

from __future__ import annotations

from dataclasses import dataclass

from .distortion import DistortedTrace, _wrap, apply_signs, epsilon_ticks, set_lsb
from .keystream import generate_keystream
from .traces import SensorTrace

KINDS = ("none", "eda", "rda", "lsb-guess")


@dataclass(frozen=True)
class AttackKind:
    kind: str = "none"
    attacker_seed: int | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown attack kind {self.kind!r}; expected one of {KINDS}")
        if self.kind in ("rda", "lsb-guess") and self.attacker_seed is None:
            raise ValueError(f"{self.kind} attack needs an attacker_seed")


def attack_eda(original: SensorTrace) -> DistortedTrace:
    """Exact duplication: replay the true readings with no distortion."""
    return _wrap(original, original.ticks.copy(), 0.0, "eda")


def attack_rda(original: SensorTrace, epsilon: float, attacker_seed: int) -> DistortedTrace:
    """True readings shifted by +/-epsilon on the attacker's own fair coin."""
    eps = epsilon_ticks(epsilon, original.resolution)
    coin = generate_keystream(attacker_seed, len(original))
    return _wrap(original, apply_signs(original.ticks, coin.bits, eps), epsilon, "rda")


def attack_lsb_guess(original: SensorTrace, attacker_seed: int) -> DistortedTrace:
    """Overwrite each LSB with a coin flip, the best blind guess at a pad bit."""
    coin = generate_keystream(attacker_seed, len(original))
    return _wrap(original, set_lsb(original.ticks, coin.bits), 0.0, "lsb-guess")


def forge(original: SensorTrace, attack: AttackKind, epsilon: float = 0.0) -> DistortedTrace:
    if attack.kind == "eda":
        return attack_eda(original)
    if attack.kind == "rda":
        return attack_rda(original, epsilon, attack.attacker_seed)
    if attack.kind == "lsb-guess":
        return attack_lsb_guess(original, attack.attacker_seed)
    raise ValueError("attack kind 'none' forges nothing; route the honest stream instead")
