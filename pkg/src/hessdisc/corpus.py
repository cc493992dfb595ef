"""Built-in test corpus: equality-family members and non-members on the unit disc."""

from __future__ import annotations

import numpy as np

from .fields import ScalarField, field_from_spec
from .profiles import GProfile, build_radial_solution, normalize_profile, random_profile

CORPUS_SEED = 20240611


def member_profiles(seed: int = CORPUS_SEED) -> dict[str, GProfile]:
    """Valid profiles whose radial solutions make up the member half of the corpus."""
    rng = np.random.default_rng(seed)
    return {
        "constant": normalize_profile(GProfile.constant()),
        "linear:1": normalize_profile(GProfile.linear(1.0)),
        "linear:0.5": normalize_profile(GProfile.linear(0.5)),
        "log:1": normalize_profile(GProfile.log(1.0)),
        "log:4": normalize_profile(GProfile.log(4.0)),
        "random-spline": random_profile(rng),
    }


def members(seed: int = CORPUS_SEED) -> dict[str, ScalarField]:
    profs = member_profiles(seed)
    out = {
        "paraboloid": field_from_spec({"kind": "paraboloid"}),
        "exp-radial": field_from_spec({"kind": "exp-radial"}),
    }
    for key in ("linear:0.5", "log:1", "log:4", "random-spline"):
        out[f"radial-g[{key}]"] = build_radial_solution(profs[key]).field()
    return out


def non_members() -> dict[str, ScalarField]:
    return {
        "quartic": field_from_spec({"kind": "quartic"}),
        "two-bump": field_from_spec({"kind": "two-bump"}),
        "quartic-cap": field_from_spec({"kind": "quartic-cap"}),
        "tilted": field_from_spec({"kind": "tilted", "k": 0.3}),
        "ring": field_from_spec({"kind": "ring"}),
        "power-cap:3": field_from_spec({"kind": "power-cap", "k": 3.0}),
    }


def corpus(seed: int = CORPUS_SEED) -> dict[str, tuple[ScalarField, bool]]:
    """Name -> (field, is_member) for all twelve corpus fields."""
    out = {k: (f, True) for k, f in members(seed).items()}
    out.update({k: (f, False) for k, f in non_members().items()})
    return out
