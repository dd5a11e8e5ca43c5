import math
import textwrap
from pathlib import Path

import numpy as np

from asa.objects.equilibrium import EquilibriumRecord
from asa.objects.grid import GridFunction

CI_CONFIG = """
[problem]
name = chafee-infante
a = 1
f = lambda*u*(1-u^2)
lambda = {lmbda}

[numerics]
theta_cut = pi/2
seed = 0
"""


def write_config(directory: Path, lmbda: float = 3.0, extra: str = "") -> Path:
    """Write a Chafee–Infante config file and return its path."""
    path = Path(directory) / "problem.ini"
    text = textwrap.dedent(CI_CONFIG).format(lmbda=lmbda) + textwrap.dedent(extra)
    path.write_text(text, encoding="utf-8")
    return path


def make_record(
    label: int,
    values,
    morse_index: int | None,
    label_s: int | None = None,
    hyperbolic: bool = True,
) -> EquilibriumRecord:
    """Equilibrium record with a given profile, for combinatorial tests."""
    profile = GridFunction(np.asarray(values, dtype=float))
    index = morse_index if morse_index is not None else 0
    return EquilibriumRecord(
        d=float(profile.values[0]),
        e=float(profile.values[-1]),
        profile=profile,
        zeta=math.pi * index - 1.5 if hyperbolic else math.pi * index,
        hyperbolic=hyperbolic,
        morse_index=morse_index if hyperbolic else None,
        label_u=label,
        label_s=label if label_s is None else label_s,
    )


def ci_like_records(grid_n: int = 64) -> list[EquilibriumRecord]:
    """
    Profiles shaped like the five Chafee–Infante equilibria at 2 < λ < 6:
    ``-1``, ``-φ``, ``0``, ``+φ``, ``+1`` with ``φ`` a first mode, d-ordered.
    """
    theta = np.linspace(0.0, math.pi, grid_n + 1)
    mode = 0.8 * np.cos(theta)
    profiles = [
        (np.full_like(theta, -1.0), 0, 1),
        (-mode, 1, 4),
        (np.zeros_like(theta), 2, 3),
        (mode, 1, 2),
        (np.full_like(theta, 1.0), 0, 5),
    ]
    return [
        make_record(label, values, index, label_s=label_s)
        for label, (values, index, label_s) in enumerate(profiles, start=1)
    ]
