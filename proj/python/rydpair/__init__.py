"""Rydberg pair potentials, Stark and Zeeman maps and multipole matrix elements.

Configuration dictionaries use the same keys as the command-line tool
(``efield_mV_per_cm``, ``r_min_um``, ``theta_deg``, ...); missing keys take
their defaults.
"""

import json

from ._core import (
    ConfigError,
    DataFileError,
    NumericalError,
    State,
    __version__,
    leroy_radius_um,
    level_energy_ghz,
    multipole_element,
    quantum_defect,
    radial_element,
    wigner_3j,
    wigner_6j,
)
from . import _core


def pair_potential(**config):
    """Potential curves of a pair state.

    Returns a dict with ``r_m`` (distances), ``energy_ghz`` and ``overlap``
    (curves x distances, NaN where a curve is absent; energies relative to the
    target pair), ``leroy_radius_m``, ``basis_size`` and ``block_count``.
    """
    return _core._pair_potential(json.dumps(config))


def stark_map(**config):
    """Single-atom energies versus electric field (scan in mV/cm)."""
    return _core._field_map(json.dumps(config), True)


def zeeman_map(**config):
    """Single-atom energies versus magnetic field (scan in G)."""
    return _core._field_map(json.dumps(config), False)


__all__ = [
    "ConfigError",
    "DataFileError",
    "NumericalError",
    "State",
    "__version__",
    "leroy_radius_um",
    "level_energy_ghz",
    "multipole_element",
    "pair_potential",
    "quantum_defect",
    "radial_element",
    "stark_map",
    "wigner_3j",
    "wigner_6j",
    "zeeman_map",
]
