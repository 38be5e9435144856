"""Named device parameter sets."""

from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class Preset:
    name: str
    p_dark: float
    eta_det: float
    e_ali: float
    xi: float = 0.21
    f_ec: float = 1.22


PRESETS: dict[str, Preset] = {
    # Gobby-Yuan-Shields experiment
    "gys": Preset("gys", p_dark=8.5e-7, eta_det=0.045, e_ali=0.033),
    "upgraded": Preset("upgraded", p_dark=1.0e-7, eta_det=0.15, e_ali=0.0075),
    # same as "upgraded" with the detector efficiency doubled
    "upgraded-2x": Preset("upgraded-2x", p_dark=1.0e-7, eta_det=0.30, e_ali=0.0075),
}


def get_preset(name: str) -> Preset:
    try:
        return PRESETS[name.lower()]
    except KeyError:
        known = ", ".join(PRESETS)
        raise KeyError(f"unknown preset {name!r} (known: {known})") from None
