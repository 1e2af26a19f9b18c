# credex/presets.py
from dataclasses import dataclass
from typing import Dict, Optional

from credex.errors import InputError
from credex.models import FocalPolicy, SynthComponent, SynthConfig


@dataclass(frozen=True)
class Preset:
    name: str
    synth: SynthConfig
    n_clusters: int
    focal_policy: FocalPolicy     # recommended structure for `cluster`
    description: str

    def with_seed(self, seed: Optional[int]) -> SynthConfig:
        if seed is None:
            return self.synth
        return self.synth.model_copy(update={"seed": seed})


def _blobs(*centers, sigma: float = 1.0, count: int = 100):
    return [SynthComponent(center=list(c), sigma=sigma, count=count) for c in centers]


FIG1 = Preset(
    name="fig1",
    synth=SynthConfig(components=_blobs((3, 5), (5, 3)), outliers=[[2, 2], [6, 6]], seed=7),
    n_clusters=2,
    focal_policy="all_nonempty_subsets",
    description="two overlapping Gaussians plus two outliers (202 points)",
)
EASY = Preset(
    name="easy",
    synth=SynthConfig(components=_blobs((3, 5), (5, 3)), seed=11),
    n_clusters=2,
    focal_policy="all_nonempty_subsets",
    description="two overlapping Gaussians (200 points)",
)
FULL3 = Preset(
    name="full3",
    synth=SynthConfig(components=_blobs((4.5, 6.5), (3, 3), (6, 3)), seed=13),
    n_clusters=3,
    focal_policy="all_nonempty_subsets",
    description="three Gaussians (300 points); also used with singletons plus Omega",
)

PRESET_BY_NAME: Dict[str, Preset] = {
    FIG1.name: FIG1,
    EASY.name: EASY,
    FULL3.name: FULL3,
}


def get_preset(name: str) -> Preset:
    try:
        return PRESET_BY_NAME[name.strip().lower()]
    except KeyError:
        raise InputError(f"unknown preset {name!r}; choose one of {sorted(PRESET_BY_NAME)}") from None
