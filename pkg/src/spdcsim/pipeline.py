"""Glue between :mod:`spdcsim.config` and the simulation modules."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .analysis import OverlapResult, overlap_scan, term_overlap
from .config import FilterConfig, SourceConfig
from .dispersion import CrystalSpec, load_material, poling_period_for_degeneracy
from .entanglement import PolarizationState, build_state
from .filters import FilteredPair, FilterSpec, conjugate_wavelength_nm, eq1_terms
from .jsa import FrequencyGrid, JointAmplitude, PumpSpec, build_jsa

__all__ = ["Source", "build_source", "filter_spec", "source_filters"]


def filter_spec(fc: FilterConfig, center_nm: float) -> FilterSpec:
    if fc.fwhm_unit == "frequency":
        return FilterSpec(center_nm, fc.fwhm * 1e-9, fc.shape, "GHz", fc.peak_transmission, fc.order)
    return FilterSpec(center_nm, fc.fwhm * 1e9, fc.shape, "nm", fc.peak_transmission, fc.order)


def source_filters(cfg: SourceConfig, degenerate_nm: float) -> tuple[FilterSpec, FilterSpec | None]:
    """Alice's separating filter and Bob's optional filter.

    Bob's filter is centred on the energy conjugate of Alice's centre unless
    the config fixes its centre.
    """
    alice = filter_spec(cfg.filters.alice, cfg.filters.alice.center * 1e9)
    bob_cfg = cfg.filters.bob
    if bob_cfg is None:
        return alice, None
    center = (conjugate_wavelength_nm(alice.center_nm, degenerate_nm)
              if bob_cfg.center is None else bob_cfg.center * 1e9)
    return alice, filter_spec(bob_cfg, center)


@dataclass(frozen=True, eq=False)
class Source:
    """A configured source with its JSA evaluated."""

    config: SourceConfig
    crystal: CrystalSpec
    pump: PumpSpec
    grid: FrequencyGrid
    amplitude: JointAmplitude

    @property
    def degenerate_nm(self) -> float:
        return self.grid.center_wavelength_nm

    def filters(self) -> tuple[FilterSpec, FilterSpec | None]:
        return source_filters(self.config, self.degenerate_nm)

    def terms(self, alice: FilterSpec | None = None,
              bob: FilterSpec | None | str = "config") -> tuple[FilteredPair, FilteredPair]:
        a, b = self.filters()
        alice = a if alice is None else alice
        bob = b if bob == "config" else bob
        return eq1_terms(self.amplitude, alice, bob,
                         transmitted_port=self.config.filters.transmitted_port)

    def overlap(self) -> OverlapResult:
        t1, t2 = self.terms()
        return term_overlap(t1, t2, self.config.analysis.overlap_method)

    def scan(self) -> list[OverlapResult]:
        an = self.config.analysis
        alice, bob = self.filters()
        deltas = np.linspace(an.scan_start * 1e9, an.scan_stop * 1e9, an.scan_points)
        return overlap_scan(self.amplitude, alice, deltas, bob, an.overlap_method)

    def state(self, overlap_override: complex | None = None) -> PolarizationState:
        """Polarisation state; weights are equal unless ``analysis.weights`` is 'pass'."""
        result = self.overlap()
        weights = (1.0, 1.0)
        if self.config.analysis.weights == "pass":
            weights = result.term_probabilities
        value = result if overlap_override is None else complex(overlap_override)
        return build_state(value, weights)


def build_source(cfg: SourceConfig) -> Source:
    """Resolve materials and the poling period, then build the JSA."""
    cr = cfg.crystal
    material = load_material(cr.material)
    pump_um = cfg.pump.wavelength * 1e6
    axes = (cr.pump_axis, cr.signal_axis, cr.idler_axis)
    period = cr.poling_period
    if period is None:
        period = poling_period_for_degeneracy(material, cr.temperature, pump_um, 2 * pump_um,
                                              axes=axes, length=cr.length)
    crystal = CrystalSpec(material, cr.length, period, cr.temperature, *axes)
    pump = PumpSpec(pump_um, cfg.pump.duration, cfg.pump.repetition_rate, cfg.pump.cw)
    g = cfg.grid
    grid = FrequencyGrid.centered(g.center * 1e9, g.span * 1e9, g.n_signal, g.n_idler)
    return Source(cfg, crystal, pump, grid, build_jsa(pump, crystal, grid))
